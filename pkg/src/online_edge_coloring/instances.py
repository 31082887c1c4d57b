"""Online bipartite instances with one-sided vertex arrivals.

An instance is a set of offline nodes known upfront plus an ordered
stream of online arrivals, each carrying its full neighbor list.  The
file format is line oriented ASCII: a header line

    <num_offline> <num_arrivals> <delta>

followed by exactly num_arrivals lines, one per arrival, holding the
space-separated offline neighbor indices (an empty line is an isolated
online node).  Lines starting with '#' are comments and are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import chain

import numpy as np


@dataclass(frozen=True)
class OnlineInstance:
    """An offline node set plus an ordered arrival stream.

    num_offline: count of offline nodes, indexed 0..num_offline-1.
    arrivals: one tuple of offline indices per online node, in arrival
        order; each should be sorted and duplicate-free (validate checks).
    declared_delta: the maximum degree the stream promises; algorithms
        take this at face value, so validate it against the data first.
    declared_n: total node count, num_offline + len(arrivals).
    """

    num_offline: int
    arrivals: tuple[tuple[int, ...], ...]
    declared_delta: int
    declared_n: int

    @property
    def num_arrivals(self) -> int:
        return len(self.arrivals)

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.arrivals)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Flatten the arrival lists to CSR form (aptr, anbr), int64."""
        lens = np.fromiter((len(a) for a in self.arrivals), dtype=np.int64,
                           count=len(self.arrivals))
        aptr = np.zeros(len(self.arrivals) + 1, dtype=np.int64)
        np.cumsum(lens, out=aptr[1:])
        anbr = np.fromiter(chain.from_iterable(self.arrivals),
                           dtype=np.int64, count=int(aptr[-1]))
        return aptr, anbr


def make_instance(num_offline: int,
                  arrivals: "list[list[int]] | tuple[tuple[int, ...], ...]",
                  declared_delta: int) -> OnlineInstance:
    """Build an instance, deriving declared_n from the data."""
    arr = tuple(tuple(int(v) for v in a) for a in arrivals)
    return OnlineInstance(num_offline=int(num_offline), arrivals=arr,
                          declared_delta=int(declared_delta),
                          declared_n=int(num_offline) + len(arr))


@dataclass
class ValidationReport:
    """Outcome of validate(): an empty violation list means pass."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(instance: OnlineInstance) -> ValidationReport:
    """Check the structural invariants; violations are data, not errors.

    Checks index ranges, per-arrival duplicates and ordering, the
    declared maximum degree against the true one (over both sides), and
    the declared node count.
    """
    rep = ValidationReport()
    no = instance.num_offline
    if no < 0:
        rep.violations.append("negative num_offline")
        return rep
    offline_deg = np.zeros(no, dtype=np.int64)
    max_online = 0
    for t, nbrs in enumerate(instance.arrivals):
        prev = -1
        unsorted = False
        for v in nbrs:
            if not 0 <= v < no:
                rep.violations.append(
                    f"arrival {t}: neighbor index {v} out of range "
                    f"[0, {no})")
                continue
            if v == prev:
                rep.violations.append(f"arrival {t}: duplicate neighbor {v}")
            elif v < prev:
                unsorted = True
            offline_deg[v] += 1
            prev = v
        if unsorted:
            rep.violations.append(f"arrival {t}: neighbors not sorted")
            # adjacent-equal only finds duplicates in sorted lists
            seen = set()
            for v in nbrs:
                if v in seen:
                    rep.violations.append(
                        f"arrival {t}: duplicate neighbor {v}")
                seen.add(v)
        if len(nbrs) > max_online:
            max_online = len(nbrs)
    true_delta = int(max(max_online,
                         offline_deg.max() if no > 0 else 0))
    if true_delta != instance.declared_delta:
        rep.violations.append(
            f"degree mismatch: declared delta {instance.declared_delta}, "
            f"true maximum degree {true_delta}")
    want_n = no + len(instance.arrivals)
    if instance.declared_n != want_n:
        rep.violations.append(
            f"node count mismatch: declared n {instance.declared_n}, "
            f"actual {want_n}")
    return rep


class ParseError(ValueError):
    """Malformed instance file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def _int_fields(text: str, line_no: int) -> list[int]:
    out = []
    for tok in text.split():
        try:
            out.append(int(tok))
        except ValueError:
            raise ParseError(line_no, f"expected an integer, got {tok!r}")
    return out


def read_instance(stream) -> OnlineInstance:
    """Parse an instance from an iterable of text lines.

    Raises ParseError with a line number on malformed input.  The parsed
    instance is returned as-is; run validate() to check the invariants.
    """
    header = None
    arrivals: list[tuple[int, ...]] = []
    want = -1
    line_no = 0
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if line.lstrip().startswith("#"):
            continue
        if header is None:
            fields = _int_fields(line, line_no)
            if len(fields) != 3:
                raise ParseError(
                    line_no, "header needs exactly 3 fields: "
                    "num_offline num_arrivals delta")
            num_offline, want, delta = fields
            if num_offline < 0 or want < 0 or delta < 0:
                raise ParseError(line_no, "header fields must be >= 0")
            header = (num_offline, delta)
            continue
        if len(arrivals) >= want:
            raise ParseError(
                line_no, f"extra arrival line (header declared {want})")
        arrivals.append(tuple(_int_fields(line, line_no)))
    if header is None:
        raise ParseError(line_no + 1, "missing header line")
    if len(arrivals) != want:
        raise ParseError(
            line_no + 1,
            f"expected {want} arrival lines, found {len(arrivals)}")
    num_offline, delta = header
    return OnlineInstance(num_offline=num_offline, arrivals=tuple(arrivals),
                          declared_delta=delta,
                          declared_n=num_offline + len(arrivals))


def write_instance(instance: OnlineInstance, stream) -> None:
    """Write the canonical text form: header, then one line per arrival."""
    stream.write(f"{instance.num_offline} {instance.num_arrivals} "
                 f"{instance.declared_delta}\n")
    for nbrs in instance.arrivals:
        stream.write(" ".join(str(v) for v in nbrs))
        stream.write("\n")


def load_instance(path) -> OnlineInstance:
    with open(path, "r", encoding="ascii") as fh:
        return read_instance(fh)


def save_instance(instance: OnlineInstance, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        write_instance(instance, fh)
