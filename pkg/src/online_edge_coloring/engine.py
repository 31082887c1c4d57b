"""The online edge-coloring engine.

Each arriving online node spreads, for every neighbor v, a weight of
1/(delta - d(v) + q) over each color still unused at v.  If no color
collects total weight above 1 the resulting fractional point lies in the
bipartite matching polytope and an integral matching with those exact
marginals is sampled; every neighbor with remaining capacity is matched
(its weights sum to 1), and matched colors are distinct by construction.
If some color is overloaded the arrival instead enters failure mode:
every edge draws a uniformly random unused color of its endpoint,
independently, which keeps per-color marginals intact but can repeat a
color across the arrival's edges.

Two implementations share these semantics: process_arrival is the plain
Python reference, convenient for hand-built states and small statistical
tests, and color_online drives a compiled kernel over whole instances.
A first-fit greedy baseline and a coloring verifier round out the
module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rounding
from ._kernels import GATE_EPS, run_greedy_trial, run_matching_trial
from .instances import OnlineInstance, validate
from .rounding import FractionalMatching, Rng, sample_matching

__all__ = [
    "GATE_EPS", "PaletteState", "ArrivalOutcome", "RunRecord", "Verdict",
    "DegreeOverflowError", "process_arrival", "color_online", "greedy_color",
    "verify_coloring",
]


class DegreeOverflowError(RuntimeError):
    """An arrival pushed an offline node past the declared delta."""


@dataclass
class PaletteState:
    """Per-offline-node palette bookkeeping for one run.

    Invariant: len(used[v]) == degree[v] at all times; both modes assign
    each node only colors it has not used.  The palette has
    delta + q colors, so v always has delta - degree[v] + q unused ones.
    """

    delta: int
    q: int
    degree: list[int]
    used: list[set[int]]

    @classmethod
    def fresh(cls, num_offline: int, delta: int, q: int) -> "PaletteState":
        return cls(delta=delta, q=q, degree=[0] * num_offline,
                   used=[set() for _ in range(num_offline)])

    @property
    def palette_size(self) -> int:
        return self.delta + self.q

    def unused_colors(self, v: int) -> list[int]:
        """Colors available at v, ascending."""
        used = self.used[v]
        return [c for c in range(self.palette_size) if c not in used]


@dataclass
class ArrivalOutcome:
    """One arrival's colors plus the gate diagnostics behind them."""

    pairs: list[tuple[int, int]]            # (offline node, color)
    failure: bool
    offending: list[tuple[int, float]]      # (color, column sum) past 1
    drift_fallbacks: int = 0
    unassigned: int = 0


def process_arrival(state: PaletteState, neighbors: list[int], rng: Rng,
                    sampler=sample_matching) -> ArrivalOutcome:
    """Color the edges of one arriving node and update state.

    Reference implementation; the sampler argument exists so tests can
    substitute instrumented or adversarial matching samplers.
    """
    k = len(neighbors)
    if len(set(neighbors)) != k:
        raise ValueError("arrival has duplicate neighbors")
    for v in neighbors:
        if state.degree[v] >= state.delta:
            raise DegreeOverflowError(
                f"offline node {v} already has degree {state.delta}")
    if k == 0:
        return ArrivalOutcome(pairs=[], failure=False, offending=[])

    palette = state.palette_size
    unused = [state.unused_colors(v) for v in neighbors]
    entries = []
    for r, v in enumerate(neighbors):
        w = 1.0 / len(unused[r])
        for c in unused[r]:
            entries.append((c, r, w))
    x = FractionalMatching(left_size=palette, right_size=k, entries=entries)

    sums = rounding.column_sums(x)
    offending = [(c, float(s)) for c, s in enumerate(sums)
                 if s > 1.0 + GATE_EPS]

    colors: list[int] = [-1] * k
    drift = 0
    unassigned = 0
    if not offending:
        match = sampler(x, rng)
        got = match.color_of()
        for r in range(k):
            colors[r] = got.get(r, -1)
        # Row sums are exactly 1 here, so an unmatched neighbor can only
        # mean floating-point drift; fall back to a uniform unused color
        # not already taken by a sibling edge of this arrival.
        taken = {c for c in colors if c >= 0}
        for r in range(k):
            if colors[r] >= 0:
                continue
            drift += 1
            free = [c for c in unused[r] if c not in taken]
            if free:
                colors[r] = free[rng.rand_below(len(free))]
                taken.add(colors[r])
            else:
                unassigned += 1
    else:
        for r in range(k):
            colors[r] = unused[r][rng.rand_below(len(unused[r]))]

    pairs = []
    for r, v in enumerate(neighbors):
        c = colors[r]
        if c >= 0:
            state.degree[v] += 1
            state.used[v].add(c)
        pairs.append((v, c))
    return ArrivalOutcome(pairs=pairs, failure=bool(offending),
                          offending=offending, drift_fallbacks=drift,
                          unassigned=unassigned)


@dataclass
class RunRecord:
    """Outcome of coloring one instance end to end."""

    edge_colors: np.ndarray                  # flat, aligned with to_arrays()
    failure_mode_entries: list[tuple[int, int, float]]  # (t, color, load)
    failure_arrivals: int
    drift_fallbacks: int
    unassigned: int
    valid: bool
    proper: bool
    colors_used: int
    palette_size: int
    q: int
    seed: int | None = None
    rounding_steps: int = 0

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "failure_entries": len(self.failure_mode_entries),
            "failure_arrivals": self.failure_arrivals,
            "drift_fallbacks": self.drift_fallbacks,
            "unassigned": self.unassigned,
            "valid": self.valid,
            "proper": self.proper,
            "colors_used": self.colors_used,
        }


@dataclass
class Verdict:
    """verify_coloring's answer."""

    proper: bool
    complete: bool
    colors_used: int
    problems: list[str] = field(default_factory=list)


def _verify_arrays(aptr: np.ndarray, anbr: np.ndarray,
                   edge_colors: np.ndarray) -> Verdict:
    colors = np.asarray(edge_colors, dtype=np.int64)
    problems = []
    if colors.shape[0] != anbr.shape[0]:
        problems.append(f"expected {anbr.shape[0]} edge colors, "
                        f"got {colors.shape[0]}")
        return Verdict(proper=False, complete=False, colors_used=0,
                       problems=problems)
    assigned = colors >= 0
    n_missing = int((~assigned).sum())
    if n_missing:
        problems.append(f"{n_missing} edges left uncolored")
    offline_codes = (anbr[assigned] << np.int64(32)) | colors[assigned]
    proper = np.unique(offline_codes).size == offline_codes.size
    if not proper:
        problems.append("color repeated at an offline node")
    t_ids = np.repeat(np.arange(aptr.shape[0] - 1, dtype=np.int64),
                      np.diff(aptr))
    online_codes = (t_ids[assigned] << np.int64(32)) | colors[assigned]
    if np.unique(online_codes).size != online_codes.size:
        proper = False
        problems.append("color repeated within an arrival")
    colors_used = int(np.unique(colors[assigned]).size)
    return Verdict(proper=bool(proper), complete=n_missing == 0,
                   colors_used=colors_used, problems=problems)


def verify_coloring(instance: OnlineInstance,
                    edge_colors: np.ndarray) -> Verdict:
    """Check properness of a coloring against its instance.

    proper means no two edges sharing an endpoint (on either side) carry
    the same color; uncolored (-1) or missing entries make the coloring
    incomplete and are reported but do not count as color clashes.
    """
    aptr, anbr = instance.to_arrays()
    return _verify_arrays(aptr, anbr, edge_colors)


def _require_valid(instance: OnlineInstance) -> None:
    rep = validate(instance)
    if not rep.ok:
        raise ValueError("invalid instance: " + "; ".join(rep.violations))


def _paper_trial_arrays(num_offline: int, delta: int, q: int,
                        aptr: np.ndarray, anbr: np.ndarray, seed: int,
                        fail_cap: int | None = None) -> RunRecord:
    """Kernel-backed trial on precomputed CSR arrays (no validation)."""
    if fail_cap is None:
        fail_cap = 4 * (aptr.shape[0] - 1) + 64
    (edge_colors, fail_t, fail_c, fail_sum, n_fail, fail_arrivals,
     drift, unassigned, steps, err_t) = run_matching_trial(
        num_offline, delta, q, aptr, anbr,
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF), fail_cap)
    if err_t >= 0:
        raise DegreeOverflowError(
            f"arrival {err_t} exceeds declared delta {delta}")
    entries = [(int(fail_t[i]), int(fail_c[i]), float(fail_sum[i]))
               for i in range(n_fail)]
    verdict = _verify_arrays(aptr, anbr, edge_colors)
    return RunRecord(
        edge_colors=edge_colors,
        failure_mode_entries=entries,
        failure_arrivals=int(fail_arrivals),
        drift_fallbacks=int(drift),
        unassigned=int(unassigned),
        valid=verdict.proper and verdict.complete,
        proper=verdict.proper,
        colors_used=verdict.colors_used,
        palette_size=delta + q,
        q=q,
        seed=seed,
        rounding_steps=int(steps),
    )


def color_online(instance: OnlineInstance, q: int, seed: int,
                 fail_cap: int | None = None,
                 check_instance: bool = True) -> RunRecord:
    """Run the sampled-matching algorithm over a whole instance.

    Deterministic given (instance, q, seed).  Raises DegreeOverflowError
    if the stream violates its declared delta mid-run.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    if check_instance:
        _require_valid(instance)
    aptr, anbr = instance.to_arrays()
    return _paper_trial_arrays(instance.num_offline,
                               instance.declared_delta, q, aptr, anbr,
                               seed, fail_cap)


def _greedy_trial_arrays(num_offline: int, delta: int, aptr: np.ndarray,
                         anbr: np.ndarray) -> RunRecord:
    edge_colors, err_t = run_greedy_trial(num_offline, delta, aptr, anbr)
    if err_t >= 0:
        raise DegreeOverflowError(
            f"arrival {err_t} exceeds declared delta {delta}")
    verdict = _verify_arrays(aptr, anbr, edge_colors)
    return RunRecord(
        edge_colors=edge_colors,
        failure_mode_entries=[],
        failure_arrivals=0,
        drift_fallbacks=0,
        unassigned=0,
        valid=verdict.proper and verdict.complete,
        proper=verdict.proper,
        colors_used=verdict.colors_used,
        palette_size=2 * delta - 1,
        q=0,
        seed=None,
    )


def greedy_color(instance: OnlineInstance,
                 check_instance: bool = True) -> RunRecord:
    """First-fit baseline: lowest color unused at both endpoints.

    Uses at most 2*delta - 1 colors and is always proper.
    """
    if check_instance:
        _require_valid(instance)
    aptr, anbr = instance.to_arrays()
    return _greedy_trial_arrays(instance.num_offline,
                                instance.declared_delta, aptr, anbr)
