"""Dependent rounding of fractional bipartite matchings.

Given a point of the bipartite matching polytope (every node's incident
weight at most 1), sample an integral matching whose per-edge inclusion
probabilities equal the fractional weights exactly.  The scheme is
pipage style: repeatedly walk a maximal path or cycle through the
strictly-fractional support, split its edges into the two alternating
classes, and shift weight by (+alpha, -beta) with the probability that
keeps every edge's marginal fixed.  Each step settles at least one edge
at 0 or 1, so the walk terminates after at most one step per entry.

Matchings over a common color are negatively correlated under this
scheme, which downstream consumers rely on for concentration.

All randomness flows through Rng, a small xoshiro256** wrapper; one
parent Rng can seed any number of operations reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import (GATE_EPS, SNAP_EPS, next_u64, rand_below, rand_unit,
                       round_batch, seed_state)

__all__ = [
    "SNAP_EPS", "GATE_EPS", "Rng", "FractionalMatching", "Matching",
    "column_sums", "row_sums", "sample_matching", "sample_matchings",
    "drift_unmatched",
]


class Rng:
    """Seedable xoshiro256** stream, shared with the compiled kernels.

    Drawing a 64-bit word from a parent stream and seeding a child with
    it gives streams that are independent for our purposes, so batch
    drivers hand one derived seed to each trial.
    """

    def __init__(self, seed: int):
        self.state = seed_state(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def rand_unit(self) -> float:
        """Uniform double in [0, 1)."""
        return float(rand_unit(self.state))

    def rand_below(self, n: int) -> int:
        """Uniform integer in [0, n), rejection sampled (unbiased)."""
        return int(rand_below(self.state, np.int64(n)))

    def spawn_seed(self) -> int:
        """Derive a seed for an independent child stream."""
        return self.next_u64()


@dataclass
class FractionalMatching:
    """Sparse weights on (color, right-node) pairs.

    left_size counts colors, right_size counts right nodes; entries are
    (color, right, weight) triples with weights in [0, 1].  As sampler
    input every row sum (over a right node's colors) and every column
    sum (over a color's right nodes) must stay at most 1 + SNAP_EPS.
    """

    left_size: int
    right_size: int
    entries: list[tuple[int, int, float]]


@dataclass
class Matching:
    """An integral assignment: no color repeats, no right node repeats."""

    pairs: list[tuple[int, int]]

    def color_of(self) -> dict[int, int]:
        """Map right node -> matched color."""
        return {r: c for c, r in self.pairs}


def column_sums(x: FractionalMatching) -> np.ndarray:
    """Total weight per color (the gate quantity for the engine)."""
    out = np.zeros(x.left_size, dtype=np.float64)
    for c, _r, w in x.entries:
        out[c] += w
    return out


def row_sums(x: FractionalMatching) -> np.ndarray:
    """Total weight per right node."""
    out = np.zeros(x.right_size, dtype=np.float64)
    for _c, r, w in x.entries:
        out[r] += w
    return out


def _check_polytope(x: FractionalMatching) -> None:
    """Reject input outside the matching polytope beyond SNAP_EPS."""
    seen = set()
    for c, r, w in x.entries:
        if not 0 <= c < x.left_size:
            raise ValueError(f"color index {c} out of range")
        if not 0 <= r < x.right_size:
            raise ValueError(f"right index {r} out of range")
        if (c, r) in seen:
            raise ValueError(f"duplicate entry for (color {c}, right {r})")
        seen.add((c, r))
        if w < -SNAP_EPS or w > 1.0 + SNAP_EPS:
            raise ValueError(f"weight {w} for (color {c}, right {r}) "
                             f"outside [0, 1]")
    for r, s in enumerate(row_sums(x)):
        if s > 1.0 + SNAP_EPS:
            raise ValueError(f"right node {r} has weight sum {s} > 1")
    for c, s in enumerate(column_sums(x)):
        if s > 1.0 + SNAP_EPS:
            raise ValueError(f"color {c} has weight sum {s} > 1")


def _to_csr(x: FractionalMatching):
    """Sort entries by (right, color) and emit the kernel's CSR arrays."""
    m = len(x.entries)
    order = sorted(range(m), key=lambda i: (x.entries[i][1], x.entries[i][0]))
    e_row = np.empty(m, dtype=np.int64)
    e_col = np.empty(m, dtype=np.int64)
    w0 = np.empty(m, dtype=np.float64)
    for k, i in enumerate(order):
        c, r, w = x.entries[i]
        e_row[k] = r
        e_col[k] = c
        w0[k] = w
    rptr = np.zeros(x.right_size + 1, dtype=np.int64)
    for r in e_row:
        rptr[r + 1] += 1
    np.cumsum(rptr, out=rptr)
    return rptr, e_row, e_col, w0


def sample_matchings(x: FractionalMatching, nsamples: int,
                     rng: Rng) -> np.ndarray:
    """Draw nsamples independent matchings from one fractional point.

    Returns an (nsamples, right_size) array of matched colors, -1 where
    a right node is unmatched.  Marginals are exact: column r equals
    color c with probability w_{cr} over the randomness of rng.
    """
    _check_polytope(x)
    rptr, e_row, e_col, w0 = _to_csr(x)
    out, _steps = round_batch(x.right_size, x.left_size, rptr, e_row, e_col,
                              w0, nsamples, np.uint64(rng.spawn_seed()))
    return out


def sample_matching(x: FractionalMatching, rng: Rng) -> Matching:
    """Draw one matching with exact per-entry marginals."""
    match = sample_matchings(x, 1, rng)[0]
    pairs = [(int(c), r) for r, c in enumerate(match) if c >= 0]
    return Matching(pairs=pairs)


def drift_unmatched(x: FractionalMatching, match: np.ndarray) -> list[int]:
    """Right nodes with weight sum 1 that nevertheless ended unmatched.

    Floating-point drift can in principle strand such a node; callers
    check this so the event stays observable instead of being patched
    over silently.
    """
    sums = row_sums(x)
    return [r for r in range(x.right_size)
            if match[r] < 0 and sums[r] >= 1.0 - SNAP_EPS]
