"""Instance families for experiments.

Two generators: an exactly regular random family (union of random
permutations, the extremal shape for the per-color load gate) and an
adversarial gadget family tuned to make the gate overflow with
noticeable probability when the color surplus q is small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import OnlineInstance, make_instance

__all__ = ["GadgetParams", "gen_gadget_instance", "gen_random_regular"]


@dataclass(frozen=True)
class GadgetParams:
    """Parameters of the adversarial family.

    r steers the gadget count (polynomially in k), k sets delta = k - 1.
    Derived quantities: gadget_count = max(k, floor(k**(r-2))), each
    gadget holds delta**2 + 1 nodes, and the instance has
    gadget_count * (delta**2 + 1) nodes in total.
    """

    r: int
    k: int

    @property
    def delta(self) -> int:
        return self.k - 1

    @property
    def gadget_count(self) -> int:
        return max(self.k, self.k ** (self.r - 2))

    @property
    def total_nodes(self) -> int:
        return self.gadget_count * (self.delta ** 2 + 1)


def gen_gadget_instance(params: GadgetParams) -> OnlineInstance:
    """Build the adversarial instance: saturating fillers, then probes.

    Each gadget has delta offline nodes.  Every offline node first
    receives delta - 1 degree-1 filler arrivals, which burn through its
    palette; once all fillers of all gadgets have arrived, each gadget
    gets one probe arrival connected to all of its delta offline nodes.
    Gadgets are vertex disjoint, so probe outcomes are independent
    across gadgets.  Arrival order is gadget-major within each stage.
    """
    if params.r < 3:
        raise ValueError("r must be >= 3")
    if params.k < 2:
        raise ValueError("k must be >= 2")
    delta = params.delta
    count = params.gadget_count
    arrivals: list[list[int]] = []
    for g in range(count):
        first = g * delta
        for j in range(delta):
            arrivals.extend([first + j] for _ in range(delta - 1))
    for g in range(count):
        first = g * delta
        arrivals.append(list(range(first, first + delta)))
    return make_instance(num_offline=count * delta, arrivals=arrivals,
                         declared_delta=delta)


def gen_random_regular(num_offline: int, num_online: int, delta: int,
                       rng) -> OnlineInstance:
    """Union of delta random permutations; every node gets degree delta.

    Permutations that would duplicate an edge are repaired by random
    transpositions; a permutation that cannot be repaired is redrawn.
    Raises RuntimeError after 10 * delta redraws (infeasible or
    near-infeasible parameters, e.g. delta close to num_offline).

    rng is a numpy Generator or a seed for one.
    """
    if num_offline != num_online:
        raise ValueError("the regular family needs num_offline == "
                         "num_online")
    if delta > num_offline:
        raise ValueError("delta cannot exceed num_offline")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    rng = np.random.default_rng(rng)
    n = num_offline
    if n == 0 or delta == 0:
        return make_instance(num_offline=n, arrivals=[[] for _ in range(n)],
                             declared_delta=0)
    # neighbor sets as one boolean matrix; n is at most a few thousand
    # in every use of this family, so n*n bytes is cheap
    is_edge = np.zeros((n, n), dtype=bool)
    rows = np.arange(n)
    perms = []
    budget = 10 * delta
    while len(perms) < delta:
        pi = rng.permutation(n)
        conflicts = list(np.nonzero(is_edge[rows, pi])[0])
        tries = 50 * (len(conflicts) + 1)
        ok = True
        while conflicts:
            t = int(conflicts.pop())
            if not is_edge[t, pi[t]]:
                continue
            fixed = False
            while tries > 0:
                tries -= 1
                t2 = int(rng.integers(n))
                if t2 == t:
                    continue
                if is_edge[t, pi[t2]] or is_edge[t2, pi[t]]:
                    continue
                pi[t], pi[t2] = pi[t2], pi[t]
                fixed = True
                break
            if not fixed:
                ok = False
                break
        if not ok:
            budget -= 1
            if budget <= 0:
                raise RuntimeError(
                    f"could not realize a simple {delta}-regular union of "
                    f"permutations on {n}+{n} nodes within the resampling "
                    f"budget")
            continue
        is_edge[rows, pi] = True
        perms.append(pi)
    nbrs = np.stack(perms, axis=1)
    nbrs.sort(axis=1)
    return make_instance(num_offline=n, arrivals=nbrs.tolist(),
                         declared_delta=delta)
