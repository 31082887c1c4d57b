"""Instance generators: the regular family and the adversarial gadgets."""

import numpy as np
import pytest

from online_edge_coloring.generators import (
    GadgetParams,
    gen_gadget_instance,
    gen_random_regular,
)
from online_edge_coloring.instances import validate


def test_gadget_derived_quantities():
    p = GadgetParams(r=3, k=5)
    assert p.delta == 4
    assert p.gadget_count == 5
    assert p.total_nodes == 85
    p = GadgetParams(r=3, k=3)
    assert (p.delta, p.gadget_count, p.total_nodes) == (2, 3, 15)
    p = GadgetParams(r=4, k=3)
    assert (p.delta, p.gadget_count, p.total_nodes) == (2, 9, 45)


def test_gadget_instance_shape():
    inst = gen_gadget_instance(GadgetParams(r=3, k=5))
    assert validate(inst).ok
    assert inst.declared_delta == 4
    assert inst.num_offline == 20            # 5 gadgets x delta nodes
    assert inst.num_arrivals == 65           # 60 fillers + 5 probes
    assert inst.num_edges == 80
    assert inst.declared_n == 85


def test_gadget_probes_arrive_last_and_span_their_gadget():
    p = GadgetParams(r=3, k=5)
    inst = gen_gadget_instance(p)
    probes = inst.arrivals[-p.gadget_count:]
    for g, probe in enumerate(probes):
        assert probe == tuple(range(g * p.delta, (g + 1) * p.delta))
    for filler in inst.arrivals[:-p.gadget_count]:
        assert len(filler) == 1


def test_gadget_probe_sees_nodes_at_degree_delta_minus_one():
    p = GadgetParams(r=3, k=4)
    inst = gen_gadget_instance(p)
    first_probe_t = inst.num_arrivals - p.gadget_count
    seen = np.zeros(inst.num_offline, dtype=int)
    for nbrs in inst.arrivals[:first_probe_t]:
        for v in nbrs:
            seen[v] += 1
    assert (seen == p.delta - 1).all()


def test_gadget_smallest_k_has_no_fillers():
    inst = gen_gadget_instance(GadgetParams(r=3, k=2))
    assert inst.declared_delta == 1
    assert all(len(a) == 1 for a in inst.arrivals)
    assert validate(inst).ok


def test_gadget_parameter_validation():
    with pytest.raises(ValueError, match="r must be"):
        gen_gadget_instance(GadgetParams(r=2, k=5))
    with pytest.raises(ValueError, match="k must be"):
        gen_gadget_instance(GadgetParams(r=3, k=1))


def test_regular_instance_is_exactly_regular():
    inst = gen_random_regular(256, 256, 16, 41)
    assert validate(inst).ok
    assert inst.declared_delta == 16
    assert all(len(a) == 16 for a in inst.arrivals)
    deg = np.zeros(256, dtype=int)
    edges = set()
    for t, nbrs in enumerate(inst.arrivals):
        for v in nbrs:
            deg[v] += 1
            edges.add((t, v))
    assert (deg == 16).all()
    assert len(edges) == 256 * 16            # simple: no parallel edges


def test_regular_delta_one_is_a_permutation():
    inst = gen_random_regular(32, 32, 1, 7)
    nbrs = [a[0] for a in inst.arrivals]
    assert sorted(nbrs) == list(range(32))


def test_regular_delta_equal_to_side_is_complete():
    inst = gen_random_regular(4, 4, 4, 0)
    assert validate(inst).ok
    assert all(a == (0, 1, 2, 3) for a in inst.arrivals)


def test_regular_zero_delta_and_empty():
    inst = gen_random_regular(3, 3, 0, 0)
    assert inst.arrivals == ((), (), ())
    inst = gen_random_regular(0, 0, 0, 0)
    assert inst.num_offline == 0 and inst.num_arrivals == 0


def test_regular_parameter_validation():
    with pytest.raises(ValueError, match="num_offline =="):
        gen_random_regular(4, 5, 1, 0)
    with pytest.raises(ValueError, match="delta cannot exceed"):
        gen_random_regular(4, 4, 5, 0)
    with pytest.raises(ValueError, match="delta must be"):
        gen_random_regular(4, 4, -1, 0)


def test_regular_is_reproducible():
    a = gen_random_regular(64, 64, 8, 13)
    b = gen_random_regular(64, 64, 8, 13)
    assert a == b
    c = gen_random_regular(64, 64, 8, 14)
    assert a != c
    # a Generator is accepted in place of a seed
    d = gen_random_regular(64, 64, 8, np.random.default_rng(13))
    assert a == d
