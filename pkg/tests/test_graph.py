import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from planarbcast.graph import (EmbeddingError, GenerationError, Placement, Topology,
                               compute_Y, compute_Z, correct_polygons_connected,
                               critical_counterexample, diameter, enumerate_polygons,
                               find_small_cut, generate, grid_patch, id_bits, is_automorphism,
                               is_k_connected, is_k_connected_exhaustive,
                               min_byzantine_distance, octahedron, trace_faces, triangle,
                               torus)


def to_nx(topo):
    g = nx.Graph()
    g.add_nodes_from(range(topo.n))
    g.add_edges_from(topo.edges)
    return g


def random_topology(rng, n, p):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Topology.from_edges(n, edges)


# basic fixtures --------------------------------------------------------------

def test_octahedron_parameters():
    o = octahedron()
    assert (o.n, len(o.edges)) == (6, 12)
    assert compute_Z(o) == 3 and compute_Y(o) == 4
    assert len(enumerate_polygons(o)) == 7  # 8 faces minus the outer one
    assert is_k_connected(o, 4)
    assert diameter(o) == 2


def test_grid_patch_is_not_four_connected():
    g = grid_patch(4, 4)
    assert compute_Z(g) == 4
    assert len(enumerate_polygons(g)) == 9
    cut = find_small_cut(g, 4)
    assert cut is not None and len(cut) < 4
    assert not g.is_connected(cut)


def test_triangle_single_polygon():
    t = triangle()
    polys = enumerate_polygons(t)
    assert len(polys) == 1 and polys[0].node_set == {0, 1, 2}
    assert compute_Z(t) == 3


def test_torus_declared_polygons():
    t = torus(5, 5)
    assert not t.planar
    assert len(t.edges) == 50 and compute_Z(t) == 4 and compute_Y(t) == 4
    assert diameter(t) == 4
    assert is_k_connected(t, 4)
    with pytest.raises(GenerationError):
        torus(4, 4)


def test_id_bits_rounds_to_bytes():
    assert id_bits(2) == 8
    assert id_bits(256) == 8
    assert id_bits(257) == 16


def test_serialization_roundtrip():
    for topo in (octahedron(), torus(5, 5), generate("quadrangulation", {"n": 5})):
        back = Topology.loads(topo.dumps())
        assert back == topo
        assert back.dumps() == topo.dumps()


def test_invalid_rotation_rejected():
    with pytest.raises(EmbeddingError):
        Topology(((1,), ()))  # asymmetric
    with pytest.raises(EmbeddingError):
        Topology(((0,),))  # self-loop


def test_placement_rejects_byzantine_source():
    with pytest.raises(ValueError):
        Placement(frozenset({1}), 1)


# generators ------------------------------------------------------------------

@pytest.mark.parametrize("kind,params,z", [
    ("quadrangulation", {"n": 6}, 4),
    ("quadrangulation", {"n": 8, "diagonals": 0.3}, 4),
    ("quad_annulus", {"w": 12, "h": 3}, 4),
    ("triangulation", {"w": 6, "h": 6}, 3),
    ("octahedron", {}, 3),
])
def test_generated_topologies_match_networkx(kind, params, z):
    topo = generate(kind, params, seed=3)
    g = to_nx(topo)
    assert topo.planar and nx.check_planarity(g)[0]
    assert compute_Z(topo) == z
    assert compute_Y(topo) == max(d for _, d in g.degree)
    assert diameter(topo) == nx.diameter(g)
    assert nx.node_connectivity(g) >= 4 and is_k_connected(topo, 4)


def test_generate_is_deterministic():
    a = generate("quadrangulation", {"n": 7, "diagonals": 0.4}, seed=11)
    b = generate("quadrangulation", {"n": 7, "diagonals": 0.4}, seed=11)
    assert a.dumps() == b.dumps()


def test_unknown_kind():
    with pytest.raises(GenerationError):
        generate("hypercube")


# faces -------------------------------------------------------------------------

@pytest.mark.parametrize("topo", [octahedron(), grid_patch(3, 5), triangle(),
                                  generate("quadrangulation", {"n": 5}),
                                  generate("triangulation", {"n": 5}),
                                  critical_counterexample().topology],
                         ids=lambda t: t.label)
def test_faces_cover_each_arc_once_and_euler(topo):
    faces = trace_faces(topo)
    arcs = [a for f in faces for a in f]
    assert len(arcs) == len(set(arcs)) == 2 * len(topo.edges)
    assert topo.n - len(topo.edges) + len(faces) == 2


def test_outer_face_excluded():
    topo = generate("quadrangulation", {"n": 5})
    assert len(enumerate_polygons(topo)) == len(trace_faces(topo)) - 1


# connectivity ------------------------------------------------------------------

def test_k_connectivity_against_networkx_and_exhaustive():
    rng = random.Random(7)
    for _ in range(60):
        n = rng.randint(2, 9)
        topo = random_topology(rng, n, rng.uniform(0.2, 0.9))
        kappa = nx.node_connectivity(to_nx(topo)) if n > 1 else 0
        for k in range(1, min(n, 5)):
            assert is_k_connected(topo, k) == (kappa >= k)
            assert is_k_connected_exhaustive(topo, k) == (kappa >= k)


def test_complete_graph_connectivity():
    from planarbcast.graph import complete
    assert is_k_connected(complete(6), 5)
    with pytest.raises(ValueError):
        find_small_cut(complete(4), 4)


def test_cut_witness_disconnects():
    from planarbcast.graph import path_graph
    p = path_graph(5)
    cut = find_small_cut(p, 2)
    assert len(cut) == 1 and not p.is_connected(cut)


# critical network --------------------------------------------------------------

def test_critical_network_properties():
    net = critical_counterexample()
    topo = net.topology
    assert topo.n == 25 and compute_Z(topo) == 4 and compute_Y(topo) == 8
    assert min_byzantine_distance(topo, net.placement) == 4
    assert nx.check_planarity(to_nx(topo))[0]
    assert nx.node_connectivity(to_nx(topo)) == 4
    assert len(net.cut) == 4 and net.placement.byzantine < set(net.cut)
    assert not topo.is_connected(net.cut)
    assert is_automorphism(topo, net.automorphism)
    phi = net.automorphism
    assert {phi[v] for v in net.inner} == set(net.inner)
    assert {phi[v] for v in net.outer_region} == set(net.outer_region)
    assert {phi[v] for v in net.placement.byzantine} == set(net.correct_cut)


# invariants --------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(4, 7), st.sampled_from([0.0, 0.5, 1.0]), st.integers(0, 1000))
def test_generated_quadrangulations_respect_invariants(k, diag, seed):
    topo = generate("quadrangulation", {"n": k, "diagonals": diag}, seed)
    assert all(topo.degree(v) >= 4 for v in range(topo.n))
    z = compute_Z(topo)
    assert z == {0.0: 4, 1.0: 3}.get(diag, z) and z in (3, 4)
    for poly in enumerate_polygons(topo):
        assert len(poly.vertices) == len(poly.node_set)  # simple cycles


def test_no_byzantines_polygons_connected():
    topo = generate("triangulation", {"n": 5})
    assert correct_polygons_connected(topo, Placement(frozenset(), 0))
