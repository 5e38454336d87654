import itertools
import random

import pytest

from planarbcast.adversary import (AdversaryStrategy, ConfigError, PlacementInfeasible,
                                   make_strategy, place_byzantines, strategy_forge_flood,
                                   strategy_garbage, strategy_mirror, strategy_silent)
from planarbcast.graph import Placement, compute_Z, critical_counterexample, generate
from planarbcast.protocol import NodeState
from planarbcast.sim import Simulation, TimingModel


@pytest.fixture(scope="module")
def quad():
    return generate("quadrangulation", {"n": 8})


def bound(strategy, topo, placement, m0=b"m0"):
    strategy.bind(topo, placement, compute_Z(topo), m0, 128)
    return strategy


def test_placement_respects_distance(quad):
    rng = random.Random(1)
    for count in (2, 3, 4):
        pl, d = place_byzantines(quad, count, 5, rng)
        assert len(pl.byzantine) == count and pl.source not in pl.byzantine
        dist = quad.distances
        assert d == min(dist[a][b] for a, b in itertools.combinations(pl.byzantine, 2))
        assert d >= 5


def test_placement_is_seeded(quad):
    a = place_byzantines(quad, 3, 5, random.Random(9))
    b = place_byzantines(quad, 3, 5, random.Random(9))
    assert a == b


def test_placement_infeasible(quad):
    with pytest.raises(PlacementInfeasible):
        place_byzantines(quad, 2, 100, random.Random(0))
    with pytest.raises(PlacementInfeasible):
        place_byzantines(quad, quad.n, 0, random.Random(0))


def test_placement_with_fixed_source(quad):
    pl, _ = place_byzantines(quad, 2, 3, random.Random(0), source=7)
    assert pl.source == 7 and 7 not in pl.byzantine


def test_silent_never_sends(quad):
    s = bound(strategy_silent(), quad, Placement(frozenset({5}), 0))
    for i in range(5):
        assert s.act(5, [], i + 1, random.Random(i), float(i)) == []
    assert s.idle()


def test_forge_flood_cycles_through_infos(quad):
    s = bound(strategy_forge_flood(3), quad, Placement(frozenset({5}), 0))
    rng = random.Random(0)
    seen = []
    for i in range(6):
        sends = s.act(5, [], i + 1, rng, float(i))
        assert {q for q, _ in sends} == set(quad.neighbors(5))
        seen.append({m.info for _, m in sends})
    assert all(len(batch) == 1 for batch in seen)
    assert len(set().union(*seen)) == 3
    assert seen[0] == seen[3]
    assert not s.idle()


def test_forge_flood_never_forges_m0(quad):
    s = bound(strategy_forge_flood(50), quad, Placement(frozenset({5}), 0),
              m0=b"forge-7".ljust(16, b"\x00"))
    infos = {m.info for i in range(50) for _, m in s.act(5, [], i + 1, random.Random(i), 0.0)}
    assert len(infos) == 50 and s.m0 not in infos


def test_garbage_is_dropped_by_correct_receivers(quad):
    byz = 5
    s = bound(strategy_garbage(), quad, Placement(frozenset({byz}), 0))
    z = compute_Z(quad)
    rng = random.Random(3)
    for i in range(20):
        for q, msg in s.act(byz, [], i + 1, rng, float(i)):
            state = NodeState.create(q, quad.neighbors(q), 0, z)
            out = state.receive(byz, msg)
            assert out == [] and state.rec == {} and state.delivered is None


def test_mirror_requires_the_critical_network(quad):
    with pytest.raises(ConfigError):
        bound(strategy_mirror(), quad, Placement(frozenset({5}), 0))


def test_mirror_binds_on_critical_network():
    net = critical_counterexample()
    s = bound(strategy_mirror(net, b"alt"), net.topology, net.placement)
    assert s.virtual_source == net.automorphism[net.placement.source]


def test_make_strategy():
    assert make_strategy({"name": "forge_flood", "forge_count": 4}).spec() == \
        {"name": "forge_flood", "forge_count": 4, "burst": 1}
    assert make_strategy({"name": "mirror", "m_alt": "6131"}).m_alt == b"a1"
    with pytest.raises(ConfigError):
        make_strategy({"name": "nope"})
    with pytest.raises(ConfigError):
        make_strategy({"name": "forge_flood", "colour": 1})
    with pytest.raises(ConfigError):
        make_strategy({"name": "forge_flood", "forge_count": 0})


class Rogue(AdversaryStrategy):
    name = "rogue"

    def act(self, node, inbox, count, rng, now):
        far = next(v for v in range(self.topology.n)
                   if v != node and v not in self.topology.neighbors(node))
        return [(far, None)]


def test_sends_to_non_neighbors_are_rejected(quad):
    sim = Simulation(quad, Placement(frozenset({5}), 0), Rogue(), TimingModel.bounded(1.0))
    with pytest.raises(ConfigError):
        sim.run()
