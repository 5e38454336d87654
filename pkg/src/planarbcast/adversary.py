"""Byzantine behaviors and constrained Byzantine placements."""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from .graph import INF, CriticalNetwork, Placement, Topology, critical_counterexample
from .protocol import EMPTY, Message, NodeState, relay, source_info


class PlacementInfeasible(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


def place_byzantines(topology: Topology, count: int, min_distance: float,
                     rng: random.Random, source: int | None = None,
                     budget: int = 2000) -> tuple[Placement, float]:
    """Draw ``count`` Byzantine nodes pairwise >= ``min_distance`` apart.

    Nodes are picked one at a time, uniformly among those still far enough
    from the ones already chosen; a dead end restarts the draw.  Returns the
    placement and its achieved minimal distance D.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    n = topology.n
    if source is None:
        source = rng.randrange(n)
    others = [v for v in range(n) if v != source]
    if count > len(others):
        raise PlacementInfeasible(f"{count} Byzantine nodes do not fit in {n} nodes")
    dist = topology.distances
    if count >= 2 and min_distance > max(max(r) for r in dist):
        raise PlacementInfeasible(f"min_distance {min_distance} exceeds the diameter")
    for _ in range(budget):
        byz: list[int] = []
        pool = others
        while len(byz) < count and pool:
            pick = rng.choice(pool)
            byz.append(pick)
            pool = [v for v in pool if v != pick and dist[pick][v] >= min_distance]
        if len(byz) == count:
            achieved = min((dist[a][b] for a, b in itertools.combinations(byz, 2)),
                           default=INF)
            return Placement(frozenset(byz), source), achieved
    raise PlacementInfeasible(
        f"no placement of {count} nodes at distance >= {min_distance} in {budget} draws")


class AdversaryStrategy:
    """Message generator for the Byzantine coalition.

    The simulator calls :meth:`bind` once, then :meth:`act` at every
    activation of a Byzantine node with the messages it just consumed.
    Sends are restricted to the node's own neighbors by the simulator.
    """

    name = "abstract"

    def spec(self) -> dict:
        return {"name": self.name}

    def bind(self, topology: Topology, placement: Placement, z: int, m0: bytes,
             m_bits: int, order_key: Sequence[int] | None = None) -> None:
        self.topology = topology
        self.placement = placement
        self.z = z
        self.m0 = m0
        self.m_bits = m_bits

    def act(self, node: int, inbox: list[tuple[int, Message]], count: int,
            rng: random.Random, now: float) -> list[tuple[int, Message]]:
        raise NotImplementedError

    def idle(self) -> bool:
        """True when the coalition will send nothing more without new input."""
        return True


class Silent(AdversaryStrategy):
    name = "silent"

    def act(self, node, inbox, count, rng, now):
        return []


def _forged_info(i: int, m_bits: int, m0: bytes) -> bytes:
    size = max(1, m_bits // 8)
    info = f"forge-{i}".encode().ljust(size, b"\x00")[:size]
    if info == m0:
        info = bytes([info[0] ^ 0xFF]) + info[1:]
    return info


class ForgeFlood(AdversaryStrategy):
    """Cycle through ``forge_count`` false informations.

    Each activation pushes ``burst`` of them to every neighbor as a claimed
    source message, an empty relay, and a relay with a visited set at the
    acceptance limit.
    """

    name = "forge_flood"

    def __init__(self, forge_count: int = 16, burst: int = 1):
        if forge_count < 1 or burst < 1:
            raise ConfigError("forge_count and burst must be positive")
        self.forge_count = forge_count
        self.burst = burst
        self.cursor: dict[int, int] = {}

    def spec(self):
        return {"name": self.name, "forge_count": self.forge_count, "burst": self.burst}

    def bind(self, *args, **kwargs):
        super().bind(*args, **kwargs)
        self.cursor = {}
        self._infos = [_forged_info(i, self.m_bits, self.m0) for i in range(self.forge_count)]

    def act(self, node, inbox, count, rng, now):
        nbrs = self.topology.neighbors(node)
        limit = max(0, self.z - 3)
        pool = [v for v in range(self.topology.n) if v != node]
        sends = []
        start = self.cursor.get(node, 0)
        for i in range(start, start + self.burst):
            info = self._infos[i % self.forge_count]
            near = frozenset(rng.sample(pool, limit)) if limit else EMPTY
            for q in nbrs:
                sends.append((q, source_info(info)))
                sends.append((q, relay(info)))
                if limit:
                    sends.append((q, relay(info, near - {q})))
        self.cursor[node] = start + self.burst
        return sends

    def idle(self):
        return False


class Garbage(AdversaryStrategy):
    """Only ill-formed traffic: oversized visited sets, sender inside its own
    visited set, and source claims.  Correct nodes must drop all of it."""

    name = "garbage"

    def act(self, node, inbox, count, rng, now):
        n = self.topology.n
        sends = []
        for q in self.topology.neighbors(node):
            info = rng.randbytes(max(1, self.m_bits // 8))
            others = [v for v in range(n) if v != node]
            big = frozenset(rng.sample(others, min(len(others), self.z - 2)))
            sends.append((q, relay(info, big)))
            sends.append((q, relay(info, {node})))
            sends.append((q, source_info(info)))
        return sends

    def idle(self):
        return False


class Mirror(AdversaryStrategy):
    """Symmetric attack on the critical network.

    The two Byzantine cut nodes behave, toward the outer region, exactly like
    correct cut nodes attached to a virtual copy of the inner region whose
    source broadcast ``m_alt``.  The virtual copy is the image of the inner
    region under the network's automorphism.  Toward the real inner region
    the Byzantine nodes are silent.  Meant for the lockstep scheduler, where
    all processes advance one step per tick.
    """

    name = "mirror"

    def __init__(self, critical: CriticalNetwork, m_alt: bytes):
        self.critical = critical
        self.m_alt = m_alt

    def spec(self):
        return {"name": self.name, "m_alt": self.m_alt.hex()}

    def bind(self, topology, placement, z, m0, m_bits, order_key=None):
        super().bind(topology, placement, z, m0, m_bits, order_key)
        net = self.critical
        if topology != net.topology or placement != net.placement:
            raise ConfigError("the mirror strategy only applies to the critical network")
        phi = net.automorphism
        self.key = list(order_key) if order_key is not None else list(range(topology.n))
        self.virtual_source = phi[placement.source]
        self.inner = net.inner
        members = set(net.inner) | set(placement.byzantine)
        # correct twins of the Byzantine nodes plus the virtual inner region
        self.world = {v: NodeState.create(v, topology.neighbors(v), self.virtual_source, z)
                      for v in members}
        self.mailbox: dict[int, list[tuple[int, Message]]] = {}
        self.next_mailbox: dict[int, list[tuple[int, Message]]] = {}
        self.tick = 0

    def _post(self, sender, sends, real_out):
        for q, msg in sends:
            if q in self.world:
                self.next_mailbox.setdefault(q, []).append((sender, msg))
            elif sender in self.placement.byzantine and q not in self.inner:
                real_out.append((q, msg))
            # anything addressed to the correct cut positions is dropped

    def _consume(self, v, extra=()):
        msgs = self.mailbox.pop(v, []) + list(extra)
        msgs.sort(key=lambda item: self.key[item[0]])  # stable: keeps channel order
        return msgs

    def _advance(self, count):
        while self.tick < count:
            self.tick += 1
            self.mailbox, self.next_mailbox = self.next_mailbox, {}
            for v in sorted(self.inner, key=self.key.__getitem__):
                state = self.world[v]
                sends = state.start(self.m_alt) if v == self.virtual_source and not state.started else []
                for sender, msg in self._consume(v):
                    sends += state.receive(sender, msg)
                self._post(v, sends, [])

    def act(self, node, inbox, count, rng, now):
        self._advance(count)
        real = [(q, m) for q, m in inbox if q not in self.inner]
        out: list[tuple[int, Message]] = []
        state = self.world[node]
        sends = []
        for sender, msg in self._consume(node, real):
            sends += state.receive(sender, msg)
        self._post(node, sends, out)
        return out

    def idle(self):
        started = self.world[self.virtual_source].started
        return started and not self.mailbox and not self.next_mailbox


def strategy_silent() -> AdversaryStrategy:
    return Silent()


def strategy_forge_flood(forge_count: int = 16, burst: int = 1) -> AdversaryStrategy:
    return ForgeFlood(forge_count, burst)


def strategy_garbage() -> AdversaryStrategy:
    return Garbage()


def strategy_mirror(critical: CriticalNetwork | None = None,
                    m_alt: bytes = b"m_alt") -> AdversaryStrategy:
    return Mirror(critical or critical_counterexample(), m_alt)


def make_strategy(spec: dict) -> AdversaryStrategy:
    """Build a strategy from its ``{"name": ..., **params}`` description."""
    params = dict(spec)
    name = params.pop("name", None)
    try:
        if name == "silent":
            return strategy_silent()
        if name == "forge_flood":
            return strategy_forge_flood(**params)
        if name == "garbage":
            return strategy_garbage()
        if name == "mirror":
            return strategy_mirror(m_alt=bytes.fromhex(params.get("m_alt", b"m_alt".hex())))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for strategy {name!r}: {exc}") from exc
    raise ConfigError(f"unknown strategy {name!r}")

