"""Per-node broadcast state machine.

Relay tuples ``(m, S)`` carry the set ``S`` of nodes already visited.  An inner
node accepts ``(m, S)`` from neighbor ``q`` when ``q`` is not in ``S`` and
``|S| <= Z - 3``, keeps only the last accepted tuple per neighbor, and
delivers ``m`` once it holds ``Rec(q) = (m, {})`` and ``Rec(p) = (m, S)``
with ``p != q`` and ``q`` not in ``S``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

SRC = "SRC"
REL = "REL"

EMPTY: frozenset[int] = frozenset()


class ProtocolError(RuntimeError):
    pass


class Message(NamedTuple):
    kind: str
    info: bytes
    visited: frozenset[int] = EMPTY

    def encode(self) -> str:
        """Canonical wire record, e.g. ``REL 6d30 [3,7]``."""
        if self.kind == SRC:
            return f"SRC {self.info.hex()}"
        ids = ",".join(str(v) for v in sorted(self.visited))
        return f"REL {self.info.hex()} [{ids}]"

    @classmethod
    def decode(cls, line: str) -> "Message":
        parts = line.split(" ")
        if parts[0] == SRC and len(parts) == 2:
            return cls(SRC, bytes.fromhex(parts[1]))
        if parts[0] == REL and len(parts) == 3:
            inner = parts[2].strip("[]")
            ids = frozenset(int(x) for x in inner.split(",")) if inner else EMPTY
            return cls(REL, bytes.fromhex(parts[1]), ids)
        raise ValueError(f"bad message record {line!r}")

    def bits(self, m_bits: int, x_bits: int) -> int:
        return m_bits + x_bits * len(self.visited)


def source_info(info: bytes) -> Message:
    return Message(SRC, info)


def relay(info: bytes, visited=EMPTY) -> Message:
    return Message(REL, info, frozenset(visited))


class Role(Enum):
    SOURCE = "source"
    SOURCE_NEIGHBOR = "source_neighbor"
    INNER = "inner"


Send = tuple[int, Message]


@dataclass
class NodeState:
    """Protocol state of one correct node.

    ``rec`` maps a neighbor to the last accepted ``(info, visited)`` pair.
    """

    id: int
    role: Role
    z_param: int
    neighbors: tuple[int, ...]
    source: int
    rec: dict[int, tuple[bytes, frozenset[int]]] = field(default_factory=dict)
    delivered: bytes | None = None
    stopped: bool = False
    started: bool = False

    @classmethod
    def create(cls, node: int, neighbors, source: int, z_param: int) -> "NodeState":
        if node == source:
            role = Role.SOURCE
        elif source in neighbors:
            role = Role.SOURCE_NEIGHBOR
        else:
            role = Role.INNER
        return cls(node, role, z_param, tuple(neighbors), source)

    def entries(self):
        return self.rec.values()

    def bits(self, m_bits: int, x_bits: int) -> int:
        return sum(m_bits + x_bits * len(s) for _, s in self.rec.values())

    def multicast(self, msg: Message) -> list[Send]:
        return [(q, msg) for q in self.neighbors]

    def _deliver(self, info: bytes) -> list[Send]:
        if self.delivered is not None:
            raise ProtocolError(f"node {self.id} delivers twice")
        self.delivered = info
        self.stopped = True
        return self.multicast(relay(info))

    def start(self, m0: bytes) -> list[Send]:
        if self.role is not Role.SOURCE:
            raise ProtocolError(f"node {self.id} is not the source")
        if self.started:
            raise ProtocolError("source started twice")
        self.started = True
        self.delivered = m0
        self.stopped = True
        return self.multicast(source_info(m0))

    def accepts(self, sender: int, msg: Message) -> bool:
        return (msg.kind == REL and sender not in msg.visited
                and len(msg.visited) <= self.z_param - 3)

    def receive(self, sender: int, msg: Message) -> list[Send]:
        """Apply one incoming message in place; return the resulting sends."""
        if sender not in self.neighbors:
            raise ProtocolError(f"{sender} is not a neighbor of {self.id}")
        if self.stopped:
            return []
        if self.role is Role.SOURCE_NEIGHBOR:
            if msg.kind == SRC and sender == self.source:
                return self._deliver(msg.info)
            return []
        if self.role is Role.SOURCE or not self.accepts(sender, msg):
            return []
        self.rec[sender] = (msg.info, msg.visited)
        sends = self.multicast(relay(msg.info, msg.visited | {sender}))
        info = check_delivery(self)
        if info is not None:
            sends += self._deliver(info)
        return sends


def check_delivery(state: NodeState) -> bytes | None:
    """Smallest info with two witnesses in ``rec``, or None."""
    if state.stopped or state.role is not Role.INNER:
        return None
    best = None
    for q, (m, s) in state.rec.items():
        if s:
            continue
        for p, (m2, s2) in state.rec.items():
            if p != q and m2 == m and q not in s2:
                if best is None or m < best:
                    best = m
                break
    return best


def source_start(state: NodeState, m0: bytes) -> tuple[NodeState, list[Send]]:
    new = copy.deepcopy(state)
    return new, new.start(m0)


def handle_message(state: NodeState, sender: int, msg: Message) -> tuple[NodeState, list[Send]]:
    """Pure transition: the input state is left untouched."""
    new = copy.deepcopy(state)
    return new, new.receive(sender, msg)


def state_size_bits(state, m_bits: int, x_bits: int) -> int:
    """Semantic memory: M bits per stored info plus X bits per stored id."""
    return state.bits(m_bits, x_bits)


class StoreAllNode(NodeState):
    """Reference variant that keeps every accepted tuple instead of one per neighbor.

    This is the memory behavior of earlier relay protocols; exhaustion attacks
    grow its state without bound.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.store: dict[bytes, set[tuple[int, frozenset[int]]]] = {}
        self.n_entries = 0
        self.n_ids = 0

    @classmethod
    def create(cls, node, neighbors, source, z_param):
        base = NodeState.create(node, neighbors, source, z_param)
        return cls(base.id, base.role, z_param, base.neighbors, source)

    def entries(self):
        return [(m, s) for m, held in self.store.items() for _, s in held]

    def bits(self, m_bits, x_bits):
        return m_bits * self.n_entries + x_bits * self.n_ids

    def receive(self, sender, msg):
        if sender not in self.neighbors:
            raise ProtocolError(f"{sender} is not a neighbor of {self.id}")
        if self.stopped:
            return []
        if self.role is Role.SOURCE_NEIGHBOR:
            if msg.kind == SRC and sender == self.source:
                return self._deliver(msg.info)
            return []
        if self.role is Role.SOURCE or not self.accepts(sender, msg):
            return []
        held = self.store.setdefault(msg.info, set())
        if (sender, msg.visited) not in held:
            held.add((sender, msg.visited))
            self.n_entries += 1
            self.n_ids += len(msg.visited)
        sends = self.multicast(relay(msg.info, msg.visited | {sender}))
        # only the info just stored can have gained a second witness
        if any(not s and any(p != q and q not in s2 for p, s2 in held) for q, s in held):
            sends += self._deliver(msg.info)
        return sends


class FloodNode(NodeState):
    """Simple broadcast: deliver the first information heard and forward it once."""

    def start(self, m0):
        self.started = True
        self.delivered = m0
        self.stopped = True
        return self.multicast(source_info(m0))

    def receive(self, sender, msg):
        if sender not in self.neighbors:
            raise ProtocolError(f"{sender} is not a neighbor of {self.id}")
        if self.stopped:
            return []
        self.delivered = msg.info
        self.stopped = True
        return self.multicast(source_info(msg.info))


PROTOCOLS = {"paper": NodeState, "store_all": StoreAllNode, "flood": FloodNode}
