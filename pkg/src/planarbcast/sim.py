"""Deterministic discrete-event execution of the broadcast protocol.

Every process is activated repeatedly; at each activation it consumes all
messages waiting in its incoming channels and emits its sends at once.  The
scheduler policy decides activation gaps and channel transit delays within
the bounds of the :class:`TimingModel`.
"""

from __future__ import annotations

import gc
import heapq
import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .adversary import AdversaryStrategy, ConfigError, Silent, make_strategy
from .graph import Placement, Topology, compute_Y, compute_Z, diameter, id_bits
from .protocol import PROTOCOLS, Message, NodeState

TRANSCRIPT_FORMAT = "planarbcast.transcript"
TRANSCRIPT_VERSION = 1

UNBOUNDED = "unbounded"
BOUNDED = "bounded"
INTERVAL = "interval"

POLICIES = ("round_robin", "random", "adversarial_delay", "lockstep")

DELIVER, ACTIVATE = 0, 1


@dataclass(frozen=True)
class TimingModel:
    mode: str = BOUNDED
    t: float = 1.0
    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        if self.mode not in (UNBOUNDED, BOUNDED, INTERVAL):
            raise ConfigError(f"unknown timing mode {self.mode!r}")
        if self.mode == BOUNDED and self.t <= 0:
            raise ConfigError("T must be positive")
        if self.mode == INTERVAL and not 0 < self.t1 <= self.t2:
            raise ConfigError("INTERVAL needs 0 < T1 <= T2")

    @classmethod
    def unbounded(cls):
        return cls(UNBOUNDED)

    @classmethod
    def bounded(cls, t: float = 1.0):
        return cls(BOUNDED, t=t)

    @classmethod
    def interval(cls, t1: float, t2: float):
        return cls(INTERVAL, t1=t1, t2=t2)

    @property
    def n_bound(self) -> int | None:
        """Smallest integer N with N > T2/T1 (INTERVAL mode only)."""
        if self.mode != INTERVAL:
            return None
        return math.floor(self.t2 / self.t1) + 1

    @property
    def period(self) -> float:
        return {BOUNDED: self.t, INTERVAL: self.t2, UNBOUNDED: 1.0}[self.mode]


class Scheduler:
    """Activation gaps and transit delays for one run."""

    def __init__(self, policy: str, timing: TimingModel, rng: random.Random, n: int):
        if policy not in POLICIES:
            raise ConfigError(f"unknown scheduler policy {policy!r}")
        self.policy, self.timing, self.rng, self.n = policy, timing, rng, n
        if policy == "adversarial_delay":
            self.slow = [rng.random() < 0.5 for _ in range(n)]

    def first(self, v: int, rank: int) -> float:
        if self.policy == "lockstep":
            return self.timing.period
        if self.policy == "round_robin":
            return (rank + 1) * self.timing.period / self.n
        return self.gap(v)

    def gap(self, v: int) -> float:
        tm, rng = self.timing, self.rng
        if self.policy in ("lockstep", "round_robin"):
            return tm.period
        if self.policy == "random":
            if tm.mode == BOUNDED:
                return tm.t * (1.0 - rng.random())
            if tm.mode == INTERVAL:
                return rng.uniform(tm.t1, tm.t2)
            return rng.expovariate(1.0)
        # adversarial_delay: slow processes sit at the upper bound, fast ones race
        if tm.mode == BOUNDED:
            return tm.t if self.slow[v] else tm.t / 8
        if tm.mode == INTERVAL:
            return tm.t2 if self.slow[v] else tm.t1
        return rng.paretovariate(1.5) if self.slow[v] else rng.expovariate(8.0)

    def delay(self) -> float:
        tm = self.timing
        if self.policy == "lockstep":
            return tm.period / 2
        if self.policy == "round_robin" or tm.mode == INTERVAL:
            return 0.0
        if self.policy == "random":
            return tm.t * self.rng.random() if tm.mode == BOUNDED else self.rng.expovariate(1.0)
        return tm.t if tm.mode == BOUNDED else self.rng.expovariate(0.2)


@dataclass
class RunReport:
    config: dict
    delivered: dict[int, str | None]
    delivery_time: dict[int, float | None]
    peak_state_bits: dict[int, int]
    channel_peak_msgs: dict[str, int]
    channel_peak_bits: dict[str, int]
    correct_channels: list[str]
    messages: int
    events: int
    end_time: float
    termination: str
    transcript: list[list] = field(default_factory=list)
    verifications: list[dict] = field(default_factory=list)

    def delivered_info(self, v: int) -> bytes | None:
        h = self.delivered[v]
        return None if h is None else bytes.fromhex(h)

    @property
    def correct_nodes(self) -> list[int]:
        return sorted(self.delivered)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("transcript")
        return d

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def channel_name(u: int, v: int) -> str:
    return f"{u}->{v}"


def default_horizon(topology: Topology, z: int) -> int:
    y = max(topology.degree(v) for v in range(topology.n))
    return int(max(10**6, 100 * y**3 * z**3 * diameter(topology)))


class Simulation:
    def __init__(self, topology: Topology, placement: Placement,
                 strategy: AdversaryStrategy | None = None,
                 timing: TimingModel | None = None, policy: str = "round_robin",
                 seed: int = 0, horizon: int | None = None, m0: bytes = b"m0",
                 z: int | None = None, m_bits: int = 128, protocol: str = "paper",
                 fifo: bool = False, order_key: Sequence[int] | None = None,
                 record: bool = True):
        self.topology = topology
        self.placement = placement
        self.strategy = strategy or Silent()
        self.timing = timing or TimingModel.bounded(1.0)
        self.policy = policy
        self.seed = seed
        self.z = z if z is not None else compute_Z(topology)
        self.horizon = horizon if horizon is not None else default_horizon(topology, self.z)
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        self.m0 = m0
        self.m_bits = m_bits
        self.x_bits = id_bits(topology.n)
        if protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {protocol!r}")
        self.protocol = protocol
        self.fifo = fifo
        self.key = list(order_key) if order_key is not None else list(range(topology.n))
        if sorted(self.key) != list(range(topology.n)):
            raise ConfigError("order_key must be a permutation of the node ids")
        self.record = record

    def config(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "placement": {"byzantine": sorted(self.placement.byzantine),
                          "source": self.placement.source},
            "strategy": self.strategy.spec(),
            "timing": asdict(self.timing),
            "policy": self.policy,
            "seed": self.seed,
            "horizon": self.horizon,
            "m0": self.m0.hex(),
            "z": self.z,
            "m_bits": self.m_bits,
            "protocol": self.protocol,
            "fifo": self.fifo,
            "order_key": self.key,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "Simulation":
        pl = cfg["placement"]
        return cls(
            Topology.from_dict(cfg["topology"]),
            Placement(frozenset(pl["byzantine"]), pl["source"]),
            strategy=make_strategy(cfg["strategy"]),
            timing=TimingModel(**cfg["timing"]),
            policy=cfg["policy"], seed=cfg["seed"], horizon=cfg["horizon"],
            m0=bytes.fromhex(cfg["m0"]), z=cfg["z"], m_bits=cfg["m_bits"],
            protocol=cfg["protocol"], fifo=cfg["fifo"], order_key=cfg["order_key"],
        )

    def run(self) -> RunReport:
        # the event heap holds millions of tuples under flooding attacks; cyclic
        # GC passes over them cost more than the simulation itself
        paused = gc.isenabled()
        gc.disable()
        try:
            return self._run()
        finally:
            if paused:
                gc.enable()

    def _run(self) -> RunReport:
        topo, placement = self.topology, self.placement
        n = topo.n
        byz = placement.byzantine
        key = self.key
        node_cls = PROTOCOLS[self.protocol]
        states: dict[int, NodeState] = {
            v: node_cls.create(v, topo.neighbors(v), placement.source, self.z)
            for v in range(n) if v not in byz}
        self.strategy.bind(topo, placement, self.z, self.m0, self.m_bits, key)
        sched = Scheduler(self.policy, self.timing, random.Random(self.seed), n)
        byz_rng = {b: random.Random(f"{self.seed}:{b}") for b in sorted(byz)}
        sorted_inbox = self.policy == "lockstep"

        heap: list = []
        seq = 0
        for rank, v in enumerate(sorted(range(n), key=key.__getitem__)):
            heapq.heappush(heap, (sched.first(v, rank), ACTIVATE, seq, v, None, None))
            seq += 1

        inbox: list[list] = [[] for _ in range(n)]
        activations = [0] * n
        in_channel: dict[tuple[int, int], list[int]] = {}
        ch_peak_msgs: dict[tuple[int, int], int] = {}
        ch_peak_bits: dict[tuple[int, int], int] = {}
        last_arrival: dict[tuple[int, int], float] = {}
        delivery_time: dict[int, float | None] = {v: None for v in states}
        peak_bits = {v: 0 for v in states}
        transcript: list[list] = []
        rec = self.record
        pending = 0
        undelivered = sum(1 for s in states.values() if not s.stopped)
        messages = 0
        events = 0
        now = 0.0
        termination = "NON_QUIESCENT"
        m_bits, x_bits = self.m_bits, self.x_bits

        while heap:
            if events >= self.horizon:
                break
            now, kind, _, v, sender, msg = heapq.heappop(heap)
            events += 1
            if kind == DELIVER:
                inbox[v].append((sender, msg))
                continue
            activations[v] += 1
            batch = inbox[v]
            inbox[v] = []
            if sorted_inbox:
                batch.sort(key=lambda item: key[item[0]])
            for q, m in batch:
                ch = in_channel[(q, v)]
                ch[0] -= 1
                ch[1] -= m.bits(m_bits, x_bits)
                if rec:
                    transcript.append([now, "recv", v, q, m.encode()])
            pending -= len(batch)
            if v in byz:
                sends = self.strategy.act(v, batch, activations[v], byz_rng[v], now)
                for q, _ in sends:
                    if q not in topo.adj[v]:
                        raise ConfigError(f"Byzantine node {v} sent to non-neighbor {q}")
            else:
                state = states[v]
                was_stopped = state.stopped
                sends = []
                if v == placement.source and not state.started:
                    sends += state.start(self.m0)
                for q, m in batch:
                    sends += state.receive(q, m)
                if state.delivered is not None and delivery_time[v] is None:
                    delivery_time[v] = now
                    if rec:
                        transcript.append([now, "deliver", v, state.delivered.hex()])
                if state.stopped and not was_stopped:
                    undelivered -= 1
                bits = state.bits(m_bits, x_bits)
                if bits > peak_bits[v]:
                    peak_bits[v] = bits
            for q, m in sends:
                size = m.bits(m_bits, x_bits)
                edge = (v, q)
                ch = in_channel.get(edge)
                if ch is None:
                    ch = in_channel[edge] = [0, 0]
                ch[0] += 1
                ch[1] += size
                if ch[0] > ch_peak_msgs.get(edge, 0):
                    ch_peak_msgs[edge] = ch[0]
                if ch[1] > ch_peak_bits.get(edge, 0):
                    ch_peak_bits[edge] = ch[1]
                arrival = now + sched.delay()
                if self.fifo:
                    arrival = max(arrival, last_arrival.get(edge, arrival))
                    last_arrival[edge] = arrival
                heapq.heappush(heap, (arrival, DELIVER, seq, q, v, m))
                seq += 1
                if rec:
                    transcript.append([now, "send", v, q, m.encode()])
            messages += len(sends)
            pending += len(sends)
            heapq.heappush(heap, (now + sched.gap(v), ACTIVATE, seq, v, None, None))
            seq += 1
            if undelivered == 0:
                termination = "ALL_DELIVERED"
                break
            if pending == 0 and self.strategy.idle() and self._sources_started(states):
                termination = "QUIESCENT"
                break

        correct = sorted(states)
        correct_channels = sorted(
            channel_name(u, w) for u in correct for w in topo.neighbors(u) if w not in byz)
        return RunReport(
            config=self.config(),
            delivered={v: (states[v].delivered.hex() if states[v].delivered is not None
                           else None) for v in correct},
            delivery_time=delivery_time,
            peak_state_bits=peak_bits,
            channel_peak_msgs={channel_name(*e): c for e, c in sorted(ch_peak_msgs.items())},
            channel_peak_bits={channel_name(*e): c for e, c in sorted(ch_peak_bits.items())},
            correct_channels=correct_channels,
            messages=messages,
            events=events,
            end_time=now,
            termination=termination,
            transcript=transcript,
        )

    def _sources_started(self, states) -> bool:
        src = states[self.placement.source]
        return src.started


def run(topology: Topology, placement: Placement, strategy: AdversaryStrategy | None = None,
        timing: TimingModel | None = None, scheduler_policy: str = "round_robin",
        seed: int = 0, horizon: int | None = None, **kwargs) -> RunReport:
    return Simulation(topology, placement, strategy, timing, scheduler_policy, seed,
                      horizon, **kwargs).run()


def run_flood_baseline(topology: Topology, placement: Placement,
                       timing: TimingModel | None = None, seed: int = 0,
                       scheduler_policy: str = "round_robin", **kwargs) -> RunReport:
    """Same harness with the simple-broadcast protocol; Byzantine nodes stay silent."""
    return Simulation(topology, placement, Silent(), timing, scheduler_policy, seed,
                      protocol="flood", **kwargs).run()


def channel_occupancy_check(report: RunReport, timing: TimingModel) -> bool | None:
    """Every correct-correct channel held at most N tuples; None when no bound applies."""
    n_bound = timing.n_bound
    if n_bound is None:
        return None
    peaks = report.channel_peak_msgs
    return all(peaks.get(ch, 0) <= n_bound for ch in report.correct_channels)


# transcript files ---------------------------------------------------------------

class TranscriptError(ValueError):
    pass


def write_transcript(report: RunReport, path) -> None:
    with open(path, "w") as fh:
        header = {"format": TRANSCRIPT_FORMAT, "version": TRANSCRIPT_VERSION,
                  "config": report.config}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in report.transcript:
            fh.write(json.dumps(record) + "\n")
        summary = report.summary()
        checks = summary.pop("verifications")
        fh.write(json.dumps({"report": summary, "verifications": checks}, sort_keys=True) + "\n")


def read_transcript(path) -> tuple[dict, list[list], dict]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TranscriptError("empty transcript")
    try:
        header = json.loads(lines[0])
        records = [json.loads(line) for line in lines[1:-1]]
        footer = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise TranscriptError(f"unreadable transcript: {exc}") from exc
    if header.get("format") != TRANSCRIPT_FORMAT:
        raise TranscriptError("not a transcript file")
    if header.get("version") != TRANSCRIPT_VERSION:
        raise TranscriptError(f"transcript version {header.get('version')} is not "
                              f"supported (expected {TRANSCRIPT_VERSION})")
    if "report" not in footer:
        raise TranscriptError("transcript is missing its report line")
    return header["config"], records, footer["report"]


def replay(path) -> tuple[bool, str]:
    """Re-execute a transcript's run; return (match, description of first divergence)."""
    config, records, summary = read_transcript(path)
    report = Simulation.from_config(config).run()
    fresh = json.loads(json.dumps(report.transcript))
    for i, (old, new) in enumerate(zip(records, fresh)):
        if old != new:
            return False, f"record {i + 1} differs: recorded {old}, replayed {new}"
    if len(records) != len(fresh):
        return False, f"recorded {len(records)} records, replayed {len(fresh)}"
    fresh_summary = report.summary()
    fresh_summary.pop("verifications")
    fresh_summary = json.loads(json.dumps(fresh_summary, sort_keys=True))
    if fresh_summary != summary:
        keys = [k for k in fresh_summary if fresh_summary[k] != summary.get(k)]
        return False, f"report fields differ: {keys}"
    return True, "identical"


def topology_params(topology: Topology, z: int | None = None) -> dict:
    return {"n": topology.n, "d": diameter(topology), "Z": z or compute_Z(topology),
            "Y": compute_Y(topology)}
