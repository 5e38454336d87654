"""Executable predicates over run reports and topologies.

Each predicate returns a :class:`VerificationResult`; a failing result names
the offending node, channel or polygon.  Nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from statistics import linear_regression
from typing import Sequence

from .adversary import ConfigError
from .graph import (Placement, Topology, correct_polygons, diameter, enumerate_polygons,
                    min_byzantine_distance, polygons_connected)
from .protocol import Message
from .sim import BOUNDED, RunReport, TimingModel


@dataclass
class VerificationResult:
    name: str
    passed: bool
    witnesses: list = field(default_factory=list)
    measured: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return asdict(self)


def _max_delivery_time(report: RunReport) -> float | None:
    times = [t for t in report.delivery_time.values() if t is not None]
    return max(times) if times else None


def assert_safety(report: RunReport, m0: bytes) -> VerificationResult:
    """No correct node delivered anything other than ``m0``."""
    bad = [{"node": v, "delivered": h, "time": report.delivery_time[v]}
           for v, h in sorted(report.delivered.items())
           if h is not None and h != m0.hex()]
    return VerificationResult("safety", not bad, bad[:1],
                              {"delivered": sum(h is not None for h in report.delivered.values())})


def assert_liveness(report: RunReport, m0: bytes | None = None) -> VerificationResult:
    """Every correct node delivered ``m0`` (taken from the run config by default)."""
    want = m0.hex() if m0 is not None else report.config["m0"]
    missing = [{"node": v, "delivered": h} for v, h in sorted(report.delivered.items())
               if h != want]
    correct = len(report.delivered)
    return VerificationResult(
        "liveness", not missing, missing[:1],
        {"delivered_fraction": (correct - len(missing)) / correct if correct else 1.0,
         "termination": report.termination,
         "max_delivery_time": _max_delivery_time(report)})


def time_bound(topology: Topology, z: int, t: float = 1.0) -> float:
    y = max(topology.degree(v) for v in range(topology.n))
    return y**3 * z**3 * t * diameter(topology)


def assert_time_bound(report: RunReport, topology: Topology,
                      timing: TimingModel) -> VerificationResult:
    """Max correct delivery time is at most Y^3 Z^3 T d (bounded mode only)."""
    if timing.mode != BOUNDED:
        raise ConfigError("the time bound is only defined for bounded timing")
    bound = time_bound(topology, report.config["z"], timing.t)
    late = [{"node": v, "time": t} for v, t in sorted(report.delivery_time.items())
            if t is None or t > bound]
    late.sort(key=lambda w: float("inf") if w["time"] is None else -w["time"])
    return VerificationResult("time_bound", not late, late[:1],
                              {"bound": bound, "max_delivery_time": _max_delivery_time(report)})


def node_memory_bound(m: int, x: int, y: int, z: int) -> int:
    return y * (m + z * x)


def channel_memory_bound(m: int, x: int, z: int, n_bound: int) -> int:
    return n_bound * (m + x * z)


def assert_memory_bound(report: RunReport, M: int, X: int, Y: int, Z: int,
                        timing: TimingModel | None = None) -> VerificationResult:
    """Peak semantic state per correct node, plus per correct channel in interval mode."""
    node_bound = node_memory_bound(M, X, Y, Z)
    peak_node = max(report.peak_state_bits.values(), default=0)
    witnesses = [{"node": v, "bits": b} for v, b in sorted(report.peak_state_bits.items(),
                                                            key=lambda kv: -kv[1])
                 if b > node_bound][:1]
    measured = {"node_bound": node_bound, "peak_node_bits": peak_node}
    n_bound = timing.n_bound if timing is not None else None
    if n_bound is not None:
        chan_bound = channel_memory_bound(M, X, Z, n_bound)
        peaks = {ch: report.channel_peak_bits.get(ch, 0) for ch in report.correct_channels}
        worst = max(peaks, key=peaks.get, default=None)
        peak_chan = peaks[worst] if worst is not None else 0
        measured.update(channel_bound=chan_bound, peak_channel_bits=peak_chan,
                        peak_channel_msgs=max((report.channel_peak_msgs.get(ch, 0)
                                               for ch in peaks), default=0))
        if peak_chan > chan_bound:
            witnesses.append({"channel": worst, "bits": peak_chan})
    return VerificationResult("memory_bound", not witnesses, witnesses, measured)


def check_lemma_correct_polygons(topology: Topology,
                                 placement: Placement) -> VerificationResult:
    """Every correct node lies on a correct polygon and correct polygons are connected."""
    good = correct_polygons(topology, placement)
    covered = set().union(*(p.node_set for p in good)) if good else set()
    orphans = [v for v in range(topology.n)
               if v not in placement.byzantine and v not in covered]
    witnesses: list = [{"uncovered_node": v} for v in orphans[:1]]
    connected = polygons_connected(good)
    if not connected:
        witnesses.append({"disconnected": True, "correct_polygons": len(good)})
    return VerificationResult(
        "correct_polygons", not witnesses, witnesses,
        {"polygons": len(enumerate_polygons(topology)), "correct_polygons": len(good),
         "D": min_byzantine_distance(topology, placement)})


def _relabel(record: list, perm: Sequence[int]) -> list:
    t, ev, v, q, enc = record
    msg = Message.decode(enc)
    msg = msg._replace(visited=frozenset(perm[x] for x in msg.visited))
    return [t, ev, perm[v], perm[q], msg.encode()]


def outer_receives(report: RunReport, outer_region, perm: Sequence[int] | None = None):
    """Sorted receive records addressed to ``outer_region``, optionally relabeled."""
    outer = set(outer_region)
    recs = [r for r in report.transcript if r[1] == "recv" and r[2] in outer]
    if perm is not None:
        recs = [_relabel(r, perm) for r in recs]
    return sorted(recs, key=lambda r: (r[0], r[2], r[3], r[4]))


def assert_indistinguishable(report_a: RunReport, report_b: RunReport,
                             automorphism: Sequence[int],
                             outer_region) -> VerificationResult:
    """Outer-region receive transcripts coincide once run A is relabeled."""
    if report_a.config["topology"] != report_b.config["topology"]:
        raise ConfigError("runs were executed on different topologies")
    perm = list(automorphism)
    if sorted(perm) != list(range(len(report_a.config["topology"]["rotation"]))):
        raise ConfigError("automorphism is not a permutation of the node ids")
    image = {perm[v] for v in outer_region}
    if image != set(outer_region):
        raise ConfigError("automorphism does not map the outer region to itself")
    a = outer_receives(report_a, outer_region, perm)
    b = outer_receives(report_b, outer_region)
    witnesses = []
    for i, (ra, rb) in enumerate(zip(a, b)):
        if ra != rb:
            witnesses.append({"index": i, "a": ra, "b": rb})
            break
    if not witnesses and len(a) != len(b):
        witnesses.append({"index": min(len(a), len(b)), "a_len": len(a), "b_len": len(b)})
    return VerificationResult("indistinguishable", not witnesses, witnesses,
                              {"records": len(a)})


def ratio_spread(ratios: Sequence[float]) -> float:
    """max/min of a positive series; 1.0 means perfectly proportional."""
    if not ratios or min(ratios) <= 0:
        raise ValueError("ratios must be positive")
    return max(ratios) / min(ratios)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ys against xs."""
    return linear_regression(xs, ys).slope
