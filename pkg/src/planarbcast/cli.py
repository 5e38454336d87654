"""Command-line experiment runner.

Subcommands: ``run`` (batch from a JSON config), ``analyze`` (topology
report), ``counterexample`` (critical network and paired mirror runs) and
``replay`` (re-execute a transcript).  Exit codes: 0 pass, 1 assertion
failure, 2 configuration error, 3 infeasible placement.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import verify
from .adversary import (ConfigError, PlacementInfeasible, make_strategy, place_byzantines,
                        strategy_mirror)
from .graph import (EmbeddingError, GenerationError, Placement, Topology, compute_Y,
                    compute_Z, critical_counterexample, diameter, enumerate_polygons,
                    find_small_cut, generate, id_bits, min_byzantine_distance)
from .sim import (INTERVAL, POLICIES, Simulation, TimingModel, TranscriptError, replay,
                  write_transcript)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

OUT_ENV = "PLANARBCAST_OUT"

SUMMARY_COLUMNS = ["seed", "topology", "n", "d", "Z", "Y", "D", "strategy",
                   "delivered_fraction", "max_delivery_time", "peak_node_bits",
                   "verifications_passed"]

CHECKS = ("safety", "liveness", "time_bound", "memory_bound", "correct_polygons")


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "planarbcast-out"))


def _seeds(spec) -> list[int]:
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, list) and all(isinstance(s, int) for s in spec):
        return spec
    if isinstance(spec, dict) and set(spec) <= {"start", "stop"}:
        return list(range(int(spec.get("start", 0)), int(spec["stop"])))
    raise ConfigError(f"seeds must be an int, a list of ints or {{start, stop}}: {spec!r}")


@dataclass
class ExperimentConfig:
    topology: dict
    placement: dict
    strategy: dict = field(default_factory=lambda: {"name": "silent"})
    timing: dict = field(default_factory=lambda: {"mode": "bounded", "t": 1.0})
    policy: str = "random"
    seeds: list = field(default_factory=lambda: [0])
    horizon: int | None = None
    verify: list = field(default_factory=lambda: ["safety", "liveness"])
    m0: str = "6d30"
    m_bits: int = 128
    protocol: str = "paper"
    out: str | None = None
    transcripts: bool = True

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("topology", "placement"):
            if key not in raw:
                raise ConfigError(f"config is missing {key!r}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def validate(self) -> None:
        topo = self.topology
        if not isinstance(topo, dict) or not ({"kind", "file"} & set(topo)):
            raise ConfigError("topology needs a 'kind' (with 'params') or a 'file'")
        pl = self.placement
        if not isinstance(pl, dict) or not ({"byzantine", "count"} & set(pl)):
            raise ConfigError("placement needs 'byzantine' ids or a 'count'")
        make_strategy(self.strategy)
        try:
            TimingModel(**self.timing)
        except TypeError as exc:
            raise ConfigError(f"bad timing model: {exc}") from exc
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown scheduler policy {self.policy!r}")
        self.seeds = _seeds(self.seeds)
        bad = set(self.verify) - set(CHECKS)
        if bad:
            raise ConfigError(f"unknown verifications: {sorted(bad)}")
        try:
            bytes.fromhex(self.m0)
        except (TypeError, ValueError) as exc:
            raise ConfigError("m0 must be a hex string") from exc
        if self.horizon is not None and self.horizon <= 0:
            raise ConfigError("horizon must be positive")

    def build_topology(self) -> Topology:
        spec = self.topology
        try:
            if "file" in spec:
                return Topology.loads(Path(spec["file"]).read_text())
            return generate(spec["kind"], spec.get("params", {}), spec.get("seed", 0))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot build topology: {exc}") from exc

    def build_placement(self, topology: Topology, seed: int) -> Placement:
        spec = self.placement
        if "byzantine" in spec:
            try:
                return Placement(frozenset(spec["byzantine"]), spec.get("source", 0))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        rng = random.Random(f"placement:{seed}")
        placement, _ = place_byzantines(topology, int(spec["count"]),
                                        float(spec.get("min_distance", 0)), rng,
                                        spec.get("source"))
        return placement


def execute(cfg: ExperimentConfig, seed: int, out_dir: Path | None = None) -> dict:
    """One run of a batch; returns its summary row (plus the verification details)."""
    topology = cfg.build_topology()
    placement = cfg.build_placement(topology, seed)
    timing = TimingModel(**cfg.timing)
    sim = Simulation(topology, placement, make_strategy(cfg.strategy), timing, cfg.policy,
                     seed, cfg.horizon, m0=bytes.fromhex(cfg.m0), m_bits=cfg.m_bits,
                     protocol=cfg.protocol, record=out_dir is not None and cfg.transcripts)
    report = sim.run()
    z, y, x = sim.z, compute_Y(topology), id_bits(topology.n)
    results = []
    for name in cfg.verify:
        if name == "safety":
            results.append(verify.assert_safety(report, sim.m0))
        elif name == "liveness":
            results.append(verify.assert_liveness(report))
        elif name == "time_bound":
            results.append(verify.assert_time_bound(report, topology, timing))
        elif name == "memory_bound":
            results.append(verify.assert_memory_bound(
                report, cfg.m_bits, x, y, z, timing if timing.mode == INTERVAL else None))
        elif name == "correct_polygons":
            results.append(verify.check_lemma_correct_polygons(topology, placement))
    report.verifications = [r.to_dict() for r in results]
    if out_dir is not None and cfg.transcripts:
        write_transcript(report, out_dir / f"run-{seed}.jsonl")
    live = verify.assert_liveness(report)
    times = [t for t in report.delivery_time.values() if t is not None]
    row = {
        "seed": seed, "topology": topology.label, "n": topology.n,
        "d": diameter(topology), "Z": z, "Y": y,
        "D": min_byzantine_distance(topology, placement),
        "strategy": cfg.strategy["name"],
        "delivered_fraction": live.measured["delivered_fraction"],
        "max_delivery_time": max(times) if times else "",
        "peak_node_bits": max(report.peak_state_bits.values(), default=0),
        "verifications_passed": f"{sum(r.passed for r in results)}/{len(results)}",
    }
    return {"row": row, "passed": all(r.passed for r in results),
            "failures": [r.to_dict() for r in results if not r.passed]}


def _execute_star(args):
    return execute(*args)


def run_batch(cfg: ExperimentConfig, out_dir: Path | None, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, seed, out_dir) for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_execute_star, tasks))
    return [execute(*t) for t in tasks]


def write_summary(rows: list[dict], path: Path) -> None:
    """Append rows to a CSV, writing the header only for a new file."""
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        if fresh:
            writer.writeheader()
        writer.writerows(rows)


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    out_dir = Path(args.out or cfg.out or default_out())
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_batch(cfg, out_dir, args.jobs)
    write_summary([r["row"] for r in results], out_dir / "summary.csv")
    failed = [r for r in results if not r["passed"]]
    for r in failed:
        print(f"seed {r['row']['seed']}: FAIL {json.dumps(r['failures'])}", file=sys.stderr)
    print(f"{len(results) - len(failed)}/{len(results)} runs passed; summary in "
          f"{out_dir / 'summary.csv'}")
    return EXIT_FAIL if failed else EXIT_OK


def analyze_topology(topology: Topology) -> dict:
    cut = find_small_cut(topology, 4) if topology.n > 4 else frozenset(range(topology.n))
    info = {"label": topology.label, "n": topology.n, "edges": len(topology.edges),
            "planar": topology.planar, "Z": compute_Z(topology), "Y": compute_Y(topology),
            "diameter": diameter(topology), "four_connected": cut is None,
            "polygons": len(enumerate_polygons(topology))}
    if cut is not None:
        info["cut"] = sorted(cut)
    if not topology.planar:
        info["Z_source"] = "declared"
    return info


def cmd_analyze(args) -> int:
    try:
        topology = Topology.loads(Path(args.topology).read_text())
        info = analyze_topology(topology)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot analyze {args.topology}: {exc}") from exc
    for key, value in info.items():
        print(f"{key}: {value}")
    return EXIT_OK


def mirror_pair(horizon: int = 10**6, record: bool = True):
    """The paired runs on the critical network: source broadcasts m_a resp. m_b,
    and the Byzantine cut nodes impersonate the other world."""
    net = critical_counterexample()
    m_a, m_b = b"m0", b"m1"
    lock = TimingModel.bounded(1.0)
    run_a = Simulation(net.topology, net.placement, strategy_mirror(net, m_b), lock,
                       "lockstep", 0, horizon, m0=m_a, record=record).run()
    run_b = Simulation(net.topology, net.placement, strategy_mirror(net, m_a), lock,
                       "lockstep", 0, horizon, m0=m_b, order_key=net.automorphism,
                       record=record).run()
    return net, run_a, run_b


def cmd_counterexample(args) -> int:
    out_dir = Path(args.out or default_out()) / "counterexample"
    out_dir.mkdir(parents=True, exist_ok=True)
    net, run_a, run_b = mirror_pair()
    (out_dir / "critical.json").write_text(net.topology.dumps() + "\n")
    write_transcript(run_a, out_dir / "run-a.jsonl")
    write_transcript(run_b, out_dir / "run-b.jsonl")
    verdict = verify.assert_indistinguishable(run_a, run_b, net.automorphism,
                                              net.outer_region)
    undelivered = sorted(v for v in net.outer_region
                         if v in run_a.delivered and run_a.delivered[v] is None)
    info = analyze_topology(net.topology)
    print(f"critical network: n={info['n']} Z={info['Z']} "
          f"D={min_byzantine_distance(net.topology, net.placement)} "
          f"four_connected={info['four_connected']} cut={sorted(net.cut)}")
    print(f"indistinguishable: {verdict.passed} ({verdict.measured['records']} outer receives)")
    print(f"outer nodes undelivered: {len(undelivered)}/{len(net.outer_region)}")
    print(f"files: {out_dir}")
    ok = verdict.passed and bool(undelivered)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_replay(args) -> int:
    match, detail = replay(args.transcript)
    print(detail)
    return EXIT_OK if match else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planarbcast",
                                     description="Byzantine broadcast experiments on planar graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a batch from a JSON experiment config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="run this single seed instead of the config's")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./planarbcast-out)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("analyze", help="report the parameters of a topology file")
    p.add_argument("topology")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("counterexample", help="emit the critical network and run the mirror pair")
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)
    p = sub.add_parser("replay", help="re-execute a transcript and compare")
    p.add_argument("transcript")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlacementInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, TranscriptError, EmbeddingError, GenerationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
