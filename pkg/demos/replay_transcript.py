"""
Transcripts and replay
======================

Runs are pure functions of their configuration and seed.  A transcript file
holds the configuration, every send/receive/deliver record and the final
report; replaying it re-executes the run and points at the first divergence.
"""

import json
import random
import tempfile
from pathlib import Path

from planarbcast.adversary import place_byzantines, strategy_garbage
from planarbcast.graph import generate
from planarbcast.sim import TimingModel, replay, run, write_transcript

topo = generate("triangulation", {"w": 8, "h": 8})
placement, _ = place_byzantines(topo, 3, 4, random.Random(5))
report = run(topo, placement, strategy_garbage(), TimingModel.bounded(1.0), "random", seed=11)

path = Path(tempfile.mkdtemp()) / "run.jsonl"
write_transcript(report, path)
lines = path.read_text().splitlines()
print(f"{len(lines)} lines; first records:")
for line in lines[1:4]:
    print("  ", line)

print("replay:", replay(path))

# Shift one timestamp and replay again.
record = json.loads(lines[5])
record[0] += 1.0
lines[5] = json.dumps(record)
path.write_text("\n".join(lines) + "\n")
print("after tampering:", replay(path))
