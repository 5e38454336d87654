"""
Memory under an exhaustion attack
=================================

Each correct node keeps only the last tuple accepted from each neighbor, so
its state stays below Y(M + ZX) bits however many forged values arrive.  A
relay that stores every tuple grows with the attack instead.  Channel
occupancy is reported next to the N(M + XZ) figure for interval timing.
"""

import random

from planarbcast.adversary import place_byzantines, strategy_forge_flood
from planarbcast.graph import compute_Y, compute_Z, generate, id_bits
from planarbcast.sim import TimingModel, run
from planarbcast.verify import assert_memory_bound

topo = generate("quadrangulation", {"n": 8})
z, y, x, m = compute_Z(topo), compute_Y(topo), id_bits(topo.n), 128
placement, _ = place_byzantines(topo, 2, z + 1, random.Random(1))
timing = TimingModel.interval(1, 2)

for forged in (10, 100, 1000):
    row = []
    for protocol in ("paper", "store_all"):
        report = run(topo, placement, strategy_forge_flood(forged, max(1, forged // 4)),
                     timing, "random", 0, m_bits=m, protocol=protocol, record=False)
        res = assert_memory_bound(report, m, x, y, z, timing)
        row.append(res.measured)
    paper, store = row
    print(f"{forged:5} forged infos: node peak {paper['peak_node_bits']:6} bits "
          f"(bound {paper['node_bound']}), store-all {store['peak_node_bits']:8} bits; "
          f"busiest correct channel {paper['peak_channel_msgs']} tuples (N={timing.n_bound})")

# The channel figure assumes one tuple per channel per activation; a node
# that accepts several relays in one activation forwards all of them.
