"""
The critical network: D = Z is not enough
=========================================

A planar 4-connected network with Z = 4 whose two Byzantine nodes are exactly
4 hops apart.  Together with two correct nodes they separate an inner region
holding the source from an outer region.  The Byzantine pair mirrors the
correct pair of a world where the source said something else, so the outer
region receives exactly the same messages (up to the network's symmetry) in
both worlds and cannot decide.
"""

from planarbcast.cli import mirror_pair
from planarbcast.graph import compute_Y, compute_Z, is_k_connected, min_byzantine_distance
from planarbcast.verify import assert_indistinguishable, assert_safety

net, world_a, world_b = mirror_pair()
topo = net.topology
print(f"n={topo.n} Z={compute_Z(topo)} Y={compute_Y(topo)} "
      f"D={min_byzantine_distance(topo, net.placement)} 4-connected={is_k_connected(topo, 4)}")
print("cut:", sorted(net.cut), "Byzantine:", sorted(net.placement.byzantine))

verdict = assert_indistinguishable(world_a, world_b, net.automorphism, net.outer_region)
print(f"outer receive transcripts identical after relabeling: {verdict.passed} "
      f"({verdict.measured['records']} records)")

for name, report in (("source says m0", world_a), ("source says m1", world_b)):
    outer = [report.delivered[v] for v in net.outer_region]
    inner = [report.delivered[v] for v in net.inner]
    m0 = bytes.fromhex(report.config["m0"])
    print(f"{name}: inner delivered {sum(h is not None for h in inner)}/{len(inner)}, "
          f"outer delivered {sum(h is not None for h in outer)}/{len(outer)}, "
          f"safe={assert_safety(report, m0).passed}, end={report.termination}")
