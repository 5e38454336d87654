"""
Delivery time against diameter
==============================

With activation gaps bounded by T, the last correct delivery is far below
Y^3 Z^3 T d and grows like the flooding wavefront: the ratio to a plain flood
stays roughly constant as the diameter quadruples.
"""

from planarbcast.graph import Placement, compute_Z, diameter, generate, torus
from planarbcast.sim import TimingModel, run, run_flood_baseline
from planarbcast.verify import assert_time_bound, fit_slope

tm = TimingModel.bounded(1.0)
nobody = Placement(frozenset(), 0)
for family, ladder in (("torus", [torus(k, k) for k in (5, 8, 11, 14, 20)]),
                       ("quadrangulation", [generate("quadrangulation", {"n": k})
                                            for k in (4, 6, 9, 13, 20)])):
    ds, times = [], []
    for topo in ladder:
        report = run(topo, nobody, None, tm, "random", seed=1, record=False)
        flood = run_flood_baseline(topo, nobody, tm, seed=1, scheduler_policy="random",
                                   record=False)
        res = assert_time_bound(report, topo, tm)
        t, f = res.measured["max_delivery_time"], max(flood.delivery_time.values())
        ds.append(diameter(topo))
        times.append(t)
        print(f"{topo.label:20} d={diameter(topo):3} time={t:6.2f} flood={f:6.2f} "
              f"ratio={t / f:4.2f} bound={res.measured['bound']:.0f}")
    print(f"{family}: fitted slope {fit_slope(ds, times):.2f} time units per hop\n")
