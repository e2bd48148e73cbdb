"""How many token messages does the ring need to learn every cluster total?

Every cluster is made HIGH so each coordinator wants to start a token; the
timer offsets are varied to find the schedule that costs the most forwards.

Run: python3 demos/03_token_bounds.py
"""

import itertools

from clusterlb.loads import Thresholds
from clusterlb.metrics import knowledge_msg_bound, token_bound
from clusterlb.sim import build_topology, run_round

t = Thresholds(5, 10)
offsets = (0.0, 0.5, 1.5, 3.0)

print(" k  worst hops  bound  worst total  bound  all-to-all")
for k in range(1, 7):
    topo = build_topology([2] * k)
    worst_hops = worst_total = 0
    schedules = itertools.product(offsets, repeat=k) if k <= 5 else [(0.0,) * k]
    for timers in schedules:
        r = run_round(topo, [15, 15] * k, t, timers=list(timers))
        worst_hops = max(worst_hops, r.token_hops)
        worst_total = max(worst_total, r.global_knowledge_msgs)
    print(f"{k:2d}  {worst_hops:10d}  {token_bound(k):5g}  {worst_total:11d}  "
          f"{knowledge_msg_bound(k):5g}  {k * (k - 1):10d}")
