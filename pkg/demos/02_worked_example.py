"""Simulate the four-cluster worked example and print its message trace.

Two clusters (coordinators 0 and 12) start their own tokens; 12's token is
dropped at coordinator 0, 0's token completes the ring, and every
coordinator derives the same shipment plan from the broadcast load vector.

Run: python3 demos/02_worked_example.py
"""

from clusterlb.metrics import check_theorem2, check_theorem3
from clusterlb.scenario import run_scenario, worked_example_config

result, metrics = run_scenario(worked_example_config())

interesting = {"Token", "LoadVector", "XferCmd", "CoordLoad", "XLoad", "XAck"}
for rec in result.trace:
    if rec.msg.kind in interesting:
        print(rec.line().replace("\t", "  "))

print()
print(f"final loads: {result.final_loads}")
print(f"HIGH nodes {metrics.high_count_before} -> {metrics.high_count_after}, "
      f"std {metrics.std_dev_before:.3f} -> {metrics.std_dev_after:.3f}")
print(f"token sends {result.token_sends} (forwarding hops {result.token_hops}), "
      f"drops {result.token_drops}, circuits {result.circuits}")
print(f"messages: {metrics.msgs_total} in {result.sim_time:g} time units")
print(f"token bound holds: {check_theorem2(result).passed}")
for p in check_theorem3(result).paths:
    tr = p.transfer
    where = f"cluster {tr.dest}" if tr.remote else f"node {tr.dest}"
    print(f"  node {tr.donor:2d} -> {where}: {tr.amount} units, critical path {p.value:g} "
          f"in [{p.lower:g}, {p.upper:g}], wall clock {tr.elapsed:g}")
