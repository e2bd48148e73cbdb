"""Classify node loads and build the in-cluster balancing plan.

Run: python3 demos/01_classify_and_plan.py
"""

from clusterlb.loads import ClusterCapacity, Thresholds, classify_cluster_load, classify_node_load
from clusterlb.planner import global_balance_plan, local_balance_plan, sender_assignment

t = Thresholds(low_max=5, medium_max=10)
clusters = {
    0: [13, 9, 15, 7, 10, 10],
    6: [10, 10, 10, 10, 10, 10],
    12: [15, 13, 12, 8, 10, 10],
    18: [10, 10, 5, 6, 9, 8],
}

print("node classes")
for cid, loads in clusters.items():
    print(f"  cluster {cid:2d}: " + " ".join(f"{x}:{classify_node_load(x, t).name[0]}" for x in loads))

# Inside each cluster HIGH nodes shed their excess onto nodes below medium_max.
after_local = {}
for cid, loads in clusters.items():
    ids = list(range(cid, cid + len(loads)))
    plan = local_balance_plan(loads, t, ids=ids)
    after_local[cid] = list(plan.final_loads)
    moves = ", ".join(f"{r.src}->{r.dst}:{r.amount}" for r in plan.transfers) or "none"
    print(f"cluster {cid:2d} local moves: {moves}; now {after_local[cid]}")

# Clusters still above capacity ship to clusters with room.
ids = sorted(clusters)
totals = [sum(after_local[c]) for c in ids]
caps = [ClusterCapacity.for_cluster(len(clusters[c]), t) for c in ids]
for c, total, cap in zip(ids, totals, caps):
    print(f"cluster {c:2d} total {total} / capacity {cap.cluster_medium_max}: "
          f"{classify_cluster_load(total, cap, t).name}")
plan = global_balance_plan(totals, caps, ids=ids)
for r in plan.transfers:
    chunks = sender_assignment(after_local[r.src], t, [(r.dst, r.amount)],
                               node_ids=range(r.src, r.src + len(clusters[r.src])))
    print(f"cluster {r.src} -> cluster {r.dst}: {r.amount} units as node chunks "
          + ", ".join(f"{n}:{a}" for n, _, a in chunks))
