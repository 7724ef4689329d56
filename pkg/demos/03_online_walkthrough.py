#! /usr/bin/env python3
"""
Online association, one arrival at a time
=========================================

Users show up one by one and must be served at once; an AP once switched
on stays on.  The online algorithm keeps fractional weights on the edges
``S -> AP`` and ``AP -> user``, raises them along minimum cuts until each
new user gets a unit of flow, and switches an edge on once its weight
passes a random threshold.  Here we follow a small desk instance at noon
(daylight lets some luminaires switch off, so the algorithm has real
choices to make) and then check the run against the exact offline optimum.
"""

from hybridvlc import harness
from hybridvlc.instance import random_desk_instance
from hybridvlc.offline import solve_p2
from hybridvlc.online import run_online

inst = random_desk_instance(13, n_users=10)
m_prime, _ = solve_p2(inst)
print(f"{inst.n_aps} APs ({int(inst.vlc_mask.sum())} VLC), {inst.n_users} users, "
      f"lit for light: {sorted(m_prime)}")

res = run_online(inst, m_prime, seed=1, trace=True)
for d in res.decisions:
    note = " (repaired)" if d.repaired else ""
    new = f", switched on {sorted(d.newly_turned_on)}" if d.newly_turned_on else ""
    print(f"user {d.user:2d} -> {inst.ap_ids[d.ap]}{new}{note}")

kinds = {}
for ev in res.state.trace:
    kinds[ev["event"]] = kinds.get(ev["event"], 0) + 1
print("trace events:", kinds)

rep = harness.verify_run(inst, seed=1)
s = rep.summary()
print(f"\nonline {s['online_power']:.3f} W vs exact {s['exact_power']:.3f} W, "
      f"ratio {s['ratio']:.2f}")
print(f"augmentations in the last alpha epoch: {s['augmentations_final_epoch']} "
      f"(bound {s['count_bound']}), smallest potential step {s['min_delta_beta']}")
print("verified" if rep.ok else f"violations: {s['potential_violations']}")
