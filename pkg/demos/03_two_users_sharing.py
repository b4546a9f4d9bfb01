"""A second user joins mid-run and the bottleneck is shared fairly.

The first user crosses four queues; the second enters at the first queue
and leaves after the second (the shared bottleneck), starting only after
the first user has sent 200 packets. Selective marking asks the user
above its fair share of the bottleneck's observed throughput to back
off, so the allocation converges toward the max-min split even though
the two paths are wildly different lengths.
"""
from cavsim import build_report, load_bundled, run

scenario = load_bundled("case2")
result = run(scenario)

join = next(r.time for r in result.trace
            if r.user == "u2" and r.event == "start")
print(f"u2 activates at t={join:.1f} (after 200 sends by u1)")

for user in ("u1", "u2"):
    tail = [r.w_used for r in result.trace
            if r.user == user and r.event in ("increase", "decrease")
            and r.time >= 0.75 * scenario.run.end_time]
    stats = result.users[user]
    print(f"{user}: late-run window band {min(tail)}..{max(tail)}, "
          f"throughput {stats.throughput:.4f} pkt/unit, "
          f"response {stats.response_time:.1f}")

report = build_report(result)
print(f"\nmax-min fair split of the bottleneck: {report.optimal_allocations}")
print(f"fairness of the measured allocation against it: "
      f"{report.global_fairness:.4f}")
print(f"bottleneck {report.bottleneck} mean queue: "
      f"{next(r.mean_queue for r in report.routers if r.name == 'r2'):.2f}")
