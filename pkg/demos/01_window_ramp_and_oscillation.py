"""Watch a single adaptive source find the knee of a four-queue path.

The source starts with a window of 1 and grows it by one packet every
two window turns while the network's congestion bits stay clear. Once
the bottleneck queue averages above one packet, bits come back set and
the window drops multiplicatively, after which it hovers in a narrow
band just below the pipe capacity.
"""
from cavsim import build_report, load_bundled, run

scenario = load_bundled("case1")
result = run(scenario)

adjustments = [
    (r.time, r.event, r.w_used)
    for r in result.trace
    if r.event in ("increase", "decrease")
]

print("first adjustments (time, direction, window in force):")
for time, direction, w_used in adjustments[:18]:
    arrow = "+" if direction == "increase" else "-"
    print(f"  t={time:8.1f}  {arrow}  w_used={w_used}")

first_drop = next(i for i, a in enumerate(adjustments) if a[1] == "decrease")
ramp = [a[2] for a in adjustments[:first_drop]]
band = [a[2] for a in adjustments[first_drop:]]
print(f"\nramp: {ramp[0]} .. {ramp[-1]} in unit steps")
print(f"oscillation band thereafter: {min(band)} .. {max(band)}")

report = build_report(result)
r2 = next(r for r in report.routers if r.name == "r2")
print(f"\nbottleneck r2: utilization {r2.utilization:.3f}, "
      f"mean queue {r2.mean_queue:.3f}, efficiency {r2.efficiency:.3f}")
print(f"user throughput {report.users[0].throughput:.4f} pkt/unit "
      f"(bottleneck capacity 0.2)")
