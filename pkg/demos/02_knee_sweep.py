"""Locate the knee of the power curve by sweeping fixed windows.

With adaptation disabled, each window gets its own deterministic run.
Below the knee every extra packet in flight buys throughput at constant
response time; above it, throughput is pinned at the bottleneck rate and
the extra packets only sit in its queue. Power (throughput / response
time) peaks right between those regimes.
"""
from cavsim import fixed_window_run, knee_from_sweep, load_bundled

scenario = load_bundled("case1")

points = []
print("window  throughput  response   power")
for window in range(1, 26):
    point = fixed_window_run(scenario, window).sweep_point("u1")
    points.append(point)
    print(f"  {window:4d}  {point.throughput:9.5f}  {point.response_time:8.2f}"
          f"  {point.power():.6f}")

window, peak = knee_from_sweep(points)
print(f"\nknee: window {window} with power {peak:.6f}")

# the closed-form check: the unloaded loop takes 1 + 76.5 time units and
# the bottleneck serves one packet per 5, so the pipe holds 77.5/5 = 15.5
print("pipe capacity 77.5 * 0.2 = 15.5 packets, bracketed by 15 and 16")
