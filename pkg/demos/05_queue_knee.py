"""The knee of a single exponential queue sits at mean queue length one.

A window-1 source is swept across offered loads (source speeds). At each
load the router's power is its throughput over its own mean sojourn
time. The power-optimal load is the knee, and there the time-average
queue length comes out at about one packet: the detection threshold the
routers use.
"""
from cavsim import fixed_window_run
from cavsim.scenario import RunControls, Scenario, ServerSpec, UserSpec


def queue_scenario(speed):
    return Scenario(
        routers=[ServerSpec("q", "exponential", 1.0)],
        users=[UserSpec("u", ("q",), w_max=4, speed=speed, window=1)],
        run=RunControls(end_time=20000.0, seed=7, mode="fixed",
                        warmup_fraction=0.2),
    )


print("speed   throughput  sojourn   power   mean queue")
best = None
for speed in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
    stats = fixed_window_run(queue_scenario(speed), 1).routers["q"]
    pwr = stats.throughput / stats.mean_sojourn
    print(f"{speed:5.1f}  {stats.throughput:10.4f}  {stats.mean_sojourn:7.3f}"
          f"  {pwr:6.4f}  {stats.mean_queue:10.3f}")
    if best is None or pwr > best[1]:
        best = (speed, pwr, stats.mean_queue)

print(f"\npower peaks at speed {best[0]}: mean queue {best[2]:.3f} "
      f"(the knee sits at one packet in the system)")
