"""The metrics layer on its own: fairness, power, max-min allocations.

Everything here is a pure function, usable without the simulator.
"""
import numpy as np

from cavsim import (ResourceGraph, efficiency, fairness_index,
                    global_fairness, max_min_fair_allocation, power)

# Jain-style fairness index: (sum x)^2 / (n sum x^2)
print("fairness of equal shares [5,5,5]:", fairness_index([5, 5, 5]))
print("fairness of a lone hog [1,0,0,0]:", fairness_index([1, 0, 0, 0]))
print("fairness of [4,2]:", fairness_index([4, 2]))

# power trades throughput against response time; its peak defines the knee
print("\npower(0.2 pkt/unit, response 5):", power(0.2, 5))
print("efficiency vs knee power 0.04:", efficiency(power(0.2, 5), 0.04))

# max-min fair allocation over a little three-resource graph:
# user 0 crosses only r1, user 1 crosses both, user 2 only r2
graph = ResourceGraph(
    resource_capacities={"r1": 10.0, "r2": 4.0},
    user_paths=[("r1",), ("r1", "r2"), ("r2",)],
)
optimal = max_min_fair_allocation(graph)
print("\nmax-min allocation:", optimal.allocations)
print("binding resource per user:", optimal.bottleneck_of_user)

# demand caps: a user wanting less frees capacity for its peers
shared = ResourceGraph({"r": 9.0}, [("r",), ("r",), ("r",)])
capped = max_min_fair_allocation(shared, demands=[1.0, 100.0, 100.0])
print("9.0 split three ways with user 0 demanding 1.0:", capped.allocations)

# global fairness scores an observed allocation against the optimum
observed = np.array([7.4, 2.2, 1.9])
print("\nglobal fairness of", observed, "->",
      round(global_fairness(observed, optimal), 4))
