"""
Coverage against the activation window
======================================

"""

# a longer window wakes more devices, which raises the chance a slot is used
# but also the interference seen by the served device
from uavharvest import Scenario, coverage_estimate, coverage_probability, load_config, occupancy_per_device

cfg = load_config({"lambda": "100/km2", "mu": "1 km", "w": "0.25 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 4, "tau": 10})

for w in (125.0, 250.0, 500.0, 1000.0):
    c = cfg.replace(w=w)
    exact = coverage_probability(c)
    mc = coverage_estimate(Scenario(c, seed=2), 20_000)
    # coverage can never exceed the probability the window holds a device
    print(f"w={w:6.0f} m  P={float(exact.value):.4f}  MC={mc.mean:.4f}  bound={c.occupancy:.4f}")

# the per-device view divides by the expected device count
print("per-device occupancy:", occupancy_per_device(cfg))
