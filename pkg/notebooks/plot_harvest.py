"""
Data collected on one passage
=============================

"""

# as the UAV flies over a window it serves one device per slot;
# the tagged device earns bits only when it is picked and decoded
from uavharvest import Scenario, harvest_passage_estimate, harvested_data, load_config

cfg = load_config({"lambda": "1000/km2", "mu": "2 km", "w": "0.5 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 3.5, "v": "30 m/s", "tau": 1})

exact = harvested_data(cfg)
mc = harvest_passage_estimate(Scenario(cfg, seed=3), trials=2000)
print(f"D = {float(exact.value):.5f} (analytic), {mc.mean:.5f} +- {mc.std_error:.5f} (simulated)")

# a faster fleet spends proportionally less time above each device
for v in (10.0, 30.0, 60.0):
    print(f"v={v:4.0f} m/s  D={float(harvested_data(cfg.replace(v=v)).value):.5f}")
