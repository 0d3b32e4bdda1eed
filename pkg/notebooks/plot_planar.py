"""
Windows on a plane
==================

"""

# rows of UAVs spaced nu apart add interferers from neighbouring lanes
from uavharvest import coverage_probability, coverage_probability_2d, load_config, mean_rate_2d

cfg = load_config({"lambda": "100/km2", "mu": "1 km", "w": "0.25 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 4, "tau": 1})

line = float(coverage_probability(cfg).value)
for nu in (1e3, 3e3, 1e4, 1e5):
    plane = coverage_probability_2d(cfg.replace(mode="2d", nu=nu))
    print(f"nu={nu:8.0f} m  2-D={float(plane.value):.6f}  1-D={line:.6f}")

# far apart lanes no longer interfere and the line model is recovered
print("2-D rate at nu = 1 km:", float(mean_rate_2d(cfg.replace(mode="2d", nu=1e3)).value))
