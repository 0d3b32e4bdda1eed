"""
Bits collected equal bits delivered
===================================

"""

# the fleet as a whole carries R bits per slot over a window period T;
# spread over the K devices per window that must match the per-device D
from uavharvest import Scenario, check_identity_analytic, check_identity_simulated, load_config

cfg = load_config({"lambda": "1000/km2", "mu": "2 km", "w": "0.5 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 3.5, "v": "30 m/s", "tau": 1})

rep = check_identity_analytic(cfg)
print(f"analytic:  D*K/(R*T) = {rep.ratio:.12f}")

# the simulated check needs many passages to be informative
sim = check_identity_simulated(Scenario(cfg.replace(lam=1e-4), seed=4), trials=10_000)
print(f"simulated: ratio = {sim.ratio:.4f} +- {sim.ratio_error:.4f}, consistent: {sim.consistent()}")
