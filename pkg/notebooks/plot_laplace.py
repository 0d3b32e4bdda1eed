"""
Laplace transform of the shot noise
===================================

"""

# the analytic transform is an infinite product over activation windows,
# truncated once the remaining factors are provably close to one
import numpy as np
from uavharvest import LaplaceEvaluator, Scenario, empirical_laplace, load_config, laplace_interference

cfg = load_config({"lambda": "1000/km2", "mu": "2 km", "w": "0.25 km", "l": "0.5 km",
                   "h": "0.25 km", "alpha": 3.0, "d_ref": "1 km"})
s = np.geomspace(1e-3, 1.0, 6)

# one evaluator caches the node geometry, so a whole grid of s is cheap
ev = LaplaceEvaluator(cfg, exclude_center=True)
exact = laplace_interference(ev, s)

# same quantity by simulation, devices drawn window by window
mc = empirical_laplace(Scenario(cfg, seed=1), s, trials=20_000, exclude_center=True)

for x, a, e in zip(s, exact.value, mc):
    print(f"s={x:8.3g}  analytic={a:.4f}  simulated={e.mean:.4f} +- {e.std_error:.4f}")

# interferers sit beyond one reference length, so a steeper path loss
# weakens them and the transform moves toward one
for alpha in (2.5, 3.0, 3.5):
    v = laplace_interference(LaplaceEvaluator(cfg.replace(alpha=alpha), exclude_center=True), 0.1)
    print(f"alpha={alpha}: L(0.1) = {float(v.value):.4f}")
