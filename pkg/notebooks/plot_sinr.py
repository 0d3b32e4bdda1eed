"""
Thermal noise next to interference
==================================

"""

# with receiver noise the transform picks up an exponential factor
import numpy as np
from uavharvest import (LaplaceEvaluator, coverage_probability, laplace_interference, laplace_noise,
                        load_config)

cfg = load_config({"lambda": "1e5/km2", "mu": "200 m", "w": "100 m", "l": "100 m", "h": "100 m",
                   "alpha": 2, "p": "23 dBm", "noise": "-174 dBm/Hz", "bandwidth": "10 MHz"})

ev = LaplaceEvaluator(cfg, exclude_center=True)
for s in np.geomspace(1e4, 1e12, 5):
    print(f"s={s:8.1e}  interference={float(laplace_interference(ev, s).value):.4f}"
          f"  noise={laplace_noise(s, cfg.noise):.4f}")

# interference dominates this dense network, so SINR and SIR coverage barely differ
sinr = coverage_probability(cfg)
sir = coverage_probability(cfg.replace(noise=0.0))
print(f"SINR coverage {float(sinr.value):.5f}, SIR coverage {float(sir.value):.5f}")
