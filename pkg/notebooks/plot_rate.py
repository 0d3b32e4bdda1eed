"""
Mean rate and the choice of modulation
======================================

"""

# rate trades a larger constellation against a lower chance of decoding it
import numpy as np
from uavharvest import ModulationRule, coverage_probability, load_config, mean_rate

cfg = load_config({"lambda": "100/km2", "mu": "1 km", "w": "0.25 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 4})

taus = np.geomspace(0.1, 1000, 9)
shannon = ModulationRule("shannon")
for tau in taus:
    c = cfg.replace(tau=float(tau))
    p = float(coverage_probability(c).value)
    print(f"tau={tau:8.2f}  P={p:.4f}  floor rule={float(mean_rate(c).value):.4f}"
          f"  log2(1+tau)={float(mean_rate(c, shannon).value):.4f}")

# a fixed constellation ignores tau when counting bits
print("16-QAM:", float(mean_rate(cfg.replace(tau=15.0), ModulationRule.fixed(16)).value))
