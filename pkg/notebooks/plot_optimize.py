"""
Tuning the window length
========================

"""

# a coarse sweep brackets the best window, golden section refines it
from uavharvest import load_config, optimize_window

cfg = load_config({"lambda": "10/km2", "mu": "2 km", "w": "0.5 km", "l": "0.5 km",
                   "h": "0.2 km", "alpha": 4, "tau": 1})

for lam in (1e-5, 2e-5, 3e-5):
    opt = optimize_window(cfg.replace(lam=lam))
    print(f"lambda={lam * 1e6:.0f}/km2  w*={opt.w_star:7.1f} m  w*/mu={opt.w_over_mu:.3f}"
          f"  objective={opt.value:.4f}  flags={sorted(opt.flags)}")

# denser deployments fill a window quickly, so the best window shrinks
