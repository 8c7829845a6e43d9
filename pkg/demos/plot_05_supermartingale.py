"""
Lyapunov functions are supermartingales
=======================================

When the market weights are martingales, G(mu) = G(mu0) - Gamma + martingale.
For entropy Gamma increases, so the mean of G(mu(t)) falls; for the maximum
weight Gamma decreases and the mean rises.
"""
from funcgen import builtin
from funcgen.diagnostics import supermartingale_mc_test
from funcgen.market_models import ModelSpec, SimConfig

spec = ModelSpec("two_asset_martingale", (1.0, 2.0))
cfg = SimConfig(steps=1024, seed=0, ensemble_size=10000)
for name, G in (("entropy", builtin("entropy", 2)), ("max weight", builtin("large_cap", 2, m=1))):
    r = supermartingale_mc_test(G, spec, cfg)
    print(f"{name:10s} means {[round(m, 4) for m in r['means']]}")
    print(f"{'':10s} nonincreasing within 3 SE: {r['nonincreasing']}, nondecreasing: {r['nondecreasing']}")
