"""
Outperformance over long horizons
=================================

With G nonnegative and G(mu0) = 1, the additive strategy has value
G(mu) + Gamma >= Gamma, so it has beaten the market for good once Gamma
exceeds 1. The multiplicative version needs a shifted function
(G + c)/(1 + c) with c large enough.
"""
import math

from funcgen import builtin, normalize
from funcgen.diagnostics import (
    check_additive_outperformance,
    check_multiplicative_outperformance,
    find_shift_c,
    horizon_bound,
)
from funcgen.market_models import ModelSpec, SimConfig, simulate_ensemble

paths = simulate_ensemble(ModelSpec("two_asset_martingale"), SimConfig(horizon=8.0, steps=4096, seed=0, ensemble_size=200))
H = normalize(builtin("entropy", 2), [0.5, 0.5])

for t in (1.0, 2.0, 4.0, 8.0):
    rep = check_additive_outperformance(H, paths, t)
    print(f"T* = {t:3.0f}: Gamma(T*) > 1 on {rep.fraction_condition:.3f} of paths; "
          f"V(T*) > 1 on {rep.fraction_outperform:.3f}")

###############################################################################
# The shift constant for an upper bound kappa on G and a margin epsilon.
print("c(kappa=log 2, eps=0.1) =", find_shift_c(math.log(2), 0.1))
rep = check_multiplicative_outperformance(H, paths, 8.0, 0.1)
print({k: round(v, 6) if isinstance(v, float) else v for k, v in rep.summary().items()})

###############################################################################
# If Gamma grows at least at rate eta, these horizons suffice.
print("entropy horizon, eta=0.1:", horizon_bound("entropy", [0.5, 0.5], 0.1))
print("quadratic horizon, eta=0.1:", horizon_bound("quadratic", [0.5, 0.5], 0.1))
print("quadratic, 0.1-diverse market:", horizon_bound("quadratic", [0.5, 0.5], 0.1, delta=0.1))
