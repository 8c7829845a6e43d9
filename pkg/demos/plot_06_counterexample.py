"""
A path without a deflator
=========================

A deterministic oscillator between 1/n and 1/(n+1) on [1-1/n, 1-1/(n+1)]
has finite variation, but its square root oscillates with amplitude of order
1/n and frequency of order sqrt(n), so its variation grows without bound,
like log n. The square root of an absorbed Brownian motion shows the same
failure in quadratic variation.
"""
from funcgen.diagnostics import variation_divergence_report

rep = variation_divergence_report([10, 100, 1000, 10000])
print(f"{'n_max':>6} {'TV(X)':>8} {'bound':>8} {'TV(sqrtX)':>10} {'lower':>8}")
for r in rep["rows"]:
    print(f"{r['n_max']:6d} {r['tv_x']:8.4f} {r['tv_x_bound']:8.4f} {r['tv_sqrt_x']:10.4f} {r['tv_sqrt_x_lower_bound']:8.4f}")
qv = rep["quadratic_variation"]
print(f"QV of sqrt|1-B|: {qv['mean_coarse']:.3f} at {qv['steps'][0]} steps, "
      f"{qv['mean_fine']:.3f} at {qv['steps'][1]}; grows on {qv['fraction_growing']:.1%} of paths")
