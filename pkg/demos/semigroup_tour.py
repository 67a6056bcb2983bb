"""Spectral picture of the linear part on the unit square.

The truncated generator splits into a symmetric damping part and a skew
coupling part.  Its symmetric part is bounded by -min(mu, eta) * lambda_min,
the propagator contracts, and the resolvent along the imaginary axis stays
bounded as the cutoff grows.

Run: python demos/semigroup_tour.py
"""
from acouwave.basis import RectDomain, SpectralGrid
from acouwave.semigroup_lab import (assemble_generator, decomposition_check, dissipativity_margin, propagator_decay,
                                    resolvent_sweep)

MU, ETA = 0.1, 0.1
square = RectDomain((1.0, 1.0))

print("modes  margin     -min(mu,eta)*lambda_min  skew residual")
for m in (4, 8, 16):
    gen = assemble_generator(SpectralGrid(square, m), MU, ETA)
    dec = decomposition_check(gen)
    print(f"{m:5d}  {dissipativity_margin(gen):.6f}   {dec['maxEigSymmetric']:.6f}              "
          f"{dec['skewResidual']:.1e}")

gen = assemble_generator(SpectralGrid(square, 8), MU, ETA)
prop = propagator_decay(gen, horizon=10.0, samples=11)
print("\n t     ||exp(tA)||")
for t, n in zip(prop["times"], prop["norms"]):
    print(f"{t:4.1f}  {n:.3e}")
print(f"fitted decay rate {prop['fitGamma']:.4f}, margin {gen.eta_tilde:.4f}")

print("\nresolvent sweep at 8 and 16 modes per axis")
sweeps = [resolvent_sweep(assemble_generator(SpectralGrid(square, m), MU, ETA)) for m in (8, 16)]
print(" lambda   ||R||(8)   ||R||(16)  lam||R||(8)  lam||R||(16)")
for a, b in zip(*sweeps):
    print(f"{a['lambda']:7.0f}  {a['resolvent_norm']:.5f}    {b['resolvent_norm']:.5f}    "
          f"{a['lambda_times_norm']:.5f}      {b['lambda_times_norm']:.5f}")
peak = [max(r["lambda_times_norm"] for r in rows) for rows in sweeps]
print(f"relative change of the lambda*||R|| peak: {abs(peak[1] - peak[0]) / peak[0]:.2e}")
