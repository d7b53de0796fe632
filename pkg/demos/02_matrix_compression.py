"""Compress single matrices with controlled spectra.

Run: python demos/02_matrix_compression.py
"""

from arsvd import SpectrumSpec, arsvd_compress, cost_model, make_matrix_with_spectrum
from arsvd import reconstruction_error

m, n = 96, 64
specs = {
    "step g=16": SpectrumSpec.step(64, 16, 1e-9),
    "power law 1.5": SpectrumSpec.power_law(64, 1.5),
    "noisy rank 8": SpectrumSpec.noisy_low_rank(64, 8, 0.05),
    "flat": SpectrumSpec.flat(64),
}

print(f"{'spectrum':15s} {'k':>3s} {'params':>13s} {'rel error':>9s}")
for name, spec in specs.items():
    w = make_matrix_with_spectrum(spec, m, n, seed=0)
    factors, sel = arsvd_compress(w, 0.9)
    cost = cost_model(m, n, factors.k)
    rel = reconstruction_error(w, factors) / (spec.values() ** 2).sum() ** 0.5
    flag = " (inflates)" if cost.inflates else ""
    print(f"{name:15s} {factors.k:3d} {cost.dense_params:6d}->{cost.factored_params:6d} "
          f"{rel:9.2e}{flag}")

# Concentrated spectra get small ranks; a flat one keeps 90% of its
# directions, which costs more than the dense matrix.
