"""How spectral entropy picks a rank.

Run: python demos/01_rank_selection.py
"""

import numpy as np

from arsvd import entropy_profile, normalize_spectrum, select_rank

# A spectrum with two dominant directions and a long weak tail.
s = np.array([4.0, 3.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05])
p = normalize_spectrum(s)
profile = entropy_profile(p)

print(" i   s_i     p_i     H(i)/H_total")
for i, (si, pi, hi) in enumerate(zip(s, p.p, profile.partial), 1):
    print(f"{i:2d}  {si:5.2f}  {pi:.4f}  {hi / profile.total:.4f}")

# Each tau keeps the shortest prefix carrying that share of the entropy.
for tau in (0.5, 0.7, 0.9, 1.0):
    sel = select_rank(profile, tau)
    print(f"tau {tau:.1f} -> k = {sel.k} (fraction {sel.achieved_fraction:.3f})")

# A flat spectrum spreads entropy evenly, so k grows linearly with tau.
flat = entropy_profile(normalize_spectrum(np.ones(10)))
print("flat, tau 0.9 ->", select_rank(flat, 0.9).k)
