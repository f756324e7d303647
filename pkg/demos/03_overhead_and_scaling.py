"""Encoding rate versus distance for TB codes and surface codes.

Fits R(d) = alpha d^-beta to each family and compares qubit counts for
storing four logical qubits at distance 7.
"""

from tbcodes.codes import named_code, nominal_distance
from tbcodes.harness import code_rate, fit_rate_scaling, qubit_overhead

# Nominal distances; tb88 actually has a weight-6 logical (see README).
tb = [named_code(n) for n in ("tb24", "tb56", "tb88")]
tb_fit = fit_rate_scaling([(nominal_distance(c), code_rate(c)) for c in tb])
surf_fit = fit_rate_scaling([(d, 1 / d**2) for d in (3, 5, 7)])

for c in tb:
    print(f"{c.name}: n={c.n} k={c.k} d={nominal_distance(c)} R={code_rate(c):.4f}")
print(f"TB fit:      R = {tb_fit.alpha:.3f} d^-{tb_fit.beta:.3f}")
print(f"surface fit: R = {surf_fit.alpha:.3f} d^-{surf_fit.beta:.3f}")

tb88 = qubit_overhead(named_code("tb88"))[1]
surf = 4 * qubit_overhead(named_code("surface7"))[1]
print(f"\n4 logical qubits at d=7: TB {tb88} physical, surface {surf} physical ({surf / tb88:.2f}x)")
