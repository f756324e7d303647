"""Random search over weight-(2,2) polynomial pairs on a small lattice.

Every hit is a valid CSS code; keep the ones with k >= 2 and d >= 3.
"""

from tbcodes.harness import random_code_search

found = random_code_search(2, 3, 2, 2, 6, trials=2000, seed=0, target=lambda k, d: k >= 2 and d >= 3)
print(f"{len(found)} distinct codes with k>=2, d>=3 on l=2, m=3")
for spec, k, d in found[:5]:
    print(f"  [[{2 * spec.l * spec.m},{k},{d}]]  {spec}")
