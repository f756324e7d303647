"""A noisy memory experiment, step by step, then the packaged one-liner.

Circuit -> detector error model -> matching graph -> sampled shots ->
decoded logical failures.  tb12 is compared to the distance-3 surface code
at the same physical error rate.
"""

import numpy as np

from tbcodes.circuits import build_memory_circuit, entangling_layers_per_round
from tbcodes.codes import named_code
from tbcodes.decode import MemoryDecoder
from tbcodes.harness import run_memory_experiment
from tbcodes.logicals import logical_basis
from tbcodes.sim import extract_dem, sample_split

P = 1e-3
SHOTS = 20_000

code = named_code("tb12")
circuit = build_memory_circuit(code, logical_basis(code), rounds=3, noise=P)
print(f"qubits={circuit.num_qubits} detectors={circuit.num_detectors} observables={circuit.num_observables}")
print(f"entangling layers per round: {entangling_layers_per_round(circuit)}")

dem = extract_dem(circuit)
print(f"fault mechanisms: {len(dem.mechanisms)}")

decoder = MemoryDecoder.from_circuit(circuit, dem)
print(f"Z graph: {decoder.z_graph.num_nodes} nodes, {len(decoder.z_graph.edges)} edges")

det, obs = sample_split(circuit, SHOTS, seed=11)
pred = decoder.predict(det)
failures = int(np.any(pred != obs, axis=1).sum())
raw = int(np.any(obs != 0, axis=1).sum())
print(f"{SHOTS} shots: {raw} raw logical flips, {failures} after decoding")

print("\ncode        E/shots      p_L per round per logical")
for name in ("tb12", "surface3"):
    r = run_memory_experiment(name, P, shots=100_000, seed=0)
    lo, hi = r.p_l_interval
    print(f"{r.code:<10} {r.failures:>4}/{r.shots}  {r.p_l:.2e}  [{lo:.2e}, {hi:.2e}]")
