"""
Ingest a saved count file
=========================

Measurement counts can be saved to JSON and reconstructed later without
the original state object. This script simulates a maximally entangled
two-qubit run, writes the counts and the reference matrix to disk, then
reconstructs from the file alone and prints the ingestion report. The
same flow is available from the shell as
``tomofix reconstruct counts.json --algos eo --reference truth.json``.
"""

import json
from pathlib import Path

import numpy as np

from tomofix.bench import reconstruct_file
from tomofix.density import DensityMatrix, save_density_matrix
from tomofix.measurement import cube_projectors, save_count_record, simulate_counts

OUT_DIR = Path("demo_output")
OUT_DIR.mkdir(exist_ok=True)

ket = np.zeros(4)
ket[0] = ket[3] = 1.0 / np.sqrt(2.0)
bell = DensityMatrix.from_matrix(np.outer(ket, ket))

record = simulate_counts(bell, cube_projectors(2), 1778, seed=5)
counts_path = OUT_DIR / "bell_counts.json"
reference_path = OUT_DIR / "bell_truth.json"
save_count_record(record, counts_path)
save_density_matrix(bell, reference_path)
print(f"wrote {counts_path} and {reference_path}")

estimate, info = reconstruct_file(
    counts_path,
    algorithm="eo",
    reference_path=reference_path,
    out_path=OUT_DIR / "bell_estimate.json",
)
print(json.dumps(info, indent=2, sort_keys=True))
print("estimate eigenvalues:", np.round(np.linalg.eigvalsh(estimate.matrix)[::-1], 4))
