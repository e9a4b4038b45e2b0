"""The interchange formats and the command-line pipeline.

Feature matrices travel as little-endian float32 binary (magic PCPL), model
checkpoints as CRC-guarded float64 binary (magic PCPM), labels as plain text
and proportions/configs as JSON. Any external feature extractor that writes
these files can drive the solver through `pcpl assign` without touching
Python.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from pcpl.core import FeatureMatrix, ProportionSpec
from pcpl.io import read_features, write_features, write_proportions

work = Path(tempfile.mkdtemp(prefix="pcpl_demo_"))

# a feature file round-trips bit-exactly at float32 precision
matrix = FeatureMatrix(np.array([[1.0, 4.0], [2.0, 0.5], [-1.0, 3.0], [0.25, -2.0]]))
write_features(matrix, work / "target.pcpl")
again = read_features(work / "target.pcpl")
print("round-trip exact:", np.array_equal(matrix.data, again.data))
print("file bytes:", (work / "target.pcpl").read_bytes()[:16].hex(), "...")

# centroids are just a features file with one row per class
write_features(FeatureMatrix(np.array([[0.0, 0.0], [3.0, 3.0]])), work / "centroids.pcpl")
write_proportions(ProportionSpec([0.5, 0.5]), work / "proportions.json")

# the one-shot assignment entry point, as an external tool would call it
cmd = [
    sys.executable, "-m", "pcpl", "assign",
    "--features", str(work / "target.pcpl"),
    "--centroid-file", str(work / "centroids.pcpl"),
    "--proportions", str(work / "proportions.json"),
    "--out-labels", str(work / "labels.txt"),
]
out = subprocess.run(cmd, capture_output=True, text=True, check=True)
print("\n$", " ".join(cmd[2:]))
print(json.dumps(json.loads(out.stdout), indent=2))
print("labels file:", (work / "labels.txt").read_text().split())
