"""
The command-line workflow, end to end
=====================================

The same experiment the library runs in memory can be driven entirely
from the shell: preprocess metadata, split species, train and evaluate,
then inspect similarity grids.  This script builds a small dataset on
disk, then runs each subcommand the way a user would, printing the
command line before executing it in process.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from audiozsl import AcousticEmbedding, cli
from audiozsl.io import write_acoustic_embeddings

workdir = Path(tempfile.mkdtemp(prefix="audiozsl-tour-"))
print("working in", workdir)

# A metadata table for 24 species: two numeric traits, one categorical,
# one identity column we will exclude, and one too-sparse column.
rng = np.random.default_rng(7)
species = [f"bird{i:02d}" for i in range(24)]
lines = ["species,ring,mass,pitch,habitat,notes"]
for i, s in enumerate(species):
    mass = round(float(rng.uniform(10, 900)), 1)
    pitch = round(float(rng.uniform(1, 9)), 2)
    habitat = ("forest", "sea", "marsh")[i % 3]
    notes = "noisy" if i == 0 else ""
    lines.append(f"{s},{1000 + i},{mass},{pitch},{habitat},{notes}")
(workdir / "attributes.csv").write_text("\n".join(lines) + "\n")
(workdir / "exclude.txt").write_text("# identity columns\nring\n")

# Acoustic embeddings: 8 recordings per species, clustered around a
# species-specific center so that training has something to find.
centers = {s: rng.normal(size=12) for s in species}
samples = [
    AcousticEmbedding(f"{s}-{k}", s, centers[s] + rng.normal(scale=0.2, size=12))
    for s in species
    for k in range(8)
]
write_acoustic_embeddings(workdir / "audio.csv", samples)


def run(*argv):
    # flush so the narration lands before the command's own stderr output
    # even when this script's stdout is piped
    print()
    print("$ audiozsl " + " ".join(argv), flush=True)
    code = cli.main(list(argv))
    if code != 0:
        raise SystemExit(f"command failed with exit code {code}")


# Step 1: clean the metadata into a class-embedding table.  The audit
# file records exactly what the pipeline did.
run(
    "preprocess",
    "--input", str(workdir / "attributes.csv"),
    "--source-name", "traits",
    "--max-missing", "2",
    "--exclude-columns", str(workdir / "exclude.txt"),
    "--out", str(workdir / "prep"),
)
audit = json.loads((workdir / "prep" / "traits.audit.json").read_text())
print("audit says dropped:", audit["dropped_columns"])

# Step 2: carve the species into five folds with disjoint held-out sets.
run(
    "split",
    "--audio-embeddings", str(workdir / "audio.csv"),
    "--seed", "1",
    "--out", str(workdir / "manifest.json"),
)

# Step 3: train and evaluate.  Short on purpose; the report still has
# one block per fold plus the aggregate row.
run(
    "train-eval",
    "--audio-embeddings", str(workdir / "audio.csv"),
    "--manifest", str(workdir / "manifest.json"),
    "--class-source", f"traits={workdir / 'prep' / 'traits.classes.csv'}",
    "--epochs", "10",
    "--lr", "0.01",
    "--seed", "0",
    "--out", str(workdir / "run"),
)

# Step 4: the similarity grid of the class source, as a CSV.
run(
    "similarity",
    "--class-source", f"traits={workdir / 'prep' / 'traits.classes.csv'}",
    "--out", str(workdir / "sim"),
)

print()
print("files produced:")
for path in sorted(workdir.rglob("*")):
    if path.is_file():
        print(" ", path.relative_to(workdir))
