"""
From a messy field-guide table to class embeddings
==================================================

Raw species metadata arrives as a grid of numbers, category names and
holes.  This script walks the cleaning pipeline stage by stage on a
hand-written table, prints what each stage changes, and finishes with
the cosine-similarity grid of the resulting class embeddings.
"""

import numpy as np

from audiozsl import (
    RawAttributeTable,
    concat_tables,
    cosine_similarity_matrix,
    drop_sparse_columns,
    encode_strings,
    impute_missing,
    minmax_normalize,
    preprocess_attribute_table,
)

# Six species and five columns.  "ring_id" is an identity column we never
# want as a feature, "wingspan" has a hole, "coastal" is a yes/no string,
# and "notes" is missing nearly everywhere.
table = RawAttributeTable(
    species_ids=("avocet", "bittern", "crake", "dunlin", "eider", "fulmar"),
    column_names=("ring_id", "mass_g", "wingspan_cm", "coastal", "notes"),
    rows=(
        (101.0, 275.0, 78.0, "yes", None),
        (102.0, 1150.0, 125.0, "no", None),
        (103.0, 160.0, None, "no", None),
        (104.0, 55.0, 38.0, "yes", "tk-tk"),
        (105.0, 2150.0, 102.0, "yes", None),
        (106.0, 730.0, 107.0, "yes", None),
    ),
)

# Stage by stage, using the low-level pieces.  First the sparse "notes"
# column goes: five of six cells are missing and the drop threshold here
# is two.
dropped = drop_sparse_columns(table, max_missing=2)
gone = tuple(c for c in table.column_names if c not in dropped.column_names)
print("dropped columns:", gone)

# Remaining holes are filled in: numeric columns get 0.0, string columns
# get the empty string.
imputed = impute_missing(dropped)
print("wingspan column after imputation:", [r[2] for r in imputed.rows])

# String columns become integer codes in lexicographic order, so "no"
# maps to 0 and "yes" to 1.
encoded, encodings = encode_strings(imputed)
print("label encodings:", encodings)

# Min-max scaling sends every column to [0, 1].  Constant columns would
# collapse to all zeros; none remain here.
normalized = minmax_normalize(encoded, source_name="traits")
print("normalized first row:", np.round(normalized.entries[0].vector, 3))

# The one-call pipeline does all of the above plus an exclusion list for
# identity columns, and returns an audit trail of what happened.
classes, audit = preprocess_attribute_table(
    table, max_missing=2, exclude_columns=("ring_id",), source_name="traits"
)
print("pipeline audit:")
print("  excluded:", audit.excluded_columns)
print("  dropped: ", audit.dropped_columns)
print("  encoded: ", dict(audit.label_encodings))
print("  ranges:  ", {k: tuple(v) for k, v in audit.column_ranges.items()})

# Two independent sources describing the same species can be glued
# side by side into a wider embedding.
calls = preprocess_attribute_table(
    RawAttributeTable(
        species_ids=table.species_ids,
        column_names=("call_pitch", "call_len"),
        rows=((8.0, 0.4), (2.0, 2.0), (5.0, 0.8), (7.0, 0.3), (3.0, 1.5), (4.0, 1.0)),
    ),
    source_name="calls",
)[0]
combined = concat_tables([classes, calls])
print("combined source:", combined.source_name, "dim", combined.class_dim)

# Finally the similarity grid: which species look alike through the lens
# of their metadata?  The diagonal is 1 and the grid is symmetric.
sim = cosine_similarity_matrix(combined)
print("similarity grid (rounded):")
header = " ".join(f"{s[:5]:>6s}" for s in sim.species_ids)
print(f"{'':8s}{header}")
for species, row in zip(sim.species_ids, sim.values):
    cells = " ".join(f"{v:6.2f}" for v in row)
    print(f"{species:8s}{cells}")
