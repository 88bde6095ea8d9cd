"""
How the ranking loss scores a projection, one term at a time
============================================================

A tiny three-species problem, small enough to check every number by
hand.  We project an acoustic embedding into the class-embedding space,
score each species, find the rank of the correct one, and assemble the
weighted hinge loss from its pieces.  One gradient step at the end
shows the loss actually moving.
"""

import numpy as np

from audiozsl import (
    AcousticEmbedding,
    ClassEmbedding,
    ClassEmbeddingTable,
    ProjectionModel,
    compatibility,
    hinge_term,
    project,
    rank_of_true_class,
    rank_penalty,
    warp_gradient,
    warp_loss,
)

# Three species, each described by a two-dimensional class vector.  Think
# of the two axes as "pitch" and "rhythm" scores from a field guide.
classes = ClassEmbeddingTable(
    source_name="toy",
    entries=(
        ClassEmbedding("warbler", np.array([1.0, 0.0])),
        ClassEmbedding("owl", np.array([0.0, 1.0])),
        ClassEmbedding("crow", np.array([0.7, 0.7])),
    ),
)

# One recording of a warbler, summarized as a three-dimensional acoustic
# embedding.  The model's job is to map these three numbers into the
# two-dimensional class space so that the warbler vector wins.
recording = AcousticEmbedding("xc001", "warbler", np.array([0.9, 0.1, 0.4]))

# A deliberately mediocre projection matrix: it leans toward the owl.
weights = np.array(
    [
        [0.2, 0.8],
        [0.5, 0.1],
        [0.3, 0.6],
    ]
)
model = ProjectionModel(weights=weights, audio_dim=3, class_dim=2, seed=0)

projected = project(model, recording)
print("projected acoustic embedding:", projected)

# Compatibility is a plain dot product between the projected recording
# and each species vector.  Higher means "sounds more like".
scores = {
    entry.species_id: compatibility(projected, entry) for entry in classes.entries
}
for species, score in sorted(scores.items(), key=lambda kv: -kv[1]):
    print(f"  score vs {species:8s} {score:+.4f}")

# The rank counts competitors that violate a unit margin against the
# true class, so rank 0 means cleanly separated and anything higher
# means trouble.
rank = rank_of_true_class(scores, "warbler")
print("rank of the true species:", rank)
print("harmonic penalty for that rank:", rank_penalty(rank))

# Each competitor contributes a hinge term: margin plus its score minus
# the true score, clipped at zero.  The true class's own term is always
# zero because its margin is zero.
for entry in classes.entries:
    term = hinge_term(scores, "warbler", entry.species_id)
    print(
        f"  hinge vs {entry.species_id:8s} margin={term.margin_indicator} "
        f"value={term.value:.4f}"
    )

# The batch loss averages penalty-weighted hinge sums over samples.  Our
# batch has a single sample, so the numbers above compose directly.
batch = [(recording, "warbler")]
loss = warp_loss(model, batch, classes)
print("loss before the step:", loss)

# One plain gradient step.  The loss is piecewise linear in the weights,
# so a small enough step is guaranteed to help while the active hinge
# set stays put.
gradient = warp_gradient(model, batch, classes)
stepped = ProjectionModel(
    weights=weights - 0.05 * gradient, audio_dim=3, class_dim=2, seed=0
)
print("loss after one step: ", warp_loss(stepped, batch, classes))
