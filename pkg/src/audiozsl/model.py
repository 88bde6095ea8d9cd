"""Linear compatibility model and its ranking hinge loss.

The model is a single linear map taking an acoustic embedding into the
class-embedding space; compatibility between a projected sample and a
class is their dot product.  Training minimises a rank-weighted hinge
loss: per sample, every class whose score comes within the unit margin of
the true class counts as a violator, the violator count is the sample's
rank, and the summed hinge terms are weighted by harmonic(rank)/rank
(zero when the rank is zero).

Everything here is a pure function of its inputs and all math runs in
float64.  The array-level entry point ``batch_loss_and_gradient`` carries
the full formula; the object-level wrappers validate and delegate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import AcousticEmbedding, ClassEmbedding, ClassEmbeddingTable, stack_acoustic_vectors

# Lazily extended harmonic-number cache: _harmonic[r] = sum_{i=1..r} 1/i.
# Extension uses Neumaier-compensated summation (raw accumulator and carry
# kept separately) so cached values stay within ~1 ulp of the exact
# harmonic numbers even for r in the tens of thousands.
_harmonic: list[float] = [0.0]
_harmonic_total: float = 0.0
_harmonic_carry: float = 0.0


def rank_penalty(rank: int) -> float:
    """Harmonic penalty for a margin-violator count: sum of 1/i, i=1..rank."""
    rank = int(rank)
    if rank < 0:
        raise ValueError(f"rank must be non-negative, got {rank}")
    global _harmonic_total, _harmonic_carry
    if rank >= len(_harmonic):
        total, carry = _harmonic_total, _harmonic_carry
        for i in range(len(_harmonic), rank + 1):
            term = 1.0 / i
            fresh = total + term
            if abs(total) >= term:
                carry += (total - fresh) + term
            else:
                carry += (term - fresh) + total
            total = fresh
            _harmonic.append(total + carry)
        _harmonic_total, _harmonic_carry = total, carry
    return _harmonic[rank]


@dataclass(frozen=True)
class ProjectionModel:
    """Weights of the acoustic-to-class-space projection plus provenance."""

    weights: np.ndarray  # (audio_dim, class_dim)
    audio_dim: int
    class_dim: int
    seed: int
    trained_epochs: int = 0

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64, copy=True)
        if weights.ndim != 2 or weights.shape != (self.audio_dim, self.class_dim):
            raise ValueError(
                f"weight matrix shape {weights.shape} does not match declared "
                f"dimensions ({self.audio_dim}, {self.class_dim})"
            )
        if not np.all(np.isfinite(weights)):
            raise ValueError("weight matrix contains non-finite entries")
        if self.trained_epochs < 0:
            raise ValueError("trained_epochs must be non-negative")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


def _uniform_weights(audio_dim: int, class_dim: int, rng: np.random.Generator) -> np.ndarray:
    # Fan-in scaling: i.i.d. uniform on [-1/sqrt(audio_dim), +1/sqrt(audio_dim)].
    bound = 1.0 / np.sqrt(audio_dim)
    return rng.uniform(-bound, bound, size=(audio_dim, class_dim))


def init_projection(audio_dim: int, class_dim: int, seed: int) -> ProjectionModel:
    """Fresh model with seeded fan-in-scaled uniform weights."""
    if audio_dim <= 0 or class_dim <= 0:
        raise ValueError(f"dimensions must be positive, got ({audio_dim}, {class_dim})")
    weights = _uniform_weights(audio_dim, class_dim, np.random.default_rng(seed))
    return ProjectionModel(weights=weights, audio_dim=audio_dim, class_dim=class_dim, seed=seed)


def project(model: ProjectionModel, sample: AcousticEmbedding) -> np.ndarray:
    """Map an acoustic embedding into class-embedding space (weights^T @ vector)."""
    if sample.dim != model.audio_dim:
        raise ValueError(
            f"acoustic embedding {sample.sample_id!r} has length {sample.dim}, "
            f"expected {model.audio_dim}"
        )
    return model.weights.T @ sample.vector


def compatibility(projected: np.ndarray, class_embedding: ClassEmbedding) -> float:
    """Dot-product compatibility between a projected sample and a class vector."""
    projected = np.asarray(projected, dtype=np.float64)
    if projected.ndim != 1 or projected.shape[0] != class_embedding.dim:
        raise ValueError(
            f"projected vector has length {projected.shape}, expected "
            f"({class_embedding.dim},) to match class {class_embedding.species_id!r}"
        )
    return float(projected @ class_embedding.vector)


@dataclass(frozen=True)
class HingeTerm:
    """One margin-hinge term: indicator is 0 exactly for the true class."""

    margin_indicator: int
    value: float


def hinge_term(scores: Mapping[str, float], true_class: str, candidate: str) -> HingeTerm:
    """Margin hinge for one candidate: indicator + score(candidate) - score(true)."""
    if true_class not in scores:
        raise ValueError(f"true class {true_class!r} not present in scores")
    if candidate not in scores:
        raise ValueError(f"candidate class {candidate!r} not present in scores")
    indicator = 0 if candidate == true_class else 1
    return HingeTerm(
        margin_indicator=indicator,
        value=indicator + scores[candidate] - scores[true_class],
    )


def rank_of_true_class(scores: Mapping[str, float], true_class: str) -> int:
    """Number of competitor classes violating the unit margin against the true class.

    A competitor y counts when 1 + score(y) - score(true) is strictly
    positive; ties sitting exactly on the margin boundary do not count.
    """
    if true_class not in scores:
        raise ValueError(f"true class {true_class!r} not present in scores")
    true_score = scores[true_class]
    return sum(
        1
        for species, score in scores.items()
        if species != true_class and 1.0 + score - true_score > 0.0
    )


def batch_loss_and_gradient(
    weights: np.ndarray,
    sample_matrix: np.ndarray,
    true_columns: np.ndarray,
    class_matrix: np.ndarray,
    *,
    need_gradient: bool = True,
) -> tuple[float, np.ndarray | None]:
    """Vectorized loss (and optionally gradient) over a batch.

    ``sample_matrix`` is (n, audio_dim), ``class_matrix`` is
    (k, class_dim) and ``true_columns`` holds each sample's row index into
    the class matrix.  Scores are sample @ weights @ class^T; per sample,
    hinge terms are 1 + score(y) - score(true) for every class (exactly 0
    for the true class itself), the rank is the count of strictly positive
    competitor terms, and the sample's summed positive hinge terms are
    weighted by rank_penalty(rank)/rank.  The mean over the batch is the
    loss.

    The gradient treats each rank weight as a constant of the weights
    (exact almost everywhere, since the weight is piecewise constant):
    every active term contributes sample (outer) (class(y) - class(true)).
    """
    n_samples = sample_matrix.shape[0]
    scores = (sample_matrix @ weights) @ class_matrix.T  # (n, k)
    true_scores = scores[np.arange(n_samples), true_columns]
    hinges = 1.0 + scores - true_scores[:, None]
    hinges[np.arange(n_samples), true_columns] = 0.0  # true-class term is identically 0
    active = hinges > 0.0
    ranks = active.sum(axis=1)
    sample_weights = np.array(
        [rank_penalty(r) / r if r > 0 else 0.0 for r in ranks], dtype=np.float64
    )
    hinge_sums = np.where(active, hinges, 0.0).sum(axis=1)
    loss = float(sample_weights @ hinge_sums) / n_samples

    if not need_gradient:
        return loss, None
    # d loss / d weights = (1/n) sum_n w_n sum_{active y} x_n (x) (c_y - c_true)
    active_f = active.astype(np.float64)
    class_sums = active_f @ class_matrix  # (n, class_dim)
    class_sums -= ranks[:, None] * class_matrix[true_columns]
    gradient = sample_matrix.T @ (sample_weights[:, None] / n_samples * class_sums)
    return loss, gradient


def _prepare_batch(
    model: ProjectionModel,
    batch: Sequence[tuple[AcousticEmbedding, str]],
    classes: ClassEmbeddingTable,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not batch:
        raise ValueError("batch is empty")
    if classes.class_dim != model.class_dim:
        raise ValueError(
            f"class table {classes.source_name!r} has dimension {classes.class_dim}, "
            f"model expects {model.class_dim}"
        )
    samples = [sample for sample, _ in batch]
    sample_matrix = stack_acoustic_vectors(samples)
    if sample_matrix.shape[1] != model.audio_dim:
        raise ValueError(
            f"acoustic embeddings have length {sample_matrix.shape[1]}, "
            f"expected {model.audio_dim}"
        )
    order = classes.species_ids
    column = {species: i for i, species in enumerate(order)}
    true_columns = np.empty(len(batch), dtype=np.intp)
    for row, (sample, true_class) in enumerate(batch):
        if true_class not in column:
            raise ValueError(
                f"true class {true_class!r} of sample {sample.sample_id!r} is not in "
                f"class table {classes.source_name!r}"
            )
        true_columns[row] = column[true_class]
    return sample_matrix, true_columns, classes.matrix()


def warp_loss(
    model: ProjectionModel,
    batch: Sequence[tuple[AcousticEmbedding, str]],
    classes: ClassEmbeddingTable,
) -> float:
    """Rank-weighted hinge loss of a batch against every class in the table."""
    sample_matrix, true_columns, class_matrix = _prepare_batch(model, batch, classes)
    loss, _ = batch_loss_and_gradient(
        model.weights, sample_matrix, true_columns, class_matrix, need_gradient=False
    )
    return loss


def warp_gradient(
    model: ProjectionModel,
    batch: Sequence[tuple[AcousticEmbedding, str]],
    classes: ClassEmbeddingTable,
) -> np.ndarray:
    """Gradient of ``warp_loss`` with respect to the weight matrix."""
    _, gradient = warp_loss_and_gradient(model, batch, classes)
    return gradient


def warp_loss_and_gradient(
    model: ProjectionModel,
    batch: Sequence[tuple[AcousticEmbedding, str]],
    classes: ClassEmbeddingTable,
) -> tuple[float, np.ndarray]:
    """Loss and gradient in one pass (they share the score computation)."""
    sample_matrix, true_columns, class_matrix = _prepare_batch(model, batch, classes)
    loss, gradient = batch_loss_and_gradient(
        model.weights, sample_matrix, true_columns, class_matrix
    )
    return loss, gradient


def predict(
    model: ProjectionModel,
    sample: AcousticEmbedding,
    candidates: ClassEmbeddingTable,
) -> str:
    """Most compatible candidate species; ties go to the smaller species id."""
    projected = project(model, sample)
    if candidates.class_dim != model.class_dim:
        raise ValueError(
            f"class table {candidates.source_name!r} has dimension "
            f"{candidates.class_dim}, model expects {model.class_dim}"
        )
    best_id: str | None = None
    best_score = -np.inf
    for entry in sorted(candidates.entries, key=lambda e: e.species_id):
        score = float(projected @ entry.vector)
        if score > best_score:
            best_id, best_score = entry.species_id, score
    assert best_id is not None  # table is never empty
    return best_id


def predict_batch(
    model: ProjectionModel,
    samples: Sequence[AcousticEmbedding],
    candidates: ClassEmbeddingTable,
) -> list[str]:
    """Vectorized ``predict`` over many samples (same tie-break rule)."""
    if candidates.class_dim != model.class_dim:
        raise ValueError(
            f"class table {candidates.source_name!r} has dimension "
            f"{candidates.class_dim}, model expects {model.class_dim}"
        )
    sample_matrix = stack_acoustic_vectors(samples)
    if sample_matrix.shape[1] != model.audio_dim:
        raise ValueError(
            f"acoustic embeddings have length {sample_matrix.shape[1]}, "
            f"expected {model.audio_dim}"
        )
    ordered = sorted(candidates.entries, key=lambda e: e.species_id)
    class_matrix = np.stack([e.vector for e in ordered])
    scores = (sample_matrix @ model.weights) @ class_matrix.T
    winners = scores.argmax(axis=1)  # argmax keeps the first (smallest id) on ties
    return [ordered[i].species_id for i in winners]
