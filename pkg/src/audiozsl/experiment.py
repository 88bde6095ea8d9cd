"""Five-fold zero-shot experiment protocol.

Species are shuffled once and cut into ten contiguous buckets; buckets
one to five serve as the development sets of the five folds, buckets six
to ten as their test sets, and each fold trains on all remaining species
(roughly an 80/10/10 split).  Development and test species are therefore
disjoint across all folds, which is what makes the evaluation zero-shot:
no model parameter update ever sees a held-out species.

Training is plain SGD on the rank-weighted hinge loss with a fixed
learning rate, shuffling samples each epoch with the run's seeded
generator.  After every epoch the current weights are scored on the
development species and the snapshot with the best dev macro F1 (earliest
epoch on ties) is kept for the final evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import AcousticEmbedding, ClassEmbeddingTable, stack_acoustic_vectors
from .metrics import MetricsReport, PredictionRecord, aggregate_splits, compute_metrics
from .model import ProjectionModel, _uniform_weights, batch_loss_and_gradient, predict_batch


@dataclass(frozen=True)
class Fold:
    """One train/dev/test partition of the species set."""

    train_species: frozenset[str]
    dev_species: frozenset[str]
    test_species: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "train_species", frozenset(self.train_species))
        object.__setattr__(self, "dev_species", frozenset(self.dev_species))
        object.__setattr__(self, "test_species", frozenset(self.test_species))
        if not (self.train_species and self.dev_species and self.test_species):
            raise ValueError("every fold role needs at least one species")
        if (
            self.train_species & self.dev_species
            or self.train_species & self.test_species
            or self.dev_species & self.test_species
        ):
            raise ValueError("train/dev/test species of a fold must be disjoint")

    @property
    def all_species(self) -> frozenset[str]:
        return self.train_species | self.dev_species | self.test_species


@dataclass(frozen=True)
class SplitManifest:
    """Five folds whose dev sets and test sets are mutually disjoint."""

    folds: tuple[Fold, ...]
    seed: int

    def __post_init__(self):
        folds = tuple(self.folds)
        if len(folds) != 5:
            raise ValueError(f"expected 5 folds, got {len(folds)}")
        universe = folds[0].all_species
        for i, fold in enumerate(folds):
            if fold.all_species != universe:
                raise ValueError(f"fold {i + 1} does not cover the same species set")
        held_out: list[tuple[str, frozenset[str]]] = []
        for i, fold in enumerate(folds):
            held_out.append((f"dev set of fold {i + 1}", fold.dev_species))
            held_out.append((f"test set of fold {i + 1}", fold.test_species))
        for a in range(len(held_out)):
            for b in range(a + 1, len(held_out)):
                if held_out[a][1] & held_out[b][1]:
                    raise ValueError(
                        f"{held_out[a][0]} overlaps {held_out[b][0]}"
                    )
        object.__setattr__(self, "folds", folds)

    @property
    def species(self) -> frozenset[str]:
        return self.folds[0].all_species


def make_splits(species: Iterable[str], seed: int) -> SplitManifest:
    """Shuffle species and cut them into the five-fold manifest.

    The species set (order of the input is irrelevant) is permuted with a
    generator seeded by ``seed`` and split into ten contiguous buckets as
    equal as possible; buckets 1-5 become dev sets, buckets 6-10 test
    sets.  At least 20 species are required so that all ten buckets are
    non-empty with two or more members.
    """
    unique = sorted(set(species))
    if len(unique) < 20:
        raise ValueError(f"too few species: need at least 20, got {len(unique)}")
    rng = np.random.default_rng(seed)
    shuffled = [unique[i] for i in rng.permutation(len(unique))]
    base, extra = divmod(len(shuffled), 10)
    buckets: list[list[str]] = []
    start = 0
    for b in range(10):
        size = base + (1 if b < extra else 0)
        buckets.append(shuffled[start : start + size])
        start += size
    folds = []
    for i in range(5):
        dev = frozenset(buckets[i])
        test = frozenset(buckets[i + 5])
        train = frozenset(shuffled) - dev - test
        folds.append(Fold(train_species=train, dev_species=dev, test_species=test))
    return SplitManifest(folds=tuple(folds), seed=seed)


@dataclass(frozen=True)
class TrainingConfig:
    """SGD hyperparameters; the defaults are the protocol's reference values."""

    epochs: int = 30
    learning_rate: float = 0.0001
    batch_size: int = 16
    seed: int = 0
    # Sensitivity switches; the reference protocol uses both defaults.
    # loss_class_scope: rank competitors during training are all training
    # species ("train") or only the species present in the batch ("batch").
    # dev_candidate_scope: epoch-end dev prediction chooses among dev
    # species only ("dev") or among every species in the table ("all").
    loss_class_scope: str = "train"
    dev_candidate_scope: str = "dev"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.loss_class_scope not in ("train", "batch"):
            raise ValueError(f"unknown loss_class_scope {self.loss_class_scope!r}")
        if self.dev_candidate_scope not in ("dev", "all"):
            raise ValueError(f"unknown dev_candidate_scope {self.dev_candidate_scope!r}")


@dataclass(frozen=True)
class EpochRecord:
    """State after one epoch: mean training loss and dev-set metrics."""

    epoch: int
    train_loss: float
    dev_metrics: MetricsReport

    def __post_init__(self):
        if not (np.isfinite(self.train_loss) and self.train_loss >= 0.0):
            raise ValueError(f"train_loss must be finite and non-negative, got {self.train_loss}")


@dataclass(frozen=True)
class TrainResult:
    """Final model, per-epoch history, and the best dev-F1 snapshot."""

    model: ProjectionModel
    history: tuple[EpochRecord, ...]
    best_model: ProjectionModel
    snapshots: tuple[ProjectionModel, ...] | None = None


def evaluate_zero_shot(
    model: ProjectionModel,
    samples: Sequence[AcousticEmbedding],
    candidates: ClassEmbeddingTable,
) -> tuple[MetricsReport, list[PredictionRecord]]:
    """Predict every sample among the candidate species and score the result."""
    predictions = predict_batch(model, samples, candidates)
    records = [
        PredictionRecord(
            sample_id=sample.sample_id,
            true_class=sample.species_id,
            predicted_class=predicted,
        )
        for sample, predicted in zip(samples, predictions)
    ]
    return compute_metrics(records, candidates.species_ids), records


def train(
    fold: Fold,
    audio: Sequence[AcousticEmbedding],
    classes: ClassEmbeddingTable,
    cfg: TrainingConfig,
    *,
    keep_snapshots: bool = False,
) -> TrainResult:
    """SGD on the fold's training species with per-epoch dev evaluation.

    The gradient only ever sees training-species samples and class
    embeddings; dev species enter through the epoch-end evaluation and
    test species not at all.  One seeded generator drives weight
    initialization and every epoch's shuffle, so a fixed seed reproduces
    the run bit for bit.
    """
    missing_classes = sorted(fold.all_species - set(classes.species_ids))
    if missing_classes:
        raise ValueError(
            f"class table {classes.source_name!r} is missing fold species: "
            f"{', '.join(missing_classes)}"
        )
    stray = sorted({s.species_id for s in audio} - fold.all_species)
    if stray:
        raise ValueError(
            f"audio samples belong to species outside the fold: {', '.join(stray)}"
        )

    train_samples = [s for s in audio if s.species_id in fold.train_species]
    dev_samples = [s for s in audio if s.species_id in fold.dev_species]
    if not train_samples:
        raise ValueError("fold has no training samples")
    if cfg.epochs > 0 and not dev_samples:
        raise ValueError("fold has no development samples to select a model on")

    train_classes = classes.subset(fold.train_species)
    if cfg.dev_candidate_scope == "dev":
        dev_candidates = classes.subset(fold.dev_species)
    else:
        dev_candidates = classes
    sample_matrix = stack_acoustic_vectors(train_samples)
    audio_dim = sample_matrix.shape[1]
    class_dim = classes.class_dim
    column = {species: i for i, species in enumerate(train_classes.species_ids)}
    true_columns = np.array(
        [column[s.species_id] for s in train_samples], dtype=np.intp
    )
    class_matrix = train_classes.matrix()

    rng = np.random.default_rng(cfg.seed)
    weights = _uniform_weights(audio_dim, class_dim, rng)

    def snapshot(epoch: int) -> ProjectionModel:
        return ProjectionModel(
            weights=weights.copy(),
            audio_dim=audio_dim,
            class_dim=class_dim,
            seed=cfg.seed,
            trained_epochs=epoch,
        )

    history: list[EpochRecord] = []
    snapshots: list[ProjectionModel] = []
    best_model = snapshot(0)
    best_f1 = -1.0
    n_train = len(train_samples)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        loss_total = 0.0
        for start in range(0, n_train, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            batch_true = true_columns[batch]
            if cfg.loss_class_scope == "batch":
                present, batch_true = np.unique(batch_true, return_inverse=True)
                batch_classes = class_matrix[present]
            else:
                batch_classes = class_matrix
            loss, gradient = batch_loss_and_gradient(
                weights, sample_matrix[batch], batch_true, batch_classes
            )
            weights -= cfg.learning_rate * gradient
            loss_total += loss * len(batch)
        current = snapshot(epoch)
        dev_metrics, _ = evaluate_zero_shot(current, dev_samples, dev_candidates)
        history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=loss_total / n_train,
                dev_metrics=dev_metrics,
            )
        )
        if keep_snapshots:
            snapshots.append(current)
        if dev_metrics.macro_f1 > best_f1:
            best_f1 = dev_metrics.macro_f1
            best_model = current

    return TrainResult(
        model=snapshot(cfg.epochs),
        history=tuple(history),
        best_model=best_model,
        snapshots=tuple(snapshots) if keep_snapshots else None,
    )


def select_best(
    history: Sequence[EpochRecord], snapshots: Sequence[ProjectionModel]
) -> ProjectionModel:
    """Snapshot with the highest dev macro F1; earliest epoch wins ties."""
    if not history:
        raise ValueError("empty training history")
    if len(history) != len(snapshots):
        raise ValueError(
            f"{len(history)} epoch records but {len(snapshots)} snapshots"
        )
    best = 0
    for i in range(1, len(history)):
        if history[i].dev_metrics.macro_f1 > history[best].dev_metrics.macro_f1:
            best = i
    return snapshots[best]


@dataclass(frozen=True)
class FoldOutcome:
    """Selected model of one fold with its dev and test reports."""

    fold_index: int
    dev: MetricsReport
    test: MetricsReport
    best_model: ProjectionModel
    history: tuple[EpochRecord, ...]


@dataclass(frozen=True)
class ExperimentResult:
    """Per-fold outcomes plus the cross-fold mean reports."""

    folds: tuple[FoldOutcome, ...]
    dev_mean: MetricsReport
    test_mean: MetricsReport


def run_experiment(
    manifest: SplitManifest,
    audio: Sequence[AcousticEmbedding],
    classes: ClassEmbeddingTable,
    cfg: TrainingConfig,
) -> ExperimentResult:
    """Train and evaluate all five folds, then average their reports.

    Each fold's selected model predicts its dev samples among the fold's
    dev species and its test samples among the fold's test species, so
    every evaluation is over classes the model never trained on.
    """
    outcomes = []
    for fold_index, fold in enumerate(manifest.folds, start=1):
        dev_samples = [s for s in audio if s.species_id in fold.dev_species]
        test_samples = [s for s in audio if s.species_id in fold.test_species]
        if not dev_samples:
            raise ValueError(f"fold {fold_index} has no development samples")
        if not test_samples:
            raise ValueError(f"fold {fold_index} has no test samples")
        result = train(fold, audio, classes, cfg)
        best = result.best_model
        if cfg.dev_candidate_scope == "dev":
            dev_candidates = classes.subset(fold.dev_species)
        else:
            dev_candidates = classes
        dev_report, _ = evaluate_zero_shot(best, dev_samples, dev_candidates)
        test_report, _ = evaluate_zero_shot(
            best, test_samples, classes.subset(fold.test_species)
        )
        outcomes.append(
            FoldOutcome(
                fold_index=fold_index,
                dev=dev_report,
                test=test_report,
                best_model=best,
                history=result.history,
            )
        )
    return ExperimentResult(
        folds=tuple(outcomes),
        dev_mean=aggregate_splits([o.dev for o in outcomes]),
        test_mean=aggregate_splits([o.test for o in outcomes]),
    )
