"""Five-fold splits, SGD training, model selection and the full protocol."""

import numpy as np
import pytest

from audiozsl import (
    ClassEmbedding,
    ClassEmbeddingTable,
    EpochRecord,
    Fold,
    MetricsReport,
    SplitManifest,
    TrainingConfig,
    evaluate_zero_shot,
    init_projection,
    make_splits,
    run_experiment,
    select_best,
    train,
    warp_loss,
)
from synth import linear_task


# ---------------------------------------------------------------------------
# split construction


def test_make_splits_95_species_sizes():
    manifest = make_splits([f"sp{i}" for i in range(95)], seed=0)
    for fold in manifest.folds:
        assert len(fold.dev_species) == 10
        assert len(fold.test_species) == 9
        assert len(fold.train_species) == 76


def test_make_splits_20_species_sizes():
    manifest = make_splits([f"sp{i}" for i in range(20)], seed=0)
    for fold in manifest.folds:
        assert len(fold.dev_species) == 2
        assert len(fold.test_species) == 2
        assert len(fold.train_species) == 16


def test_make_splits_too_few_species():
    with pytest.raises(ValueError, match="too few species"):
        make_splits([f"sp{i}" for i in range(19)], seed=0)


def test_make_splits_deterministic_and_order_independent():
    species = [f"sp{i}" for i in range(30)]
    a = make_splits(species, seed=5)
    b = make_splits(list(reversed(species)), seed=5)
    c = make_splits(species, seed=6)
    assert a == b
    assert a != c


def test_make_splits_invariants_over_seeds():
    species = [f"sp{i}" for i in range(95)]
    for seed in range(30):
        manifest = make_splits(species, seed=seed)
        universe = set(species)
        held_out = []
        for fold in manifest.folds:
            assert fold.train_species | fold.dev_species | fold.test_species == universe
            assert not fold.train_species & fold.dev_species
            assert not fold.train_species & fold.test_species
            assert not fold.dev_species & fold.test_species
            held_out.extend([fold.dev_species, fold.test_species])
        for i in range(len(held_out)):
            for j in range(i + 1, len(held_out)):
                assert not held_out[i] & held_out[j]


def test_fold_requires_disjoint_non_empty_roles():
    with pytest.raises(ValueError):
        Fold(train_species={"a"}, dev_species={"a"}, test_species={"b"})
    with pytest.raises(ValueError):
        Fold(train_species={"a"}, dev_species=set(), test_species={"b"})


def test_manifest_rejects_overlapping_held_out_sets():
    f1 = Fold(train_species={"c", "d"}, dev_species={"a"}, test_species={"b"})
    good = [
        Fold(train_species={"a", "b"}, dev_species={"c"}, test_species={"d"}),
        Fold(train_species={"b", "c"}, dev_species={"d"}, test_species={"a"}),
        Fold(train_species={"a", "d"}, dev_species={"b"}, test_species={"c"}),
        Fold(train_species={"c", "d"}, dev_species={"a"}, test_species={"b"}),
    ]
    with pytest.raises(ValueError, match="overlaps"):
        SplitManifest(folds=(f1, *good), seed=0)


def test_manifest_requires_five_folds():
    fold = Fold(train_species={"a"}, dev_species={"b"}, test_species={"c"})
    with pytest.raises(ValueError, match="5"):
        SplitManifest(folds=(fold,), seed=0)


# ---------------------------------------------------------------------------
# training behavior


def small_setup(seed=0):
    species, classes, samples = linear_task(
        data_seed=seed, n_species=20, audio_dim=16, per_species=6
    )
    manifest = make_splits(species, seed=1)
    return manifest.folds[0], classes, samples


def test_train_zero_epochs_returns_initialization():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=0, seed=42)
    result = train(fold, samples, classes, cfg)
    reference = init_projection(16, classes.class_dim, seed=42)
    assert np.array_equal(result.model.weights, reference.weights)
    assert result.history == ()
    assert result.best_model is result.model or np.array_equal(
        result.best_model.weights, reference.weights
    )


def test_train_zero_learning_rate_keeps_weights_constant():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=3, learning_rate=0.0, seed=7)
    result = train(fold, samples, classes, cfg)
    reference = init_projection(16, classes.class_dim, seed=7)
    assert np.array_equal(result.model.weights, reference.weights)
    # each epoch regroups batches, so the mean loss can wobble in the
    # last float bit even though the weights never move
    losses = [rec.train_loss for rec in result.history]
    assert losses == pytest.approx([losses[0]] * len(losses), rel=1e-12)


def test_train_same_seed_bit_identical():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=4, learning_rate=0.01, seed=3)
    a = train(fold, samples, classes, cfg)
    b = train(fold, samples, classes, cfg)
    assert np.array_equal(a.model.weights, b.model.weights)
    assert a.history == b.history


def test_train_different_seed_differs():
    fold, classes, samples = small_setup()
    a = train(fold, samples, classes, TrainingConfig(epochs=2, learning_rate=0.01, seed=0))
    b = train(fold, samples, classes, TrainingConfig(epochs=2, learning_rate=0.01, seed=1))
    assert not np.array_equal(a.model.weights, b.model.weights)


def test_single_sgd_step_decreases_batch_loss():
    # line-search property: small enough steps reduce the loss of the
    # batch they were computed on whenever the gradient is nonzero
    from audiozsl import ProjectionModel, warp_gradient

    fold, classes, samples = small_setup()
    train_samples = [s for s in samples if s.species_id in fold.train_species][:16]
    train_classes = classes.subset(fold.train_species)
    batch = [(s, s.species_id) for s in train_samples]
    model = init_projection(16, classes.class_dim, seed=11)
    grad = warp_gradient(model, batch, train_classes)
    assert np.abs(grad).max() > 0.0
    base = warp_loss(model, batch, train_classes)
    for lr in (1e-6, 1e-5):
        stepped = ProjectionModel(
            weights=model.weights - lr * grad,
            audio_dim=model.audio_dim,
            class_dim=model.class_dim,
            seed=model.seed,
        )
        assert warp_loss(stepped, batch, train_classes) < base


def test_train_loss_decreases_on_separable_task():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=10, learning_rate=0.01, seed=0)
    result = train(fold, samples, classes, cfg)
    losses = [rec.train_loss for rec in result.history]
    assert losses[-1] < losses[0]


def test_train_epoch_records_are_complete():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=3, learning_rate=0.01, seed=0)
    result = train(fold, samples, classes, cfg)
    assert [rec.epoch for rec in result.history] == [1, 2, 3]
    assert result.model.trained_epochs == 3


def test_train_validates_coverage_before_training():
    fold, classes, samples = small_setup()
    smaller = classes.subset(sorted(fold.all_species - {sorted(fold.test_species)[0]}))
    with pytest.raises(ValueError, match="missing fold species"):
        train(fold, samples, smaller, TrainingConfig(epochs=1))


def test_train_rejects_stray_species_samples():
    fold, classes, samples = small_setup()
    stray = samples[0].__class__(
        sample_id="stray", species_id="nowhere", vector=samples[0].vector
    )
    with pytest.raises(ValueError, match="nowhere"):
        train(fold, list(samples) + [stray], classes, TrainingConfig(epochs=1))


def test_train_requires_training_and_dev_samples():
    fold, classes, samples = small_setup()
    only_dev = [s for s in samples if s.species_id in fold.dev_species]
    with pytest.raises(ValueError, match="training"):
        train(fold, only_dev, classes, TrainingConfig(epochs=1))
    only_train = [s for s in samples if s.species_id in fold.train_species]
    with pytest.raises(ValueError, match="development"):
        train(fold, only_train, classes, TrainingConfig(epochs=1))
    # epochs=0 never evaluates, so missing dev samples are fine there
    result = train(fold, only_train, classes, TrainingConfig(epochs=0))
    assert result.history == ()


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainingConfig(learning_rate=-0.1)
    with pytest.raises(ValueError):
        TrainingConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainingConfig(loss_class_scope="everything")
    with pytest.raises(ValueError):
        TrainingConfig(dev_candidate_scope="test")


# ---------------------------------------------------------------------------
# model selection


def history_with_f1(values):
    recs = []
    for i, v in enumerate(values, start=1):
        recs.append(
            EpochRecord(
                epoch=i,
                train_loss=1.0,
                dev_metrics=MetricsReport(acc=v, uar=v, macro_f1=v, per_class={}),
            )
        )
    return recs


def test_select_best_argmax():
    history = history_with_f1([0.1, 0.3, 0.2])
    snapshots = [init_projection(2, 2, seed=s) for s in range(3)]
    assert select_best(history, snapshots) is snapshots[1]


def test_select_best_monotone_takes_last():
    history = history_with_f1([0.1, 0.2, 0.3])
    snapshots = [init_projection(2, 2, seed=s) for s in range(3)]
    assert select_best(history, snapshots) is snapshots[2]


def test_select_best_tie_takes_earliest():
    history = history_with_f1([0.2, 0.2, 0.2])
    snapshots = [init_projection(2, 2, seed=s) for s in range(3)]
    assert select_best(history, snapshots) is snapshots[0]


def test_select_best_rejects_empty_or_mismatched():
    with pytest.raises(ValueError):
        select_best([], [])
    with pytest.raises(ValueError):
        select_best(history_with_f1([0.1]), [])


def test_train_best_model_equals_select_best_over_snapshots():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=6, learning_rate=0.01, seed=2)
    result = train(fold, samples, classes, cfg, keep_snapshots=True)
    assert result.snapshots is not None
    chosen = select_best(result.history, result.snapshots)
    assert np.array_equal(result.best_model.weights, chosen.weights)
    assert result.best_model.trained_epochs == chosen.trained_epochs


# ---------------------------------------------------------------------------
# zero-shot integrity


def test_gradient_path_never_reads_held_out_class_vectors():
    # replacing dev/test class vectors with garbage must not change the
    # final trained weights; only epoch-end evaluation may differ
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=4, learning_rate=0.01, seed=9)
    poisoned_entries = tuple(
        e
        if e.species_id in fold.train_species
        else ClassEmbedding(e.species_id, e.vector + 1e6)
        for e in classes.entries
    )
    poisoned = ClassEmbeddingTable(source_name="poisoned", entries=poisoned_entries)
    a = train(fold, samples, classes, cfg)
    b = train(fold, samples, poisoned, cfg)
    assert np.array_equal(a.model.weights, b.model.weights)


def test_training_requests_only_fold_species_subsets(monkeypatch):
    fold, classes, samples = small_setup()
    requested = []
    original = ClassEmbeddingTable.subset

    def spy(self, species_ids):
        requested.append(frozenset(species_ids))
        return original(self, species_ids)

    monkeypatch.setattr(ClassEmbeddingTable, "subset", spy)
    train(fold, samples, classes, TrainingConfig(epochs=1, seed=0))
    assert requested, "training must restrict the class table"
    for req in requested:
        assert req <= fold.train_species or req <= fold.dev_species
        assert not req & fold.test_species


def test_evaluation_predictions_stay_in_candidate_set():
    fold, classes, samples = small_setup()
    cfg = TrainingConfig(epochs=2, learning_rate=0.01, seed=0)
    result = train(fold, samples, classes, cfg)
    test_samples = [s for s in samples if s.species_id in fold.test_species]
    report, records = evaluate_zero_shot(
        result.best_model, test_samples, classes.subset(fold.test_species)
    )
    for rec in records:
        assert rec.predicted_class in fold.test_species
    assert 0.0 <= report.macro_f1 <= 1.0


# ---------------------------------------------------------------------------
# full protocol


def test_run_experiment_shape_and_aggregation():
    species, classes, samples = linear_task(
        data_seed=1, n_species=20, audio_dim=16, per_species=6
    )
    manifest = make_splits(species, seed=2)
    cfg = TrainingConfig(epochs=2, learning_rate=0.01, seed=0)
    result = run_experiment(manifest, samples, classes, cfg)
    assert len(result.folds) == 5
    assert [o.fold_index for o in result.folds] == [1, 2, 3, 4, 5]
    assert result.test_mean.acc == pytest.approx(
        float(np.mean([o.test.acc for o in result.folds]))
    )
    assert result.dev_mean.macro_f1 == pytest.approx(
        float(np.mean([o.dev.macro_f1 for o in result.folds]))
    )


def test_run_experiment_deterministic():
    species, classes, samples = linear_task(
        data_seed=1, n_species=20, audio_dim=16, per_species=6
    )
    manifest = make_splits(species, seed=2)
    cfg = TrainingConfig(epochs=2, learning_rate=0.01, seed=0)
    a = run_experiment(manifest, samples, classes, cfg)
    b = run_experiment(manifest, samples, classes, cfg)
    assert a.test_mean == b.test_mean
    for fa, fb in zip(a.folds, b.folds):
        assert np.array_equal(fa.best_model.weights, fb.best_model.weights)


def test_run_experiment_requires_samples_for_every_fold_role():
    species, classes, samples = linear_task(
        data_seed=1, n_species=20, audio_dim=16, per_species=6
    )
    manifest = make_splits(species, seed=2)
    missing = manifest.folds[0].test_species
    trimmed = [s for s in samples if s.species_id not in missing]
    with pytest.raises(ValueError, match="test samples"):
        run_experiment(manifest, trimmed, classes, TrainingConfig(epochs=0))
