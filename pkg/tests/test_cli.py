"""End-to-end command-line tests, run in process through cli.main."""

import json

import numpy as np
import pytest

from audiozsl import (
    AcousticEmbedding,
    ClassEmbedding,
    ClassEmbeddingTable,
    cli,
    make_splits,
)
from audiozsl import io as azio
from audiozsl.metadata import cosine_similarity_matrix
from synth import linear_task

pytestmark = pytest.mark.filterwarnings("error")


@pytest.fixture()
def dataset(tmp_path):
    """A small on-disk dataset: audio embeddings plus two class tables."""
    species, classes, samples = linear_task(
        data_seed=5, n_species=20, class_dim=8, audio_dim=16, per_species=6
    )
    audio_path = tmp_path / "audio.csv"
    azio.write_acoustic_embeddings(audio_path, samples)
    traits_path = tmp_path / "traits.csv"
    azio.write_class_table(traits_path, classes)
    rng = np.random.default_rng(6)
    other = ClassEmbeddingTable(
        source_name="other",
        entries=tuple(
            ClassEmbedding(entry.species_id, rng.normal(size=4))
            for entry in classes.entries
        ),
    )
    other_path = tmp_path / "other.csv"
    azio.write_class_table(other_path, other)
    manifest_path = tmp_path / "manifest.json"
    azio.write_manifest(manifest_path, make_splits(species, seed=0))
    return {
        "audio": audio_path,
        "traits": traits_path,
        "other": other_path,
        "manifest": manifest_path,
        "dir": tmp_path,
    }


def tree_bytes(root):
    """Map of relative path -> file bytes for a directory tree."""
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


# ---------------------------------------------------------------------------
# preprocess


def attribute_csv(tmp_path):
    path = tmp_path / "attrs.csv"
    path.write_text(
        "species,name,mass,habitat\n"
        "sp1,alpha,10,forest\n"
        "sp2,beta,20,sea\n"
        "sp3,gamma,NA,forest\n"
    )
    return path


def test_preprocess_attributes_writes_table_and_audit(tmp_path, capsys):
    attrs = attribute_csv(tmp_path)
    exclude = tmp_path / "exclude.txt"
    exclude.write_text("name\n")
    out = tmp_path / "prep"
    rc = cli.main(
        [
            "preprocess",
            "--input",
            str(attrs),
            "--source-name",
            "attrs",
            "--exclude-columns",
            str(exclude),
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    table = azio.read_class_table(out / "attrs.classes.csv")
    assert len(table) == 3
    assert table.class_dim == 2
    audit = json.loads((out / "attrs.audit.json").read_text())
    assert audit["source"] == "attrs"
    assert audit["n_species"] == 3
    assert audit["class_dim"] == 2
    assert audit["excluded_columns"] == ["name"]
    assert audit["dropped_columns"] == []
    assert audit["label_encodings"] == {"habitat": {"forest": 0, "sea": 1}}
    assert set(audit["column_ranges"]) == {"mass", "habitat"}
    assert "attrs: 3 species x 2 dimensions" in capsys.readouterr().err


def test_preprocess_embeddings_kind_reemits_table(dataset, tmp_path):
    out = tmp_path / "prep"
    rc = cli.main(
        [
            "preprocess",
            "--input",
            str(dataset["traits"]),
            "--kind",
            "embeddings",
            "--source-name",
            "traits",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    table = azio.read_class_table(out / "traits.classes.csv")
    original = azio.read_class_table(dataset["traits"])
    for a, b in zip(table.entries, original.entries):
        assert a.species_id == b.species_id
        assert np.array_equal(a.vector, b.vector)
    audit = json.loads((out / "traits.audit.json").read_text())
    assert audit["dropped_columns"] == []
    assert audit["label_encodings"] == {}


def test_preprocess_rejects_attribute_flags_for_embeddings(dataset, tmp_path, capsys):
    rc = cli.main(
        [
            "preprocess",
            "--input",
            str(dataset["traits"]),
            "--kind",
            "embeddings",
            "--source-name",
            "traits",
            "--max-missing",
            "3",
            "--out",
            str(tmp_path / "prep"),
        ]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "prep").exists()


def test_preprocess_rejects_bad_source_name(tmp_path, capsys):
    attrs = attribute_csv(tmp_path)
    rc = cli.main(
        [
            "preprocess",
            "--input",
            str(attrs),
            "--source-name",
            "bad name!",
            "--out",
            str(tmp_path / "prep"),
        ]
    )
    assert rc == 1
    assert "source name" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# split


def test_split_writes_manifest_deterministically(dataset, tmp_path, capsys):
    out1 = tmp_path / "m1.json"
    out2 = tmp_path / "m2.json"
    for out in (out1, out2):
        rc = cli.main(
            [
                "split",
                "--audio-embeddings",
                str(dataset["audio"]),
                "--seed",
                "7",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()
    manifest = azio.read_manifest(out1)
    assert manifest.seed == 7
    assert len(manifest.species) == 20
    err = capsys.readouterr().err
    assert "fold 1: train 16, dev 2, test 2" in err


def test_split_fails_cleanly_on_too_few_species(tmp_path, capsys):
    rng = np.random.default_rng(8)
    samples = [
        AcousticEmbedding(f"s{i}", f"sp{i}", rng.normal(size=3)) for i in range(5)
    ]
    audio = tmp_path / "audio.csv"
    azio.write_acoustic_embeddings(audio, samples)
    out = tmp_path / "manifest.json"
    rc = cli.main(["split", "--audio-embeddings", str(audio), "--out", str(out)])
    assert rc == 1
    assert "too few species" in capsys.readouterr().err
    assert not out.exists()


# ---------------------------------------------------------------------------
# train-eval


def run_train_eval(dataset, out_dir, extra=()):
    return cli.main(
        [
            "train-eval",
            "--audio-embeddings",
            str(dataset["audio"]),
            "--manifest",
            str(dataset["manifest"]),
            "--class-source",
            f"traits={dataset['traits']}",
            "--class-source",
            f"other={dataset['other']}",
            "--concat",
            "traits+other",
            "--epochs",
            "2",
            "--lr",
            "0.01",
            "--out",
            str(out_dir),
            *extra,
        ]
    )


def test_train_eval_writes_all_outputs(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    assert run_train_eval(dataset, out) == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report["sources"]) == {"traits", "other", "traits+other"}
    for block in report["sources"].values():
        assert len(block["folds"]) == 5
        assert set(block["aggregate"]) == {"dev", "test"}
    text = (out / "report.txt").read_text()
    assert "source: traits+other" in text
    for name in ("traits", "other", "traits+other"):
        for fold in range(1, 6):
            model = azio.read_model(out / "models" / f"{name}-fold{fold}.model")
            assert model.trained_epochs <= 2
            history = (out / "history" / f"{name}-fold{fold}.jsonl").read_text()
            assert len(history.splitlines()) == 2
    # concatenated source really is wider
    concat_model = azio.read_model(out / "models" / "traits+other-fold1.model")
    assert concat_model.class_dim == 8 + 4
    err = capsys.readouterr().err
    assert "best source by test macro F1:" in err
    assert "source: traits" in err


def test_train_eval_reruns_byte_identical(dataset, tmp_path):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert run_train_eval(dataset, out1) == 0
    assert run_train_eval(dataset, out2) == 0
    t1, t2 = tree_bytes(out1), tree_bytes(out2)
    assert t1.keys() == t2.keys()
    for rel in t1:
        assert t1[rel] == t2[rel], rel


def test_train_eval_bad_source_leaves_no_outputs(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    rc = cli.main(
        [
            "train-eval",
            "--audio-embeddings",
            str(dataset["audio"]),
            "--manifest",
            str(dataset["manifest"]),
            "--class-source",
            f"traits={tmp_path / 'missing.csv'}",
            "--out",
            str(out),
        ]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_train_eval_requires_a_source(dataset, tmp_path, capsys):
    rc = cli.main(
        [
            "train-eval",
            "--audio-embeddings",
            str(dataset["audio"]),
            "--manifest",
            str(dataset["manifest"]),
            "--out",
            str(tmp_path / "run"),
        ]
    )
    assert rc == 1
    assert "at least one --class-source" in capsys.readouterr().err


def test_source_argument_validation(dataset, tmp_path, capsys):
    base = [
        "train-eval",
        "--audio-embeddings",
        str(dataset["audio"]),
        "--manifest",
        str(dataset["manifest"]),
        "--out",
        str(tmp_path / "run"),
    ]
    rc = cli.main(base + ["--class-source", "nopath"])
    assert rc == 1
    assert "NAME=PATH" in capsys.readouterr().err
    rc = cli.main(
        base
        + [
            "--class-source",
            f"traits={dataset['traits']}",
            "--class-source",
            f"traits={dataset['other']}",
        ]
    )
    assert rc == 1
    assert "duplicate class source" in capsys.readouterr().err
    rc = cli.main(
        base + ["--class-source", f"traits={dataset['traits']}", "--concat", "traits+ghost"]
    )
    assert rc == 1
    assert "unknown sources: ghost" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# similarity


def test_similarity_matches_library(dataset, tmp_path):
    out = tmp_path / "sim"
    rc = cli.main(
        [
            "similarity",
            "--class-source",
            f"traits={dataset['traits']}",
            "--class-source",
            f"other={dataset['other']}",
            "--concat",
            "traits+other",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    for name, path in (("traits", dataset["traits"]), ("other", dataset["other"])):
        table = azio.read_class_table(path, source_name=name)
        expected = cosine_similarity_matrix(table)
        loaded = azio.read_similarity_matrix(out / f"{name}.similarity.csv")
        assert loaded.species_ids == expected.species_ids
        assert np.array_equal(loaded.values, expected.values)
    assert (out / "traits+other.similarity.csv").exists()


# ---------------------------------------------------------------------------
# parser behaviour


def test_unknown_command_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["frobnicate"])
    assert excinfo.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_console_entry_point_is_registered():
    from importlib.metadata import entry_points

    scripts = entry_points(group="console_scripts")
    matches = [ep for ep in scripts if ep.name == "audiozsl"]
    assert matches and matches[0].value == "audiozsl.cli:main"
