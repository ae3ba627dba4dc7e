import json
import os

import numpy as np
import pytest

from fishid import dtree, mlp, pipeline
from fishid.errors import (
    ClassMissing,
    CorruptModel,
    EmptyForeground,
    EmptyTestSet,
    EmptyTrainingSet,
    IoFailure,
    VersionMismatch,
)
from fishid.features import FEATURE_COUNT
from fishid.imageio import RgbImage, encode_ppm, load_manifest, write_manifest
from fishid.mlp import TrainConfig
from fishid.pipeline import (
    PipelineConfig,
    evaluate,
    extract_manifest_features,
    format_report,
    load_bundle,
    run_pipeline,
    save_bundle,
    train_bundle,
)


def write_blank_ppm(path, w=64, h=64, color=(200, 200, 200)):
    px = np.empty((h, w, 3), dtype=np.uint8)
    px[:] = color
    with open(path, "wb") as fh:
        fh.write(encode_ppm(RgbImage(px)))


class TestRunPipeline:
    def test_classifies_and_returns_intermediates(self, small_corpus, small_bundle):
        manifest, _ = small_corpus
        entries = load_manifest(manifest)
        entry = next(e for e in entries if e.split == "test")
        path = os.path.join(os.path.dirname(manifest), entry.path)
        result = run_pipeline(path, small_bundle)
        assert result.features.shape == (FEATURE_COUNT,)
        assert result.scores.shape == (len(small_bundle.registry),)
        assert result.label == small_bundle.registry.label(result.class_index)
        assert result.analysis.mask.area > 0
        assert len(result.analysis.segments) == small_bundle.config.bands

    def test_blank_image_fails_with_staged_empty_foreground(self, tmp_path, small_bundle):
        p = tmp_path / "blank.ppm"
        write_blank_ppm(p)
        with pytest.raises(EmptyForeground) as err:
            run_pipeline(p, small_bundle)
        assert err.value.stage is not None

    def test_missing_file(self, small_bundle):
        with pytest.raises(IoFailure):
            run_pipeline("/nonexistent/image.ppm", small_bundle)


class TestTrainBundle:
    def test_deterministic_model_bytes(self, small_corpus, tmp_path):
        manifest, _ = small_corpus
        cfg = TrainConfig(seed=5, max_epochs=60, init_scale=pipeline.PIPELINE_INIT_SCALE)
        b1 = train_bundle(manifest, train_cfg=cfg, hidden=8)
        b2 = train_bundle(manifest, train_cfg=cfg, hidden=8)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_bundle(b1, p1)
        save_bundle(b2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_class_missing(self, small_corpus, tmp_path):
        manifest, _ = small_corpus
        entries = load_manifest(manifest)
        pruned = [e for e in entries if not (e.family == "Scombridae" and e.split == "train")]
        with pytest.raises(ClassMissing):
            train_bundle(_relocated(manifest, pruned, tmp_path), hidden=4)

    def test_no_train_rows(self, small_corpus, tmp_path):
        manifest, _ = small_corpus
        entries = [e for e in load_manifest(manifest) if e.split == "test"]
        with pytest.raises(EmptyTrainingSet):
            train_bundle(_relocated(manifest, entries, tmp_path), hidden=4)


def _relocated(manifest, entries, tmp_path):
    """Write a manifest variant next to the original corpus images."""
    out = os.path.join(os.path.dirname(manifest), f"variant_{len(entries)}.csv")
    write_manifest(out, entries)
    return out


class TestTrainingFit:
    def test_cascade_fits_its_training_split(self, small_corpus, small_bundle):
        """Tree over trained network outputs reproduces the train labels."""
        manifest, _ = small_corpus
        base = os.path.dirname(manifest)
        entries = [e for e in load_manifest(manifest) if e.split == "train"]
        hits = 0
        for e in entries:
            result = run_pipeline(os.path.join(base, e.path), small_bundle)
            hits += result.class_index == small_bundle.registry.index_of(e.family)
        assert hits / len(entries) >= 0.99


class TestEvaluate:
    def test_report_consistency(self, small_corpus, small_bundle):
        manifest, _ = small_corpus
        report = evaluate(small_bundle, manifest)
        entries = [e for e in load_manifest(manifest) if e.split == "test"]
        assert report.total == len(entries)
        # confusion row sums equal per-class test counts
        for i, name in enumerate(report.class_names):
            expected = sum(e.family == name for e in entries)
            assert int(report.confusion[i].sum()) == expected
        assert report.accuracy == np.trace(report.confusion) / report.total
        assert 0.0 <= report.poison_recall <= 1.0
        text = format_report(report)
        assert "accuracy" in text and "poison recall" in text

    def test_empty_test_split(self, small_corpus, tmp_path):
        manifest, _ = small_corpus
        entries = [e for e in load_manifest(manifest) if e.split == "train"]
        m2 = _relocated(manifest, entries, tmp_path)
        bundle = train_bundle(m2, train_cfg=TrainConfig(seed=1, max_epochs=5,
                                                        init_scale=pipeline.PIPELINE_INIT_SCALE),
                              hidden=4)
        with pytest.raises(EmptyTestSet):
            evaluate(bundle, m2)


class TestPersistence:
    def test_round_trip_predicts_identically(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        loaded = load_bundle(p)
        rng = np.random.default_rng(17)
        for _ in range(100):
            x = rng.uniform(0, 1, FEATURE_COUNT)
            s1 = mlp.forward(small_bundle.mlp, x)
            s2 = mlp.forward(loaded.mlp, x)
            assert np.array_equal(s1, s2)
            assert dtree.predict_class(small_bundle.tree, s1) == dtree.predict_class(loaded.tree, s2)

    def test_loaded_config_matches(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        loaded = load_bundle(p)
        assert loaded.config == small_bundle.config
        assert loaded.registry == small_bundle.registry
        assert loaded.feature_layout_version == small_bundle.feature_layout_version

    def test_version_mismatch(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        doc = json.loads(p.read_text())
        doc["version"] = 999
        p.write_text(json.dumps(doc))
        with pytest.raises(VersionMismatch):
            load_bundle(p)

    def test_truncated_file(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        p.write_bytes(p.read_bytes()[:300])
        with pytest.raises(CorruptModel):
            load_bundle(p)

    def test_corrupt_shapes(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        doc = json.loads(p.read_text())
        doc["mlp"]["weights"][0] = [[0.0, 1.0]]
        p.write_text(json.dumps(doc))
        with pytest.raises(CorruptModel):
            load_bundle(p)

    def test_non_finite_weights_rejected(self, small_bundle, tmp_path):
        p = tmp_path / "model.json"
        save_bundle(small_bundle, p)
        doc = json.loads(p.read_text())
        doc["mlp"]["weights"][0][0][0] = 1e400  # serializes as Infinity
        p.write_text(json.dumps(doc))
        with pytest.raises(CorruptModel):
            load_bundle(p)

    def test_missing_file(self):
        with pytest.raises(IoFailure):
            load_bundle("/nonexistent/model.json")


class TestExtractFeatures:
    def test_rows_match_manifest_order(self, small_corpus):
        manifest, _ = small_corpus
        entries, rows = extract_manifest_features(manifest, PipelineConfig())
        assert rows.shape == (len(entries), FEATURE_COUNT)
        assert np.isfinite(rows).all()
        assert (rows >= 0).all() and (rows <= 1).all()
