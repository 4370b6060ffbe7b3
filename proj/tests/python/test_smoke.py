import json
import math

import numpy as np
import pytest

import cdga


def test_augmented_size():
    assert cdga.augmented_size(10, 3, 2, "CDGA_PG") == (2 * 3 + 1) * 10
    assert cdga.augmented_size(10, 3, 2, "CDGA_STAR_PG") == (2 * 3 + 2) * 10
    with pytest.raises(ValueError):
        cdga.augmented_size(10, 3, 2, "nope")


def test_balanced_batch_sizes():
    b = cdga.balanced_batch_sizes([[4, 2], [0, 1]])
    assert b == [[1, 2], [None, 4]]


def test_hessian_distance_is_spectral_norm():
    a = np.diag([3.0, 1.0])
    assert cdga.hessian_distance(a, np.zeros((2, 2))) == pytest.approx(3.0)
    assert cdga.hessian_distance(a, a) == 0.0


def test_head_hessian_shape_and_symmetry():
    rng = np.random.default_rng(0)
    feats = rng.normal(size=(3, 5))
    logits = rng.normal(size=(2, 5))
    probs = np.exp(logits) / np.exp(logits).sum(axis=0)
    h = cdga.head_hessian(feats, probs)
    assert h.shape == (8, 8)
    np.testing.assert_allclose(h, h.T, atol=1e-14)


def test_diversity_bounds():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(200, 4))
    same = cdga.diversity_shift(a, a.copy())
    far = cdga.diversity_shift(a, a + 50.0)
    assert same["value"] == pytest.approx(0.0)
    assert far["value"] == pytest.approx(1.0)


def test_near_duplicates():
    o = {"a": np.eye(3)}
    g = {"g": np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])}
    r = cdga.near_duplicate_rates(o, g)
    assert r["rates"][0][0] == pytest.approx(200.0 / 3.0)


def test_sharpness_linear_objective():
    c = np.array([3.0, 4.0])

    def f(theta):
        return float(c @ theta), c.copy()

    assert cdga.sharpness(f, np.zeros(2), 0.1) == pytest.approx(0.5, rel=1e-9)


def test_tsne_shape():
    rng = np.random.default_rng(2)
    x = np.vstack([rng.normal(size=(15, 5)), rng.normal(size=(15, 5)) + 8.0])
    y = cdga.tsne(x, iterations=300, perplexity=5.0)
    assert y.shape == (30, 2)
    assert np.isfinite(y).all()


def test_dataset_scan_and_pipeline(tmp_path):
    data = tmp_path / "data"
    n = cdga.write_shapes_dataset(str(data), per_cell=3, image_size=16, seed=4)
    assert n == 27
    manifest = cdga.scan_dataset(str(data))
    assert sorted(manifest["domains"]) == ["alpha", "beta", "gamma"]

    config = {
        "dataset_root": str(data),
        "output_root": str(tmp_path / "out"),
        "seed": 0,
        "backend": {"kind": "stub"},
        "augmentation": {"mode": "CDGA_PG", "b": 1, "descriptions": {"alpha": "red shapes", "beta": "sketch", "gamma": "yellow on blue"}},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    loaded = cdga.load_config(str(path))
    assert loaded["seed"] == 0

    code, _ = cdga.run_command("scan", str(path))
    assert code == 0
    code, summary = cdga.run_command("generate", str(path), stub_backend=True)
    assert code == 0
    assert (tmp_path / "out" / "generate" / "augmented_manifest.json").exists()
    code, _ = cdga.run_command("generate", str(path), stub_backend=True)
    assert code == 0
