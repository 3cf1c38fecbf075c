import warnings

import numpy as np
import pytest

from hqml import datagen
from hqml.features import (ConfigError, FeatureMatrix, NormalizationError,
                           SizeError, SplitError, TSNEConfig,
                           balance_by_replication, load_feature_csv,
                           max_normalize, stratified_split, tsne_reduce,
                           write_feature_csv)


def _two_cluster_matrix(n_per=30, dim=50, separation=12.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, dim)) - separation / 2
    b = rng.normal(size=(n_per, dim)) + separation / 2
    rows = np.vstack([a, b])
    labels = np.array([0] * n_per + [1] * n_per)
    return rows, labels


def _nn_purity(embedding, labels):
    from scipy.spatial import cKDTree
    _, idx = cKDTree(embedding).query(embedding, k=2)
    return float((labels[idx[:, 1]] == labels).mean())


def test_tsne_separates_two_clusters():
    rows, labels = _two_cluster_matrix()
    cfg = TSNEConfig(perplexity=10, n_iter=400, early_exaggeration_iters=150, seed=0)
    emb, info = tsne_reduce(rows, cfg, return_info=True)
    assert emb.shape == (60, 2)
    assert _nn_purity(emb, labels) >= 0.95
    assert info["kl_final"] < info["kl_initial"]
    assert info["kl_final"] >= 0.0


def test_tsne_duplicate_rows_land_together():
    from scipy.spatial import cKDTree
    rows, _ = _two_cluster_matrix(n_per=25)
    rows[1] = rows[0]  # exact duplicate
    # learning rate scaled down for n=50; 200 is tuned for thousands of rows
    for seed in (1, 2, 3):
        cfg = TSNEConfig(perplexity=8, learning_rate=20.0, n_iter=300,
                         early_exaggeration_iters=100, seed=seed)
        emb = tsne_reduce(rows, cfg)
        spacing = np.median(cKDTree(emb).query(emb, k=2)[0][:, 1])
        assert np.linalg.norm(emb[0] - emb[1]) < spacing


def test_tsne_deterministic_per_seed():
    rows, _ = _two_cluster_matrix(n_per=15)
    cfg = TSNEConfig(perplexity=8, n_iter=260, early_exaggeration_iters=100, seed=3)
    first = tsne_reduce(rows, cfg)
    second = tsne_reduce(rows, cfg)
    assert np.array_equal(first, second)


def test_tsne_embedding_is_centered():
    rows, _ = _two_cluster_matrix(n_per=20)
    cfg = TSNEConfig(perplexity=8, n_iter=300, early_exaggeration_iters=100, seed=2)
    emb = tsne_reduce(rows, cfg)
    assert np.abs(emb.mean(axis=0)).max() < 1e-8


def test_tsne_config_validation():
    rows, _ = _two_cluster_matrix(n_per=10)
    with pytest.raises(ConfigError):
        tsne_reduce(rows, TSNEConfig(perplexity=10, n_iter=300))  # 10 >= 19/3
    with pytest.raises(ConfigError):
        tsne_reduce(rows, TSNEConfig(perplexity=5, n_iter=100,
                                     early_exaggeration_iters=250))
    with pytest.raises(SizeError):
        tsne_reduce(rows[:5], TSNEConfig(perplexity=1, n_iter=300))


def test_max_normalize_examples():
    np.testing.assert_allclose(max_normalize(np.array([[2.0, 4.0]])), [[0.5, 1.0]])
    np.testing.assert_allclose(max_normalize(np.array([[2.0, -8.0]])), [[0.25, -1.0]])
    with pytest.raises(NormalizationError):
        max_normalize(np.array([[0.0, 0.0]]))


def test_max_normalize_bounds_and_idempotence(rng):
    x = rng.normal(scale=7, size=(40, 5))
    normalized = max_normalize(x)
    assert normalized.min() >= -1.0 and normalized.max() <= 1.0
    assert np.all(np.max(np.abs(normalized), axis=1) == 1.0)
    again = max_normalize(normalized)
    np.testing.assert_allclose(again, normalized, atol=1e-15)


def test_balance_by_replication_forced_counts():
    rows = np.arange(82, dtype=float).reshape(82, 1)
    labels = np.array([0, 0] + [1] * 80)
    fm = FeatureMatrix(rows, labels, ["cat"] * 82)
    out = balance_by_replication(fm)
    assert out.n == 160
    assert (out.labels == 0).sum() == 80
    # each original minority row appears exactly 40 times
    values, counts = np.unique(out.rows[out.labels == 0], return_counts=True)
    assert set(values) == {0.0, 1.0}
    assert list(counts) == [40, 40]
    # originals first, in original order
    np.testing.assert_array_equal(out.rows[:82], rows)


def test_balance_already_balanced_is_identity():
    rows = np.arange(8, dtype=float).reshape(8, 1)
    labels = np.array([0, 1, 0, 1, 0, 1, 0, 1])
    fm = FeatureMatrix(rows, labels, ["a"] * 8)
    out = balance_by_replication(fm)
    np.testing.assert_array_equal(out.rows, rows)
    np.testing.assert_array_equal(out.labels, labels)


def test_balance_single_class_category_warns():
    rows = np.arange(6, dtype=float).reshape(6, 1)
    labels = np.array([1, 1, 1, 0, 1, 1])
    provenance = ["only_ti"] * 3 + ["both"] * 3
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = balance_by_replication(FeatureMatrix(rows, labels, provenance))
    assert any("single class" in str(w.message) for w in caught)
    both = [i for i, p in enumerate(out.provenance) if p == "both"]
    assert (out.labels[both] == 0).sum() == (out.labels[both] == 1).sum()


def test_balance_never_fabricates_rows(rng):
    rows = rng.normal(size=(30, 4))
    labels = (rng.random(30) < 0.75).astype(int)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    fm = FeatureMatrix(rows, labels, ["c1"] * 15 + ["c2"] * 15)
    out = balance_by_replication(fm)
    row_set = {tuple(r) for r in rows}
    assert all(tuple(r) in row_set for r in out.rows)
    for cat in ("c1", "c2"):
        members = [i for i, p in enumerate(out.provenance) if p == cat]
        zeros = (out.labels[members] == 0).sum()
        ones = (out.labels[members] == 1).sum()
        if zeros and ones:
            assert zeros == ones


def test_default_synth_corpus_balances_to_paper_shape():
    fm = datagen.gen_trojan_synth(seed=0)
    balanced = balance_by_replication(fm)
    assert abs(balanced.n - 3026) <= 2


def test_stratified_split_reference_sizes():
    labels = np.array([0] * 1513 + [1] * 1513)
    x = np.zeros((3026, 2))
    train, val, test = stratified_split(x, labels, (0.81, 0.09, 0.10), seed=0)
    assert (len(train), len(val), len(test)) == (2452, 272, 302)
    for part in (train, val, test):
        classes = labels[part]
        assert (classes == 0).sum() + (classes == 1).sum() == len(part)


def test_stratified_split_degenerate_ratio():
    labels = np.array([0, 1] * 10)
    train, val, test = stratified_split(np.zeros((20, 1)), labels, (1.0, 0.0, 0.0),
                                        seed=0)
    assert len(train) == 20 and len(val) == 0 and len(test) == 0


def test_stratified_split_disjoint_union(rng):
    labels = rng.integers(0, 2, 100)
    train, val, test = stratified_split(np.zeros((100, 1)), labels,
                                        (0.6, 0.2, 0.2), seed=5)
    combined = np.concatenate([train, val, test])
    assert len(combined) == 100
    assert len(np.unique(combined)) == 100


def test_stratified_split_seed_changes_membership_not_sizes():
    labels = np.array([0] * 50 + [1] * 50)
    a = stratified_split(np.zeros((100, 1)), labels, (0.8, 0.1, 0.1), seed=1)
    b = stratified_split(np.zeros((100, 1)), labels, (0.8, 0.1, 0.1), seed=2)
    assert [len(p) for p in a] == [len(p) for p in b]
    assert not np.array_equal(a[0], b[0])


def test_stratified_split_empty_class_error():
    labels = np.array([0] * 99 + [1])
    with pytest.raises(SplitError):
        stratified_split(np.zeros((100, 1)), labels, (0.5, 0.25, 0.25), seed=0)


def test_feature_csv_round_trip(tmp_path, rng):
    fm = FeatureMatrix(rng.normal(size=(12, 5)), rng.integers(0, 2, 12),
                       [f"c{i % 3}" for i in range(12)])
    path = tmp_path / "features.csv"
    write_feature_csv(path, fm)
    loaded = load_feature_csv(path)
    np.testing.assert_array_equal(loaded.rows, fm.rows)
    np.testing.assert_array_equal(loaded.labels, fm.labels)
    assert loaded.provenance == fm.provenance
