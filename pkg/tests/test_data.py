import numpy as np
import pytest

from qcmkl import generate_dataset, load_csv, make_instance, minmax_scale, save_csv, split
from qcmkl.data import TWO_PI, manifest
from qcmkl.kernels import gram_matrix, cross_matrix, make_spec
from qcmkl.svm import predict, train_svm
from qcmkl.metrics import accuracy


def test_generation_is_deterministic():
    a = generate_dataset(3, 60, 1.0, 2, seed=4)
    b = generate_dataset(3, 60, 1.0, 2, seed=4)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    c = generate_dataset(3, 60, 1.0, 2, seed=5)
    assert not np.array_equal(a.features, c.features)


def test_class_balance_and_shape():
    ds = generate_dataset(4, 100, 1.0, 2, seed=0)
    assert ds.features.shape == (100, 4)
    assert np.sum(ds.labels == 1) == 50
    assert np.sum(ds.labels == -1) == 50


def test_cluster_placement_errors():
    with pytest.raises(ValueError):
        generate_dataset(2, 100, 1.0, 3, seed=0)  # 6 clusters > 4 vertices
    with pytest.raises(ValueError):
        generate_dataset(3, 99, 1.0, 2, seed=0)  # odd sample count
    with pytest.raises(ValueError):
        generate_dataset(2, 100, -1.0, 2, seed=0)


def test_single_cluster_per_class_supported():
    ds = generate_dataset(2, 40, 2.0, 1, seed=1)
    assert np.sum(ds.labels == 1) == 20


def test_minmax_examples():
    out = minmax_scale(np.array([[0.0], [5.0], [10.0]]))
    assert np.allclose(out.ravel(), [0.0, np.pi, TWO_PI])


def test_minmax_full_range_endpoints_fixed():
    col = np.array([[0.0], [1.0], [TWO_PI]])
    out = minmax_scale(col)
    assert out[0, 0] == 0.0
    assert out[2, 0] == TWO_PI


def test_minmax_order_preserved_and_exact_range():
    rng = np.random.default_rng(2)
    col = rng.standard_normal((50, 3)) * 7 + 2
    out = minmax_scale(col)
    assert np.array_equal(np.argsort(out[:, 0]), np.argsort(col[:, 0]))
    assert np.all(out.min(axis=0) == 0.0)
    assert np.all(out.max(axis=0) == TWO_PI)


def test_minmax_rejects_constant_column():
    with pytest.raises(ValueError):
        minmax_scale(np.array([[1.0, 2.0], [1.0, 3.0]]))


def test_split_even():
    ds = generate_dataset(2, 100, 1.0, 2, seed=3)
    ds = split(ds, 0.5, seed=7)
    assert len(ds.train_indices) == 50
    assert len(ds.test_indices) == 50


def test_split_deterministic_and_partition():
    ds = generate_dataset(2, 40, 1.0, 2, seed=3)
    a = split(ds, 0.5, seed=9)
    b = split(ds, 0.5, seed=9)
    assert np.array_equal(a.train_indices, b.train_indices)
    combined = np.sort(np.concatenate([a.train_indices, a.test_indices]))
    assert np.array_equal(combined, np.arange(40))


def test_split_rejects_empty_side():
    ds = generate_dataset(2, 4, 1.0, 1, seed=0)
    with pytest.raises(ValueError):
        split(ds, 0.05, seed=0)
    with pytest.raises(ValueError):
        split(ds, 1.5, seed=0)


def test_pipeline_determinism():
    a = make_instance(3, 80, 1.0, 2, seed=5)
    b = make_instance(3, 80, 1.0, 2, seed=5)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.train_indices, b.train_indices)
    assert np.all(a.features >= 0.0) and np.all(a.features <= TWO_PI)


def test_separable_limit_linear_svm():
    # With well-separated single clusters, a plain linear-kernel SVM wins.
    accs = []
    for seed in range(5):
        ds = make_instance(2, 100, 10.0, 1, seed=seed)
        spec = make_spec("linear", 2)
        K = gram_matrix(spec, ds.train_X)
        model = train_svm(K, ds.train_y, C=1.0)
        preds = predict(model, cross_matrix(spec, ds.test_X, ds.train_X))
        accs.append(accuracy(preds, ds.test_y))
    assert np.median(accs) >= 0.95


def test_csv_round_trip_is_exact(tmp_path):
    ds = make_instance(3, 30, 1.0, 2, seed=6)
    path = tmp_path / "data.csv"
    save_csv(ds, path)
    loaded = load_csv(path)
    assert np.array_equal(loaded.features, ds.features)
    assert np.array_equal(loaded.labels, ds.labels)
    assert np.array_equal(loaded.train_indices, ds.train_indices)
    assert np.array_equal(loaded.test_indices, ds.test_indices)


def test_csv_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("f0,f1,label,partition\n0.1,0.2,1,train\n0.3,oops,1,test\n")
    with pytest.raises(ValueError, match="line 3"):
        load_csv(path)
    path.write_text("f0,label,partition\n0.1,2,train\n")
    with pytest.raises(ValueError, match="label"):
        load_csv(path)
    path.write_text("f0,label,partition\n0.1,1,validation\n")
    with pytest.raises(ValueError, match="partition"):
        load_csv(path)
    path.write_text("f0,f1\n")
    with pytest.raises(ValueError, match="header"):
        load_csv(path)
    path.write_text("f0,label,partition\n0.1,1\n")
    with pytest.raises(ValueError, match="line 2"):
        load_csv(path)


def test_manifest_fields():
    ds = make_instance(2, 20, 1.5, 2, seed=8)
    info = manifest(ds, n_samples=20, clusters=2)
    assert info == {"d": 2, "n": 20, "class_sep": 1.5, "clusters": 2, "seed": 8}
