import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugnet.classify import (
    Dataset,
    EmptyDataset,
    NoLccMembers,
    ThresholdModel,
    TrainedModels,
    evcent_classify,
    fit_svm,
    lcc_classify,
    select_target_class,
    split_train_eval,
    svm_classify,
    tune_threshold,
)
from bugnet.events import FAULTY, VALID
from bugnet.metrics import NodeMetrics
from bugnet.svm import SingleClassTraining, StandardizationStats, SvmModel, kernel_matrix, train_svm


def nm(in_lcc, ev, deg=1):
    return NodeMetrics(in_lcc, ev, 0.0, 0.0, 0.0, deg, 0, deg, deg)


def make_dataset(rows):
    return Dataset([str(i) for i in range(len(rows))], [m for m, _ in rows], [y for _, y in rows])


# -- split --------------------------------------------------------------------

def test_split_sizes():
    data = make_dataset([(nm(True, 0.1), VALID)] * 100)
    train, ev = split_train_eval(data, 0.05, seed=0)
    assert len(train) == 5 and len(ev) == 95
    train, ev = split_train_eval(make_dataset([(nm(True, 0.1), VALID)] * 101), 0.05)
    assert len(train) == 6 and len(ev) == 95


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.floats(0.01, 0.99), st.integers(0, 2**31))
def test_split_partitions(n, frac, seed):
    data = make_dataset([(nm(True, 0.1), VALID)] * n)
    train, ev = split_train_eval(data, frac, seed)
    assert len(train) == math.ceil(frac * n)
    assert sorted(train.bug_ids + ev.bug_ids, key=int) == data.bug_ids
    again, _ = split_train_eval(data, frac, seed)
    assert again.bug_ids == train.bug_ids


def test_split_rejects_empty_and_bad_fraction():
    with pytest.raises(EmptyDataset):
        split_train_eval(make_dataset([]), 0.5)
    with pytest.raises(ValueError):
        split_train_eval(make_dataset([(nm(True, 0.1), VALID)]), 1.0)


# -- simple classifiers -------------------------------------------------------

def test_target_selection():
    rows = [(nm(True, 0.1), VALID)] * 3 + [(nm(True, 0.1), FAULTY)] * 5
    assert select_target_class(make_dataset(rows)) == VALID
    rows = [(nm(True, 0.1), VALID)] * 5 + [(nm(True, 0.1), FAULTY)] * 3
    assert select_target_class(make_dataset(rows)) == FAULTY
    rows = [(nm(True, 0.1), VALID)] * 4 + [(nm(True, 0.1), FAULTY)] * 4
    assert select_target_class(make_dataset(rows)) == VALID
    assert select_target_class(make_dataset(rows), "faulty") == FAULTY


def test_lcc_and_evcent_rules():
    model = ThresholdModel(50.0, 0.3)
    assert lcc_classify(nm(True, 0.0)) == VALID
    assert lcc_classify(nm(False, 0.0)) == FAULTY
    assert evcent_classify(nm(True, 0.3), model) == VALID
    assert evcent_classify(nm(True, 0.29), model) == FAULTY
    assert evcent_classify(nm(False, 0.9), model) == FAULTY


@given(st.booleans(), st.floats(0, 1), st.floats(0, 1))
def test_evcent_refines_lcc(in_lcc, ev, theta):
    m = nm(in_lcc, ev)
    if evcent_classify(m, ThresholdModel(50.0, theta)) == VALID:
        assert lcc_classify(m) == VALID


def test_tune_threshold_picks_best_and_breaks_ties_low():
    # LCC scores 0.1..1.0; Valid exactly for scores >= 0.6
    rows = [(nm(True, s / 10), VALID if s >= 6 else FAULTY) for s in range(1, 11)]
    model = tune_threshold(make_dataset(rows))
    assert model.threshold == pytest.approx(float(np.percentile([s / 10 for s in range(1, 11)], model.percentile)))
    assert model.percentile == 50.0  # 50th percentile = 0.55 already separates perfectly


def test_tune_threshold_tie_prefers_smaller_percentile():
    # constant scores: every percentile gives the same threshold and F
    rows = [(nm(True, 0.5), VALID), (nm(True, 0.5), FAULTY), (nm(False, 0.0), FAULTY)]
    assert tune_threshold(make_dataset(rows)).percentile == 50.0


def test_tune_threshold_needs_lcc():
    with pytest.raises(NoLccMembers):
        tune_threshold(make_dataset([(nm(False, 0.0), VALID), (nm(False, 0.0), FAULTY)]))


# -- SVM ----------------------------------------------------------------------

def two_blobs(rng, n=40, sep=4.0, d=3):
    X = np.vstack([rng.normal(size=(n, d)), rng.normal(size=(n, d)) + sep])
    y = [FAULTY] * n + [VALID] * n
    return X, y


def test_svm_separable_training_accuracy():
    rng = np.random.default_rng(0)
    for kernel in ("linear", "rbf"):
        X, y = two_blobs(rng)
        model = train_svm(X, y, VALID, C=10.0, kernel=kernel, gamma=0.5)
        assert model.converged
        assert model.predict(X) == y


def test_svm_dual_feasibility():
    rng = np.random.default_rng(1)
    X, y = two_blobs(rng, sep=1.0)
    model = train_svm(X, y, VALID, C=0.7, kernel="rbf", gamma=0.3)
    assert (model.alpha > 0).all() and (model.alpha <= 0.7 + 1e-12).all()
    assert abs(model.dual_coef.sum()) < 1e-9


def test_svm_kkt_at_convergence():
    rng = np.random.default_rng(2)
    X, y = two_blobs(rng, sep=1.5)
    model = train_svm(X, y, VALID, C=1.0, kernel="rbf", gamma=0.3, tol=1e-6)
    f = model.decision_function(X)
    yy = np.array([1.0 if lab == VALID else -1.0 for lab in y])
    margins = yy * f
    # points strictly outside the margin must have zero weight
    sv_rows = {tuple(r) for r in model.support_vectors}
    Z = model.stats.transform(X)
    for z, m in zip(Z, margins):
        if m > 1 + 1e-4:
            assert tuple(z) not in sv_rows


def test_svm_duplicated_rows_same_decision():
    rng = np.random.default_rng(3)
    X, y = two_blobs(rng, n=25, sep=1.2)
    X, y = np.vstack([X, X[:10], X[30:35]]), y + y[:10] + y[30:35]
    a = train_svm(X, y, VALID, kernel="rbf", gamma=0.3, tol=1e-9, seed=0)
    b = train_svm(X, y, VALID, kernel="rbf", gamma=0.3, tol=1e-9, seed=7)
    grid = rng.normal(size=(50, 3)) * 2
    np.testing.assert_allclose(a.decision_function(grid), b.decision_function(grid), atol=1e-6)


def test_svm_matches_sklearn():
    svc_mod = pytest.importorskip("sklearn.svm")
    rng = np.random.default_rng(4)
    X, y = two_blobs(rng, n=30, sep=1.0)
    ours = train_svm(X, y, VALID, C=1.0, kernel="rbf", gamma=0.4, tol=1e-8)
    Z = ours.stats.transform(X)
    ref = svc_mod.SVC(C=1.0, kernel="rbf", gamma=0.4, tol=1e-8).fit(Z, [1 if v == VALID else -1 for v in y])
    grid = rng.normal(size=(40, 3))
    np.testing.assert_allclose(ours.decision_function(grid), ref.decision_function(ours.stats.transform(grid)),
                               atol=1e-4)


def test_svm_single_class():
    with pytest.raises(SingleClassTraining):
        train_svm(np.zeros((3, 2)), [VALID] * 3, VALID)


def test_standardization_constant_feature():
    stats = StandardizationStats.fit([[1.0, 5.0], [3.0, 5.0]])
    np.testing.assert_allclose(stats.transform([[2.0, 9.0]]), [[0.0, 0.0]])
    np.testing.assert_allclose(stats.transform([[3.0, 5.0]]), [[1.0, 0.0]])


def test_kernel_matrix():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(kernel_matrix(X, X, "linear", 1.0), [[0, 0], [0, 2]])
    np.testing.assert_allclose(kernel_matrix(X, X, "rbf", 0.5), [[1, np.exp(-1)], [np.exp(-1), 1]])
    with pytest.raises(ValueError):
        kernel_matrix(X, X, "poly", 1.0)


def test_margin_zero_goes_to_other_class():
    stats = StandardizationStats(np.zeros(9), np.ones(9))
    model = SvmModel("linear", 1.0, 1.0, np.zeros((0, 9)), np.zeros(0), np.zeros(0), np.zeros(0), 0.0, stats,
                     VALID, FAULTY, 0)
    label, margin = svm_classify(nm(True, 0.5), model)
    assert margin == 0.0 and label == FAULTY


def test_model_round_trip(tmp_path):
    rows = [(nm(True, 0.9, 4), VALID), (nm(True, 0.8, 3), VALID), (nm(False, 0.0), FAULTY),
            (nm(True, 0.1, 1), FAULTY), (nm(True, 0.7, 5), VALID), (nm(False, 0.0, 2), FAULTY)]
    data = make_dataset(rows)
    svm = fit_svm(data, VALID)
    models = TrainedModels(VALID, tune_threshold(data), svm, data.bug_ids, {"seed": 0})
    path = tmp_path / "m.json"
    models.save(path)
    back = TrainedModels.load(path)
    np.testing.assert_array_equal(back.svm.decision_function(data.X), svm.decision_function(data.X))
    assert back.threshold == models.threshold
    back.save(tmp_path / "m2.json")
    assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()


def test_model_version_checked():
    with pytest.raises(ValueError):
        TrainedModels.from_dict({"version": 99})
    with pytest.raises(ValueError):
        SvmModel.from_dict(json.loads('{"version": 0}'))
