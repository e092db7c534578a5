
import numpy as np
import pytest

from costformer.dataio import DatasetTable
from costformer.resample import (ConvergenceWarning, NeighborIndex, ResampleReport, dual_objective, enn_marks,
                                 enn_pass, fit_linear_svm, knn_query, repeated_enn, svm_smote)
from costformer.resample.knn import standardize
from costformer.rng import RngStream

from conftest import make_table


def T(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return DatasetTable(X, np.asarray(y), [f"f{j}" for j in range(X.shape[1])])


# -- neighbours ---------------------------------------------------------------------

def brute_knn(ref, q, k, skip=None):
    d = ((ref - q) ** 2).sum(axis=1)
    order = sorted(range(len(ref)), key=lambda i: (d[i], i))
    return [i for i in order if i != skip][:k]


def test_knn_line_and_self_exclusion():
    idx = NeighborIndex(np.array([[0.0], [10.0]]))
    assert knn_query(idx, [1.0], 1).tolist() == [0]
    assert 0 not in knn_query(idx, [0.0], 1, exclude_self=0).tolist()


def test_knn_matches_brute_force():
    g = np.random.default_rng(0)
    ref = g.standard_normal((20, 3))
    idx = NeighborIndex(ref)
    for i in range(20):
        assert knn_query(idx, ref[i], 5, exclude_self=i).tolist() == brute_knn(ref, ref[i], 5, skip=i)
    q = g.standard_normal((7, 3))
    got = idx.query(q, 5)
    for r in range(7):
        assert got[r].tolist() == brute_knn(ref, q[r], 5)


def test_knn_ties_by_index():
    ref = np.array([[1.0], [-1.0], [1.0], [-1.0]])
    assert knn_query(NeighborIndex(ref), [0.0], 4).tolist() == [0, 1, 2, 3]


def test_knn_k_too_large():
    with pytest.raises(ValueError):
        knn_query(NeighborIndex(np.zeros((3, 1))), [0.0], 3, exclude_self=0)


def test_knn_large_block_against_brute_force():
    g = np.random.default_rng(1)
    ref = g.standard_normal((1500, 4)) * [1, 1e3, 1e-3, 5]
    idx = NeighborIndex(ref, standardized=True)
    Z = standardize(ref)
    rows = np.arange(0, 1500, 97)
    got = idx.query(ref[rows], 3, rows)
    for r, i in zip(got, rows):
        assert r.tolist() == brute_knn(Z, Z[i], 3, skip=i)


# -- linear SVM ----------------------------------------------------------------------

def qp_oracle(X, y, C, iters=200_000):
    """Projected gradient on the box-constrained dual."""
    Xa = np.hstack([X, np.ones((len(X), 1))])
    Q = (y[:, None] * Xa) @ (y[:, None] * Xa).T
    step = 1.0 / np.linalg.eigvalsh(Q).max()
    a = np.zeros(len(X))
    for _ in range(iters):
        a = np.clip(a - step * (Q @ a - 1.0), 0.0, C)
    return 0.5 * a @ Q @ a - a.sum()


def test_svm_symmetric_pair():
    m = fit_linear_svm(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), C=100.0)
    assert m.weights[0] > 0 and m.support.tolist() == [0, 1]


def test_svm_separable_blobs():
    g = np.random.default_rng(2)
    X = np.vstack([g.normal(-4, 0.5, (40, 2)), g.normal(4, 0.5, (40, 2))])
    y = np.r_[-np.ones(40), np.ones(40)]
    m = fit_linear_svm(X, y, C=10.0)
    assert np.all(np.sign(m.decision_function(X)) == y)


def test_svm_dual_matches_qp_oracle():
    g = np.random.default_rng(3)
    X = g.standard_normal((10, 2))
    y = np.where(X[:, 0] + 0.5 * g.standard_normal(10) > 0, 1.0, -1.0)
    m = fit_linear_svm(X, y, C=1.0, tol=1e-8, max_iter=100_000)
    assert abs(dual_objective(m, X, y) - qp_oracle(X, y, 1.0)) <= 1e-3


def test_svm_weight_identity_and_box():
    g = np.random.default_rng(4)
    X = g.standard_normal((60, 3))
    y = np.where(X @ [1, -1, 0.5] + 0.3 * g.standard_normal(60) > 0, 1.0, -1.0)
    m = fit_linear_svm(X, y, C=0.5)
    w = (m.dual * y) @ np.hstack([X, np.ones((60, 1))])
    np.testing.assert_allclose(np.r_[m.weights, m.bias], w, rtol=1e-8, atol=1e-10)
    assert np.all((m.dual >= 0) & (m.dual <= 0.5))
    assert m.support.tolist() == np.flatnonzero(m.dual > 1e-8).tolist()


def test_svm_nonconvergence_warns_but_returns():
    g = np.random.default_rng(5)
    X = g.standard_normal((200, 3))
    y = np.where(g.random(200) < 0.5, 1.0, -1.0)
    with pytest.warns(ConvergenceWarning):
        m = fit_linear_svm(X, y, C=100.0, max_iter=2)
    assert not m.converged and m.sweeps == 2


def test_svm_input_errors():
    with pytest.raises(ValueError):
        fit_linear_svm(np.zeros((2, 1)), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        fit_linear_svm(np.zeros((2, 1)), np.array([1.0, -1.0]), C=0.0)


# -- SVM-SMOTE ----------------------------------------------------------------------------

def test_smote_hits_target_and_keeps_majority():
    t = make_table(n=400, d=5, pos_frac=0.1, seed=1)
    out, rep = svm_smote(t, 0.5, 5, 1.0, RngStream(0, "resample"))
    n_neg = int((t.labels == 0).sum())
    assert int((out.labels == 1).sum()) == round(0.5 * n_neg)
    np.testing.assert_array_equal(out.features[: t.n_rows], t.features)
    np.testing.assert_array_equal(out.labels[: t.n_rows], t.labels)
    assert rep.synthetic == out.n_rows - t.n_rows
    assert rep.after_smote == {"negative": n_neg, "positive": round(0.5 * n_neg)}
    assert rep.generator_source == "minority_support_vectors"


@pytest.mark.filterwarnings("ignore::costformer.resample.ConvergenceWarning")
def test_smote_aps_scale_count():
    g = np.random.default_rng(0)
    y = np.r_[np.zeros(59000, int), np.ones(1000, int)]
    X = g.standard_normal((60000, 3)) + y[:, None]
    out, _ = svm_smote(T(X, y), 0.5, 5, 1.0, RngStream(0, "resample"))
    assert int((out.labels == 1).sum()) == 29500 and int((out.labels == 0).sum()) == 59000


def test_smote_convex_combination():
    t = make_table(n=200, d=4, pos_frac=0.15, seed=2)
    out, _ = svm_smote(t, 0.8, 3, 1.0, RngStream(1, "resample"))
    pos = t.features[t.labels == 1]
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    synth = out.features[t.n_rows:]
    assert np.all(synth >= lo - 1e-12) and np.all(synth <= hi + 1e-12)


def test_smote_zero_beta_duplicates_sources():
    t = make_table(n=200, d=4, pos_frac=0.15, seed=3)
    out, _ = svm_smote(t, 0.5, 5, 1.0, RngStream(0, "resample"), beta_fn=lambda rng, n: np.zeros(n))
    pos = {tuple(r) for r in t.features[t.labels == 1]}
    assert all(tuple(r) in pos for r in out.features[t.n_rows:])


def test_smote_deterministic_per_seed():
    t = make_table(n=200, d=4, pos_frac=0.15, seed=3)
    a, _ = svm_smote(t, 0.5, 5, 1.0, RngStream(7, "resample"))
    b, _ = svm_smote(t, 0.5, 5, 1.0, RngStream(7, "resample"))
    c, _ = svm_smote(t, 0.5, 5, 1.0, RngStream(8, "resample"))
    assert a.features.tobytes() == b.features.tobytes()
    assert a.features.tobytes() != c.features.tobytes()


def test_smote_fallback_to_all_minority():
    # positives deep inside the negatives: a C this small leaves no positive support vector
    X = np.r_[np.linspace(-1, 1, 20), [0.01, 0.02, 0.03]]
    y = np.r_[np.zeros(20, int), np.ones(3, int)]
    out, rep = svm_smote(T(X, y), 0.5, 2, 1e-9, RngStream(0, "resample"))
    assert rep.generator_source in {"all_minority", "minority_support_vectors"}
    assert int((out.labels == 1).sum()) == 10


def test_smote_errors():
    with pytest.raises(ValueError, match="at least 2"):
        svm_smote(T([0.0, 1.0, 2.0], [0, 0, 1]), 0.5, 5, 1.0, RngStream(0, "resample"))
    with pytest.raises(ValueError):
        svm_smote(T([0.0, 1.0, 2.0, 3.0], [0, 0, 1, 1]), 0.5, 5, 1.0, RngStream(0, "resample"))


# -- ENN ----------------------------------------------------------------------------------

SIX_X = [0.0, 0.2, 0.4, 0.3, 5.0, 5.1]
SIX_Y = [1, 1, 1, 0, 0, 0]


def enn_oracle(x, y, k):
    """Enumerate each majority point's neighbour set on the line."""
    out = []
    for i in range(len(x)):
        if y[i] != 0:
            continue
        near = sorted((j for j in range(len(x)) if j != i), key=lambda j: (abs(x[j] - x[i]), j))[:k]
        if sum(y[j] != 0 for j in near) > k / 2:
            out.append(i)
    return out


def test_enn_surrounded_point_removed_and_far_cluster_kept():
    t = T([0.0, -0.1, 0.1, 0.05, 10.0, 10.1, 10.2, 10.3], [0, 1, 1, 1, 0, 0, 0, 0])
    out, n = enn_pass(t, 3)
    assert n == 1 and out.features[:, 0].tolist() == [-0.1, 0.1, 0.05, 10.0, 10.1, 10.2, 10.3]


def test_enn_six_point_instance_pass():
    assert enn_oracle(SIX_X, SIX_Y, 3) == [3]
    out, n = enn_pass(T(SIX_X, SIX_Y), 3)
    assert n == 1 and 0.3 not in out.features[:, 0]


def test_enn_six_point_repeated():
    out, rep = repeated_enn(T(SIX_X, SIX_Y), 3)
    # after the first pass the two remaining majority points are outnumbered
    assert rep.enn_passes == 1 and rep.stop_reason == "class_flip" and rep.enn_removed == [1]
    # the flip rule is what stops it; a second pass would remove both remaining majority points
    assert enn_oracle([0.0, 0.2, 0.4, 5.0, 5.1], [1, 1, 1, 0, 0], 3) == [3, 4]


def test_enn_stable_table_converges_in_one_pass():
    t = T([0.0, 0.1, 0.2, 0.3, 9.0, 9.1, 9.2, 9.3], [0, 0, 0, 0, 1, 1, 1, 1])
    out, rep = repeated_enn(t, 3)
    assert (rep.enn_passes, rep.enn_removed, rep.stop_reason) == (1, [0], "converged")


def test_enn_marks_match_oracle_random_line():
    g = np.random.default_rng(6)
    for _ in range(20):
        x = g.random(15).round(6)
        y = (g.random(15) < 0.4).astype(int)
        if y.min() == y.max():
            continue
        assert np.flatnonzero(enn_marks(x[:, None], y, 3)).tolist() == enn_oracle(x, y, 3)


def test_repeated_enn_monotone_and_minority_kept():
    t = make_table(n=300, d=4, pos_frac=0.3, shift=1.0, seed=4)
    out, rep = repeated_enn(t, 3, report=ResampleReport())
    assert int((out.labels == 1).sum()) == int((t.labels == 1).sum())
    rows = {tuple(r) for r in t.features}
    assert all(tuple(r) in rows for r in out.features)
    assert rep.stop_reason == "converged" and rep.enn_removed[-1] == 0
    assert enn_pass(out, 3)[1] == 0


def test_repeated_enn_max_iter():
    t = make_table(n=300, d=4, pos_frac=0.3, shift=1.0, seed=4)
    _, rep = repeated_enn(t, 3, max_iter=1)
    assert rep.enn_passes == 1 and rep.stop_reason == "max_iter"


def test_enn_errors():
    with pytest.raises(ValueError):
        enn_marks(np.zeros((5, 1)), np.array([0, 1, 0, 1, 0]), 2)
    with pytest.raises(ValueError):
        enn_pass(T([0.0, 1.0, 2.0], [0, 1, 0]), 3)
    with pytest.raises(ValueError):
        repeated_enn(T([0.0, 1.0, 2.0, 4.0, 5.0], [0, 1, 0, 1, 0]), 3, max_iter=0)
