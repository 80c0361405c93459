import numpy as np
import pytest
from scipy import optimize, sparse

from btclass.config import SvmConfig
from btclass.corpus import CategorySet
from btclass.svm import (TIE_BREAKS, BinaryLinearModel, OvoModel, Prediction, TrainConfig, decision, predict,
                         primal_objective, train_binary, train_ovo)

TIGHT = TrainConfig(c=1.0, tolerance=1e-6, max_epochs=2000, seed=0)


def reference_objective(X, y, c):
    """
    Minimize the primal over (w, b, slack) with SLSQP; returns the optimal objective value.
    """
    n, d = X.shape

    def objective(z):
        w, xi = z[:d], z[d + 1:]
        return 0.5 * w @ w + c * xi.sum()

    def gradient(z):
        g = np.zeros_like(z)
        g[:d] = z[:d]
        g[d + 1:] = c
        return g

    def margins(z):
        w, b, xi = z[:d], z[d], z[d + 1:]
        return y * (X @ w + b) - 1 + xi

    A = np.hstack([y[:, None] * X, y[:, None], np.eye(n)])
    constraints = [{"type": "ineq", "fun": margins, "jac": lambda z: A}]
    bounds = [(None, None)] * (d + 1) + [(0, None)] * n
    z0 = np.concatenate([np.zeros(d + 1), np.full(n, 2.0)])
    result = optimize.minimize(objective, z0, jac=gradient, bounds=bounds, constraints=constraints, method="SLSQP",
                               options={"maxiter": 1000, "ftol": 1e-10})
    return result.fun


def random_instance(rng):
    n = int(rng.integers(4, 21))
    d = int(rng.integers(1, 4))
    X = rng.normal(size=(n, d))
    y = np.where(X @ rng.normal(size=d) + 0.5 * rng.normal(size=n) > 0, 1, -1)
    y[0], y[1] = 1, -1
    return X, y


def test_two_points():
    model = train_binary(np.array([[-1.0], [1.0]]), [-1, 1], TrainConfig(c=100.0))
    assert model.weights[0] == pytest.approx(1.0, abs=1e-3)
    assert model.bias == pytest.approx(0.0, abs=1e-3)
    assert decision(model, np.array([-2.0])) < 0
    assert decision(model, np.array([0.5])) == pytest.approx(0.5, abs=1e-3)


def test_one_dimensional_input():
    model = train_binary(np.array([-1.0, 1.0]), [-1, 1], TrainConfig(c=100.0))
    assert model.dimension == 1


def test_constant_model():
    model = train_binary(np.array([[1.0, 2.0], [3.0, 4.0]]), [1, 1])
    assert model.is_constant
    for x in ([0.0, 0.0], [-5.0, 3.0], [100.0, -100.0]):
        assert decision(model, np.array(x)) >= 0
    model = train_binary(np.array([[1.0, 2.0]]), [-1])
    assert decision(model, np.array([1.0, 2.0])) < 0


def test_decision_arithmetic():
    assert decision(BinaryLinearModel(np.zeros(3), 0.5), np.array([1.0, -2.0, 3.0])) == 0.5
    assert decision(BinaryLinearModel(np.ones(1), 0.0), np.array([0.5])) == 0.5
    with pytest.raises(ValueError):
        decision(BinaryLinearModel(np.ones(2), 0.0), np.array([0.5]))


def test_xor_terminates():
    X = np.array([[-1.0], [0.0], [1.0]])
    y = [1, -1, 1]
    model, trace = train_binary(X, y, TrainConfig(max_epochs=5), return_trace=True)
    assert np.all(np.isfinite(model.weights)) and np.isfinite(model.bias)
    assert np.isfinite(primal_objective(model, X, y, 1.0))
    assert trace.iterations <= 5 * 3


@pytest.mark.parametrize("seed", range(25))
def test_matches_reference_minimizer(seed):
    rng = np.random.default_rng(seed)
    X, y = random_instance(rng)
    model = train_binary(X, y, TIGHT)
    ours = primal_objective(model, X, y, TIGHT.c)
    reference = reference_objective(X, y.astype(float), TIGHT.c)
    assert ours <= reference + 1e-2 * max(1.0, abs(reference))
    assert ours >= reference - 1e-2 * max(1.0, abs(reference))


@pytest.mark.parametrize("seed", range(5))
def test_dual_objective_non_increasing(seed):
    rng = np.random.default_rng(100 + seed)
    X = rng.normal(size=(60, 5))
    y = np.where(rng.normal(size=60) > 0, 1, -1)
    model, trace = train_binary(X, y, TIGHT, return_trace=True)
    assert trace.converged
    assert 0.0 <= trace.violation < TIGHT.tolerance
    assert len(trace.objective) >= 1
    assert np.all(np.diff(trace.objective) <= 1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_primal_objective_at_convergence(seed):
    rng = np.random.default_rng(100 + seed)
    X = rng.normal(size=(60, 5))
    y = np.where(rng.normal(size=60) > 0, 1, -1)
    model, trace = train_binary(X, y, TIGHT, return_trace=True)
    assert trace.primal.shape == trace.objective.shape
    final = trace.primal[-1]
    assert final == pytest.approx(primal_objective(model, X, y, TIGHT.c), rel=1e-6, abs=1e-8)
    # Weak duality: no hyperplane along the way beats the final dual bound.
    bound = -trace.objective[-1]
    slack = 1e-7 * max(1.0, abs(bound))
    assert np.all(trace.primal >= bound - slack)
    gap = final - bound
    assert gap <= 1e-3 * max(1.0, abs(final))
    assert final <= trace.primal.min() + gap + slack


def test_support_vectors_on_margin():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(size=(15, 2)) + [3, 3], rng.normal(size=(15, 2)) - [3, 3]])
    y = np.array([1] * 15 + [-1] * 15)
    model = train_binary(X, y, TrainConfig(c=1000.0, tolerance=1e-6))
    margins = y * (X @ model.weights + model.bias)
    assert margins.min() == pytest.approx(1.0, abs=1e-2)
    assert (margins >= 1 - 1e-2).all()


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(30, 4)) * (rng.random((30, 4)) < 0.5)
    y = np.where(X.sum(axis=1) > 0, 1, -1)
    y[0], y[1] = 1, -1
    dense = train_binary(X, y, TIGHT)
    sparse_model = train_binary(sparse.csr_matrix(X), y, TIGHT)
    np.testing.assert_allclose(dense.weights, sparse_model.weights)
    assert dense.bias == sparse_model.bias


def test_deterministic():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    y = np.where(X[:, 0] > 0, 1, -1)
    a = train_binary(X, y, SvmConfig(seed=4))
    b = train_binary(X, y, SvmConfig(seed=4))
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


@pytest.mark.parametrize("X, y", [
    (np.zeros((2, 1)), [1]),
    (np.zeros((0, 1)), []),
    (np.zeros((2, 1)), [1, 0]),
    (np.array([[np.inf], [0.0]]), [1, -1]),
])
def test_invalid_input(X, y):
    with pytest.raises(ValueError):
        train_binary(X, y)


def blobs(k, per_class, d, seed):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=5.0, size=(k, d))
    X = np.vstack([centers[c] + rng.normal(size=(per_class, d)) for c in range(k)])
    labels = [c for c in range(k) for _ in range(per_class)]
    return X, labels


def test_fifteen_categories():
    categories = CategorySet.default()
    X, idx = blobs(15, 4, 6, 0)
    labels = [categories.labels[i] for i in idx]
    model = train_ovo(X, labels, categories, n_threads=4)
    assert len(model.models) == 105
    assert model.pairs[0] == (0, 1) and model.pairs[-1] == (13, 14)
    assert model.train_counts.tolist() == [4] * 15
    correct = sum(p.category == label for p, label in zip(model.predict_many(X), labels))
    assert correct >= 0.9 * len(labels)


def test_two_categories_reduce_to_sign():
    categories = CategorySet(("Bank", "Payroll"))
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    model = train_ovo(X, ["Payroll", "Payroll", "Bank", "Bank"], categories, n_threads=1)
    assert len(model.models) == 1
    for x in ([-3.0], [3.0], [0.2]):
        prediction = predict(model, np.array(x))
        expected = "Bank" if decision(model.models[0], np.array(x)) >= 0 else "Payroll"
        assert prediction.category == expected
        assert sum(prediction.votes.values()) == 1
    assert predict(model, np.array([3.0])).votes == {"Bank": 1, "Payroll": 0}


def test_missing_category_gets_constant_models():
    categories = CategorySet(("Bank", "Shopping", "Payroll", "Others"))
    X, idx = blobs(3, 5, 2, 1)
    labels = [("Bank", "Shopping", "Others")[i] for i in idx]
    model = train_ovo(X, labels, categories, n_threads=2)
    payroll = categories.index("Payroll")
    for (a, b), m in zip(model.pairs, model.models):
        if payroll in (a, b):
            assert m.is_constant
            toward_first = decision(m, X[0]) >= 0
            assert toward_first == (b == payroll)
    assert all(p.category != "Payroll" for p in model.predict_many(X))


def test_single_category_warns(caplog):
    categories = CategorySet(("Bank", "Shopping"))
    model = train_ovo(np.ones((3, 2)), ["Shopping"] * 3, categories, n_threads=1)
    assert "Only 1 category" in caplog.text
    assert predict(model, np.ones(2)).category == "Shopping"


def test_prediction_tie_break_names():
    assert Prediction("A", {"A": 1, "B": 0}, "none").confidence == 1.0
    for name in TIE_BREAKS:
        assert Prediction("B", {"A": 1, "B": 1}, name).tie_break == name
    with pytest.raises(ValueError):
        Prediction("A", {"A": 1, "B": 0}, "coin")


def test_condorcet_cycle_margin_tie_break():
    categories = CategorySet(("A", "B", "C"))
    # Pairs (A,B), (A,C), (B,C): A beats B by 2, C beats A by 1, B beats C by 1.
    model = OvoModel(categories, np.zeros((3, 1)), np.array([2.0, -1.0, 1.0]), np.array([1, 1, 1]))
    prediction = predict(model, np.zeros(1))
    assert prediction.votes == {"A": 1, "B": 1, "C": 1}
    assert prediction.category == "A"
    assert prediction.tie_break == "margin"
    assert prediction.confidence == 0.5


def test_prior_and_order_tie_breaks():
    categories = CategorySet(("A", "B", "C"))
    biases = np.array([1.0, -1.0, 1.0])
    prediction = predict(OvoModel(categories, np.zeros((3, 1)), biases, np.array([1, 5, 5])), np.zeros(1))
    assert (prediction.category, prediction.tie_break) == ("B", "order")
    prediction = predict(OvoModel(categories, np.zeros((3, 1)), biases, np.array([1, 2, 5])), np.zeros(1))
    assert (prediction.category, prediction.tie_break) == ("C", "prior")


def test_zero_vector_is_deterministic():
    categories = CategorySet(("A", "B", "C", "D"))
    model = OvoModel(categories, np.ones((6, 2)), np.zeros(6), np.array([3, 3, 3, 3]))
    first = predict(model, np.zeros(2))
    assert first.category == "A" and first.tie_break == "none"
    assert all(predict(model, np.zeros(2)) == first for _ in range(5))


def test_votes_sum_to_pair_count():
    categories = CategorySet.default()
    X, idx = blobs(15, 3, 4, 2)
    model = train_ovo(X, [categories.labels[i] for i in idx], categories, n_threads=4)
    rng = np.random.default_rng(0)
    for p in model.predict_many(rng.normal(size=(50, 4))):
        assert sum(p.votes.values()) == 105
        assert p.category in categories
        assert 0.0 <= p.confidence <= 1.0


def test_ovo_deterministic():
    categories = CategorySet(("A", "B", "C"))
    X, idx = blobs(3, 10, 3, 4)
    labels = [categories.labels[i] for i in idx]
    a = train_ovo(X, labels, categories, n_threads=3)
    b = train_ovo(X, labels, categories, n_threads=1)
    assert a.weights.tobytes() == b.weights.tobytes()
    assert a.biases.tobytes() == b.biases.tobytes()


def test_ovo_errors():
    categories = CategorySet(("A", "B"))
    with pytest.raises(ValueError):
        train_ovo(np.zeros((0, 2)), [], categories)
    with pytest.raises(ValueError):
        train_ovo(np.zeros((2, 2)), ["A"], categories)
    model = train_ovo(np.array([[0.0], [1.0]]), ["A", "B"], categories, n_threads=1)
    with pytest.raises(ValueError):
        model.margins(np.zeros((1, 3)))
