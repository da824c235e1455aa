import cvxpy as cp
import numpy as np
import pytest
from sklearn.svm import SVC

from src.models.circuit import AnsatzSpec, Axis, GateSlot, Observable
from src.models.dataset import Dataset
from src.models.errors import ConfigurationError, ConvergenceError, DomainError, NumericError
from src.models.kernel import KernelMatrix, SvmModel
from src.services import ansatz, qkernel


def _rbf(x, gamma=0.5):
    d = x[:, None] - x[None, :]
    return np.exp(-gamma * d ** 2)


@pytest.fixture
def tiny_dlp_spec():
    return ansatz.dlp_layout(prime=11, num_qubits=3, num_layers=2)


@pytest.fixture
def tiny_dlp_data():
    x = np.array([1.0, 2.0, 3.0, 5.0, 7.0, 9.0])
    y = np.array([1.0, 1.0, -1.0, 1.0, -1.0, -1.0])
    return Dataset(x, y, name="tiny")


@pytest.fixture
def separable():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(-2, 0.6, size=12), rng.normal(2, 0.6, size=12)])
    y = np.concatenate([-np.ones(12), np.ones(12)])
    return x, y


class TestFidelityKernel:

    @pytest.mark.unit
    def test_kernel_properties(self, rng, tiny_dlp_spec, tiny_dlp_data):
        theta = ansatz.random_params(tiny_dlp_spec, rng)
        k = qkernel.kernel_matrix(tiny_dlp_spec, theta, tiny_dlp_data.inputs)
        np.testing.assert_allclose(np.diag(k.values), 1.0, atol=1e-12)
        assert np.all(k.values >= -1e-12) and np.all(k.values <= 1 + 1e-12)
        assert k.min_eigenvalue() > -1e-10

    @pytest.mark.unit
    def test_cross_kernel_matches(self, rng, tiny_dlp_spec, tiny_dlp_data):
        theta = ansatz.random_params(tiny_dlp_spec, rng)
        k = qkernel.kernel_matrix(tiny_dlp_spec, theta, tiny_dlp_data.inputs)
        rows = qkernel.cross_kernel(tiny_dlp_spec, theta, tiny_dlp_data.inputs[:2], tiny_dlp_data.inputs)
        np.testing.assert_allclose(rows, k.values[:2], atol=1e-12)


class TestAlignment:

    @pytest.mark.unit
    def test_ideal_kernel_has_unit_alignment(self):
        y = np.array([1.0, -1.0, 1.0, 1.0])
        assert qkernel.alignment(KernelMatrix(np.outer(y, y)), y) == pytest.approx(1.0)
        assert qkernel.alignment(KernelMatrix(np.zeros((4, 4))), y) == 0.0

    @pytest.mark.unit
    def test_labels_must_be_pm1(self):
        with pytest.raises(DomainError):
            qkernel.alignment(KernelMatrix(np.eye(2)), [0.0, 1.0])

    @pytest.mark.unit
    def test_gradient_methods_agree(self, rng, tiny_dlp_spec, tiny_dlp_data):
        theta = ansatz.random_params(tiny_dlp_spec, rng)
        a_ps, g_ps = qkernel.alignment_gradient(tiny_dlp_spec, theta, tiny_dlp_data, "parameter_shift")
        a_adj, g_adj = qkernel.alignment_gradient(tiny_dlp_spec, theta, tiny_dlp_data, "adjoint")
        assert a_ps == pytest.approx(a_adj)
        np.testing.assert_allclose(g_adj, g_ps, atol=1e-10)

    @pytest.mark.unit
    def test_gradient_matches_finite_difference(self, rng, tiny_dlp_spec, tiny_dlp_data):
        theta = ansatz.random_params(tiny_dlp_spec, rng).values
        _, grad = qkernel.alignment_gradient(tiny_dlp_spec, theta, tiny_dlp_data, "adjoint")

        def value(t):
            return qkernel.alignment(qkernel.kernel_matrix(tiny_dlp_spec, t, tiny_dlp_data.inputs), tiny_dlp_data.labels)

        h = 1e-6
        for l in range(0, theta.shape[0], 3):
            up = theta.copy()
            down = theta.copy()
            up[l] += h
            down[l] -= h
            assert grad[l] == pytest.approx((value(up) - value(down)) / (2 * h), abs=1e-6)

    @pytest.mark.unit
    def test_ascent_keeps_best_iterate(self, rng, tiny_dlp_spec, tiny_dlp_data):
        seen = []
        result = qkernel.optimize_alignment(
            tiny_dlp_spec, ansatz.random_params(tiny_dlp_spec, rng), tiny_dlp_data,
            steps=5, eta=0.1, method="adjoint", callback=lambda step, params, a: seen.append((step, a)),
        )
        assert [s for s, _ in seen] == [0, 1, 2, 3, 4, 5]
        assert len(result.history) == 6
        assert result.best_alignment == pytest.approx(max(result.history))
        assert result.best_alignment >= result.initial_alignment
        best = qkernel.alignment(qkernel.kernel_matrix(tiny_dlp_spec, result.params, tiny_dlp_data.inputs),
                                 tiny_dlp_data.labels)
        assert best == pytest.approx(result.best_alignment)

    @pytest.mark.unit
    def test_single_angle_toy_reaches_grid_maximum(self):
        # RY(θ) then RX(x) on {0, π}: K_12 = sin²θ
        spec = AnsatzSpec(
            num_qubits=1,
            num_layers=1,
            layer_template=(GateSlot.trainable(Axis.Y, 0), GateSlot.encoding(Axis.X, 0)),
            observable=Observable.single_z(0),
        )
        data = Dataset(np.array([0.0, np.pi]), np.array([1.0, -1.0]), name="toy")
        grid = np.linspace(0.0, 2 * np.pi, 2001)
        values = [qkernel.alignment(qkernel.kernel_matrix(spec, [t], data.inputs), data.labels) for t in grid]
        assert max(values) == pytest.approx(1 / np.sqrt(2), abs=1e-9)

        result = qkernel.optimize_alignment(spec, [0.6], data, steps=50, eta=0.5, method="parameter_shift")
        assert result.best_alignment == pytest.approx(max(values), abs=1e-6)
        kernel = qkernel.kernel_matrix(spec, result.params, data.inputs)
        assert kernel.values[0, 1] < 1e-6

    @pytest.mark.unit
    def test_zero_steps(self, rng, tiny_dlp_spec, tiny_dlp_data):
        theta = ansatz.random_params(tiny_dlp_spec, rng)
        result = qkernel.optimize_alignment(tiny_dlp_spec, theta, tiny_dlp_data, steps=0)
        np.testing.assert_array_equal(result.params.values, theta.values)
        assert result.best_step == 0


class TestSvm:

    @pytest.mark.unit
    def test_two_point_problem(self):
        model = qkernel.svm_train(KernelMatrix(np.eye(2)), [1, -1], C=1000)
        np.testing.assert_allclose(model.alphas, [1.0, 1.0], atol=1e-5)
        assert model.bias == pytest.approx(0.0, abs=1e-5)
        assert model.support_indices == [0, 1]
        assert qkernel.svm_predict(model, [1.0, 0.0]) == 1
        assert qkernel.svm_predict(model, [0.0, 1.0]) == -1

    @pytest.mark.unit
    @pytest.mark.parametrize("k,C,expected", [
        (np.eye(2), 1000.0, [1.0, 1.0]),
        (np.ones((2, 2)), 2.0, [2.0, 2.0]),
    ])
    def test_two_point_problems_match_grid_search(self, k, C, expected):
        y = np.array([1.0, -1.0])
        model = qkernel.svm_train(KernelMatrix(k), y, C=C)
        # y·α = 0 ties the two multipliers together
        grid = np.linspace(0.0, min(C, 4.0), 40001)
        q = np.outer(y, y) * k
        objective = [2 * a - 0.5 * np.array([a, a]) @ q @ np.array([a, a]) for a in grid]
        best = grid[int(np.argmax(objective))]
        np.testing.assert_allclose(model.alphas, [best, best], atol=1e-3)
        np.testing.assert_allclose(model.alphas, expected, atol=1e-3)

    @pytest.mark.unit
    def test_contradictory_duplicates_sit_at_bound(self):
        model = qkernel.svm_train(KernelMatrix(np.ones((2, 2))), [1, -1], C=5.0)
        assert model.alphas == [5.0, 5.0]
        assert model.support_indices == [0, 1]

    @pytest.mark.unit
    def test_dual_objective_never_decreases(self, separable, rng, tiny_dlp_spec, tiny_dlp_data):
        x, y = separable
        model = qkernel.svm_train(KernelMatrix(_rbf(x)), y, C=10.0, tol=1e-8, max_passes=1000)
        assert len(model.dual_objective_history) > 2
        assert np.all(np.diff(model.dual_objective_history) >= -1e-12)

        kernel = qkernel.kernel_matrix(tiny_dlp_spec, ansatz.random_params(tiny_dlp_spec, rng), tiny_dlp_data.inputs)
        model = qkernel.svm_train(kernel, tiny_dlp_data.labels, C=1000.0)
        assert np.all(np.diff(model.dual_objective_history) >= -1e-12)

    @pytest.mark.unit
    def test_sign_of_zero_is_positive(self):
        model = SvmModel(alphas=[0.0, 0.0], bias=0.0, C=1.0, support_indices=[], labels=[1, -1])
        assert qkernel.svm_predict(model, [0.3, 0.3]) == 1

    @pytest.mark.unit
    def test_matches_sklearn(self, separable):
        x, y = separable
        k = _rbf(x)
        model = qkernel.svm_train(KernelMatrix(k), y, C=10.0, tol=1e-8, max_passes=1000)
        reference = SVC(kernel="precomputed", C=10.0, tol=1e-8).fit(k, y)
        np.testing.assert_allclose(qkernel.svm_decision(model, k), reference.decision_function(k), atol=1e-4)
        np.testing.assert_array_equal(qkernel.svm_predict(model, k), reference.predict(k).astype(int))

    @pytest.mark.unit
    def test_dual_objective_matches_convex_solver(self, separable):
        x, y = separable
        k = _rbf(x, gamma=2.0)
        C = 1.0
        model = qkernel.svm_train(KernelMatrix(k), y, C=C, tol=1e-8, max_passes=1000)

        alpha = cp.Variable(y.shape[0])
        q = np.outer(y, y) * k
        objective = cp.Maximize(cp.sum(alpha) - 0.5 * cp.quad_form(alpha, cp.psd_wrap(q)))
        problem = cp.Problem(objective, [alpha >= 0, alpha <= C, y @ alpha == 0])
        problem.solve()

        a = np.asarray(model.alphas)
        ours = a.sum() - 0.5 * a @ q @ a
        assert ours == pytest.approx(problem.value, rel=1e-4)
        assert np.all(a >= 0) and np.all(a <= C + 1e-12)
        assert abs(y @ a) < 1e-8
        assert model.dual_objective_history[-1] == pytest.approx(ours, rel=1e-9)

    @pytest.mark.unit
    def test_pass_limit(self, separable):
        x, y = separable
        with pytest.raises(ConvergenceError) as info:
            qkernel.svm_train(KernelMatrix(_rbf(x)), y, C=10.0, max_passes=0)
        assert info.value.diagnostics["updates"] == 0

    @pytest.mark.unit
    def test_rejects_bad_input(self):
        with pytest.raises(NumericError):
            qkernel.svm_train(KernelMatrix(np.array([[1.0, 2.0], [2.0, 1.0]])), [1, -1])
        with pytest.raises(DomainError):
            qkernel.svm_train(KernelMatrix(np.eye(2)), [1, 2])
        with pytest.raises(ConfigurationError):
            qkernel.svm_train(KernelMatrix(np.eye(2)), [1, -1], C=0.0)

    @pytest.mark.unit
    def test_model_serialises_without_history(self):
        model = qkernel.svm_train(KernelMatrix(np.eye(2)), [1, -1])
        assert "dual_objective_history" not in model.model_dump()
