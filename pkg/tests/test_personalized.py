import numpy as np
import pytest

from mcid import (
    Dataset,
    DcaConfig,
    dca_fit,
    gaussian_kernel,
    gram,
    linear_kernel,
    load_model,
    objective,
    save_model,
    solve_inner,
)
from mcid.errors import DimensionMismatch
from mcid.kernels import cross_gram, kernel_eval
from mcid.personalized import (
    PersonalizedModel,
    _basis_for,
    _dca_on_basis,
    _exact_objective,
    _minimize_inner,
    _smoothed_fg,
    dc_objective_parts,
    linear_coefficients,
)
from mcid.rng import make_rng
from mcid.simulate import SimulationScenario, generate


def zero_model(anchors, kernel, delta=0.1, lam=1.0, b=0.0):
    anchors = np.asarray(anchors, dtype=float)
    return PersonalizedModel(
        b=b,
        w=np.zeros(anchors.shape[0]),
        anchors=anchors,
        kernel=kernel,
        delta=delta,
        lam=lam,
        trace=(0.0,),
    )


def random_problem(seed, n=40, scenario="pers1"):
    sc = SimulationScenario(scenario, n_train=n, n_test=10, seed=seed)
    train, _ = generate(sc)
    return train


# --- objective --------------------------------------------------------------

def test_objective_zero_when_margin_clears_delta():
    model = zero_model([[0.5]], linear_kernel())
    assert objective(model, Dataset([1.0], [1], [[0.5]])) == 0.0


def test_objective_capped_loss():
    model = zero_model([[0.5]], linear_kernel())
    assert objective(model, Dataset([-1.0], [1], [[0.5]])) == 1.0


def test_objective_interpolation_arm():
    model = zero_model([[0.5]], linear_kernel(), b=0.05)
    assert objective(model, Dataset([0.1], [1], [[0.5]])) == pytest.approx(0.5)


def test_objective_dimension_mismatch():
    model = zero_model([[0.5, 0.2]], linear_kernel())
    with pytest.raises(DimensionMismatch):
        objective(model, Dataset([1.0], [1], [[0.5]]))


def test_dc_parts_reconstruct_objective():
    train = random_problem(2, n=25)
    model = dca_fit(train, linear_kernel(), delta=0.1, lam=0.5)
    s1, s2 = dc_objective_parts(model, train)
    assert s1 - s2 == pytest.approx(objective(model, train), abs=1e-10)


# --- solve_inner -------------------------------------------------------------

def test_solve_inner_toy_matches_grid():
    # identical covariates: linear Gram is all zeros, so the subproblem
    # reduces to the offset alone; compare against a dense grid oracle
    train = Dataset([1.0, -1.0, 0.05], [1, -1, 1], [[0.0], [0.0], [0.0]])
    k = gram(linear_kernel(), train.z)
    sol = solve_inner(train, k, delta=0.1, lam=1.0)
    delta = 0.1

    def offset_objective(b):
        t = delta - train.y * (train.x - b)
        return np.maximum(t, 0.0).sum() / (3 * delta)

    grid = np.linspace(-2.0, 2.0, 4001)
    best = min(offset_objective(b) for b in grid)
    assert sol.objective <= best + 1e-3
    assert np.allclose(sol.w, 0.0)


def test_solve_inner_zero_tilt_origin_optimal():
    # all margins clear delta at the origin: (0, 0) is the global minimum
    train = Dataset([5.0, -5.0], [1, -1], [[1.0], [-1.0]])
    k = gram(linear_kernel(), train.z)
    sol = solve_inner(train, k, delta=0.1, lam=1.0, start=(0.0, np.zeros(2)))
    assert sol.objective <= 1e-12
    assert abs(sol.b) <= 5.0 - 0.1 + 1e-9
    assert float(sol.w @ k.values @ sol.w) == pytest.approx(0.0, abs=1e-9)


def test_solve_inner_penalty_domination():
    train = random_problem(3, n=30)
    k = gram(linear_kernel(), train.z)
    norms = []
    for lam in (0.1, 10.0, 1000.0):
        sol = solve_inner(train, k, delta=0.1, lam=lam)
        norms.append(float(np.sqrt(sol.w @ k.values @ sol.w)))
    assert norms[0] >= norms[1] >= norms[2]
    assert norms[2] <= 0.02


def test_solve_inner_smooth_gradient_finite_difference():
    train = random_problem(4, n=30)
    k = gram(gaussian_kernel(), train.z)
    basis = _basis_for(k)
    rng = make_rng(0)
    theta = rng.normal(size=basis.rank + 1) * 0.5
    tu = rng.normal(size=basis.rank) * 0.05
    args = (basis.phi, train.x, train.y, 0.1, 0.3, 0.02, tu, 1e-4)
    _, g = _smoothed_fg(theta, *args)
    eps = 1e-6
    for i in range(0, basis.rank + 1, 7):
        up, down = theta.copy(), theta.copy()
        up[i] += eps
        down[i] -= eps
        fd = (_smoothed_fg(up, *args)[0] - _smoothed_fg(down, *args)[0]) / (2 * eps)
        assert g[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)


# --- dca_fit -----------------------------------------------------------------

def test_dca_separated_toy():
    train = Dataset([10.0, -10.0], [1, -1], [[0.3], [0.7]])
    model = dca_fit(train, linear_kernel(), delta=0.1, lam=1.0)
    assert model.trace[-1] == pytest.approx(0.0, abs=1e-10)
    assert model.n_outer <= 2
    assert np.allclose(model.w, 0.0, atol=1e-6)
    assert abs(model.b) <= 9.9 + 1e-9


def test_dca_single_sample_offset_only():
    train = Dataset([0.0], [1], [[0.0]])
    model = dca_fit(train, linear_kernel(), delta=0.1, lam=1000.0)
    assert model.trace[-1] == pytest.approx(0.0, abs=1e-12)
    assert model.b == pytest.approx(-0.1, abs=1e-9)
    assert np.allclose(model.w, 0.0)


def test_dca_requires_covariates():
    with pytest.raises(DimensionMismatch):
        dca_fit(Dataset([0.0, 1.0], [1, -1]), linear_kernel())


def test_dca_rejects_bad_parameters():
    train = random_problem(5, n=10)
    with pytest.raises(ValueError):
        dca_fit(train, linear_kernel(), delta=0.0)
    with pytest.raises(ValueError):
        dca_fit(train, linear_kernel(), lam=-1.0)


@pytest.mark.parametrize("kernel", [linear_kernel(), gaussian_kernel()], ids=["lin", "gau"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dca_trace_nonincreasing(kernel, seed):
    train = random_problem(seed, n=60)
    for lam in (0.01, 1.0):
        model = dca_fit(train, kernel, delta=0.1, lam=lam)
        diffs = np.diff(model.trace)
        assert np.all(diffs <= 1e-10)


def test_dca_trace_matches_objective():
    train = random_problem(9, n=50)
    model = dca_fit(train, gaussian_kernel(), delta=0.1, lam=0.05)
    assert objective(model, train) == pytest.approx(model.trace[-1], abs=1e-9)


def test_dca_fitted_values_match_predict():
    train = random_problem(11, n=40)
    model = dca_fit(train, gaussian_kernel(), delta=0.1, lam=0.1)
    k = gram(model.kernel, model.anchors)
    fitted = model.b + k.values @ model.w
    assert np.allclose(model.predict(train.z), fitted, atol=1e-10)


def test_representer_closure_pairwise_eval():
    train = random_problem(13, n=15)
    model = dca_fit(train, gaussian_kernel(), delta=0.1, lam=0.2)
    direct = np.array(
        [
            model.b
            + sum(
                model.w[j] * kernel_eval(model.kernel, model.anchors[j], z)
                for j in range(len(model.w))
            )
            for z in train.z
        ]
    )
    assert np.allclose(model.predict(train.z), direct, atol=1e-9)


def test_dca_upper_envelope_property():
    train = random_problem(17, n=40)
    delta, lam = 0.1, 0.2
    model = dca_fit(train, linear_kernel(), delta=delta, lam=lam)
    n = len(train)
    s1_k, s2_k = dc_objective_parts(model, train)
    margins = train.y * (train.x - model.predict(train.z))
    active = margins < 0.0

    def surrogate(other):
        o1, _ = dc_objective_parts(other, train)
        # affine minorization of s2 at the fitted model
        grad_term = float(
            np.sum(train.y[active] * (other.predict(train.z) - model.predict(train.z))[active])
        ) / (n * delta)
        return o1 - (s2_k + grad_term)

    assert surrogate(model) == pytest.approx(objective(model, train), abs=1e-10)
    rng = make_rng(23)
    for _ in range(10):
        probe = PersonalizedModel(
            b=model.b + float(rng.normal() * 0.5),
            w=model.w + rng.normal(size=len(model.w)) * 0.05,
            anchors=model.anchors,
            kernel=model.kernel,
            delta=delta,
            lam=lam,
            trace=(0.0,),
        )
        assert surrogate(probe) >= objective(probe, train) - 1e-9


def test_dca_safeguard_keeps_descent(monkeypatch):
    # a sloppy inner solver must not produce an increasing trace
    import mcid.personalized as P

    real = P._minimize_inner
    state = {"count": 0}

    def sloppy(basis, x, y, delta, lam, tb, tu, b0, u0, config, cold=True):
        state["count"] += 1
        if state["count"] % 2 == 0:
            return b0 + 5.0, u0, np.inf, False, 1
        return real(basis, x, y, delta, lam, tb, tu, b0, u0, config, cold)

    monkeypatch.setattr(P, "_minimize_inner", sloppy)
    train = random_problem(19, n=30)
    model = P.dca_fit(train, linear_kernel(), delta=0.1, lam=0.5)
    assert np.all(np.diff(model.trace) <= 1e-10)


def test_warm_start_equals_cold_on_easy_problem():
    train = random_problem(29, n=40)
    k = gram(linear_kernel(), train.z)
    basis = _basis_for(k)
    cfg = DcaConfig()
    b1, u1, _ = _dca_on_basis(basis, train.x, train.y, 0.1, 5.0, cfg)
    b2, u2, _ = _dca_on_basis(
        basis, train.x, train.y, 0.1, 5.0, cfg, start=(b1, u1), warm=True
    )
    assert _exact_objective(b2, u2, basis, train.x, train.y, 0.1, 5.0) <= (
        _exact_objective(b1, u1, basis, train.x, train.y, 0.1, 5.0) + 1e-12
    )


# --- serialization -----------------------------------------------------------

def test_model_round_trip(tmp_path):
    train = random_problem(31, n=25, scenario="pers3")
    model = dca_fit(train, gaussian_kernel(), delta=0.1, lam=0.3)
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    assert back.b == model.b
    assert np.array_equal(back.w, model.w)
    assert np.array_equal(back.anchors, model.anchors)
    assert back.kernel == model.kernel
    assert back.trace == model.trace
    query = make_rng(1).normal(size=(20, 3))
    assert np.array_equal(back.predict(query), model.predict(query))


def test_load_rejects_unknown_schema(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"schema_version": 99}')
    with pytest.raises(ValueError):
        load_model(path)


def test_linear_coefficients_only_for_linear():
    train = random_problem(37, n=20)
    model = dca_fit(train, gaussian_kernel(), delta=0.1, lam=0.5)
    with pytest.raises(ValueError):
        linear_coefficients(model)


def test_fisher_consistency_trend_in_delta():
    # narrower ramps track the ideal per-patient threshold more closely
    from mcid.simulate import conditional_mean

    sc = SimulationScenario("pers1", n_train=2000, n_test=2000, seed=0)
    train, test = generate(sc)
    c_star = conditional_mean("pers1", test.z)
    deviations = []
    for delta in (0.5, 0.2, 0.1):
        model = dca_fit(train, linear_kernel(), delta=delta, lam=0.01)
        deviations.append(float(np.mean(np.abs(model.predict(test.z) - c_star))))
    assert deviations[0] > deviations[1] > deviations[2]
