import numpy as np
import pytest

from gauge_ot.bvp import (BvpProblem, action_functional, controls_shape, fourier_basis, geodesic_from_covector,
                          objective_and_gradient, path_relax, shoot, wasserstein_1d_oracle)
from gauge_ot.errors import PreconditionViolation
from gauge_ot.fiber import expm, project_flavor
from gauge_ot.fixtures import geodesic_instance, random_matrix_density, random_vector_half_density, von_mises
from gauge_ot.grid import PeriodicGrid


def _endpoint(space, grid, k, rng):
    if space.startswith("vh"):
        return random_vector_half_density(grid, k, rng, balanced=(space == "vhprob"))
    return random_matrix_density(grid, k, rng, normalized=(space == "mprob"))


# -- action functional ---------------------------------------------------------------

def test_action_of_zero_controls(rng):
    g = PeriodicGrid((16,))
    w = random_vector_half_density(g, 2, rng)
    U, A = (np.zeros(s) for s in controls_shape(g, 2, 4))
    action, y1 = action_functional(g, "vhprob", (U, A), w)
    assert action == 0.0 and np.array_equal(y1, w)


def test_action_of_translation(rng):
    g = PeriodicGrid((32,))
    w = random_vector_half_density(g, 2, rng)
    U, A = (np.zeros(s) for s in controls_shape(g, 2, 16))
    U[:] = 0.3
    action, _ = action_functional(g, "vhprob", (U, A), w)
    # RK4 damps the highest grid modes slightly at Courant number 0.6
    assert action == pytest.approx(0.09, rel=1e-6)


def test_action_of_constant_gauge(rng):
    g = PeriodicGrid((32,))
    w = random_vector_half_density(g, 2, rng)
    U, A = (np.zeros(s) for s in controls_shape(g, 2, 8))
    a0 = np.array([[0.0, -0.5], [0.5, 0.0]])
    A[:] = a0
    action, y1 = action_functional(g, "vhprob", (U, A), w)
    # RK4 keeps |w| only up to its O(dt^4) rotation error
    assert action == pytest.approx(float(np.trace(a0 @ a0.T)), rel=1e-8)
    assert np.allclose(y1, w @ expm(a0, 1.0).T, atol=1e-6)


@pytest.mark.parametrize("space", ["vhprob", "vhdens", "mdens", "mprob"])
def test_adjoint_gradient_matches_finite_differences(space):
    rng = np.random.default_rng(11)
    g = PeriodicGrid((16,))
    k = 2
    y0 = _endpoint(space, g, k, rng)
    y1 = _endpoint(space, g, k, rng)
    us, as_ = controls_shape(g, k, 4)
    U = 0.02 * rng.normal(size=us)
    A = 0.1 * rng.normal(size=as_)
    if space.startswith("vh"):
        A = project_flavor(A, "so" if space == "vhprob" else "conf")
    J, (Ug, Ag), _ = objective_and_gradient(g, space, (U, A), y0, y1, penalty=3.0)
    for _ in range(10):
        dU, dA = 0.1 * rng.normal(size=us), rng.normal(size=as_)
        if space.startswith("vh"):
            dA = project_flavor(dA, "so" if space == "vhprob" else "conf")
        eps = 1e-6
        jp = objective_and_gradient(g, space, (U + eps * dU, A + eps * dA), y0, y1, penalty=3.0)[0]
        jm = objective_and_gradient(g, space, (U - eps * dU, A - eps * dA), y0, y1, penalty=3.0)[0]
        fd = (jp - jm) / (2 * eps)
        an = np.sum(Ug * dU) + np.sum(Ag * dA)
        assert abs(fd - an) <= 1e-4 * max(1.0, abs(fd))


# -- oracle ---------------------------------------------------------------------------

def test_oracle_identical():
    g = PeriodicGrid((256,))
    r = von_mises(g, 0.5, 20.0)
    assert wasserstein_1d_oracle(g, r, r) == pytest.approx(0.0, abs=1e-12)


def test_oracle_translation():
    g = PeriodicGrid((256,))
    c = 0.05
    r0, r1 = von_mises(g, 0.5, 40.0, floor=0.0), von_mises(g, 0.5 + c, 40.0, floor=0.0)
    assert wasserstein_1d_oracle(g, r0, r1) == pytest.approx(c ** 2, abs=1e-4)


def test_oracle_two_bumps():
    g = PeriodicGrid((512,))
    r0, r1 = von_mises(g, 0.35, 200.0, floor=0.0), von_mises(g, 0.65, 200.0, floor=0.0)
    assert wasserstein_1d_oracle(g, r0, r1, cut=0.0) == pytest.approx(0.09, abs=1e-3)


def test_oracle_rejects_mass_at_cut():
    g = PeriodicGrid((64,))
    with pytest.raises(PreconditionViolation):
        wasserstein_1d_oracle(g, np.ones(64), np.ones(64))


def test_oracle_rejects_2d():
    g = PeriodicGrid((8, 8))
    with pytest.raises(ValueError):
        wasserstein_1d_oracle(g, np.ones((8, 8)), np.ones((8, 8)))


# -- solvers --------------------------------------------------------------------------

def test_problem_validation(rng):
    g = PeriodicGrid((16,))
    w = random_vector_half_density(g, 2, rng)
    with pytest.raises(ValueError):
        BvpProblem("nope", g, w, w)
    with pytest.raises(ValueError):
        BvpProblem("vhprob", g, w, w[:, :1])


@pytest.mark.parametrize("space", ["vhprob", "mdens"])
def test_identical_endpoints(rng, space):
    g = PeriodicGrid((16,))
    y = _endpoint(space, g, 2, rng)
    prob = BvpProblem(space, g, y, y, steps=4)
    for sol in (path_relax(prob), shoot(prob)):
        assert sol.distance_sq == pytest.approx(0.0, abs=1e-12)
        assert sol.endpoint_residual == pytest.approx(0.0, abs=1e-10)
        assert sol.converged


def test_relax_pure_gauge_rotation(rng):
    g = PeriodicGrid((16,))
    w0 = random_vector_half_density(g, 2, rng)
    alpha = 0.3
    R = expm(np.array([[0.0, -alpha], [alpha, 0.0]]), 1.0)
    w1 = w0 @ R.T
    sol = path_relax(BvpProblem("vhprob", g, w0, w1, steps=8))
    assert sol.converged
    assert 0.0 < sol.distance_sq <= 2 * alpha ** 2 * 1.01


def test_shoot_recovers_generating_geodesic():
    g, y0, y1, cov, cost = geodesic_instance("vhprob", 3, n=32)
    sol = shoot(BvpProblem("vhprob", g, y0, y1))
    assert sol.converged
    assert sol.distance_sq == pytest.approx(cost, rel=1e-4)


def test_geodesic_from_zero_covector(rng):
    g = PeriodicGrid((16,))
    Sigma = random_matrix_density(g, 2, rng)
    y1, energy = geodesic_from_covector(g, "mprob", Sigma, np.zeros_like(Sigma))
    assert energy == 0.0 and np.allclose(y1, Sigma, atol=1e-14)


def test_fourier_basis_shapes():
    assert fourier_basis(PeriodicGrid((16,)), 3).shape == (5, 16)
    assert fourier_basis(PeriodicGrid((8, 8)), 2).shape == (9, 8, 8)


def test_solution_to_dict(rng):
    g = PeriodicGrid((16,))
    w = random_vector_half_density(g, 2, rng)
    d = shoot(BvpProblem("vhprob", g, w, w)).to_dict()
    assert set(d) == {"distance_sq", "endpoint_residual", "converged", "iterations", "seed"}

