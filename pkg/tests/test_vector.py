import numpy as np
import pytest
from hypothesis import given, strategies as st

from gauge_ot.errors import DegenerateDensity, PreconditionViolation, ShockTime
from gauge_ot.fiber import expm, frob, project_flavor, random_gauge_algebra
from gauge_ot.fixtures import random_vector_half_density
from gauge_ot.grid import PeriodicGrid, interpolate, random_field
from gauge_ot.verify import balanced_vector_instance
from gauge_ot.vector import (VectorGeodesicState, ad_star_vector, bures_energy, bures_pairing, horizontal_from_theta,
                             horizontal_lift, infinitesimal_action, integrate_geodesic_vector, lie_bracket, mass,
                             momentum_map_vector, pair_dual, polar_decompose, submersion_metric, vertical_generator)

seeds = st.integers(0, 2**31 - 1)
G1 = PeriodicGrid((32,))
G2 = PeriodicGrid((16, 16))


def _sqrt_rho(w):
    return np.sqrt(np.einsum("...j,...j->...", w, w))


# -- polar decomposition -----------------------------------------------------------

def test_polar_examples():
    w = np.ones((8, 1))
    v, rho = polar_decompose(w)
    assert np.array_equal(v, w) and np.array_equal(rho, np.ones(8))
    gx = 1.0 + 0.5 * np.sin(2 * np.pi * G1.coords()[0])
    v, rho = polar_decompose(np.outer(gx, [3.0, 4.0]) / 5.0)
    assert np.allclose(v, [0.6, 0.8], atol=1e-15)
    assert np.allclose(rho, gx ** 2, atol=1e-15)


@given(seeds, st.sampled_from([1, 2, 3]))
def test_polar_reconstruction(seed, k):
    w = random_vector_half_density(G1, k, seed)
    v, rho = polar_decompose(w)
    assert np.max(np.abs(v * np.sqrt(rho)[:, None] - w)) <= 1e-12
    assert np.allclose(np.linalg.norm(v, axis=-1), 1.0, atol=1e-14)


def test_polar_floor():
    w = np.ones((8, 2))
    w[3] = 0.0
    with pytest.raises(DegenerateDensity):
        polar_decompose(w)


# -- action and energy --------------------------------------------------------------

def test_action_trivial_cases(rng):
    w = random_vector_half_density(G1, 2, rng)
    z_u, z_a = np.zeros((32, 1)), np.zeros((32, 2, 2))
    assert np.array_equal(infinitesimal_action(G1, z_u, z_a, w), np.zeros_like(w))
    a = np.broadcast_to(np.array([[0.0, -0.7], [0.7, 0.0]]), (32, 2, 2))
    assert np.allclose(infinitesimal_action(G1, z_u, a, w), np.einsum("...ij,...j->...i", a, w), atol=1e-15)


@given(seeds)
def test_k1_mass_rate_vanishes(seed):
    r = np.random.default_rng(seed)
    w = random_vector_half_density(G2, 1, r)
    u = random_field(G2, (2,), r)
    wd = infinitesimal_action(G2, u, np.zeros(G2.shape + (1, 1)), w)
    assert abs(2 * G2.integrate(np.sum(w * wd, -1))) <= 1e-10


def test_action_is_half_density_lie_derivative(rng):
    # coefficient form -(u.D)w - div(u) w / 2, compared on a spectral grid
    g = PeriodicGrid((64,), derivative="spectral")
    w = random_vector_half_density(g, 2, rng)
    u = random_field(g, (1,), rng)
    ref = -(u * g.grad(w)[..., 0]) - 0.5 * g.div(u)[:, None] * w
    assert np.max(np.abs(infinitesimal_action(g, u, np.zeros((64, 2, 2)), w) - ref)) <= 1e-8


def test_bures_energy_examples(rng):
    w = random_vector_half_density(G1, 2, rng)
    z_u, z_a = np.zeros((32, 1)), np.zeros((32, 2, 2))
    assert bures_energy(G1, z_u, z_a, w) == 0.0
    a = np.broadcast_to(np.array([[0.0, -1.0], [1.0, 0.0]]), (32, 2, 2))
    assert bures_energy(G1, z_u, a, w) == pytest.approx(2.0, abs=1e-12)
    assert bures_energy(G1, np.full((32, 1), 0.3), z_a, w) == pytest.approx(0.09, abs=1e-12)


@given(seeds)
def test_bures_energy_positive(seed):
    r = np.random.default_rng(seed)
    w = random_vector_half_density(G1, 2, r)
    u, a = random_field(G1, (1,), r), random_gauge_algebra(G1, 2, "so", r)
    assert bures_energy(G1, u, a, w) > 0


# -- momentum map ------------------------------------------------------------------------

def test_momentum_map_trivial(rng):
    w = random_vector_half_density(G1, 2, rng)
    m, beta = momentum_map_vector(G1, w, np.zeros_like(w))
    assert not np.any(m) and not np.any(beta)
    v, _ = polar_decompose(w)
    _, beta = momentum_map_vector(G1, w, v)
    assert np.max(np.abs(beta)) == 0.0


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(["so", "conf"]))
def test_momentum_map_duality(seed, k, flavor):
    r = np.random.default_rng(seed)
    w = random_vector_half_density(G2, k, r)
    theta = random_field(G2, (k,), r)
    u, a = random_field(G2, (2,), r), random_gauge_algebra(G2, k, flavor, r)
    m, beta = momentum_map_vector(G2, w, theta, flavor)
    lhs = pair_dual(G2, m, beta, u, a)
    rhs = G2.integrate(np.sum(infinitesimal_action(G2, u, a, w) * theta * _sqrt_rho(w)[..., None], -1))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-3)


# -- horizontal and vertical -----------------------------------------------------------------

def test_horizontal_trivial(rng):
    w = random_vector_half_density(G1, 2, rng)
    u, a = horizontal_from_theta(G1, np.zeros_like(w), w)
    assert not np.any(u) and not np.any(a)


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_horizontal_k1_is_gradient(rng, sign):
    rho = 1.0 + 0.5 * random_field(G2, (), rng)
    w = sign * np.sqrt(rho)[..., None]
    theta = random_field(G2, (1,), rng)
    u, a = horizontal_from_theta(G2, theta, w)
    assert np.allclose(u, sign * G2.grad(theta[..., 0]), atol=1e-12)
    assert not np.any(a)


def test_horizontal_gauge_is_skew(rng):
    w = random_vector_half_density(G1, 3, rng)
    _, a = horizontal_from_theta(G1, random_field(G1, (3,), rng), w)
    assert np.max(np.abs(a + np.swapaxes(a, -1, -2))) <= 1e-14


@given(seeds)
def test_vertical_generators(seed):
    r = np.random.default_rng(seed)
    w = random_vector_half_density(G2, 2, r)
    uh, ah = horizontal_from_theta(G2, random_field(G2, (2,), r), w)
    uv, av = vertical_generator(G2, w, random_field(G2, (), r))
    assert np.max(np.abs(infinitesimal_action(G2, uv, av, w))) <= 1e-8
    assert abs(bures_pairing(G2, uh, ah, uv, av, w)) <= 1e-8
    v, _ = polar_decompose(w)
    q = np.einsum("...ij,...j->...i", av, v)
    assert np.max(np.abs(np.sum(q * v, -1))) <= 1e-12


def test_vertical_generator_1d(rng):
    w = random_vector_half_density(G1, 2, rng)
    uv, av = vertical_generator(G1, w, 0.3)
    assert np.max(np.abs(infinitesimal_action(G1, uv, av, w))) <= 1e-8


# -- horizontal lift and metric ----------------------------------------------------------

def test_lift_of_zero(rng):
    w = random_vector_half_density(G1, 2, rng)
    assert not np.any(horizontal_lift(G1, np.zeros_like(w), w))
    assert submersion_metric(G1, np.zeros_like(w), w) == 0.0


@pytest.mark.parametrize("grid", [G1, G2], ids=["1d", "2d"])
@pytest.mark.parametrize("flavor", ["so", "conf"])
def test_lift_round_trip(rng, grid, flavor):
    w = random_vector_half_density(grid, 2, rng)
    theta0 = 0.5 * random_field(grid, (2,), rng)
    u0, a0 = horizontal_from_theta(grid, theta0, w, flavor)
    wdot = infinitesimal_action(grid, u0, a0, w)
    theta = horizontal_lift(grid, wdot, w, flavor)
    u, a = horizontal_from_theta(grid, theta, w, flavor)
    assert np.linalg.norm(infinitesimal_action(grid, u, a, w) - wdot) <= 1e-6 * np.linalg.norm(wdot)
    assert np.max(np.abs(u - u0)) <= 1e-6 and np.max(np.abs(a - a0)) <= 1e-6


def test_lift_rejects_non_tangent(rng):
    w = random_vector_half_density(G1, 2, rng)
    with pytest.raises(PreconditionViolation):
        horizontal_lift(G1, w, w)


def test_lift_k1_is_curl_free(rng):
    # a rotational velocity moves the density; its horizontal lift must be a gradient
    g = PeriodicGrid((24, 24))
    w = random_vector_half_density(g, 1, rng)
    u_any = random_field(g, (2,), rng)
    wdot = infinitesimal_action(g, u_any, np.zeros(g.shape + (1, 1)), w)
    theta = horizontal_lift(g, wdot, w)
    u, _ = horizontal_from_theta(g, theta, w)
    assert np.linalg.norm(infinitesimal_action(g, u, np.zeros(g.shape + (1, 1)), w) - wdot) \
        <= 1e-6 * np.linalg.norm(wdot)
    curl = g.diff(u[..., 1], 0) - g.diff(u[..., 0], 1)
    assert np.max(np.abs(curl)) <= 1e-6 * np.max(np.abs(u))
    assert bures_energy(g, u, np.zeros(g.shape + (1, 1)), w) \
        <= bures_energy(g, u_any, np.zeros(g.shape + (1, 1)), w)


def test_metric_pure_gauge():
    g = PeriodicGrid((32,))
    x = g.coords()[0]
    amp = 1.0 + 0.3 * np.sin(2 * np.pi * x)
    w = np.outer(amp, [1.0, 0.0])
    w /= np.sqrt(mass(g, w))
    theta = np.stack([np.zeros(32), 0.4 * np.cos(2 * np.pi * x)], -1)   # orthogonal to v
    u0, a0 = horizontal_from_theta(g, theta, w)
    assert np.max(np.abs(u0)) <= 1e-14
    wdot = np.einsum("...ij,...j->...i", a0, w)
    expected = g.integrate(frob(a0, a0) * np.sum(w * w, -1))
    assert submersion_metric(g, wdot, w) == pytest.approx(expected, rel=1e-6)


def test_metric_k1_matches_density_metric(rng):
    w = random_vector_half_density(G2, 1, rng)
    theta0 = random_field(G2, (1,), rng)
    u0, a0 = horizontal_from_theta(G2, theta0, w)
    wdot = infinitesimal_action(G2, u0, a0, w)
    rho = np.sum(w * w, -1)
    expected = G2.integrate(np.sum(G2.grad(theta0[..., 0]) ** 2, -1) * rho)
    value, theta_form = submersion_metric(G2, wdot, w, theta_form=True)
    assert value == pytest.approx(expected, rel=1e-6)
    assert theta_form >= value - 1e-12


# -- coadjoint action -----------------------------------------------------------------------------

def test_ad_star_trivial(rng):
    m, beta = random_field(G1, (1,), rng), random_field(G1, (2, 2), rng)
    a = np.broadcast_to(rng.normal(size=(2, 2)), (32, 2, 2))
    mo, bo = ad_star_vector(G1, np.zeros((32, 1)), a, m, beta)
    assert not np.any(mo) and not np.any(bo)


@given(seeds, st.booleans())
def test_ad_star_bracket_duality(seed, comm):
    r = np.random.default_rng(seed)
    u1, u2, m = (random_field(G2, (2,), r) for _ in range(3))
    a1, a2, beta = (random_field(G2, (2, 2), r) for _ in range(3))
    lhs = pair_dual(G2, *ad_star_vector(G2, u1, a1, m, beta, comm), u2, a2)
    rhs = pair_dual(G2, m, beta, *lie_bracket(G2, u1, a1, u2, a2, comm))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_ad_star_scalar_specialisation(rng):
    u, m = random_field(G1, (1,), rng), random_field(G1, (1,), rng)
    mo, bo = ad_star_vector(G1, u, np.zeros((32, 1, 1)), m, np.zeros((32, 1, 1)))
    ref = -G1.diff(u[:, 0] * m[:, 0], 0) - G1.diff(u[:, 0], 0) * m[:, 0]
    assert np.allclose(mo[:, 0], ref, atol=1e-14)
    assert not np.any(bo)


# -- geodesics ------------------------------------------------------------------------------------

def test_geodesic_zero_data_is_constant(rng):
    w = random_vector_half_density(G1, 2, rng)
    s0 = VectorGeodesicState(np.zeros((32, 1)), np.zeros((32, 2, 2)), w)
    for method in ("characteristics", "eulerian"):
        traj = integrate_geodesic_vector(G1, s0, 1.0, 4, method=method)
        assert len(traj) == 5
        assert all(np.allclose(s.w, w, atol=1e-14) for s in traj)


def test_geodesic_pure_gauge(rng):
    w = random_vector_half_density(G1, 2, rng)
    a0 = np.broadcast_to(np.array([[0.0, -0.8], [0.8, 0.0]]), (32, 2, 2))
    s0 = VectorGeodesicState(np.zeros((32, 1)), a0, w)
    traj = integrate_geodesic_vector(G1, s0, 1.0, 4)
    for s in traj:
        assert np.allclose(s.w, np.einsum("ij,xj->xi", expm(a0[0], s.t), w), atol=1e-12)
        assert np.allclose(np.sum(s.w ** 2, -1), np.sum(w ** 2, -1), atol=1e-12)


def test_balanced_conservation(rng):
    g = PeriodicGrid((128,))
    s0 = balanced_vector_instance(g, 2, rng, T=0.5)
    traj = integrate_geodesic_vector(g, s0, 0.5, 8)
    e0 = bures_energy(g, s0.u, s0.a, s0.w)
    for s in traj:
        assert abs(mass(g, s.w) - 1.0) <= 1e-8
        assert abs(bures_energy(g, s.u, s.a, s.w) - e0) <= 1e-6 * e0


def test_characteristics_and_eulerian_agree(rng):
    errs = []
    for n in (64, 128):
        g = PeriodicGrid((n,))
        r = np.random.default_rng(7)
        w = random_vector_half_density(g, 2, r)
        u = 0.1 * random_field(g, (1,), r)
        a = random_gauge_algebra(g, 2, "so", r, amplitude=0.5)
        s0 = VectorGeodesicState(u, a, w)
        c = integrate_geodesic_vector(g, s0, 0.5, 4 * n // 16)[-1]
        e = integrate_geodesic_vector(g, s0, 0.5, 4 * n // 16, method="eulerian")[-1]
        errs.append(np.max(np.abs(c.w - e.w)))
    assert errs[1] < errs[0] / 3


def test_k1_burgers_particles(rng):
    g = PeriodicGrid((64,))
    u0 = 0.1 * np.sin(2 * np.pi * g.coords()[0])[:, None]
    w = np.ones((64, 1))
    s0 = VectorGeodesicState(u0, np.zeros((64, 1, 1)), w)
    s = integrate_geodesic_vector(g, s0, 0.5, 2)[-1]
    x0 = g.points()
    x1 = np.mod(x0 + 0.5 * u0, 1.0)
    u_at = interpolate(g, s.u, x1, method="spectral")
    assert np.max(np.abs(u_at - u0)) <= 1e-8


def test_geodesic_shock_detected():
    g = PeriodicGrid((64,))
    u0 = -0.5 * np.sin(2 * np.pi * g.coords()[0])[:, None]
    s0 = VectorGeodesicState(u0, np.zeros((64, 1, 1)), np.ones((64, 1)))
    with pytest.raises(ShockTime):
        integrate_geodesic_vector(g, s0, 1.0, 4)


def test_conf_flavor_kept(rng):
    w = random_vector_half_density(G1, 2, rng, balanced=False)
    a = random_gauge_algebra(G1, 2, "conf", rng, amplitude=0.3)
    s0 = VectorGeodesicState(0.1 * random_field(G1, (1,), rng), a, w, 0.0, "conf")
    for s in integrate_geodesic_vector(G1, s0, 0.2, 8, method="eulerian"):
        assert np.allclose(project_flavor(s.a, "conf"), s.a, atol=1e-12)
