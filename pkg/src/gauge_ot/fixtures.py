"""Seeded problem instances shared by tests, the verification suites and scripts."""
from __future__ import annotations

import numpy as np

from .bvp import SPACES, fourier_basis, geodesic_from_covector, covector_from_coefficients, _sym_index
from .fiber import random_spd, trace
from .grid import PeriodicGrid, min_jacobian, random_field
from .matrix import horizontal_from_P
from .vector import horizontal_from_theta, normalize

DENSITY_FLOOR = 1e-10


def von_mises(grid, center=0.5, kappa=20.0, floor=DENSITY_FLOOR):
    """Normalised periodic bump exp(kappa cos(2 pi (x - c))) plus a small floor (1D)."""
    x = grid.coords()[0] / grid.lengths[0]
    r = np.exp(kappa * (np.cos(2 * np.pi * (x - center)) - 1.0)) + floor
    return r / grid.integrate(r)


def _scaled_covector(grid, coef, k, kind, basis, target):
    cov = covector_from_coefficients(grid, coef, k, kind, basis)
    sg = grid.with_derivative("spectral")
    slope = np.max(np.abs(sg.grad(cov)))
    return coef * (target / slope)


def scalar_pair(seed, n=256, displacement=0.08, kappa=None):
    """Bump rho0 and its push-forward rho1 under x -> x + D theta(x), theta band-limited.

    Returns ``(grid, w0, w1, theta)`` with ``w = sqrt(rho)`` as k = 1 half-densities.
    """
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid((n,))
    kappa = kappa if kappa is not None else rng.uniform(15.0, 30.0)
    center = 0.5 + rng.uniform(-0.05, 0.05)
    rho0 = von_mises(grid, center, kappa)
    w0 = np.sqrt(rho0)[:, None]
    basis = fourier_basis(grid, 5)
    weights = np.repeat(1.0 / (1.0 + np.arange(5)) ** 2, 2)[1:]
    coef = rng.normal(size=basis.shape[0]) * weights
    coef = _scaled_covector(grid, coef, 1, "vector", basis, displacement)
    theta = covector_from_coefficients(grid, coef, 1, "vector", basis)
    compression = -np.min(grid.with_derivative("spectral").grad(grid.with_derivative("spectral").grad(theta)))
    if compression > 0.5:
        coef = coef * (0.5 / compression)
        theta = covector_from_coefficients(grid, coef, 1, "vector", basis)
    w1, _ = geodesic_from_covector(grid, "vhprob", w0, theta)
    return grid, w0, normalize(grid, w1), theta


def random_vector_half_density(grid, k, seed, amplitude=0.3, balanced=True):
    rng = np.random.default_rng(seed)
    w = random_field(grid, (k,), rng, amplitude=amplitude) + rng.normal(size=k) * 0.2 + np.eye(k)[0]
    return normalize(grid, w) if balanced else w


def random_matrix_density(grid, k, seed, amplitude=0.3, normalized=True):
    rng = np.random.default_rng(seed)
    S = random_spd(grid, k, rng)
    rho = 1.0 + amplitude * random_field(grid, (), rng)
    Sigma = S * rho[..., None, None]
    if normalized:
        Sigma = Sigma / grid.integrate(trace(Sigma))
    return Sigma


def _initial_velocity(grid, kind, flavor, y0, cov):
    if kind == "vector":
        return horizontal_from_theta(grid, cov, y0, flavor)[0]
    return horizontal_from_P(grid, cov, y0)[0]


def geodesic_instance(space, seed, n=64, k=2, strength=0.05, steps=64, commutator=True, min_det=0.6,
                      derivative="spectral"):
    """Endpoint pair generated by a forward geodesic from a known band-limited covector.

    The covector is shrunk until det(I + t D u0) stays above ``min_det`` on
    [0, 1], keeping the generating flow well away from shocks.
    Returns ``(grid, y0, y1, covector, cost)``.
    """
    grid = PeriodicGrid((n,), derivative=derivative)
    rng = np.random.default_rng(seed)
    basis = fourier_basis(grid, 5)
    if space.startswith("vh"):
        kind = "vector"
        y0 = random_vector_half_density(grid, k, rng, balanced=(space == "vhprob"))
        ncomp = k
    else:
        kind = "matrix"
        y0 = random_matrix_density(grid, k, rng, normalized=(space == "mprob"))
        ncomp = len(_sym_index(k))
    weights = np.repeat(1.0 / (1.0 + np.arange(5)), 2)[1:]
    coef = (rng.normal(size=(basis.shape[0], ncomp)) * weights[:, None]).ravel()
    coef = _scaled_covector(grid, coef, k, kind, basis, strength)
    cov = covector_from_coefficients(grid, coef, k, kind, basis)
    sg = grid.with_derivative("spectral")
    while min_jacobian(sg, _initial_velocity(grid, kind, SPACES[space][1], y0, cov), 1.0) < min_det:
        coef = 0.8 * coef
        cov = covector_from_coefficients(grid, coef, k, kind, basis)
    y1, cost = geodesic_from_covector(grid, space, y0, cov, steps, commutator)
    return grid, y0, y1, cov, cost
