"""Reduced Hamiltonian systems assembled from momentum maps and ad*.

Each system is written for momenta ``(m, beta)`` and an advected state ``s``:

    mdot = ad*_xi (m, beta) - Phi(s, dH/ds),   sdot = xi . s,

with ``xi = dH/d(m, beta)``.  Nothing here knows the concrete geodesic
equations; comparing one step of these systems with one step of the concrete
integrators guards the hand-derived right-hand sides.
"""
from __future__ import annotations

import numpy as np

from .fiber import frob, trace, tr_prod
from .matrix import infinitesimal_action_matrix, momentum_map_matrix
from .vector import ad_star_vector, infinitesimal_action, momentum_map_vector, polar_decompose, rk4_step


def _sq(u):
    return np.einsum("...a,...a->...", u, u)


def rhs_vector(grid, m, beta, w, flavor="so", commutator=False):
    """State (m, beta, w); H = 1/2 integrate((|m|^2 + |beta|^2) / rho), rho = |w|^2."""
    v, rho = polar_decompose(w)
    u = m / rho[..., None]
    a = beta / rho[..., None, None]
    f = _sq(u) + frob(a, a)
    theta = -f[..., None] * v                     # dH/dw = -f w = theta sqrt(rho)
    mp, bp = momentum_map_vector(grid, w, theta, flavor)
    ma, ba = ad_star_vector(grid, u, a, m, beta, commutator)
    return ma - mp, ba - bp, infinitesimal_action(grid, u, a, w)


def rhs_matrix(grid, m, beta, Sigma, commutator=False):
    """State (m, beta, Sigma); H = 1/2 integrate((|m|^2 + |beta|^2) / tr Sigma)."""
    rho = trace(Sigma)
    u = m / rho[..., None]
    a = beta / rho[..., None, None]
    f = _sq(u) + frob(a, a)
    k = Sigma.shape[-1]
    P = -0.5 * f[..., None, None] * np.eye(k)
    mp, bp = momentum_map_matrix(grid, Sigma, P)
    ma, ba = ad_star_vector(grid, u, a, m, beta, commutator)
    return ma - mp, ba - bp, infinitesimal_action_matrix(grid, u, a, Sigma)


def rhs_matrix_projective(grid, m, beta, Sigma, commutator=False):
    """Balanced matrix system: beta is trace free (dual of pgl), rho = tr Sigma is transported.

    The generator ``a`` is the representative of beta / rho with tr(a S) = 0;
    the action ``a Sigma + Sigma a^T - 2 tr(a S) Sigma`` does not depend on the
    representative and its momentum map has second slot
    ``(P + P^T) Sigma - 2 tr(P Sigma) S``, which vanishes for P = -f I / 2.
    """
    rho = trace(Sigma)
    S = Sigma / rho[..., None, None]
    k = Sigma.shape[-1]
    u = m / rho[..., None]
    atf = beta / rho[..., None, None]
    a = atf - tr_prod(atf, S)[..., None, None] * np.eye(k)
    f = _sq(u) + frob(atf, atf)
    P = -0.5 * f[..., None, None] * np.eye(k)
    mp, bp = momentum_map_matrix(grid, Sigma, P)
    bp = bp - 2 * tr_prod(P, Sigma)[..., None, None] * S
    ma, ba = ad_star_vector(grid, u, a, m, beta, commutator)
    db = ba - bp
    db = db - (trace(db) / k)[..., None, None] * np.eye(k)
    Sdot = infinitesimal_action_matrix(grid, u, a, Sigma) - 2 * tr_prod(a, S)[..., None, None] * Sigma
    return ma - mp, db, Sdot


def rhs_matrix_alternative(grid, m, beta, Sigma, commutator=False):
    """Alternative metric integrate(|u|^2 tr Sigma + tr(a Sigma a^T)); beta = a Sigma."""
    rho = trace(Sigma)
    u = m / rho[..., None]
    a = np.swapaxes(np.linalg.solve(Sigma, np.swapaxes(beta, -1, -2)), -1, -2)   # beta Sigma^{-1}
    k = Sigma.shape[-1]
    P = -0.5 * (_sq(u)[..., None, None] * np.eye(k) + np.swapaxes(a, -1, -2) @ a)
    mp, bp = momentum_map_matrix(grid, Sigma, P)
    ma, ba = ad_star_vector(grid, u, a, m, beta, commutator)
    return ma - mp, ba - bp, infinitesimal_action_matrix(grid, u, a, Sigma)


def step(rhs, grid, state, dt, **kw):
    """One RK4 step of an abstract system."""
    return rk4_step(lambda *y: rhs(grid, *y, **kw), state, dt)
