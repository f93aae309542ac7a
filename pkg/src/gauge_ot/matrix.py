"""Matrix densities: GL/PGL actions, momentum map, horizontal lift and geodesics.

A matrix density is stored through its coefficient field ``Sigma`` with shape
``(*grid.shape, k, k)``.  Geodesic states use the factorisation
``Sigma = S * rho`` with ``tr S = 1``.

The density Lie derivative is applied in conservative form
``L_u Sigma = D_a(u_a Sigma)``, so ``tr`` of the action is exactly
``-D.(u tr Sigma) + 2 tr(a Sigma)`` and the momentum map is its exact adjoint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensity, NoConvergence, ShapeMismatch
from .fiber import frob, project_flavor, sym, tr_prod, trace
from .grid import cg_solve, check_cfl
from .vector import CharacteristicMap, advective, rk4_step

EPS_PD = 1e-8


@dataclass
class MatrixGeodesicState:
    u: np.ndarray
    a: np.ndarray
    S: np.ndarray
    rho: np.ndarray
    t: float = 0.0
    flavor: str = "gl"

    @property
    def Sigma(self):
        return self.S * self.rho[..., None, None]

    @property
    def k(self):
        return self.S.shape[-1]


def check_positive(Sigma, floor=EPS_PD, name="Sigma"):
    lam = np.linalg.eigvalsh(sym(Sigma))
    if np.min(lam) < floor:
        raise DegenerateDensity(f"{name}: minimum eigenvalue {np.min(lam):.3e} below {floor}")


def factorize(Sigma, floor=EPS_PD, semidefinite=False):
    """Split Sigma into (S, rho) with rho = tr Sigma and S = Sigma / rho."""
    Sigma = np.asarray(Sigma, dtype=float)
    if semidefinite:
        rho = trace(Sigma)
        if np.min(rho) <= 0:
            raise DegenerateDensity("trace vanishes")
    else:
        check_positive(Sigma, floor)
        rho = trace(Sigma)
    return Sigma / rho[..., None, None], rho


def total_mass(grid, Sigma):
    return float(grid.integrate(trace(Sigma)))


def trace_normalize(grid, Sigma, pointwise=True):
    """Rescale Sigma to unit total mass.

    With ``pointwise=True`` each value is first divided by its trace, so the
    result has constant trace ``1 / volume``.  Otherwise only the global
    factor is applied.  Both variants are idempotent.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    if pointwise:
        Sigma, _ = factorize(Sigma)
    else:
        check_positive(Sigma)
    return Sigma / total_mass(grid, Sigma)


def rank1_embed(w):
    """Sigma = w w^T (rank one, positive semi-definite)."""
    w = np.asarray(w, dtype=float)
    return np.einsum("...i,...j->...ij", w, w)


def infinitesimal_action_matrix(grid, u, a, Sigma):
    """Sigmadot = -D_a(u_a Sigma) + a Sigma + Sigma a^T."""
    Sigma = np.asarray(Sigma, dtype=float)
    k = Sigma.shape[-1]
    grid.check_field(u, (grid.dim,), "u")
    grid.check_field(a, (k, k), "a")
    grid.check_field(Sigma, (k, k), "Sigma")
    n = grid.dim
    ub = u.reshape(u.shape[:n] + (1, 1, n))
    transport = sum(grid.diff(ub[..., al] * Sigma, al) for al in range(n))
    aS = a @ Sigma
    return -transport + aS + np.swapaxes(aS, -1, -2)


def momentum_map_matrix(grid, Sigma, P):
    """(tr(Sigma D_a P), (P + P^T) Sigma)."""
    Sigma = np.asarray(Sigma, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.shape != Sigma.shape:
        raise ShapeMismatch("P and Sigma must have the same shape")
    DP = grid.grad(P)
    m = np.einsum("...ij,...jia->...a", Sigma, DP)
    return m, (P + np.swapaxes(P, -1, -2)) @ Sigma


def covector_pairing(grid, P, Sigmadot):
    return float(grid.integrate(tr_prod(P, Sigmadot)))


def gauge_norm_sq(a, flavor="gl"):
    """Pointwise |a|^2; for pgl the quotient norm min_c |a + c I|^2."""
    n2 = frob(a, a)
    if flavor == "pgl":
        n2 = n2 - trace(a) ** 2 / a.shape[-1]
    return n2


def bures_energy_matrix(grid, u, a, Sigma, flavor="gl"):
    f = np.einsum("...a,...a->...", u, u) + gauge_norm_sq(a, flavor)
    return float(grid.integrate(f * trace(Sigma)))


def bures_pairing_matrix(grid, u1, a1, u2, a2, Sigma):
    f = np.einsum("...a,...a->...", u1, u2) + frob(a1, a2)
    return float(grid.integrate(f * trace(Sigma)))


def horizontal_from_P(grid, P, Sigma):
    """u_a = tr(S D_a P), a = (P + P^T) S: the momentum of P divided by rho."""
    S, rho = factorize(Sigma, semidefinite=True)
    m, beta = momentum_map_matrix(grid, Sigma, P)
    return m / rho[..., None], beta / rho[..., None, None]


def horizontal_lift_matrix(grid, Sigmadot, Sigma, tol=1e-10, max_iter=None, rtol_check=1e-6):
    """Symmetric P whose horizontal generator moves Sigma with velocity Sigmadot.

    The map P -> action(horizontal_from_P(P), Sigma) is symmetric positive
    definite on symmetric fields, so CG is applied to it directly.
    """
    Sigmadot = sym(np.asarray(Sigmadot, dtype=float))

    def K(P):
        P = sym(P)
        u, a = horizontal_from_P(grid, P, Sigma)
        return infinitesimal_action_matrix(grid, u, a, Sigma)

    P = sym(cg_solve(K, Sigmadot, tol=tol, max_iter=max_iter or 20 * Sigmadot.size))
    if np.any(Sigmadot):
        res = np.linalg.norm(K(P) - Sigmadot) / np.linalg.norm(Sigmadot)
        if res > rtol_check:
            raise NoConvergence(f"matrix horizontal lift residual {res:.3e}", residual=res, result=P)
    return P


def submersion_metric_matrix(grid, Sigmadot, Sigma, **kw):
    P = horizontal_lift_matrix(grid, Sigmadot, Sigma, **kw)
    u, a = horizontal_from_P(grid, P, Sigma)
    return bures_energy_matrix(grid, u, a, Sigma)


def initial_state_from_P(grid, P, Sigma, flavor="gl"):
    S, rho = factorize(Sigma)
    u, a = horizontal_from_P(grid, P, Sigma)
    if flavor == "pgl":
        a = project_flavor(a, "pgl", S)
    return MatrixGeodesicState(u, a, S, rho, 0.0, flavor)


# -- right-hand sides --------------------------------------------------------

def commutator_term(a):
    """a a^T - a^T a, the gauge part of the coadjoint action for the momentum a rho."""
    at = np.swapaxes(a, -1, -2)
    return a @ at - at @ a


def rhs_matrix_unbalanced(grid, u, a, S, rho, stated=False, commutator=False):
    """Unbalanced (gl) system with tau = tr(a S) and f = |u|^2 + tr(a a^T).

    ``udot = -(u.D)u - 2 tau u``, ``adot = -(u.D)a + f S - 2 tau a``,
    ``rhodot = -D.(rho u) + 2 tau rho``, ``Sdot = -(u.D)S + aS + Sa^T - 2 tau S``.
    ``stated=True`` flips the sign of the tau terms in udot and adot;
    ``commutator=True`` adds ``a a^T - a^T a`` to adot.
    """
    tau = tr_prod(a, S)
    f = np.einsum("...a,...a->...", u, u) + frob(a, a)
    s = -1.0 if stated else 1.0
    udot = -advective(grid, u, u) - s * 2 * tau[..., None] * u
    adot = -advective(grid, u, a) + f[..., None, None] * S - s * 2 * tau[..., None, None] * a
    if commutator:
        adot = adot + commutator_term(a)
    rhodot = -grid.div(rho[..., None] * u) + 2 * tau * rho
    aS = a @ S
    Sdot = -advective(grid, u, S) + aS + np.swapaxes(aS, -1, -2) - 2 * tau[..., None, None] * S
    return udot, adot, Sdot, rhodot


def rhs_matrix_balanced(grid, u, a, S, rho, commutator=False):
    """Balanced (pgl) system; the multiplier lambda keeps d/dt tr(a S) = 0 pointwise."""
    udot = -advective(grid, u, u)
    aS = a @ S
    Sdot = -advective(grid, u, S) + aS + np.swapaxes(aS, -1, -2)
    rhodot = -grid.div(rho[..., None] * u)
    adot = -advective(grid, u, a)
    if commutator:
        adot = adot + commutator_term(a)
    lam = -(tr_prod(adot, S) + tr_prod(a, Sdot)) / trace(S)
    adot = adot + lam[..., None, None] * np.eye(S.shape[-1])
    return udot, adot, Sdot, rhodot


def balanced_multiplier(a, S, adot0=None):
    """lambda = -(tr(adot0 S) + tr(a (a S + S a^T))) / tr S for the pointwise fiber ODE."""
    aS = a @ S
    lam = -tr_prod(a, aS + np.swapaxes(aS, -1, -2))
    if adot0 is not None:
        lam = lam - tr_prod(adot0, S)
    return lam / trace(S)


def rhs_matrix_alternative(grid, u, a, Sigma, stated=False, commutator=False):
    """Alternative-metric system for the metric integrate(|u|^2 tr Sigma + tr(a Sigma a^T)).

    ``udot = -(u.D)u - 2 tr(a S) u``;
    ``adot = -(u.D)a + |u|^2 I + a^T a - a^2 - a Sigma a^T Sigma^{-1}``;
    Sigmadot is the matrix action.  ``stated=True`` uses
    ``udot = -(u.D)u + 2 tr(a S) u - tr([a, S] D_i a^T)`` instead.
    ``commutator=True`` adds ``(a Sigma a^T - a^T a Sigma) Sigma^{-1}`` to adot,
    which leaves ``adot = -(u.D)a + |u|^2 I - a^2``.
    """
    k = Sigma.shape[-1]
    rho = trace(Sigma)
    S = Sigma / rho[..., None, None]
    tau = tr_prod(a, S)
    udot = -advective(grid, u, u)
    if stated:
        comm = a @ S - S @ a
        Da = grid.grad(a)
        udot = udot + 2 * tau[..., None] * u - np.einsum("...ij,...ija->...a", comm, Da)
    else:
        udot = udot - 2 * tau[..., None] * u
    uu = np.einsum("...a,...a->...", u, u)
    aSa = a @ Sigma @ np.swapaxes(a, -1, -2)
    if commutator:
        adot = -advective(grid, u, a) + uu[..., None, None] * np.eye(k) - a @ a
    else:
        adot = (-advective(grid, u, a) + uu[..., None, None] * np.eye(k) + np.swapaxes(a, -1, -2) @ a
                - a @ a - np.linalg.solve(Sigma, aSa.swapaxes(-1, -2)).swapaxes(-1, -2))
    Sigmadot = infinitesimal_action_matrix(grid, u, a, Sigma)
    return udot, adot, Sigmadot


def alternative_u_source(grid, u, a, S, stated=False):
    """Right-hand side of the alternative u-equation beyond Burgers."""
    tau = tr_prod(a, S)
    if not stated:
        return -2 * tau[..., None] * u
    comm = a @ S - S @ a
    return 2 * tau[..., None] * u - np.einsum("...ij,...ija->...a", comm, grid.grad(a))


# -- integrators -------------------------------------------------------------

def _check_state(S, rho, time):
    if np.min(rho) <= 0:
        raise DegenerateDensity(f"density lost positivity at t={time}")
    check_positive(S, EPS_PD, "S")


def integrate_geodesic_matrix_unbalanced(grid, state0, T, steps, stated=False, cfl=1.0, commutator=False):
    dt = T / steps
    y = (state0.u, state0.a, state0.S, state0.rho)
    traj = [state0]

    def rhs(u, a, S, rho):
        return rhs_matrix_unbalanced(grid, u, a, S, rho, stated, commutator)

    for i in range(1, steps + 1):
        check_cfl(grid, y[0], dt, cfl, time=state0.t + (i - 1) * dt)
        y = rk4_step(rhs, y, dt)
        t = state0.t + i * dt
        _check_state(y[2], y[3], t)
        traj.append(MatrixGeodesicState(*y, t=t, flavor="gl"))
    return traj


def _fiber_flow(a, S, t, substeps, commutator=False):
    """Integrate adot = lambda I, Sdot = a S + S a^T pointwise over [0, t] with RK4."""
    if t == 0:
        return a, S
    k = S.shape[-1]
    h = t / substeps

    def f(a, S):
        aS = a @ S
        adot0 = commutator_term(a) if commutator else None
        adot = balanced_multiplier(a, S, adot0)[..., None, None] * np.eye(k)
        if commutator:
            adot = adot + adot0
        return adot, aS + np.swapaxes(aS, -1, -2)

    for _ in range(substeps):
        k1 = f(a, S)
        k2 = f(a + 0.5 * h * k1[0], S + 0.5 * h * k1[1])
        k3 = f(a + 0.5 * h * k2[0], S + 0.5 * h * k2[1])
        k4 = f(a + h * k3[0], S + h * k3[1])
        a = a + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        S = S + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return a, S


def integrate_geodesic_matrix_balanced(grid, state0, T, steps, method="characteristics",
                                       cfl=1.0, fiber_dt=1e-3, commutator=False):
    """Balanced (pgl) geodesics.

    ``characteristics``: u, rho by the exact Burgers flow; (a, S) by the
    pointwise fiber ODE along each particle, integrated with fine RK4 substeps.
    ``eulerian``: RK4 method of lines on the full system.
    """
    S0 = state0.S
    a0 = project_flavor(state0.a, "pgl", S0)
    dt = T / steps
    traj = [MatrixGeodesicState(state0.u, a0, S0, state0.rho, state0.t, "pgl")]
    if method == "characteristics":
        cm = CharacteristicMap(grid, state0.u, T)
        for i in range(1, steps + 1):
            t = i * dt
            x0 = cm.foot(t)
            u = cm.pull(state0.u, x0)
            rho = cm.pull(state0.rho, x0) / cm.jacobian(x0, t)
            a, S = _fiber_flow(cm.pull(a0, x0), cm.pull(S0, x0), t, max(1, int(np.ceil(t / fiber_dt))), commutator)
            _check_state(S, rho, state0.t + t)
            traj.append(MatrixGeodesicState(u, a, S, rho, state0.t + t, "pgl"))
        return traj
    if method != "eulerian":
        raise ValueError(f"unknown method {method!r}")
    y = (state0.u, a0, S0, state0.rho)
    for i in range(1, steps + 1):
        check_cfl(grid, y[0], dt, cfl, time=state0.t + (i - 1) * dt)
        y = rk4_step(lambda *z: rhs_matrix_balanced(grid, *z, commutator=commutator), y, dt)
        t = state0.t + i * dt
        _check_state(y[2], y[3], t)
        traj.append(MatrixGeodesicState(*y, t=t, flavor="pgl"))
    return traj


def integrate_geodesic_matrix_alternative(grid, state0, T, steps, stated=False, cfl=1.0, commutator=False):
    dt = T / steps
    y = (state0.u, state0.a, state0.Sigma)
    traj = [state0]

    def rhs(u, a, Sigma):
        return rhs_matrix_alternative(grid, u, a, Sigma, stated, commutator)

    for i in range(1, steps + 1):
        check_cfl(grid, y[0], dt, cfl, time=state0.t + (i - 1) * dt)
        y = rk4_step(rhs, y, dt)
        t = state0.t + i * dt
        S, rho = factorize(y[2])
        traj.append(MatrixGeodesicState(y[0], y[1], S, rho, t, "gl"))
    return traj
