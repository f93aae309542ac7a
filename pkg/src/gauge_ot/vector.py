"""Vector half-densities: action, momentum map, horizontal lift and geodesics.

A vector half-density is stored through its coefficient ``w`` with shape
``(*grid.shape, k)``; its polar parts are the unit fiber vector ``v = w/|w|``
and the density ``rho = |w|^2``.

The half-density Lie derivative is evaluated in polar form,

    L_u w = P((u.D) v) sqrt(rho) + v D.(rho u) / (2 sqrt(rho)),

with ``P`` the projection orthogonal to ``v``.  It agrees with the coefficient
form ``(u.D) w + div(u) w / 2`` in the continuum, and on the grid it makes
``w . L_u w = D.(rho u) / 2`` hold exactly, which gives exact mass balance and
exact momentum-map duality under summation by parts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensity, NoConvergence, PreconditionViolation, ShapeMismatch
from .fiber import expm, frob, project_flavor, trace
from .grid import Interpolant, backward_characteristic, cg_solve, check_cfl, check_preshock

EPS_FLOOR = 1e-6


@dataclass
class VectorGeodesicState:
    u: np.ndarray
    a: np.ndarray
    w: np.ndarray
    t: float = 0.0
    flavor: str = "so"

    @property
    def balanced(self):
        return self.flavor == "so"

    @property
    def k(self):
        return self.w.shape[-1]


def polar_decompose(w, floor=EPS_FLOOR):
    w = np.asarray(w, dtype=float)
    norm = np.sqrt(np.einsum("...j,...j->...", w, w))
    if np.min(norm) < floor:
        raise DegenerateDensity(f"min |w| = {np.min(norm):.3e} below floor {floor}")
    return w / norm[..., None], norm ** 2


def mass(grid, w):
    return float(grid.integrate(np.einsum("...j,...j->...", w, w)))


def normalize(grid, w):
    return w / np.sqrt(mass(grid, w))


def _perp(v, q):
    return q - np.einsum("...j,...j->...", q, v)[..., None] * v


def _expand(grid, u, f):
    extra = f.ndim - grid.dim
    return u.reshape(u.shape[: grid.dim] + (1,) * extra + (grid.dim,))


def advective(grid, u, f):
    """(u.D) f."""
    return np.sum(grid.grad(f) * _expand(grid, u, f), axis=-1)


def lie_derivative(grid, u, w):
    v, rho = polar_decompose(w)
    sr = np.sqrt(rho)
    q = _perp(v, advective(grid, u, v))
    flux = grid.div(rho[..., None] * u)
    return q * sr[..., None] + v * (flux / (2.0 * sr))[..., None]


def infinitesimal_action(grid, u, a, w):
    """wdot = -L_u w + a w."""
    grid.check_field(u, (grid.dim,), "u")
    w = grid.check_field(w, name="w")
    k = w.shape[-1]
    grid.check_field(a, (k, k), "a")
    return -lie_derivative(grid, u, w) + np.einsum("...ij,...j->...i", a, w)


def bures_energy(grid, u, a, w):
    rho = np.einsum("...j,...j->...", w, w)
    f = np.einsum("...a,...a->...", u, u) + frob(a, a)
    return float(grid.integrate(f * rho))


def momentum_map_vector(grid, w, theta, flavor="so"):
    """Momentum of the covector theta*sqrt(rho) (exact dual of ``infinitesimal_action``).

    Returns ``(m_rho, beta_rho)`` with
    ``m_rho[a] = rho (D_a(theta.v)/2 - (P theta).D_a v)`` and
    ``beta_rho = rho (theta v^T - v theta^T)/2`` (plus ``rho (theta.v)/k I`` for conf).
    """
    v, rho = polar_decompose(w)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != v.shape:
        raise ShapeMismatch("theta and w must have the same shape")
    tv = np.einsum("...j,...j->...", theta, v)
    pt = _perp(v, theta)
    Dv = grid.grad(v)
    m = rho[..., None] * (0.5 * grid.grad(tv) - np.einsum("...j,...ja->...a", pt, Dv))
    outer = np.einsum("...i,...j->...ij", theta, v)
    beta = 0.5 * (outer - np.swapaxes(outer, -1, -2)) * rho[..., None, None]
    if flavor == "conf":
        k = v.shape[-1]
        beta = beta + (tv * rho / k)[..., None, None] * np.eye(k)
    return m, beta


def horizontal_from_theta(grid, theta, w, flavor="so"):
    """Horizontal generator (u, a) of the covector theta.

    ``u = D(theta.v) - 2 (P theta).Dv`` and ``a = theta v^T - v theta^T``; both
    are twice the momentum divided by rho, so the Bures pairing of (u, a) with
    any generator equals twice the covector pairing with its action.
    """
    m, beta = momentum_map_vector(grid, w, theta, flavor)
    rho = np.einsum("...j,...j->...", w, w)
    return 2.0 * m / rho[..., None], 2.0 * beta / rho[..., None, None]


def bures_pairing(grid, u1, a1, u2, a2, w):
    rho = np.einsum("...j,...j->...", w, w)
    return float(grid.integrate((np.einsum("...a,...a->...", u1, u2) + frob(a1, a2)) * rho))


def vertical_generator(grid, w, psi):
    """Generator (u_v, a_v) with zero action on w.

    In 2D ``psi`` is a stream function and ``rho u_v = (D_y psi, -D_x psi)``; in
    1D ``psi`` is the constant flux ``rho u_v``.  The gauge part rotates the
    fiber frame back: ``a_v = q v^T - v q^T`` with ``q = P((u_v.D) v)``.
    """
    v, rho = polar_decompose(w)
    if grid.dim == 1:
        flux = np.broadcast_to(np.asarray(psi, dtype=float), grid.shape)[..., None]
    else:
        flux = np.stack([grid.diff(psi, 1), -grid.diff(psi, 0)], axis=-1)
    u = flux / rho[..., None]
    q = _perp(v, advective(grid, u, v))
    outer = np.einsum("...i,...j->...ij", q, v)
    return u, outer - np.swapaxes(outer, -1, -2)


def horizontal_lift(grid, wdot, w, flavor="so", tol=1e-10, max_iter=None, rtol_check=1e-6):
    """Covector theta whose horizontal generator moves w with velocity wdot.

    Solves ``K theta = sqrt(rho) wdot`` by CG, where
    ``K theta = sqrt(rho) * action(horizontal_from_theta(theta), w)`` is symmetric
    positive semi-definite (its kernel is the constant multiples of v).  CG from
    zero returns the minimal-norm solution.
    """
    wdot = np.asarray(wdot, dtype=float)
    v, rho = polar_decompose(w)
    sr = np.sqrt(rho)[..., None]
    if flavor == "so":
        drift = float(grid.integrate(np.einsum("...j,...j->...", w, wdot)))
        scale = np.sqrt(mass(grid, w) * mass(grid, wdot)) if np.any(wdot) else 1.0
        if abs(drift) > 1e-8 * max(scale, 1.0):
            raise PreconditionViolation(f"wdot is not tangent to the unit sphere: <w, wdot> = {drift:.3e}")

    def K(theta):
        u, a = horizontal_from_theta(grid, theta, w, flavor)
        return sr * infinitesimal_action(grid, u, a, w)

    theta = cg_solve(K, sr * wdot, tol=tol, max_iter=max_iter or 20 * wdot.size)
    if np.any(wdot):
        u, a = horizontal_from_theta(grid, theta, w, flavor)
        res = np.linalg.norm(infinitesimal_action(grid, u, a, w) - wdot) / np.linalg.norm(wdot)
        if res > rtol_check:
            raise NoConvergence(f"horizontal lift residual {res:.3e}", residual=res, result=theta)
    return theta


def submersion_metric(grid, wdot, w, flavor="so", theta_form=False, **kw):
    """Squared length of wdot: Bures energy of its horizontal lift.

    With ``theta_form=True`` also returns the value with the fiber term
    written as |theta|^2 rho instead of tr(a a^T) rho.
    """
    theta = horizontal_lift(grid, wdot, w, flavor, **kw)
    u, a = horizontal_from_theta(grid, theta, w, flavor)
    value = bures_energy(grid, u, a, w)
    if not theta_form:
        return value
    rho = np.einsum("...j,...j->...", w, w)
    alt = float(grid.integrate((np.einsum("...a,...a->...", u, u)
                                + np.einsum("...j,...j->...", theta, theta)) * rho))
    return value, alt


# -- coadjoint action --------------------------------------------------------

def lie_bracket(grid, u1, a1, u2, a2, commutator=False):
    """(L_{u1} u2, L_{u1} a2 - L_{u2} a1) with L_{u1} u2 = (u1.D)u2 - (u2.D)u1.

    ``commutator=True`` adds the pointwise gauge term ``a2 a1 - a1 a2``.
    """
    uu = advective(grid, u1, u2) - advective(grid, u2, u1)
    aa = advective(grid, u1, a2) - advective(grid, u2, a1)
    if commutator:
        aa = aa + a2 @ a1 - a1 @ a2
    return uu, aa


def ad_star_vector(grid, u, a, m, beta, commutator=False):
    """Coadjoint action, the exact discrete adjoint of ``lie_bracket`` in its second slot.

    ``m_out[i] = -D_a(u_a m_i) - (D_i u_a) m_a - tr(beta^T D_i a)``,
    ``beta_out = -D_a(u_a beta)`` (plus ``beta a^T - a^T beta`` with the commutator).
    """
    n = grid.dim
    Du = grid.grad(u)                                   # Du[..., j, i] = D_i u_j
    flux_m = sum(grid.diff(u[..., al:al + 1] * m, al) for al in range(n))
    m_out = -flux_m - np.einsum("...ji,...j->...i", Du, m) - np.einsum("...pq,...pqi->...i", beta, grid.grad(a))
    ub = u.reshape(u.shape[:n] + (1, 1, n))
    b_out = -sum(grid.diff(ub[..., al] * beta, al) for al in range(n))
    if commutator:
        at = np.swapaxes(a, -1, -2)
        b_out = b_out + beta @ at - at @ beta
    return m_out, b_out


def pair_dual(grid, m, beta, u, a):
    """<(m, beta), (u, a)> = integrate(m.u + tr(beta^T a))."""
    return float(grid.integrate(np.einsum("...a,...a->...", m, u) + frob(beta, a)))


# -- geodesic integrators ----------------------------------------------------

def geodesic_rhs_vector(grid, u, a, w, flavor="so", stated=False):
    """Time derivatives (udot, adot, wdot) of the reduced geodesic system.

    Balanced (so): plain Burgers for u, advection for a, wdot = action.
    Unbalanced (conf) adds the sources that follow from the Hamiltonian
    H = 1/2 integrate((|u|^2 + tr(a a^T)) rho):
    ``udot += -(2/k) tr(a) u`` and ``adot += (f/k) I - (2/k) tr(a) a``.
    ``stated=True`` drops them (the source-free form).
    """
    udot = -advective(grid, u, u)
    adot = -advective(grid, u, a)
    wdot = infinitesimal_action(grid, u, a, w)
    if flavor == "conf" and not stated:
        k = w.shape[-1]
        c = (2.0 / k) * trace(a)
        f = np.einsum("...a,...a->...", u, u) + frob(a, a)
        udot = udot - c[..., None] * u
        adot = adot + (f / k)[..., None, None] * np.eye(k) - c[..., None, None] * a
    return udot, adot, wdot


def rk4_step(rhs, y, dt):
    k1 = rhs(*y)
    k2 = rhs(*[yi + 0.5 * dt * ki for yi, ki in zip(y, k1)])
    k3 = rhs(*[yi + 0.5 * dt * ki for yi, ki in zip(y, k2)])
    k4 = rhs(*[yi + dt * ki for yi, ki in zip(y, k3)])
    return tuple(yi + dt / 6.0 * (a + 2 * b + 2 * c + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


class CharacteristicMap:
    """Foot points and Jacobians of the flow x0 -> x0 + t u0(x0) on the grid.

    Everything is evaluated on the trigonometric interpolant of u0, so the
    Jacobian is the exact derivative of the map being inverted.
    """

    def __init__(self, grid, u0, T, shock_floor=0.1):
        self.grid = grid
        self.u0 = u0
        self.sgrid = grid.with_derivative("spectral")
        check_preshock(self.sgrid, u0, T, shock_floor)
        self.shock_floor = shock_floor
        self.Du0 = self.sgrid.grad(u0)

    def foot(self, t):
        g = self.grid
        x0 = backward_characteristic(g, self.u0, t, g.points(), method="spectral", check_shock=False)
        return x0

    def pull(self, f, x0, method="spectral"):
        return Interpolant(self.grid, f, method)(x0).reshape(self.grid.shape + np.shape(f)[self.grid.dim:])

    def jacobian(self, x0, t):
        Du = self.pull(self.Du0, x0)
        A = np.eye(self.grid.dim) + t * Du
        return np.linalg.det(A)


def integrate_geodesic_vector(grid, state0, T, steps, method="characteristics", stated=False, cfl=1.0):
    """Trajectory (steps+1 states) of the vector geodesic system from state0."""
    flavor = state0.flavor
    if flavor not in ("so", "conf"):
        raise ValueError("vector geodesics need flavor so or conf")
    dt = T / steps
    times = [state0.t + i * dt for i in range(steps + 1)]
    if method == "characteristics":
        if flavor == "conf" and not stated:
            raise ValueError("unbalanced vector geodesics with sources are integrated with method='eulerian'")
        cm = CharacteristicMap(grid, state0.u, T)
        traj = [state0]
        for i in range(1, steps + 1):
            t = i * dt
            x0 = cm.foot(t)
            u = cm.pull(state0.u, x0)
            a = cm.pull(state0.a, x0)
            w0 = cm.pull(state0.w, x0)
            J = cm.jacobian(x0, t)
            w = np.einsum("...ij,...j->...i", expm(a, t), w0) / np.sqrt(J)[..., None]
            polar_decompose(w)
            traj.append(VectorGeodesicState(u, a, w, times[i], flavor))
        return traj
    if method != "eulerian":
        raise ValueError(f"unknown method {method!r}")
    y = (state0.u, state0.a, state0.w)
    traj = [state0]

    def rhs(u, a, w):
        return geodesic_rhs_vector(grid, u, a, w, flavor, stated)

    for i in range(1, steps + 1):
        check_cfl(grid, y[0], dt, cfl, time=times[i - 1])
        y = rk4_step(rhs, y, dt)
        polar_decompose(y[2])
        traj.append(VectorGeodesicState(y[0], y[1], y[2], times[i], flavor))
    return traj


def initial_state_from_theta(grid, theta, w, flavor="so"):
    u, a = horizontal_from_theta(grid, theta, w, flavor)
    return VectorGeodesicState(u, project_flavor(a, flavor), np.asarray(w, dtype=float), 0.0, flavor)
