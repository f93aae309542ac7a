"""Boundary-value solvers for the vector and matrix transport distances.

Two independent realisations are provided:

``path_relax``  minimises the discrete action over piecewise-constant controls
                plus an endpoint penalty, with gradients from a hand-written
                reverse sweep through the RK4 stages;
``shoot``       fits the initial covector of a geodesic (band-limited
                coefficients) to the target endpoint by nonlinear least squares.

Spaces: ``vhprob`` (vector, so), ``vhdens`` (vector, conf), ``mdens``
(matrix, gl) and ``mprob`` (matrix, pgl with representative tr(a S) = 0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import CFLError, DegenerateDensity, NoConvergence, PreconditionViolation, ShockTime
from .fiber import frob, project_flavor, trace, tr_prod
from .grid import check_cfl
from .matrix import (MatrixGeodesicState, gauge_norm_sq, horizontal_from_P, infinitesimal_action_matrix,
                     integrate_geodesic_matrix_balanced, integrate_geodesic_matrix_unbalanced)
from .vector import EPS_FLOOR, VectorGeodesicState, horizontal_from_theta, integrate_geodesic_vector

SPACES = {
    "vhprob": ("vector", "so"),
    "vhdens": ("vector", "conf"),
    "mdens": ("matrix", "gl"),
    "mprob": ("matrix", "pgl"),
}


@dataclass
class BvpProblem:
    space: str
    grid: object
    endpoint0: np.ndarray
    endpoint1: np.ndarray
    steps: int = 32
    penalty: float = 1e2
    rounds: int = 4
    max_iter: int = 200
    gtol: float = 1e-10
    shoot_modes: int = 5
    shoot_steps: int = 64
    commutator: bool = True
    seed: int = 0
    max_jacobian_rows: int = 2048
    refresh: int = 10
    ftol: float = 1e-4
    memory: int = 20

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        self.endpoint0 = np.asarray(self.endpoint0, dtype=float)
        self.endpoint1 = np.asarray(self.endpoint1, dtype=float)
        if self.endpoint0.shape != self.endpoint1.shape:
            raise ValueError("endpoints must have the same shape")
        self.grid.check_field(self.endpoint0, name="endpoint0")

    @property
    def kind(self):
        return SPACES[self.space][0]

    @property
    def flavor(self):
        return SPACES[self.space][1]

    @property
    def k(self):
        return self.endpoint0.shape[-1]


@dataclass
class BvpSolution:
    distance_sq: float
    endpoint_residual: float
    converged: bool
    iterations: int
    seed: int = 0
    method: str = ""
    trajectory: list = field(default=None, repr=False)
    controls: tuple = field(default=None, repr=False)
    covector: np.ndarray = field(default=None, repr=False)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "distance_sq": float(self.distance_sq),
            "endpoint_residual": float(self.endpoint_residual),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "seed": int(self.seed),
        }


# -- transport right-hand sides and their reverse-mode derivatives ----------

def _vector_forward(grid, w, u, a):
    """wdot = -L_u w + a w with the intermediates needed by ``_vector_vjp``.

    For k = 1 the half-density derivative is taken in the skew-symmetric form
    ``(u.D w + div(u w)) / 2``, which conserves mass exactly without dividing by w.
    """
    aw = np.einsum("...ij,...j->...i", a, w)
    if w.shape[-1] == 1:
        Dw = grid.grad(w[..., 0])
        F = -0.5 * (np.einsum("...a,...a->...", u, Dw) + grid.div(u * w)) + aw[..., 0]
        return F[..., None], (w, u, a, Dw)
    r = np.sqrt(np.einsum("...j,...j->...", w, w))
    if not np.min(r) >= EPS_FLOOR:
        raise DegenerateDensity(f"min |w| = {np.min(r):.3e} below floor")
    rho = r * r
    g = grid.div(rho[..., None] * u)
    v = w / r[..., None]
    Dv = grid.grad(v)
    dv = np.einsum("...ja,...a->...j", Dv, u)
    s = np.einsum("...j,...j->...", v, dv)
    q = dv - s[..., None] * v
    F = -(q * r[..., None] + v * (g / (2 * r))[..., None]) + aw
    return F, (w, u, a, r, rho, g, v, Dv, dv, (s, q))


def _vector_vjp(grid, cache, lam):
    """Transpose of the linearisation of ``_vector_forward`` applied to lam."""
    if len(cache) == 4:
        # uses D^T = -D
        w, u, a, Dw = cache
        l0 = lam[..., 0]
        Dl = grid.grad(l0)
        wbar = 0.5 * (grid.div(u * l0[..., None]) + np.einsum("...a,...a->...", u, Dl)) + a[..., 0, 0] * l0
        ubar = 0.5 * (Dl * w - l0[..., None] * Dw)
        return wbar[..., None], ubar, lam[..., :, None] * w[..., None, :]
    w, u, a, r, rho, g, v, Dv, dv, sq = cache
    n = grid.dim
    abar = np.einsum("...i,...j->...ij", lam, w)
    wbar = np.einsum("...ij,...i->...j", a, lam)
    s, q = sq
    lv = np.einsum("...j,...j->...", lam, v)
    qbar = -lam * r[..., None]
    rbar = -np.einsum("...j,...j->...", lam, q) + lv * g / (2 * r * r)
    vbar = -lam * (g / (2 * r))[..., None]
    gbar = -lv / (2 * r)
    fluxbar = -grid.grad(gbar)
    ubar = fluxbar * rho[..., None]
    rbar = rbar + 2 * r * np.einsum("...a,...a->...", fluxbar, u)
    # q = dv - s v, s = v.dv
    sbar = -np.einsum("...j,...j->...", qbar, v)
    dvbar = qbar + sbar[..., None] * v
    vbar = vbar - s[..., None] * qbar + sbar[..., None] * dv
    # dv = sum_a u_a D_a v
    ubar = ubar + np.einsum("...j,...ja->...a", dvbar, Dv)
    vbar = vbar - sum(grid.diff(u[..., al:al + 1] * dvbar, al) for al in range(n))
    # v = w / r, r = |w|
    wbar = wbar + vbar / r[..., None]
    rbar = rbar - np.einsum("...j,...j->...", vbar, w) / (r * r)
    wbar = wbar + rbar[..., None] * v
    return wbar, ubar, abar


def _matrix_gauge(Sigma, b, flavor):
    if flavor != "pgl":
        return b, None
    rho = trace(Sigma)
    c = tr_prod(b, Sigma) / rho
    return b - c[..., None, None] * np.eye(b.shape[-1]), (rho, c)


def _matrix_forward(grid, Sigma, u, b, flavor):
    a, extra = _matrix_gauge(Sigma, b, flavor)
    return infinitesimal_action_matrix(grid, u, a, Sigma), (Sigma, u, b, a, extra)


def _matrix_vjp(grid, cache, lam, flavor):
    Sigma, u, b, a, extra = cache
    lt = np.swapaxes(lam, -1, -2)
    at = np.swapaxes(a, -1, -2)
    abar = lam @ np.swapaxes(Sigma, -1, -2) + lt @ Sigma
    Dlam = grid.grad(lam)
    Sbar = np.einsum("...ija,...a->...ij", Dlam, u) + at @ lam + lam @ a
    ubar = np.einsum("...ija,...ij->...a", Dlam, Sigma)
    if flavor != "pgl":
        return Sbar, ubar, abar
    rho, c = extra
    ta = trace(abar)
    k = Sigma.shape[-1]
    bbar = abar - ta[..., None, None] * Sigma / rho[..., None, None]
    dc = np.swapaxes(b, -1, -2) / rho[..., None, None] - (c / rho)[..., None, None] * np.eye(k)
    Sbar = Sbar - ta[..., None, None] * dc
    return Sbar, ubar, bbar


class _Model:
    """Forward RK4 transport with piecewise-constant controls and its reverse sweep."""

    def __init__(self, grid, kind, flavor):
        self.grid = grid
        self.kind = kind
        self.flavor = flavor

    def effective_gauge(self, a):
        if self.flavor in ("so", "conf"):
            return project_flavor(a, self.flavor)
        return a

    def rhs(self, y, u, a):
        if self.kind == "vector":
            return _vector_forward(self.grid, y, u, a)
        return _matrix_forward(self.grid, y, u, a, self.flavor)

    def rhs_vjp(self, cache, lam):
        if self.kind == "vector":
            return _vector_vjp(self.grid, cache, lam)
        return _matrix_vjp(self.grid, cache, lam, self.flavor)

    def density(self, y):
        if self.kind == "vector":
            return np.einsum("...j,...j->...", y, y)
        return trace(y)

    def energy_density(self, u, a):
        gauge = gauge_norm_sq(a, "pgl") if self.flavor == "pgl" else frob(a, a)
        return np.einsum("...a,...a->...", u, u) + gauge

    def energy(self, y, u, a):
        return float(self.grid.integrate(self.energy_density(u, a) * self.density(y)))

    def energy_grads(self, y, u, a):
        """Euclidean gradients of energy(y, u, a) with respect to y, u and a."""
        hv = self.grid.cell_volume
        rho = self.density(y)
        f = self.energy_density(u, a)
        if self.kind == "vector":
            ybar = 2 * hv * f[..., None] * y
        else:
            ybar = hv * f[..., None, None] * np.eye(y.shape[-1])
        ubar = 2 * hv * rho[..., None] * u
        if self.flavor == "pgl":
            atf = a - (trace(a) / a.shape[-1])[..., None, None] * np.eye(a.shape[-1])
            abar = 2 * hv * rho[..., None, None] * atf
        else:
            abar = 2 * hv * rho[..., None, None] * a
        return ybar, ubar, abar

    def step(self, y, u, a, dt, keep=False):
        k1, c1 = self.rhs(y, u, a)
        k2, c2 = self.rhs(y + 0.5 * dt * k1, u, a)
        k3, c3 = self.rhs(y + 0.5 * dt * k2, u, a)
        k4, c4 = self.rhs(y + dt * k3, u, a)
        y1 = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y1, ((c1, c2, c3, c4) if keep else None)

    def step_vjp(self, caches, ybar, dt):
        c1, c2, c3, c4 = caches
        k4b = dt / 6 * ybar
        k3b = dt / 3 * ybar
        k2b = dt / 3 * ybar
        k1b = dt / 6 * ybar
        yb = ybar.copy()
        zb, ub, ab = self.rhs_vjp(c4, k4b)
        yb += zb
        k3b = k3b + dt * zb
        zb, u3, a3 = self.rhs_vjp(c3, k3b)
        yb += zb
        k2b = k2b + 0.5 * dt * zb
        zb, u2, a2 = self.rhs_vjp(c2, k2b)
        yb += zb
        k1b = k1b + 0.5 * dt * zb
        zb, u1, a1 = self.rhs_vjp(c1, k1b)
        yb += zb
        return yb, ub + u3 + u2 + u1, ab + a3 + a2 + a1


def controls_shape(grid, k, steps):
    return (steps,) + grid.shape + (grid.dim,), (steps,) + grid.shape + (k, k)


def _run(model, y0, U, A, dt, keep=False, cfl=1.0):
    ys, caches = [y0], []
    y = y0
    for n in range(U.shape[0]):
        check_cfl(model.grid, U[n], dt, cfl, time=n * dt)
        y, c = model.step(y, U[n], A[n], dt, keep)
        ys.append(y)
        caches.append(c)
    return ys, caches


def _action_from_path(model, ys, U, A, dt):
    return sum(0.5 * dt * (model.energy(ys[n], U[n], A[n]) + model.energy(ys[n + 1], U[n], A[n]))
               for n in range(U.shape[0]))


def action_functional(grid, space, controls, endpoint0, T=1.0, trajectory=False):
    """Discrete action of piecewise-constant controls and the resulting terminal state.

    ``controls = (U, A)`` with shapes ``(steps, *grid, dim)`` and
    ``(steps, *grid, k, k)``.  The state is advanced by RK4 with the controls
    frozen on each step; the energy integral uses the trapezoidal rule in time
    on each step.
    """
    kind, flavor = SPACES[space]
    model = _Model(grid, kind, flavor)
    U, A = (np.asarray(c, dtype=float) for c in controls)
    A = model.effective_gauge(A)
    dt = T / U.shape[0]
    ys, _ = _run(model, np.asarray(endpoint0, dtype=float), U, A, dt)
    action = _action_from_path(model, ys, U, A, dt)
    return (action, ys) if trajectory else (action, ys[-1])


def objective_and_gradient(grid, space, controls, endpoint0, endpoint1=None, penalty=0.0, T=1.0):
    """Action plus penalty * ||y(T) - endpoint1||^2 (L2), and its gradient in the controls."""
    kind, flavor = SPACES[space]
    model = _Model(grid, kind, flavor)
    U, Araw = (np.asarray(c, dtype=float) for c in controls)
    A = model.effective_gauge(Araw)
    steps = U.shape[0]
    dt = T / steps
    ys, caches = _run(model, np.asarray(endpoint0, dtype=float), U, A, dt, keep=True)
    J = _action_from_path(model, ys, U, A, dt)
    hv = grid.cell_volume
    ybar = np.zeros_like(ys[-1])
    if penalty and endpoint1 is not None:
        diff = ys[-1] - endpoint1
        J += penalty * hv * float(np.sum(diff * diff))
        ybar = 2 * penalty * hv * diff
    Ug = np.zeros_like(U)
    Ag = np.zeros_like(A)
    for n in range(steps - 1, -1, -1):
        yb1, ub1, ab1 = model.energy_grads(ys[n + 1], U[n], A[n])
        ybar = ybar + 0.5 * dt * yb1
        ybar, ub, ab = model.step_vjp(caches[n], ybar, dt)
        yb0, ub0, ab0 = model.energy_grads(ys[n], U[n], A[n])
        ybar = ybar + 0.5 * dt * yb0
        Ug[n] = ub + 0.5 * dt * (ub0 + ub1)
        Ag[n] = ab + 0.5 * dt * (ab0 + ab1)
    Ag = model.effective_gauge(Ag)
    return J, (Ug, Ag), ys


# -- path relaxation -----------------------------------------------------------

def _l2(grid, x):
    return float(np.sqrt(grid.cell_volume * np.sum(x * x)))


@dataclass
class _OptResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    message: str


def _lbfgs_armijo(fun, x0, max_iter=400, gtol=1e-10, memory=20, H0=None, project=None):
    """Limited-memory BFGS directions with backtracking Armijo steps.

    ``fun`` returns ``(f, grad)`` or ``None`` when x is outside the domain
    (degenerate density, overflow); such trial steps are shortened.
    ``H0`` applies the initial inverse Hessian (default: scaled identity) and
    ``project`` maps trial points onto a convex admissible set.
    """
    out = fun(x0)
    if out is None:
        raise PreconditionViolation("initial controls are not admissible")
    x, (f, g) = x0, out
    S, Y = [], []
    nfev = 1
    for it in range(max_iter):
        if np.max(np.abs(g)) <= gtol:
            return _OptResult(x, f, it, nfev, "gradient tolerance")
        q = g.copy()
        alphas = []
        for s_, y_ in zip(reversed(S), reversed(Y)):
            al = (s_ @ q) / (y_ @ s_)
            alphas.append(al)
            q -= al * y_
        if H0 is not None:
            q = H0(q)
        elif S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        for (s_, y_), al in zip(zip(S, Y), reversed(alphas)):
            q += s_ * (al - (y_ @ q) / (y_ @ s_))
        d = -q
        slope = g @ d
        if not slope < 0:
            S, Y = [], []
            d = -H0(g) if H0 is not None else -g
            slope = g @ d
        t = 1.0 if (S or H0 is not None) else min(1.0, 1.0 / np.max(np.abs(g)))
        for _ in range(60):
            xn = x + t * d if project is None else project(x + t * d)
            gs = g @ (xn - x)
            out = fun(xn) if gs < 0 else None
            nfev += 1
            if out is not None and out[0] <= f + 1e-4 * gs:
                break
            if out is None or not np.isfinite(out[0]):
                t *= 0.25
            else:
                # minimiser of the quadratic through f, slope and the trial value
                tq = -gs * t / (2.0 * (out[0] - f - gs))
                t = float(np.clip(tq, 0.1 * t, 0.5 * t))
        else:
            return _OptResult(x, f, it, nfev, "line search failed")
        fn, gn = out
        s_, y_ = xn - x, gn - g
        if s_ @ y_ > 1e-12 * np.sqrt((s_ @ s_) * (y_ @ y_)):
            S.append(s_)
            Y.append(y_)
            while len(S) > memory:
                S.pop(0)
                Y.pop(0)
        decrease = f - fn
        x, f, g = xn, fn, gn
        if decrease <= 1e-15 * abs(f):
            return _OptResult(x, f, it + 1, nfev, "no further decrease")
    return _OptResult(x, f, max_iter, nfev, "iteration limit")


class _BatchedGrid:
    """Grid view whose derivatives act on fields with one leading batch axis."""

    def __init__(self, grid):
        self.base = grid
        self.dim = grid.dim

    def diff(self, f, axis):
        return np.moveaxis(self.base.diff(np.moveaxis(f, 0, -1), axis), -1, 0)

    def grad(self, f):
        return np.stack([self.diff(f, a) for a in range(self.dim)], axis=-1)

    def div(self, u):
        return sum(self.diff(u[..., a], a) for a in range(self.dim))


def _endpoint_jacobian(model, y0, U, A, dt, block=256):
    """Dense Jacobian of the terminal state with respect to the controls (U, A).

    Reverse sweeps seeded by blocks of unit terminal vectors run batched;
    rows follow ``y(T).ravel()``.
    """
    ys, caches = _run(model, y0, U, A, dt, keep=True, cfl=np.inf)
    batched = _Model(_BatchedGrid(model.grid), model.kind, model.flavor)
    m = ys[-1].size
    rows = np.empty((m, U.size + A.size))
    for start in range(0, m, block):
        idx = np.arange(start, min(m, start + block))
        ybar = np.zeros((idx.size, m))
        ybar[np.arange(idx.size), idx] = 1.0
        ybar = ybar.reshape((idx.size,) + ys[-1].shape)
        Ub = np.empty((idx.size,) + U.shape)
        Ab = np.empty((idx.size,) + A.shape)
        for n in range(U.shape[0] - 1, -1, -1):
            ybar, Ub[:, n], Ab[:, n] = batched.step_vjp(caches[n], ybar, dt)
        Ab = model.effective_gauge(Ab)
        rows[idx] = np.concatenate([Ub.reshape(idx.size, -1), Ab.reshape(idx.size, -1)], axis=1)
    return rows, ys


def _gauss_newton_preconditioner(model, y0, U, A, dt, penalty, max_rows, floor=1e-3):
    """Inverse of diag(energy Hessian) + 2 penalty h J^T J, applied by Woodbury.

    Falls back to the diagonal part alone when the terminal state has more
    than ``max_rows`` entries.
    """
    g = model.grid
    hv = g.cell_volume
    ys = _run(model, y0, U, A, dt, cfl=np.inf)[0]
    rho = np.stack([0.5 * (model.density(ys[n]) + model.density(ys[n + 1])) for n in range(U.shape[0])])
    rho = rho + floor * np.max(rho)
    k = A.shape[-1]
    ediag = np.concatenate([np.repeat(2 * hv * dt * rho.ravel(), g.dim),
                            np.repeat(2 * hv * dt * rho.ravel(), k * k)])
    einv = 1.0 / ediag
    if ys[-1].size > max_rows:
        return lambda q: einv * q
    J, _ = _endpoint_jacobian(model, y0, U, A, dt)
    M = (J * einv) @ J.T
    M[np.diag_indices_from(M)] += 1.0 / (2 * penalty * hv)
    chol = scipy.linalg.cho_factor(M)

    def apply(q):
        p = einv * q
        return p - einv * (J.T @ scipy.linalg.cho_solve(chol, J @ p))

    return apply


def path_relax(problem, controls0=None, cfl=0.95, callback=None):
    """Penalised direct minimisation of the action over piecewise-constant controls.

    Each round minimises action + penalty * ||y(T) - endpoint1||^2, warm-started
    from the previous round, and the penalty grows by 10x per round.  Search
    directions come from the Gauss-Newton model ``E + 2 penalty h J^T J`` at
    the current path (``E`` the diagonal energy Hessian, ``J`` the dense
    endpoint Jacobian), used as the initial inverse Hessian of L-BFGS: plain
    Gauss-Newton steps while they cut the objective by more than 10%, then
    L-BFGS cycles of ``problem.refresh`` steps.  Without this model the
    penalty makes the problem stiff at high wave numbers.  Steps use Armijo
    backtracking with velocities clipped to the CFL bound.
    """
    g = problem.grid
    kind, flavor = problem.kind, problem.flavor
    k, steps = problem.k, problem.steps
    dt = 1.0 / steps
    ushape, ashape = controls_shape(g, k, steps)
    nu = int(np.prod(ushape))
    if controls0 is None:
        U = np.zeros(ushape)
        A = np.zeros(ashape)
    else:
        U = np.asarray(controls0[0], dtype=float).reshape(ushape)
        A = np.asarray(controls0[1], dtype=float).reshape(ashape)
    umax = cfl * min(g.spacing) / dt
    model = _Model(g, kind, flavor)
    y0 = problem.endpoint0
    iterations = 0
    # keep f = O(1): the stopping tests are relative
    fscale = problem.penalty * _l2(g, problem.endpoint1 - y0) ** 2
    fscale = fscale if fscale > 0 else 1.0

    def split(x):
        return x[:nu].reshape(ushape), x[nu:].reshape(ashape)

    def project(x):
        x = x.copy()
        np.clip(x[:nu], -umax, umax, out=x[:nu])
        return x

    for rnd in range(problem.rounds):
        gamma = problem.penalty * 10.0 ** rnd

        def fun(x):
            Ux, Ax = split(x)
            try:
                J, (Ug, Ag), _ = objective_and_gradient(g, problem.space, (Ux, Ax), y0,
                                                        problem.endpoint1, gamma)
            except (CFLError, DegenerateDensity, FloatingPointError):
                return None
            if not np.isfinite(J) or not np.all(np.isfinite(Ug)) or not np.all(np.isfinite(Ag)):
                return None
            return J / fscale, np.concatenate([Ug.ravel(), Ag.ravel()]) / fscale

        x = np.concatenate([U.ravel(), model.effective_gauge(A).ravel()])
        nit, f_prev, cycle = 0, np.inf, 1
        # Gauss-Newton steps (fresh linearisation each step) while they pay off,
        # then L-BFGS cycles of `refresh` steps on top of the latest linearisation
        while nit < problem.max_iter:
            U, A = split(x)
            H0 = _gauss_newton_preconditioner(model, y0, U, A, dt, gamma, problem.max_jacobian_rows)
            with np.errstate(all="ignore"):
                res = _lbfgs_armijo(fun, x, min(cycle, problem.max_iter - nit), problem.gtol,
                                    memory=problem.memory, H0=lambda q: fscale * H0(q), project=project)
            x, nit = res.x, nit + max(res.nit, 1)
            decrease = f_prev - res.fun
            if res.message == "gradient tolerance":
                break
            if cycle > 1 and decrease <= problem.ftol * abs(res.fun):
                break
            if decrease <= 0.1 * abs(res.fun):
                cycle = problem.refresh
            f_prev = res.fun
        U, A = split(x)
        iterations += nit
        if callback is not None:
            callback(rnd, gamma, res)
    A = model.effective_gauge(A)
    action, ys = action_functional(g, problem.space, (U, A), y0, trajectory=True)
    resid = _l2(g, ys[-1] - problem.endpoint1)
    scale = max(_l2(g, problem.endpoint1), 1e-300)
    converged = bool(resid <= 1e-2 * scale)
    return BvpSolution(action, resid, converged, iterations, problem.seed, "relax", ys, (U, A),
                       details={"relative_residual": resid / scale, "final_penalty": gamma})


# -- shooting ------------------------------------------------------------------

def fourier_basis(grid, modes=5):
    """Real Fourier basis with |frequency| < modes per axis, shape (nbasis, *grid.shape)."""
    axes = []
    for a in range(grid.dim):
        x = grid.coords()[a] / grid.lengths[a]
        fs = [np.ones_like(x)]
        for m in range(1, modes):
            fs += [np.cos(2 * np.pi * m * x), np.sin(2 * np.pi * m * x)]
        axes.append(np.array(fs))
    if grid.dim == 1:
        return axes[0]
    return np.einsum("ix,jy->ijxy", axes[0], axes[1]).reshape(-1, *grid.shape)


def _sym_index(k):
    return [(i, j) for i in range(k) for j in range(i, k)]


def covector_from_coefficients(grid, coef, k, kind, basis):
    if kind == "vector":
        return np.einsum("bj,b...->...j", coef.reshape(-1, k), basis)
    idx = _sym_index(k)
    c = coef.reshape(-1, len(idx))
    P = np.zeros(grid.shape + (k, k))
    for col, (i, j) in enumerate(idx):
        field_ = np.einsum("b,b...->...", c[:, col], basis)
        P[..., i, j] = field_
        P[..., j, i] = field_
    return P


def geodesic_from_covector(grid, space, y0, cov, steps=64, commutator=True, T=1.0, full=False):
    """Integrate the geodesic with initial covector ``cov`` (theta or P) from y0."""
    kind, flavor = SPACES[space]
    if kind == "vector":
        u, a = horizontal_from_theta(grid, cov, y0, flavor)
        a = project_flavor(a, flavor)
        s0 = VectorGeodesicState(u, a, y0, 0.0, flavor)
        method = "characteristics" if flavor == "so" else "eulerian"
        traj = integrate_geodesic_vector(grid, s0, T, 1 if method == "characteristics" and not full else steps,
                                         method=method)
        energy = float(grid.integrate((np.einsum("...a,...a->...", u, u) + frob(a, a)) * np.einsum("...j,...j->...", y0, y0)))
        return (traj if full else traj[-1].w), energy
    u, a = horizontal_from_P(grid, cov, y0)
    rho = trace(y0)
    S = y0 / rho[..., None, None]
    if flavor == "pgl":
        a = project_flavor(a, "pgl", S)
        s0 = MatrixGeodesicState(u, a, S, rho, 0.0, "pgl")
        traj = integrate_geodesic_matrix_balanced(grid, s0, T, 1 if not full else steps, commutator=commutator)
    else:
        s0 = MatrixGeodesicState(u, a, S, rho, 0.0, "gl")
        traj = integrate_geodesic_matrix_unbalanced(grid, s0, T, steps, commutator=commutator)
    energy = float(grid.integrate((np.einsum("...a,...a->...", u, u) + gauge_norm_sq(a, flavor)) * rho))
    return (traj if full else traj[-1].Sigma), energy


def shoot(problem, coef0=None, xtol=1e-12, max_nfev=None):
    """Fit the band-limited initial covector so the geodesic hits endpoint1 at t = 1."""
    g = problem.grid
    kind, k = problem.kind, problem.k
    basis = fourier_basis(g, problem.shoot_modes)
    ncomp = k if kind == "vector" else len(_sym_index(k))
    npar = basis.shape[0] * ncomp
    sq = np.sqrt(g.cell_volume)
    target = problem.endpoint1
    big = 10.0 * max(_l2(g, target), 1.0)
    count = [0]

    def resid(c):
        count[0] += 1
        cov = covector_from_coefficients(g, c, k, kind, basis)
        try:
            y1, _ = geodesic_from_covector(g, problem.space, problem.endpoint0, cov,
                                           problem.shoot_steps, problem.commutator)
        except (ShockTime, CFLError, DegenerateDensity, NoConvergence):
            return np.full(target.size, big / np.sqrt(target.size))
        return sq * (y1 - target).ravel()

    c0 = np.zeros(npar) if coef0 is None else np.asarray(coef0, dtype=float)
    if _l2(g, problem.endpoint1 - problem.endpoint0) == 0.0:
        c = c0 * 0
        return BvpSolution(0.0, 0.0, True, 0, problem.seed, "shoot", covector=covector_from_coefficients(g, c, k, kind, basis))
    res = scipy.optimize.least_squares(resid, c0, method="trf", xtol=xtol, ftol=1e-15, gtol=1e-15,
                                       max_nfev=max_nfev or 200 * (npar + 1), x_scale="jac")
    cov = covector_from_coefficients(g, res.x, k, kind, basis)
    y1, energy = geodesic_from_covector(g, problem.space, problem.endpoint0, cov, problem.shoot_steps,
                                        problem.commutator)
    resid_l2 = _l2(g, y1 - target)
    converged = bool(resid_l2 <= 1e-6 * max(_l2(g, target), 1.0))
    return BvpSolution(energy, resid_l2, converged, int(res.nfev), problem.seed, "shoot",
                       covector=cov, details={"coefficients": res.x, "status": int(res.status)})


# -- one-dimensional oracle ------------------------------------------------------

def wasserstein_1d_oracle(grid, rho0, rho1, cut=None, quantiles=10_000, support_tol=1e-6):
    """Squared W2 distance between two densities on the circle, unrolled at ``cut``.

    Both densities must carry less than ``support_tol`` mass within a tenth
    of the period of the cut; the transport is then the monotone rearrangement
    on the interval, computed by inverting the cumulative distributions on a
    midpoint quantile grid.
    """
    if grid.dim != 1:
        raise ValueError("the oracle is one-dimensional")
    rho0 = np.asarray(rho0, dtype=float)
    rho1 = np.asarray(rho1, dtype=float)
    L = grid.lengths[0]
    h = grid.spacing[0]
    x = grid.coords()[0]
    if cut is None:
        cut = float(x[np.argmin(rho0 + rho1)])
    m0, m1 = h * rho0.sum(), h * rho1.sum()
    near = np.abs(np.mod(x - cut + 0.5 * L, L) - 0.5 * L) < 0.1 * L
    for name, r, m in (("rho0", rho0, m0), ("rho1", rho1, m1)):
        if h * r[near].sum() / m >= support_tol:
            raise PreconditionViolation(f"{name} has mass {h * r[near].sum() / m:.2e} within 0.1 L of the cut")
    order = np.argsort(np.mod(x - cut, L))
    xs = np.mod(x - cut, L)[order]
    s = (np.arange(quantiles) + 0.5) / quantiles

    def inverse_cdf(r, m):
        # piecewise-constant density on cells -> piecewise-linear CDF
        edges = np.concatenate([[xs[0] - 0.5 * h], xs + 0.5 * h])
        cdf = np.concatenate([[0.0], np.cumsum(r[order] * h / m)])
        return np.interp(s, cdf, edges)

    q0 = inverse_cdf(rho0, m0)
    q1 = inverse_cdf(rho1, m1)
    return float(np.mean((q0 - q1) ** 2))
