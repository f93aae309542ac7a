"""Calculus on uniform periodic grids over the flat torus.

Fields are plain numpy arrays whose leading axes are the grid axes and whose
trailing axes hold the value (spatial vector, fiber vector or fiber matrix).
``grad`` appends one trailing axis indexed by the spatial direction.

Both derivative flavours ("fd": centred second order, "spectral": Fourier with
the Nyquist mode removed) are skew-symmetric, so summation by parts holds to
round-off for either choice.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CFLError, NoConvergence, ShapeMismatch, ShockTime

SHOCK_FLOOR = 0.1


@dataclass(frozen=True)
class PeriodicGrid:
    sizes: tuple
    lengths: tuple = None
    derivative: str = "fd"

    def __post_init__(self):
        sizes = tuple(int(n) for n in np.atleast_1d(self.sizes))
        lengths = self.lengths
        if lengths is None:
            lengths = (1.0,) * len(sizes)
        lengths = tuple(float(x) for x in np.atleast_1d(lengths))
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lengths", lengths)
        if len(sizes) not in (1, 2):
            raise ValueError(f"only 1D and 2D tori are supported, got dim={len(sizes)}")
        if len(lengths) != len(sizes):
            raise ValueError("sizes and lengths must have the same length")
        for n in sizes:
            if n < 4 or n % 2:
                raise ValueError(f"cell counts must be even and >= 4, got {n}")
        if any(x <= 0 for x in lengths):
            raise ValueError("periods must be positive")
        if self.derivative not in ("fd", "spectral"):
            raise ValueError(f"unknown derivative kind {self.derivative!r}")

    @property
    def dim(self):
        return len(self.sizes)

    @property
    def shape(self):
        return self.sizes

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.sizes))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def ncells(self):
        return int(np.prod(self.sizes))

    def with_derivative(self, kind):
        return replace(self, derivative=kind)

    def coords(self):
        return [(np.arange(n) + 0.5) * h for n, h in zip(self.sizes, self.spacing)]

    def mesh(self):
        """Cell-centre coordinates, shape ``(*shape, dim)``."""
        return np.stack(np.meshgrid(*self.coords(), indexing="ij"), axis=-1)

    def points(self):
        return self.mesh().reshape(-1, self.dim)

    def wrap(self, x):
        return np.mod(x, np.asarray(self.lengths))

    # -- differential operators -------------------------------------------

    def diff(self, f, axis):
        f = np.asarray(f, dtype=float)
        h = self.spacing[axis]
        if self.derivative == "fd":
            return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
        n = self.sizes[axis]
        k = 2.0 * np.pi / self.lengths[axis] * np.arange(n // 2 + 1)
        k[-1] = 0.0
        shape = [1] * f.ndim
        shape[axis] = k.size
        fh = np.fft.rfft(f, axis=axis) * (1j * k.reshape(shape))
        return np.fft.irfft(fh, n=n, axis=axis)

    def grad(self, f):
        return np.stack([self.diff(f, a) for a in range(self.dim)], axis=-1)

    def div(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise ShapeMismatch(f"last axis {u.shape[-1]} != dim {self.dim}")
        return sum(self.diff(u[..., a], a) for a in range(self.dim))

    def integrate(self, f):
        f = np.asarray(f, dtype=float)
        axes = tuple(range(self.dim))
        return self.cell_volume * np.sum(f, axis=axes)

    def check_field(self, f, value_shape=None, name="field"):
        f = np.asarray(f)
        if f.shape[: self.dim] != self.shape:
            raise ShapeMismatch(f"{name}: grid axes {f.shape[:self.dim]} != {self.shape}")
        if value_shape is not None and f.shape[self.dim:] != tuple(value_shape):
            raise ShapeMismatch(f"{name}: value shape {f.shape[self.dim:]} != {tuple(value_shape)}")
        return f


def grad(grid, f):
    return grid.grad(f)


def div(grid, u):
    return grid.div(u)


def integrate(grid, f):
    return grid.integrate(f)


# -- interpolation -----------------------------------------------------------

def _catmull_rom_weights(tau):
    t2 = tau * tau
    t3 = t2 * tau
    return np.stack([
        0.5 * (-t3 + 2 * t2 - tau),
        0.5 * (3 * t3 - 5 * t2 + 2),
        0.5 * (-3 * t3 + 4 * t2 + tau),
        0.5 * (t3 - t2),
    ], axis=-1)


def _trig_basis(n, s):
    """Rows e^{2 pi i k s / n}; the Nyquist column is cos(pi s) so the interpolant stays real."""
    k = np.fft.fftfreq(n, 1.0 / n)
    E = np.exp(2j * np.pi * np.outer(s, k) / n)
    E[:, n // 2] = np.cos(np.pi * s)
    return E


class Interpolant:
    """Periodic interpolant of a grid field, evaluated at arbitrary points.

    ``method`` is "cubic" (Catmull-Rom, tensor product in 2D) or "spectral"
    (trigonometric interpolation, exact for band-limited data).
    """

    def __init__(self, grid, f, method="cubic"):
        f = grid.check_field(f)
        self.grid = grid
        self.method = method
        self.value_shape = f.shape[grid.dim:]
        flat = np.asarray(f, dtype=float).reshape(grid.shape + (-1,))
        if method == "cubic":
            self._data = flat
        elif method == "spectral":
            axes = tuple(range(grid.dim))
            self._data = np.fft.fftn(flat, axes=axes) / grid.ncells
        else:
            raise ValueError(f"unknown interpolation method {method!r}")

    def _index_coords(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[-1] != self.grid.dim:
            raise ShapeMismatch("points must have one column per spatial axis")
        return [points[:, a] / self.grid.spacing[a] - 0.5 for a in range(self.grid.dim)]

    def __call__(self, points):
        s = self._index_coords(points)
        m = s[0].shape[0]
        if self.method == "cubic":
            out = self._cubic(s)
        else:
            out = self._spectral(s)
        return out.reshape((m,) + self.value_shape)

    def _cubic(self, s):
        g = self.grid
        idx, wts = [], []
        for a in range(g.dim):
            i0 = np.floor(s[a]).astype(int)
            wts.append(_catmull_rom_weights(s[a] - i0))
            idx.append(np.mod(i0[:, None] + np.arange(-1, 3)[None, :], g.sizes[a]))
        data = self._data
        if g.dim == 1:
            vals = data[idx[0]]                      # (M, 4, C)
            return np.einsum("mi,mic->mc", wts[0], vals)
        vals = data[idx[0][:, :, None], idx[1][:, None, :]]  # (M, 4, 4, C)
        return np.einsum("mi,mj,mijc->mc", wts[0], wts[1], vals)

    def _spectral(self, s):
        g = self.grid
        c = self._data
        E0 = _trig_basis(g.sizes[0], s[0])
        if g.dim == 1:
            return np.real(E0 @ c)
        n1 = g.sizes[1]
        T = (E0 @ c.reshape(g.sizes[0], -1)).reshape(-1, n1, c.shape[-1])
        E1 = _trig_basis(n1, s[1])
        return np.real(np.einsum("mjc,mj->mc", T, E1))


def interpolate(grid, f, points, method="cubic"):
    return Interpolant(grid, f, method)(points)


# -- advection and characteristics -------------------------------------------

def check_cfl(grid, u, dt, cfl=1.0, time=None):
    speed = float(np.max(np.abs(u))) if np.size(u) else 0.0
    if abs(dt) * speed > cfl * min(grid.spacing) * (1 + 1e-12):
        raise CFLError(
            f"dt*max|u| = {abs(dt) * speed:.3e} exceeds {cfl} * h = {cfl * min(grid.spacing):.3e}",
            time=time,
        )


def advect(grid, f, u, dt, method="cubic", cfl=1.0):
    """One backward semi-Lagrangian step: f evaluated at x - dt*u(x)."""
    u = grid.check_field(u, (grid.dim,), "u")
    check_cfl(grid, u, dt, cfl)
    if not np.any(u) or dt == 0:
        return np.array(f, dtype=float, copy=True)
    foot = grid.points() - dt * u.reshape(-1, grid.dim)
    vals = interpolate(grid, f, grid.wrap(foot), method)
    return vals.reshape(np.shape(f))


def jacobian_det(grid, u0, t):
    """det(I + t Du0) on the grid."""
    Du = grid.grad(u0)                 # (..., n, n): Du[..., i, a] = d_a u_i
    n = grid.dim
    A = np.eye(n) + t * Du
    if n == 1:
        return A[..., 0, 0]
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def min_jacobian(grid, u0, T):
    """Minimum of det(I + t Du0) over the grid and t in [0, T]."""
    Du = grid.grad(u0)
    if grid.dim == 1:
        return float(min(1.0, np.min(1.0 + T * Du[..., 0, 0])))
    tr = Du[..., 0, 0] + Du[..., 1, 1]
    dt_ = Du[..., 0, 0] * Du[..., 1, 1] - Du[..., 0, 1] * Du[..., 1, 0]
    vals = [np.ones_like(tr), 1.0 + T * tr + T * T * dt_]
    with np.errstate(divide="ignore", invalid="ignore"):
        ts = np.where(dt_ > 0, -tr / (2 * dt_), -1.0)
    inside = (ts > 0) & (ts < T)
    vals.append(np.where(inside, 1.0 + ts * tr + ts * ts * dt_, 1.0))
    return float(min(np.min(v) for v in vals))


def check_preshock(grid, u0, T, floor=SHOCK_FLOOR):
    m = min_jacobian(grid, u0, T)
    if m <= floor:
        raise ShockTime(f"det(I + t Du0) reaches {m:.3e} <= {floor} before t={T}", time=T)
    return m


def periodic_residual(grid, r):
    L = np.asarray(grid.lengths)
    return np.mod(r + 0.5 * L, L) - 0.5 * L


def backward_characteristic(grid, u0, t, x, method="cubic", tol=1e-10, max_iter=60,
                            shock_floor=SHOCK_FLOOR, check_shock=True):
    """Foot points x0 with x0 + t*u0(x0) = x (mod L), for an array of points x.

    A fixed-point sweep is tried first; points it fails to settle are finished
    by Newton's method on F(x0) = x0 + t u0(x0) - x.
    """
    u0 = grid.check_field(u0, (grid.dim,), "u0")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if t == 0 or not np.any(u0):
        return grid.wrap(x.copy())
    if check_shock:
        check_preshock(grid, u0, t, shock_floor)
    U = Interpolant(grid, u0, method)
    DU = Interpolant(grid, grid.grad(u0), method)
    x0 = x - t * U(x)

    def resid(y):
        return periodic_residual(grid, y + t * U(y) - x)

    r = resid(x0)
    for _ in range(8):
        if np.max(np.abs(r)) <= tol:
            return grid.wrap(x0)
        x0 = x0 - r
        r = resid(x0)
    n = grid.dim
    for _ in range(max_iter):
        err = np.max(np.abs(r))
        if err <= tol:
            return grid.wrap(x0)
        J = np.eye(n) + t * DU(grid.wrap(x0))
        step = np.linalg.solve(J, r[..., None])[..., 0]
        x0 = x0 - step
        r = resid(x0)
    err = np.max(np.abs(r))
    if err <= tol:
        return grid.wrap(x0)
    raise NoConvergence(f"characteristic inversion stalled at residual {err:.3e}", residual=err)


# -- linear solver -----------------------------------------------------------

def cg_solve(apply_A, b, tol=1e-10, max_iter=None, x0=None):
    """Conjugate gradients for a symmetric positive semi-definite operator.

    Stops when ||A x - b|| <= tol * ||b||.  Starting from zero keeps the iterate
    in the range of A, which yields the minimal-norm solution when b is in it.
    """
    b = np.asarray(b, dtype=float)
    shape = b.shape
    bf = b.ravel()
    bnorm = np.sqrt(np.dot(bf, bf))
    if max_iter is None:
        max_iter = 10 * bf.size
    if bnorm == 0.0:
        return np.zeros(shape)
    x = np.zeros_like(bf) if x0 is None else np.asarray(x0, dtype=float).ravel().copy()

    def A(v):
        return np.asarray(apply_A(v.reshape(shape)), dtype=float).ravel()

    r = bf - A(x) if x0 is not None else bf.copy()
    p = r.copy()
    rr = np.dot(r, r)
    target = tol * bnorm
    for _ in range(max_iter):
        if np.sqrt(rr) <= target:
            return x.reshape(shape)
        Ap = A(p)
        pAp = np.dot(p, Ap)
        if pAp <= 0:
            break
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = np.dot(r, r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    # recompute the true residual before giving up
    res = np.linalg.norm(bf - A(x))
    if res <= target:
        return x.reshape(shape)
    raise NoConvergence(f"CG stopped with relative residual {res / bnorm:.3e}",
                        residual=res / bnorm, result=x.reshape(shape))


# -- random band-limited fields ----------------------------------------------

def random_field(grid, value_shape=(), rng=None, modes=3, amplitude=1.0, mean=None):
    """Smooth random field built from the lowest ``modes`` Fourier modes per axis."""
    rng = np.random.default_rng(rng)
    value_shape = tuple(value_shape)
    X = grid.mesh()
    ks = [range(-(modes - 1), modes) for _ in range(grid.dim)]
    out = np.zeros(grid.shape + value_shape)
    for kvec in np.stack(np.meshgrid(*ks, indexing="ij"), -1).reshape(-1, grid.dim):
        phase = 2 * np.pi * sum(kvec[a] * X[..., a] / grid.lengths[a] for a in range(grid.dim))
        c = rng.normal(size=value_shape) + 1j * rng.normal(size=value_shape)
        scale = 1.0 / (1.0 + float(np.dot(kvec, kvec)))
        out += scale * np.real(c * np.exp(1j * phase)[(...,) + (None,) * len(value_shape)])
    out *= amplitude / np.sqrt(len(ks[0]) ** grid.dim)
    if mean is not None:
        out += mean
    return out
