"""Pointwise operations in the fiber algebra gl(k) and its subalgebras.

Gauge fields are arrays of shape ``(*grid.shape, k, k)``.  Supported flavors:

``so``    skew-symmetric matrices
``conf``  skew plus a multiple of the identity
``gl``    all matrices
``pgl``   gl modulo the identity, stored through the representative with
          tr(a S) = 0 for a companion field S of unit trace
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import MissingCompanion, ShapeMismatch
from .grid import random_field

FLAVORS = ("so", "conf", "gl", "pgl")


def sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def skew(m):
    return 0.5 * (m - np.swapaxes(m, -1, -2))


def trace(m):
    return np.trace(m, axis1=-2, axis2=-1)


def tr_prod(a, b):
    """tr(a b) pointwise."""
    return np.einsum("...ij,...ji->...", a, b)


def frob(a, b):
    """tr(a b^T) pointwise."""
    return np.einsum("...ij,...ij->...", a, b)


def eye_like(m):
    k = m.shape[-1]
    return np.broadcast_to(np.eye(k), m.shape)


def project_flavor(m, flavor, S=None):
    m = np.asarray(m, dtype=float)
    if m.shape[-1] != m.shape[-2]:
        raise ShapeMismatch("fiber values must be square")
    k = m.shape[-1]
    if flavor == "so":
        return skew(m)
    if flavor == "conf":
        return skew(m) + (trace(m) / k)[..., None, None] * np.eye(k)
    if flavor == "gl":
        return m.copy()
    if flavor == "pgl":
        if S is None:
            raise MissingCompanion("pgl projection needs the companion S field")
        c = tr_prod(m, S) / trace(S)
        return m - c[..., None, None] * np.eye(k)
    raise ValueError(f"unknown flavor {flavor!r}")


def expm(a, t=1.0):
    """exp(t a) for a single matrix or a stack of matrices (Pade scaling and squaring)."""
    a = np.asarray(a, dtype=float)
    return scipy.linalg.expm(t * a)


def frobenius_pair(grid, a, b, weight=None):
    """integrate(tr(a b^T) * weight)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    grid.check_field(a, name="a")
    f = frob(a, b)
    if weight is not None:
        weight = np.asarray(weight, dtype=float)
        if weight.shape != grid.shape:
            raise ShapeMismatch("weight must be a scalar field on the grid")
        f = f * weight
    return float(grid.integrate(f))


def random_gauge_algebra(grid, k, flavor, seed=None, S=None, amplitude=1.0):
    """Band-limited random gauge field (lowest 3 modes per axis), projected onto ``flavor``."""
    m = random_field(grid, (k, k), rng=seed, modes=3, amplitude=amplitude)
    return project_flavor(m, flavor, S)


def random_spd(grid, k, seed=None, amplitude=0.3, normalized=True):
    """Smooth symmetric positive-definite field; unit trace when ``normalized``."""
    m = random_field(grid, (k, k), rng=seed, modes=3, amplitude=amplitude)
    S = np.eye(k) + sym(m)
    w, V = np.linalg.eigh(S)
    S = np.einsum("...ij,...j,...kj->...ik", V, np.maximum(w, 0.2), V)
    if normalized:
        S = S / trace(S)[..., None, None]
    return S
