"""Named verification suites: each property is measured and compared with its tolerance.

Every suite is a deterministic function of ``(seed, size)`` returning a
``Report``.  The report body contains no timings, so repeated runs produce
identical text.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import abstract
from .bvp import BvpProblem, path_relax, shoot, wasserstein_1d_oracle
from .fiber import frob, project_flavor, random_gauge_algebra, sym, trace, tr_prod
from .fixtures import random_matrix_density, random_vector_half_density, scalar_pair, von_mises
from .grid import PeriodicGrid, random_field
from .matrix import (MatrixGeodesicState, bures_energy_matrix, factorize, horizontal_from_P,
                     horizontal_lift_matrix, infinitesimal_action_matrix, integrate_geodesic_matrix_alternative,
                     integrate_geodesic_matrix_balanced, integrate_geodesic_matrix_unbalanced,
                     momentum_map_matrix, rank1_embed)
from .vector import (VectorGeodesicState, ad_star_vector, bures_energy, bures_pairing, horizontal_from_theta,
                     horizontal_lift, infinitesimal_action, integrate_geodesic_vector, lie_bracket, mass,
                     momentum_map_vector, pair_dual, submersion_metric, vertical_generator)

SUITES = ("duality", "conservation", "submersion", "rank1", "oracle", "appendixA")

SIZES = {
    "small": {"n": 32, "n2d": 16, "trials": 5, "pairs": 1, "cons_n": 64},
    "medium": {"n": 64, "n2d": 32, "trials": 20, "pairs": 5, "cons_n": 128},
}


@dataclass
class Check:
    suite: str
    name: str
    trial: str
    value: float
    tol: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.suite:<13} {self.name:<48} {self.trial:<8} {self.value:12.4e} {self.tol:10.1e}  {status}"


@dataclass
class Report:
    checks: list = field(default_factory=list)
    tables: list = field(default_factory=list)

    def add(self, suite, name, trial, value, tol, passed=None):
        value = float(value)
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append(Check(suite, name, str(trial), value, float(tol), ok))

    def extend(self, other):
        self.checks.extend(other.checks)
        self.tables.extend(other.tables)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def text(self):
        head = f"{'suite':<13} {'property':<48} {'trial':<8} {'value':>12} {'tolerance':>10}  status"
        lines = [head, "-" * len(head)] + [c.line() for c in self.checks]
        for title, rows in self.tables:
            lines += ["", title] + rows
        n_fail = len(self.failures())
        lines += ["", f"{len(self.checks)} checks, {n_fail} failed"]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"passed": self.passed,
                "checks": [{"suite": c.suite, "property": c.name, "trial": c.trial, "value": c.value,
                            "tolerance": c.tol, "passed": c.passed} for c in self.checks],
                "tables": [{"title": t, "rows": r} for t, r in self.tables]}


def _rel(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def _maxrel(x, y):
    return float(np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300))


def _order(dts, res):
    """Least-squares slope of log(res) against log(dt)."""
    return float(np.polyfit(np.log(dts), np.log(res), 1)[0])


# -- duality -------------------------------------------------------------------

def duality_checks(seed=0, size="small", trials=None, n=None):
    """Momentum-map duality (vector and matrix), ad*/bracket duality, summation by parts."""
    cfg = SIZES[size]
    trials = trials or cfg["trials"]
    grid = PeriodicGrid((n or cfg["n"],))
    rep = Report()
    rng = np.random.default_rng(seed)
    for i in range(trials):
        k = 2 + i % 2
        w = random_vector_half_density(grid, k, rng)
        theta = random_field(grid, (k,), rng)
        u = random_field(grid, (1,), rng)
        sr = np.sqrt(np.einsum("...j,...j->...", w, w))[..., None]
        for flavor in ("so", "conf"):
            a = random_gauge_algebra(grid, k, flavor, rng)
            m, beta = momentum_map_vector(grid, w, theta, flavor)
            lhs = pair_dual(grid, m, beta, u, a)
            rhs = float(grid.integrate(np.sum(infinitesimal_action(grid, u, a, w) * theta * sr, axis=-1)))
            rep.add("duality", f"vector momentum map ({flavor}, k={k})", i, _rel(lhs, rhs), 1e-12)
        Sigma = random_matrix_density(grid, k, rng)
        P = sym(random_field(grid, (k, k), rng))
        a = random_gauge_algebra(grid, k, "gl", rng)
        m, beta = momentum_map_matrix(grid, Sigma, P)
        lhs = pair_dual(grid, m, beta, u, a)
        rhs = float(grid.integrate(tr_prod(P, infinitesimal_action_matrix(grid, u, a, Sigma))))
        rep.add("duality", f"matrix momentum map (k={k})", i, _rel(lhs, rhs), 1e-12)
    for i in range(trials):
        k = 2 + i % 2
        u1, u2, m = (random_field(grid, (1,), rng) for _ in range(3))
        a1, a2, beta = (random_field(grid, (k, k), rng) for _ in range(3))
        for comm in (False, True):
            mo, bo = ad_star_vector(grid, u1, a1, m, beta, comm)
            bu, ba = lie_bracket(grid, u1, a1, u2, a2, comm)
            lhs = pair_dual(grid, mo, bo, u2, a2)
            rhs = pair_dual(grid, m, beta, bu, ba)
            tag = "with commutator" if comm else "advective"
            rep.add("duality", f"ad* / bracket ({tag}, k={k})", i, _rel(lhs, rhs), 1e-6)
    for i in range(trials):
        f, g_ = random_field(grid, (), rng), random_field(grid, (), rng)
        lhs = float(grid.integrate(f * grid.diff(g_, 0)))
        rhs = -float(grid.integrate(g_ * grid.diff(f, 0)))
        rep.add("duality", "summation by parts", i, abs(lhs - rhs), 1e-13)
    return rep


# -- conservation --------------------------------------------------------------

def _preshock_scale(grid, u, T, target=0.5):
    """Factor bringing max |D u| T down to ``target``."""
    slope = np.max(np.abs(grid.with_derivative("spectral").grad(u))) * T
    return min(1.0, target / slope) if slope > 0 else 1.0


def balanced_vector_instance(grid, k, rng, T=0.5):
    w = random_vector_half_density(grid, k, rng)
    theta = 0.3 * random_field(grid, (k,), rng)
    u, a = horizontal_from_theta(grid, theta, w)
    theta = theta * _preshock_scale(grid, u, T)
    u, a = horizontal_from_theta(grid, theta, w)
    return VectorGeodesicState(u, project_flavor(a, "so"), w, 0.0, "so")


def balanced_matrix_instance(grid, k, rng, T=0.5):
    Sigma = random_matrix_density(grid, k, rng)
    S, rho = factorize(Sigma)
    u = 0.2 * random_field(grid, (grid.dim,), rng)
    u = u * _preshock_scale(grid, u, T)
    a = project_flavor(0.5 * random_field(grid, (k, k), rng), "pgl", S)
    return MatrixGeodesicState(u, a, S, rho, 0.0, "pgl")


def mass_law_table(seed=0, n=64, T=0.5, steps=(64, 128, 256)):
    """Residuals of the unbalanced mass laws along RK4 trajectories.

    The rate is the centred difference of the total mass; it is compared with
    the derived source and with the opposite sign.  Returns a dict of arrays.
    """
    grid = PeriodicGrid((n,))
    rng = np.random.default_rng(seed)
    k = 2
    w0 = random_vector_half_density(grid, k, rng, balanced=False)
    u0 = 0.2 * random_field(grid, (1,), rng)
    a0 = random_gauge_algebra(grid, k, "conf", rng, amplitude=0.5)
    S0, rho0 = factorize(random_matrix_density(grid, k, rng))
    ag = random_gauge_algebra(grid, k, "gl", rng, amplitude=0.5)
    out = {"dt": [], "vector": [], "vector_opposite": [], "matrix": [], "matrix_opposite": []}
    for nsteps in steps:
        dt = T / nsteps
        tv = integrate_geodesic_vector(grid, VectorGeodesicState(u0, a0, w0, 0.0, "conf"), T, nsteps,
                                       method="eulerian")
        M = np.array([mass(grid, s.w) for s in tv])
        src = np.array([(2.0 / k) * grid.integrate(trace(s.a) * np.einsum("...j,...j->...", s.w, s.w))
                        for s in tv])[1:-1]
        rate = (M[2:] - M[:-2]) / (2 * dt)
        tm = integrate_geodesic_matrix_unbalanced(grid, MatrixGeodesicState(u0, ag, S0, rho0), T, nsteps)
        Mm = np.array([grid.integrate(s.rho) for s in tm])
        srcm = np.array([2 * grid.integrate(tr_prod(s.a, s.S) * s.rho) for s in tm])[1:-1]
        ratem = (Mm[2:] - Mm[:-2]) / (2 * dt)
        out["dt"].append(dt)
        out["vector"].append(float(np.max(np.abs(rate - src))))
        out["vector_opposite"].append(float(np.max(np.abs(rate + src))))
        out["matrix"].append(float(np.max(np.abs(ratem - srcm))))
        out["matrix_opposite"].append(float(np.max(np.abs(ratem + srcm))))
    return {key: np.array(v) for key, v in out.items()}


def conservation_checks(seed=0, size="small"):
    cfg = SIZES[size]
    rep = Report()
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid((cfg["cons_n"],))
    T, steps = 0.5, 8
    for i in range(max(1, cfg["trials"] // 5)):
        s0 = balanced_vector_instance(grid, 2, rng, T)
        traj = integrate_geodesic_vector(grid, s0, T, steps)
        m = [mass(grid, s.w) for s in traj]
        e = [bures_energy(grid, s.u, s.a, s.w) for s in traj]
        rep.add("conservation", "vector balanced mass drift", i, max(abs(x - m[0]) for x in m), 1e-8)
        rep.add("conservation", "vector balanced energy drift (rel)", i, max(_rel(x, e[0]) for x in e), 1e-6)
        s0 = balanced_matrix_instance(grid, 2, rng, T)
        traj = integrate_geodesic_matrix_balanced(grid, s0, T, steps)
        m = [grid.integrate(s.rho) for s in traj]
        e = [bures_energy_matrix(grid, s.u, s.a, s.Sigma, "pgl") for s in traj]
        rep.add("conservation", "matrix balanced mass drift", i, max(abs(x - m[0]) for x in m), 1e-8)
        rep.add("conservation", "matrix balanced max |tr(aS)|", i,
                max(np.max(np.abs(tr_prod(s.a, s.S))) for s in traj), 1e-8)
        rep.add("conservation", "matrix balanced energy drift (rel)", i, max(_rel(x, e[0]) for x in e), 1e-6)
    tab = mass_law_table(seed)
    rows = [f"{'dt':>10} {'vector':>12} {'vector(-)':>12} {'matrix':>12} {'matrix(-)':>12}"]
    for j, dt in enumerate(tab["dt"]):
        rows.append(f"{dt:10.4e} {tab['vector'][j]:12.4e} {tab['vector_opposite'][j]:12.4e} "
                    f"{tab['matrix'][j]:12.4e} {tab['matrix_opposite'][j]:12.4e}")
    rep.tables.append(("unbalanced mass law residuals (derived sign, opposite sign '(-)')", rows))
    for key in ("vector", "matrix"):
        p = _order(tab["dt"], tab[key])
        rep.add("conservation", f"{key} unbalanced mass law order", "-", p, 1.9, passed=p >= 1.9)
        rep.add("conservation", f"{key} unbalanced mass law residual", "finest", tab[key][-1], 1e-6)
    return rep


# -- submersion ----------------------------------------------------------------

def submersion_checks(seed=0, size="small", generators=20):
    cfg = SIZES[size]
    rep = Report()
    rng = np.random.default_rng(seed)
    n = cfg["n2d"]
    grid = PeriodicGrid((n, n))
    k = 2
    w = random_vector_half_density(grid, k, rng)
    theta = random_field(grid, (k,), rng)
    uh, ah = horizontal_from_theta(grid, theta, w)
    for i in range(generators):
        uv, av = vertical_generator(grid, w, random_field(grid, (), rng))
        rep.add("submersion", "vertical generator action", i, np.max(np.abs(infinitesimal_action(grid, uv, av, w))),
                1e-8)
        rep.add("submersion", "horizontal vs vertical pairing", i, abs(bures_pairing(grid, uh, ah, uv, av, w)), 1e-8)
    for i in range(max(1, cfg["trials"] // 5)):
        theta0 = 0.5 * random_field(grid, (k,), rng)
        u0, a0 = horizontal_from_theta(grid, theta0, w)
        wdot = infinitesimal_action(grid, u0, a0, w)
        theta1 = horizontal_lift(grid, wdot, w)
        u1, a1 = horizontal_from_theta(grid, theta1, w)
        err = max(np.max(np.abs(u1 - u0)), np.max(np.abs(a1 - a0))) / max(np.max(np.abs(u0)), np.max(np.abs(a0)))
        rep.add("submersion", "vector lift round trip (u, a)", i, err, 1e-6)
        trform, thform = submersion_metric(grid, wdot, w, theta_form=True)
        rep.add("submersion", "metric, tr(aa^T) form", i, trform, np.inf, passed=True)
        rep.add("submersion", "metric, |theta|^2 form", i, thform, np.inf, passed=True)
        Sigma = random_matrix_density(grid, k, rng)
        P0 = 0.5 * sym(random_field(grid, (k, k), rng))
        u0, a0 = horizontal_from_P(grid, P0, Sigma)
        P1 = horizontal_lift_matrix(grid, infinitesimal_action_matrix(grid, u0, a0, Sigma), Sigma)
        u1, a1 = horizontal_from_P(grid, P1, Sigma)
        err = max(np.max(np.abs(u1 - u0)), np.max(np.abs(a1 - a0))) / max(np.max(np.abs(u0)), np.max(np.abs(a0)))
        rep.add("submersion", "matrix lift round trip (u, a)", i, err, 1e-6)
    return rep


# -- rank one --------------------------------------------------------------------

def _heun(F, y, t, dt):
    k1 = F(y, t)
    k2 = F(y + dt * k1, t + dt)
    return y + 0.5 * dt * (k1 + k2)


def rank1_residuals(seed=0, n=64, k=2, steps=(16, 32, 64), T=1.0):
    """Commuting-diagram residuals ||(w w^T)(T) - Sigma(T)|| for shared skew controls.

    Both sides use the second-order Heun scheme with the same time-dependent
    controls ``u0 cos(pi t)``, ``a0 (1 + t)``; the grid uses the spectral
    derivative so that the product rule holds to round-off on resolved data.
    """
    grid = PeriodicGrid((n,), derivative="spectral")
    rng = np.random.default_rng(seed)
    w0 = random_vector_half_density(grid, k, rng)
    u0 = 0.3 * random_field(grid, (1,), rng)
    a0 = random_gauge_algebra(grid, k, "so", rng)

    def controls(t):
        return u0 * np.cos(np.pi * t), a0 * (1.0 + t)

    def Fw(w, t):
        return infinitesimal_action(grid, *controls(t), w)

    def Fs(S, t):
        return infinitesimal_action_matrix(grid, *controls(t), S)

    dts, res = [], []
    for nsteps in steps:
        dt = T / nsteps
        w, S = w0, rank1_embed(w0)
        for i in range(nsteps):
            w = _heun(Fw, w, i * dt, dt)
            S = _heun(Fs, S, i * dt, dt)
        d = rank1_embed(w) - S
        dts.append(dt)
        res.append(float(np.sqrt(grid.integrate(frob(d, d)))))
    return np.array(dts), np.array(res)


def rank1_checks(seed=0, size="small"):
    rep = Report()
    trials = max(1, SIZES[size]["trials"] // 5)
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid((SIZES[size]["n"] * 2,), derivative="spectral")
    for i in range(trials):
        k = 2 + i % 2
        w = random_vector_half_density(grid, k, rng)
        u = random_field(grid, (1,), rng)
        a = random_gauge_algebra(grid, k, "so", rng)
        wd = infinitesimal_action(grid, u, a, w)
        prod = np.einsum("...i,...j->...ij", wd, w)
        rep.add("rank1", f"equivariance of w -> w w^T (k={k})", i,
                np.max(np.abs(infinitesimal_action_matrix(grid, u, a, rank1_embed(w)) - prod - np.swapaxes(prod, -1, -2))),
                1e-10)
    rows = [f"{'dt':>10} {'residual':>12} {'residual/dt^2':>14}"]
    for i in range(trials):
        dts, res = rank1_residuals(seed + i, k=2 + i % 2)
        for dt, r in zip(dts, res):
            rows.append(f"{dt:10.4e} {r:12.4e} {r / dt ** 2:14.4e}")
        p = _order(dts, res)
        rep.add("rank1", "commuting diagram order in dt", i, p, 1.9, passed=p >= 1.9)
    rep.tables.append(("rank-1 commuting diagram: residual vs dt^2", rows))
    return rep


# -- oracle ----------------------------------------------------------------------

def oracle_checks(seed=0, size="small", solvers=("shoot",)):
    """Closed-form oracle checks, then the solvers against the 1D oracle."""
    rep = Report()
    grid = PeriodicGrid((256,))
    r0 = von_mises(grid, 0.4, 200.0)
    for d in (0.05, 0.1):
        r1 = von_mises(grid, 0.4 + d, 200.0)
        rep.add("oracle", f"translation by {d}", "-", abs(wasserstein_1d_oracle(grid, r0, r1) - d * d), 1e-4)
    b0, b1 = von_mises(grid, 0.3, 400.0), von_mises(grid, 0.6, 400.0)
    rep.add("oracle", "bumps at 0.3 and 0.6", "-", abs(wasserstein_1d_oracle(grid, b0, b1) - 0.09), 1e-3)
    for i in range(SIZES[size]["pairs"]):
        g, w0, w1, _ = scalar_pair(seed + i)
        ref = wasserstein_1d_oracle(g, w0[:, 0] ** 2, w1[:, 0] ** 2)
        prob = BvpProblem("vhprob", g, w0, w1, steps=32)
        for name in solvers:
            sol = shoot(prob) if name == "shoot" else path_relax(prob)
            rep.add("oracle", f"{name} vs 1D oracle (rel)", seed + i, _rel(sol.distance_sq, ref), 2e-2,
                    passed=_rel(sol.distance_sq, ref) <= 2e-2 and sol.converged)
    return rep


# -- abstract reduced system vs concrete integrators ------------------------------

def _abstract_vector(grid, s, dt):
    rho = np.einsum("...j,...j->...", s.w, s.w)
    m, b, w = abstract.step(abstract.rhs_vector, grid, (s.u * rho[..., None], s.a * rho[..., None, None], s.w), dt,
                            flavor=s.flavor)
    r = np.einsum("...j,...j->...", w, w)
    return m / r[..., None], b / r[..., None, None], w


def abstract_step_trial(grid, system, rng, dt=1e-3, k=2, commutator=False):
    """Largest relative difference between one abstract and one concrete RK4 step."""
    u = 0.3 * random_field(grid, (grid.dim,), rng)
    if system.startswith("vector"):
        w = random_vector_half_density(grid, k, rng)
        flavor = "so" if system == "vector-balanced" else "conf"
        a = random_gauge_algebra(grid, k, flavor, rng, amplitude=0.5)
        s0 = VectorGeodesicState(u, a, w, 0.0, flavor)
        c = integrate_geodesic_vector(grid, s0, dt, 1, method="eulerian")[-1]
        ua, aa, wa = _abstract_vector(grid, s0, dt)
        return max(_maxrel(ua, c.u), _maxrel(aa, c.a), _maxrel(wa, c.w))
    S, rho = factorize(random_matrix_density(grid, k, rng))
    Sigma = S * rho[..., None, None]
    a = random_gauge_algebra(grid, k, "gl", rng, amplitude=0.5)
    m0 = u * rho[..., None]
    if system == "matrix-unbalanced":
        c = integrate_geodesic_matrix_unbalanced(grid, MatrixGeodesicState(u, a, S, rho), dt, 1,
                                                 commutator=commutator)[-1]
        m, b, Sg = abstract.step(abstract.rhs_matrix, grid, (m0, a * rho[..., None, None], Sigma), dt,
                                 commutator=commutator)
        r = trace(Sg)
        return max(_maxrel(m / r[..., None], c.u), _maxrel(b / r[..., None, None], c.a), _maxrel(Sg, c.Sigma))
    if system == "matrix-balanced":
        a = project_flavor(a, "pgl", S)
        c = integrate_geodesic_matrix_balanced(grid, MatrixGeodesicState(u, a, S, rho, 0.0, "pgl"), dt, 1,
                                               method="eulerian", commutator=commutator)[-1]
        eye = np.eye(k)
        atf = a - (trace(a) / k)[..., None, None] * eye
        m, b, Sg = abstract.step(abstract.rhs_matrix_projective, grid, (m0, atf * rho[..., None, None], Sigma), dt,
                                 commutator=commutator)
        r = trace(Sg)
        ctf = c.a - (trace(c.a) / k)[..., None, None] * eye
        return max(_maxrel(m / r[..., None], c.u), _maxrel(b / r[..., None, None], ctf), _maxrel(Sg, c.Sigma))
    if system == "matrix-alternative":
        c = integrate_geodesic_matrix_alternative(grid, MatrixGeodesicState(u, a, S, rho), dt, 1,
                                                  commutator=commutator)[-1]
        m, b, Sg = abstract.step(abstract.rhs_matrix_alternative, grid, (m0, a @ Sigma, Sigma), dt,
                                 commutator=commutator)
        r = trace(Sg)
        a_abs = np.swapaxes(np.linalg.solve(Sg, np.swapaxes(b, -1, -2)), -1, -2)
        return max(_maxrel(m / r[..., None], c.u), _maxrel(a_abs, c.a), _maxrel(Sg, c.Sigma))
    raise ValueError(f"unknown system {system!r}")


SYSTEMS = ("vector-balanced", "vector-unbalanced", "matrix-unbalanced", "matrix-balanced", "matrix-alternative")


def abstract_step_checks(seed=0, size="small", trials=None):
    rep = Report()
    trials = trials or max(3, SIZES[size]["trials"] // 2)
    # the conservative and advective forms agree only with the spectral product rule
    grid = PeriodicGrid((SIZES[size]["n"],), derivative="spectral")
    rng = np.random.default_rng(seed)
    for system in SYSTEMS:
        for i in range(trials):
            rep.add("appendixA", f"abstract vs concrete step ({system})", i, abstract_step_trial(grid, system, rng), 1e-8)
    return rep


# -- reductions of the alternative metric (reported with appendixA) ---------------

def reduction_checks(seed=0, size="small"):
    from .matrix import alternative_u_source, rhs_matrix_alternative, rhs_matrix_unbalanced
    rep = Report()
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid((SIZES[size]["n"],))
    for i in range(max(1, SIZES[size]["trials"] // 5)):
        S, rho = factorize(random_matrix_density(grid, 2, rng))
        u = random_field(grid, (1,), rng)
        a = random_gauge_algebra(grid, 2, "so", rng)
        for stated in (False, True):
            src = alternative_u_source(grid, u, a, S, stated)
            rep.add("appendixA", f"skew gauge u-source ({'stated' if stated else 'derived'})", i,
                    np.max(np.abs(src)), 1e-10)
        S1, rho1 = factorize(random_matrix_density(grid, 1, rng))
        u1 = 0.3 * random_field(grid, (1,), rng)
        a1 = random_field(grid, (1, 1), rng)
        Sig1 = S1 * rho1[..., None, None]
        ud, ad, Sd = rhs_matrix_alternative(grid, u1, a1, Sig1)
        uu, au, Su, ru = rhs_matrix_unbalanced(grid, u1, a1, S1, rho1)
        # k = 1: the alternative metric coincides with the unbalanced one
        err = max(np.max(np.abs(ud - uu)), np.max(np.abs(ad - au)), np.max(np.abs(Sd[..., 0, 0] - ru)))
        rep.add("appendixA", "k=1 alternative vs unbalanced right-hand side", i, err, 1e-8)
    return rep


def run_suite(name, seed=0, size="small"):
    if name == "all":
        rep = Report()
        for s in SUITES:
            rep.extend(run_suite(s, seed, size))
        return rep
    if name == "duality":
        return duality_checks(seed, size)
    if name == "conservation":
        return conservation_checks(seed, size)
    if name == "submersion":
        return submersion_checks(seed, size)
    if name == "rank1":
        return rank1_checks(seed, size)
    if name == "oracle":
        return oracle_checks(seed, size, ("shoot", "relax") if size == "medium" else ("shoot",))
    if name == "appendixA":
        rep = abstract_step_checks(seed, size)
        rep.extend(reduction_checks(seed, size))
        return rep
    raise ValueError(f"unknown suite {name!r}")
