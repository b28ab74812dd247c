"""P1 finite elements and a radial shooting oracle for

    div(|Du|^(p-2) Du) + f(u) = 0 in Omega,   u = 0 on the boundary.

The degenerate coefficient is regularized as ``(|Du|^2 + eps^2)^((p-2)/2)``.
Constant right-hand sides are handled by damped Newton on the (convex)
regularized energy. Power nonlinearities are found by minimizing the
regularized Dirichlet energy on ``int |w|^q = 1``, rescaling by the Lagrange
multiplier and polishing with Newton on the residual.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicHermiteSpline
from scipy.spatial import cKDTree

from .criteria import critical_exponent
from .geometry import Annulus, Disk, Mesh
from .nonlinearity import Constant, NonlinearitySpec, Power
from .quadrature import P1Space, space

log = logging.getLogger(__name__)

MAX_HALVINGS = 40


class ConvergenceError(RuntimeError):
    def __init__(self, message, last_residual):
        super().__init__(f"{message} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class RefusedRegimeError(ValueError):
    """Supercritical power nonlinearity: nontrivial discrete output would be spurious."""


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    eps: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 100
    cg_rtol: float = 1e-10
    descent_tol: float = 1e-3
    max_descent: int = 300


@dataclass
class Solution:
    mesh: Mesh
    nodal_values: np.ndarray
    p: float
    regularization_eps: float
    iterations: int = 0
    final_residual_norm: float = 0.0
    tol: float = 1e-10
    energy_history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.final_residual_norm <= self.tol

    @property
    def gradients(self) -> np.ndarray:
        return space(self.mesh).gradients(self.nodal_values)


def zero_solution(mesh: Mesh, p: float, eps: float = 1e-6) -> Solution:
    return Solution(mesh, np.zeros(mesh.n_vertices), p, eps)


def _coefficients(g, p, eps):
    s2 = np.sum(g * g, axis=1) + eps * eps
    a = s2 ** ((p - 2.0) / 2.0)
    b = (p - 2.0) * s2 ** ((p - 4.0) / 2.0)
    return s2, a, b


def _energy_reg(V: P1Space, u, p, eps, nl):
    s2, _, _ = _coefficients(V.gradients(u), p, eps)
    return V.integrate_centroid(s2 ** (p / 2.0) / p) - V.integrate_midpoint(nl.F(V.midpoint_values(u)))


def weak_residual(V: P1Space, u, p, eps, nl) -> np.ndarray:
    """Full-length residual ``int a(Du) Du.Dphi_i - int f(u) phi_i``; boundary rows zeroed."""
    _, a, _ = _coefficients(V.gradients(u), p, eps)
    r = V.stiffness_apply(a, u) - V.load(nl.f(V.midpoint_values(u)))
    r[~V.free] = 0.0
    return r


def _jacobi_cg(A, b, rtol):
    d = A.diagonal()
    M = spla.LinearOperator(A.shape, matvec=lambda x: x / d, dtype=float)
    x, info = spla.cg(A, b, rtol=rtol, atol=0.0, M=M, maxiter=20 * A.shape[0])
    if info > 0:
        log.warning("CG stopped after %d iterations without reaching rtol=%g", info, rtol)
    return x


def _restrict(A, free):
    return A[free][:, free]


def _check_regime(p, nl):
    if not p > 1.0:
        raise ValueError(f"p={p} must exceed 1")
    if isinstance(nl, Power):
        if p < 2.0 and nl.q >= critical_exponent(p, 2):
            raise RefusedRegimeError(
                f"power:{nl.q:g} is not below the critical exponent {critical_exponent(p, 2):g} for p={p:g}"
            )
        if not (nl.q > p and nl.q >= 2.0):
            raise ValueError(f"power solver needs q > p and q >= 2, got q={nl.q:g}, p={p:g}")


def solve(
    mesh: Mesh,
    p: float,
    nonlinearity: NonlinearitySpec,
    config: SolverConfig = SolverConfig(),
) -> Solution:
    _check_regime(p, nonlinearity)
    V = space(mesh)
    if isinstance(nonlinearity, Power):
        u0 = _ground_state_guess(V, p, nonlinearity, config)
        return _newton(V, p, nonlinearity, config, u0, convex=False)
    return _newton(V, p, nonlinearity, config, np.zeros(V.n), convex=True)


def _newton(V: P1Space, p, nl, cfg: SolverConfig, u, convex) -> Solution:
    free = V.free_idx
    eps = cfg.eps
    u = u.copy()
    r = weak_residual(V, u, p, eps, nl)
    rnorm = float(np.linalg.norm(r))
    J = _energy_reg(V, u, p, eps, nl)
    history = [J]
    it = 0
    while rnorm > cfg.tol:
        if it >= cfg.max_iter:
            raise ConvergenceError(f"Newton did not converge in {cfg.max_iter} iterations", rnorm)
        it += 1
        g = V.gradients(u)
        _, a, b = _coefficients(g, p, eps)
        H = V.stiffness(a, b, g)
        if not isinstance(nl, Constant):
            H = H - V.mass(nl.df(V.midpoint_values(u)))
        H = _restrict(H.tocsr(), free)
        if convex:
            step = _jacobi_cg(H, -r[free], cfg.cg_rtol)
        else:
            step = spla.spsolve(H.tocsc(), -r[free])
        delta = np.zeros_like(u)
        delta[free] = step

        tau = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = u + tau * delta
            if convex:
                J_trial = _energy_reg(V, trial, p, eps, nl)
                if J_trial <= J + 1e-14 * max(abs(J), 1.0):
                    accepted = True
                    break
            else:
                r_trial = weak_residual(V, trial, p, eps, nl)
                if np.linalg.norm(r_trial) < rnorm:
                    accepted = True
                    break
            tau *= 0.5
        if not accepted:
            # energy decrease can be lost to rounding once the residual is tiny
            trial = u + delta
            r_trial = weak_residual(V, trial, p, eps, nl)
            if np.linalg.norm(r_trial) >= rnorm:
                raise ConvergenceError("line search failed", rnorm)
        u = trial
        r = weak_residual(V, u, p, eps, nl)
        rnorm = float(np.linalg.norm(r))
        J = _energy_reg(V, u, p, eps, nl)
        history.append(J)
        log.debug("newton it=%d tau=%g |r|=%.3e J=%.15g", it, tau, rnorm, J)
    return Solution(V.mesh, u, p, eps, it, rnorm, cfg.tol, history)


def _bump(V: P1Space) -> np.ndarray:
    """Distance to the nearest boundary vertex, zero on the boundary."""
    mesh = V.mesh
    tree = cKDTree(mesh.vertices[~V.free])
    d, _ = tree.query(mesh.vertices)
    d[~V.free] = 0.0
    return d


def _normalize(V: P1Space, w, q):
    return w / V.integrate_midpoint(np.abs(V.midpoint_values(w)) ** q) ** (1.0 / q)


def _ground_state_guess(V: P1Space, p, nl: Power, cfg: SolverConfig) -> np.ndarray:
    """Minimize ``(1/p) int (|Dw|^2+eps^2)^(p/2)`` on ``int |w|^q = 1`` and rescale."""
    q, eps, free = nl.q, cfg.eps, V.free_idx

    def dirichlet(w):
        s2, _, _ = _coefficients(V.gradients(w), p, eps)
        return V.integrate_centroid(s2 ** (p / 2.0) / p)

    w = _normalize(V, _bump(V), q)
    E = dirichlet(w)
    lam = 1.0
    for k in range(cfg.max_descent):
        _, a, _ = _coefficients(V.gradients(w), p, eps)
        gE = V.stiffness_apply(a, w)
        gG = V.load(nl.f(V.midpoint_values(w)))
        lam = float(w[free] @ gE[free]) / float(w[free] @ gG[free])
        r = (gE - lam * gG)[free]
        if np.linalg.norm(r) <= cfg.descent_tol * np.linalg.norm(gE[free]):
            break
        K = _restrict(V.stiffness(a), free)
        d = np.zeros_like(w)
        d[free] = -_jacobi_cg(K, r, cfg.cg_rtol)
        tau = 1.0
        for _ in range(MAX_HALVINGS):
            trial = _normalize(V, w + tau * d, q)
            E_trial = dirichlet(trial)
            if E_trial <= E:
                break
            tau *= 0.5
        w, E = trial, E_trial
    log.debug("constrained descent: %d steps, multiplier %.12g", k, lam)
    return lam ** (1.0 / (q - p)) * w


def energy(solution: Solution, nonlinearity: NonlinearitySpec) -> float:
    """``int |Du|^p / p - int F(u)`` (unregularized)."""
    V = space(solution.mesh)
    u = solution.nodal_values
    g = V.gradients(u)
    grad_term = V.integrate_centroid(np.sum(g * g, axis=1) ** (solution.p / 2.0)) / solution.p
    return grad_term - V.integrate_midpoint(nonlinearity.F(V.midpoint_values(u)))


@dataclass(frozen=True)
class PowerIdentity:
    lhs: float
    rhs: float
    rel_gap: float


def weak_power_identity(solution: Solution, nonlinearity: NonlinearitySpec) -> PowerIdentity:
    """Compare ``int |Du|^p`` with ``int u f(u)``; equal for exact solutions."""
    if not solution.converged:
        raise ValueError(
            f"solution not converged: residual {solution.final_residual_norm:.3e} > tol {solution.tol:.3e}"
        )
    V = space(solution.mesh)
    u = solution.nodal_values
    g = V.gradients(u)
    lhs = V.integrate_centroid(np.sum(g * g, axis=1) ** (solution.p / 2.0))
    um = V.midpoint_values(u)
    rhs = V.integrate_midpoint(um * nonlinearity.f(um))
    scale = max(lhs, rhs)
    gap = 0.0 if scale == 0.0 else abs(lhs - rhs) / scale
    return PowerIdentity(lhs, rhs, gap)


# -- radial oracle ---------------------------------------------------------


@dataclass
class RadialProfile:
    abscissae: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    p: float
    nonlinearity: NonlinearitySpec
    shooting_parameter: float = 0.0

    def __call__(self, rho):
        spline = CubicHermiteSpline(self.abscissae, self.values, self.derivatives)
        return spline(rho)


def _phi_inv(z, p):
    """Inverse of ``t -> |t|^(p-2) t``."""
    return math.copysign(abs(z) ** (1.0 / (p - 1.0)), z)


def _integrate(r_start, r_end, u0, w0, p, f, n):
    """RK4 on ``u' = phi_inv(w/rho)``, ``w' = -rho f(u)`` with ``w = rho |u'|^(p-2) u'``."""
    h = (r_end - r_start) / n
    rho = r_start
    u, w = u0, w0
    us = [u]
    ws = [w]

    def rhs(r, u, w):
        du = 0.0 if r == 0.0 else _phi_inv(w / r, p)
        return du, -r * f(u)

    for _ in range(n):
        k1u, k1w = rhs(rho, u, w)
        k2u, k2w = rhs(rho + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w)
        k3u, k3w = rhs(rho + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w)
        k4u, k4w = rhs(rho + h, u + h * k3u, w + h * k3w)
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        rho = r_start + (len(us)) * h
        us.append(u)
        ws.append(w)
    return np.array(us), np.array(ws)


def solve_radial(
    domain: Union[Annulus, Disk],
    p: float,
    nonlinearity: NonlinearitySpec,
    grid_size: int = 1024,
    target: float = 1e-10,
) -> RadialProfile:
    """Shooting oracle for radial solutions.

    On an annulus the unknown is ``u'(r_inner)``; on a disk it is ``u(0)``
    (with ``u'(0) = 0``). The parameter is bracketed on a geometric scan and
    bisected until ``|u(r_outer)| <= target``.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    if not p > 1.0:
        raise ValueError(f"p={p} must exceed 1")
    f = lambda t: float(nonlinearity.f(t))
    if isinstance(domain, Annulus):
        r0, r1 = domain.r_inner, domain.r_outer

        def shoot(a):
            return _integrate(r0, r1, 0.0, r0 * math.copysign(abs(a) ** (p - 1.0), a), p, f, grid_size)
    elif isinstance(domain, Disk):
        r0, r1 = 0.0, domain.radius

        def shoot(a):
            return _integrate(0.0, r1, a, 0.0, p, f, grid_size)
    else:
        raise TypeError("radial oracle needs an Annulus or a Disk")

    def end(a):
        return shoot(a)[0][-1]

    scan = np.geomspace(1e-4, 1e4, 33)
    bracket = None
    for sign in (1.0, -1.0):
        prev_a, prev_v = None, None
        for a in sign * scan:
            v = end(a)
            if v == 0.0:
                continue
            if prev_v is not None and np.sign(v) != np.sign(prev_v):
                bracket = (prev_a, a, prev_v)
                break
            prev_a, prev_v = a, v
        if bracket:
            break
    if bracket is None:
        raise OracleError("no sign change of u(r_outer) found while scanning the shooting parameter")

    lo, hi, v_lo = bracket
    a = 0.5 * (lo + hi)
    for _ in range(200):
        a = 0.5 * (lo + hi)
        v = end(a)
        if abs(v) <= target or hi == lo:
            break
        if np.sign(v) == np.sign(v_lo):
            lo, v_lo = a, v
        else:
            hi = a
    else:
        raise OracleError(f"bisection stalled with |u(r_outer)|={abs(v):.3e}")

    us, ws = shoot(a)
    rho = np.linspace(r0, r1, grid_size + 1)
    du = np.array([0.0 if r == 0.0 else _phi_inv(w / r, p) for r, w in zip(rho, ws)])
    return RadialProfile(rho, us, du, p, nonlinearity, a)
