"""Vector fields used as multipliers in the integral identity.

``PaperField`` is the sector field

    v(rho cos t, rho sin t) = (rho - 1) e_r(t) + rho t e_t(t),

with ``e_r = (cos t, sin t)`` and ``e_t = (-sin t, cos t)``; ``RadialField``
is the classical multiplier ``v(x) = x``. Both carry a positive ``scale``
so linearity of the identity in ``v`` can be exercised.

All evaluators are vectorized over a trailing axis of length 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .geometry import AnnularSector, INNER_ARC, OUTER_ARC, STRAIGHT_SIDE, UndefinedAngleError

FD_DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)]])


@dataclass(frozen=True)
class PaperField:
    scale: float = 1.0


@dataclass(frozen=True)
class RadialField:
    scale: float = 1.0


VectorFieldSpec = Union[PaperField, RadialField]


class FieldSample(NamedTuple):
    value: np.ndarray
    divergence: float
    quad_form: float


def _polar(points):
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    rho = np.hypot(x, y)
    if np.any(rho == 0.0):
        raise UndefinedAngleError("the sector field is not defined at the origin")
    return rho, np.arctan2(y, x)


def eval_field(spec: VectorFieldSpec, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if isinstance(spec, RadialField):
        return spec.scale * pts
    rho, theta = _polar(pts)
    c, s = np.cos(theta), np.sin(theta)
    vx = (rho - 1.0) * c - rho * theta * s
    vy = (rho - 1.0) * s + rho * theta * c
    return spec.scale * np.stack([vx, vy], axis=-1)


def divergence(spec: VectorFieldSpec, points):
    pts = np.asarray(points, dtype=float)
    if isinstance(spec, RadialField):
        return spec.scale * 2.0 * np.ones(pts.shape[:-1])
    rho, _ = _polar(pts)
    return spec.scale * (3.0 - 1.0 / rho)


def quad_form(spec: VectorFieldSpec, points, xi):
    """``dv(point)[xi] . xi`` broadcast over points and directions."""
    pts = np.asarray(points, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if isinstance(spec, RadialField):
        return spec.scale * np.sum(xi * xi, axis=-1) * np.ones(pts.shape[:-1])
    rho, theta = _polar(pts)
    c, s = np.cos(theta), np.sin(theta)
    xn = xi[..., 0] * c + xi[..., 1] * s
    xt = -xi[..., 0] * s + xi[..., 1] * c
    return spec.scale * (xn**2 + (2.0 - 1.0 / rho) * xt**2)


def sample(spec: VectorFieldSpec, point, xi) -> FieldSample:
    return FieldSample(
        eval_field(spec, point), float(divergence(spec, point)), float(quad_form(spec, point, xi))
    )


def fd_jacobian(spec: VectorFieldSpec, points, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, ``J[..., i, k] = d v_i / d x_k``."""
    if not h > 0.0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    pts = np.asarray(points, dtype=float)
    cols = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        cols.append((eval_field(spec, pts + e) - eval_field(spec, pts - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


class FDReport(NamedTuple):
    div_error: np.ndarray
    quad_errors: np.ndarray
    div_analytic: np.ndarray
    div_fd: np.ndarray


def fd_consistency(spec: VectorFieldSpec, points, h: float = 1e-5) -> FDReport:
    """Compare analytic divergence and quadratic form against central differences.

    ``quad_errors`` has a trailing axis over the directions ``(1,0)``,
    ``(0,1)`` and ``(1,1)/sqrt(2)``.
    """
    pts = np.asarray(points, dtype=float)
    J = fd_jacobian(spec, pts, h)
    div_fd = J[..., 0, 0] + J[..., 1, 1]
    div_an = divergence(spec, pts)
    q_err = []
    for xi in FD_DIRECTIONS:
        q_fd = np.einsum("...ik,i,k->...", J, xi, xi)
        q_err.append(np.abs(quad_form(spec, pts, xi) - q_fd))
    return FDReport(np.abs(div_an - div_fd), np.stack(q_err, axis=-1), div_an, div_fd)


class FluxSample(NamedTuple):
    kind: str
    rho: float
    theta: float
    flux: float


class FluxAudit(NamedTuple):
    min_flux: float
    samples: list


def _interior_nodes(a, b, n, include_ends):
    if include_ends:
        return np.linspace(a, b, n)
    return a + (b - a) * (np.arange(n) + 0.5) / n


def boundary_flux_audit(
    domain: AnnularSector, n_samples: int, include_corners: bool = False
) -> FluxAudit:
    """Sample ``v . nu`` on the four smooth pieces of the sector boundary.

    Normals are the exact ones: ``+e_r`` on the outer arc, ``-e_r`` on the
    inner arc and ``+-e_t(+-alpha)`` on the straight sides. Corners are only
    sampled (as one-sided limits) when ``include_corners`` is set.
    """
    if not isinstance(domain, AnnularSector):
        raise TypeError("flux audit is defined on an AnnularSector")
    if n_samples < 4:
        raise ValueError("n_samples must be at least 4")
    field = PaperField()
    per, extra = divmod(int(n_samples), 4)
    a, s = domain.alpha, domain.s
    pieces = []
    th = _interior_nodes(-a, a, per + extra, include_corners)
    pieces.append((OUTER_ARC, np.full_like(th, 1.0 + s), th, 1.0))
    th = _interior_nodes(-a, a, per, include_corners)
    pieces.append((INNER_ARC, np.full_like(th, 1.0 - s), th, -1.0))
    rh = _interior_nodes(1.0 - s, 1.0 + s, per, include_corners)
    pieces.append((STRAIGHT_SIDE, rh, np.full_like(rh, a), 1.0))
    pieces.append((STRAIGHT_SIDE, rh, np.full_like(rh, -a), -1.0))

    samples = []
    min_flux = math.inf
    for kind, rho, theta, sign in pieces:
        pts = np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)
        if kind == STRAIGHT_SIDE:
            nu = sign * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        else:
            nu = sign * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        flux = np.sum(eval_field(field, pts) * nu, axis=-1)
        min_flux = min(min_flux, float(flux.min()))
        samples.extend(FluxSample(kind, float(r), float(t), float(f)) for r, t, f in zip(rho, theta, flux))
    return FluxAudit(min_flux, samples)
