"""Both sides of the generalized Pohozaev identity on discrete solutions.

For a solution ``u`` and a C^1 field ``v``,

    (1 - 1/p) int_dOmega |Du|^p v.nu
        = int |Du|^(p-2) dv[Du].Du + int div v (F(u) - |Du|^p / p).

On the boundary ``|Du|`` is the constant P1 gradient of the parent
triangle, which makes the residual decay at first order in ``h``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import fields
from .fields import PaperField, RadialField, VectorFieldSpec
from .geometry import AnnularSector, DomainSpec, Mesh, build_mesh, isotropic_angular
from .nonlinearity import NonlinearitySpec
from .quadrature import integrate_boundary, integrate_domain, space
from .solver import Solution, SolverConfig, solve

__all__ = [
    "IdentityReport",
    "CorollaryReport",
    "integrate_domain",
    "integrate_boundary",
    "identity_sides",
    "classical_pohozaev",
    "corollary_bound",
    "convergence_study",
]

RESIDUAL_FLOOR = 1e-14


class PairingError(ValueError):
    """The vector field is not C^1 on the solution's domain."""


@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs_jacobian: float
    rhs_divergence: float
    rhs_total: float
    residual_abs: float
    residual_rel: float
    n_radial: int
    n_angular: int
    h: float

    def as_dict(self) -> dict:
        d = asdict(self)
        mesh = {"nr": d.pop("n_radial"), "nt": d.pop("n_angular"), "h": d.pop("h")}
        d["mesh"] = mesh
        return d


@dataclass(frozen=True)
class CorollaryReport:
    gradient_coefficient: float
    gradient_term: float
    divF_term: float
    bound_value: float

    @property
    def tolerance(self) -> float:
        return 1e-2 * (abs(self.gradient_term) + abs(self.divF_term))

    @property
    def holds(self) -> bool:
        return self.bound_value >= -self.tolerance


def _grad_pow(g, p):
    """``|g|^p`` and ``|g|^(p-2)``, the latter set to 0 where ``g = 0``."""
    s2 = np.sum(g * g, axis=1)
    gp = s2 ** (p / 2.0)
    with np.errstate(divide="ignore"):
        gpm2 = np.where(s2 > 0.0, s2 ** ((p - 2.0) / 2.0), 0.0)
    return gp, gpm2


def _check_pairing(mesh: Mesh, field: VectorFieldSpec):
    if isinstance(field, PaperField) and not isinstance(mesh.domain, AnnularSector):
        raise PairingError(
            f"the sector field is only C^1 on an annular sector, not on {type(mesh.domain).__name__}"
        )


def identity_sides(
    solution: Solution, field: VectorFieldSpec, nonlinearity: NonlinearitySpec
) -> IdentityReport:
    mesh = solution.mesh
    _check_pairing(mesh, field)
    p = solution.p
    V = space(mesh)
    u = solution.nodal_values
    g = V.gradients(u)
    gp, gpm2 = _grad_pow(g, p)

    def boundary_integrand(mid, nu, parent):
        flux = np.sum(fields.eval_field(field, mid) * nu, axis=1)
        return gp[parent] * flux

    lhs = (1.0 - 1.0 / p) * integrate_boundary(mesh, boundary_integrand)
    rhs_jac = integrate_domain(
        mesh, lambda c: gpm2 * fields.quad_form(field, c, g), rule="centroid"
    )
    Fm = nonlinearity.F(V.midpoint_values(u))
    rhs_div = integrate_domain(
        mesh,
        lambda m: fields.divergence(field, m) * (Fm - gp[:, None] / p),
        rule="midpoint",
    )
    total = rhs_jac + rhs_div
    res = abs(lhs - total)
    rel = res / max(abs(lhs), abs(total), RESIDUAL_FLOOR)
    return IdentityReport(
        lhs, rhs_jac, rhs_div, total, res, rel, mesh.n_radial, mesh.n_angular, mesh.h
    )


def classical_pohozaev(solution: Solution, nonlinearity: NonlinearitySpec) -> tuple[float, float]:
    """Planar ``p = 2`` form with ``v = x``: ``(1/2) int |Du|^2 x.nu`` and ``2 int F(u)``."""
    mesh = solution.mesh
    V = space(mesh)
    g = V.gradients(solution.nodal_values)
    g2 = np.sum(g * g, axis=1)
    xnu = np.sum(mesh.edge_midpoints * mesh.normals, axis=1)
    lhs = 0.5 * float(np.sum(mesh.lengths * g2[mesh.parents] * xnu))
    rhs = 2.0 * V.integrate_midpoint(nonlinearity.F(V.midpoint_values(solution.nodal_values)))
    return lhs, rhs


def corollary_bound(
    solution: Solution, nonlinearity: NonlinearitySpec, s: float | None = None
) -> CorollaryReport:
    """Evaluate ``[1 - 2/p + (1 + 1/p) s/(1-s)] int |Du|^p + int div v F(u)``."""
    domain = solution.mesh.domain
    if not isinstance(domain, AnnularSector):
        raise ValueError("the corollary bound is stated on an annular sector")
    if s is not None and not math.isclose(s, domain.s, rel_tol=0.0, abs_tol=1e-15):
        raise ValueError(f"s={s} does not match the mesh's sector (s={domain.s})")
    s = domain.s
    p = solution.p
    V = space(solution.mesh)
    u = solution.nodal_values
    gp, _ = _grad_pow(V.gradients(u), p)
    coef = 1.0 - 2.0 / p + (1.0 + 1.0 / p) * s / (1.0 - s)
    grad_term = coef * V.integrate_centroid(gp)
    Fm = nonlinearity.F(V.midpoint_values(u))
    divF = integrate_domain(
        solution.mesh, lambda m: fields.divergence(PaperField(), m) * Fm, rule="midpoint"
    )
    return CorollaryReport(coef, grad_term, divF, grad_term + divF)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    lhs: float
    rhs_total: float
    residual_rel: float
    observed_order: float | None


def convergence_study(
    domain: DomainSpec,
    p: float,
    nonlinearity: NonlinearitySpec,
    field: VectorFieldSpec,
    levels: Sequence[int],
    config: SolverConfig = SolverConfig(),
    angular=None,
) -> list[ConvergenceRow]:
    """Identity residual over a sequence of meshes.

    ``angular(nr)`` picks the angular resolution; by default cells are square
    at the mean radius (:func:`~pohozaev.geometry.isotropic_angular`).

    ``observed_order`` is ``log(res_coarse/res_fine) / log(nr_fine/nr_coarse)``,
    i.e. ``log2`` of the residual ratio for dyadic levels.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    rows = []
    prev = None
    for nr in levels:
        nt = angular(nr) if angular else isotropic_angular(domain, nr)
        mesh = build_mesh(domain, nr, nt)
        sol = solve(mesh, p, nonlinearity, config)
        rep = identity_sides(sol, field, nonlinearity)
        order = None
        if prev is not None:
            nr0, res0 = prev
            order = math.log(res0 / rep.residual_rel) / math.log(nr / nr0)
        rows.append(ConvergenceRow(nr, rep.h, rep.lhs, rep.rhs_total, rep.residual_rel, order))
        prev = (nr, rep.residual_rel)
    return rows
