"""P1 element geometry and the two quadrature rules used throughout.

Gradient-only integrands use the one-point centroid rule (exact for P1
gradients). Integrands involving ``u`` itself use the three-point
edge-midpoint rule, exact for quadratics on a triangle.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh

# local vertex pairs whose midpoints are the three quadrature nodes
MIDPOINT_PAIRS = np.array([[0, 1], [1, 2], [2, 0]])


class P1Space:
    """Cached per-triangle data for piecewise-linear functions on a mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        tri = mesh.triangles
        self.areas = mesh.signed_areas.copy()
        P = mesh.vertices[tri]  # (M, 3, 2)
        if len(tri):
            # gradients of the barycentric functions: grad l_k = rot90(x_{k+2} - x_{k+1}) / (2A)
            e = np.roll(P, -2, axis=1) - np.roll(P, -1, axis=1)
            self.B = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * self.areas[:, None, None])
        else:
            self.B = np.zeros((0, 3, 2))
        self.free = ~mesh.boundary_vertices
        self.free_idx = np.flatnonzero(self.free)
        self._rows = np.repeat(tri, 3, axis=1).ravel()
        self._cols = np.tile(tri, (1, 3)).ravel()
        a, b = tri[:, MIDPOINT_PAIRS[:, 0]], tri[:, MIDPOINT_PAIRS[:, 1]]
        self._mid_a, self._mid_b = a, b

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    def gradients(self, u) -> np.ndarray:
        return np.einsum("mk,mkd->md", np.asarray(u)[self.mesh.triangles], self.B)

    def midpoint_values(self, u) -> np.ndarray:
        u = np.asarray(u)
        return 0.5 * (u[self._mid_a] + u[self._mid_b])

    def midpoint_points(self) -> np.ndarray:
        V = self.mesh.vertices
        return 0.5 * (V[self._mid_a] + V[self._mid_b])

    def integrate_centroid(self, values) -> float:
        return float(np.sum(self.areas * values))

    def integrate_midpoint(self, values) -> float:
        return float(np.sum(self.areas[:, None] / 3.0 * values))

    def stiffness(self, coef, extra=None, g=None) -> sp.csr_matrix:
        """``sum_T A_T (coef_T B_i.B_j + extra_T (B_i.g_T)(B_j.g_T))``."""
        local = np.einsum("mid,mjd->mij", self.B, self.B) * coef[:, None, None]
        if extra is not None:
            bg = np.einsum("mid,md->mi", self.B, g)
            local = local + extra[:, None, None] * bg[:, :, None] * bg[:, None, :]
        local *= self.areas[:, None, None]
        return sp.csr_matrix((local.ravel(), (self._rows, self._cols)), shape=(self.n, self.n))

    def stiffness_apply(self, coef, u) -> np.ndarray:
        """Matrix-free ``K(coef) u``, i.e. ``int coef Du . D phi_i``."""
        g = self.gradients(u)
        contrib = np.einsum("mkd,md->mk", self.B, g) * (coef * self.areas)[:, None]
        return np.bincount(self.mesh.triangles.ravel(), contrib.ravel(), minlength=self.n)

    def load(self, mid_values) -> np.ndarray:
        """``int g phi_i`` for ``g`` sampled at edge midpoints."""
        w = self.areas[:, None] / 3.0 * mid_values * 0.5
        out = np.bincount(self._mid_a.ravel(), w.ravel(), minlength=self.n)
        out += np.bincount(self._mid_b.ravel(), w.ravel(), minlength=self.n)
        return out

    def mass(self, mid_values) -> sp.csr_matrix:
        """``int d phi_i phi_j`` for ``d`` sampled at edge midpoints."""
        w = (self.areas[:, None] / 3.0 * mid_values * 0.25).ravel()
        a, b = self._mid_a.ravel(), self._mid_b.ravel()
        rows = np.concatenate([a, a, b, b])
        cols = np.concatenate([a, b, a, b])
        return sp.csr_matrix((np.tile(w, 4), (rows, cols)), shape=(self.n, self.n))


def space(mesh: Mesh) -> P1Space:
    cache = mesh._cache
    if "p1" not in cache:
        cache["p1"] = P1Space(mesh)
    return cache["p1"]


def integrate_domain(mesh: Mesh, integrand, rule: str = "centroid") -> float:
    """Sum of ``area * integrand`` over triangles.

    ``integrand`` may be a constant, an array of node values (``(M,)`` for
    the centroid rule, ``(M, 3)`` for the midpoint rule) or a callable of
    the node coordinates.
    """
    if mesh.n_triangles == 0:
        return 0.0
    V = space(mesh)
    if rule == "centroid":
        nodes = mesh.centroids
        shape = (mesh.n_triangles,)
    elif rule == "midpoint":
        nodes = V.midpoint_points()
        shape = (mesh.n_triangles, 3)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    vals = integrand(nodes) if callable(integrand) else integrand
    vals = np.broadcast_to(np.asarray(vals, dtype=float), shape)
    return V.integrate_centroid(vals) if rule == "centroid" else V.integrate_midpoint(vals)


def integrate_boundary(mesh: Mesh, integrand) -> float:
    """Edge-midpoint rule over the boundary.

    A callable integrand receives ``(midpoints, normals, parents)``.
    """
    if len(mesh.edges) == 0:
        raise ValueError("mesh has no boundary edges")
    if callable(integrand):
        vals = integrand(mesh.edge_midpoints, mesh.normals, mesh.parents)
    else:
        vals = integrand
    vals = np.broadcast_to(np.asarray(vals, dtype=float), mesh.lengths.shape)
    return float(np.sum(mesh.lengths * vals))
