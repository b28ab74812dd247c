"""Planar domains and structured polar triangle meshes.

Three domain families are supported: the annular sector
``{(r cos t, r sin t) : |t| < alpha, |r - 1| < s}``, the annulus and the disk.
Every mesh is a polar grid with each cell cut into two triangles along the
same diagonal, so vertex positions on the circular arcs are exact and the
straight sides of the sector carry exact normals.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple, Union

import numpy as np


class DomainError(ValueError):
    """A domain parameter violates its invariant."""


class UndefinedAngleError(ValueError):
    """Polar angle requested at the origin."""


OUTER_ARC = "OuterArc"
INNER_ARC = "InnerArc"
STRAIGHT_SIDE = "StraightSide"
OTHER = "Other"


@dataclass(frozen=True)
class AnnularSector:
    alpha: float
    s: float

    def __post_init__(self):
        if not (0.0 < self.alpha < math.pi):
            raise DomainError(f"alpha={self.alpha} outside (0, pi)")
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"s={self.s} outside (0, 1)")

    @property
    def r_inner(self) -> float:
        return 1.0 - self.s

    @property
    def r_outer(self) -> float:
        return 1.0 + self.s

    @property
    def area(self) -> float:
        return 4.0 * self.alpha * self.s

    @property
    def perimeter(self) -> float:
        return 4.0 * self.alpha + 4.0 * self.s


@dataclass(frozen=True)
class Annulus:
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (0.0 < self.r_inner < self.r_outer):
            raise DomainError(
                f"annulus needs 0 < r_inner < r_outer, got {self.r_inner}, {self.r_outer}"
            )

    @property
    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * (self.r_outer + self.r_inner)


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0.0:
            raise DomainError(f"radius={self.radius} must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius


DomainSpec = Union[AnnularSector, Annulus, Disk]


class BoundaryEdge(NamedTuple):
    endpoints: Tuple[int, int]
    normal: Tuple[float, float]
    parent_triangle: int
    length: float
    kind: str


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangle mesh.

    Boundary data is stored column-wise (``edges``, ``normals``, ``parents``,
    ``lengths``, ``kinds``); :attr:`boundary_edges` gives the record view.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    normals: np.ndarray
    parents: np.ndarray
    lengths: np.ndarray
    kinds: np.ndarray
    domain: DomainSpec | None = None
    n_radial: int = 0
    n_angular: int = 0
    center_vertex: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_edges(self) -> list[BoundaryEdge]:
        return [
            BoundaryEdge(
                (int(e[0]), int(e[1])),
                (float(n[0]), float(n[1])),
                int(t),
                float(ln),
                str(k),
            )
            for e, n, t, ln, k in zip(
                self.edges, self.normals, self.parents, self.lengths, self.kinds
            )
        ]

    @property
    def signed_areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
            ab, ac = b - a, c - a
            self._cache["areas"] = 0.5 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
        return self._cache["areas"]

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def boundary_vertices(self) -> np.ndarray:
        """Boolean mask of vertices lying on a boundary edge."""
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges.ravel()] = True
        return mask

    @property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @property
    def h(self) -> float:
        """Maximum edge length."""
        if self.n_triangles == 0:
            return 0.0
        tri = self.vertices[self.triangles]
        d = np.concatenate(
            [
                np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ]
        )
        return float(d.max())

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("#vertices x,y\n")
        for x, y in self.vertices:
            out.write(f"{x:.17g},{y:.17g}\n")
        out.write("#triangles i,j,k\n")
        for i, j, k in self.triangles:
            out.write(f"{i},{j},{k}\n")
        out.write("#boundary i,j,nx,ny,kind\n")
        for (i, j), (nx, ny), kind in zip(self.edges, self.normals, self.kinds):
            out.write(f"{i},{j},{nx:.17g},{ny:.17g},{kind}\n")
        return out.getvalue()


def polar_coords(point) -> tuple[float, float]:
    x, y = float(point[0]), float(point[1])
    if x == 0.0 and y == 0.0:
        raise UndefinedAngleError("polar angle is undefined at the origin")
    return math.hypot(x, y), math.atan2(y, x)


def contains(domain: DomainSpec, point) -> bool:
    x, y = float(point[0]), float(point[1])
    rho = math.hypot(x, y)
    if isinstance(domain, Disk):
        return rho < domain.radius
    if isinstance(domain, Annulus):
        return domain.r_inner < rho < domain.r_outer
    if isinstance(domain, AnnularSector):
        if abs(rho - 1.0) >= domain.s:
            return False
        return abs(math.atan2(y, x)) < domain.alpha
    raise TypeError(f"unknown domain {domain!r}")


def _check_resolution(n_radial, n_angular, min_angular=1):
    for name, n, lo in (("n_radial", n_radial, 1), ("n_angular", n_angular, min_angular)):
        if int(n) != n or n < lo:
            raise ValueError(f"{name} must be an integer >= {lo}, got {n}")


def _grid_triangles(ring_index, n_radial, n_angular, periodic):
    """Two triangles per polar cell, always split along the same diagonal."""
    tris = []
    for i in range(n_radial):
        for j in range(n_angular):
            jn = (j + 1) % n_angular if periodic else j + 1
            a = ring_index(i, j)
            b = ring_index(i + 1, j)
            c = ring_index(i + 1, jn)
            d = ring_index(i, jn)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return tris


def _classify(domain, p0, p1):
    """Tag boundary edges from their endpoints, which lie exactly on the curves."""
    tol = 1e-10
    r0, r1 = np.hypot(p0[:, 0], p0[:, 1]), np.hypot(p1[:, 0], p1[:, 1])
    kinds = np.full(len(p0), OTHER, dtype=object)
    if isinstance(domain, Disk):
        kinds[:] = OUTER_ARC
        return kinds
    on_out = (np.abs(r0 - domain.r_outer) < tol) & (np.abs(r1 - domain.r_outer) < tol)
    on_in = (np.abs(r0 - domain.r_inner) < tol) & (np.abs(r1 - domain.r_inner) < tol)
    kinds[on_out] = OUTER_ARC
    kinds[on_in] = INNER_ARC
    if isinstance(domain, AnnularSector):
        t0 = np.arctan2(p0[:, 1], p0[:, 0])
        t1 = np.arctan2(p1[:, 1], p1[:, 0])
        side = (np.abs(np.abs(t0) - domain.alpha) < tol) & (np.abs(t0 - t1) < tol)
        kinds[side] = STRAIGHT_SIDE
    return kinds


def _boundary_from_triangles(vertices, triangles):
    """Edges used by exactly one triangle, with outward unit normals."""
    loc = np.array([[0, 1], [1, 2], [2, 0]])
    all_edges = triangles[:, loc].reshape(-1, 2)
    owner = np.repeat(np.arange(len(triangles)), 3)
    key = np.sort(all_edges, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts > 2):
        raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
    once = counts[inverse] == 1
    edges = all_edges[once]
    parents = owner[once]
    p0, p1 = vertices[edges[:, 0]], vertices[edges[:, 1]]
    t = p1 - p0
    lengths = np.hypot(t[:, 0], t[:, 1])
    # counter-clockwise triangles: the outward normal of edge (i -> j) is (ty, -tx)
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
    return edges, normals, parents, lengths


def build_mesh(domain: DomainSpec, n_radial: int, n_angular: int) -> Mesh:
    """Structured polar mesh of ``domain``.

    Sector: ``(n_radial+1)*(n_angular+1)`` vertices over ``rho in [1-s, 1+s]``,
    ``theta in [-alpha, alpha]``. Annulus: periodic grid with ``n_angular``
    spokes. Disk: a centre vertex joined to the first ring by a fan.
    """
    if isinstance(domain, Annulus) or isinstance(domain, Disk):
        _check_resolution(n_radial, n_angular, min_angular=3)
    elif isinstance(domain, AnnularSector):
        _check_resolution(n_radial, n_angular)
    else:
        raise DomainError(f"unsupported domain {domain!r}")
    n_radial, n_angular = int(n_radial), int(n_angular)
    center = None

    if isinstance(domain, AnnularSector):
        rho = np.linspace(domain.r_inner, domain.r_outer, n_radial + 1)
        theta = np.linspace(-domain.alpha, domain.alpha, n_angular + 1)
        R, T = np.meshgrid(rho, theta, indexing="ij")
        vertices = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        tris = _grid_triangles(
            lambda i, j: i * (n_angular + 1) + j, n_radial, n_angular, periodic=False
        )
    elif isinstance(domain, Annulus):
        rho = np.linspace(domain.r_inner, domain.r_outer, n_radial + 1)
        theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
        R, T = np.meshgrid(rho, theta, indexing="ij")
        vertices = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        tris = _grid_triangles(lambda i, j: i * n_angular + j, n_radial, n_angular, periodic=True)
    else:
        rho = np.linspace(0.0, domain.radius, n_radial + 1)[1:]
        theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
        R, T = np.meshgrid(rho, theta, indexing="ij")
        ring = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        vertices = np.vstack([[0.0, 0.0], ring])
        center = 0
        tris = [(0, 1 + j, 1 + (j + 1) % n_angular) for j in range(n_angular)]
        tris += _grid_triangles(
            lambda i, j: 1 + i * n_angular + j, n_radial - 1, n_angular, periodic=True
        )

    triangles = np.asarray(tris, dtype=np.int64)
    edges, normals, parents, lengths = _boundary_from_triangles(vertices, triangles)
    kinds = _classify(domain, vertices[edges[:, 0]], vertices[edges[:, 1]])
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        normals=normals,
        parents=parents,
        lengths=lengths,
        kinds=kinds,
        domain=domain,
        n_radial=n_radial,
        n_angular=n_angular,
        center_vertex=center,
    )


def empty_mesh() -> Mesh:
    return Mesh(
        vertices=np.zeros((0, 2)),
        triangles=np.zeros((0, 3), dtype=np.int64),
        edges=np.zeros((0, 2), dtype=np.int64),
        normals=np.zeros((0, 2)),
        parents=np.zeros(0, dtype=np.int64),
        lengths=np.zeros(0),
        kinds=np.zeros(0, dtype=object),
    )


def isotropic_angular(domain: DomainSpec, n_radial: int) -> int:
    """Angular resolution giving square cells at the domain's mean radius."""
    if isinstance(domain, AnnularSector):
        ratio = (2.0 * domain.alpha) / (2.0 * domain.s)
    elif isinstance(domain, Annulus):
        mean = 0.5 * (domain.r_inner + domain.r_outer)
        ratio = 2.0 * math.pi * mean / (domain.r_outer - domain.r_inner)
    elif isinstance(domain, Disk):
        ratio = math.pi
    else:
        raise DomainError(f"unsupported domain {domain!r}")
    return max(3, math.ceil(n_radial * ratio - 1e-9))
