import math

import numpy as np
import pytest

from pohozaev.geometry import (
    INNER_ARC,
    OUTER_ARC,
    STRAIGHT_SIDE,
    AnnularSector,
    Annulus,
    Disk,
    DomainError,
    UndefinedAngleError,
    build_mesh,
    contains,
    isotropic_angular,
    polar_coords,
)

SECTOR = AnnularSector(2.0, 0.3)
DOMAINS = [SECTOR, AnnularSector(0.4, 0.8), Annulus(0.5, 1.5), Disk(1.0)]


def test_sector_counts():
    m = build_mesh(SECTOR, 2, 4)
    assert (m.n_vertices, m.n_triangles, len(m.edges)) == (15, 16, 12)


@pytest.mark.parametrize("nr,nt", [(1, 1), (3, 7), (5, 2)])
def test_sector_count_formulas(nr, nt):
    m = build_mesh(SECTOR, nr, nt)
    assert m.n_vertices == (nr + 1) * (nt + 1)
    assert m.n_triangles == 2 * nr * nt
    assert len(m.edges) == 2 * nr + 2 * nt


def test_annulus_and_disk_counts():
    m = build_mesh(Annulus(0.5, 1.5), 4, 10)
    assert (m.n_vertices, m.n_triangles, len(m.edges)) == (50, 80, 20)
    m = build_mesh(Disk(2.0), 4, 10)
    assert (m.n_vertices, m.n_triangles, len(m.edges)) == (41, 70, 10)
    assert m.center_vertex == 0


def test_sector_area_fine_mesh():
    m = build_mesh(SECTOR, 64, 128)
    assert abs(m.signed_areas.sum() - 2.4) / 2.4 < 1e-2


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_bad_resolution(bad):
    with pytest.raises(ValueError):
        build_mesh(SECTOR, bad, 4)


@pytest.mark.parametrize(
    "make", [lambda: AnnularSector(0.0, 0.3), lambda: AnnularSector(math.pi, 0.3),
             lambda: AnnularSector(1.0, 1.0), lambda: Annulus(1.0, 0.5), lambda: Disk(0.0)]
)
def test_domain_invariants(make):
    with pytest.raises(DomainError):
        make()


@pytest.mark.parametrize("domain", DOMAINS)
def test_mesh_invariants(domain):
    m = build_mesh(domain, 6, 17)
    assert np.all(m.signed_areas > 0)
    # edge multiplicities: boundary once, interior twice
    loc = np.array([[0, 1], [1, 2], [2, 0]])
    e = np.sort(m.triangles[:, loc].reshape(-1, 2), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert set(counts) <= {1, 2}
    assert (counts == 1).sum() == len(m.edges)
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0, atol=1e-12)
    inward = m.centroids[m.parents] - m.edge_midpoints
    assert np.all(np.sum(m.normals * inward, axis=1) < 0)


@pytest.mark.parametrize("domain", DOMAINS)
def test_boundary_forms_closed_loops(domain):
    m = build_mesh(domain, 5, 12)
    deg = np.bincount(m.edges.ravel(), minlength=m.n_vertices)
    assert set(deg[deg > 0]) == {2}
    # each boundary vertex starts exactly one edge and ends exactly one
    assert np.array_equal(np.sort(m.edges[:, 0]), np.sort(m.edges[:, 1]))


def test_sector_boundary_kinds():
    m = build_mesh(SECTOR, 8, 20)
    h = m.h
    mid = m.edge_midpoints
    rho = np.hypot(mid[:, 0], mid[:, 1])
    theta = np.arctan2(mid[:, 1], mid[:, 0])
    k = m.kinds
    assert np.all(np.abs(rho[k == OUTER_ARC] - 1.3) < h**2)
    assert np.all(np.abs(rho[k == INNER_ARC] - 0.7) < h**2)
    assert np.all(np.abs(np.abs(theta[k == STRAIGHT_SIDE]) - 2.0) < h**2)
    assert (k == OUTER_ARC).sum() == 20 and (k == INNER_ARC).sum() == 20
    assert (k == STRAIGHT_SIDE).sum() == 16


def test_area_error_second_order():
    errs = []
    for nr in (8, 16, 32, 64):
        m = build_mesh(SECTOR, nr, isotropic_angular(SECTOR, nr))
        errs.append(abs(m.signed_areas.sum() - SECTOR.area))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(r >= 3.0 for r in ratios), ratios


def test_polar_coords():
    assert polar_coords((1.0, 0.0)) == (1.0, 0.0)
    r, t = polar_coords((0.0, 2.0))
    assert r == 2.0 and t == pytest.approx(math.pi / 2, abs=1e-15)
    with pytest.raises(UndefinedAngleError):
        polar_coords((0.0, 0.0))


def test_polar_roundtrip():
    rng = np.random.default_rng(3)
    for x, y in rng.normal(size=(50, 2)) * 10:
        r, t = polar_coords((x, y))
        assert r > 0 and -math.pi < t <= math.pi
        assert math.isclose(r * math.cos(t), x, rel_tol=1e-12, abs_tol=1e-12 * r)
        assert math.isclose(r * math.sin(t), y, rel_tol=1e-12, abs_tol=1e-12 * r)


def test_contains():
    assert contains(SECTOR, (1.0, 0.0))
    assert not contains(SECTOR, (0.0, 0.0))
    assert not contains(SECTOR, (-1.0, 0.0))
    assert contains(Annulus(0.5, 1.5), (0.0, -1.0))
    assert not contains(Disk(1.0), (1.0, 0.0))


def test_mesh_csv_sections():
    text = build_mesh(SECTOR, 1, 2).to_csv()
    lines = text.splitlines()
    assert lines[0] == "#vertices x,y"
    assert "#triangles i,j,k" in lines and "#boundary i,j,nx,ny,kind" in lines
    assert len(lines) == 3 + 6 + 4 + 6
