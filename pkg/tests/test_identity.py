import math

import numpy as np
import pytest

from pohozaev.fields import PaperField, RadialField
from pohozaev.geometry import AnnularSector, Annulus, Disk, build_mesh, empty_mesh, isotropic_angular
from pohozaev.identity import (
    PairingError,
    classical_pohozaev,
    convergence_study,
    corollary_bound,
    identity_sides,
    integrate_boundary,
    integrate_domain,
)
from pohozaev.nonlinearity import Constant, Power
from pohozaev.solver import solve, zero_solution

SECTOR = AnnularSector(2.0, 0.3)


def mesh_for(domain, nr):
    return build_mesh(domain, nr, isotropic_angular(domain, nr))


@pytest.fixture(scope="module")
def disk_torsion():
    return solve(build_mesh(Disk(1.0), 64, 128), 2.0, Constant(1.0))


@pytest.fixture(scope="module")
def sector_p15():
    return solve(mesh_for(SECTOR, 16), 1.5, Constant(1.0))


def test_integrate_domain():
    assert integrate_domain(build_mesh(Disk(1.0), 64, 128), 1.0) == pytest.approx(math.pi, abs=1e-2)
    assert integrate_domain(build_mesh(SECTOR, 64, 128), 1.0) == pytest.approx(2.4, abs=1e-2)
    assert integrate_domain(empty_mesh(), 1.0) == 0.0


def test_integrate_domain_rules_agree_on_linear():
    m = build_mesh(SECTOR, 4, 9)
    f = lambda x: 3.0 * x[..., 0] - x[..., 1] + 0.5
    assert integrate_domain(m, f, "centroid") == pytest.approx(integrate_domain(m, f, "midpoint"), rel=1e-13)


def test_integrate_boundary():
    assert integrate_boundary(build_mesh(Disk(1.0), 64, 128), 1.0) == pytest.approx(2 * math.pi, abs=2e-2)
    assert integrate_boundary(build_mesh(SECTOR, 64, 128), 1.0) == pytest.approx(9.2, abs=2e-2)
    with pytest.raises(ValueError):
        integrate_boundary(empty_mesh(), 1.0)


def test_disk_identity_exact_value(disk_torsion):
    rep = identity_sides(disk_torsion, RadialField(), Constant(1.0))
    assert rep.lhs == pytest.approx(math.pi / 4, rel=2e-2)
    assert rep.rhs_total == pytest.approx(math.pi / 4, rel=2e-2)
    assert rep.residual_rel <= 2e-2
    assert rep.rhs_total == rep.rhs_jacobian + rep.rhs_divergence
    assert rep.residual_abs == abs(rep.lhs - rep.rhs_total)


def test_zero_solution_identity():
    m = build_mesh(SECTOR, 4, 8)
    for fld in (PaperField(), RadialField()):
        rep = identity_sides(zero_solution(m, 1.5), fld, Constant(1.0))
        assert rep.lhs == rep.rhs_total == 0.0 and rep.residual_rel == 0.0


def test_paper_field_needs_sector(disk_torsion):
    with pytest.raises(PairingError):
        identity_sides(disk_torsion, PaperField(), Constant(1.0))


def test_classical_reduction(disk_torsion):
    rep = identity_sides(disk_torsion, RadialField(), Constant(1.0))
    lhs, rhs = classical_pohozaev(disk_torsion, Constant(1.0))
    assert abs(lhs - rep.lhs) <= 1e-12
    assert abs(rhs - rep.rhs_total) <= 1e-12


@pytest.mark.parametrize("fld", [PaperField(), RadialField()])
def test_linear_in_field(sector_p15, fld):
    a = identity_sides(sector_p15, fld, Constant(1.0))
    b = identity_sides(sector_p15, type(fld)(scale=2.0), Constant(1.0))
    assert abs(b.lhs - 2 * a.lhs) <= 1e-12
    assert abs(b.rhs_total - 2 * a.rhs_total) <= 1e-12


def test_jacobian_term_finite_on_flat_patch():
    m = build_mesh(SECTOR, 6, 12)
    u = np.zeros(m.n_vertices)
    # nonzero only near one interior vertex; most triangles have Du = 0
    interior = np.flatnonzero(~m.boundary_vertices)
    u[interior[len(interior) // 2]] = 0.1
    from pohozaev.solver import Solution

    for p in (1.1, 1.5, 2.0):
        rep = identity_sides(Solution(m, u, p, 1e-6), PaperField(), Constant(1.0))
        assert np.isfinite([rep.lhs, rep.rhs_jacobian, rep.rhs_divergence]).all()


def test_corollary_bound(sector_p15):
    rep = corollary_bound(sector_p15, Constant(1.0))
    assert rep.gradient_coefficient == pytest.approx(1 - 2 / 1.5 + (1 + 1 / 1.5) * 0.3 / 0.7)
    assert rep.bound_value == rep.gradient_term + rep.divF_term
    assert rep.holds
    zero = corollary_bound(zero_solution(sector_p15.mesh, 1.5), Constant(1.0))
    assert zero.gradient_term == 0.0 and zero.divF_term == 0.0 and zero.bound_value == 0.0
    with pytest.raises(ValueError):
        corollary_bound(sector_p15, Constant(1.0), s=0.25)


def test_corollary_needs_sector(disk_torsion):
    with pytest.raises(ValueError):
        corollary_bound(disk_torsion, Constant(1.0))


def test_corollary_power_solution():
    sol = solve(mesh_for(SECTOR, 12), 1.5, Power(4))
    assert corollary_bound(sol, Power(4)).holds


def test_convergence_study_levels():
    with pytest.raises(ValueError):
        convergence_study(Disk(1.0), 2.0, Constant(1.0), RadialField(), [16])
    with pytest.raises(ValueError):
        convergence_study(Disk(1.0), 2.0, Constant(1.0), RadialField(), [16, 8, 32])


def test_convergence_disk():
    rows = convergence_study(Disk(1.0), 2.0, Constant(1.0), RadialField(), [16, 32, 64])
    assert [r.level for r in rows] == [16, 32, 64]
    assert rows[0].observed_order is None
    assert all(r.observed_order >= 0.9 for r in rows[1:])


def test_convergence_annulus():
    rows = convergence_study(Annulus(0.5, 1.5), 2.0, Constant(1.0), RadialField(), [16, 32, 64])
    assert rows[-1].residual_rel <= 2e-2
    assert all(a.residual_rel > b.residual_rel for a, b in zip(rows, rows[1:]))


@pytest.mark.parametrize(
    "domain,p,nl,fld",
    [
        (SECTOR, 2.0, Constant(1.0), PaperField()),
        (AnnularSector(1.0, 0.5), 1.5, Constant(1.0), RadialField()),
        (Disk(1.0), 1.5, Constant(1.0), RadialField()),
        (SECTOR, 1.5, Power(4), PaperField()),
    ],
)
def test_residual_decreases(domain, p, nl, fld):
    rows = convergence_study(domain, p, nl, fld, [8, 16, 32])
    assert all(a.residual_rel > b.residual_rel for a, b in zip(rows, rows[1:])), rows
