"""Supercriticality thresholds and nonexistence certificates on annular sectors.

For ``1 < p < 2`` and ``q > 2p/(2-p)`` every solution on the sector of
half-width ``s`` satisfies ``0 <= c(p, q, s) * int |Du|^p`` with

    c(p, q, s) = 1 - 2/p + 2/q + (1 + 1/p + 1/q) * s / (1 - s),

so the problem has only the trivial solution whenever ``c < 0``, i.e. for
``s < s_bar(p, q)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import bisect

from .nonlinearity import NonlinearitySpec, Power

NO_NONTRIVIAL = "NoNontrivialSolution"
INCONCLUSIVE = "Inconclusive"

GROWTH_SLACK = 1e-12
DEFAULT_GROWTH_SAMPLES = tuple(np.linspace(-4.0, 4.0, 81))


class NotDefinedError(ValueError):
    """No finite critical exponent exists for the requested (p, n)."""


class NoWindowError(ValueError):
    """The exponent q is not supercritical, so no nonexistence window exists."""


@dataclass
class CertificateVerdict:
    verdict: str
    reasons: list[str] = field(default_factory=list)
    s_bar: Optional[float] = None
    coefficient: Optional[float] = None


def critical_exponent(p: float, n: int = 2) -> float:
    """Critical Sobolev exponent ``np/(n-p)`` for ``1 < p < n``."""
    if not p > 1.0:
        raise ValueError(f"p={p} must exceed 1")
    if p >= n:
        raise NotDefinedError(f"no finite critical exponent for p={p} >= n={n}")
    return n * p / (n - p)


def coefficient(p: float, q: float, s: float) -> float:
    if not p > 1.0:
        raise ValueError(f"p={p} must exceed 1")
    if not q > 0.0:
        raise ValueError(f"q={q} must be positive")
    if not (0.0 <= s < 1.0):
        raise ValueError(f"s={s} outside [0, 1)")
    return 1.0 - 2.0 / p + 2.0 / q + (1.0 + 1.0 / p + 1.0 / q) * s / (1.0 - s)


def _check_window(p, q):
    if not (1.0 < p < 2.0):
        raise ValueError(f"p outside (1,2): p={p}")
    if not q > 2.0 * p / (2.0 - p):
        raise NoWindowError(
            f"q={q} <= 2p/(2-p)={2.0 * p / (2.0 - p):.17g}: no nonexistence window"
        )


def s_bar(p: float, q: float) -> float:
    """Root in (0, 1) of ``coefficient(p, q, .)``, in closed form."""
    _check_window(p, q)
    t = (2.0 / p - 1.0 - 2.0 / q) / (1.0 + 1.0 / p + 1.0 / q)
    return t / (1.0 + t)


def s_bar_bisection(p: float, q: float, xtol: float = 1e-14) -> float:
    _check_window(p, q)
    return bisect(lambda s: coefficient(p, q, s), 0.0, 1.0 - 1e-15, xtol=xtol, maxiter=500)


def check_growth_condition(
    nonlinearity: NonlinearitySpec, q: float, sample_points: Iterable[float]
) -> tuple[bool, Optional[float]]:
    """Check ``t f(t) >= q F(t) >= 0`` on the samples.

    The slack is ``GROWTH_SLACK`` relative to ``max(1, |t f(t)|, |q F(t)|)``.
    Returns ``(ok, first_violating_t)``.
    """
    for t in sample_points:
        tf = float(t * nonlinearity.f(t))
        qF = float(q * nonlinearity.F(t))
        slack = GROWTH_SLACK * max(1.0, abs(tf), abs(qF))
        if tf < qF - slack or qF < -slack:
            return False, float(t)
    return True, None


def certificate(
    p: float,
    q: float,
    s: float,
    alpha: float,
    nonlinearity: NonlinearitySpec,
    samples: Iterable[float] = DEFAULT_GROWTH_SAMPLES,
) -> CertificateVerdict:
    """Nonexistence verdict for the sector problem; never asserts existence."""
    reasons = []
    sb = None
    coef = None
    if not (1.0 < p < 2.0):
        reasons.append(f"p={p:g} outside (1,2)")
    else:
        q_star = critical_exponent(p, 2)
        if q > q_star:
            sb = s_bar(p, q)
        else:
            reasons.append(f"q={q:g} not above 2p/(2-p)={q_star:.17g}")
    if p > 1.0 and q > 0.0 and 0.0 <= s < 1.0:
        coef = coefficient(p, q, s)
    ok, bad_t = check_growth_condition(nonlinearity, q, samples)
    if not ok:
        reasons.append(f"growth condition t f(t) >= q F(t) >= 0 fails at t={bad_t:g}")
    if not (0.0 < alpha < math.pi):
        reasons.append(f"alpha={alpha:g} outside (0,pi)")
    if not (0.0 < s < 1.0):
        reasons.append(f"s={s:g} outside (0,1)")
    elif sb is not None and not s < sb:
        reasons.append(f"s={s:g} not below s_bar={sb:.17g}")
    if not reasons and coef is not None and coef < 0.0:
        return CertificateVerdict(NO_NONTRIVIAL, [], sb, coef)
    if not reasons:
        reasons.append("coefficient is not negative")
    return CertificateVerdict(INCONCLUSIVE, reasons, sb, coef)


@dataclass(frozen=True)
class SweepRow:
    p: float
    q: float
    s: float
    q_critical: Optional[float]
    coefficient: Optional[float]
    s_bar: Optional[float]
    verdict: str


def sweep(p_grid, q_grid, s_grid, alpha: float = math.pi / 2) -> list[SweepRow]:
    """Certificate table over a grid, rows ordered p-major, then q, then s.

    Each row uses ``f(t) = |t|^(q-2) t`` with the row's own ``q``.
    """
    rows = []
    for p in p_grid:
        try:
            q_crit = critical_exponent(p, 2)
        except (NotDefinedError, ValueError):
            q_crit = None
        for q in q_grid:
            f = Power(q)
            for s in s_grid:
                v = certificate(p, q, s, alpha, f)
                rows.append(SweepRow(p, q, s, q_crit, v.coefficient, v.s_bar, v.verdict))
    return rows
