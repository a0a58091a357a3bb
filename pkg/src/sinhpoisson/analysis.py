"""Concentration diagnostics: vortex densities, candidate blow-up points,
local masses, and the quadratic mass-identity residuals.

For a field v the two vortex densities are

    rho1 = lambda1 e^{v} / int e^{v},     rho2 = lambda2 e^{-gamma v} / int e^{-gamma v};

each integrates to its lambda.  Concentration candidates are strict
local maxima of either density well above its mean; the local masses
m1, m2 are ball integrals of the densities around a candidate.  For
exact blow-up limits the pair (m1, m2) of a two-sided point satisfies

    8*pi*(m1 + m2/gamma) = (m1 - m2)^2

together with the bounds m1 >= 8*pi, m2 >= 8*pi/gamma and
m1 + gamma*m2 >= 16*pi*(1+gamma); identity_check reports the residual
and bound flags so computed fields can be scored against the exact
quantization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .torus import Field, TorusGrid, distance_to_point
from .model import Parameters, normalized_density

__all__ = [
    "densities",
    "detect_candidates",
    "local_masses",
    "identity_check",
    "IdentityCheck",
    "CandidateMass",
    "MassReport",
    "analyze_field",
]

_8PI = 8.0 * math.pi


def densities(v: Field, p: Parameters) -> tuple[np.ndarray, np.ndarray]:
    """The two vortex densities on the grid (max-shifted, never overflow)."""
    rho1 = p.lambda1 * normalized_density(v.grid, v.values, 1.0)
    rho2 = p.lambda2 * normalized_density(v.grid, v.values, -p.gamma)
    return rho1, rho2


def _strict_local_maxima(values: np.ndarray) -> np.ndarray:
    """Boolean mask of nodes strictly above all 8 periodic neighbours."""
    mask = np.ones_like(values, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            mask &= values > np.roll(np.roll(values, dy, axis=0), dx, axis=1)
    return mask


def detect_candidates(
    density1: np.ndarray,
    density2: np.ndarray,
    grid: TorusGrid,
    *,
    threshold_factor: float = 10.0,
    radius: float = 0.2,
) -> list[tuple[float, float]]:
    """Concentration candidates from either density.

    A node qualifies when it is a strict local maximum of one density
    and exceeds threshold_factor times that density's mean.  Peaks
    closer than the analysis radius merge, keeping the higher one
    (height measured relative to its own density mean).
    """
    peaks = []  # (relative height, x, y)
    for dens in (density1, density2):
        mean = grid.integrate(dens) / grid.volume
        if mean <= 0.0:
            continue
        mask = _strict_local_maxima(dens) & (dens > threshold_factor * mean)
        for iy, ix in zip(*np.nonzero(mask)):
            peaks.append((dens[iy, ix] / mean, float(grid.x[ix]), float(grid.y[iy])))
    peaks.sort(key=lambda t: (-t[0], t[1], t[2]))
    kept: list[tuple[float, float]] = []
    for _, px, py in peaks:
        close = False
        for qx, qy in kept:
            ax = abs(px - qx)
            ax = min(ax, grid.Lx - ax)
            ay = abs(py - qy)
            ay = min(ay, grid.Ly - ay)
            if math.hypot(ax, ay) < radius:
                close = True
                break
        if not close:
            kept.append((px, py))
    return kept


def local_masses(
    v: Field, p: Parameters, point: tuple[float, float], radius: float
) -> tuple[float, float]:
    """Ball integrals of the two densities about a point."""
    grid = v.grid
    if not (0.0 < radius < 0.5 * min(grid.Lx, grid.Ly)):
        raise ValueError("radius must be positive and below the injectivity radius")
    d1, d2 = densities(v, p)
    mask = distance_to_point(grid, point) < radius
    w = grid.volume / grid.size
    return float(d1[mask].sum() * w), float(d2[mask].sum() * w)


@dataclass(frozen=True)
class IdentityCheck:
    residual: float
    m1_at_least_8pi: bool
    m2_at_least_8pi_over_gamma: bool
    sum_at_least_16pi: bool


def identity_check(m1: float, m2: float, gamma: float, *, tol: float = 1e-9) -> IdentityCheck:
    """Residual of 8*pi*(m1 + m2/gamma) = (m1 - m2)^2 plus bound flags."""
    if m1 < 0 or m2 < 0:
        raise ValueError("masses must be nonnegative")
    residual = _8PI * (m1 + m2 / gamma) - (m1 - m2) ** 2
    return IdentityCheck(
        residual=residual,
        m1_at_least_8pi=m1 >= _8PI - tol,
        m2_at_least_8pi_over_gamma=m2 >= _8PI / gamma - tol,
        sum_at_least_16pi=m1 + gamma * m2 >= 16.0 * math.pi * (1.0 + gamma) - tol,
    )


@dataclass(frozen=True)
class CandidateMass:
    point: tuple[float, float]
    m1: float
    m2: float
    radius: float
    check: IdentityCheck


@dataclass(frozen=True)
class MassReport:
    parameters: Parameters
    candidates: tuple[CandidateMass, ...]
    density1: np.ndarray
    density2: np.ndarray
    total_m1: float
    total_m2: float
    radius: float
    threshold_factor: float


def analyze_field(
    v: Field,
    p: Parameters,
    *,
    radius: float = 0.2,
    threshold_factor: float = 10.0,
    identity_tol: float = 1e-9,
) -> MassReport:
    """Full concentration report for one field."""
    d1, d2 = densities(v, p)
    points = detect_candidates(
        d1, d2, v.grid, threshold_factor=threshold_factor, radius=radius
    )
    cands = []
    for pt in points:
        m1, m2 = local_masses(v, p, pt, radius)
        cands.append(
            CandidateMass(
                point=pt,
                m1=m1,
                m2=m2,
                radius=radius,
                check=identity_check(m1, m2, p.gamma, tol=identity_tol),
            )
        )
    return MassReport(
        parameters=p,
        candidates=tuple(cands),
        density1=d1,
        density2=d2,
        total_m1=v.grid.integrate(d1),
        total_m2=v.grid.integrate(d2),
        radius=radius,
        threshold_factor=threshold_factor,
    )
