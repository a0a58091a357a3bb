"""The admissible parameter region and the blow-up mass parabola.

The region in the (lambda1, lambda2) plane where the minimax solve is
guaranteed a nontrivial target consists of the pairs with

    (i)   lambda1, lambda2 >= 0 and max(lambda1, gamma*lambda2) > 8*pi,
    (ii)  lambda1 not in 8*pi*N, lambda2 not in (8*pi/gamma)*N,
    (iii) lambda1 + gamma*lambda2 < mu1*|domain|,

equivalently the union of two open triangles minus the resonance lines.
The parabola (x - y)^2 = 8*pi*(x + y/gamma) constrains simultaneous
two-species blow-up masses; its axis intersections give the quantized
single-species masses and the minimum of x + gamma*y over the admissible
arc equals 16*pi*(1 + gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "RegionSpec",
    "Triangle",
    "contains",
    "clause_report",
    "triangles",
    "parabola_x",
    "parabola_y",
    "parabola_residual",
    "alpha_gamma",
    "RESONANCE_TOL",
]

# resonance lines are measure zero; exclusion uses this absolute tolerance
RESONANCE_TOL = 1e-9

_8PI = 8.0 * math.pi


@dataclass(frozen=True)
class RegionSpec:
    """gamma and the product mu1*|domain| defining the region."""

    gamma: float
    mu1_vol: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if not (_8PI < self.mu1_vol < 16.0 * math.pi * (1.0 + self.gamma)):
            raise ValueError(
                "need 8*pi < mu1*volume < 16*pi*(1+gamma) for the minimax geometry"
            )


@dataclass(frozen=True)
class Triangle:
    vertices: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        if abs(self.signed_area()) <= 0.0:
            raise ValueError("degenerate triangle")

    def signed_area(self) -> float:
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))

    def contains_point(self, x: float, y: float) -> bool:
        """Strict interior test via half-plane signs."""
        sign = 1.0 if self.signed_area() > 0 else -1.0
        pts = self.vertices
        for i in range(3):
            (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % 3]
            cross = (x2 - x1) * (y - y1) - (x - x1) * (y2 - y1)
            if sign * cross <= 0.0:
                return False
        return True


def _on_resonance(value: float, spacing: float, tol: float) -> bool:
    k = round(value / spacing)
    return k >= 1 and abs(value - k * spacing) <= tol


def contains(
    spec: RegionSpec, l1: float, l2: float, *, resonance_tol: float = RESONANCE_TOL
) -> bool:
    """Membership of (l1, l2) in the open admissible region."""
    if not (math.isfinite(l1) and math.isfinite(l2)):
        raise ValueError("parameters must be finite")
    return all(clause_report(spec, l1, l2, resonance_tol=resonance_tol).values())


def clause_report(
    spec: RegionSpec, l1: float, l2: float, *, resonance_tol: float = RESONANCE_TOL
) -> dict[str, bool]:
    """Each defining clause evaluated separately (CLI shows this verbatim)."""
    return {
        "nonnegative": l1 >= 0.0 and l2 >= 0.0,
        "above_8pi": max(l1, spec.gamma * l2) > _8PI,
        "lambda1_off_resonance": not _on_resonance(l1, _8PI, resonance_tol),
        "lambda2_off_resonance": not _on_resonance(l2, _8PI / spec.gamma, resonance_tol),
        "below_first_eigenvalue": l1 + spec.gamma * l2 < spec.mu1_vol,
    }


def triangles(spec: RegionSpec) -> tuple[Triangle, Triangle]:
    """The two triangles whose open union (minus resonance lines) is the region."""
    m, g = spec.mu1_vol, spec.gamma
    t1 = Triangle(((_8PI, 0.0), (m, 0.0), (_8PI, (m - _8PI) / g)))
    t2 = Triangle(((0.0, _8PI / g), (0.0, m / g), (m - _8PI, _8PI / g)))
    return t1, t2


def _branch_sign(branch) -> float:
    if branch in ("+", 1, +1.0):
        return 1.0
    if branch in ("-", -1, -1.0):
        return -1.0
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def parabola_x(y: float, gamma: float, branch="+") -> float:
    """Solve (x - y)^2 = 8*pi*(x + y/gamma) for x at given y >= 0."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    disc = _8PI * (1.0 + 1.0 / gamma) * y + 16.0 * math.pi**2
    if disc < 0.0:
        raise ValueError("negative discriminant")
    return y + 4.0 * math.pi + _branch_sign(branch) * math.sqrt(disc)


def parabola_y(x: float, gamma: float, branch="+") -> float:
    """Solve (x - y)^2 = 8*pi*(x + y/gamma) for y at given x >= 0."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    disc = _8PI * (1.0 + 1.0 / gamma) * x + 16.0 * math.pi**2 / gamma**2
    if disc < 0.0:
        raise ValueError("negative discriminant")
    return x + 4.0 * math.pi / gamma + _branch_sign(branch) * math.sqrt(disc)


def parabola_residual(x: float, y: float, gamma: float) -> float:
    """Defect of the quadratic mass relation at (x, y)."""
    return (x - y) ** 2 - _8PI * (x + y / gamma)


def alpha_gamma(gamma: float) -> float:
    """Minimum of x + gamma*y over the admissible arc of the parabola.

    Equals min(xbar + 8*pi, 8*pi + gamma*ybar) with xbar = 8*pi*(1+2/gamma)
    and ybar = 8*pi*(2+1/gamma), which collapses to 16*pi*(1+gamma) for
    gamma in (0, 1].
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    return 16.0 * math.pi * (1.0 + gamma)
