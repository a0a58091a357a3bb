"""Liouville-bubble test functions and their asymptotic expansions.

The profile

    u_eps(p) = log eps^2/(eps^2 + d(p,p0)^2)^2    inside the cap B_r0,
               log eps^2/(eps^2 + r0^2)^2         outside,

concentrates a unit of vortex mass at p0 as eps -> 0.  Its mean-zero
projection v_eps drives the functional to -infinity along one of two
branches (v_eps when lambda1 > 8*pi, -v_eps/gamma when lambda2 >
8*pi/gamma), which supplies the downhill endpoint of the mountain-pass
geometry.  verify_expansions fits the growth rates of the associated
integrals against log(1/eps^2) and compares them with the expected
asymptotic slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .torus import Field, TorusGrid, dirichlet_energy, distance_to_point
from .model import Parameters, functional_J, log_int_exp

__all__ = [
    "BubbleSpec",
    "bubble_u",
    "bubble_v",
    "ExpansionFit",
    "ExpansionReport",
    "verify_expansions",
    "downhill_endpoint",
]

# default cap radius for expansion scans, as a fraction of min(Lx, Ly)
SCAN_R0_FRACTION = 0.25
# downhill cap radius: most of the injectivity radius, so the functional
# turns negative at grid-resolvable eps
DOWNHILL_R0_FRACTION = 0.45


@dataclass(frozen=True)
class BubbleSpec:
    """Concentration scale eps, center p0, and cap radius r0."""

    eps: float
    p0: tuple[float, float] = (0.5, 0.5)
    r0: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.eps < self.r0):
            raise ValueError("need 0 < eps < r0")

    def check_grid(self, grid: TorusGrid) -> None:
        if not (self.r0 < 0.5 * min(grid.Lx, grid.Ly)):
            raise ValueError("cap radius must stay below the injectivity radius min(Lx,Ly)/2")


def bubble_u(spec: BubbleSpec, grid: TorusGrid) -> np.ndarray:
    """Sample the capped bubble profile on the grid (not mean-zero)."""
    spec.check_grid(grid)
    d = distance_to_point(grid, spec.p0)
    dc = np.minimum(d, spec.r0)
    return math.log(spec.eps**2) - 2.0 * np.log(spec.eps**2 + dc**2)


def bubble_v(spec: BubbleSpec, grid: TorusGrid) -> Field:
    """Mean-zero projection of the bubble profile."""
    return Field(grid, bubble_u(spec, grid), project=True)


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares fit of one quantity against t = log(1/eps^2)."""

    name: str
    values: tuple[float, ...]
    slope: float
    intercept: float
    expected_slope: float
    resolution_warning: bool


@dataclass(frozen=True)
class ExpansionReport:
    eps: tuple[float, ...]
    fits: tuple[ExpansionFit, ...]

    def fit(self, name: str) -> ExpansionFit:
        for f in self.fits:
            if f.name == name:
                return f
        raise KeyError(name)


_QUANTITY_NAMES = (
    "dirichlet",
    "log_int_exp",
    "log_int_exp_neg_gamma",
    "log_int_exp_neg_one",
    "J_v",
    "J_negv_over_gamma",
)


def verify_expansions(
    specs: list[BubbleSpec], grid: TorusGrid, p: Parameters
) -> ExpansionReport:
    """Fit the bubble-family growth rates against log(1/eps^2).

    Expected slopes: Dirichlet energy 16*pi, log int e^{v} equal to 1,
    log int e^{-a v} equal to 0 for a in {gamma, 1}, J(v_eps) equal to
    8*pi - lambda1, and J(-v_eps/gamma) equal to
    (1/gamma)(8*pi/gamma - lambda2).  The O(1) terms of the expansions
    are absorbed in the intercepts.  A fit is flagged when dropping the
    smallest eps (the last halving) moves its slope by more than 5%.
    """
    if len(specs) < 5:
        raise ValueError("need at least 5 eps values for a slope fit")
    eps = np.array([s.eps for s in specs])
    if not np.all(np.diff(eps) < 0):
        raise ValueError("eps values must be strictly decreasing")
    ratios = eps[1:] / eps[:-1]
    if np.max(np.abs(ratios - ratios[0])) > 1e-9:
        raise ValueError("eps values must form a geometric sequence")
    if len({(s.p0, s.r0) for s in specs}) != 1:
        raise ValueError("all bubbles in a family must share p0 and r0")

    t = np.log(1.0 / eps**2)
    rows = {name: [] for name in _QUANTITY_NAMES}
    for spec in specs:
        v = bubble_v(spec, grid)
        w = (-1.0 / p.gamma) * v
        rows["dirichlet"].append(dirichlet_energy(v))
        rows["log_int_exp"].append(log_int_exp(grid, v.values, 1.0))
        rows["log_int_exp_neg_gamma"].append(log_int_exp(grid, v.values, -p.gamma))
        rows["log_int_exp_neg_one"].append(log_int_exp(grid, v.values, -1.0))
        rows["J_v"].append(functional_J(v, p))
        rows["J_negv_over_gamma"].append(functional_J(w, p))

    expected = {
        "dirichlet": 16.0 * math.pi,
        "log_int_exp": 1.0,
        "log_int_exp_neg_gamma": 0.0,
        "log_int_exp_neg_one": 0.0,
        "J_v": 8.0 * math.pi - p.lambda1,
        "J_negv_over_gamma": (1.0 / p.gamma) * (8.0 * math.pi / p.gamma - p.lambda2),
    }
    fits = []
    for name in _QUANTITY_NAMES:
        vals = np.asarray(rows[name])
        slope, intercept = np.polyfit(t, vals, 1)
        slope_wo_last, _ = np.polyfit(t[:-1], vals[:-1], 1)
        drift = abs(slope - slope_wo_last) / max(abs(slope), 1.0)
        fits.append(
            ExpansionFit(
                name=name,
                values=tuple(float(x) for x in vals),
                slope=float(slope),
                intercept=float(intercept),
                expected_slope=expected[name],
                resolution_warning=bool(drift > 0.05),
            )
        )
    return ExpansionReport(eps=tuple(float(e) for e in eps), fits=tuple(fits))


def downhill_endpoint(
    p: Parameters,
    grid: TorusGrid,
    *,
    p0: tuple[float, float] | None = None,
    r0: float | None = None,
    eps_start: float | None = None,
    shrink: float = 0.5,
) -> Field:
    """Field v1 with J(v1) < 0 and Dirichlet norm >= 1.

    Shrinks eps geometrically through the bubble family: along v_eps when
    lambda1 > 8*pi, along -v_eps/gamma when lambda2 > 8*pi/gamma.
    Candidate eps values stop at two grid spacings (the value of the
    discrete functional, which is what the minimax solver descends, is
    trustworthy down to that scale; its quadrature bias at marginal
    resolution only pushes J further negative).
    """
    branch1 = p.lambda1 > 8.0 * math.pi
    branch2 = p.lambda2 > 8.0 * math.pi / p.gamma
    if not (branch1 or branch2):
        raise ValueError(
            "no downhill direction: need max(lambda1, gamma*lambda2) > 8*pi"
        )
    if p0 is None:
        p0 = (0.5 * grid.Lx, 0.5 * grid.Ly)
    if r0 is None:
        r0 = DOWNHILL_R0_FRACTION * min(grid.Lx, grid.Ly)
    if not (0.0 < shrink < 1.0):
        raise ValueError("shrink factor must lie in (0, 1)")
    eps_min = 2.0 * max(grid.dx, grid.dy)
    if eps_min >= r0:
        raise ValueError("grid too coarse for the requested cap radius")
    eps = eps_start if eps_start is not None else 0.5 * r0
    eps_values = []
    while eps > eps_min:
        eps_values.append(eps)
        eps *= shrink
    eps_values.append(eps_min)

    for eps in eps_values:
        v = bubble_v(BubbleSpec(eps, p0, r0), grid)
        cand = v if branch1 else (-1.0 / p.gamma) * v
        if functional_J(cand, p) < 0.0 and math.sqrt(dirichlet_energy(cand)) >= 1.0:
            return cand
    raise RuntimeError(
        "functional stayed nonnegative down to the resolvable eps floor; "
        "refine the grid or enlarge the cap radius"
    )
