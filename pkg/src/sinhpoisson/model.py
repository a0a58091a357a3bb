"""Physical parameters and the variational structure of the mean-field
equation

    -Delta v = lambda1 e^v/int(e^v) - lambda2 e^{-gamma v}/int(e^{-gamma v}) - kappa,
    int v = 0,

with kappa = (lambda1 - lambda2)/|domain|.  The functional

    J(v) = 1/2 int |grad v|^2 - lambda1 log int e^v
           - (lambda2/gamma) log int e^{-gamma v}

has the equation as its Euler-Lagrange system on the mean-zero space;
this module evaluates J, its L2 gradient, and the Hessian action, all
with max-shifted exponentials so deep concentrations never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from .torus import Field, TorusGrid, dirichlet_energy, laplacian, _inv_laplacian_raw

__all__ = [
    "Parameters",
    "TwoAtomMeasure",
    "functional_J",
    "gradient_J",
    "hessian_apply",
    "hessian_rayleigh_min",
    "mt_threshold",
    "atoms_to_pair",
    "log_int_exp",
    "normalized_density",
]


@dataclass(frozen=True)
class Parameters:
    """Temperature parameters (lambda1, lambda2), vortex intensity gamma,
    and the derived neutrality constant kappa = (lambda1-lambda2)/volume.

    kappa is stored at construction, never recomputed, so the identity
    kappa*volume = lambda1 - lambda2 stays stable downstream.
    """

    lambda1: float
    lambda2: float
    gamma: float
    volume: float = 1.0
    kappa: float = field(init=False)

    def __post_init__(self):
        if not (self.lambda1 >= 0.0 and self.lambda2 >= 0.0):
            raise ValueError("lambda1, lambda2 must be nonnegative")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if not (self.volume > 0.0):
            raise ValueError("volume must be positive")
        object.__setattr__(self, "kappa", (self.lambda1 - self.lambda2) / self.volume)

    def swapped(self) -> "Parameters":
        """Parameters with the two species exchanged (gamma=1 duality)."""
        return Parameters(self.lambda2, self.lambda1, self.gamma, self.volume)


@dataclass(frozen=True)
class TwoAtomMeasure:
    """Two-atom intensity measure tau*delta_1 + (1-tau)*delta_{-gamma}."""

    lam: float
    tau: float
    gamma: float

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise ValueError("lam must be positive")
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau in {0,1} degenerates to a single species; need 0 < tau < 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")


def atoms_to_pair(m: TwoAtomMeasure, volume: float = 1.0) -> Parameters:
    """Map the two-atom measure to (lambda1, lambda2) = (lam*tau, lam*gamma*(1-tau))."""
    return Parameters(m.lam * m.tau, m.lam * m.gamma * (1.0 - m.tau), m.gamma, volume)


def mt_threshold(m: TwoAtomMeasure) -> float:
    """Largest lam below which the two-atom functional is bounded below.

    Minimizes P(K)/(int_K alpha dP)^2 over the admissible one-atom sets
    K+ = {1} and K- = {-gamma}, times 8*pi.
    """
    ratio_plus = 1.0 / m.tau
    ratio_minus = 1.0 / (m.gamma**2 * (1.0 - m.tau))
    return 8.0 * math.pi * min(ratio_plus, ratio_minus)


def _check_pair(v: Field, p: Parameters) -> None:
    if abs(v.grid.volume - p.volume) > 1e-12 * p.volume:
        raise ValueError(
            f"parameter volume {p.volume} does not match grid volume {v.grid.volume}"
        )


def log_int_exp(grid: TorusGrid, values: np.ndarray, a: float) -> float:
    """log int e^{a*values}, max-shifted so it never overflows."""
    w = a * values
    m = float(w.max())
    return m + math.log(grid.integrate(np.exp(w - m)))


def normalized_density(grid: TorusGrid, values: np.ndarray, a: float) -> np.ndarray:
    """e^{a*values} / int e^{a*values}; integrates to 1 up to rounding."""
    w = a * values
    e = np.exp(w - w.max())
    return e / grid.integrate(e)


def functional_J(v: Field, p: Parameters) -> float:
    """Value of the free-energy functional at a mean-zero field."""
    _check_pair(v, p)
    return (
        0.5 * dirichlet_energy(v)
        - p.lambda1 * log_int_exp(v.grid, v.values, 1.0)
        - (p.lambda2 / p.gamma) * log_int_exp(v.grid, v.values, -p.gamma)
    )


def gradient_J(v: Field, p: Parameters) -> Field:
    """Mean-zero L2 representative of J'(v).

    r = -Delta v - lambda1 e^v/int(e^v) + lambda2 e^{-gamma v}/int(e^{-gamma v}) + kappa;
    solutions of the mean-field equation are exactly the fields with r = 0.
    """
    _check_pair(v, p)
    rho1 = normalized_density(v.grid, v.values, 1.0)
    rho2 = normalized_density(v.grid, v.values, -p.gamma)
    r = -laplacian(v).values - p.lambda1 * rho1 + p.lambda2 * rho2 + p.kappa
    return Field(v.grid, r, project=True)


def hessian_apply(v: Field, phi: Field, p: Parameters) -> Field:
    """Action of the second variation J''(v) on phi (mean-zero output).

    Obtained by differentiating gradient_J; the nonlocal terms are
    rho*phi - rho*int(rho*phi) with rho the two normalized densities.
    """
    _check_pair(v, p)
    grid = v.grid
    rho1 = normalized_density(grid, v.values, 1.0)
    rho2 = normalized_density(grid, v.values, -p.gamma)
    t1 = rho1 * phi.values - rho1 * grid.integrate(rho1 * phi.values)
    t2 = rho2 * phi.values - rho2 * grid.integrate(rho2 * phi.values)
    h = -laplacian(phi).values - p.lambda1 * t1 - p.gamma * p.lambda2 * t2
    return Field(grid, h, project=True)


def hessian_rayleigh_min(
    v: Field,
    p: Parameters,
    *,
    tol: float = 1e-10,
    maxiter: int = 500,
    seed: int = 0,
) -> float:
    """Smallest Rayleigh quotient of J''(v) over mean-zero fields.

    Matrix-free LOBPCG on the Hessian action, preconditioned with the
    inverse Laplacian.  The Rayleigh quotient is taken in the L2 inner
    product; the uniform quadrature weight cancels, so the Euclidean
    eigenproblem has the same extremal values.
    """
    grid = v.grid
    n = grid.size

    def apply_h(x):
        x = x - x.mean()
        out = hessian_apply(v, Field(grid, x.reshape(grid.shape), project=True), p)
        return out.values.ravel()

    def apply_m(x):
        x = x.reshape(grid.shape)
        return _inv_laplacian_raw(grid, x - x.mean()).ravel()

    a_op = LinearOperator((n, n), matvec=apply_h, dtype=float)
    m_op = LinearOperator((n, n), matvec=apply_m, dtype=float)
    rng = np.random.default_rng(seed)
    block = rng.standard_normal((n, 3))
    block -= block.mean(axis=0)
    vals, _ = lobpcg(a_op, block, M=m_op, largest=False, tol=tol, maxiter=maxiter)
    return float(vals.min())
