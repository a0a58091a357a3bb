"""Mountain-pass minimax solver and parameter continuation.

The nontrivial critical points are computed in two stages.  A path of
fields joining the strict local minimum 0 to a downhill bubble endpoint
is deformed by descending its highest-J nodes (path-deformation
minimax); descent directions are preconditioned with the inverse
Laplacian, the natural gradient of the mean-zero energy space, which
removes the grid-scale stiffness an L2 gradient step would have.  Once
the peak node stagnates or its residual is small, Newton iteration
finishes the job: each step solves the Hessian system matrix-free with
MINRES, again preconditioned by the inverse Laplacian, with a
backtracking line search on the residual norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from .torus import Field, TorusGrid, dirichlet_energy, inv_laplacian, mu1, _inv_laplacian_raw
from .model import Parameters, functional_J, gradient_J, hessian_apply
from .bubbles import downhill_endpoint
from .region import RegionSpec, contains

__all__ = [
    "SolverConfig",
    "SolverError",
    "PathState",
    "SolveRecord",
    "mountain_pass",
    "newton_refine",
    "continuation",
]

# a record counts as nontrivial when its Dirichlet norm clears this
NONTRIVIAL_NORM = 1e-3


class SolverError(RuntimeError):
    """Minimax or Newton stage failed to produce a converged solution."""


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for the minimax solve; defaults work on unit-torus grids.

    switch_tol and newton_tol are relative to lambda1 + lambda2;
    newton_atol, when set, overrides the relative Newton target.
    """

    path_nodes: int = 33
    path_step: float = 1e-2
    switch_tol: float = 1e-3
    newton_tol: float = 1e-9
    newton_atol: float | None = None
    max_sweeps: int = 200
    max_newton: int = 50
    krylov_eta: float = 1e-2
    krylov_maxiter: int = 600
    stagnation_sweeps: int = 6
    step_cap: float = 1.0
    eps_start: float | None = None
    eps_shrink: float = 0.5
    r0: float | None = None
    bubble_center: tuple[float, float] | None = None
    perturb_amplitude: float = 1e-6

    def __post_init__(self):
        if self.path_nodes < 16:
            raise ValueError("need at least 16 path nodes")
        for name in ("path_step", "switch_tol", "newton_tol", "krylov_eta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.newton_atol is not None and self.newton_atol <= 0:
            raise ValueError("newton_atol must be positive")


@dataclass(frozen=True)
class SolveRecord:
    """One converged (or flagged) critical-point computation."""

    field: Field
    parameters: Parameters
    residual_norm: float
    j_value: float
    iterations: int
    sweeps: int
    converged: bool
    nontrivial: bool
    dirichlet_norm: float
    sup_norm: float
    residual_history: tuple[float, ...]

    @property
    def grid(self) -> TorusGrid:
        return self.field.grid


@dataclass
class PathState:
    """Ordered fields from 0 to the downhill endpoint with their J values."""

    nodes: list[Field]
    j_values: np.ndarray
    max_index: int

    @classmethod
    def build(cls, nodes: list[Field], p: Parameters) -> "PathState":
        if len(nodes) < 16:
            raise ValueError("path needs at least 16 nodes")
        if nodes[0].sup_norm() != 0.0:
            raise ValueError("path must start at the zero field")
        j = np.array([functional_J(v, p) for v in nodes])
        if j[-1] >= 0.0:
            raise ValueError("path must end at a field with negative J")
        return cls(nodes=nodes, j_values=j, max_index=int(np.argmax(j)))

    def refresh(self, p: Parameters) -> None:
        self.j_values = np.array([functional_J(v, p) for v in self.nodes])
        self.max_index = int(np.argmax(self.j_values))


def _l2(grid: TorusGrid, values: np.ndarray) -> float:
    return math.sqrt(grid.integrate(values * values))


def _reinterpolate(nodes: list[Field]) -> list[Field]:
    """Re-space the path uniformly in cumulative L2 arclength.

    Endpoints are kept exactly; the node count never changes.
    """
    grid = nodes[0].grid
    n = len(nodes)
    seg = np.array([_l2(grid, nodes[i + 1].values - nodes[i].values) for i in range(n - 1)])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0.0:
        return nodes
    targets = np.linspace(0.0, s[-1], n)
    out = [nodes[0]]
    j = 0
    for t in targets[1:-1]:
        while s[j + 1] < t and j < n - 2:
            j += 1
        width = s[j + 1] - s[j]
        w = (t - s[j]) / width if width > 0 else 0.0
        vals = (1.0 - w) * nodes[j].values + w * nodes[j + 1].values
        out.append(Field(grid, vals, project=True))
    out.append(nodes[-1])
    return out


def _initial_path(v1: Field, p: Parameters, cfg: SolverConfig) -> PathState:
    grid = v1.grid
    ts = np.linspace(0.0, 1.0, cfg.path_nodes)
    nodes = [Field(grid, t * v1.values, project=True) for t in ts]
    if p.gamma == 1.0 and p.lambda1 == p.lambda2:
        # odd symmetry can stall the deformation at symmetric
        # configurations; break the tie once, deterministically
        X, Y = grid.meshgrid()
        asym = np.cos(2.0 * np.pi * X / grid.Lx) + 0.5 * np.sin(2.0 * np.pi * Y / grid.Ly)
        bump = cfg.perturb_amplitude * max(v1.sup_norm(), 1.0) * asym
        for i in range(1, cfg.path_nodes - 1):
            nodes[i] = Field(grid, nodes[i].values + bump, project=True)
    return PathState.build(nodes, p)


def _deform(path: PathState, p: Parameters, cfg: SolverConfig, switch_abs: float):
    """Drive the peak of the path toward the saddle.

    Returns (handoff field, sweeps used, peak residual norm).  Hands off
    when the peak node's gradient drops below switch_abs, or when the
    peak level stops moving (the path discretization limit), or when the
    sweep budget runs out.
    """
    grid = path.nodes[0].grid
    n = len(path.nodes)
    steps = np.full(n, cfg.path_step)
    last_peak = math.inf
    stagnant = 0
    for sweep in range(cfg.max_sweeps):
        m = path.max_index
        if m == 0 or m == n - 1:
            raise SolverError("path collapse: peak migrated to an endpoint")
        g_peak = gradient_J(path.nodes[m], p)
        gn = _l2(grid, g_peak.values)
        if gn < switch_abs:
            return path.nodes[m], sweep, gn
        peak = path.j_values[m]
        if peak >= last_peak - 1e-12 * max(1.0, abs(peak)):
            stagnant += 1
            if stagnant >= cfg.stagnation_sweeps:
                return path.nodes[m], sweep, gn
        else:
            stagnant = 0
        last_peak = peak

        for idx in (m - 1, m, m + 1):
            if idx <= 0 or idx >= n - 1:
                continue
            node = path.nodes[idx]
            g = g_peak if idx == m else gradient_J(node, p)
            direction = inv_laplacian(g)
            j0 = path.j_values[idx]
            st = steps[idx]
            for k in range(25):
                trial = Field(grid, node.values - st * direction.values, project=True)
                if functional_J(trial, p) < j0:
                    path.nodes[idx] = trial
                    steps[idx] = min(st * 2.0, cfg.step_cap) if k == 0 else st
                    break
                st *= 0.5
        path.nodes = _reinterpolate(path.nodes)
        path.refresh(p)
    m = path.max_index
    return path.nodes[m], cfg.max_sweeps, _l2(grid, gradient_J(path.nodes[m], p).values)


def _newton_system_solve(v: Field, r: Field, p: Parameters, eta: float, maxiter: int):
    grid = v.grid
    n = grid.size

    def matvec(x):
        x = x - x.mean()
        out = hessian_apply(v, Field(grid, x.reshape(grid.shape), project=True), p)
        return out.values.ravel()

    def precond(x):
        x = x.reshape(grid.shape)
        return _inv_laplacian_raw(grid, x - x.mean()).ravel()

    a_op = LinearOperator((n, n), matvec=matvec, dtype=float)
    m_op = LinearOperator((n, n), matvec=precond, dtype=float)
    delta, _ = minres(a_op, -r.values.ravel(), M=m_op, rtol=eta, maxiter=maxiter)
    delta = delta - delta.mean()
    return delta.reshape(grid.shape)


def _residual_linesearch(v: Field, delta: np.ndarray, rn: float, p: Parameters):
    grid = v.grid
    alpha = 1.0
    while alpha > 1e-6:
        trial = Field(grid, v.values + alpha * delta, project=True)
        rn_t = _l2(grid, gradient_J(trial, p).values)
        if rn_t < rn * (1.0 - 1e-4 * alpha):
            return trial, rn_t
        alpha *= 0.5
    return None, rn


def _run_newton(v: Field, p: Parameters, cfg: SolverConfig, sweeps: int) -> SolveRecord:
    grid = v.grid
    scale = p.lambda1 + p.lambda2
    atol = cfg.newton_atol if cfg.newton_atol is not None else cfg.newton_tol * scale
    history = []
    converged = False
    rn = _l2(grid, gradient_J(v, p).values)
    history.append(rn)
    for _ in range(cfg.max_newton):
        if rn <= atol:
            converged = True
            break
        eta = min(cfg.krylov_eta, rn / scale)
        delta = _newton_system_solve(v, gradient_J(v, p), p, eta, cfg.krylov_maxiter)
        trial, rn_t = _residual_linesearch(v, delta, rn, p)
        if trial is None:
            # inexact direction may be at fault: resolve much tighter
            delta = _newton_system_solve(
                v, gradient_J(v, p), p, eta * 1e-2, 2 * cfg.krylov_maxiter
            )
            trial, rn_t = _residual_linesearch(v, delta, rn, p)
        if trial is None:
            # steepest descent on 1/2 |r|^2; its gradient is H r by symmetry
            r = gradient_J(v, p)
            d = -hessian_apply(v, r, p).values
            alpha = 1e-3
            for _ in range(40):
                cand = Field(grid, v.values + alpha * d, project=True)
                rn_c = _l2(grid, gradient_J(cand, p).values)
                if rn_c < rn:
                    trial, rn_t = cand, rn_c
                    break
                alpha *= 0.5
        if trial is None:
            break  # stagnation: report the last iterate
        v, rn = trial, rn_t
        history.append(rn)
    else:
        converged = rn <= atol
    if rn <= atol:
        converged = True
    dn = math.sqrt(dirichlet_energy(v))
    return SolveRecord(
        field=v,
        parameters=p,
        residual_norm=rn,
        j_value=functional_J(v, p),
        iterations=len(history) - 1,
        sweeps=sweeps,
        converged=converged,
        nontrivial=dn >= NONTRIVIAL_NORM,
        dirichlet_norm=dn,
        sup_norm=v.sup_norm(),
        residual_history=tuple(history),
    )


def newton_refine(v0: Field, p: Parameters, cfg: SolverConfig | None = None) -> SolveRecord:
    """Newton-MINRES refinement of the Euler-Lagrange residual from v0."""
    cfg = cfg or SolverConfig()
    return _run_newton(v0, p, cfg, sweeps=0)


def region_spec_for(grid: TorusGrid, gamma: float) -> RegionSpec:
    return RegionSpec(gamma, mu1(grid) * grid.volume)


def mountain_pass(p: Parameters, grid: TorusGrid, cfg: SolverConfig | None = None) -> SolveRecord:
    """Nontrivial critical point at admissible parameters.

    Precondition: (lambda1, lambda2) inside the admissible region for
    this torus and grid resolution at least 64 x 64.  Raises ValueError
    on precondition violations and SolverError when the minimax descent
    or Newton stage fails.
    """
    cfg = cfg or SolverConfig()
    if grid.nx < 64 or grid.ny < 64:
        raise ValueError("mountain pass needs grid resolution at least 64x64")
    if abs(grid.volume - p.volume) > 1e-12 * p.volume:
        raise ValueError("parameter volume does not match grid volume")
    spec = region_spec_for(grid, p.gamma)
    if not contains(spec, p.lambda1, p.lambda2):
        raise ValueError(
            f"parameters ({p.lambda1}, {p.lambda2}) outside the admissible region"
        )
    v1 = downhill_endpoint(
        p,
        grid,
        p0=cfg.bubble_center,
        r0=cfg.r0,
        eps_start=cfg.eps_start,
        shrink=cfg.eps_shrink,
    )
    switch_abs = cfg.switch_tol * (p.lambda1 + p.lambda2)
    last = None
    for _ in range(2):
        path = _initial_path(v1, p, cfg)
        handoff, sweeps, _ = _deform(path, p, cfg, switch_abs)
        rec = _run_newton(handoff, p, cfg, sweeps=sweeps)
        if rec.converged and rec.nontrivial:
            return rec
        last = rec
        switch_abs *= 0.1  # tighten the handoff and try once more
    if last is not None and not last.converged:
        raise SolverError(
            f"Newton stagnated at residual {last.residual_norm:.3e}"
        )
    raise SolverError("minimax descent collapsed to the trivial solution")


def _midpoint(a: Parameters, b: Parameters) -> Parameters:
    return Parameters(
        0.5 * (a.lambda1 + b.lambda1),
        0.5 * (a.lambda2 + b.lambda2),
        a.gamma,
        a.volume,
    )


def _continuation_step(
    warm: Field, target: Parameters, source: Parameters, cfg: SolverConfig, depth: int
) -> SolveRecord:
    rec = newton_refine(warm, target, cfg)
    if rec.converged or depth <= 0:
        return rec
    mid = _midpoint(source, target)
    rec_mid = _continuation_step(warm, mid, source, cfg, depth - 1)
    if not rec_mid.converged:
        return rec
    return _continuation_step(rec_mid.field, target, mid, cfg, depth - 1)


def continuation(
    p_start: Parameters,
    p_end: Parameters,
    steps: int,
    grid: TorusGrid,
    cfg: SolverConfig | None = None,
) -> list[SolveRecord]:
    """Solve along the straight parameter segment, warm-starting Newton.

    The first point is solved by mountain_pass (its failure rejects the
    whole run).  Later points reuse the previous solution; a failing
    Newton first retries through recursive parameter bisection, and only
    then yields a flagged (non-converged) record.
    """
    cfg = cfg or SolverConfig()
    if steps < 1:
        raise ValueError("need at least one continuation step")
    if p_start.gamma != p_end.gamma:
        raise ValueError("continuation keeps gamma fixed")
    if p_start.volume != p_end.volume:
        raise ValueError("continuation keeps the torus fixed")
    ts = np.linspace(0.0, 1.0, steps) if steps > 1 else np.array([0.0])
    params = [
        Parameters(
            (1 - t) * p_start.lambda1 + t * p_end.lambda1,
            (1 - t) * p_start.lambda2 + t * p_end.lambda2,
            p_start.gamma,
            p_start.volume,
        )
        for t in ts
    ]
    spec = region_spec_for(grid, p_start.gamma)
    for i, q in enumerate(params):
        if not contains(spec, q.lambda1, q.lambda2) and i != len(params) - 1:
            raise ValueError(
                f"interior continuation point ({q.lambda1}, {q.lambda2}) leaves the region"
            )
    records = [mountain_pass(params[0], grid, cfg)]
    warm = records[0].field
    source = params[0]
    for q in params[1:]:
        rec = _continuation_step(warm, q, source, cfg, depth=4)
        records.append(rec)
        if rec.converged:
            warm, source = rec.field, q
    return records
