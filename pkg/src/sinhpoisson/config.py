"""Flat key-value run configuration shared by all CLI subcommands.

Configs are plain text, one `key = value` per line, '#' comments.  The
same keys can be overridden on the command line with --set key=value.
Grid and solver keys default sensibly; the physical parameters must be
given either directly (lambda1, lambda2, gamma) or through the two-atom
block (lambda, tau, gamma), never both.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .torus import TorusGrid
from .model import Parameters, TwoAtomMeasure, atoms_to_pair
from .minimax import SolverConfig

__all__ = ["RunConfig", "parse_config_text", "ConfigError"]


class ConfigError(ValueError):
    """Config file or override is malformed or inconsistent."""


_INT_KEYS = {"nx", "ny", "path_nodes", "max_sweeps", "max_newton", "sweep_steps",
             "scan_eps_count"}
_FLOAT_KEYS = {
    "Lx", "Ly", "lambda1", "lambda2", "gamma", "lambda", "tau",
    "path_step", "switch_tol", "newton_tol", "newton_atol", "eps_start",
    "eps_shrink", "r0", "lambda1_end", "lambda2_end",
    "scan_eps_start", "scan_eps_factor", "scan_r0",
    "ball_radius", "threshold_factor",
}
_STR_KEYS = {"outdir"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


@dataclass
class RunConfig:
    # grid block
    nx: int = 128
    ny: int = 128
    Lx: float = 1.0
    Ly: float = 1.0
    # parameter block (direct)
    lambda1: float | None = None
    lambda2: float | None = None
    gamma: float | None = None
    # two-atom block
    lam: float | None = None
    tau: float | None = None
    # solver block
    path_nodes: int = 33
    path_step: float = 1e-2
    switch_tol: float = 1e-3
    newton_tol: float = 1e-9
    newton_atol: float | None = None
    max_sweeps: int = 200
    max_newton: int = 50
    eps_start: float | None = None
    eps_shrink: float = 0.5
    r0: float | None = None
    # sweep block
    lambda1_end: float | None = None
    lambda2_end: float | None = None
    sweep_steps: int = 10
    # bubble-scan block
    scan_eps_start: float = 0.125
    scan_eps_factor: float = 0.5
    scan_eps_count: int = 5
    scan_r0: float = 0.25
    # analysis block
    ball_radius: float = 0.2
    threshold_factor: float = 10.0
    # output
    outdir: str = "out"

    def validate(self) -> None:
        direct = self.lambda1 is not None or self.lambda2 is not None
        atoms = self.lam is not None or self.tau is not None
        if direct and atoms:
            raise ConfigError(
                "give either (lambda1, lambda2) or the two-atom (lambda, tau), not both"
            )
        for name in ("switch_tol", "newton_tol", "path_step"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.newton_atol is not None and self.newton_atol <= 0:
            raise ConfigError("newton_atol must be positive")

    def grid(self) -> TorusGrid:
        try:
            return TorusGrid(self.nx, self.ny, self.Lx, self.Ly)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def parameters(self) -> Parameters:
        """Materialize the physical parameters (requires a full block)."""
        self.validate()
        if self.gamma is None:
            raise ConfigError("gamma is required")
        volume = self.Lx * self.Ly
        try:
            if self.lam is not None or self.tau is not None:
                if self.lam is None or self.tau is None:
                    raise ConfigError("two-atom block needs both lambda and tau")
                return atoms_to_pair(
                    TwoAtomMeasure(self.lam, self.tau, self.gamma), volume
                )
            if self.lambda1 is None or self.lambda2 is None:
                raise ConfigError("parameter block needs lambda1 and lambda2")
            return Parameters(self.lambda1, self.lambda2, self.gamma, volume)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def end_parameters(self) -> Parameters:
        """Sweep target; unset end values stay at their start values."""
        base = self.parameters()
        l1 = self.lambda1_end if self.lambda1_end is not None else base.lambda1
        l2 = self.lambda2_end if self.lambda2_end is not None else base.lambda2
        try:
            return Parameters(l1, l2, base.gamma, base.volume)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def solver(self) -> SolverConfig:
        try:
            return SolverConfig(
                path_nodes=self.path_nodes,
                path_step=self.path_step,
                switch_tol=self.switch_tol,
                newton_tol=self.newton_tol,
                newton_atol=self.newton_atol,
                max_sweeps=self.max_sweeps,
                max_newton=self.max_newton,
                eps_start=self.eps_start,
                eps_shrink=self.eps_shrink,
                r0=self.r0,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def scan_eps(self) -> list[float]:
        if self.scan_eps_count < 5:
            raise ConfigError("bubble scan needs at least 5 eps values")
        if not (0.0 < self.scan_eps_factor < 1.0):
            raise ConfigError("scan_eps_factor must lie in (0, 1)")
        return [
            self.scan_eps_start * self.scan_eps_factor**k
            for k in range(self.scan_eps_count)
        ]

    def effective_lines(self) -> list[str]:
        """Full effective configuration, echoed into every output header."""
        lines = []
        mapping = [(f.name, getattr(self, f.name)) for f in fields(self)]
        for name, value in mapping:
            key = "lambda" if name == "lam" else name
            if value is None:
                continue
            if isinstance(value, float):
                lines.append(f"{key} = {value:.17g}")
            else:
                lines.append(f"{key} = {value}")
        # derived pair for the two-atom block, so outputs are self-contained
        if self.lam is not None and self.tau is not None and self.gamma is not None:
            p = self.parameters()
            lines.append(f"lambda1 = {p.lambda1:.17g}")
            lines.append(f"lambda2 = {p.lambda2:.17g}")
        return lines


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key} expects an integer, got {raw!r}") from exc
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key} expects a number, got {raw!r}") from exc
    return raw


def apply_assignment(cfg: RunConfig, key: str, raw: str) -> RunConfig:
    if key not in _ALL_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    attr = "lam" if key == "lambda" else key
    return replace(cfg, **{attr: _coerce(key, raw.strip())})


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        cfg = apply_assignment(cfg, key.strip(), raw)
    cfg.validate()
    return cfg
