"""Flat-torus grids, spectral calculus on them, and field file I/O.

The domain is the rectangular torus [0,Lx) x [0,Ly) with the Euclidean
metric.  All differential operators act through the FFT, so they are
exact on band-limited fields; quadrature is the rectangle rule, which is
spectrally accurate for periodic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "TorusGrid",
    "Field",
    "FieldFormatError",
    "laplacian",
    "inv_laplacian",
    "mu1",
    "green_convolve",
    "distance_to_point",
    "spectral_gradient",
    "spectral_refine",
    "dirichlet_energy",
    "read_field",
    "write_field",
    "zero_field",
]

# Mean-zero invariant: |mean| <= MEAN_ZERO_RTOL * max|values|.
MEAN_ZERO_RTOL = 1e-12


class FieldFormatError(ValueError):
    """A field file does not match the declared on-disk layout."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the flat torus, with its transform plan.

    Immutable after construction; safe to share across threads.  `nx`,
    `ny` are the number of nodes per axis, `Lx`, `Ly` the periods.
    """

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 points per axis")
        if self.nx % 2 or self.ny % 2:
            raise ValueError("grid sizes must be even")
        if not (self.Lx > 0.0 and self.Ly > 0.0 and math.isfinite(self.Lx) and math.isfinite(self.Ly)):
            raise ValueError("torus periods must be positive and finite")

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx): rows run along y, columns along x."""
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def volume(self) -> float:
        return self.Lx * self.Ly

    @property
    def cell_area(self) -> float:
        return self.volume / self.size

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.Lx / self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.Ly / self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as (X, Y), each of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    @cached_property
    def _kx(self) -> np.ndarray:
        # angular wavenumbers 2*pi*m/Lx for the rfft axis
        return 2.0 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    @cached_property
    def _ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    @cached_property
    def _lap_symbol(self) -> np.ndarray:
        # Fourier multiplier of Delta: -4 pi^2 (m^2/Lx^2 + l^2/Ly^2)
        return -(self._kx[None, :] ** 2 + self._ky[:, None] ** 2)

    @cached_property
    def _inv_lap_symbol(self) -> np.ndarray:
        sym = self._lap_symbol.copy()
        sym[0, 0] = 1.0  # placeholder; the zero mode is zeroed explicitly
        inv = -1.0 / sym
        inv[0, 0] = 0.0
        return inv

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of a nodal sample; exact volume for the constant 1."""
        return float(values.sum() / values.size) * self.volume

    def same_layout(self, other: "TorusGrid") -> bool:
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and self.Lx == other.Lx
            and self.Ly == other.Ly
        )


class Field:
    """Mean-zero real scalar function sampled on a TorusGrid.

    `values` has shape (ny, nx), row-major.  Construction rejects
    non-finite samples and any mean beyond the projection tolerance;
    pass project=True to subtract the mean instead.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: TorusGrid, values: np.ndarray, *, project: bool = False):
        values = np.asarray(values, dtype=float)
        if values.shape == (grid.size,):
            values = values.reshape(grid.shape)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if project:
            values = values - values.mean()
        else:
            maxabs = float(np.abs(values).max())
            if abs(float(values.mean())) > MEAN_ZERO_RTOL * maxabs:
                raise ValueError(
                    "field mean exceeds the mean-zero tolerance; "
                    "construct with project=True to subtract it"
                )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def mean(self) -> float:
        return float(self.values.mean())

    def integrate(self) -> float:
        return self.grid.integrate(self.values)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.integrate(self.values**2))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def _binary(self, other, op) -> "Field":
        if not isinstance(other, Field):
            return NotImplemented
        if not self.grid.same_layout(other.grid):
            raise ValueError("fields live on different grids")
        return Field(self.grid, op(self.values, other.values), project=True)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Field(self.grid, self.values * float(scalar), project=True)

    __rmul__ = __mul__

    def __repr__(self):
        g = self.grid
        return f"Field({g.nx}x{g.ny}, sup={self.sup_norm():.3g})"


def zero_field(grid: TorusGrid) -> Field:
    return Field(grid, np.zeros(grid.shape))


def _check_field(f: Field) -> None:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("field values must be finite")


def laplacian(f: Field) -> Field:
    """Apply Delta through its Fourier multiplier; mean-zero in, mean-zero out."""
    _check_field(f)
    hat = np.fft.rfft2(f.values)
    hat *= f.grid._lap_symbol
    out = np.fft.irfft2(hat, s=f.grid.shape)
    return Field(f.grid, out, project=True)


def inv_laplacian(f: Field) -> Field:
    """Solve -Delta u = f on the mean-zero space.

    Rejects input whose mean exceeds the projection tolerance: a nonzero
    mean makes the problem unsolvable and signals a forgotten projection.
    """
    _check_field(f)
    maxabs = float(np.abs(f.values).max())
    if abs(f.mean()) > MEAN_ZERO_RTOL * max(maxabs, 1.0):
        raise ValueError("inv_laplacian requires a mean-zero source")
    return Field(f.grid, _inv_laplacian_raw(f.grid, f.values), project=True)


def _inv_laplacian_raw(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Mean-corrected (-Delta)^{-1} on a raw array; zero mode dropped."""
    hat = np.fft.rfft2(values)
    hat *= grid._inv_lap_symbol
    return np.fft.irfft2(hat, s=grid.shape)


def mu1(grid: TorusGrid) -> float:
    """Smallest nonzero eigenvalue of -Delta on the torus."""
    return 4.0 * math.pi**2 * min(1.0 / grid.Lx**2, 1.0 / grid.Ly**2)


def green_convolve(grid: TorusGrid, values: np.ndarray | Field) -> Field:
    """Convolve with the mean-corrected Green's function of -Delta.

    Accepts any integrable sample (mean not required); the Green's
    function satisfies -Delta G(.,p) = delta_p - 1/|domain| with zero
    mean, so the result is the mean-zero potential of the source.
    """
    if isinstance(values, Field):
        values = values.values
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("source values must be finite")
    centered = values - values.mean()
    return Field(grid, _inv_laplacian_raw(grid, centered), project=True)


def distance_to_point(grid: TorusGrid, p0: tuple[float, float]) -> np.ndarray:
    """Geodesic (minimum-image) distance from every node to p0."""
    px, py = float(p0[0]), float(p0[1])
    if not (0.0 <= px <= grid.Lx and 0.0 <= py <= grid.Ly):
        raise ValueError("p0 must lie inside the fundamental domain")
    ax = np.abs(grid.x - px)
    ax = np.minimum(ax, grid.Lx - ax)
    ay = np.abs(grid.y - py)
    ay = np.minimum(ay, grid.Ly - ay)
    return np.hypot(ax[None, :], ay[:, None])


def spectral_gradient(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Nodal samples of (df/dx, df/dy) via spectral differentiation.

    Nyquist wavenumbers are zeroed in the odd-order multipliers, the
    usual convention for real output; use dirichlet_energy for energies,
    which keeps the Nyquist contribution.
    """
    grid = f.grid
    hat = np.fft.rfft2(f.values)
    kx = grid._kx.copy()
    kx[-1] = 0.0
    ky = grid._ky.copy()
    ky[grid.ny // 2] = 0.0
    gx = np.fft.irfft2(1j * kx[None, :] * hat, s=grid.shape)
    gy = np.fft.irfft2(1j * ky[:, None] * hat, s=grid.shape)
    return gx, gy


def dirichlet_energy(f: Field) -> float:
    """Integral of |grad f|^2 by Parseval sum over the spectrum.

    Equals quadrature(f * (-Delta f)) up to rounding for every field,
    Nyquist modes included, which keeps the energy consistent with the
    laplacian() pairing.
    """
    grid = f.grid
    hat = np.fft.rfft2(f.values)
    power = hat.real**2 + hat.imag**2
    # rfft stores half the spectrum: double the interior columns
    weights = np.full(grid.nx // 2 + 1, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    k2 = -grid._lap_symbol
    total = float(np.sum(power * k2 * weights[None, :]))
    return total * grid.volume / grid.size**2


def _pad_modes(hat: np.ndarray, axis: int, n_new: int) -> np.ndarray:
    """Zero-pad a full FFT spectrum along one axis, splitting the Nyquist
    bin so the padded spectrum stays Hermitian."""
    h = np.moveaxis(hat, axis, 0)
    n = h.shape[0]
    top = h[: n // 2]
    nyq = 0.5 * h[n // 2 : n // 2 + 1]
    bot = h[n // 2 + 1 :]
    pad = np.zeros((n_new - n - 1,) + h.shape[1:], dtype=hat.dtype)
    out = np.concatenate([top, nyq, pad, nyq, bot], axis=0)
    return np.moveaxis(out, 0, axis)


def spectral_refine(f: Field, factor: int = 2) -> Field:
    """Resample a field onto a factor-times finer grid by Fourier padding.

    Exact for the trigonometric interpolant, so smooth solutions carry
    over with spectrally small residual; used for warm starts in
    grid-refinement studies.
    """
    if factor < 1 or int(factor) != factor:
        raise ValueError("refinement factor must be a positive integer")
    grid = f.grid
    if factor == 1:
        return f.copy()
    nx2, ny2 = grid.nx * factor, grid.ny * factor
    hat = np.fft.fft2(f.values)
    hat = _pad_modes(hat, 0, ny2)
    hat = _pad_modes(hat, 1, nx2)
    values = np.fft.ifft2(hat).real * (factor * factor)
    fine = TorusGrid(nx2, ny2, grid.Lx, grid.Ly)
    return Field(fine, values, project=True)


# ----------------------------------------------------------------------
# Field file format (text):
#   # torus-field nx=<int> ny=<int> Lx=<float> Ly=<float>
#   <ny lines of nx space-separated values, row-major, 17 significant digits>
# Additional '#' comment lines after the first are tolerated on read.
# ----------------------------------------------------------------------

_HEADER_TAG = "# torus-field"


def write_field(path, f: Field, extra_comments: list[str] | None = None) -> None:
    grid = f.grid
    with open(path, "w") as fh:
        fh.write(
            f"{_HEADER_TAG} nx={grid.nx} ny={grid.ny} "
            f"Lx={grid.Lx:.17g} Ly={grid.Ly:.17g}\n"
        )
        for line in extra_comments or []:
            fh.write(f"# {line}\n")
        for row in f.values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_field(path, *, project: bool = True) -> Field:
    """Read a field file; rejects mismatched counts and malformed headers."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith(_HEADER_TAG):
            raise FieldFormatError("missing '# torus-field' header line")
        meta = {}
        for token in header[len(_HEADER_TAG):].split():
            if "=" not in token:
                raise FieldFormatError(f"malformed header token {token!r}")
            key, _, val = token.partition("=")
            meta[key] = val
        try:
            nx, ny = int(meta["nx"]), int(meta["ny"])
            Lx, Ly = float(meta["Lx"]), float(meta["Ly"])
        except (KeyError, ValueError) as exc:
            raise FieldFormatError(f"bad field header: {exc}") from exc
        try:
            grid = TorusGrid(nx, ny, Lx, Ly)
        except ValueError as exc:
            raise FieldFormatError(f"bad grid in header: {exc}") from exc
        rows = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != nx:
                raise FieldFormatError(
                    f"row {len(rows)} has {len(parts)} values, expected {nx}"
                )
            try:
                rows.append([float(tok) for tok in parts])
            except ValueError as exc:
                raise FieldFormatError(f"non-numeric value: {exc}") from exc
        if len(rows) != ny:
            raise FieldFormatError(f"found {len(rows)} data rows, expected {ny}")
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FieldFormatError("field file contains non-finite values")
    return Field(grid, values, project=project)
