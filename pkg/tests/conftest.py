import numpy as np
import pytest

from sinhpoisson.torus import Field, TorusGrid


@pytest.fixture
def grid64():
    return TorusGrid(64, 64)


def smooth_random(grid: TorusGrid, rng, kmax: int = 3, scale: float = 1.0) -> Field:
    """Band-limited random mean-zero field with sup-norm about `scale`."""
    hat = np.zeros((grid.ny, grid.nx // 2 + 1), dtype=complex)
    ky = np.fft.fftfreq(grid.ny) * grid.ny
    kx = np.arange(grid.nx // 2 + 1)
    mask = (np.abs(ky)[:, None] <= kmax) & (kx[None, :] <= kmax)
    hat[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    vals = np.fft.irfft2(hat, s=grid.shape)
    peak = np.abs(vals).max()
    if peak > 0:
        vals *= scale / peak
    return Field(grid, vals, project=True)


def skewed_random(grid: TorusGrid, rng, scale: float = 3.0, amp: float = 6.0) -> Field:
    """Random field plus a skew carrier whose cube integral is bounded away
    from zero, keeping central-difference cubic terms above the floating
    point floor in derivative checks."""
    X, Y = grid.meshgrid()
    ax, ay = rng.uniform(0.0, 1.0, 2)
    carrier = (
        np.cos(2 * np.pi * (X / grid.Lx - ax))
        + 0.5 * np.cos(4 * np.pi * (X / grid.Lx - ax))
        + np.cos(2 * np.pi * (Y / grid.Ly - ay))
        + 0.5 * np.cos(4 * np.pi * (Y / grid.Ly - ay))
    )
    base = smooth_random(grid, rng, 3, scale)
    return Field(grid, base.values + amp * carrier, project=True)


def l2_distance(a: Field, b: Field) -> float:
    diff = a.values - b.values
    return float(np.sqrt(a.grid.integrate(diff * diff)))
