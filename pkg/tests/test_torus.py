import math

import numpy as np
import pytest

from sinhpoisson.torus import (
    Field,
    FieldFormatError,
    TorusGrid,
    dirichlet_energy,
    distance_to_point,
    green_convolve,
    inv_laplacian,
    laplacian,
    mu1,
    read_field,
    spectral_refine,
    write_field,
    zero_field,
)
from conftest import smooth_random


class TestTorusGrid:
    def test_rejects_odd_or_tiny_grids(self):
        with pytest.raises(ValueError):
            TorusGrid(7, 8)
        with pytest.raises(ValueError):
            TorusGrid(8, 10, Lx=-1.0)
        with pytest.raises(ValueError):
            TorusGrid(4, 4)
        with pytest.raises(ValueError):
            TorusGrid(9, 9)

    def test_quadrature_of_one_is_exactly_volume(self):
        for nx, ny, Lx, Ly in [(8, 8, 1.0, 1.0), (12, 20, 1.5, 0.75), (64, 32, 2.0, 3.0)]:
            g = TorusGrid(nx, ny, Lx, Ly)
            assert g.integrate(np.ones(g.shape)) == g.volume
            assert g.cell_area == g.volume / (nx * ny)

    def test_coordinates_span_half_open_domain(self):
        g = TorusGrid(16, 8, 2.0, 1.0)
        assert g.x[0] == 0.0 and g.x[-1] == 2.0 - g.dx
        assert g.y[0] == 0.0 and g.y[-1] == 1.0 - g.dy


class TestField:
    def test_rejects_nonfinite(self, grid64):
        vals = np.zeros(grid64.shape)
        vals[3, 4] = np.inf
        with pytest.raises(ValueError):
            Field(grid64, vals)

    def test_rejects_nonzero_mean_without_projection(self, grid64):
        with pytest.raises(ValueError):
            Field(grid64, np.ones(grid64.shape))
        f = Field(grid64, np.ones(grid64.shape), project=True)
        assert f.mean() == 0.0

    def test_projection_tolerance_is_relative(self, grid64):
        vals = np.zeros(grid64.shape)
        vals[0, 0] = 1e6
        with pytest.raises(ValueError):
            Field(grid64, vals)

    def test_arithmetic_preserves_mean_zero(self, grid64):
        rng = np.random.default_rng(0)
        a = smooth_random(grid64, rng)
        b = smooth_random(grid64, rng)
        for f in (a + b, a - b, 2.5 * a, -a):
            assert abs(f.mean()) <= 1e-12 * max(f.sup_norm(), 1.0)


class TestLaplacian:
    def test_zero_maps_to_zero(self, grid64):
        assert laplacian(zero_field(grid64)).sup_norm() == 0.0

    def test_single_mode_is_eigenfunction(self):
        g = TorusGrid(64, 32, 2.0, 1.0)
        X, _ = g.meshgrid()
        f = Field(g, np.cos(2 * np.pi * X / g.Lx), project=True)
        lf = laplacian(f)
        expected = -(4 * np.pi**2 / g.Lx**2) * f.values
        assert np.max(np.abs(lf.values - expected)) <= 1e-10 * np.max(np.abs(expected))

    def test_integral_of_laplacian_vanishes(self, grid64):
        # divergence theorem on a closed manifold
        rng = np.random.default_rng(1)
        for _ in range(5):
            f = smooth_random(grid64, rng, kmax=10)
            assert abs(grid64.integrate(laplacian(f).values)) <= 1e-10

    def test_self_adjointness(self, grid64):
        rng = np.random.default_rng(2)
        f, g = smooth_random(grid64, rng, 8), smooth_random(grid64, rng, 8)
        a = grid64.integrate(f.values * laplacian(g).values)
        b = grid64.integrate(g.values * laplacian(f).values)
        assert abs(a - b) <= 1e-9 * max(abs(a), 1.0)


class TestInvLaplacian:
    def test_single_mode_inversion(self):
        g = TorusGrid(32, 32)
        X, _ = g.meshgrid()
        f = Field(g, np.cos(2 * np.pi * X), project=True)
        u = inv_laplacian(f)
        assert np.max(np.abs(u.values - f.values / (4 * np.pi**2))) <= 1e-12

    def test_zero(self, grid64):
        assert inv_laplacian(zero_field(grid64)).sup_norm() == 0.0

    def test_roundtrip_on_random_fields(self, grid64):
        rng = np.random.default_rng(3)
        f = Field(grid64, rng.standard_normal(grid64.shape), project=True)
        back = laplacian(inv_laplacian(f))
        err = np.max(np.abs(-back.values - f.values))
        assert err <= 1e-9 * f.sup_norm()

    def test_rejects_nonzero_mean(self, grid64):
        bad = Field(grid64, np.zeros(grid64.shape))
        buffer = bad.values
        buffer += 0.5  # sneak a mean past the constructor check
        with pytest.raises(ValueError):
            inv_laplacian(bad)


class TestMu1:
    @staticmethod
    def _dense_smallest_eigenvalue(grid):
        """Oracle: dense eigendecomposition of the discrete Laplacian."""
        n = grid.size
        mat = np.zeros((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            e -= e.mean()
            f = Field(grid, e.reshape(grid.shape), project=True)
            mat[:, j] = -laplacian(f).values.ravel()
        eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        return float(eigs[eigs > 1e-8].min())

    def test_unit_torus_value(self):
        g = TorusGrid(16, 16)
        assert abs(mu1(g) - 4 * np.pi**2) <= 1e-12 * 4 * np.pi**2
        assert abs(mu1(g) * g.volume - 4 * np.pi**2) <= 1e-10 * 4 * np.pi**2

    def test_rectangular_torus_against_dense_oracle(self):
        g = TorusGrid(16, 8, 2.0, 1.0)
        oracle = self._dense_smallest_eigenvalue(g)
        assert abs(mu1(g) - np.pi**2) <= 1e-9
        assert abs(oracle - mu1(g)) <= 1e-8 * mu1(g)

    def test_square_scale_invariance(self):
        for L in (0.5, 1.0, 2.0, 3.0):
            g = TorusGrid(16, 16, L, L)
            assert abs(mu1(g) - 4 * np.pi**2 / L**2) <= 1e-10 * mu1(g)
            assert abs(mu1(g) * g.volume - 4 * np.pi**2) <= 1e-10 * 4 * np.pi**2
        oracle = self._dense_smallest_eigenvalue(TorusGrid(12, 12, 3.0, 3.0))
        assert abs(oracle - 4 * np.pi**2 / 9.0) <= 1e-8 * oracle


class TestGreenConvolve:
    def test_constant_maps_to_zero(self, grid64):
        out = green_convolve(grid64, np.full(grid64.shape, 3.7))
        assert out.sup_norm() <= 1e-14

    def test_single_mode(self, grid64):
        X, _ = grid64.meshgrid()
        src = np.cos(2 * np.pi * X)
        out = green_convolve(grid64, src)
        assert np.max(np.abs(out.values - src / (4 * np.pi**2))) <= 1e-12

    def test_gaussian_bump(self):
        # oracle: direct Fourier-space division, coded independently
        g = TorusGrid(128, 128)
        d = distance_to_point(g, (0.3, 0.7))
        bump = np.exp(-((d / 0.05) ** 2))
        bump /= g.integrate(bump)
        out = green_convolve(g, bump)
        assert abs(out.mean()) <= 1e-10
        iy, ix = np.unravel_index(np.argmax(out.values), out.values.shape)
        assert abs(g.x[ix] - 0.3) <= g.dx and abs(g.y[iy] - 0.7) <= g.dy
        hat = np.fft.fft2(bump - bump.mean())
        kx = 2 * np.pi * np.fft.fftfreq(g.nx, d=g.dx)
        ky = 2 * np.pi * np.fft.fftfreq(g.ny, d=g.dy)
        k2 = kx[None, :] ** 2 + ky[:, None] ** 2
        k2[0, 0] = 1.0
        ref = np.fft.ifft2(hat / k2).real
        ref -= ref.mean()
        assert np.max(np.abs(out.values - ref)) <= 1e-10 * np.max(np.abs(ref))


class TestDistance:
    def test_zero_at_center_node(self, grid64):
        d = distance_to_point(grid64, (0.25, 0.5))
        assert d[32, 16] == 0.0

    def test_diagonal_of_half_cell(self, grid64):
        d = distance_to_point(grid64, (0.0, 0.0))
        assert abs(d[32, 32] - math.sqrt(2) / 2) <= 1e-14

    def test_wraparound(self):
        g = TorusGrid(80, 80)  # 0.9 is a grid node
        d = distance_to_point(g, (0.0, 0.0))
        ix = int(round(0.9 / g.dx))
        assert abs(g.x[ix] - 0.9) <= 1e-15
        assert abs(d[0, ix] - 0.1) <= 1e-12

    def test_rejects_point_outside_domain(self, grid64):
        with pytest.raises(ValueError):
            distance_to_point(grid64, (1.5, 0.0))


class TestEnergy:
    def test_two_route_agreement(self, grid64):
        rng = np.random.default_rng(4)
        f = Field(grid64, rng.standard_normal(grid64.shape), project=True)
        e1 = dirichlet_energy(f)
        e2 = grid64.integrate(f.values * (-laplacian(f).values))
        assert abs(e1 - e2) <= 1e-9 * e1

    def test_poincare_with_sharp_constant(self):
        g = TorusGrid(64, 32, 2.0, 1.0)
        rng = np.random.default_rng(5)
        m = mu1(g)
        for _ in range(5):
            f = smooth_random(g, rng, kmax=6)
            assert g.integrate(f.values**2) <= dirichlet_energy(f) / m * (1 + 1e-12)
        X, _ = g.meshgrid()
        eig = Field(g, np.cos(2 * np.pi * X / g.Lx), project=True)
        lhs = g.integrate(eig.values**2)
        rhs = dirichlet_energy(eig) / m
        assert abs(lhs - rhs) <= 1e-9 * lhs


class TestSpectralRefine:
    def test_single_mode_exact(self):
        g = TorusGrid(16, 16)
        X, Y = g.meshgrid()
        f = Field(g, np.sin(2 * np.pi * (X + 2 * Y)), project=True)
        fine = spectral_refine(f, 2)
        Xf, Yf = fine.grid.meshgrid()
        expected = np.sin(2 * np.pi * (Xf + 2 * Yf))
        assert np.max(np.abs(fine.values - (expected - expected.mean()))) <= 1e-12

    def test_preserves_energy_and_mean(self, grid64):
        rng = np.random.default_rng(6)
        f = smooth_random(grid64, rng, kmax=10)
        fine = spectral_refine(f, 2)
        assert abs(fine.mean()) <= 1e-13
        assert abs(dirichlet_energy(fine) - dirichlet_energy(f)) <= 1e-9 * dirichlet_energy(f)


class TestFieldFile:
    def test_roundtrip(self, tmp_path, grid64):
        rng = np.random.default_rng(7)
        f = smooth_random(grid64, rng, kmax=9, scale=2.0)
        path = tmp_path / "field.txt"
        write_field(path, f, extra_comments=["written by test"])
        g = read_field(path)
        assert g.grid.same_layout(f.grid)
        assert np.max(np.abs(g.values - f.values)) <= 1e-15 * f.sup_norm()

    def test_rejects_short_row(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# torus-field nx=8 ny=8 Lx=1 Ly=1\n1 2 3\n")
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_rejects_wrong_row_count(self, tmp_path):
        rows = "\n".join(" ".join("0" for _ in range(8)) for _ in range(5))
        path = tmp_path / "bad.txt"
        path.write_text("# torus-field nx=8 ny=8 Lx=1 Ly=1\n" + rows + "\n")
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 3\n")
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_rejects_non_numeric(self, tmp_path):
        rows = "\n".join(" ".join("x" for _ in range(8)) for _ in range(8))
        path = tmp_path / "bad.txt"
        path.write_text("# torus-field nx=8 ny=8 Lx=1 Ly=1\n" + rows + "\n")
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_rejects_bad_grid_in_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# torus-field nx=7 ny=8 Lx=1 Ly=1\n")
        with pytest.raises(FieldFormatError):
            read_field(path)
