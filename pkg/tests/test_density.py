import numpy as np
import pytest
from scipy import fft as sfft

from d2dplace.density import (
    DensityGrid,
    _cos_series,
    build_density_map,
    density_gradient,
    grid_dims,
    make_grid,
    overflow,
    solve_field,
)
from d2dplace.model import DomainError, PlacementState


def bare_state(x, y, z, w, h, z_max, is_filler=None):
    n = len(x)
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    return PlacementState(
        x=np.asarray(x, dtype=float),
        y=np.asarray(y, dtype=float),
        z=np.asarray(z, dtype=float),
        z_max=z_max,
        partition=np.zeros(n, dtype=np.uint8),
        w_plus=w, h_plus=h, w_minus=w, h_minus=h,
        resolved_w=w.copy(), resolved_h=h.copy(),
        off_x=np.zeros(0), off_y=np.zeros(0),
        is_filler=np.zeros(n, dtype=bool) if is_filler is None
        else np.asarray(is_filler, dtype=bool),
        n_cells=n,
    )


def grid_for(x_max, y_max, z_max, nx=16, ny=16, nz=8):
    return DensityGrid(nx=nx, ny=ny, nz=nz,
                       x_max=x_max, y_max=y_max, z_max=z_max)


class TestGridDims:
    def test_power_of_two_above_sqrt(self):
        assert grid_dims(2700) == 64
        assert grid_dims(5000) == 128
        assert grid_dims(10) == 32      # clamped low
        assert grid_dims(3_000_000) == 1024  # clamped high


class TestBuildDensityMap:
    def test_single_node_filling_one_bin(self):
        g = grid_for(16.0, 16.0, 8.0, nx=16, ny=16, nz=8)
        state = bare_state([3.0], [5.0], [1.0], [1.0], [1.0], 8.0)
        build_density_map(state, g)
        raw = g.rho + (1.0 * 1.0 * 4.0) / g.n_bins  # undo DC removal
        # volume = w*h*d = 4.0 spread along z bins [1..5)
        assert raw[3, 5, 1] == pytest.approx(1.0)
        assert raw[3, 5, 4] == pytest.approx(1.0)
        assert raw.sum() == pytest.approx(4.0)

    def test_straddling_split_30_70(self):
        g = grid_for(16.0, 16.0, 8.0, nx=16, ny=16, nz=8)
        # width = bin width, offset 0.7 into bin 3
        state = bare_state([3.7], [5.0], [0.0], [1.0], [1.0], 8.0)
        build_density_map(state, g)
        vol = 1.0 * 1.0 * 4.0
        raw = g.rho + vol / g.n_bins
        col = raw[:, 5, 0]
        assert col[3] == pytest.approx(0.3 * vol / 4.0)
        assert col[4] == pytest.approx(0.7 * vol / 4.0)

    def test_uniform_tiling_gives_zero_rho(self):
        g = grid_for(8.0, 8.0, 4.0, nx=8, ny=8, nz=4)
        xs, ys = np.meshgrid(np.arange(8.0), np.arange(8.0), indexing="ij")
        # two z-layers of depth z_max/2 tile the full cuboid
        xx = np.tile(xs.ravel(), 2)
        yy = np.tile(ys.ravel(), 2)
        zz = np.repeat([0.0, 2.0], 64)
        n = 128
        state = bare_state(xx, yy, zz, np.ones(n), np.ones(n), 4.0)
        build_density_map(state, g)
        assert np.abs(g.rho).max() < 1e-12

    def test_dc_removed(self):
        rng = np.random.default_rng(0)
        g = grid_for(32.0, 32.0, 8.0, nx=16, ny=16, nz=8)
        n = 40
        state = bare_state(
            rng.uniform(0, 28, n), rng.uniform(0, 28, n),
            rng.uniform(0, 4, n), rng.uniform(1, 3, n), rng.uniform(1, 3, n),
            8.0,
        )
        build_density_map(state, g)
        assert abs(g.rho.sum()) < 1e-6 * g.n_bins

    def test_out_of_region_raises(self):
        g = grid_for(16.0, 16.0, 8.0)
        state = bare_state([15.5], [0.0], [0.0], [1.0], [1.0], 8.0)
        with pytest.raises(DomainError):
            build_density_map(state, g)

    def test_small_node_area_preserved(self):
        g = grid_for(16.0, 16.0, 8.0, nx=8, ny=8, nz=8)  # bins 2x2x1
        state = bare_state([3.0], [3.0], [2.0], [0.5], [0.5], 8.0)
        build_density_map(state, g)
        vol = 0.5 * 0.5 * 4.0
        raw = g.rho + vol / g.n_bins
        assert raw.sum() == pytest.approx(vol)


class TestSolveField:
    def test_eigenmode_closed_form(self):
        nx, ny, nz = 32, 16, 8
        X, Y, Z = 100.0, 80.0, 20.0
        g = grid_for(X, Y, Z, nx, ny, nz)
        xc = (np.arange(nx) + 0.5) * g.bin_x
        w1 = np.pi / X
        rho = np.cos(w1 * xc)[:, None, None] * np.ones((1, ny, nz))
        g.rho = rho - rho.mean()
        solve_field(g)
        phi_exact = rho / w1**2
        ex_exact = np.sin(w1 * xc)[:, None, None] / w1 * np.ones((1, ny, nz))
        assert np.abs(g.phi - phi_exact).max() < 1e-6 * np.abs(phi_exact).max()
        assert np.abs(g.ex - ex_exact).max() < 1e-6 * np.abs(ex_exact).max()
        assert np.abs(g.ey).max() < 1e-12
        assert np.abs(g.ez).max() < 1e-12

    def test_zero_rho(self):
        g = grid_for(10.0, 10.0, 10.0, 8, 8, 8)
        g.rho = np.zeros((8, 8, 8))
        solve_field(g)
        assert np.all(g.phi == 0)
        assert np.all(g.ex == 0) and np.all(g.ey == 0) and np.all(g.ez == 0)

    def test_spectral_laplacian_inverse(self):
        rng = np.random.default_rng(1)
        for _ in range(3):
            nx = ny = nz = 32
            X, Y, Z = 50.0, 70.0, 30.0
            g = grid_for(X, Y, Z, nx, ny, nz)
            rho = rng.normal(size=(nx, ny, nz))
            rho -= rho.mean()
            g.rho = rho
            solve_field(g)
            wx = np.arange(nx)[:, None, None] * np.pi / X
            wy = np.arange(ny)[None, :, None] * np.pi / Y
            wz = np.arange(nz)[None, None, :] * np.pi / Z
            denom = wx**2 + wy**2 + wz**2
            b = sfft.dctn(g.phi, type=2) / (8 * nx * ny * nz)
            lap = _cos_series(_cos_series(_cos_series(-denom * b, 0), 1), 2)
            err = np.abs(lap + rho).max() / np.abs(rho).max()
            assert err < 1e-8

    def test_neumann_walls(self):
        # the sine series vanishes identically on the boundary planes
        rng = np.random.default_rng(2)
        nx = ny = nz = 16
        X = Y = Z = 10.0
        g = grid_for(X, Y, Z, nx, ny, nz)
        rho = rng.normal(size=(nx, ny, nz))
        g.rho = rho - rho.mean()
        solve_field(g)
        a = g.coeffs
        wx = np.arange(nx) * np.pi / X
        wy = np.arange(ny)[None, :, None] * np.pi / Y
        wz = np.arange(nz)[None, None, :] * np.pi / Z
        denom = (wx[:, None, None] ** 2 + wy**2 + wz**2)
        denom[0, 0, 0] = 1.0
        t = a * wx[:, None, None] / denom
        scale = max(np.abs(g.ex).max(), 1e-30)
        for xb in (0.0, X):
            # E_x(xb, y, z) = sum_j t_j sin(w_j xb) * (cos terms)
            vals = np.sin(wx * xb) @ t.reshape(nx, -1)
            assert np.abs(vals).max() / scale < 1e-6

    def test_field_is_minus_grad_phi(self):
        rng = np.random.default_rng(3)
        nx = ny = 32
        nz = 32
        X = Y = Z = 64.0
        g = grid_for(X, Y, Z, nx, ny, nz)
        # smooth density so central differences converge
        xc = (np.arange(nx) + 0.5) * g.bin_x
        yc = (np.arange(ny) + 0.5) * g.bin_y
        zc = (np.arange(nz) + 0.5) * g.bin_z
        rho = (
            np.cos(np.pi * xc / X)[:, None, None]
            * np.cos(2 * np.pi * yc / Y)[None, :, None]
            * np.cos(np.pi * zc / Z)[None, None, :]
        )
        g.rho = rho - rho.mean()
        solve_field(g)
        gx = -np.gradient(g.phi, xc, axis=0)
        scale = np.abs(g.ex).max()
        interior = np.abs(gx[2:-2] - g.ex[2:-2]).max()
        assert interior / scale < 0.02


class TestDensityGradient:
    def test_centered_node_feels_no_force(self):
        g = grid_for(16.0, 16.0, 8.0, 16, 16, 16)
        state = bare_state([7.0], [7.0], [2.0], [2.0], [2.0], 8.0)
        build_density_map(state, g)
        solve_field(g)
        fx, fy, fz = density_gradient(state, g)
        q = 2.0 * 2.0 * 4.0
        emax = max(np.abs(g.ex).max(), np.abs(g.ey).max(),
                   np.abs(g.ez).max())
        assert abs(fx[0]) < 1e-3 * q * emax
        assert abs(fy[0]) < 1e-3 * q * emax
        assert abs(fz[0]) < 1e-3 * q * emax

    def test_mirrored_nodes_repel(self):
        g = grid_for(16.0, 16.0, 8.0, 16, 16, 8)
        # close mirrored pair (gap 2) far from the walls (gap 5 each)
        state = bare_state([5.0, 9.0], [7.0, 7.0], [2.0, 2.0],
                           [2.0, 2.0], [2.0, 2.0], 8.0)
        build_density_map(state, g)
        solve_field(g)
        fx, _, _ = density_gradient(state, g)
        assert fx[0] < 0 < fx[1]  # pushed apart
        assert abs(fx[0] + fx[1]) / abs(fx[0]) < 1e-6

    def test_force_matches_energy_finite_difference(self):
        # smooth background blob plus a small probe; stepping the probe by
        # whole bins cancels its self-energy ripple in the central
        # difference, leaving the background-field work
        X, Z = 32.0, 16.0
        nb = 64

        def mkstate(px):
            return bare_state(
                [6.0, px], [6.0, 20.0], [4.0, 6.0],
                [20.0, 2.0], [20.0, 2.0], Z,
            )

        def energy(st):
            from d2dplace import kernels

            gg = grid_for(X, X, Z, nb, nb, nb)
            build_density_map(st, gg)
            solve_field(gg)
            depth = np.full(st.n_nodes, st.depth)
            p, _, _ = kernels.gather3d(
                st.x, st.y, st.z, st.resolved_w, st.resolved_h, depth,
                gg.phi, gg.phi, gg.phi, gg.bin_x, gg.bin_y, gg.bin_z,
            )
            q = st.resolved_w * st.resolved_h * st.depth
            return 0.5 * float((q * p).sum())

        h = X / nb  # one bin
        for px in (12.0, 21.0):
            st = mkstate(px)
            g = grid_for(X, X, Z, nb, nb, nb)
            build_density_map(st, g)
            solve_field(g)
            fx, _, _ = density_gradient(st, g)
            dE = (energy(mkstate(px + h)) - energy(mkstate(px - h))) / (2 * h)
            assert fx[1] == pytest.approx(-dE, rel=1e-3)


class TestOverflow:
    def test_empty_placement(self):
        g = grid_for(16.0, 16.0, 8.0)
        state = bare_state([], [], [], [], [], 8.0)
        from d2dplace.gen import generate_design
        design = generate_design(10, seed=1)
        build_density_map(state, g)
        assert overflow(state, g, design) == 0.0

    def test_stacked_cells_overflow_near_one(self):
        from d2dplace.gen import generate_design
        design = generate_design(10, seed=1)
        X = design.top_die.x_max
        g = DensityGrid(nx=8, ny=8, nz=8, x_max=X, y_max=X, z_max=8.0)
        n = 50
        state = bare_state(
            np.full(n, X / 2), np.full(n, X / 2), np.full(n, 2.0),
            np.full(n, 2.0), np.full(n, 2.0), 8.0,
        )
        build_density_map(state, g)
        assert overflow(state, g, design) > 0.8

    def test_spread_legal_placement_low_overflow(self):
        from d2dplace.gen import generate_design
        design = generate_design(10, seed=1)
        side = design.top_die.x_max
        g = DensityGrid(nx=8, ny=8, nz=8, x_max=side, y_max=side, z_max=8.0)
        # uniform sparse grid of unit cells at 25% utilization
        step = side / 10
        xs, ys = np.meshgrid(np.arange(10) * step, np.arange(10) * step,
                             indexing="ij")
        n = 100
        state = bare_state(
            xs.ravel(), ys.ravel(), np.zeros(n),
            np.full(n, step / 2), np.full(n, step / 2), 8.0,
        )
        build_density_map(state, g)
        assert overflow(state, g, design) < 0.05

    def test_fillers_excluded_from_numerator(self):
        from d2dplace.gen import generate_design
        design = generate_design(10, seed=1)
        X = design.top_die.x_max
        g = DensityGrid(nx=8, ny=8, nz=8, x_max=X, y_max=X, z_max=8.0)
        n = 50
        state = bare_state(
            np.full(n, X / 2), np.full(n, X / 2), np.full(n, 2.0),
            np.full(n, 2.0), np.full(n, 2.0), 8.0,
            is_filler=np.ones(n, dtype=bool),
        )
        build_density_map(state, g)
        assert overflow(state, g, design) == 0.0
