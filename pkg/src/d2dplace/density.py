"""Electrostatics density model on a 3D bin grid.

Nodes are positive charges; the potential solves the Poisson equation
with zero-flux (Neumann) walls, so the spectral basis is cosines at bin
centers. scipy's real transforms give the expansion in O(N log N):

    a_jkl = (1/N) sum rho cos(w_j x) cos(w_k y) cos(w_l z)      (DCT-II)
    phi   = sum_{jkl != 0} a_jkl / (w_j^2+w_k^2+w_l^2) cos cos cos
    E_u   = same series with a w_u factor and a sine along axis u

with omega_j = j pi / extent. The DC coefficient is removed, matching
the zero-mean density constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import kernels
from .model import Design, DomainError, PlacementState


@dataclass
class DensityGrid:
    nx: int
    ny: int
    nz: int
    x_max: float
    y_max: float
    z_max: float
    rho: np.ndarray | None = None       # DC-removed charge per bin
    rho_raw: np.ndarray | None = None   # movable-only volumes, no DC shift
    phi: np.ndarray | None = None
    ex: np.ndarray | None = None
    ey: np.ndarray | None = None
    ez: np.ndarray | None = None
    coeffs: np.ndarray | None = None    # spectral density coefficients

    @property
    def bin_x(self) -> float:
        return self.x_max / self.nx

    @property
    def bin_y(self) -> float:
        return self.y_max / self.ny

    @property
    def bin_z(self) -> float:
        return self.z_max / self.nz

    @property
    def bin_volume(self) -> float:
        return self.bin_x * self.bin_y * self.bin_z

    @property
    def n_bins(self) -> int:
        return self.nx * self.ny * self.nz


def grid_dims(n_movable: int, nz: int = 32, lo: int = 32, hi: int = 1024) -> int:
    """Planar bin count: smallest power of two >= sqrt(#movable cells)."""
    target = max(1.0, np.sqrt(max(n_movable, 1)))
    n = 1
    while n < target:
        n *= 2
    return int(np.clip(n, lo, hi))


def make_grid(design: Design, z_max: float, n_movable: int,
              nz: int = 32, nxy: int | None = None) -> DensityGrid:
    n = nxy if nxy is not None else grid_dims(n_movable)
    return DensityGrid(
        nx=n, ny=n, nz=nz,
        x_max=design.top_die.x_max,
        y_max=design.top_die.y_max,
        z_max=z_max,
    )


def build_density_map(state: PlacementState, grid: DensityGrid) -> DensityGrid:
    """Fill rho with node volumes splatted by overlap, then remove the DC.

    Raises if any node box leaves the placement cuboid; clamping is the
    optimizer's job, not the density model's.
    """
    eps = 1e-9
    bad = (
        (state.x < -eps)
        | (state.y < -eps)
        | (state.z < -eps)
        | (state.x + state.resolved_w > grid.x_max + eps)
        | (state.y + state.resolved_h > grid.y_max + eps)
        | (state.z + state.depth > grid.z_max + eps)
    )
    if bad.any():
        i = int(np.argmax(bad))
        raise DomainError(f"node #{i} outside the placement region")
    depth = np.full(state.n_nodes, state.depth)
    rho, rho_mov = kernels.splat3d(
        state.x, state.y, state.z,
        state.resolved_w, state.resolved_h, depth,
        ~state.is_filler,
        grid.nx, grid.ny, grid.nz,
        grid.bin_x, grid.bin_y, grid.bin_z,
    )
    grid.rho_raw = rho_mov
    grid.rho = rho - rho.mean()
    return grid


def _omega(n: int, extent: float) -> np.ndarray:
    return np.arange(n) * np.pi / extent


def _cos_series(b: np.ndarray, axis: int) -> np.ndarray:
    # sum_k b_k cos(w_k u_n) at bin centers == DCT-III along the axis
    return sfft.dct(b, type=3, axis=axis)


def _sin_series(t: np.ndarray, axis: int) -> np.ndarray:
    # sum_{k>=1} t_k sin(w_k u_n): drop k=0, pad a zero, DST-III
    t = np.moveaxis(t, axis, 0)
    shifted = np.concatenate([t[1:], np.zeros_like(t[:1])], axis=0)
    out = sfft.dst(shifted, type=3, axis=0)
    return np.moveaxis(out, 0, axis)


def solve_field(grid: DensityGrid, with_phi: bool = True) -> DensityGrid:
    """Solve the Poisson problem spectrally; fills coeffs, phi and E.

    `with_phi=False` skips the potential synthesis (the optimization loop
    only needs the field).
    """
    rho = grid.rho
    if rho is None:
        raise ValueError("density map not built")
    n = grid.n_bins
    a = sfft.dctn(rho, type=2) / (8.0 * n)
    wx = _omega(grid.nx, grid.x_max)[:, None, None]
    wy = _omega(grid.ny, grid.y_max)[None, :, None]
    wz = _omega(grid.nz, grid.z_max)[None, None, :]
    denom = wx**2 + wy**2 + wz**2
    denom[0, 0, 0] = 1.0
    b = a / denom
    b[0, 0, 0] = 0.0
    grid.coeffs = a
    if with_phi:
        grid.phi = _cos_series(_cos_series(_cos_series(b, 0), 1), 2)
    grid.ex = _cos_series(_cos_series(_sin_series(b * wx, 0), 1), 2)
    grid.ey = _cos_series(_cos_series(_sin_series(b * wy, 1), 0), 2)
    grid.ez = _cos_series(_cos_series(_sin_series(b * wz, 2), 0), 1)
    return grid


def density_gradient(state: PlacementState, grid: DensityGrid):
    """Per-node force: charge times the field averaged over the node box.

    The density term's contribution to the objective gradient is -lambda
    times this force.
    """
    if grid.ex is None:
        raise ValueError("field not solved")
    depth = np.full(state.n_nodes, state.depth)
    fx, fy, fz = kernels.gather3d(
        state.x, state.y, state.z,
        state.resolved_w, state.resolved_h, depth,
        grid.ex, grid.ey, grid.ez,
        grid.bin_x, grid.bin_y, grid.bin_z,
    )
    q = state.resolved_w * state.resolved_h * state.depth
    return q * fx, q * fy, q * fz


def overflow(state: PlacementState, grid: DensityGrid, design: Design) -> float:
    """Normalized movable-cell volume exceeding per-slab capacity.

    Slabs below the mid-plane use the bottom die's utilization target,
    slabs above use the top die's. Fillers never count toward the excess.
    """
    if grid.rho_raw is None:
        raise ValueError("density map not built")
    total = float(grid.rho_raw.sum())
    if total <= 0:
        return 0.0
    zc = (np.arange(grid.nz) + 0.5) * grid.bin_z
    target = np.where(
        zc < grid.z_max / 2.0,
        design.bottom_die.max_util,
        design.top_die.max_util,
    )
    cap = target[None, None, :] * grid.bin_volume
    excess = np.clip(grid.rho_raw - cap, 0.0, None)
    return float(excess.sum() / total)
