"""Dafermos history formulation.

The history variable eta^t(s) = u(t) - u(t-s) evolves by right translation
plus a spatially constant source. On the aligned grid (cell width = dt,
values stored at the right nodes s_i = (i+1)*dt) the translation step is an
exact index shift and the source is the exact increment u_{j+1} - u_j, so
the representation eta^t(s) = u(t) - u(t-s) holds to machine precision
along the discrete march.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .kernel import Kernel
from .spectral import Grid, ModalOperator, WeightedField, node_grid
from .trajectory import Trajectory

__all__ = [
    "ExtendedHistoryVector",
    "history_grid",
    "init_history",
    "evolve_history",
    "history_source_samples",
]


@dataclass
class ExtendedHistoryVector:
    u: np.ndarray
    v: np.ndarray
    eta: WeightedField           # weight mu, right-node grid


def history_grid(k: Kernel, T: float, dt: float) -> Grid:
    """Aligned grid for the history field: width dt, length
    min(ell, L_trunc + T) so that nothing relevant shifts off the far end."""
    L = min(k.ell, k.L_trunc + T)
    n = int(round(L / dt))
    return node_grid(n * dt, n)


def init_history(u0: np.ndarray, phi0: np.ndarray, grid: Grid) -> WeightedField:
    """eta0(s) = u0 - phi0(s), per mode and cell."""
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    phi0 = np.atleast_2d(np.asarray(phi0, dtype=float))
    if phi0.shape != (u0.size, grid.n):
        raise ValueError("phi0 must be sampled on the eta grid, one row per mode")
    return WeightedField(u0[:, None] - phi0, grid, "mu")


def evolve_history(
    zbar: ExtendedHistoryVector,
    op: ModalOperator,
    k: Kernel,
    T: float,
    dt: float,
    stride: int = 1,
    snapshot_times=(),
    freeze_wave: bool = False,
):
    """March the system for J = T/dt steps.

    Returns (Trajectory, final ExtendedHistoryVector). Diagnostics carry the
    total energy E and the three squared norm components at `stride` spacing,
    plus requested eta snapshots. With freeze_wave the (u, v) update is
    disabled (transport-only evolution)."""
    grid = zbar.eta.grid
    if abs(grid.width - dt) > 1e-12 * dt:
        raise ValueError("history grid must be aligned: cell width == dt")
    J = int(round(T / dt))
    if abs(J * dt - T) > 1e-9 * max(T, dt):
        raise ValueError("dt must divide T")
    u0 = np.asarray(zbar.u, dtype=float)
    v0 = np.asarray(zbar.v, dtype=float)
    lam = op.lambdas
    if freeze_wave:
        lam = np.zeros_like(lam)
        v0 = np.zeros_like(v0)
    s = grid.points
    h = grid.width
    # bracket quadrature int mu*eta: mu at cell midpoints, trapezoid in eta
    wq = h * k.mu(s - 0.5 * h)
    bw = np.empty(grid.n)
    bw[:-1] = 0.5 * (wq[:-1] + wq[1:])
    bw[-1] = 0.5 * wq[-1]
    wnorm = h * k.mu(s)

    snap_steps = sorted({int(round(t / dt)) for t in snapshot_times})
    if any(abs(sj * dt - t) > 1e-9 for sj, t in zip(snap_steps, sorted(set(snapshot_times)))):
        raise ValueError("snapshot times must lie on the time grid")
    bounds = [0] + [sj for sj in snap_steps if 0 < sj < J] + [J]

    eta = zbar.eta.values.copy()
    u_parts, v_parts, f2_parts = [], [], []
    snapshots = {}
    ucur, vcur = u0, v0
    for seg, (j0, j1) in enumerate(zip(bounds[:-1], bounds[1:])):
        nj = j1 - j0
        u, v, eta, field2 = _accel.history_march(
            ucur, vcur, eta, lam, bw, wnorm, dt, nj, stride
        )
        keep = slice(0, None) if seg == 0 else slice(1, None)
        u_parts.append(u[:, keep])
        v_parts.append(v[:, keep])
        f2_parts.append(field2 if seg == 0 else field2[1:])
        ucur, vcur = u[:, -1], v[:, -1]
        if j1 in snap_steps:
            snapshots[j1 * dt] = WeightedField(eta.copy(), grid, "mu")

    u = np.concatenate(u_parts, axis=1)
    v = np.concatenate(v_parts, axis=1)
    field2 = np.concatenate(f2_parts, axis=0)
    times = np.arange(J + 1) * dt
    # segment boundaries restart the stride counter; recorded rows follow it
    rec_steps = _recorded_steps(bounds, stride)
    rec_times = np.asarray(rec_steps) * dt
    lam_full = op.lambdas
    eta_n2 = field2 @ lam_full
    u_v2 = np.sum(lam_full[:, None] * u[:, rec_steps] ** 2, axis=0)
    v_h2 = np.sum(v[:, rec_steps] ** 2, axis=0)
    energy = 0.5 * (u_v2 + v_h2 + eta_n2)
    traj = Trajectory(
        times=times,
        u=u,
        v=v,
        diagnostics={
            "dt": dt,
            "energy_times": rec_times,
            "E": energy,
            "u_V2": u_v2,
            "v_H2": v_h2,
            "field_norm2": eta_n2,
            "snapshots": snapshots,
        },
    )
    final = ExtendedHistoryVector(
        u=u[:, -1].copy(), v=v[:, -1].copy(), eta=WeightedField(eta, grid, "mu")
    )
    return traj, final


def history_source_samples(phi0_nodes: np.ndarray, grid: Grid, k: Kernel, J: int) -> np.ndarray:
    """Samples F(t_j) = int mu(t_j + s) phi0(s) ds for j = 0..J.

    phi0_nodes is (N, n+1): the past history at the nodes 0, h, ..., n*h,
    left endpoint included. The quadrature is the marcher's bracket rule
    (kernel at cell midpoints, trapezoid in phi0), so a direct run driven by
    these samples reproduces the history run up to the kernel's truncation
    and mass-quadrature error."""
    phi0_nodes = np.atleast_2d(np.asarray(phi0_nodes, dtype=float))
    n = grid.n
    if phi0_nodes.shape[1] != n + 1:
        raise ValueError("phi0 must carry n+1 node samples, s = 0 included")
    h = grid.width
    wq = h * k.mu((np.arange(n) + 0.5) * h)
    psi = 0.5 * (phi0_nodes[:, :-1] + phi0_nodes[:, 1:])
    # F_j = sum_p wq[j + p] * psi_p; kernel weight vanishes past the grid
    from scipy.signal import fftconvolve

    wq_ext = np.concatenate([wq, np.zeros(J)])
    full = fftconvolve(psi[:, ::-1], wq_ext[None, :], axes=1)
    return full[:, n - 1 : n + J]


def _recorded_steps(bounds, stride):
    steps = [0]
    for j0, j1 in zip(bounds[:-1], bounds[1:]):
        steps.extend(j0 + m for m in range(stride, j1 - j0 + 1, stride))
    return steps
