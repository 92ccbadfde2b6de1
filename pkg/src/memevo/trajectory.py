"""Shared trajectory container and CSV export."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import ModalOperator

CSV_HEADER = "# memevo-csv v1"

__all__ = ["Trajectory", "CSV_HEADER", "write_trajectory_csv", "write_energy_csv"]


@dataclass
class Trajectory:
    times: np.ndarray           # (J+1,)
    u: np.ndarray               # (N, J+1)
    v: np.ndarray               # (N, J+1)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape[1] != self.times.size:
            raise ValueError("trajectory arrays must have matching shapes")

    @property
    def final_u(self) -> np.ndarray:
        return self.u[:, -1]

    @property
    def final_v(self) -> np.ndarray:
        return self.v[:, -1]

    def norms(self, op: ModalOperator):
        """Per-step H and V norms of u and the H norm of v."""
        lam = op.lambdas[:, None]
        return {
            "u_H": np.sqrt(np.sum(self.u**2, axis=0)),
            "u_V": np.sqrt(np.sum(lam * self.u**2, axis=0)),
            "v_H": np.sqrt(np.sum(self.v**2, axis=0)),
        }


def write_trajectory_csv(path, traj: Trajectory, op: ModalOperator, header_lines=()):
    """Columns: t, mode, u, v; followed by summary rows with H/V norms."""
    nrm = traj.norms(op)
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t,mode,u,v\n")
        for j, t in enumerate(traj.times):
            for k in range(traj.u.shape[0]):
                fh.write(f"{t:.12g},{k + 1},{traj.u[k, j]:.17g},{traj.v[k, j]:.17g}\n")
        fh.write("# summary: t,u_H,u_V,v_H\n")
        for j, t in enumerate(traj.times):
            fh.write(
                f"# {t:.12g},{nrm['u_H'][j]:.17g},{nrm['u_V'][j]:.17g},{nrm['v_H'][j]:.17g}\n"
            )


def write_energy_csv(path, times, energy, rate_quad=None, rate_fd=None, header_lines=()):
    """Columns: t, E, rate_quadrature, rate_fd (empty when unavailable)."""
    times = np.asarray(times)
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t,E,rate_quadrature,rate_fd\n")
        for j, t in enumerate(times):
            rq = "" if rate_quad is None else f"{rate_quad[j]:.17g}"
            rf = ""
            if rate_fd is not None and np.isfinite(rate_fd[j]):
                rf = f"{rate_fd[j]:.17g}"
            fh.write(f"{t:.12g},{energy[j]:.17g},{rq},{rf}\n")
