"""Direct Volterra formulation.

Per mode k the solver advances

    u_k'' + lambda_k * [alpha*u_k - (mu * u_k)(t) - F0_k(t)] = 0

with trapezoidal convolution quadrature (kernel at cell midpoints) and
Stoermer-Verlet for the second-order part. The past enters only through the
sampled state function F0; the original history never appears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .kernel import Kernel
from .spectral import ModalOperator
from .trajectory import Trajectory

__all__ = ["InitialState", "solve_direct", "cfl_limit"]


@dataclass
class InitialState:
    u0: np.ndarray            # (N,) coefficients, element of V
    v0: np.ndarray            # (N,) element of H
    F0: np.ndarray            # (N, J+1) samples of the state function


def cfl_limit(op: ModalOperator, k: Kernel) -> float:
    """Largest stable step of the explicit scheme: dt^2 * lambda_N * alpha < 4."""
    return float(2.0 / np.sqrt(op.lambdas[-1] * k.alpha))


def solve_direct(
    state: InitialState,
    op: ModalOperator,
    k: Kernel,
    T: float,
    dt: float,
) -> Trajectory:
    if dt <= 0:
        raise ValueError("dt must be positive")
    J = int(round(T / dt))
    if abs(J * dt - T) > 1e-9 * max(T, dt):
        raise ValueError("dt must divide T")
    if dt * dt * op.lambdas[-1] * k.alpha >= 4.0:
        raise ValueError(
            f"explicit scheme unstable: dt must stay below {cfl_limit(op, k):.3g}"
        )
    u0 = np.asarray(state.u0, dtype=float)
    v0 = np.asarray(state.v0, dtype=float)
    F0 = np.atleast_2d(np.asarray(state.F0, dtype=float))
    if u0.shape != (op.N,) or v0.shape != (op.N,):
        raise ValueError("initial data must have one coefficient per mode")
    if F0.shape != (op.N, J + 1):
        raise ValueError(
            f"F0 must be sampled at every step: expected {(op.N, J + 1)}, got {F0.shape}"
        )
    w_conv = dt * k.mu((np.arange(J) + 0.5) * dt)
    u, v = _accel.direct_march(u0, v0, F0, op.lambdas, k.alpha, w_conv, dt)
    times = np.arange(J + 1) * dt
    lam = op.lambdas[:, None]
    energy = 0.5 * (np.sum(lam * u**2, axis=0) + np.sum(v**2, axis=0))
    return Trajectory(
        times=times, u=u, v=v, diagnostics={"wave_energy": energy, "dt": dt}
    )
