"""Structural maps between histories, states, and state functions.

* Lambda: past history phi  ->  state function F(t) = int mu(t+s) phi(s) ds
* Gamma:  proper state xi   ->  state function F(t) = -int_t^ell xi
* Pi:     history eta       ->  proper state  -int mu'(tau+s) eta(s) ds
* proper_initial_state: (u0, F0) -> xi0 = mu*u0 + DF0
* zeta_from_xi: right-tail integral int_tau0^ell xi = zeta(tau0)

All quadratures are midpoint-in-s. When the source and target grids share
the cell width the double sums collapse onto a 1-d lattice of kernel
samples and are evaluated by FFT correlation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve

from .kernel import Kernel
from .spectral import Grid, ModalOperator, WeightedField, midpoint_grid, weighted_norm
from .trajectory import CSV_HEADER

__all__ = [
    "PastHistory",
    "StateFunction",
    "ProperState",
    "lambda_map",
    "gamma_map",
    "pi_map",
    "proper_initial_state",
    "zeta_from_xi",
    "classify_limit_behavior",
    "read_state_function_csv",
    "write_state_function_csv",
]


@dataclass
class PastHistory:
    phi: np.ndarray                  # (N, G) samples on grid
    grid: Grid
    integrability_tag: str = "L1mu"  # or 'general'

    def __post_init__(self):
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        if self.phi.shape[1] != self.grid.n:
            raise ValueError("phi must be sampled on its grid")


@dataclass
class StateFunction:
    t_grid: np.ndarray
    F: np.ndarray                    # (N, nt)
    class_tag: Optional[str] = None  # 'limit-exists' | 'bounded-no-limit' | 'unbounded'
    deriv: Optional[Callable] = None  # analytic derivative t -> (N,) when known

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if self.F.shape[1] != self.t_grid.size:
            raise ValueError("F must be sampled on t_grid")


@dataclass
class ProperState:
    xi: WeightedField
    F: StateFunction


def _lattice_corr(samples: np.ndarray, field: np.ndarray, n_out: int) -> np.ndarray:
    """out[i] = sum_j samples[i + j] * field[:, j], via FFT."""
    g = field.shape[1]
    full = fftconvolve(field[:, ::-1], samples[None, :], axes=1)
    return full[:, g - 1 : g - 1 + n_out]


def _aligned(width_a: float, width_b: float) -> bool:
    return abs(width_a - width_b) <= 1e-12 * max(width_a, width_b)


def lambda_map(
    phi: PastHistory,
    k: Kernel,
    t_grid: np.ndarray,
    classify: bool = True,
) -> StateFunction:
    """Midpoint quadrature of F(t) = int mu(t+s) phi(s) ds on t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    h = phi.grid.width
    s = phi.grid.points
    uniform_t = t_grid.size > 1 and np.allclose(np.diff(t_grid), h, rtol=1e-10)
    if uniform_t and _aligned(h, h):
        c = t_grid[0] + s[0]
        m = np.arange(t_grid.size + s.size - 1)
        d = k.mu(c + m * h)
        F = h * _lattice_corr(d, phi.phi, t_grid.size)
    else:
        F = np.empty((phi.phi.shape[0], t_grid.size))
        for j, t in enumerate(t_grid):
            F[:, j] = h * (phi.phi @ k.mu(t + s))
    tag = None
    if classify:
        def ev(t):
            return h * (phi.phi @ k.mu(t + s))

        tag = classify_limit_behavior(ev)
    big = np.max(np.abs(F)) if F.size else 0.0
    if not np.all(np.isfinite(F)) or big > 1e12:
        warnings.warn("state-function quadrature diverges; tagging as unbounded")
        tag = "unbounded"
    return StateFunction(t_grid=t_grid, F=F, class_tag=tag)


def gamma_map(xi: WeightedField, t_grid: np.ndarray) -> StateFunction:
    """F(t) = -int_t^ell xi by right-tail midpoint sums; cells whose midpoint
    exceeds t contribute. Vanishes for t past the grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    h = xi.grid.width
    tails = h * np.concatenate(
        [np.cumsum(xi.values[:, ::-1], axis=1)[:, ::-1], np.zeros((xi.values.shape[0], 1))],
        axis=1,
    )
    idx = np.searchsorted(xi.grid.points, t_grid, side="left")
    return StateFunction(t_grid=t_grid, F=-tails[:, idx])


def pi_map(
    eta: WeightedField,
    k: Kernel,
    op: ModalOperator,
    tau_grid: Optional[Grid] = None,
    check_contraction: bool = True,
) -> ProperState:
    """Pi eta(tau) = -int mu'(tau+s) eta(s) ds, a proper state with
    ||Pi eta||_V-weighted <= ||eta||_mu-weighted (equality on constants)."""
    h = eta.grid.width
    if tau_grid is None:
        n = int(round(min(k.ell, k.L_trunc) / h))
        tau_grid = midpoint_grid(n * h, n)
    s = eta.grid.points
    tau = tau_grid.points
    if _aligned(tau_grid.width, h):
        c = tau[0] + s[0]
        m = np.arange(tau.size + s.size - 1)
        d = k.dmu(c + m * h)
        vals = -h * _lattice_corr(d, eta.values, tau.size)
    else:
        vals = np.empty((eta.values.shape[0], tau.size))
        for i, t in enumerate(tau):
            vals[:, i] = -h * (eta.values @ k.dmu(t + s))
    xi = WeightedField(vals, tau_grid, "nu")
    if check_contraction:
        n_xi = weighted_norm(xi, op, k)
        n_eta = weighted_norm(eta, op, k)
        if n_xi > n_eta + 1e-10:
            raise AssertionError(
                f"Pi must be a contraction: ||Pi eta|| = {n_xi} > ||eta|| = {n_eta}"
            )
    t_nodes = np.arange(tau.size + 1) * tau_grid.width + (tau[0] - 0.5 * tau_grid.width)
    return ProperState(xi=xi, F=gamma_map(xi, t_nodes))


def proper_initial_state(
    u0: np.ndarray,
    F0: StateFunction,
    k: Kernel,
    grid: Grid,
    op: Optional[ModalOperator] = None,
) -> WeightedField:
    """xi0(tau) = mu(tau) u0 + DF0(tau) on a midpoint grid.

    DF0 comes from the analytic derivative when the state function carries
    one, otherwise from centered differences of its samples (exact midpoint
    differences when the sample grid interleaves the tau grid)."""
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    tau = grid.points
    if F0.deriv is not None:
        df = np.column_stack([np.asarray(F0.deriv(t), dtype=float) for t in tau])
    else:
        t = F0.t_grid
        if t.size < 2:
            raise ValueError("need at least two F0 samples to differentiate")
        mid = 0.5 * (t[:-1] + t[1:])
        dsamp = (F0.F[:, 1:] - F0.F[:, :-1]) / np.diff(t)
        if tau[-1] > t[-1] + 0.5 * grid.width:
            raise ValueError("F0 samples do not cover the state grid")
        df = np.empty((F0.F.shape[0], tau.size))
        for row in range(df.shape[0]):
            df[row] = np.interp(tau, mid, dsamp[row])
    if not np.all(np.isfinite(df)):
        raise ValueError("non-finite derivative samples in F0")
    vals = k.mu(tau)[None, :] * u0[:, None] + df
    field = WeightedField(vals, grid, "nu")
    if op is not None:
        n2 = weighted_norm(field, op, k)
        if not np.isfinite(n2) or n2 > 1e12 * (np.max(np.abs(u0)) + 1.0):
            warnings.warn(
                "assembled state has a diverging weighted norm: F0 does not "
                "look like the tail integral of any proper state"
            )
    return field


def zeta_from_xi(xi: WeightedField, tau0: float) -> np.ndarray:
    """zeta(tau0) = int_tau0^ell xi(tau) dtau by right-tail quadrature."""
    if tau0 < 0 or tau0 >= xi.grid.length:
        raise ValueError("tau0 must lie in [0, ell_eff)")
    mask = xi.grid.points > tau0
    return xi.grid.width * xi.values[:, mask].sum(axis=1)


def classify_limit_behavior(
    evaluator: Callable[[float], np.ndarray],
    t_start: float = 0.1,
    levels: int = 15,
    limit_rtol: float = 1e-4,
) -> str:
    """Classify the t -> 0 behavior of a state function from samples at
    t_k = t_start * 2^-k.

    Numerical evidence only, per these thresholds: the limit is declared to
    exist when the last four successive variations fall below limit_rtol
    times the sweep scale, or when they shrink geometrically (each at most
    0.6 of the one before) with the final one below that threshold;
    divergence is declared when the norms increase strictly through the
    final eight levels with non-vanishing increments (this also catches
    logarithmic blow-up); anything else is reported as bounded without a
    limit.
    """
    ts = t_start * 0.5 ** np.arange(levels)
    vals = np.stack([np.atleast_1d(np.asarray(evaluator(t), dtype=float)) for t in ts])
    norms = np.max(np.abs(vals), axis=1)
    scale = float(np.max(norms))
    if scale == 0.0:
        return "limit-exists"
    diffs = np.max(np.abs(vals[1:] - vals[:-1]), axis=1)
    tail4 = diffs[-4:]
    if np.all(tail4 < limit_rtol * scale) or (
        np.all(tail4[1:] <= 0.6 * tail4[:-1]) and tail4[-1] < limit_rtol * scale
    ):
        return "limit-exists"
    incs = norms[1:] - norms[:-1]
    tail = incs[-8:]
    if np.all(tail > 0) and tail[-1] > 0.3 * np.max(tail):
        return "unbounded"
    return "bounded-no-limit"


def write_state_function_csv(path, sf: StateFunction):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.write("t,mode,value\n")
        for j, t in enumerate(sf.t_grid):
            for krow in range(sf.F.shape[0]):
                fh.write(f"{t:.12g},{krow + 1},{sf.F[krow, j]:.17g}\n")


def read_state_function_csv(path) -> StateFunction:
    ts, modes, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("t,"):
                continue
            a, b, c = line.split(",")
            ts.append(float(a))
            modes.append(int(b))
            vals.append(float(c))
    t_grid = np.unique(np.asarray(ts))
    n = max(modes)
    F = np.zeros((n, t_grid.size))
    pos = {t: j for j, t in enumerate(t_grid)}
    for t, m, v in zip(ts, modes, vals):
        F[m - 1, pos[t]] = v
    return StateFunction(t_grid=t_grid, F=F)
