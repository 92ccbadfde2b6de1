"""Lyapunov machinery: energy functionals, differential inequalities, and
empirical decay rates.

Along a state-formulation trajectory with energy

    E = (1/2)(||u||_V^2 + ||v||_H^2 + ||xi||_nu^2)

the auxiliary functionals are

    Phi_1 = -int rho(tau) <v, xi(tau)>_H dtau,   rho = min(tau/beta, 1)
    Phi_2 = <v, u>_H
    Phi   = (3/M(beta)) Phi_1 + Phi_2
    Psi   = E + eps*Phi

and the verified differential inequalities, with margins reported as
(right side) - (left side) so nonnegative means satisfied:

    dE/dt     <= -(delta/2) ||xi||_nu^2              (needs mu' + delta*mu <= 0)
    dPhi_1/dt <= M(beta) { (1/12)||u||_V^2 - (1/2)||v||_H^2 + c1 ||xi||_nu^2 }
    dPhi_2/dt <= -(3/4)||u||_V^2 + ||v||_H^2 + M(0) ||xi||_nu^2
    dPhi/dt + E <= c2 ||xi||_nu^2
    |Phi|     <= c3 E                                 (pointwise, no derivative)

Constants, assembled from the Cauchy-Schwarz chains behind the inequalities
(so tests can recompute them independently):

    c0 = max(sqrt(M(0)), 1) / sqrt(lambda_1)
    c1 = [ M(0)(1 + 3/M(beta)) + M(0)/(2 beta^2 lambda_1 M(beta)) ] / M(beta)
    c2 = 3 c1 + M(0) + 1/2
    c3 = c0 (3/M(beta) + 1)
    eps = min( delta/(2 c2), 1/(2 c3) ),  omega = eps/3,  K = sqrt(3)

With eps so chosen, (1/2)E <= Psi <= (3/2)E and dPsi/dt + 2*omega*Psi <= 0,
which yields ||z(t)|| <= K ||z(0)|| exp(-omega t).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernel import Kernel, check_decay_conditions
from .spectral import ModalOperator
from .state import ExtendedStateVector, evolve_state
from .trajectory import Trajectory

__all__ = [
    "StabilityConfig",
    "DecayReport",
    "InequalityReport",
    "proof_constants",
    "rho_profile",
    "functionals",
    "verify_inequalities",
    "fit_decay_rate",
    "decay_study",
]

INEQUALITIES = ("energy_rate", "phi1_rate", "phi2_rate", "phi_rate", "phi_bound")


@dataclass
class StabilityConfig:
    delta: float                    # decay constant of mu' + delta*mu <= 0
    beta: Optional[float] = None    # rho cutoff; default: midpoint of the domain
    C: float = 1.0                  # constant of the mu(sigma+s) comparison check
    fd_tol_factor: float = 10.0     # tol_fd = factor * dt * max|second derivative|
    min_fraction: float = 0.99      # required fraction of steps per inequality

    def resolve_beta(self, k: Kernel) -> float:
        """User-supplied beta, or the midpoint of the effective domain."""
        beta = 0.5 * k.ell_eff if self.beta is None else float(self.beta)
        if not 0.0 < beta < k.ell_eff:
            raise ValueError("beta must lie strictly inside the kernel domain")
        if k.tailmass(beta) <= 0:
            raise ValueError("tail mass must remain positive at beta")
        return beta


def proof_constants(op: ModalOperator, k: Kernel, beta: float, delta: float) -> dict:
    m0 = k.total_mass
    mb = float(k.tailmass(beta))
    lam1 = float(op.lambdas[0])
    c0 = max(np.sqrt(m0), 1.0) / np.sqrt(lam1)
    c1 = (m0 * (1.0 + 3.0 / mb) + m0 / (2.0 * beta**2 * lam1 * mb)) / mb
    c2 = 3.0 * c1 + m0 + 0.5
    c3 = c0 * (3.0 / mb + 1.0)
    eps = min(delta / (2.0 * c2), 1.0 / (2.0 * c3))
    return {
        "M0": m0,
        "Mbeta": mb,
        "c0": c0,
        "c1": c1,
        "c2": c2,
        "c3": c3,
        "eps": eps,
        "omega": eps / 3.0,
        "K": np.sqrt(3.0),
    }


def rho_profile(tau: np.ndarray, beta: float) -> np.ndarray:
    return np.minimum(np.asarray(tau, dtype=float) / beta, 1.0)


def functionals(z: ExtendedStateVector, op: ModalOperator, k: Kernel, cfg: StabilityConfig):
    """Pointwise (E, Phi_1, Phi_2, Phi, Psi) of one extended state vector."""
    beta = cfg.resolve_beta(k)
    cs = proof_constants(op, k, beta, cfg.delta)
    u = np.asarray(z.u, dtype=float)
    v = np.asarray(z.v, dtype=float)
    xi = z.xi
    tau = xi.grid.points
    h = xi.grid.width
    E = 0.5 * (
        float(op.lambdas @ u**2)
        + float(v @ v)
        + h * float(np.sum(k.nu(tau) * (op.lambdas @ xi.values**2)))
    )
    phi1 = -h * float(np.sum(rho_profile(tau, beta) * (v @ xi.values)))
    phi2 = float(v @ u)
    phi = (3.0 / cs["Mbeta"]) * phi1 + phi2
    psi = E + cs["eps"] * phi
    return E, phi1, phi2, phi, psi


@dataclass
class InequalityReport:
    times: np.ndarray
    margins: dict                   # name -> series (interior points for rates)
    tolerances: dict                # name -> scalar finite-difference allowance
    fractions: dict                 # name -> fraction of points passing
    holds: dict                     # name -> bool at the configured threshold
    constants: dict
    suf_holds: bool

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())

    def write_csv(self, path):
        names = list(self.margins)
        n = min(len(self.margins[m]) for m in names)
        with open(path, "w") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + names)
            for j in range(n):
                w.writerow(
                    [f"{self.times[j]:.12g}"]
                    + [f"{self.margins[m][j]:.12g}" for m in names]
                )


def _fd_tol(series: np.ndarray, h: float, factor: float) -> float:
    if series.size < 3:
        return 0.0
    second = np.abs(series[2:] - 2.0 * series[1:-1] + series[:-2]) / h**2
    return factor * h * float(np.max(second))


def _centered(series: np.ndarray, h: float) -> np.ndarray:
    return (series[2:] - series[:-2]) / (2.0 * h)


def verify_inequalities(
    traj: Trajectory,
    op: ModalOperator,
    k: Kernel,
    cfg: StabilityConfig,
) -> InequalityReport:
    """Margin report along a state trajectory recorded with rho weights.

    The trajectory must come from evolve_state called with
    rho_weights = rho_profile(grid.points, beta) so that the Phi_1 series is
    available in the diagnostics. Rates are centered differences; each rate
    inequality gets the documented allowance
    tol_fd = fd_tol_factor * h * max|second difference quotient|."""
    d = traj.diagnostics
    if "phi1" not in d:
        raise ValueError("trajectory lacks the rho-weighted cross functional")
    beta = cfg.resolve_beta(k)
    cs = proof_constants(op, k, beta, cfg.delta)
    times = np.asarray(d["energy_times"])
    if times.size < 3:
        raise ValueError("need at least three recorded steps")
    h = float(times[1] - times[0])
    E = np.asarray(d["E"])
    uV2 = np.asarray(d["u_V2"])
    vH2 = np.asarray(d["v_H2"])
    xiV2 = np.asarray(d["field_norm2"])
    phi1 = np.asarray(d["phi1"])
    rec = np.rint(times / traj.diagnostics["dt"]).astype(int)
    phi2 = np.sum(traj.u[:, rec] * traj.v[:, rec], axis=0)
    phi = (3.0 / cs["Mbeta"]) * phi1 + phi2

    inner = slice(1, -1)
    margins = {
        "energy_rate": -0.5 * cfg.delta * xiV2[inner] - _centered(E, h),
        "phi1_rate": cs["Mbeta"]
        * (uV2[inner] / 12.0 - 0.5 * vH2[inner] + cs["c1"] * xiV2[inner])
        - _centered(phi1, h),
        "phi2_rate": -0.75 * uV2[inner] + vH2[inner] + cs["M0"] * xiV2[inner]
        - _centered(phi2, h),
        "phi_rate": cs["c2"] * xiV2[inner] - (_centered(phi, h) + E[inner]),
        "phi_bound": cs["c3"] * E - np.abs(phi),
    }
    tolerances = {
        "energy_rate": _fd_tol(E, h, cfg.fd_tol_factor),
        "phi1_rate": _fd_tol(phi1, h, cfg.fd_tol_factor),
        "phi2_rate": _fd_tol(phi2, h, cfg.fd_tol_factor),
        "phi_rate": _fd_tol(phi, h, cfg.fd_tol_factor),
        "phi_bound": 0.0,
    }
    fractions = {}
    holds = {}
    for name in INEQUALITIES:
        ok = margins[name] >= -tolerances[name]
        fractions[name] = float(np.mean(ok))
        holds[name] = fractions[name] >= cfg.min_fraction
    suf = check_decay_conditions(
        k, cfg.delta, max(cfg.C, 1.0), _probe_grid(k)
    ).suf_holds
    return InequalityReport(
        times=times[inner],
        margins=margins,
        tolerances=tolerances,
        fractions=fractions,
        holds=holds,
        constants=cs,
        suf_holds=suf,
    )


def _probe_grid(k: Kernel, n: int = 257) -> np.ndarray:
    h = k.ell_eff / n
    return (np.arange(n) + 0.5) * h


@dataclass
class DecayReport:
    omega_fit: float
    K_fit: float
    omega_proof: float
    K_proof: float
    residual: float                 # 1 - R^2 of the log-linear fit
    decaying: bool
    suf: bool
    mu_cond: bool
    margins_csv_path: Optional[str] = None
    fit_window: tuple = field(default=(0.0, 0.0))

    def to_json(self) -> str:
        return json.dumps(
            {
                "omega_fit": self.omega_fit,
                "K_fit": self.K_fit,
                "omega_proof": self.omega_proof,
                "K_proof": self.K_proof,
                "residual": self.residual,
                "suf": self.suf,
                "mu_cond": self.mu_cond,
                "margins_csv_path": self.margins_csv_path,
            },
            indent=2,
        )


def fit_decay_rate(
    times: np.ndarray,
    E: np.ndarray,
    constants: Optional[dict] = None,
    skip_fraction: float = 0.1,
) -> DecayReport:
    """Least-squares line on log E over the trailing window.

    The first `skip_fraction` of samples is excluded (startup transients),
    as is anything at or below underflow. omega_fit = -slope/2; K_fit is the
    smallest prefactor making the fitted envelope valid over the window."""
    times = np.asarray(times, dtype=float)
    E = np.asarray(E, dtype=float)
    start = int(np.ceil(skip_fraction * times.size))
    pos = E > 1e-280
    keep = np.zeros(times.size, dtype=bool)
    keep[start:] = pos[start:]
    if np.count_nonzero(keep) < 4:
        raise ValueError("energy series too short or non-positive")
    t = times[keep]
    logE = np.log(E[keep])
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, logE, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((logE - pred) ** 2))
    ss_tot = float(np.sum((logE - logE.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    omega_fit = -slope / 2.0
    decaying = omega_fit > 1e-10
    e0 = E[0] if E[0] > 0 else np.exp(icpt)
    if decaying:
        K_fit = float(np.sqrt(max(1.0, np.max(E[keep] * np.exp(2 * omega_fit * t)) / e0)))
    else:
        K_fit = float(np.sqrt(max(1.0, np.max(E[keep]) / e0)))
        omega_fit = max(omega_fit, 0.0)
    cs = constants or {}
    return DecayReport(
        omega_fit=float(omega_fit),
        K_fit=K_fit,
        omega_proof=float(cs.get("omega", np.nan)),
        K_proof=float(cs.get("K", np.sqrt(3.0))),
        residual=1.0 - r2,
        decaying=decaying,
        suf=bool(cs.get("suf", False)),
        mu_cond=bool(cs.get("mu_cond", False)),
        fit_window=(float(t[0]), float(t[-1])),
    )


def decay_study(
    z0: ExtendedStateVector,
    op: ModalOperator,
    k: Kernel,
    cfg: StabilityConfig,
    T: float,
    dt: float,
    stride: int = 1,
    margins_csv: Optional[str] = None,
):
    """Run the state marcher with the rho-weighted diagnostics, verify all
    inequalities, and fit the decay rate. Returns
    (DecayReport, InequalityReport, Trajectory)."""
    beta = cfg.resolve_beta(k)
    rho = rho_profile(z0.xi.grid.points, beta)
    traj, _ = evolve_state(z0, op, k, T, dt, stride=stride, rho_weights=rho)
    report = verify_inequalities(traj, op, k, cfg)
    probe = _probe_grid(k)
    cond = check_decay_conditions(k, cfg.delta, max(cfg.C, 1.0), probe)
    cs = dict(report.constants)
    cs["suf"] = cond.suf_holds
    cs["mu_cond"] = cond.mu_holds
    decay = fit_decay_rate(
        np.asarray(traj.diagnostics["energy_times"]),
        np.asarray(traj.diagnostics["E"]),
        constants=cs,
    )
    if margins_csv is not None:
        report.write_csv(margins_csv)
        decay.margins_csv_path = str(margins_csv)
    return decay, report, traj
