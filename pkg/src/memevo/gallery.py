"""Concrete worked scenarios, each deterministic and self-checking.

* twin histories on a Prony kernel whose induced states coincide
  (a polynomial history and a constant history with the same image under
  the history-to-state map),
* the oscillatory limit constant of the square-root kernel's proper-state
  example,
* the Cantor staircase sequence whose state limit escapes the class of
  states with a tail-integral certificate,
* the t -> 0 trichotomy suite for state functions (finite limit, bounded
  oscillation, divergence),
* a membership witness separating plain weighted-L2 histories from the
  larger class on which the state map still acts.

Every scenario returns a dict with a "pass" flag and its computed
witnesses, serializable as a JSON verdict.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .history import ExtendedHistoryVector, evolve_history, history_grid
from .kernel import KernelSpec, build_kernel
from .maps import classify_limit_behavior, pi_map
from .oscillatory import oscillatory_tail
from .spectral import ModalOperator, WeightedField, build_operator, weighted_norm
from .stability import _probe_grid

__all__ = [
    "ExnnScenario",
    "exnn_build",
    "exnn_verify",
    "exnn_dynamics",
    "kappa_constant",
    "sin_reciprocal_integral",
    "cantor_staircase",
    "cantor_sequence",
    "exinj_suite",
    "membership_witness",
    "run_all",
]


# ---------------------------------------------------------------------------
# twin histories on a Prony kernel


@dataclass
class ExnnScenario:
    N: int
    a: np.ndarray
    kappa: np.ndarray
    B: np.ndarray               # B[n, m] = m! / kappa_n^m
    x: np.ndarray               # solution of B x = (1, ..., 1)
    det_direct: float
    det_product: float
    cond: float


def exnn_build(N: int, a, kappa, det_rtol: float = 1e-10) -> ExnnScenario:
    """Assemble the moment matrix of the polynomial twin-history problem.

    For the kernel sum a_n exp(-kappa_n s), the histories eta_0(s) = u and
    eta_N(s) = (sum_m x_m s^m) u induce the same state exactly when
    B x = 1 with B[n, m] = m!/kappa_n^m. The determinant is checked against
    the closed product formula before solving."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    if N < 2 or a.size != N or kappa.size != N:
        raise ValueError("need N >= 2 matching amplitude and rate vectors")
    if np.any(np.diff(kappa) <= 0) or np.any(kappa <= 0) or np.any(a <= 0):
        raise ValueError("rates must be positive and strictly increasing")
    m = np.arange(1, N + 1)
    B = np.array([[math.factorial(mm) / kn**mm for mm in m] for kn in kappa])
    det_direct = float(np.linalg.det(B))
    det_product = float(np.prod([math.factorial(n) / kappa[n - 1] for n in m]))
    for n in range(N):
        for p in range(n):
            det_product *= 1.0 / kappa[n] - 1.0 / kappa[p]
    if abs(det_direct - det_product) > det_rtol * abs(det_product):
        raise AssertionError(
            f"determinant routes disagree: {det_direct} vs {det_product}"
        )
    cond = float(np.linalg.cond(B))
    if cond > 1e12:
        warnings.warn(f"moment matrix nearly singular (cond = {cond:.3g})")
    x = np.linalg.solve(B, np.ones(N))
    return ExnnScenario(
        N=N, a=a, kappa=kappa, B=B, x=x,
        det_direct=det_direct, det_product=det_product, cond=cond,
    )


def _exnn_kernel(scen: ExnnScenario):
    spec = KernelSpec(family="prony" if scen.N > 1 else "exponential",
                      a=scen.a, kappa=scen.kappa)
    return build_kernel(spec, eps_tail=1e-12)


def _twin_poly(scen: ExnnScenario, s: np.ndarray) -> np.ndarray:
    poly = np.zeros_like(s)
    for mm in range(scen.N, 0, -1):
        poly = (poly + scen.x[mm - 1]) * s
    return poly


def exnn_verify(scen: ExnnScenario, dt: float = 1e-3, tol: float = 1e-6) -> dict:
    """Quadrature check that the two histories map to the same state.

    Histories are sampled at cell midpoints so both quadratures are second
    order; the residual gap is the differing quadrature error of the two."""
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    k = _exnn_kernel(scen)
    from .spectral import midpoint_grid

    n = int(round(k.L_trunc / dt))
    grid = midpoint_grid(n * dt, n)
    eta0 = WeightedField(np.ones((1, grid.n)), grid, "mu")
    etaN = WeightedField(_twin_poly(scen, grid.points)[None, :], grid, "mu")
    p0 = pi_map(eta0, k, op)
    pN = pi_map(etaN, k, op, check_contraction=False)
    diff = WeightedField(p0.xi.values - pN.xi.values, p0.xi.grid, "nu")
    gap = weighted_norm(diff, op, k)
    scale = weighted_norm(p0.xi, op, k)
    resid = float(np.max(np.abs(scen.B @ scen.x - 1.0)))
    rel = gap / scale
    return {
        "pass": rel <= tol and resid <= 1e-10,
        "state_gap_rel": rel,
        "system_residual": resid,
        "det_direct": scen.det_direct,
        "det_product": scen.det_product,
        "x": scen.x.tolist(),
        "cond": scen.cond,
    }


def exnn_dynamics(
    scen: ExnnScenario,
    T: float = 5.0,
    dt: float = 1e-3,
    lambdas=(1.0, 4.0),
    tol: float = 1e-3,
) -> dict:
    """Evolve both histories and compare the displacement trajectories.

    Different initial histories with the same induced state must produce the
    same future dynamics."""
    op = build_operator("explicit-list", len(lambdas), lambdas=list(lambdas))
    k = _exnn_kernel(scen)
    grid = history_grid(k, T, dt)
    poly = _twin_poly(scen, grid.points)
    u0 = np.ones(op.N)
    v0 = np.zeros(op.N)
    eta0 = WeightedField(np.tile(u0[:, None], (1, grid.n)), grid, "mu")
    etaN = WeightedField(u0[:, None] * poly[None, :], grid, "mu")
    traj_a, _ = evolve_history(ExtendedHistoryVector(u0, v0, eta0), op, k, T, dt)
    traj_b, _ = evolve_history(ExtendedHistoryVector(u0, v0, etaN), op, k, T, dt)
    scale = np.max(np.abs(traj_a.u))
    gap = float(np.max(np.abs(traj_a.u - traj_b.u)) / scale)
    return {"pass": gap <= tol, "u_gap_rel": gap, "T": T, "dt": dt}


# ---------------------------------------------------------------------------
# oscillatory limit constant of the square-root kernel example


def kappa_constant(tol: float = 1e-8) -> float:
    """lim_N int_1^N (1/x) sqrt((x-1)/x) sin(x) dx, about 0.28.

    The square-root cusp at x = 1 is removed with x = 1 + y^2 on the head
    interval [1, pi]; the tail is summed over half-periods."""
    from .oscillatory import gauss_panel

    def head(y):
        x = 1.0 + y * y
        return 2.0 * y * y * np.sin(x) / x**1.5

    def amp(x):
        return np.sqrt((x - 1.0) / x) / x

    return gauss_panel(head, 0.0, np.sqrt(np.pi - 1.0), 48) + oscillatory_tail(
        amp, np.pi, tol=tol
    )


def sin_reciprocal_integral(tol: float = 1e-10) -> float:
    """int_0^1 sin(1/x) dx, via the substitution x = 1/y."""

    def amp(y):
        return 1.0 / (y * y)

    return oscillatory_tail(amp, 1.0, tol=tol)


def _sin_reciprocal_head(t: float, tol: float = 1e-10) -> float:
    """int_t^1 sin(1/x) dx = tail(1) - tail(1/t) of sin(y)/y^2."""

    def amp(y):
        return 1.0 / (y * y)

    if t >= 1.0:
        return 0.0
    return oscillatory_tail(amp, 1.0, tol=tol) - oscillatory_tail(amp, 1.0 / t, tol=tol)


# ---------------------------------------------------------------------------
# Cantor staircase sequence


def cantor_staircase(x: np.ndarray, n: int) -> np.ndarray:
    """n-th absolutely continuous approximant of the Cantor staircase;
    n = 0 is the identity."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def level(vals, depth):
        if depth == 0:
            return vals
        res = np.empty_like(vals)
        left = vals < 1.0 / 3.0
        mid = (vals >= 1.0 / 3.0) & (vals <= 2.0 / 3.0)
        right = vals > 2.0 / 3.0
        res[left] = 0.5 * level(3.0 * vals[left], depth - 1)
        res[mid] = 0.5
        res[right] = 0.5 + 0.5 * level(3.0 * vals[right] - 2.0, depth - 1)
        return res

    return level(x, n)


def cantor_sequence(n_max: int = 6, cells: int = 6561) -> dict:
    """Cauchy behavior of the staircase states on the linear kernel.

    xi_n(tau) = -C_n(1 - tau) u; consecutive weighted-norm distances must
    decay geometrically (ratio <= 0.8 from n = 3 on). Each xi_n has an
    explicit tail-integral certificate F_n(t) = [int_0^{1-t} C_n], checked
    by two independent quadrature routes; the limit has none (analytic
    fact, reported rather than decided numerically)."""
    op = build_operator("explicit-list", 1, lambdas=[1.0])
    k = build_kernel(KernelSpec(family="linear"))
    h = 1.0 / cells
    tau = (np.arange(cells) + 0.5) * h
    xs = 1.0 - tau
    stairs = [cantor_staircase(xs, n) for n in range(n_max + 2)]
    nu = k.nu(tau)
    dists = []
    for n in range(n_max + 1):
        d = stairs[n] - stairs[n + 1]
        dists.append(float(np.sqrt(h * np.sum(nu * d * d))))
    dists = np.asarray(dists)
    ratios = dists[1:] / dists[:-1]
    ratio_ok = bool(np.all(ratios[3:] <= 0.8)) if ratios.size > 3 else False

    # certificate of xi_{n_max}: tail sums of xi vs direct sums of C_n
    t_nodes = np.arange(cells + 1) * h
    cn = stairs[n_max]
    route_a = h * np.concatenate([np.cumsum(cn[::-1])[::-1], [0.0]])  # tail over tau > t
    x_mid = (np.arange(cells) + 0.5) * h
    cx = cantor_staircase(x_mid, n_max)
    csum = h * np.concatenate([[0.0], np.cumsum(cx)])                 # int_0^{t} C_n
    route_b = csum[::-1]                                              # int_0^{1 - t_j}
    cert_gap = float(np.max(np.abs(route_a - route_b)))
    return {
        "pass": ratio_ok and cert_gap <= 1e-8 and bool(np.all(dists > 0)),
        "distances": dists.tolist(),
        "ratios": ratios.tolist(),
        "certificate_gap": cert_gap,
        "limit_certificate": "not-found (the limit state is not the "
        "derivative of any tail integral; analytic fact)",
        "t_nodes_count": int(t_nodes.size),
    }


# ---------------------------------------------------------------------------
# trichotomy suite


def _case_i_evaluator(t: float) -> float:
    # (1 - t) sin 1 - int_t^1 sin(1/x) dx, on the linear kernel
    return (1.0 - t) * np.sin(1.0) - _sin_reciprocal_head(t)


def _case_ii_evaluator(t: float) -> float:
    return np.sin(1.0 / t) - np.sin(1.0) + t * np.cos(1.0) - np.cos(1.0)


def _case_iii_evaluator(t: float) -> float:
    # int_0^{1-t} sqrt((1-t-s)/(s(t+s))) ds after s = (1-t) sin^2(theta)
    def f(theta):
        return 2.0 * np.cos(theta) ** 2 / np.sqrt(t + (1.0 - t) * np.sin(theta) ** 2)

    val, _ = quad(f, 0.0, np.pi / 2, limit=400, epsabs=1e-11, epsrel=1e-11)
    return (1.0 - t) * val


def _case_ii_quadrature(t: float) -> float:
    # independent route: direct quadrature of the generating history
    def f(s):
        r = 1.0 / (1.0 - s)
        return (1.0 - t - s) * (2.0 * r**3 * np.cos(r) - r**4 * np.sin(r))

    val, _ = quad(f, 0.0, 1.0 - t, limit=400, epsabs=1e-11, epsrel=1e-11)
    return val


def exinj_suite() -> dict:
    """t -> 0 trichotomy of three closed-form state functions.

    (i) linear kernel, oscillating generator: finite limit
        sin 1 - int_0^1 sin(1/x) dx;
    (ii) linear kernel: bounded values, no limit (persistent oscillation);
    (iii) square-root kernel, generator 1/sqrt(s): logarithmic divergence
        while the time integral of the values stays finite."""
    tag_i = classify_limit_behavior(lambda t: np.atleast_1d(_case_i_evaluator(t)))
    limit_i = float(np.sin(1.0) - sin_reciprocal_integral())
    tag_ii = classify_limit_behavior(lambda t: np.atleast_1d(_case_ii_evaluator(t)))
    ts = 0.1 * 0.5 ** np.arange(15)
    vals_ii = np.array([_case_ii_evaluator(t) for t in ts])
    osc_amp = float(np.max(vals_ii[-8:]) - np.min(vals_ii[-8:]))
    dual_gap = max(
        abs(_case_ii_evaluator(t) - _case_ii_quadrature(t)) for t in (0.3, 0.5, 0.7)
    )
    tag_iii = classify_limit_behavior(lambda t: np.atleast_1d(_case_iii_evaluator(t)))
    sweep_iii = [_case_iii_evaluator(t) for t in (1e-2, 1e-3, 1e-4)]
    # time integral of the diverging values stays finite (log singularity)
    tq = (np.arange(400) + 0.5) / 400.0
    integral_iii = float(np.mean([_case_iii_evaluator(t) for t in tq]))
    record = {
        "finite-limit": {
            "tag": tag_i,
            "limit": limit_i,
            "pass": tag_i == "limit-exists",
        },
        "bounded-oscillation": {
            "tag": tag_ii,
            "oscillation_amplitude": osc_amp,
            "sup": float(np.max(np.abs(vals_ii))),
            "dual_route_gap": float(dual_gap),
            "pass": tag_ii == "bounded-no-limit" and osc_amp > 0.5,
        },
        "divergent": {
            "tag": tag_iii,
            "sweep": [float(v) for v in sweep_iii],
            "time_integral": integral_iii,
            "pass": tag_iii == "unbounded"
            and all(b > a for a, b in zip(sweep_iii, sweep_iii[1:]))
            and np.isfinite(integral_iii),
        },
    }
    record["pass"] = all(r["pass"] for r in record.values() if isinstance(r, dict))
    return record


# ---------------------------------------------------------------------------
# membership witness


def membership_witness(sigma: float = 0.5, L_values=(10.0, 20.0, 40.0)) -> dict:
    """eta(s) = exp(sigma * kappa_1 * s) u on the two-term Prony kernel.

    Its mu-weighted L2 norm grows without bound as the truncation length
    increases, yet it is mu-summable and its induced state has finite
    nu-weighted norm: the history-to-state map acts beyond the weighted-L2
    history space. Verified numerically for sigma = 1/2 only; other sigma in
    [1/2, 1) are flagged unverified."""
    a = np.array([1.0, 1.0])
    kap = np.array([1.0, 2.0])
    k = build_kernel(KernelSpec(family="prony", a=a, kappa=kap))
    sk = sigma * kap[0]
    l1_closed = float(np.sum(a / (kap - sk)))
    m_norms = []
    for L in L_values:
        n = 4096
        s = (np.arange(n) + 0.5) * (L / n)
        m_norms.append(float((L / n) * np.sum(k.mu(s) * np.exp(2 * sk * s))))
    # induced state in closed form: sum a_n kappa_n/(kappa_n - sk) e^{-kappa_n tau}
    tau = _probe_grid(k, 4096)
    coef = a * kap / (kap - sk)
    xi = np.exp(-np.outer(tau, kap)) @ coef
    h = tau[1] - tau[0]
    v_norm = float(np.sqrt(h * np.sum(k.nu(tau) * xi**2)))
    growing = all(b > 1.5 * a_ for a_, b in zip(m_norms, m_norms[1:]))
    return {
        "pass": growing and np.isfinite(l1_closed) and np.isfinite(v_norm),
        "sigma": sigma,
        "mu_L1_norm": l1_closed,
        "weighted_L2_norms": m_norms,
        "state_norm": v_norm,
        "general_sigma": "unverified (only sigma = 1/2 computed)",
    }


def run_all() -> dict:
    """Every scenario's verdict, keyed by name."""
    scen = exnn_build(2, (1.0, 1.0), (1.0, 2.0))
    verdicts = {
        "twin-histories": exnn_verify(scen),
        "twin-dynamics": exnn_dynamics(scen),
        "oscillatory-constant": {"value": kappa_constant(1e-8)},
        "cantor-sequence": cantor_sequence(),
        "trichotomy": exinj_suite(),
        "membership-witness": membership_witness(),
    }
    v = verdicts["oscillatory-constant"]
    v["pass"] = 0.27 <= v["value"] <= 0.29
    verdicts["pass"] = all(d["pass"] for d in verdicts.values() if isinstance(d, dict))
    return verdicts
