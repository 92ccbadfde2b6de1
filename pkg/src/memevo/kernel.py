"""Memory kernels and derived quantities.

A kernel is a strictly positive, nonincreasing, summable weight mu on
Omega = (0, ell), together with its tail mass M(s) = int_s^ell mu, the
reciprocal weight nu = 1/mu with derivative nu' = -mu'/mu^2, and the
coefficient alpha > M(0). In normalized mode alpha - M(0) = 1.

Supported families: exponential a*exp(-k s), finite Prony sums, the linear
kernel 1 - s on (0,1), the square-root singular kernel sqrt((1-s)/s) on
(0,1), and tabulated data loaded from CSV.

Singular endpoints (mu(0+) = inf for the singular family, nu -> inf at ell)
are never evaluated: all quadratures sample strictly inside the interval,
cell midpoints by default.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "KernelError",
    "KernelSpec",
    "Kernel",
    "DecayConditionReport",
    "build_kernel",
    "check_decay_conditions",
    "load_tabulated_csv",
]

FAMILIES = ("exponential", "prony", "linear", "sqrt_singular", "tabulated")


class KernelError(ValueError):
    """Raised for inadmissible kernel specifications."""


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel description, as it appears in scenario configs."""

    family: str
    a: Optional[np.ndarray] = None       # amplitudes (exponential / prony)
    kappa: Optional[np.ndarray] = None   # rates, strictly increasing
    table_s: Optional[np.ndarray] = None
    table_mu: Optional[np.ndarray] = None
    alpha_mode: str = "normalized"
    alpha: Optional[float] = None        # used when alpha_mode == "explicit"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}")
        if self.family in ("exponential", "prony"):
            a = np.atleast_1d(np.asarray(self.a, dtype=float))
            k = np.atleast_1d(np.asarray(self.kappa, dtype=float))
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "kappa", k)
            if a.shape != k.shape or a.ndim != 1:
                raise KernelError("amplitudes and rates must be 1-d and matching")
            if np.any(a <= 0) or np.any(k <= 0):
                raise KernelError("amplitudes and rates must be positive")
            if self.family == "prony" and np.any(np.diff(k) <= 0):
                raise KernelError("prony rates must be strictly increasing")
            if self.family == "exponential" and a.size != 1:
                raise KernelError("exponential family takes a single (a, kappa)")
        if self.family == "tabulated":
            s = np.asarray(self.table_s, dtype=float)
            m = np.asarray(self.table_mu, dtype=float)
            object.__setattr__(self, "table_s", s)
            object.__setattr__(self, "table_mu", m)
            if s.ndim != 1 or s.shape != m.shape or s.size < 2:
                raise KernelError("tabulated kernel needs matching 1-d columns")
            if np.any(np.diff(s) <= 0):
                raise KernelError("tabulated grid must be strictly increasing")
            if np.any(m <= 0):
                raise KernelError("tabulated values must be strictly positive")
            if np.any(np.diff(m) > 0):
                raise KernelError("tabulated values must be nonincreasing")
        if self.alpha_mode not in ("normalized", "explicit"):
            raise KernelError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.alpha_mode == "explicit" and (self.alpha is None or self.alpha <= 0):
            raise KernelError("explicit alpha_mode requires alpha > 0")


@dataclass(frozen=True)
class Kernel:
    """Built kernel with all derived scalar functions.

    Immutable after construction; every callable is vectorized over numpy
    arrays and returns 0 outside (0, ell) for mu / dmu (the paper's
    extension convention).
    """

    spec: KernelSpec
    mu: Callable[[np.ndarray], np.ndarray]
    dmu: Callable[[np.ndarray], np.ndarray]
    tailmass: Callable[[np.ndarray], np.ndarray]
    ell: float                      # np.inf allowed
    alpha: float
    L_trunc: float                  # effective truncation length
    eps_tail: float
    closed_form: bool = True

    def nu(self, tau):
        tau = np.asarray(tau, dtype=float)
        return 1.0 / self.mu(tau)

    def dnu(self, tau):
        tau = np.asarray(tau, dtype=float)
        m = self.mu(tau)
        return -self.dmu(tau) / (m * m)

    @property
    def total_mass(self) -> float:
        return float(self.tailmass(0.0))

    @property
    def ell_eff(self) -> float:
        return min(self.ell, self.L_trunc)

    def nu_at_zero(self) -> float:
        """lim nu(tau), tau -> 0; zero when mu blows up at the origin."""
        if self.spec.family == "sqrt_singular":
            return 0.0
        if self.spec.family in ("exponential", "prony"):
            return 1.0 / float(np.sum(self.spec.a))
        if self.spec.family == "linear":
            return 1.0
        return float(1.0 / self.spec.table_mu[0])


def _masked(inner, ell, fill=0.0):
    def wrapped(s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.full(s.shape, fill)
        mask = (s > 0) & (s < ell)
        if np.any(mask):
            out[mask] = inner(s[mask])
        return float(out[0]) if scalar else out

    return wrapped


def build_kernel(spec: KernelSpec, eps_tail: float = 1e-8) -> Kernel:
    """Construct a Kernel from its spec.

    Closed-form families get exact analytic M, nu, nu'; tabulated kernels
    get trapezoid tail masses and finite-difference derivatives. Raises
    KernelError when M(0) >= alpha or the data violate admissibility.
    """
    fam = spec.family
    if fam == "exponential" or fam == "prony":
        a = spec.a
        k = spec.kappa
        ell = np.inf

        def mu_in(s):
            return np.exp(-np.outer(s, k)) @ a

        def dmu_in(s):
            return -np.exp(-np.outer(s, k)) @ (a * k)

        def mass_in(s):
            return np.exp(-np.outer(s, k)) @ (a / k)

        mu = _masked(mu_in, ell)
        dmu = _masked(dmu_in, ell)

        def tailmass(s):
            s = np.asarray(s, dtype=float)
            scalar = s.ndim == 0
            s = np.atleast_1d(np.clip(s, 0.0, None))
            out = mass_in(s)
            return float(out[0]) if scalar else out

        m0 = float(np.sum(a / k))
        # solve M(L) = eps_tail * M(0) by bisection (monotone)
        lo, hi = 0.0, 1.0
        target = eps_tail * m0
        while tailmass(hi) > target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if tailmass(mid) > target:
                lo = mid
            else:
                hi = mid
        L = hi
        closed = True
    elif fam == "linear":
        ell = 1.0
        mu = _masked(lambda s: 1.0 - s, ell)
        # jump-midpoint convention at s = ell: mu' integrates back to mu
        # exactly on grids whose nodes hit the endpoint
        def dmu(s):
            s = np.asarray(s, dtype=float)
            scalar = s.ndim == 0
            s = np.atleast_1d(s)
            out = np.where((s > 0) & (s < 1.0), -1.0, 0.0)
            out = np.where(s == 1.0, -0.5, out)
            return float(out[0]) if scalar else out

        def tailmass(s):
            s = np.asarray(s, dtype=float)
            c = np.clip(s, 0.0, 1.0)
            return 0.5 * (1.0 - c) ** 2

        m0 = 0.5
        L = 1.0
        closed = True
    elif fam == "sqrt_singular":
        ell = 1.0
        mu = _masked(lambda s: np.sqrt((1.0 - s) / s), ell)
        dmu = _masked(lambda s: -0.5 / (s ** 1.5 * np.sqrt(1.0 - s)), ell)

        def tailmass(s):
            s = np.asarray(s, dtype=float)
            c = np.clip(s, 0.0, 1.0)
            return np.pi / 2 - np.arcsin(np.sqrt(c)) - np.sqrt(c * (1.0 - c))

        m0 = float(np.pi / 2)
        L = 1.0
        closed = True
    elif fam == "tabulated":
        s_tab = spec.table_s
        mu_tab = spec.table_mu
        ell = float(s_tab[-1])

        def mu_in(s):
            return np.interp(s, s_tab, mu_tab)

        mu = _masked(mu_in, ell)
        # centered differences interior, one-sided at the ends
        d_tab = np.gradient(mu_tab, s_tab)
        dmu = _masked(lambda s: np.interp(s, s_tab, d_tab), ell)
        # composite trapezoid accumulated from the right end
        seg = 0.5 * np.diff(s_tab) * (mu_tab[:-1] + mu_tab[1:])
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])

        def tailmass(s):
            s = np.asarray(s, dtype=float)
            c = np.clip(s, s_tab[0], ell)
            out = np.interp(c, s_tab, tail)
            # linear continuation down to s = 0 with the first sample value
            out = out + np.clip(s_tab[0] - np.asarray(s, dtype=float), 0.0, None) * mu_tab[0]
            return out

        m0 = float(tailmass(0.0))
        L = ell
        closed = False
    else:  # pragma: no cover
        raise KernelError(f"unknown family {fam!r}")

    if spec.alpha_mode == "normalized":
        alpha = 1.0 + m0
    else:
        alpha = float(spec.alpha)
        if m0 >= alpha:
            raise KernelError(
                f"total mass M(0) = {m0:.6g} must stay below alpha = {alpha:.6g}"
            )

    if np.isfinite(ell):
        L = ell

    kern = Kernel(
        spec=spec,
        mu=mu,
        dmu=dmu,
        tailmass=tailmass,
        ell=float(ell),
        alpha=alpha,
        L_trunc=float(L),
        eps_tail=float(eps_tail),
        closed_form=closed,
    )
    _validate(kern)
    return kern


def _validate(k: Kernel, n_probe: int = 512, nu_growth: float = 10.0) -> None:
    h = k.ell_eff / n_probe
    s = (np.arange(n_probe) + 0.5) * h
    mu = k.mu(s)
    if np.any(mu <= 0):
        raise KernelError("kernel must be strictly positive on its domain")
    dmu = k.dmu(s)
    if np.any(dmu > 0):
        raise KernelError("kernel must be nonincreasing (mu' <= 0)")
    m = k.tailmass(s)
    if np.any(np.diff(m) > 1e-12) or np.any(m < -1e-12):
        raise KernelError("tail mass must be nonnegative and nonincreasing")
    nu = 1.0 / mu
    if np.any(np.diff(nu) < -1e-9 * np.max(nu)):
        raise KernelError("reciprocal kernel nu must be nondecreasing")
    if nu[-1] < nu_growth * nu[0] and not np.isfinite(k.ell):
        # truncation must reach deep into the tail
        raise KernelError("nu fails to grow across the truncated domain")
    if not np.isfinite(k.ell):
        if k.tailmass(k.L_trunc) > 1.0001 * k.eps_tail * k.total_mass:
            raise KernelError("truncation length leaves too much tail mass")


@dataclass(frozen=True)
class DecayConditionReport:
    suf_holds: bool
    mu_holds: bool
    delta: float
    C: float
    suf_witness: Optional[float] = None          # first s violating (SUF)
    mu_witness: Optional[tuple] = None           # first (sigma, s) violating (MU)


def check_decay_conditions(
    k: Kernel,
    delta: float,
    C: float,
    s_grid: np.ndarray,
    sigma_grid: Optional[np.ndarray] = None,
    tol: float = 1e-12,
) -> DecayConditionReport:
    """Grid check of the decay conditions.

    (SUF): mu'(s) + delta*mu(s) <= 0 at every grid point.
    (MU):  mu(sigma + s) <= C * exp(-delta*sigma) * mu(s) at every pair.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if C < 1:
        raise ValueError("C must be >= 1")
    s_grid = np.asarray(s_grid, dtype=float)
    res = k.dmu(s_grid) + delta * k.mu(s_grid)
    bad = np.nonzero(res > tol)[0]
    suf_holds = bad.size == 0
    suf_witness = float(s_grid[bad[0]]) if bad.size else None

    mu_holds = True
    mu_witness = None
    if sigma_grid is None:
        sigma_grid = np.linspace(0.0, k.ell_eff, 33)[1:]
    for sigma in np.asarray(sigma_grid, dtype=float):
        lhs = k.mu(sigma + s_grid)
        rhs = C * np.exp(-delta * sigma) * k.mu(s_grid)
        bad = np.nonzero(lhs > rhs + tol)[0]
        if bad.size:
            mu_holds = False
            mu_witness = (float(sigma), float(s_grid[bad[0]]))
            break
    return DecayConditionReport(
        suf_holds=suf_holds,
        mu_holds=mu_holds,
        delta=float(delta),
        C=float(C),
        suf_witness=suf_witness,
        mu_witness=mu_witness,
    )


def load_tabulated_csv(path, alpha_mode="normalized", alpha=None) -> KernelSpec:
    """Two-column CSV (s, mu(s)), strictly increasing s, '#' comments allowed."""
    ss, mm = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            ss.append(float(row[0]))
            mm.append(float(row[1]))
    return KernelSpec(
        family="tabulated",
        table_s=np.asarray(ss),
        table_mu=np.asarray(mm),
        alpha_mode=alpha_mode,
        alpha=alpha,
    )
