"""Quadrature for slowly decaying oscillatory integrals.

Integrals like int_c^inf f(x) sin(x) dx with f positive and decreasing are
summed over half-periods between consecutive zeros of the sine; the partial
sums alternate around the limit, so repeated averaging of the sequence
(Euler-style acceleration) converges geometrically where plain adaptive
quadrature stalls.
"""

from __future__ import annotations

import numpy as np

__all__ = ["gauss_panel", "averaged_limit", "oscillatory_tail"]

_RULES: dict = {}


def _rule(n: int):
    if n not in _RULES:
        _RULES[n] = np.polynomial.legendre.leggauss(n)
    return _RULES[n]


def gauss_panel(f, a: float, b: float, n: int = 24) -> float:
    """Fixed-order Gauss-Legendre integral of f over [a, b]."""
    x, w = _rule(n)
    mid = 0.5 * (a + b)
    rad = 0.5 * (b - a)
    return rad * float(w @ f(mid + rad * x))


def averaged_limit(partial_sums: np.ndarray):
    """Repeated averaging of a sequence of partial sums.

    Returns (estimate, error_estimate); the estimate is the apex of the
    averaging triangle, the error the change over the last averaging pass."""
    row = np.asarray(partial_sums, dtype=float)
    if row.size < 2:
        return float(row[-1]), np.inf
    prev_apex = row[-1]
    while row.size > 1:
        row = 0.5 * (row[:-1] + row[1:])
        err = abs(row[-1] - prev_apex)
        prev_apex = row[-1]
    return float(prev_apex), float(err)


def oscillatory_tail(
    amplitude,
    start: float,
    tol: float = 1e-10,
    period: float = np.pi,
    batch: int = 24,
    max_terms: int = 4096,
    panel_order: int = 24,
) -> float:
    """int_start^inf amplitude(x) * sin(x) dx.

    The axis is cut at the sine zeros k*pi above `start`; a head panel covers
    [start, first zero], then half-period contributions are accumulated and
    the alternating partial sums are passed through repeated averaging until
    two refinements agree within tol."""
    if start <= 0:
        raise ValueError("start must be positive")

    def f(x):
        return amplitude(x) * np.sin(x)

    k0 = int(np.ceil(start / period))
    head = gauss_panel(f, start, k0 * period, panel_order) if k0 * period > start else 0.0
    terms = []
    partials = []
    acc = head
    estimate = None
    k = k0
    while len(terms) < max_terms:
        for _ in range(batch):
            seg = gauss_panel(f, k * period, (k + 1) * period, panel_order)
            acc += seg
            terms.append(seg)
            partials.append(acc)
            k += 1
        new_est, err = averaged_limit(np.asarray(partials))
        if estimate is not None and abs(new_est - estimate) < tol and err < tol:
            return new_est
        estimate = new_est
    raise RuntimeError("oscillatory tail failed to converge within the term cap")
