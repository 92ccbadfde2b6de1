"""Hot time-marching kernels.

Two interchangeable backends: numba ``@njit`` loops (default) and a pure-numpy
path. Selection via the ``MEMEVO_BACKEND`` environment variable: ``numba``
(default, falls back to numpy if numba is unavailable) or ``numpy``.

All marchers share the same grid conventions:

* time grid t_j = j*dt, j = 0..J
* the direct solver's convolution uses the kernel at cell midpoints
  (j + 1/2)*dt with trapezoidal sampling of the solution,
* the history field eta is stored at the right nodes s_i = (i+1)*dt, which
  makes the right-translation step an exact index shift,
* the state field xi is stored at cell midpoints tau_i = (i+1/2)*dt, which
  makes the left-translation step an exact index shift.
"""

import os

import numpy as np

_BACKEND = os.environ.get("MEMEVO_BACKEND", "numba").strip().lower()
if _BACKEND not in ("numba", "numpy"):
    raise ValueError(f"MEMEVO_BACKEND must be 'numba' or 'numpy', got {_BACKEND!r}")

if _BACKEND == "numba":
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _BACKEND = "numpy"


def backend() -> str:
    """Name of the active compute backend ('numba' or 'numpy')."""
    return _BACKEND


# ---------------------------------------------------------------------------
# direct Volterra marcher


def _direct_march_numpy(u0, v0, f0, lam, alpha, w_conv, dt):
    n, jj = f0.shape
    J = jj - 1
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    u[:, 0] = u0
    v[:, 0] = v0
    half = 0.5 * dt
    f = -lam * (alpha * u0 - f0[:, 0])
    for j in range(J):
        u[:, j + 1] = u[:, j] + dt * v[:, j] + half * dt * f
        m = j + 1
        # conv_m = sum_i w[i] * (u[m-i] + u[m-i-1]) / 2
        conv = 0.5 * (u[:, m:0:-1] @ w_conv[:m] + u[:, m - 1 :: -1] @ w_conv[:m])
        fn = -lam * (alpha * u[:, m] - conv - f0[:, m])
        v[:, m] = v[:, j] + half * (f + fn)
        f = fn
    return u, v


def _direct_march_loops(u0, v0, f0, lam, alpha, w_conv, dt):
    n, jj = f0.shape
    J = jj - 1
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    f = np.empty(n)
    fn = np.empty(n)
    half = 0.5 * dt
    for k in range(n):
        u[k, 0] = u0[k]
        v[k, 0] = v0[k]
        f[k] = -lam[k] * (alpha * u0[k] - f0[k, 0])
    for j in range(J):
        m = j + 1
        for k in range(n):
            u[k, m] = u[k, j] + dt * v[k, j] + half * dt * f[k]
        for k in range(n):
            conv = 0.0
            for i in range(m):
                conv += w_conv[i] * (u[k, m - i] + u[k, m - i - 1])
            conv *= 0.5
            fn[k] = -lam[k] * (alpha * u[k, m] - conv - f0[k, m])
            v[k, m] = v[k, j] + half * (f[k] + fn[k])
            f[k] = fn[k]
    return u, v


# ---------------------------------------------------------------------------
# history marcher (Dafermos formulation)


def _history_march_numpy(u0, v0, eta0, lam, bw, wnorm, dt, J, stride):
    n, g = eta0.shape
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    u[:, 0] = u0
    v[:, 0] = v0
    eta = eta0.copy()
    nrec = J // stride + 1
    field2 = np.empty((nrec, n))
    field2[0] = (eta * eta) @ wnorm
    half = 0.5 * dt
    for j in range(J):
        f = -lam * (u[:, j] + eta @ bw)
        u[:, j + 1] = u[:, j] + dt * v[:, j] + half * dt * f
        du = u[:, j + 1] - u[:, j]
        eta[:, 1:] = eta[:, :-1]
        eta[:, 0] = 0.0
        eta += du[:, None]
        fn = -lam * (u[:, j + 1] + eta @ bw)
        v[:, j + 1] = v[:, j] + half * (f + fn)
        if (j + 1) % stride == 0:
            field2[(j + 1) // stride] = (eta * eta) @ wnorm
    return u, v, eta, field2


def _history_march_loops(u0, v0, eta0, lam, bw, wnorm, dt, J, stride):
    n, g = eta0.shape
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    eta = eta0.copy()
    nrec = J // stride + 1
    field2 = np.empty((nrec, n))
    half = 0.5 * dt
    for k in range(n):
        u[k, 0] = u0[k]
        v[k, 0] = v0[k]
        acc = 0.0
        for i in range(g):
            acc += wnorm[i] * eta[k, i] * eta[k, i]
        field2[0, k] = acc
    for j in range(J):
        for k in range(n):
            br = 0.0
            for i in range(g):
                br += bw[i] * eta[k, i]
            f = -lam[k] * (u[k, j] + br)
            u[k, j + 1] = u[k, j] + dt * v[k, j] + half * dt * f
            du = u[k, j + 1] - u[k, j]
            for i in range(g - 1, 0, -1):
                eta[k, i] = eta[k, i - 1] + du
            eta[k, 0] = du
            br = 0.0
            for i in range(g):
                br += bw[i] * eta[k, i]
            fn = -lam[k] * (u[k, j + 1] + br)
            v[k, j + 1] = v[k, j] + half * (f + fn)
        if (j + 1) % stride == 0:
            r = (j + 1) // stride
            for k in range(n):
                acc = 0.0
                for i in range(g):
                    acc += wnorm[i] * eta[k, i] * eta[k, i]
                field2[r, k] = acc
    return u, v, eta, field2


# ---------------------------------------------------------------------------
# state marcher (minimal-state formulation)
#
# Diagnostics recorded every `stride` steps, per mode:
#   xin2[r,k]  = sum_i h*nu(tau_i) * xi^2          (V-norm factor applied later)
#   rate[r,k]  = sum_i h*nu'(tau_i) * xi^2
#   xi0sq[r,k] = xi(tau_0)^2
#   phi1[r,k]  = sum_i h*rho(tau_i) * v_k * xi_{k,i}


def _state_march_numpy(u0, v0, xi0, lam, wsrc, wnu, wdnu, wrho, dt, J, stride):
    n, g = xi0.shape
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    u[:, 0] = u0
    v[:, 0] = v0
    xi = xi0.copy()
    nrec = J // stride + 1
    xin2 = np.empty((nrec, n))
    rate = np.empty((nrec, n))
    xi0sq = np.empty((nrec, n))
    phi1 = np.empty((nrec, n))
    half = 0.5 * dt

    def record(r):
        sq = xi * xi
        xin2[r] = sq @ wnu
        rate[r] = sq @ wdnu
        xi0sq[r] = sq[:, 0]

    record(0)
    phi1[0] = v[:, 0] * (xi @ wrho)
    for j in range(J):
        f = -lam * (u[:, j] + dt * xi.sum(axis=1))
        u[:, j + 1] = u[:, j] + dt * v[:, j] + half * dt * f
        du = u[:, j + 1] - u[:, j]
        xi[:, :-1] = xi[:, 1:]
        xi[:, -1] = 0.0
        xi += wsrc * du[:, None]
        fn = -lam * (u[:, j + 1] + dt * xi.sum(axis=1))
        v[:, j + 1] = v[:, j] + half * (f + fn)
        if (j + 1) % stride == 0:
            r = (j + 1) // stride
            record(r)
            phi1[r] = v[:, j + 1] * (xi @ wrho)
    return u, v, xi, xin2, rate, xi0sq, phi1


def _state_march_loops(u0, v0, xi0, lam, wsrc, wnu, wdnu, wrho, dt, J, stride):
    n, g = xi0.shape
    u = np.empty((n, J + 1))
    v = np.empty((n, J + 1))
    xi = xi0.copy()
    nrec = J // stride + 1
    xin2 = np.empty((nrec, n))
    rate = np.empty((nrec, n))
    xi0sq = np.empty((nrec, n))
    phi1 = np.empty((nrec, n))
    half = 0.5 * dt
    for k in range(n):
        u[k, 0] = u0[k]
        v[k, 0] = v0[k]
        a = 0.0
        b = 0.0
        c = 0.0
        for i in range(g):
            sq = xi[k, i] * xi[k, i]
            a += wnu[i] * sq
            b += wdnu[i] * sq
            c += wrho[i] * xi[k, i]
        xin2[0, k] = a
        rate[0, k] = b
        xi0sq[0, k] = xi[k, 0] * xi[k, 0]
        phi1[0, k] = v[k, 0] * c
    for j in range(J):
        for k in range(n):
            br = 0.0
            for i in range(g):
                br += xi[k, i]
            f = -lam[k] * (u[k, j] + dt * br)
            u[k, j + 1] = u[k, j] + dt * v[k, j] + half * dt * f
            du = u[k, j + 1] - u[k, j]
            for i in range(g - 1):
                xi[k, i] = xi[k, i + 1] + wsrc[i] * du
            xi[k, g - 1] = wsrc[g - 1] * du
            br = 0.0
            for i in range(g):
                br += xi[k, i]
            fn = -lam[k] * (u[k, j + 1] + dt * br)
            v[k, j + 1] = v[k, j] + half * (f + fn)
        if (j + 1) % stride == 0:
            r = (j + 1) // stride
            for k in range(n):
                a = 0.0
                b = 0.0
                c = 0.0
                for i in range(g):
                    sq = xi[k, i] * xi[k, i]
                    a += wnu[i] * sq
                    b += wdnu[i] * sq
                    c += wrho[i] * xi[k, i]
                xin2[r, k] = a
                rate[r, k] = b
                xi0sq[r, k] = xi[k, 0] * xi[k, 0]
                phi1[r, k] = v[k, j + 1] * c
    return u, v, xi, xin2, rate, xi0sq, phi1


if _BACKEND == "numba":
    direct_march = njit(cache=True)(_direct_march_loops)
    history_march = njit(cache=True)(_history_march_loops)
    state_march = njit(cache=True)(_state_march_loops)
else:
    direct_march = _direct_march_numpy
    history_march = _history_march_numpy
    state_march = _state_march_numpy
