"""Modal representation of the spatial operator and all norms.

The operator A is stored by its eigenvalues 0 < lambda_1 <= ... <= lambda_N,
so vectors in H, V, V* are coefficient sequences against the eigenbasis:

    ||u||_H^2  = sum u_k^2
    ||u||_V^2  = sum lambda_k u_k^2
    ||w||_V*^2 = sum w_k^2 / lambda_k

Memory fields carry an extra weighted direction: a WeightedField is an
N x G array sampled on a 1-d grid strictly inside (0, L), with weight mu
(history space) or nu (state space); its squared norm is

    sum_cells width * weight(point) * sum_k lambda_k f_{k,cell}^2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel

__all__ = [
    "ModalOperator",
    "Grid",
    "WeightedField",
    "build_operator",
    "midpoint_grid",
    "node_grid",
    "norm",
    "weighted_norm",
    "extended_norm",
]


@dataclass(frozen=True)
class ModalOperator:
    lambdas: np.ndarray
    domain_tag: str

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("eigenvalue list must be 1-d and nonempty")
        if lam[0] <= 0:
            raise ValueError("A must be strictly positive (lambda_1 > 0)")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nondecreasing")

    @property
    def N(self) -> int:
        return self.lambdas.size


def build_operator(domain_tag: str, N: int, lambdas=None) -> ModalOperator:
    """'dirichlet-laplacian-interval' gives lambda_k = k^2; 'explicit-list'
    takes user-supplied eigenvalues."""
    if N < 1:
        raise ValueError("need at least one mode")
    if domain_tag == "dirichlet-laplacian-interval":
        lam = np.arange(1, N + 1, dtype=float) ** 2
    elif domain_tag == "explicit-list":
        lam = np.asarray(lambdas, dtype=float)
        if lam.size != N:
            raise ValueError("explicit list length must equal N")
    else:
        raise ValueError(f"unknown domain tag {domain_tag!r}")
    return ModalOperator(lambdas=lam, domain_tag=domain_tag)


@dataclass(frozen=True)
class Grid:
    """Uniform 1-d sample grid of cell width `width` inside (0, length]."""

    points: np.ndarray
    width: float
    length: float

    @property
    def n(self) -> int:
        return self.points.size


def midpoint_grid(length: float, n: int) -> Grid:
    h = length / n
    return Grid(points=(np.arange(n) + 0.5) * h, width=h, length=length)


def node_grid(length: float, n: int) -> Grid:
    """Right-node grid s_i = (i+1)*h; used by the history marcher, where it
    makes the translation step an exact index shift."""
    h = length / n
    return Grid(points=(np.arange(n) + 1.0) * h, width=h, length=length)


@dataclass
class WeightedField:
    values: np.ndarray          # (N_modes, G)
    grid: Grid
    weight_tag: str             # 'mu' or 'nu'

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.weight_tag not in ("mu", "nu"):
            raise ValueError(f"unknown weight tag {self.weight_tag!r}")
        if self.values.shape[1] != self.grid.n:
            raise ValueError("field width must match grid size")

    def copy(self) -> "WeightedField":
        return WeightedField(self.values.copy(), self.grid, self.weight_tag)


def norm(vec: np.ndarray, op: ModalOperator, space: str) -> float:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (op.N,):
        raise ValueError("modal vector length must equal the mode count")
    if space == "H":
        return float(np.sqrt(np.sum(vec**2)))
    if space == "V":
        return float(np.sqrt(np.sum(op.lambdas * vec**2)))
    if space == "Vstar":
        return float(np.sqrt(np.sum(vec**2 / op.lambdas)))
    raise ValueError(f"unknown space {space!r}")


def _weight_values(f: WeightedField, k: Kernel) -> np.ndarray:
    if f.weight_tag == "mu":
        return k.mu(f.grid.points)
    return k.nu(f.grid.points)


def weighted_norm(f: WeightedField, op: ModalOperator, k: Kernel) -> float:
    if f.values.shape[0] != op.N:
        raise ValueError("field mode count must match the operator")
    if f.grid.length > k.ell_eff * (1 + 1e-12) and np.isfinite(k.ell):
        raise ValueError("field grid exceeds the kernel domain")
    w = _weight_values(f, k)
    per_cell = op.lambdas @ (f.values**2)
    return float(np.sqrt(f.grid.width * np.sum(w * per_cell)))


def extended_norm(u, v, f: WeightedField, op: ModalOperator, k: Kernel) -> float:
    """Norm on the extended space V x H x (weighted L2)."""
    return float(
        np.sqrt(
            norm(u, op, "V") ** 2
            + norm(v, op, "H") ** 2
            + weighted_norm(f, op, k) ** 2
        )
    )
