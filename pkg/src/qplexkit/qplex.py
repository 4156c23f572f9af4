"""Generalized qplex constants and the probability-vector side of the theory.

A generalized qplex lives in the probability simplex of R^N and is fixed by
the constants ``(d, q, N, L, U)``. With ``q = 2`` the constants are those of
a SIC representation of quantum states: ``N = d^2``, ``L = 1/(d(d+1))`` and
``U = 2L``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .operator_core import as_matrix, hermitian_part
from .sic import Sic, TripleProducts

BAND_TOL = 1e-12


class NonRealizableWarning(UserWarning):
    """The urgleichung produced negative entries."""


@dataclass(frozen=True)
class QplexParams:
    d: int
    q: int
    N: int
    L: float
    U: float

    def to_dict(self) -> dict:
        return {"d": self.d, "q": self.q, "N": self.N, "L": self.L, "U": self.U}

    @classmethod
    def from_dict(cls, data: dict) -> QplexParams:
        return make_params(int(data["d"]), int(data.get("q", 2)))

    @property
    def flat(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)


def polygonal_number(d: int, q: int) -> int:
    """``d + q d(d-1)/2``: the d-th polygonal number with q+2 sides."""
    if d < 1 or q < 0:
        raise ValueError("need d >= 1 and q >= 0")
    return d + q * d * (d - 1) // 2


def upper_from_lower(N: int, L: float) -> float:
    """Squared length of the basis distributions, ``1 + L(N-1)(NL-2)``."""
    return 1 + L * (N - 1) * (N * L - 2)


def make_params(d: int, q: int = 2) -> QplexParams:
    """Constants of the generalized qplex with maximal MMD size d.

    L is the root in ``[0, 1/N)`` of the condition that the MMD bound
    ``1 + (U - 1/N)/(1/N - L)`` equals d, with U tied to L. The condition is
    the quadratic ``N(N-1)L^2 - (2N-d-1)L + (N-d)/N = 0`` whose roots are
    ``1/N`` and ``(N-d)/(N(N-1))``.
    """
    if d < 2 or q < 0:
        raise ValueError("need d >= 2 and q >= 0")
    N = polygonal_number(d, q)
    if N == d:
        L = 0.0
    else:
        L = (N - d) / (N * (N - 1))
    if not 0 <= L < 1 / N:
        raise ValueError(f"no admissible lower bound for d={d}, q={q}")
    if q == 2:
        L = 1 / (d * (d + 1))
        U = 2 / (d * (d + 1))
    else:
        U = upper_from_lower(N, L)
    return QplexParams(d, q, N, L, U)


def as_prob_vector(p, N: int | None = None, tol: float = 1e-12, signed: bool = False) -> np.ndarray:
    """Validate a probability vector (or a quasi-probability when ``signed``)."""
    v = np.asarray(p, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if N is not None and v.size != N:
        raise ValueError(f"expected {N} entries, got {v.size}")
    if abs(v.sum() - 1) > tol:
        raise ValueError(f"entries sum to {v.sum()!r}, not 1")
    if not signed and v.min() < -tol:
        raise ValueError("probability vector has negative entries")
    return v


def as_cond_matrix(r, N: int | None = None, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(r, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if N is not None and m.shape[1] != N:
        raise ValueError(f"expected {N} condition columns, got {m.shape[1]}")
    if np.max(np.abs(m.sum(axis=0) - 1)) > tol:
        raise ValueError("columns of a conditional matrix must sum to 1")
    if m.min() < -tol or m.max() > 1 + tol:
        raise ValueError("conditional probabilities must lie in [0, 1]")
    return m


def basis_distribution(params: QplexParams, k: int) -> np.ndarray:
    if not 0 <= k < params.N:
        raise IndexError(f"basis index {k} out of range for N={params.N}")
    e = np.full(params.N, params.L)
    e[k] += 1 - params.N * params.L
    return e


def basis_matrix(params: QplexParams) -> np.ndarray:
    """Matrix whose k-th column is the k-th basis distribution."""
    N, L = params.N, params.L
    return (1 - N * L) * np.eye(N) + L


def phi_matrix(params: QplexParams) -> np.ndarray:
    """``(I - L J)/(1 - NL)``, the inverse of :func:`basis_matrix`."""
    N, L = params.N, params.L
    if abs(1 - N * L) < 1e-15:
        raise ZeroDivisionError("NL = 1 makes Phi singular")
    return (np.eye(N) - L) / (1 - N * L)


class Consistency(enum.Enum):
    BELOW_L = "below_L"
    IN_BAND = "in_band"
    ABOVE_U = "above_U"


def consistency(p1, p2, params: QplexParams, tol: float = BAND_TOL) -> Consistency:
    """Locate ``<p1, p2>`` relative to the closed band ``[L, U]``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != (params.N,) or p2.shape != (params.N,):
        raise ValueError(f"vectors must have {params.N} entries")
    ip = float(p1 @ p2)
    if ip < params.L - tol:
        return Consistency.BELOW_L
    if ip > params.U + tol:
        return Consistency.ABOVE_U
    return Consistency.IN_BAND


def urgleichung(r, p, params: QplexParams, tol: float = 1e-12) -> np.ndarray:
    """Probabilities ``q = r Phi p`` for a measurement r given reference data p.

    Negative entries mean (r, p) cannot be realized jointly; they are kept
    as-is and a :class:`NonRealizableWarning` is issued.
    """
    r = as_cond_matrix(r, params.N)
    p = as_prob_vector(p, params.N)
    if params.q == 2:
        d = params.d
        out = r @ ((d + 1) * p - 1 / d)
    else:
        out = r @ (phi_matrix(params) @ p)
    if out.min() < -tol:
        warnings.warn(f"urgleichung output has negative entry {out.min():.3e}", NonRealizableWarning, stacklevel=2)
    return out


def state_to_probs(rho, sic: Sic) -> np.ndarray:
    """``p(j) = tr(rho Pi_j)/d``."""
    rho = as_matrix(rho)
    if rho.shape != (sic.dim, sic.dim):
        raise ValueError("dimension mismatch between state and SIC")
    v = sic.vectors
    return np.einsum("ja,ab,jb->j", v.conj(), rho, v).real / sic.dim


def measurement_matrix(povm, sic: Sic) -> np.ndarray:
    """``r(j|i) = tr(Pi_i E_j)``: outcome j given reference post-measurement state i."""
    povm = np.asarray(povm, dtype=complex)
    v = sic.vectors
    return np.einsum("ia,jab,ib->ji", v.conj(), povm, v).real


def probs_to_state(p, sic: Sic, tol: float = 1e-10) -> tuple[np.ndarray, bool]:
    """Invert :func:`state_to_probs`; returns the operator and a PSD flag."""
    d = sic.dim
    p = as_prob_vector(p, d * d, signed=True)
    coeff = (d + 1) * p - 1 / d
    rho = hermitian_part(np.einsum("j,jab->ab", coeff, sic.projectors))
    psd = bool(np.linalg.eigvalsh(rho)[0] >= -tol)
    return rho, psd


def _floor(x: float) -> int:
    return math.floor(x + 1e-9)


def mmd_bound(params: QplexParams) -> int:
    """Largest possible size of a mutually maximally distant set."""
    N, L, U = params.N, params.L, params.U
    r_mid2 = 1 / N - L
    if r_mid2 <= 0:
        raise ValueError("L must be below 1/N")
    return _floor(1 + (U - 1 / N) / r_mid2)


@dataclass(frozen=True)
class MmdReport:
    m: int
    bound: int
    gram: np.ndarray
    gram_deviation: float
    sum_deviation: float | None
    tol: float

    @property
    def saturated(self) -> bool:
        return self.m == self.bound

    @property
    def ok(self) -> bool:
        if self.gram_deviation > self.tol or self.m > self.bound:
            return False
        return self.sum_deviation is None or self.sum_deviation <= self.tol

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "pass": self.ok,
            "m": self.m,
            "bound": self.bound,
            "gram": self.gram,
            "gram_deviation": self.gram_deviation,
            "sum_deviation": self.sum_deviation,
            "tol": self.tol,
        }


def mmd_verify(vectors, params: QplexParams, tol: float = 1e-9) -> MmdReport:
    """Check ``<p_k,p_k> = U`` and ``<p_k,p_l> = L``; at saturation also ``sum p_k = m c``."""
    P = np.atleast_2d(np.asarray(vectors, dtype=float))
    if P.shape[0] == 0 or P.shape[1] != params.N:
        raise ValueError(f"need a nonempty set of {params.N}-entry vectors")
    m = P.shape[0]
    gram = P @ P.T
    target = (params.U - params.L) * np.eye(m) + params.L
    bound = mmd_bound(params)
    sum_dev = None
    if m == bound:
        sum_dev = float(np.max(np.abs(P.sum(axis=0) - m * params.flat)))
    return MmdReport(m, bound, gram, float(np.max(np.abs(gram - target))), sum_dev, tol)


def mmd_to_measurement(vectors, params: QplexParams, tol: float = 1e-9) -> np.ndarray:
    """Measurement matrix ``r(k|i) = (N/m) p_k(i)`` built from a saturated MMD set."""
    report = mmd_verify(vectors, params, tol)
    if not report.ok or not report.saturated:
        raise ValueError(f"set is not a saturated MMD set: {report.to_dict()}")
    P = np.asarray(vectors, dtype=float)
    return params.N / report.m * P


def zeros_bound(params: QplexParams) -> int:
    """Maximum number of zero entries a qplex point can have, ``floor(N - 1/U)``."""
    return _floor(params.N - 1 / params.U)


def count_zeros(p, tol: float = 1e-12) -> int:
    return int(np.sum(np.abs(np.asarray(p, dtype=float)) < tol))


def qbic_rhs(d: int) -> float:
    return (d + 7) / (d + 1) ** 3


def qbic_residuals(p, trip: TripleProducts, d: int) -> tuple[float, float]:
    """Distances from the sphere ``sum p^2 = 2/(d(d+1))`` and the cubic surface."""
    p = np.asarray(p, dtype=float)
    if p.shape != (d * d,) or trip.dim != d:
        raise ValueError(f"expected {d * d} entries and a matching triple-product tensor")
    quad = abs(float(p @ p) - 2 / (d * (d + 1)))
    cubic = abs(float(np.einsum("jkl,j,k,l->", trip.C, p, p, p)) - qbic_rhs(d))
    return quad, cubic


def basis_simplex_membership(p, params: QplexParams, tol: float = 1e-12) -> tuple[bool, np.ndarray]:
    """Expand p in the basis distributions; member when all weights are nonnegative."""
    p = as_prob_vector(p, params.N, signed=True)
    lam = phi_matrix(params) @ p
    return bool(lam.min() >= -tol), lam
