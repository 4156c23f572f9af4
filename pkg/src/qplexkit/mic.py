"""Minimal informationally complete measurements (MICs) and their dual frames."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .operator_core import (
    as_matrix,
    complete_to_identity,
    complex_to_pairs,
    dagger,
    hermitian_part,
    hs_inner,
    pairs_to_complex,
    random_orthogonal_pair,
    random_pure_state,
)
from .sic import Sic

COND_LIMIT = 1e12


def _gram(ops: np.ndarray) -> np.ndarray:
    return np.einsum("iab,jba->ij", ops, ops).real


def _frame_duals(ops: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dual operators and ``G^-1`` from the SVD of the real synthesis matrix.

    With A holding the elements as rows of real coordinates, ``G = A A^T``.
    Writing ``A = U S V^T`` gives the spectral decomposition ``G = U S^2 U^T``
    directly, and the duals are the rows of ``U S^-1 V^T``. Working with A
    instead of G keeps the rounding error proportional to sqrt(cond G).
    """
    n = ops.shape[0]
    a = np.concatenate([ops.real.reshape(n, -1), ops.imag.reshape(n, -1)], axis=1)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.min() <= 0 or (s.max() / s.min()) ** 2 > COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"Gram matrix is singular or ill-conditioned (eigenvalues {s.min() ** 2:.3e}..{s.max() ** 2:.3e})"
        )
    dual_rows = (u / s) @ vt
    half = dual_rows.shape[1] // 2
    duals = (dual_rows[:, :half] + 1j * dual_rows[:, half:]).reshape(ops.shape)
    return hermitian_part(duals), (u / s**2) @ u.T


@dataclass(frozen=True)
class Mic:
    dim: int
    elements: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    gram_inv: np.ndarray = field(repr=False)
    duals: np.ndarray = field(repr=False)

    @classmethod
    def from_elements(cls, elements, tol: float = 1e-10) -> Mic:
        ops = np.asarray(elements, dtype=complex)
        report = mic_verify(ops, tol)
        if not report:
            raise ValueError(f"not a MIC: {report.to_dict()}")
        duals, ginv = _frame_duals(ops)
        return cls(ops.shape[1], ops, _gram(ops), ginv, duals)

    def born(self, rho) -> np.ndarray:
        """Outcome probabilities ``tr(rho E_i)``."""
        return np.einsum("iab,ba->i", self.elements, as_matrix(rho)).real

    def conjugated(self, u) -> Mic:
        u = as_matrix(u)
        return Mic.from_elements(u @ self.elements @ dagger(u))

    def to_dict(self) -> dict:
        return {"d": self.dim, "elements": [complex_to_pairs(e) for e in self.elements]}


@dataclass(frozen=True)
class MicReport:
    d: int
    negativity: float
    completeness_deviation: float
    min_gram_eigenvalue: float
    tol: float

    @property
    def ok(self) -> bool:
        return (
            self.negativity <= self.tol
            and self.completeness_deviation <= self.tol
            and self.min_gram_eigenvalue > self.tol
        )

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "pass": self.ok,
            "d": self.d,
            "negativity": self.negativity,
            "completeness_deviation": self.completeness_deviation,
            "min_gram_eigenvalue": self.min_gram_eigenvalue,
            "tol": self.tol,
        }


def mic_verify(elements, tol: float = 1e-10) -> MicReport:
    """Positivity, completeness and linear independence of d^2 operators."""
    ops = np.asarray(elements, dtype=complex)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] != ops.shape[1] ** 2:
        raise ValueError(f"a MIC needs d^2 square d x d matrices, got shape {ops.shape}")
    d = ops.shape[1]
    herm = float(np.max(np.abs(ops - dagger(ops))))
    neg = max(herm, float(max(0.0, -np.linalg.eigvalsh(hermitian_part(ops)).min())))
    comp = float(np.max(np.abs(ops.sum(axis=0) - np.eye(d))))
    gmin = float(np.linalg.eigvalsh(_gram(ops)).min())
    return MicReport(d, neg, comp, gmin, tol)


def mic_from_sic(sic: Sic) -> Mic:
    """``E_i = Pi_i / d``; the duals are ``(d+1) Pi_i - I``."""
    return Mic.from_elements(sic.projectors / sic.dim)


def random_rank1_mic(d: int, seed=None) -> Mic:
    rng = np.random.default_rng(seed)
    vecs = np.array([random_pure_state(d, rng) for _ in range(d * d)])
    ops = np.einsum("ia,ib->iab", vecs, vecs.conj())
    return Mic.from_elements(complete_to_identity(ops))


def perturbed_mic(mic: Mic, scale: float, seed=None) -> Mic:
    """Add small random PSD noise to each element and restore completeness."""
    rng = np.random.default_rng(seed)
    d = mic.dim
    g = rng.standard_normal((d * d, d, d)) + 1j * rng.standard_normal((d * d, d, d))
    noise = g @ dagger(g)
    return Mic.from_elements(complete_to_identity(mic.elements + scale * noise))


def dual_basis(mic: Mic) -> np.ndarray:
    """``E~_i = sum_j [G^-1]_ij E_j``; biorthogonal to the elements."""
    return _frame_duals(mic.elements)[0]


def reconstruct(p, mic: Mic) -> np.ndarray:
    """``rho = sum_i p_i E~_i``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (mic.dim**2,):
        raise ValueError(f"expected {mic.dim ** 2} probabilities")
    return np.einsum("i,iab->ab", p, mic.duals)


def hs_via_gram(p1, p2, mic: Mic) -> float:
    """``tr(rho sigma)`` computed from Born probabilities through ``G^-1``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape or p1.shape != (mic.dim**2,):
        raise ValueError("probability vectors must both have d^2 entries")
    return float(p1 @ mic.gram_inv @ p2)


def hs_direct(p1, p2, mic: Mic) -> float:
    return hs_inner(reconstruct(p1, mic), reconstruct(p2, mic)).real


def self_duality_gap(mic: Mic) -> float:
    """Frobenius distance of ``G^-1`` from the identity; never zero for a MIC."""
    return float(np.linalg.norm(mic.gram_inv - np.eye(mic.dim**2)))


def is_rank1(mic: Mic, tol: float = 1e-10) -> bool:
    w = np.linalg.eigvalsh(mic.elements)
    return bool(np.all(np.abs(w[:, :-1]) < tol))


@dataclass(frozen=True)
class OverlapReport:
    trials: int
    min_overlap: float
    max_overlap: float
    rank1: bool

    @property
    def ok(self) -> bool:
        return self.min_overlap > 0

    def to_dict(self) -> dict:
        return {
            "pass": self.ok,
            "trials": self.trials,
            "min_overlap": self.min_overlap,
            "max_overlap": self.max_overlap,
            "rank1": self.rank1,
        }


def orthogonal_overlap_check(mic: Mic, trials: int = 1000, seed=0) -> OverlapReport:
    """Smallest ``<p1, p2>`` over random orthogonal pure-state pairs.

    For a rank-1 MIC this stays strictly positive: orthogonal states never
    get disjointly supported probability vectors.
    """
    rng = np.random.default_rng(seed)
    overlaps = np.empty(trials)
    for t in range(trials):
        psi, phi = random_orthogonal_pair(mic.dim, rng)
        p1 = mic.born(np.outer(psi, psi.conj()))
        p2 = mic.born(np.outer(phi, phi.conj()))
        overlaps[t] = p1 @ p2
    return OverlapReport(trials, float(overlaps.min()), float(overlaps.max()), is_rank1(mic))


def load_mic(path) -> Mic:
    data = json.loads(Path(path).read_text())
    try:
        ops = np.array([pairs_to_complex(e) for e in data["elements"]])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed MIC file {path}: {exc}") from exc
    if "d" in data and ops.shape[1:] != (int(data["d"]),) * 2:
        raise ValueError(f"MIC file {path}: element shape {ops.shape[1:]} does not match d={data['d']}")
    return Mic.from_elements(ops)
