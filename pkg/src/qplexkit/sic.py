"""Weyl-Heisenberg orbits, SIC fiducial search and SIC-derived tensors."""

from __future__ import annotations

import functools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import helmert
from scipy.optimize import least_squares, minimize

from .operator_core import as_matrix, as_pure_state, complex_to_pairs, dagger, pairs_to_complex

log = logging.getLogger(__name__)

MAX_SEARCH_DIM = 16


@dataclass(frozen=True)
class WeylHeisenbergOp:
    dim: int
    shift_power: int
    clock_power: int
    matrix: np.ndarray = field(repr=False)


@functools.lru_cache(maxsize=None)
def _wh_stack(d: int) -> np.ndarray:
    omega = np.exp(2j * np.pi / d)
    tau = -np.exp(1j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)  # |k> -> |k+1>
    clock = np.diag(omega ** np.arange(d))
    ops = np.empty((d * d, d, d), dtype=complex)
    xa = np.eye(d)
    for a in range(d):
        zb = np.eye(d, dtype=complex)
        for b in range(d):
            ops[a * d + b] = tau ** (a * b) * (xa @ zb)
            zb = zb @ clock
        xa = shift @ xa
    ops.setflags(write=False)
    return ops


def wh_displacement(d: int, a: int, b: int) -> WeylHeisenbergOp:
    """``D(a, b) = tau^(ab) X^a Z^b`` with ``tau = -exp(i pi / d)``.

    Powers are reduced mod d, so the phase is that of the reduced pair.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    a %= d
    b %= d
    return WeylHeisenbergOp(d, a, b, _wh_stack(d)[a * d + b].copy())


def wh_group(d: int) -> np.ndarray:
    """All d^2 displacement operators, indexed ``a * d + b``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return _wh_stack(d)


def wh_orbit(fiducial) -> np.ndarray:
    """Rows are ``D(a, b) |fiducial>`` at index ``a * d + b``."""
    psi = as_pure_state(fiducial)
    return wh_group(psi.size) @ psi


def frame_potential(vectors) -> float:
    """Sum over ordered pairs j != k of ``(|<v_j|v_k>|^2 - 1/(d+1))^2``."""
    v = np.asarray(vectors, dtype=complex)
    d = v.shape[1]
    ov = np.abs(v.conj() @ v.T) ** 2
    np.fill_diagonal(ov, 1.0 / (d + 1))
    return float(np.sum((ov - 1.0 / (d + 1)) ** 2))


@dataclass(frozen=True)
class SicReport:
    d: int
    overlap_deviation: float
    norm_deviation: float
    completeness_deviation: float
    tol: float

    @property
    def off_diagonal_target(self) -> float:
        return 1.0 / (self.d + 1)

    @property
    def ok(self) -> bool:
        worst = max(self.overlap_deviation, self.norm_deviation, self.completeness_deviation)
        return worst <= self.tol

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "pass": self.ok,
            "off_diagonal_target": self.off_diagonal_target,
            "overlap_deviation": self.overlap_deviation,
            "norm_deviation": self.norm_deviation,
            "completeness_deviation": self.completeness_deviation,
            "tol": self.tol,
        }


def sic_verify(vectors, tol: float = 1e-8) -> SicReport:
    v = np.asarray(vectors, dtype=complex)
    if v.ndim != 2 or v.shape[0] != v.shape[1] ** 2:
        raise ValueError(f"a SIC needs d^2 vectors of dimension d, got shape {v.shape}")
    d = v.shape[1]
    ov = np.abs(v.conj() @ v.T) ** 2
    target = (d * np.eye(d * d) + 1) / (d + 1)
    norms = np.linalg.norm(v, axis=1)
    frame = np.einsum("ja,jb->ab", v, v.conj())
    return SicReport(
        d=d,
        overlap_deviation=float(np.max(np.abs(ov - target))),
        norm_deviation=float(np.max(np.abs(norms - 1))),
        completeness_deviation=float(np.max(np.abs(frame - d * np.eye(d)))),
        tol=tol,
    )


@dataclass(frozen=True)
class Sic:
    """A verified SIC given as the Weyl-Heisenberg orbit of a fiducial."""

    dim: int
    fiducial: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)

    @classmethod
    def from_fiducial(cls, fiducial, tol: float = 1e-8) -> Sic:
        psi = as_pure_state(fiducial, tol=1e-10)
        psi = psi / np.linalg.norm(psi)
        vecs = wh_orbit(psi)
        report = sic_verify(vecs, tol)
        if not report:
            raise ValueError(f"orbit is not a SIC: {report.to_dict()}")
        return cls(psi.size, psi, vecs)

    @property
    def n(self) -> int:
        return self.dim**2

    @functools.cached_property
    def projectors(self) -> np.ndarray:
        return np.einsum("ja,jb->jab", self.vectors, self.vectors.conj())

    @functools.cached_property
    def overlaps(self) -> np.ndarray:
        """Matrix of ``<pi_j|pi_k>``."""
        return self.vectors.conj() @ self.vectors.T


@dataclass(frozen=True)
class SearchResult:
    d: int
    fiducial: np.ndarray = field(repr=False)
    potential: float
    converged: bool
    restart: int
    seed: int
    potentials: tuple[float, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "amplitudes": complex_to_pairs(self.fiducial),
            "potential": self.potential,
            "seed": self.seed,
            "converged": self.converged,
            "restart": self.restart,
        }


def _objective(d: int):
    ops = wh_group(d)[1:]
    ops_h = dagger(ops)
    mu = 1.0 / (d + 1)
    scale = d * d

    def value_and_grad(x):
        psi = x[:d] + 1j * x[d:]
        n = np.vdot(psi, psi).real
        dpsi = ops @ psi
        h = dpsi @ psi.conj()
        hh = np.abs(h) ** 2
        r = hh / n**2 - mu
        # Wirtinger derivative of |<psi|D|psi>|^2 / <psi|psi>^2 w.r.t. conj(psi)
        ds = (h.conj()[:, None] * dpsi + h[:, None] * (ops_h @ psi)) / n**2
        ds -= 2 * (hh / n**3)[:, None] * psi[None, :]
        g = scale * 2 * (r @ ds)
        return scale * float(r @ r), np.concatenate([2 * g.real, 2 * g.imag])

    def residuals(x):
        psi = x[:d] + 1j * x[d:]
        n = np.vdot(psi, psi).real
        h = (ops @ psi) @ psi.conj()
        return d * (np.abs(h) ** 2 / n**2 - mu)

    return value_and_grad, residuals


def _normalize_phase(psi: np.ndarray) -> np.ndarray:
    psi = psi / np.linalg.norm(psi)
    k = int(np.argmax(np.abs(psi) > 1e-8))
    return psi * np.exp(-1j * np.angle(psi[k]))


def _run_restart(d: int, seed_seq: np.random.SeedSequence) -> tuple[float, np.ndarray]:
    value_and_grad, residuals = _objective(d)
    rng = np.random.default_rng(seed_seq)
    x0 = rng.standard_normal(2 * d)
    res = minimize(value_and_grad, x0, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 20 * d * d + 200})
    # Gauss-Newton polish: BFGS alone stalls near 1e-14 in the potential
    res = least_squares(residuals, res.x, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    psi = _normalize_phase(res.x[:d] + 1j * res.x[d:])
    return frame_potential(wh_orbit(psi)), psi


def search_fiducial(
    d: int, restarts: int = 10, seed: int = 0, tol: float = 1e-12, workers: int = 1
) -> SearchResult:
    """Numerically search for a Weyl-Heisenberg covariant SIC fiducial.

    Each restart draws a random start in C^d, runs BFGS on the orbit's frame
    potential and then a least-squares polish. All restarts run; the result
    is the minimum by ``(potential, restart index)``, so the output depends
    only on ``seed`` and not on ``workers``.
    """
    if not 2 <= d <= MAX_SEARCH_DIM:
        raise ValueError(f"d must be in [2, {MAX_SEARCH_DIM}]")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_restart, [d] * restarts, seeds))
    else:
        runs = [_run_restart(d, s) for s in seeds]
    potentials = tuple(p for p, _ in runs)
    best = min(range(restarts), key=lambda k: (potentials[k], k))
    converged = potentials[best] <= tol
    if not converged:
        log.warning("no restart converged for d=%d; best potential %.3e", d, potentials[best])
    return SearchResult(d, runs[best][1], potentials[best], converged, best, seed, potentials)


def save_fiducial(result: SearchResult, path) -> None:
    from ._jsonio import dumps

    Path(path).write_text(dumps(result.to_dict()) + "\n")


def load_fiducial(path) -> tuple[np.ndarray, dict]:
    """Read a fiducial file; returns the normalized vector and the raw record."""
    data = json.loads(Path(path).read_text())
    try:
        d = int(data["d"])
        psi = pairs_to_complex(data["amplitudes"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed fiducial file {path}: {exc}") from exc
    if psi.shape != (d,):
        raise ValueError(f"fiducial file {path}: expected {d} amplitudes, got {psi.shape}")
    return psi / np.linalg.norm(psi), data


@dataclass(frozen=True)
class QuasiSic:
    dim: int
    operators: np.ndarray = field(repr=False)

    @property
    def gram(self) -> np.ndarray:
        return np.einsum("jab,kba->jk", self.operators, self.operators).real

    def gram_deviation(self) -> float:
        d = self.dim
        return float(np.max(np.abs(self.gram - (d * np.eye(d * d) + 1) / (d + 1))))

    def completeness_deviation(self) -> float:
        return float(np.max(np.abs(self.operators.sum(axis=0) - self.dim * np.eye(self.dim))))

    def min_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.operators)[:, 0]


def gell_mann(d: int) -> np.ndarray:
    """Generalized Gell-Mann matrices, normalized so ``tr(F_a F_b) = delta_ab``."""
    mats = []
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = s
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j * s
            m[k, j] = 1j * s
            mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(mats)


def simplex_vectors(n: int) -> np.ndarray:
    """n unit vectors in R^(n-1) with pairwise dot product -1/(n-1).

    Column j of the Helmert basis is the projection of e_j onto the
    complement of the flat vector, expressed in orthonormal coordinates.
    """
    return np.sqrt(n / (n - 1)) * helmert(n).T


def quasi_sic(d: int) -> QuasiSic:
    """d^2 Hermitian operators with the SIC Gram matrix that sum to d I."""
    if d < 2:
        raise ValueError("d must be at least 2")
    basis = gell_mann(d)
    v = simplex_vectors(d * d)
    ops = np.eye(d) / d + np.sqrt((d - 1) / d) * np.einsum("ja,amn->jmn", v, basis)
    return QuasiSic(d, ops)


@dataclass(frozen=True)
class TripleProducts:
    """``T[j,k,l] = tr(Pi_j Pi_k Pi_l)`` and its real part ``C``."""

    dim: int
    T: np.ndarray = field(repr=False)

    @property
    def C(self) -> np.ndarray:
        return self.T.real

    def geometric_phases(self) -> np.ndarray:
        """``arg T`` on pairwise-distinct triples, NaN elsewhere."""
        n = self.T.shape[0]
        idx = np.arange(n)
        distinct = (
            (idx[:, None, None] != idx[None, :, None])
            & (idx[None, :, None] != idx[None, None, :])
            & (idx[:, None, None] != idx[None, None, :])
        )
        return np.where(distinct, np.angle(self.T), np.nan)


def triple_products(sic: Sic) -> TripleProducts:
    g = sic.overlaps
    return TripleProducts(sic.dim, np.einsum("jk,kl,lj->jkl", g, g, g))


def overlap_phases(sic: Sic, tol: float = 1e-10) -> np.ndarray:
    """Phases of ``<pi_j|pi_0>`` for j = 1 .. d^2 - 1."""
    ov = sic.overlaps[1:, 0]
    expected = 1 / np.sqrt(sic.dim + 1)
    worst = float(np.max(np.abs(np.abs(ov) - expected)))
    if worst > tol:
        raise ValueError(f"overlap magnitudes deviate from 1/sqrt(d+1) by {worst:.3e}")
    return np.angle(ov)


def otoc(w, v, fiducial, tol: float = 1e-10) -> complex:
    """``<pi_0| W^dag V^dag W V |pi_0>`` for a unitary W and WH operator V."""
    w = as_matrix(w)
    vm = v.matrix if isinstance(v, WeylHeisenbergOp) else as_matrix(v)
    psi = as_pure_state(fiducial, tol=1e-10)
    if not (w.shape == vm.shape == (psi.size, psi.size)):
        raise ValueError("dimension mismatch")
    if np.max(np.abs(dagger(w) @ w - np.eye(psi.size))) > tol:
        raise ValueError("w is not unitary")
    return complex(np.vdot(psi, dagger(w) @ dagger(vm) @ w @ vm @ psi))
