"""Dense complex linear algebra shared by the rest of the package.

Operators are plain ``numpy`` arrays of shape ``(d, d)`` and pure states are
arrays of shape ``(d,)``. The helpers here validate and build them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# eigenvalues below this magnitude count as zero
EIG_ZERO = 1e-12


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def as_pure_state(psi, tol: float = 1e-12) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm {np.linalg.norm(v)!r})")
    return v


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tr(a^dagger b)``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class DensityReport:
    hermiticity: float
    trace_error: float
    negativity: float
    tol: float

    @property
    def ok(self) -> bool:
        return max(self.hermiticity, self.trace_error, self.negativity) <= self.tol

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "hermiticity": self.hermiticity,
            "trace_error": self.trace_error,
            "negativity": self.negativity,
            "tol": self.tol,
        }


def is_density(m, tol: float = 1e-10) -> DensityReport:
    """Check Hermiticity, unit trace and positivity; truthy when all pass."""
    m = as_matrix(m)
    herm = float(np.max(np.abs(m - dagger(m)), initial=0.0))
    tr_err = abs(complex(np.trace(m)) - 1.0)
    w = np.linalg.eigvalsh(hermitian_part(m))
    neg = float(max(0.0, -w.min()))
    return DensityReport(herm, tr_err, neg, tol)


def random_pure_state(d: int, seed=None) -> np.ndarray:
    """Haar-random unit vector in C^d.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_orthogonal_pair(d: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Two Haar-random pure states with ``<psi|phi> = 0``."""
    psi = random_pure_state(d, rng)
    phi = random_pure_state(d, rng)
    phi = phi - np.vdot(psi, phi) * psi
    return psi, phi / np.linalg.norm(phi)


def random_density(d: int, rng, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix of the given rank."""
    rng = np.random.default_rng(rng)
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def projector(psi) -> np.ndarray:
    psi = as_pure_state(psi)
    return np.outer(psi, psi.conj())


def _sqrt_psd(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(hermitian_part(rho))
    w = np.clip(w, 0.0, None)
    return w, v, (v * np.sqrt(w)) @ dagger(v)


def psd_sqrt(rho) -> np.ndarray:
    """Square root of a PSD matrix, clamping tiny negative eigenvalues."""
    return _sqrt_psd(as_matrix(rho))[2]


def inv_sqrt(s) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(as_matrix(s)))
    if w.min() <= EIG_ZERO:
        raise np.linalg.LinAlgError("matrix is singular or not positive definite")
    return (v / np.sqrt(w)) @ dagger(v)


def homogeneity_map(rho, x, inverse: bool = False) -> np.ndarray:
    """Apply ``X -> rho^{1/2} X rho^{1/2}`` (or its inverse).

    The forward map sends the identity to ``rho``. The inverse exists only
    when ``rho`` has no zero eigenvalue.
    """
    rho = as_matrix(rho)
    x = as_matrix(x)
    if x.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {x.shape}")
    if not is_density(rho):
        raise ValueError("rho is not a density operator")
    w, v, root = _sqrt_psd(rho)
    if not inverse:
        return root @ x @ root
    if w.min() < EIG_ZERO:
        raise np.linalg.LinAlgError("rho is singular; homogeneity map is not invertible")
    iroot = (v / np.sqrt(w)) @ dagger(v)
    return iroot @ x @ iroot


def complex_to_pairs(a) -> list:
    """Serialize a complex array as nested ``[re, im]`` pairs, row-major."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def complete_to_identity(ops) -> np.ndarray:
    """Conjugate by ``S^{-1/2}``, ``S = sum_i A_i``, so the set sums to I."""
    ops = np.asarray(ops, dtype=complex)
    s = inv_sqrt(ops.sum(axis=0))
    return hermitian_part(s @ ops @ s)


def random_povm(d: int, m: int, rng) -> np.ndarray:
    """m full-rank random effects completed to a resolution of the identity."""
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((m, d, d)) + 1j * rng.standard_normal((m, d, d))
    return complete_to_identity(g @ dagger(g))


def random_unitary(d: int, rng) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
