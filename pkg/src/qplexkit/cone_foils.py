"""Qplectic cone theories and Jordan-algebra foil arithmetic."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .qplex import QplexParams, make_params, polygonal_number

__all__ = [
    "ConeTheory",
    "SpinFactorElement",
    "build_cone",
    "f_map",
    "f_inverse",
    "jordan_product",
    "jordan_identity_residual",
    "spin_factor_product",
    "formally_real_check",
    "jordan_param_count",
    "polygonal_number",
    "foil_table",
    "real_equiangular_search",
]


@dataclass(frozen=True)
class ConeTheory:
    """Basis of a normalized cone slice with Gram ``1 + NL(delta_ij - 1)``.

    Vectors are rows of ``basis`` and ``dual_basis`` living in R^N.
    """

    params: QplexParams
    basis: np.ndarray = field(repr=False)
    order_unit: np.ndarray = field(repr=False)
    center: np.ndarray = field(repr=False)
    dual_basis: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def gram(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def target_gram(self) -> np.ndarray:
        N, L = self.params.N, self.params.L
        return 1 + N * L * (np.eye(N) - 1)

    def random_normalized_point(self, rng, spread: float = 1.0) -> np.ndarray:
        """Random point on the hyperplane ``<I, v> = 1``."""
        rng = np.random.default_rng(rng)
        u = self.order_unit
        z = rng.standard_normal(self.N)
        z -= (z @ u) / (u @ u) * u
        return self.center + spread * z / np.linalg.norm(z)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "basis": self.basis,
            "order_unit": self.order_unit,
            "center": self.center,
            "dual_basis": self.dual_basis,
        }


def build_cone(params: QplexParams) -> ConeTheory:
    """Realize the basis as ``e_i = a u_i + b 1`` in R^N.

    ``a^2 = NL`` fixes the diagonal-minus-off-diagonal gap and b solves
    ``2ab + N b^2 = 1 - NL`` for the off-diagonal value.
    """
    N, L = params.N, params.L
    nl = N * L
    if nl <= 0 or nl >= 1:
        raise ValueError(f"Gram matrix is not positive definite for NL={nl}")
    a = np.sqrt(nl)
    b = (np.sqrt(nl + N * (1 - nl)) - a) / N
    basis = a * np.eye(N) + b
    center = basis.mean(axis=0)
    norm_sq = 1 / (1 + L - nl)
    order_unit = norm_sq * center
    dual = (basis - (1 - nl) / (1 + L - nl) * center) / nl
    return ConeTheory(params, basis, order_unit, center, dual)


def f_map(cone: ConeTheory, v, tol: float = 1e-10) -> np.ndarray:
    """Affine bijection to R^N: ``p_i = (1 - NL)<e~_i, v> + L``."""
    v = np.asarray(v, dtype=float)
    if abs(cone.order_unit @ v - 1) > tol:
        raise ValueError("v is not on the normalized hyperplane")
    N, L = cone.params.N, cone.params.L
    return (1 - N * L) * (cone.dual_basis @ v) + L


def f_inverse(cone: ConeTheory, p, tol: float = 1e-10) -> np.ndarray:
    """``v = sum_j (p_j - L)/(1 - NL) e_j``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (cone.N,) or abs(p.sum() - 1) > tol:
        raise ValueError(f"p must have {cone.N} entries summing to 1")
    N, L = cone.params.N, cone.params.L
    return ((p - L) / (1 - N * L)) @ cone.basis


def _check_hermitian(x: np.ndarray, tol: float) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(x - x.conj().T), initial=0.0) > tol:
        raise ValueError("Jordan product needs Hermitian arguments")
    return x


def jordan_product(x, y, tol: float = 1e-10) -> np.ndarray:
    """Symmetrized product ``(xy + yx)/2`` of Hermitian matrices."""
    x = _check_hermitian(x, tol)
    y = _check_hermitian(y, tol)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    return (x @ y + y @ x) / 2


@dataclass(frozen=True)
class SpinFactorElement:
    v: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "alpha", float(self.alpha))

    def norm(self) -> float:
        return float(np.sqrt(self.v @ self.v + self.alpha**2))

    def __sub__(self, other: SpinFactorElement) -> SpinFactorElement:
        return SpinFactorElement(self.v - other.v, self.alpha - other.alpha)

    def __add__(self, other: SpinFactorElement) -> SpinFactorElement:
        return SpinFactorElement(self.v + other.v, self.alpha + other.alpha)

    @classmethod
    def unit(cls, n: int) -> SpinFactorElement:
        return cls(np.zeros(n), 1.0)


def spin_factor_product(a: SpinFactorElement, b: SpinFactorElement) -> SpinFactorElement:
    """``(v, alpha) o (w, beta) = (alpha w + beta v, v.w + alpha beta)``."""
    if a.v.shape != b.v.shape:
        raise ValueError("spin factor elements must have equal vector length")
    return SpinFactorElement(a.alpha * b.v + b.alpha * a.v, float(a.v @ b.v) + a.alpha * b.alpha)


def _algebra(x):
    """Product and norm for whichever algebra x belongs to."""
    if isinstance(x, SpinFactorElement):
        return spin_factor_product, SpinFactorElement.norm
    return jordan_product, lambda z: float(np.linalg.norm(z))


def jordan_identity_residual(x, y) -> float:
    """``||(x o y) o (x o x) - x o (y o (x o x))||`` for either algebra."""
    mul, norm = _algebra(x)
    xx = mul(x, x)
    return norm(mul(mul(x, y), xx) - mul(x, mul(y, xx)))


def formally_real_check(elements, zero_tol: float = 1e-12, elem_tol: float = 1e-8) -> bool:
    """Does ``sum x_k o x_k = 0`` force every ``x_k = 0`` on this instance?"""
    elements = list(elements)
    if not elements:
        return True
    mul, norm = _algebra(elements[0])
    total = mul(elements[0], elements[0])
    for x in elements[1:]:
        total = total + mul(x, x)
    if norm(total) >= zero_tol:
        return True
    return all(norm(x) < elem_tol for x in elements)


_FAMILY_Q = {"real": 1, "complex": 2, "quaternionic": 4}


def jordan_param_count(family: str, d: int) -> int:
    """Real parameters of a d x d self-adjoint matrix over the given field."""
    if d < 1:
        raise ValueError("d must be positive")
    if family == "real":
        return d * (d + 1) // 2
    if family == "complex":
        return d * d
    if family == "quaternionic":
        return d * (2 * d - 1)
    raise ValueError(f"unknown family {family!r}; expected one of {sorted(_FAMILY_Q)}")


def foil_table(d_max: int) -> str:
    """CSV with columns d, family, q, N for d = 1 .. d_max."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "family", "q", "N"])
    for d in range(1, d_max + 1):
        for family, q in _FAMILY_Q.items():
            w.writerow([d, family, q, jordan_param_count(family, d)])
    return buf.getvalue()


@dataclass(frozen=True)
class EquiangularResult:
    d: int
    n_lines: int
    vectors: np.ndarray = field(repr=False)
    mu: float
    deviation: float
    success: bool
    restart: int

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n_lines": self.n_lines,
            "mu": self.mu,
            "deviation": self.deviation,
            "success": self.success,
            "restart": self.restart,
        }


# Upper bound on the co-optimized cos^2. Without it the search collapses all
# lines onto one (cos^2 = 1, zero residual).
MU_CAP = 0.5


def _equiangular_residuals(x, d, n, iu):
    v = x[:-1].reshape(n, d)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    g = v @ v.T
    return g[iu] ** 2 - x[-1]


def real_equiangular_search(
    d: int, n_lines: int, restarts: int = 20, seed: int = 0, success_tol: float = 1e-10
) -> EquiangularResult:
    """Look for n equiangular lines in R^d, co-optimizing the common cos^2."""
    if not 2 <= d <= 8:
        raise ValueError("d must be in [2, 8]")
    if not 2 <= n_lines <= d * (d + 1) // 2:
        raise ValueError("n_lines must be between 2 and d(d+1)/2")
    iu = np.triu_indices(n_lines, 1)
    lower = np.full(n_lines * d + 1, -np.inf)
    upper = np.full(n_lines * d + 1, np.inf)
    lower[-1], upper[-1] = 0.0, MU_CAP
    best = None
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(restarts)):
        rng = np.random.default_rng(ss)
        x0 = np.append(rng.standard_normal(n_lines * d), rng.uniform(0, MU_CAP))
        res = least_squares(
            _equiangular_residuals, x0, args=(d, n_lines, iu), bounds=(lower, upper),
            method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
        )
        dev = float(np.max(np.abs(res.fun)))
        if best is None or dev < best[0]:
            best = (dev, k, res.x)
    dev, k, x = best
    v = x[:-1].reshape(n_lines, d)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return EquiangularResult(d, n_lines, v, float(x[-1]), dev, dev < success_tol, k)


def cone_for(d: int, q: int) -> ConeTheory:
    return build_cone(make_params(d, q))
