"""Gegenbauer (ultraspherical) polynomials attached to the sphere S^m.

``P_k^m`` is the ultraspherical polynomial ``C_k^lam`` with ``lam = (m-1)/2``,
orthogonal on [-1, 1] against ``(1-t^2)^((m-2)/2)``.  ``m = INF`` selects the
monomial basis ``t^k`` used for the Hilbert sphere.

Besides evaluation this module provides Gauss quadrature for the Gegenbauer
weight and three expansion routines (Chebyshev, monomial, linearization),
all computed by orthogonal projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import DomainError, QuadratureError, UnsupportedDimension

__all__ = [
    "INF",
    "CLAMP_TOL",
    "ExpansionCoefficients",
    "check_dim",
    "is_infinite",
    "eval_gegenbauer",
    "eval_monomial",
    "eval_chebyshev",
    "eval_basis",
    "basis_table",
    "value_at_one",
    "eval_normalized",
    "quadrature_rule",
    "norm_squared",
    "orthogonality_check",
    "surface_area",
    "chebyshev_expansion",
    "monomial_decomposition",
    "linearization",
]

INF = math.inf
CLAMP_TOL = 1e-12

NEWTON_TOL = 1e-14
NEWTON_MAXITER = 100


def is_infinite(m) -> bool:
    return isinstance(m, float) and math.isinf(m) and m > 0


def check_dim(m, allow_infinite: bool = True):
    """Validate a sphere dimension; return it as ``int`` or ``INF``.

    Raises :class:`UnsupportedDimension` for the circle ``m = 1``.
    """
    if isinstance(m, str) and m.lower() in ("inf", "infinity"):
        m = INF
    if is_infinite(m):
        if not allow_infinite:
            raise UnsupportedDimension("a finite sphere dimension is required here")
        return INF
    if isinstance(m, bool) or not float(m).is_integer():
        raise ValueError(f"sphere dimension must be an integer or 'inf', got {m!r}")
    m = int(m)
    if m == 1:
        raise UnsupportedDimension("the circle S^1 is not supported (m = 1)")
    if m < 1:
        raise ValueError(f"sphere dimension must be >= 2, got {m}")
    return m


def _check_degree(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {k!r}")
    return int(k)


def _clamp(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + CLAMP_TOL) or np.any(np.isnan(t)):
        raise DomainError("argument outside [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def _scalar_or_array(out, t):
    return float(out) if np.ndim(t) == 0 else out


def _gegenbauer_rows(kmax: int, lam: float, t: np.ndarray) -> np.ndarray:
    rows = np.empty((kmax + 1,) + t.shape)
    rows[0] = 1.0
    if kmax >= 1:
        rows[1] = 2.0 * lam * t
    for n in range(2, kmax + 1):
        rows[n] = (2.0 * (n + lam - 1.0) * t * rows[n - 1]
                   - (n + 2.0 * lam - 2.0) * rows[n - 2]) / n
    return rows


def basis_table(kmax: int, m, t) -> np.ndarray:
    """Rows ``P_0^m(t), ..., P_kmax^m(t)`` stacked along a new leading axis.

    ``m = INF`` gives monomials and ``m = 0`` Chebyshev polynomials of the
    first kind.  ``t`` is clamped to [-1, 1] (tolerance ``CLAMP_TOL``).
    """
    kmax = _check_degree(kmax)
    t = _clamp(t)
    if is_infinite(m):
        return t[None, ...] ** np.arange(kmax + 1).reshape((-1,) + (1,) * t.ndim)
    if m == 0:
        theta = np.arccos(t)
        return np.cos(np.arange(kmax + 1).reshape((-1,) + (1,) * t.ndim) * theta)
    m = check_dim(m)
    return _gegenbauer_rows(kmax, (m - 1) / 2.0, t)


def eval_basis(k: int, m, t):
    """``P_k^m(t)`` for any supported basis label (finite m, ``INF`` or 0)."""
    k = _check_degree(k)
    return _scalar_or_array(basis_table(k, m, t)[k], t)


def eval_gegenbauer(k: int, m, t):
    """Evaluate ``P_k^m(t)`` by the three-term recurrence.

    >>> eval_gegenbauer(2, 2, 0.0)
    -0.5
    """
    m = check_dim(m, allow_infinite=False)
    return eval_basis(k, m, t)


def eval_monomial(k: int, t):
    return eval_basis(k, INF, t)


def eval_chebyshev(k: int, t):
    """Chebyshev polynomial of the first kind, ``cos(k arccos t)``."""
    return eval_basis(k, 0, t)


def value_at_one(k: int, m) -> float:
    """``P_k^m(1) = binom(k + m - 2, k)``; equals 1 for the monomial basis."""
    k = _check_degree(k)
    m = check_dim(m)
    if is_infinite(m):
        return 1.0
    two_lam = m - 1.0
    value = 1.0
    for j in range(1, k + 1):
        value *= (j + two_lam - 1.0) / j
    return value


def eval_normalized(k: int, m, t):
    """``R_k^m(t) = P_k^m(t) / P_k^m(1)``, bounded by 1 in modulus."""
    m = check_dim(m)
    return eval_basis(k, m, t) / value_at_one(k, m) if not is_infinite(m) else eval_basis(k, m, t)


def surface_area(d: int) -> float:
    """Surface area ``2 pi^(d/2) / Gamma(d/2)`` of the unit sphere in R^d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _weight_mass(lam: float) -> float:
    # int_{-1}^{1} (1-t^2)^(lam-1/2) dt = B(1/2, lam+1/2)
    return math.exp(math.lgamma(0.5) + math.lgamma(lam + 0.5) - math.lgamma(lam + 1.0))


def _recurrence_b(n: np.ndarray, lam: float) -> np.ndarray:
    """Monic recurrence coefficients ``b_n`` for the symmetric Gegenbauer weight."""
    return n * (n + 2.0 * lam - 1.0) / (4.0 * (n + lam) * (n + lam - 1.0))


def _orthonormal_eval(x: np.ndarray, nodes: int, beta: np.ndarray, mass: float):
    """Orthonormal ``p_nodes``, its derivative and ``sum_{j<nodes} p_j^2`` at x."""
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mass))
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    christoffel = p * p
    for n in range(nodes):
        b_next = beta[n]
        b_cur = beta[n - 1] if n > 0 else 0.0
        p_next = (x * p - b_cur * p_prev) / b_next
        dp_next = (p + x * dp - b_cur * dp_prev) / b_next
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
        if n + 1 < nodes:
            christoffel = christoffel + p * p
    return p, dp, christoffel


@lru_cache(maxsize=256)
def _gauss_rule(m: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    lam = (m - 1) / 2.0
    mass = _weight_mass(lam)
    beta = np.sqrt(_recurrence_b(np.arange(1, nodes + 1, dtype=float), lam))
    if nodes == 1:
        x = np.zeros(1)
    else:
        jacobi = np.diag(beta[:-1], 1) + np.diag(beta[:-1], -1)
        x = np.linalg.eigvalsh(jacobi)
    for _ in range(NEWTON_MAXITER):
        p, dp, _ = _orthonormal_eval(x, nodes, beta, mass)
        step = p / dp
        x = x - step
        if np.all(np.abs(step) <= NEWTON_TOL):
            break
    else:
        raise QuadratureError(f"Newton iteration did not converge (m={m}, nodes={nodes})")
    x = 0.5 * (x - x[::-1])  # enforce the symmetry of the weight
    _, _, christoffel = _orthonormal_eval(x, nodes, beta, mass)
    w = 1.0 / christoffel
    if np.any(np.abs(x) >= 1.0) or np.any(w <= 0.0):
        raise QuadratureError(f"degenerate Gauss rule (m={m}, nodes={nodes})")
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def quadrature_rule(m, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the weight ``(1-t^2)^((m-2)/2)`` on [-1, 1].

    Nodes come from the eigenvalues of the Jacobi matrix and are polished by
    Newton iteration on the orthonormal recurrence; weights are Christoffel
    numbers.  The rule integrates polynomials of degree ``2*nodes - 1``
    exactly.

    Returns
    -------
    nodes, weights : ndarray
        Increasing nodes in (-1, 1) and the matching positive weights
        (read-only, cached).
    """
    m = check_dim(m, allow_infinite=False)
    if int(nodes) != nodes or nodes < 1:
        raise ValueError("nodes must be a positive integer")
    return _gauss_rule(m, int(nodes))


def norm_squared(n: int, m) -> float:
    """``int (P_n^m)^2 w = tau_{m+1}/tau_m * (m-1)/(2n+m-1) * P_n^m(1)``."""
    m = check_dim(m, allow_infinite=False)
    return (surface_area(m + 1) / surface_area(m)
            * (m - 1.0) / (2.0 * n + m - 1.0) * value_at_one(n, m))


def _nodes_for(total_degree: int) -> int:
    return -(-total_degree // 2) + 4


def orthogonality_check(n: int, k: int, m) -> tuple[float, float]:
    """Quadrature value of ``int P_n P_k w`` next to its closed form."""
    n, k = _check_degree(n), _check_degree(k)
    m = check_dim(m, allow_infinite=False)
    x, w = quadrature_rule(m, _nodes_for(n + k))
    lhs = float(np.sum(w * eval_gegenbauer(n, m, x) * eval_gegenbauer(k, m, x)))
    rhs = norm_squared(n, m) if n == k else 0.0
    return lhs, rhs


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Coefficients of a function in the basis ``P^basis_dim``.

    ``basis_dim`` is a finite sphere dimension, ``0`` (Chebyshev, first kind)
    or ``INF`` (monomials).  ``terms`` holds ``(degree, value)`` pairs.
    """

    basis_dim: float
    terms: tuple[tuple[int, float], ...]

    def __post_init__(self):
        degrees = [d for d, _ in self.terms]
        if len(set(degrees)) != len(degrees):
            raise ValueError("degrees must be distinct")
        if not all(math.isfinite(v) for _, v in self.terms):
            raise ValueError("coefficients must be finite")

    def __getitem__(self, degree: int) -> float:
        for d, v in self.terms:
            if d == degree:
                return v
        return 0.0

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def degrees(self) -> list[int]:
        return [d for d, _ in self.terms]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.terms])

    def as_dict(self) -> dict[int, float]:
        return dict(self.terms)

    def evaluate(self, t):
        t_arr = np.asarray(t, dtype=float)
        if not self.terms:
            return _scalar_or_array(np.zeros_like(t_arr), t)
        table = basis_table(max(self.degrees), self.basis_dim, t_arr)
        out = sum(v * table[d] for d, v in self.terms)
        return _scalar_or_array(out, t)


def _project(values: np.ndarray, x: np.ndarray, w: np.ndarray, m: int,
             degrees: list[int]) -> list[float]:
    table = basis_table(max(degrees), m, x)
    return [float(np.sum(w * values * table[d]) / norm_squared(d, m)) for d in degrees]


@lru_cache(maxsize=4096)
def chebyshev_expansion(k: int, m) -> ExpansionCoefficients:
    """``P_k^m = sum_j c_k^m(j) T_{k-2j}`` with Chebyshev ``T``.

    Uses the cosine form of ``T`` and Gauss-Chebyshev projection.
    """
    k = _check_degree(k)
    m = check_dim(m, allow_infinite=False)
    nodes = _nodes_for(2 * k)
    theta = (2.0 * np.arange(nodes) + 1.0) * math.pi / (2.0 * nodes)
    values = eval_gegenbauer(k, m, np.cos(theta))
    terms = []
    for j in range(k // 2 + 1):
        d = k - 2 * j
        scale = 1.0 / nodes if d == 0 else 2.0 / nodes
        terms.append((d, float(scale * np.sum(values * np.cos(d * theta)))))
    return ExpansionCoefficients(0, tuple(terms))


@lru_cache(maxsize=4096)
def monomial_decomposition(k: int, m) -> ExpansionCoefficients:
    """``t^k = sum_j c(k, m, j) P_{k-2j}^m(t)`` via Gauss projection.

    The coefficients are positive reals (not integers in general).
    """
    k = _check_degree(k)
    m = check_dim(m, allow_infinite=False)
    x, w = quadrature_rule(m, _nodes_for(2 * k))
    degrees = [k - 2 * j for j in range(k // 2 + 1)]
    coeffs = _project(x ** k, x, w, m, degrees)
    return ExpansionCoefficients(m, tuple(zip(degrees, coeffs)))


@lru_cache(maxsize=8192)
def linearization(k: int, l: int, m, M) -> ExpansionCoefficients:
    """Expand ``P_k^m P_l^M`` in the basis ``P^{min(m, M)}``.

    Only degrees ``k + l - 2j`` occur by parity.
    """
    k, l = _check_degree(k), _check_degree(l)
    m = check_dim(m, allow_infinite=False)
    M = check_dim(M, allow_infinite=False)
    target = min(m, M)
    x, w = quadrature_rule(target, _nodes_for(2 * (k + l)))
    product = eval_gegenbauer(k, m, x) * eval_gegenbauer(l, M, x)
    degrees = [k + l - 2 * j for j in range((k + l) // 2 + 1)]
    coeffs = _project(product, x, w, target, degrees)
    return ExpansionCoefficients(target, tuple(zip(degrees, coeffs)))
