"""Coefficient schemes ``a_{k,l}`` for isotropic kernels on S^m x S^M.

A kernel's isotropic part is ``K(t, s) = sum a_{k,l} P_k^m(t) P_l^M(s)``
with ``a_{k,l} >= 0``.  The support ``J = {(k, l): a_{k,l} > 0}`` splits into
four parity quadrants ``J^{i,j}`` with ``(k mod 2, l mod 2) = (i, j)``.

Two scheme kinds are provided:

* :class:`SparseScheme` -- finitely many stored positive coefficients.
* :class:`GeometricScheme` -- ``a_{k,l} = c r^k q^l`` restricted to a
  :class:`SupportMask`, with a certified tail bound for truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import gegenbauer as gg
from .errors import SchemeError

__all__ = [
    "QUADRANTS",
    "QuadrantFlags",
    "QuadrantInfo",
    "IndexQuadrants",
    "SupportMask",
    "bounded_mask",
    "CoefficientScheme",
    "SparseScheme",
    "ParameterizedScheme",
    "GeometricScheme",
    "geometric_closed_form",
    "eval_kernel",
    "index_quadrants",
    "project_coefficients",
    "restrict_diagonal",
]

QUADRANTS = ((0, 0), (0, 1), (1, 0), (1, 1))

SAMPLE_DEGREE = 200
EVAL_CHUNK = 1 << 15


def quadrant_of(k: int, l: int) -> tuple[int, int]:
    return (k % 2, l % 2)


@dataclass(frozen=True)
class QuadrantFlags:
    """Unboundedness of the k and l coordinates within one quadrant."""

    k_unbounded: bool = False
    l_unbounded: bool = False
    joint_unbounded: bool = False

    def __post_init__(self):
        if self.joint_unbounded and not (self.k_unbounded and self.l_unbounded):
            raise SchemeError("joint_unbounded requires both k and l unbounded")

    @property
    def infinite(self) -> bool:
        return self.k_unbounded or self.l_unbounded


_FULL = QuadrantFlags(True, True, True)
_EMPTY = QuadrantFlags()


def _call_predicate(pred, k: np.ndarray, l: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(pred(k, l), dtype=bool)
        if out.shape == np.broadcast(k, l).shape:
            return out
    except Exception:
        pass
    return np.vectorize(lambda a, b: bool(pred(int(a), int(b))), otypes=[bool])(k, l)


@dataclass(frozen=True)
class SupportMask:
    """Which ``(k, l)`` carry a coefficient in a parameterized family.

    Build with the class methods :meth:`all`, :meth:`even_sum`,
    :meth:`odd_sum`, :meth:`quadrant_list` or :meth:`custom`.  Custom masks
    carry user-declared unboundedness flags, since infinitude of an arbitrary
    predicate cannot be decided; they are spot-checked by
    :func:`index_quadrants`.
    """

    kind: str
    quadrants: frozenset = frozenset(QUADRANTS)
    predicate: Callable | None = field(default=None, compare=False)
    flags: Mapping | None = field(default=None, compare=False)
    spec: object = None  # serializable description for custom masks

    @classmethod
    def all(cls) -> "SupportMask":
        return cls("all")

    @classmethod
    def even_sum(cls) -> "SupportMask":
        return cls("even_sum", frozenset({(0, 0), (1, 1)}))

    @classmethod
    def odd_sum(cls) -> "SupportMask":
        return cls("odd_sum", frozenset({(0, 1), (1, 0)}))

    @classmethod
    def quadrant_list(cls, quadrants) -> "SupportMask":
        qs = frozenset((int(i), int(j)) for i, j in quadrants)
        if not qs <= set(QUADRANTS):
            raise SchemeError(f"quadrants must be drawn from {QUADRANTS}")
        return cls("quadrants", qs)

    @classmethod
    def custom(cls, predicate: Callable, flags: Mapping, spec=None) -> "SupportMask":
        missing = set(QUADRANTS) - set(flags)
        if missing:
            raise SchemeError(f"custom mask lacks flags for quadrants {sorted(missing)}")
        flags = {q: f if isinstance(f, QuadrantFlags) else QuadrantFlags(**f)
                 for q, f in flags.items()}
        return cls("custom", frozenset(QUADRANTS), predicate, flags, spec)

    def contains(self, k, l) -> np.ndarray:
        k = np.asarray(k)
        l = np.asarray(l)
        if self.kind == "custom":
            return _call_predicate(self.predicate, k, l)
        inside = np.zeros(np.broadcast(k, l).shape, dtype=bool)
        for i, j in self.quadrants:
            inside |= (k % 2 == i) & (l % 2 == j)
        return inside

    def declared_flags(self) -> dict[tuple[int, int], QuadrantFlags]:
        if self.kind == "custom":
            return dict(self.flags)
        return {q: (_FULL if q in self.quadrants else _EMPTY) for q in QUADRANTS}


def bounded_mask(quadrants=QUADRANTS, k_max: Mapping | None = None,
                 l_max: Mapping | None = None) -> SupportMask:
    """Quadrant mask whose k (or l) index is capped inside selected quadrants.

    ``k_max={(0, 0): 2}`` keeps only ``k <= 2`` in ``J^{0,0}``.  Flags are
    derived exactly, so no spot-check can fail.
    """
    qs = frozenset((int(i), int(j)) for i, j in quadrants)
    k_max = {tuple(q): int(v) for q, v in (k_max or {}).items()}
    l_max = {tuple(q): int(v) for q, v in (l_max or {}).items()}

    def predicate(k, l):
        k = np.asarray(k)
        l = np.asarray(l)
        inside = np.zeros(np.broadcast(k, l).shape, dtype=bool)
        for i, j in qs:
            cell = (k % 2 == i) & (l % 2 == j)
            if (i, j) in k_max:
                cell &= k <= k_max[(i, j)]
            if (i, j) in l_max:
                cell &= l <= l_max[(i, j)]
            inside |= cell
        return inside

    flags = {}
    for i, j in QUADRANTS:
        empty = ((i, j) not in qs or k_max.get((i, j), i) < i or l_max.get((i, j), j) < j)
        if empty:
            flags[(i, j)] = _EMPTY
            continue
        ku = (i, j) not in k_max
        lu = (i, j) not in l_max
        flags[(i, j)] = QuadrantFlags(ku, lu, ku and lu)
    spec = {"quadrants": sorted([list(q) for q in qs]),
            "k_max": [[*q, v] for q, v in sorted(k_max.items())],
            "l_max": [[*q, v] for q, v in sorted(l_max.items())]}
    return SupportMask.custom(predicate, flags, spec=spec)


class CoefficientScheme:
    """Base class; subclasses define the coefficients and dimensions."""

    m: float
    M: float

    @property
    def is_sparse(self) -> bool:
        return False

    def coefficient_matrix(self, kmax: int, lmax: int) -> np.ndarray:
        raise NotImplementedError

    def truncation(self, tol: float) -> tuple[int, int]:
        raise NotImplementedError

    def total_mass(self) -> float:
        """``sum a_{k,l} P_k^m(1) P_l^M(1)`` (equals ``K(1, 1)``)."""
        raise NotImplementedError


def _validate_dims(m, M):
    return gg.check_dim(m), gg.check_dim(M)


@dataclass(frozen=True)
class SparseScheme(CoefficientScheme):
    """Finite scheme; ``entries`` lists ``(k, l, a)`` with ``a > 0``."""

    m: float
    M: float
    entries: tuple

    def __post_init__(self):
        m, M = _validate_dims(self.m, self.M)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "M", M)
        clean = []
        seen = set()
        for entry in self.entries:
            if len(entry) != 3:
                raise SchemeError(f"entry {entry!r} is not a (k, l, a) triple")
            k, l, a = entry
            if int(k) != k or int(l) != l or k < 0 or l < 0:
                raise SchemeError(f"degrees must be nonnegative integers, got ({k}, {l})")
            a = float(a)
            if not (math.isfinite(a) and a > 0.0):
                raise SchemeError(f"coefficient a_({k},{l}) = {a} must be finite and > 0")
            if (int(k), int(l)) in seen:
                raise SchemeError(f"duplicate entry for ({k}, {l})")
            seen.add((int(k), int(l)))
            clean.append((int(k), int(l), a))
        object.__setattr__(self, "entries", tuple(sorted(clean)))

    @property
    def is_sparse(self) -> bool:
        return True

    @property
    def support(self) -> frozenset:
        return frozenset((k, l) for k, l, _ in self.entries)

    @property
    def kmax(self) -> int:
        return max((k for k, _, _ in self.entries), default=0)

    @property
    def lmax(self) -> int:
        return max((l for _, l, _ in self.entries), default=0)

    def coefficient(self, k: int, l: int) -> float:
        for kk, ll, a in self.entries:
            if (kk, ll) == (k, l):
                return a
        return 0.0

    def coefficient_matrix(self, kmax: int | None = None, lmax: int | None = None) -> np.ndarray:
        kmax = self.kmax if kmax is None else kmax
        lmax = self.lmax if lmax is None else lmax
        A = np.zeros((kmax + 1, lmax + 1))
        for k, l, a in self.entries:
            if k <= kmax and l <= lmax:
                A[k, l] = a
        return A

    def truncation(self, tol: float) -> tuple[int, int]:
        return self.kmax, self.lmax

    def total_mass(self) -> float:
        return float(sum(a * gg.value_at_one(k, self.m) * gg.value_at_one(l, self.M)
                         for k, l, a in self.entries))


class ParameterizedScheme(CoefficientScheme):
    """Infinite family; subclasses must implement :meth:`tail_bound`."""

    mask: SupportMask

    def tail_bound(self, kmax: int, lmax: int) -> float:
        """Upper bound of ``sum a P(1) P(1)`` over indices outside the rectangle."""
        raise SchemeError(f"{type(self).__name__} supplies no tail bound")

    def coefficient_matrix(self, kmax: int, lmax: int) -> np.ndarray:
        k = np.arange(kmax + 1)[:, None]
        l = np.arange(lmax + 1)[None, :]
        return np.where(self.mask.contains(k, l), self._raw(k, l), 0.0)

    def _raw(self, k, l):
        raise NotImplementedError

    def coefficient(self, k: int, l: int) -> float:
        return float(self.coefficient_matrix(k, l)[k, l])


def _tail_1d(r: float, m, K: int) -> float:
    """Bound ``sum_{k > K} r^k P_k^m(1)`` by a geometric majorant."""
    if is_inf(m):
        return r ** (K + 1) / (1.0 - r)
    # term ratio r (k + m - 1) / (k + 1) decreases in k
    ratio = r * (K + m) / (K + 2.0)
    if ratio >= 1.0:
        return math.inf
    return r ** (K + 1) * gg.value_at_one(K + 1, m) / (1.0 - ratio)


def _mass_1d(r: float, m) -> float:
    """``sum_k r^k P_k^m(1)`` in closed form."""
    if is_inf(m):
        return 1.0 / (1.0 - r)
    return (1.0 - r) ** (-(m - 1.0))


def is_inf(m) -> bool:
    return gg.is_infinite(m)


@dataclass(frozen=True)
class GeometricScheme(ParameterizedScheme):
    """``a_{k,l} = c r^k q^l`` on the support selected by ``mask``."""

    m: float
    M: float
    c: float = 1.0
    r: float = 0.5
    q: float = 0.5
    mask: SupportMask = field(default_factory=SupportMask.all)

    def __post_init__(self):
        m, M = _validate_dims(self.m, self.M)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "M", M)
        if not self.c > 0:
            raise SchemeError("c must be > 0")
        for name in ("r", "q"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise SchemeError(f"{name} must lie in (0, 1), got {v}")

    def _raw(self, k, l):
        return self.c * self.r ** k * self.q ** l

    def tail_bound(self, kmax: int, lmax: int) -> float:
        mass_r = _mass_1d(self.r, self.m)
        mass_q = _mass_1d(self.q, self.M)
        return self.c * (_tail_1d(self.r, self.m, kmax) * mass_q
                         + mass_r * _tail_1d(self.q, self.M, lmax))

    def truncation(self, tol: float) -> tuple[int, int]:
        """Smallest cutoffs whose tail bounds are each at most ``tol / 2``."""
        mass_r = _mass_1d(self.r, self.m)
        mass_q = _mass_1d(self.q, self.M)
        K = 0
        while self.c * _tail_1d(self.r, self.m, K) * mass_q > tol / 2:
            K += 1
        L = 0
        while self.c * mass_r * _tail_1d(self.q, self.M, L) > tol / 2:
            L += 1
        return K, L

    def total_mass(self) -> float:
        if self.mask.kind == "all":
            return self.c * _mass_1d(self.r, self.m) * _mass_1d(self.q, self.M)
        if self.mask.kind == "custom":
            return eval_kernel(self, 1.0, 1.0, tol=1e-13)
        return float(geometric_closed_form(self, 1.0, 1.0))


def _closed_form_all(m, r, t):
    if is_inf(m):
        return 1.0 / (1.0 - r * t)
    return (1.0 - 2.0 * r * t + r * r) ** (-(m - 1.0) / 2.0)


def geometric_closed_form(s: GeometricScheme, t, sarg, r=None, q=None):
    """Generating-function value of a geometric scheme.

    Quadrant masks are handled by parity projection
    ``K^{i,j}(t, s) = 1/4 sum_{a,b = +-1} a^i b^j K(a t, b s)``.
    ``r`` and ``q`` override the scheme's ratios (they may be negative here,
    which describes a signed, non positive definite kernel).
    """
    if s.mask.kind == "custom":
        raise SchemeError("no closed form for custom masks")
    r = s.r if r is None else r
    q = s.q if q is None else q
    t = np.asarray(t, dtype=float)
    sarg = np.asarray(sarg, dtype=float)

    def full(tt, ss):
        return s.c * _closed_form_all(s.m, r, tt) * _closed_form_all(s.M, q, ss)

    if s.mask.kind == "all":
        return full(t, sarg)
    out = 0.0
    for i, j in s.mask.quadrants:
        for a in (1, -1):
            for b in (1, -1):
                out = out + 0.25 * a ** i * b ** j * full(a * t, b * sarg)
    return out


def eval_kernel(s: CoefficientScheme, t, sarg, tol: float = 1e-10):
    """Evaluate ``K(t, s)`` (broadcasting over array arguments).

    Sparse schemes are summed exactly.  Parameterized schemes are truncated
    at the smallest rectangle whose certified tail bound is at most ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if isinstance(s, ParameterizedScheme):
        if type(s).tail_bound is ParameterizedScheme.tail_bound:
            raise SchemeError(f"{type(s).__name__} supplies no tail bound")
    K, L = s.truncation(tol)
    A = s.coefficient_matrix(K, L)
    t_arr, s_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(sarg, dtype=float))
    shape = t_arr.shape
    t_flat = t_arr.ravel()
    s_flat = s_arr.ravel()
    out = np.empty(t_flat.shape)
    for start in range(0, t_flat.size, EVAL_CHUNK):
        sl = slice(start, start + EVAL_CHUNK)
        Pt = gg.basis_table(K, s.m, t_flat[sl])
        Ps = gg.basis_table(L, s.M, s_flat[sl])
        out[sl] = np.einsum("kn,kl,ln->n", Pt, A, Ps)
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadrantInfo:
    flags: QuadrantFlags
    members: frozenset | None = None  # exact members for sparse schemes


@dataclass(frozen=True)
class IndexQuadrants:
    quadrants: Mapping[tuple[int, int], QuadrantInfo]

    def __getitem__(self, q) -> QuadrantInfo:
        return self.quadrants[tuple(q)]

    @property
    def even_sum_infinite(self) -> bool:
        return self[(0, 0)].flags.infinite or self[(1, 1)].flags.infinite

    @property
    def odd_sum_infinite(self) -> bool:
        return self[(0, 1)].flags.infinite or self[(1, 0)].flags.infinite

    def joint_unbounded(self, q) -> bool:
        return self[q].flags.joint_unbounded


def _spot_check(mask: SupportMask, flags: Mapping, degree: int = SAMPLE_DEGREE) -> None:
    """Compare declared flags with membership on ``[0, degree]^2``.

    A coordinate counts as unbounded when members reach the upper half of
    the sample window, so declared bounds must stay below ``degree / 2``.
    """
    far = degree // 2
    k = np.arange(degree + 1)[:, None]
    l = np.arange(degree + 1)[None, :]
    inside = mask.contains(k, l)
    for (i, j), f in flags.items():
        cell = inside & (k % 2 == i) & (l % 2 == j)
        seen = {
            "k_unbounded": bool(np.any(cell & (k >= far))),
            "l_unbounded": bool(np.any(cell & (l >= far))),
            "joint_unbounded": bool(np.any(cell & (k >= far) & (l >= far))),
        }
        for name, observed in seen.items():
            if getattr(f, name) != observed:
                raise SchemeError(
                    f"custom mask declares {name}={getattr(f, name)} for quadrant "
                    f"({i},{j}) but sampled membership up to degree {degree} suggests {observed}")


def index_quadrants(s: CoefficientScheme) -> IndexQuadrants:
    """Split the support into parity quadrants with unboundedness flags."""
    if isinstance(s, SparseScheme):
        buckets = {q: set() for q in QUADRANTS}
        for k, l, _ in s.entries:
            buckets[quadrant_of(k, l)].add((k, l))
        return IndexQuadrants({q: QuadrantInfo(_EMPTY, frozenset(b)) for q, b in buckets.items()})
    if not isinstance(s, ParameterizedScheme):
        raise SchemeError(f"unsupported scheme type {type(s).__name__}")
    flags = s.mask.declared_flags()
    if s.mask.kind == "custom":
        _spot_check(s.mask, flags)
    return IndexQuadrants({q: QuadrantInfo(flags[q]) for q in QUADRANTS})


def _evaluate_black_box(K, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(K(t, s), dtype=float)
        if out.shape == t.shape:
            return out
    except Exception:
        pass
    return np.vectorize(lambda a, b: float(K(a, b)), otypes=[float])(t, s)


def project_coefficients(K: Callable, m, M, kmax: int, lmax: int) -> np.ndarray:
    """Recover ``a_{k,l}`` for ``k <= kmax, l <= lmax`` by tensor Gauss quadrature.

    ``K`` is called on broadcast arrays ``(t, s)`` when it supports them and
    pointwise otherwise.  Each axis uses ``kmax + lmax + 8`` nodes.
    """
    m = gg.check_dim(m, allow_infinite=False)
    M = gg.check_dim(M, allow_infinite=False)
    nodes = kmax + lmax + 8
    x, wx = gg.quadrature_rule(m, nodes)
    y, wy = gg.quadrature_rule(M, nodes)
    values = _evaluate_black_box(K, x[:, None] * np.ones((1, nodes)), np.ones((nodes, 1)) * y[None, :])
    Px = gg.basis_table(kmax, m, x) * wx
    Py = gg.basis_table(lmax, M, y) * wy
    raw = Px @ values @ Py.T
    hk = np.array([gg.norm_squared(k, m) for k in range(kmax + 1)])
    hl = np.array([gg.norm_squared(l, M) for l in range(lmax + 1)])
    return raw / hk[:, None] / hl[None, :]


def restrict_diagonal(s: CoefficientScheme) -> gg.ExpansionCoefficients:
    """Coefficients ``b_n`` of ``K(t, t) = sum b_n P_n^{min(m,M)}(t)``."""
    if not isinstance(s, SparseScheme):
        raise SchemeError("restrict_diagonal needs a sparse scheme")
    m, M = s.m, s.M
    target = min(m, M)
    b: dict[int, float] = {}

    def add(expansion, weight):
        for d, v in expansion:
            b[d] = b.get(d, 0.0) + weight * v

    for k, l, a in s.entries:
        if is_inf(m) and is_inf(M):
            add([(k + l, 1.0)], a)
        elif is_inf(m):
            for d, v in gg.monomial_decomposition(k, M):
                add(gg.linearization(d, l, M, M), a * v)
        elif is_inf(M):
            for d, v in gg.monomial_decomposition(l, m):
                add(gg.linearization(k, d, m, m), a * v)
        else:
            add(gg.linearization(k, l, m, M), a)
    return gg.ExpansionCoefficients(target, tuple(sorted(b.items(), reverse=True)))
