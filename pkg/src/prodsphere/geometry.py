"""Point sets on S^m x S^M, antipodal-free folding and the Walsh 4x4 block map."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import gegenbauer as gg

__all__ = [
    "ProductPoint",
    "ProductPointSet",
    "AntipodalFreeDecomposition",
    "QuadrantVector",
    "canonical_sign",
    "extract_antipodal_free",
    "is_antipodal_free",
    "walsh_combine",
    "walsh_split",
    "circle_embed_points",
    "random_unit",
    "random_point_set",
]

NORM_TOL = 1e-6
DISTINCT_TOL = 1e-12
ANTIPODAL_TOL = 1e-10
SIGN_TOL = 1e-9

QUADRANT_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


def _normalize_rows(a, what: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    norms = np.linalg.norm(a, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"{what}[{bad}] has norm {norms[bad]!r}, not within {NORM_TOL} of 1")
    return a / norms[:, None]


@dataclass(frozen=True)
class ProductPoint:
    x: np.ndarray
    w: np.ndarray


class ProductPointSet:
    """Distinct points ``(x_mu, w_mu)`` on S^m x S^M, stored as two arrays.

    Rows are renormalized on ingest when their norm is within ``1e-6`` of 1
    and rejected otherwise.
    """

    def __init__(self, xs, ws, check_distinct: bool = True):
        xs = _normalize_rows(xs, "x")
        ws = _normalize_rows(ws, "w")
        if xs.shape[0] != ws.shape[0]:
            raise ValueError(f"{xs.shape[0]} x-components but {ws.shape[0]} w-components")
        if xs.shape[1] < 3 or ws.shape[1] < 3:
            raise ValueError("components must live in R^(m+1) with m >= 2")
        xs.setflags(write=False)
        ws.setflags(write=False)
        self.xs = xs
        self.ws = ws
        if check_distinct:
            dup = _first_duplicate(xs, ws)
            if dup is not None:
                raise ValueError(f"points {dup[0]} and {dup[1]} coincide")

    @property
    def m(self) -> int:
        return self.xs.shape[1] - 1

    @property
    def M(self) -> int:
        return self.ws.shape[1] - 1

    def __len__(self) -> int:
        return self.xs.shape[0]

    def __iter__(self) -> Iterator[ProductPoint]:
        for x, w in zip(self.xs, self.ws):
            yield ProductPoint(x, w)

    def __getitem__(self, i) -> ProductPoint:
        return ProductPoint(self.xs[i], self.ws[i])

    def x_gram(self) -> np.ndarray:
        return np.clip(self.xs @ self.xs.T, -1.0, 1.0)

    def w_gram(self) -> np.ndarray:
        return np.clip(self.ws @ self.ws.T, -1.0, 1.0)

    def has_distinct_components(self) -> bool:
        """True when the x's are pairwise distinct and so are the w's."""
        n = len(self)
        off = ~np.eye(n, dtype=bool)
        return not (np.any(_close_pairs(self.xs) & off) or np.any(_close_pairs(self.ws) & off))

    def concat(self, other: "ProductPointSet") -> "ProductPointSet":
        return ProductPointSet(np.vstack([self.xs, other.xs]), np.vstack([self.ws, other.ws]))

    def to_list(self) -> list[dict]:
        return [{"x": x.tolist(), "w": w.tolist()} for x, w in zip(self.xs, self.ws)]

    @classmethod
    def from_list(cls, items) -> "ProductPointSet":
        return cls([p["x"] for p in items], [p["w"] for p in items])


def _close_pairs(a: np.ndarray, tol: float = DISTINCT_TOL) -> np.ndarray:
    diff = np.abs(a[:, None, :] - a[None, :, :]).max(axis=2)
    return diff <= tol


def _first_duplicate(xs, ws):
    n = xs.shape[0]
    same = _close_pairs(xs) & _close_pairs(ws)
    same[np.tril_indices(n)] = False
    hits = np.argwhere(same)
    return tuple(hits[0]) if len(hits) else None


def canonical_sign(v: np.ndarray) -> int:
    """+1 or -1 so that the first coordinate with magnitude > 1e-9 is positive."""
    for c in v:
        if abs(c) > SIGN_TOL:
            return 1 if c > 0 else -1
    return 1


@dataclass(frozen=True)
class AntipodalFreeDecomposition:
    """Representatives plus, per original point, ``(rep index, sign_x, sign_w)``."""

    representatives: ProductPointSet
    mapping: tuple

    def reconstruct(self) -> ProductPointSet:
        reps = self.representatives
        xs = [sx * reps.xs[p] for p, sx, _ in self.mapping]
        ws = [sw * reps.ws[p] for p, _, sw in self.mapping]
        return ProductPointSet(xs, ws)


def extract_antipodal_free(pts: ProductPointSet) -> AntipodalFreeDecomposition:
    """Fold every point onto sign-canonical components.

    Each original point equals ``(sign_x x'_p, sign_w w'_p)`` for one
    representative ``p``; representatives keep first-occurrence order.
    """
    rep_x: list[np.ndarray] = []
    rep_w: list[np.ndarray] = []
    mapping = []
    for x, w in zip(pts.xs, pts.ws):
        sx, sw = canonical_sign(x), canonical_sign(w)
        cx, cw = sx * x, sw * w
        for p, (rx, rw) in enumerate(zip(rep_x, rep_w)):
            if np.max(np.abs(rx - cx)) <= DISTINCT_TOL and np.max(np.abs(rw - cw)) <= DISTINCT_TOL:
                break
        else:
            rep_x.append(cx)
            rep_w.append(cw)
            p = len(rep_x) - 1
        mapping.append((p, sx, sw))
    reps = ProductPointSet(np.array(rep_x), np.array(rep_w))
    return AntipodalFreeDecomposition(reps, tuple(mapping))


def is_antipodal_free(pts: ProductPointSet, tol: float = ANTIPODAL_TOL) -> bool:
    """No antipodal pair among the x's and none among the w's."""
    return not (np.any(pts.x_gram() <= -1.0 + tol) or np.any(pts.w_gram() <= -1.0 + tol))


class QuadrantVector:
    """Four coefficient vectors indexed by quadrant ``(i, j)``.

    Stored as a ``(4, n)`` array with rows in the order
    ``(0,0), (1,0), (0,1), (1,1)``.
    """

    def __init__(self, data):
        data = np.asarray(data)
        if data.ndim != 2 or data.shape[0] != 4:
            raise ValueError("quadrant vector data must have shape (4, n)")
        self.data = data

    @classmethod
    def from_mapping(cls, parts) -> "QuadrantVector":
        return cls(np.array([np.asarray(parts[q]) for q in QUADRANT_ORDER]))

    def __getitem__(self, q) -> np.ndarray:
        return self.data[QUADRANT_ORDER.index(tuple(q))]

    def __len__(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, QuadrantVector) and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"QuadrantVector({self.data!r})"


def _butterfly(data: np.ndarray) -> np.ndarray:
    c00, c10, c01, c11 = data
    u, v = c00 + c10, c00 - c10
    y, z = c01 + c11, c01 - c11
    return np.array([u + y, v + z, u - y, v - z])


def walsh_combine(c: QuadrantVector) -> QuadrantVector:
    """``d^{a,b} = sum_{i,j} (-1)^{ia + jb} c^{i,j}`` per point."""
    return QuadrantVector(_butterfly(c.data))


def walsh_split(d: QuadrantVector) -> QuadrantVector:
    """Inverse of :func:`walsh_combine` (same butterfly, divided by 4)."""
    return QuadrantVector(_butterfly(d.data) / 4)


def circle_embed_points(n: int, dim) -> np.ndarray:
    """``n`` equally spaced points ``(cos 2 pi mu/n, sin 2 pi mu/n, 0, ...)``, ``mu = 1..n``."""
    dim = gg.check_dim(dim, allow_infinite=False)
    if n < 1:
        raise ValueError("n must be positive")
    angles = 2.0 * math.pi * np.arange(1, n + 1) / n
    pts = np.zeros((n, dim + 1))
    pts[:, 0] = np.cos(angles)
    pts[:, 1] = np.sin(angles)
    return pts


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unit(dim, seed=0, size: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) in R^(dim+1) from normalized Gaussians.

    ``seed`` may be an int or a ``numpy.random.Generator`` owned by the caller.
    """
    dim = gg.check_dim(dim, allow_infinite=False)
    rng = _rng(seed)
    shape = (dim + 1,) if size is None else (size, dim + 1)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_point_set(n: int, m: int, M: int, seed=0) -> ProductPointSet:
    rng = _rng(seed)
    return ProductPointSet(random_unit(m, rng, size=n), random_unit(M, rng, size=n))
