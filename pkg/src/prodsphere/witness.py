"""Gram matrices, quadratic forms and explicit non-strictness witnesses.

A witness is a point set with a nonzero coefficient vector ``c`` such that
``c^T A c = 0`` for the Gram matrix ``A_{mu nu} = K(x_mu . x_nu, w_mu . w_nu)``.
Equivalently every function ``sum_mu c_mu P_k(x_mu . x) P_l(w_mu . w)``
with ``(k, l)`` in the support vanishes identically; :func:`residual_check`
measures the sup of these functions on sampled sites.

Two constructions are implemented:

* :func:`gamma_witness` -- the ``n x n`` grid of equatorial circle points
  with ``c_mu = 2 (-1)^mu cos(pi mu / n)``, which annihilates every even
  degree up to ``2 k0`` once ``n > 4 k0 + 1``.  :func:`lift_quadrant_witness`
  turns its block solution into a witness for the full kernel.
* :func:`antipodal_doubling_witness` -- points paired with their antipodes,
  grown until the Gram matrix becomes numerically singular.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import gegenbauer as gg
from .classify import classify
from .errors import DimensionMismatch, PreconditionError, SchemeError, WitnessSearchExhausted
from .geometry import (AntipodalFreeDecomposition, ProductPointSet, QuadrantVector,
                       circle_embed_points, extract_antipodal_free, random_unit, walsh_split)
from .kernel import (QUADRANTS, SAMPLE_DEGREE, CoefficientScheme, ParameterizedScheme,
                     SparseScheme, eval_kernel, index_quadrants)

logger = logging.getLogger(__name__)

__all__ = [
    "GramReport",
    "Witness",
    "gram",
    "gram_matrix",
    "quadratic_form",
    "residual_check",
    "single_sphere_residual",
    "gamma_coefficients",
    "gamma_quadratic_form",
    "gamma_witness",
    "lift_quadrant_witness",
    "antipodal_doubling_witness",
    "quadrant_decomposition",
    "block_residuals",
]

DEFAULT_SAMPLES = 64
NULL_EIG_FACTOR = 1e-9
WITNESS_QF_TOL = 1e-10
DOUBLING_MAX_N = 512
PARAMETERIZED_RESIDUAL_DEGREE = 40


@dataclass
class GramReport:
    matrix: np.ndarray
    min_eigenvalue: float
    null_vector: np.ndarray | None = None
    eigen_threshold: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


@dataclass
class Witness:
    """Point set and coefficients annihilating a quadratic form."""

    points: ProductPointSet
    coefficients: np.ndarray
    quadratic_form_value: float
    residual_sup: float | None
    kind: str = ""
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "points": self.points.to_list(),
            "coefficients": self.coefficients.tolist(),
            "quadratic_form_value": self.quadratic_form_value,
            "residual_sup": self.residual_sup,
            "info": self.info,
        }


def _check_dims(s: CoefficientScheme, pts: ProductPointSet) -> None:
    if gg.is_infinite(s.m) or gg.is_infinite(s.M):
        raise DimensionMismatch("Gram matrices need finite sphere dimensions")
    if (s.m, s.M) != (pts.m, pts.M):
        raise DimensionMismatch(
            f"scheme lives on S^{s.m} x S^{s.M} but points on S^{pts.m} x S^{pts.M}")


def gram_matrix(s: CoefficientScheme, pts: ProductPointSet, tol: float = 1e-10) -> np.ndarray:
    _check_dims(s, pts)
    A = eval_kernel(s, pts.x_gram(), pts.w_gram(), tol)
    return 0.5 * (A + A.T)


def gram(s: CoefficientScheme, pts: ProductPointSet, tol: float = 1e-10) -> GramReport:
    """Assemble the Gram matrix and report its smallest eigenvalue.

    A null vector (unit eigenvector of the smallest eigenvalue) is attached
    when that eigenvalue is at most ``1e-9 * n * max(diag A)``.
    """
    A = gram_matrix(s, pts, tol)
    evals, evecs = np.linalg.eigh(A)
    n = A.shape[0]
    threshold = NULL_EIG_FACTOR * n * float(np.max(np.diag(A)))
    null = evecs[:, 0].copy() if evals[0] <= threshold else None
    return GramReport(A, float(evals[0]), null, threshold)


def quadratic_form(source, pts: ProductPointSet | None, c, tol: float = 1e-10) -> float:
    """``c^T A c`` for a :class:`GramReport` or a scheme plus points."""
    c = np.asarray(c, dtype=float)
    if isinstance(source, GramReport):
        A = source.matrix
    else:
        A = gram_matrix(source, pts, tol)
    if c.shape != (A.shape[0],):
        raise ValueError(f"coefficient vector has length {c.size}, expected {A.shape[0]}")
    return float(c @ A @ c)


def _sites(pts_x: np.ndarray, pts_w: np.ndarray | None, samples: int, seed):
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    sx = np.vstack([random_unit(pts_x.shape[1] - 1, rng, size=samples), pts_x]) if samples else pts_x
    if pts_w is None:
        return sx, None
    sw = np.vstack([random_unit(pts_w.shape[1] - 1, rng, size=samples), pts_w]) if samples else pts_w
    return sx, sw


def _product_residual(xs, ws, c, pairs, m, M, site_x, site_w) -> float:
    pairs = list(pairs)
    if not pairs:
        return 0.0
    kmax = max(k for k, _ in pairs)
    lmax = max(l for _, l in pairs)
    Tk = gg.basis_table(kmax, m, np.clip(site_x @ xs.T, -1.0, 1.0))
    Tl = gg.basis_table(lmax, M, np.clip(site_w @ ws.T, -1.0, 1.0))
    sup = 0.0
    for k, l in pairs:
        sup = max(sup, float(np.max(np.abs((Tk[k] * Tl[l]) @ c))))
    return sup


def residual_check(s: CoefficientScheme, pts: ProductPointSet, c, samples: int = DEFAULT_SAMPLES,
                   seed=0) -> float:
    """``sup |sum_mu c_mu P_k(x_mu . x) P_l(w_mu . w)|`` over the support and sites.

    Sites are ``samples`` random ``(x, w)`` pairs plus the data points.
    """
    if not isinstance(s, SparseScheme):
        raise SchemeError("residual_check needs a sparse scheme")
    _check_dims(s, pts)
    c = np.asarray(c, dtype=float)
    if c.shape != (len(pts),):
        raise ValueError("coefficient vector length does not match the point count")
    site_x, site_w = _sites(pts.xs, pts.ws, samples, seed)
    return _product_residual(pts.xs, pts.ws, c, s.support, s.m, s.M, site_x, site_w)


def single_sphere_residual(coeffs, pts, c, samples: int = DEFAULT_SAMPLES, seed=0) -> float:
    """Single-sphere analogue: ``sup_k sup_x |sum_mu c_mu P_k^m(x_mu . x)|``.

    ``coeffs`` maps degrees to kernel coefficients (a dict, an iterable of
    pairs or :class:`ExpansionCoefficients`); only positive ones count.
    """
    items = coeffs.as_dict().items() if hasattr(coeffs, "as_dict") else dict(coeffs).items()
    degrees = sorted(d for d, a in items if a > 0)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    c = np.asarray(c, dtype=float)
    if not degrees or not np.any(c):
        return 0.0
    m = pts.shape[1] - 1
    site_x, _ = _sites(pts, None, samples, seed)
    T = gg.basis_table(max(degrees), m, np.clip(site_x @ pts.T, -1.0, 1.0))
    return max(float(np.max(np.abs(T[d] @ c))) for d in degrees)


def gamma_coefficients(n: int) -> np.ndarray:
    """``c_mu = (-1)^mu (e^{i pi mu/n} + e^{-i pi mu/n}) = 2 (-1)^mu cos(pi mu / n)``."""
    mu = np.arange(1, n + 1)
    return 2.0 * (-1.0) ** mu * np.cos(np.pi * mu / n)


def gamma_quadratic_form(k0: int, m, n: int) -> tuple[float, float]:
    """``QF = sum_{mu,nu} c_mu c_nu sum_{k <= k0} P_{2k}^m(x_mu . x_nu)`` on the n-circle.

    Returns ``(QF, sum |c_mu c_nu|)``.
    """
    x = circle_embed_points(n, m)
    c = gamma_coefficients(n)
    T = gg.basis_table(2 * k0, m, np.clip(x @ x.T, -1.0, 1.0))
    block = T[0:2 * k0 + 1:2].sum(axis=0)
    return float(c @ block @ c), float(np.sum(np.abs(np.outer(c, c))))


def _block_members(s: CoefficientScheme, quadrant, degree_cap: int):
    if isinstance(s, SparseScheme):
        return sorted(kl for kl in s.support if (kl[0] % 2, kl[1] % 2) == tuple(quadrant))
    k = np.arange(degree_cap + 1)[:, None]
    l = np.arange(degree_cap + 1)[None, :]
    i, j = quadrant
    inside = s.mask.contains(k, l) & (k % 2 == i) & (l % 2 == j)
    return [tuple(map(int, kl)) for kl in np.argwhere(inside)]


def gamma_witness(k0: int | None = None, l0: int | None = None,
                  scheme: CoefficientScheme | None = None, m=None, M=None,
                  samples: int = DEFAULT_SAMPLES, seed=0) -> Witness:
    """Circle-grid solution of the quadrant ``(0, 0)`` block system.

    With ``k0`` given, the x-factor ``sum_mu c_mu P_k^m(x_mu . x)`` vanishes
    for every even ``k <= 2 k0`` once ``n`` is the smallest odd integer above
    ``4 k0 + 1``; hence ``d_{mu nu} = c_mu c_nu`` solves the block system on
    ``Gamma_n = {(x_mu, w_nu)}`` whenever the k-indices of ``J^{0,0}`` do not
    exceed ``2 k0``.  ``l0`` runs the same argument on the w-factor.

    The witness reports the single-sphere quadratic form ``QF`` and the sup
    residual of the block system over ``J^{0,0}`` (over the annihilated
    degrees when no scheme is given).
    """
    if (k0 is None) == (l0 is None):
        raise ValueError("give exactly one of k0 and l0")
    if scheme is not None:
        m = scheme.m if m is None else m
        M = scheme.M if M is None else M
    m = gg.check_dim(m if m is not None else 2, allow_infinite=False)
    M = gg.check_dim(M if M is not None else m, allow_infinite=False)
    axis, bound = ("k", k0) if k0 is not None else ("l", l0)
    if bound < 0:
        raise ValueError("degree bound must be nonnegative")

    members = None
    if scheme is not None:
        iq = index_quadrants(scheme)
        flags = iq[(0, 0)].flags
        if (flags.k_unbounded if axis == "k" else flags.l_unbounded):
            raise PreconditionError(f"the {axis}-indices of J^(0,0) are unbounded")
        cap = SAMPLE_DEGREE if isinstance(scheme, ParameterizedScheme) else 0
        members = _block_members(scheme, (0, 0), cap)
        idx = 0 if axis == "k" else 1
        worst = max((kl[idx] for kl in members), default=0)
        if worst > 2 * bound:
            raise PreconditionError(
                f"J^(0,0) has {axis} = {worst} > 2*{axis}0 = {2 * bound}; increase {axis}0")
        if isinstance(scheme, ParameterizedScheme):
            members = [kl for kl in members if max(kl) <= max(PARAMETERIZED_RESIDUAL_DEGREE, 2 * bound)]

    n = 4 * bound + 3
    dim = m if axis == "k" else M
    qf, scale = gamma_quadratic_form(bound, dim, n)
    c = gamma_coefficients(n)
    cx = circle_embed_points(n, m)
    cw = circle_embed_points(n, M)
    mu, nu = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    pts = ProductPointSet(cx[mu.ravel()], cw[nu.ravel()])
    d = np.outer(c, c).ravel()

    if members is None:
        factor_pts = cx if axis == "k" else cw
        residual = single_sphere_residual({2 * k: 1.0 for k in range(bound + 1)}, factor_pts, c,
                                          samples, seed)
    else:
        site_x, site_w = _sites(pts.xs, pts.ws, samples, seed)
        residual = _product_residual(pts.xs, pts.ws, d, members, m, M, site_x, site_w)
    info = {"n": n, "axis": axis, "bound": bound, "qf_scale": scale, "quadrant": [0, 0],
            "m": m, "M": M}
    return Witness(pts, d, qf, residual, kind="gamma", info=info)


def lift_quadrant_witness(scheme: CoefficientScheme, block: Witness, quadrant=(0, 0),
                          tol: float = 1e-10, samples: int = DEFAULT_SAMPLES, seed=0) -> Witness:
    """Turn a block solution ``d`` on antipodal-free points into a kernel witness.

    The quadrant vector with ``d`` in ``quadrant`` and zeros elsewhere is
    split by the inverse Walsh map; the coefficient ``c^{i,j}_p`` is placed on
    the point ``((-1)^i x_p, (-1)^j w_p)``.
    """
    reps = block.points
    d = np.asarray(block.coefficients, dtype=float)
    parts = {q: (d if tuple(q) == tuple(quadrant) else np.zeros_like(d)) for q in QUADRANTS}
    c = walsh_split(QuadrantVector.from_mapping(parts))
    xs, ws, coeffs = [], [], []
    for i, j in QUADRANTS:
        xs.append((-1) ** i * reps.xs)
        ws.append((-1) ** j * reps.ws)
        coeffs.append(c[(i, j)])
    pts = ProductPointSet(np.vstack(xs), np.vstack(ws))
    coeffs = np.concatenate(coeffs)
    qf = quadratic_form(scheme, pts, coeffs, tol)
    residual = residual_check(scheme, pts, coeffs, samples, seed) if isinstance(scheme, SparseScheme) else None
    info = dict(block.info, block_quadratic_form=block.quadratic_form_value,
                block_residual=block.residual_sup, kernel_mass=scheme.total_mass())
    return Witness(pts, coeffs, qf, residual, kind="gamma_lifted", info=info)


def antipodal_doubling_witness(s: CoefficientScheme, seed=0, max_n: int = DOUBLING_MAX_N,
                               qf_tol: float = WITNESS_QF_TOL, tol: float = 1e-10,
                               samples: int = DEFAULT_SAMPLES) -> Witness:
    """Search antipodally doubled point sets for a Gram null direction.

    ``n`` random points are joined by their antipodes ``(-x_j, -w_j)`` for
    ``n = 1, 2, 4, ...`` up to ``max_n``.  The first smallest-eigenvalue
    eigenvector ``c`` with ``|c^T A c| <= qf_tol * trace(A)`` is returned.
    Termination is guaranteed in principle by a rank count on the finite
    parity class, but that bound is far beyond desk scale, hence the cap.
    """
    reasons = classify(s).reasons
    if reasons["even_sum_infinite"] and reasons["odd_sum_infinite"]:
        raise PreconditionError("both parity classes of k + l are infinite; doubling cannot succeed")
    if gg.is_infinite(s.m) or gg.is_infinite(s.M):
        raise DimensionMismatch("antipodal doubling needs finite sphere dimensions")
    rng = np.random.default_rng(seed)
    half_x = random_unit(s.m, rng, size=max_n)
    half_w = random_unit(s.M, rng, size=max_n)
    n = 1
    while n <= max_n:
        pts = ProductPointSet(np.vstack([half_x[:n], -half_x[:n]]),
                              np.vstack([half_w[:n], -half_w[:n]]))
        A = gram_matrix(s, pts, tol)
        evals, evecs = np.linalg.eigh(A)
        c = evecs[:, 0]
        qf = float(c @ A @ c)
        trace = float(np.trace(A))
        logger.debug("doubling n=%d: min eigenvalue %.3e, trace %.3e", n, evals[0], trace)
        if abs(qf) <= qf_tol * trace:
            residual = residual_check(s, pts, c, samples, seed) if isinstance(s, SparseScheme) else None
            info = {"n": n, "trace": trace, "min_eigenvalue": float(evals[0])}
            return Witness(pts, c, qf, residual, kind="antipodal_doubling", info=info)
        n *= 2
    raise WitnessSearchExhausted(
        f"no Gram null direction up to n = {max_n} doubled points; this signals a tolerance or "
        "rank problem, not strict positive definiteness")


def quadrant_decomposition(pts: ProductPointSet, c) -> tuple[AntipodalFreeDecomposition, QuadrantVector]:
    """Fold ``c`` onto antipodal-free representatives.

    ``c^{i,j}_p`` collects the coefficient of the point
    ``((-1)^i x'_p, (-1)^j w'_p)`` (zero when that point is absent).
    """
    decomp = extract_antipodal_free(pts)
    p = len(decomp.representatives)
    parts = {q: np.zeros(p) for q in QUADRANTS}
    for coef, (rep, sx, sw) in zip(np.asarray(c, dtype=float), decomp.mapping):
        parts[(0 if sx > 0 else 1, 0 if sw > 0 else 1)][rep] += coef
    return decomp, QuadrantVector.from_mapping(parts)


def block_residuals(s: SparseScheme, reps: ProductPointSet, d: QuadrantVector,
                    samples: int = DEFAULT_SAMPLES, seed=0) -> dict:
    """Residual of each quadrant's block system ``sum_p d^{i,j}_p P_k P_l`` over ``J^{i,j}``."""
    if not isinstance(s, SparseScheme):
        raise SchemeError("block_residuals needs a sparse scheme")
    site_x, site_w = _sites(reps.xs, reps.ws, samples, seed)
    iq = index_quadrants(s)
    return {q: _product_residual(reps.xs, reps.ws, d[q], sorted(iq[q].members), s.m, s.M,
                                 site_x, site_w)
            for q in QUADRANTS}
