"""Spectral primitives shared by every decider and constructor.

Dense complex matrices only.  Everything here is a pure function of its
inputs: Schur forms, eigenvalue clustering, rank/nullity decisions, Jordan
structure recovery from nullity staircases, Sylvester solving, and spectral
(Riesz-style) block splitting via ordered Schur forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import ztrexc

__all__ = [
    "LinalgError",
    "SchurConvergenceError",
    "SpectralSplitError",
    "ConditionCapError",
    "StaircaseError",
    "Tolerances",
    "DEFAULT_TOL",
    "SpectrumReport",
    "JordanStructure",
    "RieszSplit",
    "Disk",
    "HalfPlane",
    "PointSet",
    "Rest",
    "as_matrix",
    "opnorm",
    "cond2",
    "schur",
    "spectrum",
    "nullity",
    "rank",
    "jordan_structure",
    "sylvester_solve",
    "riesz_split",
    "split_at_centers",
]

#: relative radius used when Tolerances.eig_cluster is left unset
EIG_CLUSTER_REL = 1e-6

#: norm floor in the default radius; absorbs roundoff junk when the input is
#: zero up to machine precision (e.g. a commutator of equal idempotents)
EIG_SCALE_FLOOR = 1e-8

#: absolute cap on the radius used to identify eigenvalues with the special
#: points {0, 1, -1, i/2}; keeps the buckets disjoint for very large norms
SPECIAL_POINT_CAP = 0.1


class LinalgError(Exception):
    """Base class for numerical failures in this package."""


class SchurConvergenceError(LinalgError):
    """The QR eigenvalue iteration behind the Schur form did not converge."""


class SpectralSplitError(LinalgError):
    """Spectra could not be separated as requested (overlap or boundary)."""


class ConditionCapError(LinalgError):
    """A similarity transform exceeded the configured condition cap."""

    def __init__(self, message: str, cond: float):
        super().__init__(message)
        self.cond = cond


class StaircaseError(LinalgError):
    """Inconsistent nullity staircase while recovering Jordan structure."""

    def __init__(self, message: str, staircase: Sequence[int]):
        super().__init__(message)
        self.staircase = tuple(staircase)


# ---------------------------------------------------------------------------
# basic carriers
# ---------------------------------------------------------------------------


def as_matrix(a) -> np.ndarray:
    """Validate ``a`` as a square complex matrix with finite entries."""
    A = np.asarray(a, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return A


def opnorm(A: np.ndarray) -> float:
    """Operator (spectral) norm; 0 for empty matrices."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def cond2(A: np.ndarray) -> float:
    """2-norm condition number (inf when numerically singular)."""
    s = sla.svdvals(A)
    if len(s) == 0:
        return 1.0
    if s[-1] <= 0:
        return float("inf")
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package.

    ``eig_cluster`` is the absolute radius for merging nearby eigenvalues;
    when ``None`` it defaults to ``1e-6 * opnorm(T)`` for the matrix at hand.
    ``rank_rel`` is the relative singular-value cutoff for rank/nullity,
    ``residual`` the acceptable certificate residual, ``cond_cap`` the largest
    admissible condition number for any similarity this package constructs.
    """

    eig_cluster: float | None = None
    rank_rel: float = 1e-8
    residual: float = 1e-8
    cond_cap: float = 1e8

    def __post_init__(self):
        if self.eig_cluster is not None and self.eig_cluster < 0:
            raise ValueError("eig_cluster must be >= 0")
        if self.rank_rel < 0 or self.residual < 0:
            raise ValueError("rank_rel and residual must be >= 0")
        if self.cond_cap < 1:
            raise ValueError("cond_cap must be >= 1")

    def eig_radius(self, T: np.ndarray) -> float:
        """Clustering radius for a given matrix."""
        if self.eig_cluster is not None:
            return self.eig_cluster
        return EIG_CLUSTER_REL * max(opnorm(T), EIG_SCALE_FLOOR)

    def special_radius(self, T: np.ndarray) -> float:
        """Radius for identifying clusters with special points (0, +/-1, i/2)."""
        return min(self.eig_radius(T), SPECIAL_POINT_CAP)


DEFAULT_TOL = Tolerances()


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


# ---------------------------------------------------------------------------
# Schur form
# ---------------------------------------------------------------------------


def schur(T, tol: Tolerances | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``T = U R U*`` with ``U`` unitary, ``R`` triangular."""
    T = as_matrix(T)
    if T.shape[0] == 0:
        return T.copy(), T.copy()
    try:
        R, U = sla.schur(T, output="complex")
    except sla.LinAlgError as exc:  # pragma: no cover - hard to trigger
        raise SchurConvergenceError(f"Schur iteration failed: {exc}") from exc
    return U, R


def _reorder_schur(U: np.ndarray, R: np.ndarray, order: Sequence[int]):
    """Reorder the diagonal of a complex Schur form.

    ``order`` lists original diagonal positions in the desired final order.
    Returns updated ``(U, R)``; both inputs are left untouched.
    """
    n = R.shape[0]
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of range(n)")
    R = np.asfortranarray(R.copy())
    U = np.asfortranarray(U.copy())
    pos = list(range(n))  # pos[p] = original index currently at position p
    for target, orig in enumerate(order):
        cur = pos.index(orig)
        if cur == target:
            continue
        R, U, info = ztrexc(R, U, cur + 1, target + 1)
        if info != 0:  # pragma: no cover
            raise LinalgError(f"ztrexc failed with info={info}")
        pos.insert(target, pos.pop(cur))
    return np.ascontiguousarray(U), np.ascontiguousarray(R)


# ---------------------------------------------------------------------------
# eigenvalue clustering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumReport:
    """Clustered eigenvalues with algebraic multiplicities."""

    clusters: tuple[tuple[complex, int], ...]
    tol_used: float
    ambiguous: bool = False

    @property
    def dimension(self) -> int:
        return sum(m for _, m in self.clusters)

    def find(self, point: complex, radius: float) -> int | None:
        """Index of the cluster whose center is within ``radius`` of ``point``."""
        best, best_d = None, float("inf")
        for i, (c, _) in enumerate(self.clusters):
            d = abs(c - point)
            if d <= radius and d < best_d:
                best, best_d = i, d
        return best

    def multiplicity_at(self, point: complex, radius: float) -> int:
        i = self.find(point, radius)
        return 0 if i is None else self.clusters[i][1]


def _single_linkage(values: np.ndarray, radius: float) -> np.ndarray:
    """Connected components of the `distance <= radius` graph (labels array)."""
    n = len(values)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= radius:
                ri, rj = root(i), root(j)
                if ri != rj:
                    parent[ri] = rj
    labels = np.array([root(i) for i in range(n)])
    # relabel to 0..k-1 in order of first occurrence
    remap: dict[int, int] = {}
    out = np.empty(n, dtype=int)
    for i, lab in enumerate(labels):
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


def _cluster_values(values: np.ndarray, radius: float):
    """Single-linkage clustering of complex values, with a post-merge pass so
    that distinct cluster centers end up separated by more than ``2 * radius``.

    Returns ``(centers, mults, labels, ambiguous)``.
    """
    n = len(values)
    labels = _single_linkage(values, radius)
    for _ in range(n):  # post-merge by center distance; terminates quickly
        k = labels.max() + 1 if n else 0
        centers = np.array([values[labels == i].mean() for i in range(k)])
        merged = False
        for i in range(k):
            for j in range(i + 1, k):
                if abs(centers[i] - centers[j]) <= 2 * radius:
                    labels[labels == j] = i
                    labels = _relabel(labels)
                    merged = True
                    break
            if merged:
                break
        if not merged:
            break
    k = labels.max() + 1 if n else 0
    centers = np.array([values[labels == i].mean() for i in range(k)])
    mults = np.array([int(np.sum(labels == i)) for i in range(k)])
    # a merge decision that flips within 10% of the radius is flagged
    ambiguous = False
    if radius > 0:
        for i in range(n):
            for j in range(i + 1, n):
                d = abs(values[i] - values[j])
                if 0.9 * radius < d <= 1.1 * radius:
                    ambiguous = True
    return centers, mults, labels, ambiguous


def _relabel(labels: np.ndarray) -> np.ndarray:
    remap: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


def spectrum(T, tol: Tolerances | None = None) -> SpectrumReport:
    """Eigenvalue clusters of ``T`` with algebraic multiplicities.

    Schur diagonal entries are merged by single linkage at the clustering
    radius; multiplicities always sum to the dimension.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    radius = tol.eig_radius(T)
    _, R = schur(T)
    vals = np.diag(R)
    centers, mults, _, ambiguous = _cluster_values(vals, radius)
    idx = np.lexsort((centers.imag, centers.real))
    clusters = tuple((complex(centers[i]), int(mults[i])) for i in idx)
    return SpectrumReport(clusters=clusters, tol_used=radius, ambiguous=ambiguous)


# ---------------------------------------------------------------------------
# rank / nullity
# ---------------------------------------------------------------------------


def nullity(T, tol: Tolerances | None = None, abs_floor: float = 0.0) -> int:
    """``n`` minus the number of singular values above the relative cutoff.

    ``abs_floor`` optionally marks singular values at or below a caller-side
    resolution (e.g. an eigenvalue-clustering radius) as zero.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    n = T.shape[0]
    if n == 0:
        return 0
    s = sla.svdvals(T)
    if s[0] <= max(abs_floor, 0.0):
        return n
    return int(n - np.sum(s > max(tol.rank_rel * s[0], abs_floor)))


def rank(T, tol: Tolerances | None = None) -> int:
    T = as_matrix(T)
    return T.shape[0] - nullity(T, tol)


# ---------------------------------------------------------------------------
# Jordan structure from nullity staircases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JordanStructure:
    """Per-eigenvalue Segre sequences (Jordan block sizes, non-increasing)."""

    blocks: tuple[tuple[complex, tuple[int, ...]], ...]

    def segre_at(self, point: complex, radius: float) -> tuple[int, ...]:
        """Segre sequence of the cluster within ``radius`` of ``point`` (or ())."""
        best, best_d = (), float("inf")
        for c, seg in self.blocks:
            d = abs(c - point)
            if d <= radius and d < best_d:
                best, best_d = seg, d
        return best

    @property
    def eigenvalues(self) -> tuple[complex, ...]:
        return tuple(c for c, _ in self.blocks)


def _range_iteration_staircase(
    A: np.ndarray, mult: int, rank_rel: float, abs_floor: float = 0.0
):
    """Nullities ``d_k = dim ker A^k`` for k = 1.. until they reach ``mult``.

    Ranks are computed on ``A @ Q_{k-1}`` where ``Q_{k-1}`` is an orthonormal
    basis of ``ran A^{k-1}``; re-orthonormalizing every step keeps the error
    of high powers under control.  Singular values at or below ``abs_floor``
    (the caller's eigenvalue-clustering resolution) count as zero, so rank
    decisions stay consistent with how the eigenvalues were merged.
    """
    n = A.shape[0]
    d: list[int] = []
    Q: np.ndarray | None = None
    for _ in range(1, mult + 1):
        W = A if Q is None else A @ Q
        if W.size == 0:
            rk = 0
        else:
            U, s, _ = np.linalg.svd(W, full_matrices=False)
            if s[0] <= max(abs_floor, np.finfo(float).tiny):
                rk = 0
            else:
                rk = int(np.sum(s > max(rank_rel * s[0], abs_floor)))
            Q = U[:, :rk]
        if rk == 0:
            Q = np.zeros((n, 0), dtype=complex)
        d.append(n - rk)
        if d[-1] >= mult:
            break
        if len(d) >= 2 and d[-1] <= d[-2]:
            break  # stalled before reaching mult; handled by caller
    return d


def jordan_structure(T, tol: Tolerances | None = None) -> JordanStructure:
    """Segre sequences for every eigenvalue cluster of ``T``.

    For cluster ``lam`` the staircase ``d_k = nullity((T - lam I)^k)`` gives
    the number of blocks of size >= k as ``d_k - d_{k-1}``; an inconsistent
    staircase raises :class:`StaircaseError` carrying the offending values.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    rep = spectrum(T, tol)
    out = []
    n = T.shape[0]
    radius = tol.eig_radius(T)
    for center, mult in rep.clusters:
        A = T - center * np.eye(n)
        d = _range_iteration_staircase(A, mult, tol.rank_rel, abs_floor=radius)
        incs = [d[0]] + [d[k] - d[k - 1] for k in range(1, len(d))]
        if any(c <= 0 for c in incs) or d[-1] != mult or any(
            incs[k] > incs[k - 1] for k in range(1, len(incs))
        ):
            raise StaircaseError(
                f"inconsistent nullity staircase at eigenvalue {center:.6g}: {d}",
                d,
            )
        # conjugate partition of the increments; sizes are non-increasing
        sizes = sorted(
            (sum(1 for c in incs if c > j) for j in range(incs[0])),
            reverse=True,
        )
        out.append((complex(center), tuple(sizes)))
    return JordanStructure(blocks=tuple(out))


# ---------------------------------------------------------------------------
# Sylvester equation  A X - X B = C
# ---------------------------------------------------------------------------


def sylvester_solve(A, B, C, tol: Tolerances | None = None) -> np.ndarray:
    """Solve ``A X - X B = C`` for spectra of A and B that do not overlap."""
    A = as_matrix(A)
    B = as_matrix(B)
    C = np.asarray(C, dtype=complex)
    tol = _tol(tol)
    if C.shape != (A.shape[0], B.shape[0]):
        raise ValueError(f"C must be {A.shape[0]}x{B.shape[0]}, got {C.shape}")
    _, RA = schur(A)
    _, RB = schur(B)
    ev_a = np.diag(RA) if A.size else np.array([])
    ev_b = np.diag(RB) if B.size else np.array([])
    sep_tol = max(tol.eig_radius(A), tol.eig_radius(B))
    if len(ev_a) and len(ev_b):
        dist = np.abs(ev_a[:, None] - ev_b[None, :])
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[i, j] <= sep_tol:
            raise SpectralSplitError(
                "spectra are not disjoint under tolerance: eigenvalue "
                f"{ev_a[i]:.6g} of A is within {dist[i, j]:.3g} of "
                f"{ev_b[j]:.6g} of B"
            )
    if A.size == 0 or B.size == 0:
        return np.zeros_like(C)
    X = sla.solve_sylvester(A, -B, C)
    return X


# ---------------------------------------------------------------------------
# planar regions and Riesz-style splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def signed_distance(self, z: complex) -> float:
        return abs(z - self.center) - self.radius


@dataclass(frozen=True)
class HalfPlane:
    """Region ``{z : Re(conj(normal) * z) > offset}``."""

    normal: complex
    offset: float = 0.0

    def signed_distance(self, z: complex) -> float:
        return self.offset - (np.conj(self.normal) * z).real / abs(self.normal)


@dataclass(frozen=True)
class PointSet:
    """Union of disks of a common radius around the given points."""

    points: tuple[complex, ...]
    radius: float

    def signed_distance(self, z: complex) -> float:
        return min(abs(z - p) for p in self.points) - self.radius


@dataclass(frozen=True)
class Rest:
    """Complement of the union of the other regions."""

    others: tuple

    def signed_distance(self, z: complex) -> float:
        return -min(o.signed_distance(z) for o in self.others)


@dataclass(frozen=True)
class RieszSplit:
    """Block-diagonalizing similarity grouped by spectral region.

    ``similarity @ blkdiag(blocks) @ inv(similarity)`` reconstructs the input;
    ``region_of[i]`` is the index of the region carrying ``blocks[i]``.
    """

    similarity: np.ndarray
    block_dims: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]
    region_of: tuple[int, ...]
    residual: float
    cond: float


def riesz_split(T, regions: Sequence, tol: Tolerances | None = None) -> RieszSplit:
    """Split ``T`` into blocks whose spectra lie in the prescribed regions.

    Ordered Schur reordering groups the eigenvalues region by region; the
    off-diagonal couplings are then removed with Sylvester solves.  Raises
    :class:`SpectralSplitError` when a cluster sits on a region boundary or in
    none/several regions, and :class:`ConditionCapError` when the similarity
    is worse-conditioned than ``tol.cond_cap``.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    n = T.shape[0]
    radius = tol.eig_radius(T)
    rep = spectrum(T, tol)
    boundary_tol = 0.1 * radius

    region_of_cluster = []
    for c, _ in rep.clusters:
        dists = [reg.signed_distance(c) for reg in regions]
        for d in dists:
            if abs(d) <= boundary_tol:
                raise SpectralSplitError(
                    f"eigenvalue cluster {c:.6g} lies on a region boundary "
                    f"(distance {d:.3g})"
                )
        inside = [i for i, d in enumerate(dists) if d < 0]
        if len(inside) != 1:
            raise SpectralSplitError(
                f"eigenvalue cluster {c:.6g} lies in {len(inside)} regions, "
                "expected exactly one"
            )
        region_of_cluster.append(inside[0])

    U, R = schur(T)
    vals = np.diag(R)
    centers = np.array([c for c, _ in rep.clusters])
    # assign each diagonal entry to its nearest cluster center
    lab = np.argmin(np.abs(vals[:, None] - centers[None, :]), axis=1) if n else []
    order = sorted(range(n), key=lambda p: (region_of_cluster[lab[p]], p))
    U, R = _reorder_schur(U, R, order)

    # block layout: regions in index order, empty regions dropped
    dims_by_region: dict[int, int] = {}
    for ci, (_, m) in enumerate(rep.clusters):
        ri = region_of_cluster[ci]
        dims_by_region[ri] = dims_by_region.get(ri, 0) + m
    region_ids = sorted(dims_by_region)
    dims = [dims_by_region[r] for r in region_ids]
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)

    W = R.copy()
    P = np.eye(n, dtype=complex)
    resid = 0.0
    for bi in range(len(dims) - 2, -1, -1):
        i0, i1 = offs[bi], offs[bi + 1]
        j0 = i1
        A = W[i0:i1, i0:i1]
        B = W[j0:, j0:]
        C = W[i0:i1, j0:]
        X = sylvester_solve(A, B, -C, tol)
        resid = max(resid, opnorm(A @ X - X @ B + C))
        Sk = np.eye(n, dtype=complex)
        Sk[i0:i1, j0:] = X
        W[:i0, j0:] += W[:i0, i0:i1] @ X
        W[i0:i1, j0:] = 0.0
        P = P @ Sk

    cond = cond2(P)
    if cond > tol.cond_cap:
        raise ConditionCapError(
            f"similarity condition {cond:.3g} exceeds cap {tol.cond_cap:.3g}",
            cond,
        )
    scale = max(opnorm(T), 1.0)
    if resid > tol.residual * scale:
        raise SpectralSplitError(
            f"block elimination residual {resid:.3g} exceeds "
            f"{tol.residual * scale:.3g}"
        )
    blocks = tuple(W[offs[i]:offs[i + 1], offs[i]:offs[i + 1]].copy()
                   for i in range(len(dims)))
    return RieszSplit(
        similarity=U @ P,
        block_dims=tuple(dims),
        blocks=blocks,
        region_of=tuple(region_ids),
        residual=float(resid),
        cond=float(cond),
    )


def split_at_centers(T, centers: Sequence[complex], tol: Tolerances | None = None):
    """Split ``T`` into the block at the given cluster centers and the rest.

    Returns ``(S, sel, rest)`` where ``S`` is the similarity, ``sel`` the
    block carrying the selected clusters (``None`` when no center is given)
    and ``rest`` the complementary block (``None`` when empty).
    """
    T = as_matrix(T)
    tol = _tol(tol)
    if len(centers) == 0:
        return np.eye(T.shape[0], dtype=complex), None, T.copy()
    radius = tol.eig_radius(T)
    sel_region = PointSet(points=tuple(centers), radius=radius)
    rs = riesz_split(T, [sel_region, Rest(others=(sel_region,))], tol)
    sel = None
    rest = None
    for blk, reg in zip(rs.blocks, rs.region_of):
        if reg == 0:
            sel = blk
        else:
            rest = blk
    return rs.similarity, sel, rest
