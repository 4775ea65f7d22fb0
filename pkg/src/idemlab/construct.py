"""Certificate synthesis: explicit idempotent or projection pairs whose
commutator/difference realizes a target matrix exactly, or approximates it to
a requested accuracy when only closure membership holds.

Every constructor returns a :class:`CertificatePair` carrying the measured
target and structure residuals, so certificates are checkable by direct
matrix arithmetic without trusting this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .classify import (
    MembershipReport,
    _pair_under_negation,
    child_tol,
    in_clos_doi,
    is_balanced,
    is_cop,
    is_dop,
)
from .core import (
    ConditionCapError,
    LinalgError,
    StaircaseError,
    Tolerances,
    _tol,
    as_matrix,
    cond2,
    nullity,
    opnorm,
    schur,
    spectrum,
    split_at_centers,
    _reorder_schur,
)

__all__ = [
    "CertificatePair",
    "PreconditionError",
    "MembershipRejection",
    "ConstructionError",
    "combine",
    "structure_defect",
    "purify_idempotent",
    "coi_pair_diag_balanced",
    "coi_approximant",
    "coi_pair_nilpotent_order2",
    "coi_to_doi",
    "doi_pair_plusminus",
    "doi_approximant_pm1",
    "doi_approximant",
    "cop_pair",
    "dop_pair",
    "symmetrize_spectrum",
]

KINDS = (
    "idempotent-commutator",
    "idempotent-difference",
    "projection-commutator",
    "projection-difference",
)


class PreconditionError(ValueError):
    """A constructor precondition does not hold for the given input."""


class MembershipRejection(PreconditionError):
    """The gating decider rejected the input; carries the rejecting report."""

    def __init__(self, report: MembershipReport):
        super().__init__(
            f"decider {report.class_tag!r} rejected the input: "
            f"{report.evidence.get('conditions')}"
        )
        self.report = report


class ConstructionError(LinalgError):
    """The construction could not reach the requested accuracy."""

    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class CertificatePair:
    """Two matrices certifying a commutator/difference construction."""

    left: np.ndarray
    right: np.ndarray
    kind: str
    target_residual: float
    structure_residual: float
    basis: np.ndarray | None = None
    similarity_cond: float | None = None

    def combined(self) -> np.ndarray:
        return combine(self.left, self.right, self.kind)


def combine(left: np.ndarray, right: np.ndarray, kind: str) -> np.ndarray:
    """Commutator or difference of the pair, according to its kind."""
    if kind not in KINDS:
        raise ValueError(f"unknown certificate kind {kind!r}")
    if kind.endswith("commutator"):
        return left @ right - right @ left
    return left - right


def structure_defect(left: np.ndarray, right: np.ndarray, kind: str) -> float:
    """Largest idempotency (and, for projections, hermitian) defect."""
    defects = [
        opnorm(left @ left - left),
        opnorm(right @ right - right),
    ]
    if kind.startswith("projection"):
        defects.append(opnorm(left - left.conj().T))
        defects.append(opnorm(right - right.conj().T))
    return float(max(defects))


def purify_idempotent(E: np.ndarray, max_iter: int = 25) -> np.ndarray:
    """Drive a near-idempotent to an idempotent (3E^2 - 2E^3 iteration).

    Quadratically convergent when the spectrum clusters near {0, 1}; returns
    the iterate with the smallest defect if the iteration stalls.
    """
    best = E
    best_defect = opnorm(E @ E - E)
    X = E
    floor = 64 * np.finfo(float).eps * max(1.0, opnorm(E)) ** 2
    for _ in range(max_iter):
        if best_defect <= floor:
            break
        X2 = X @ X
        X = 3 * X2 - 2 * X2 @ X
        d = opnorm(X @ X - X)
        if d < best_defect:
            best, best_defect = X, d
        else:
            break
    return best


def _make_pair(left, right, kind, target, tol, basis=None, cond=None):
    tr = float(opnorm(combine(left, right, kind) - target))
    sr = structure_defect(left, right, kind)
    if sr > tol.residual * max(1.0, opnorm(left), opnorm(right)) ** 2:
        raise ConstructionError(
            f"structure residual {sr:.3g} exceeds tolerance", best_residual=tr
        )
    return CertificatePair(
        left=left,
        right=right,
        kind=kind,
        target_residual=tr,
        structure_residual=sr,
        basis=basis,
        similarity_cond=cond,
    )


# ---------------------------------------------------------------------------
# commutator pairs for balanced diagonals
# ---------------------------------------------------------------------------


def _coi_block(beta: complex):
    """2x2 idempotents whose commutator has eigenvalues +/-beta (beta != 0).

    With E = [[1, t], [0, 0]] and F = [[1, 0], [1, 0]] the commutator is
    [[t, -t], [-1, -t]] with eigenvalues +/-sqrt(t^2 + t); choosing the
    principal branch of t^2 + t = beta^2 keeps t continuous at beta = 0.
    """
    beta = complex(beta)
    t = (-1 + np.sqrt(1 + 4 * beta * beta + 0j)) / 2
    E2 = np.array([[1, t], [0, 0]], dtype=complex)
    F2 = np.array([[1, 0], [1, 0]], dtype=complex)
    C2 = np.array([[t, -t], [-1, -t]], dtype=complex)
    # eigenvectors of C2 for +beta and -beta
    vp = np.array([t, t - beta], dtype=complex)
    vm = np.array([t, t + beta], dtype=complex)
    W = np.column_stack([vp / np.linalg.norm(vp), vm / np.linalg.norm(vm)])
    return E2, F2, C2, W, t


def coi_pair_diag_balanced(D, tol: Tolerances | None = None) -> CertificatePair:
    """Exact commutator pair for D = diag(b1, -b1, ..., bm, -bm[, 0]).

    All diagonal entries must be distinct; an odd dimension carries a single
    trailing zero realized by the zero pair.
    """
    D = as_matrix(D)
    tol = _tol(tol)
    n = D.shape[0]
    scale = max(1.0, opnorm(D))
    if opnorm(D - np.diag(np.diag(D))) > tol.residual * scale:
        raise PreconditionError("input must be diagonal")
    d = np.diag(D)
    if len({(v.real, v.imag) for v in d}) < n:
        raise PreconditionError("repeated diagonal entries")
    if n % 2 and abs(d[-1]) > tol.residual * scale:
        raise PreconditionError(
            f"odd dimension requires a trailing zero entry, got {d[-1]:.3g}"
        )
    E = np.zeros((n, n), dtype=complex)
    F = np.zeros((n, n), dtype=complex)
    for k in range(n // 2):
        a, b = d[2 * k], d[2 * k + 1]
        if abs(a + b) > tol.residual * scale:
            raise PreconditionError(
                f"entries {a:.3g}, {b:.3g} at positions {2 * k}, {2 * k + 1} "
                "are not a +/- pair"
            )
        beta = (a - b) / 2
        if beta == 0:
            raise PreconditionError("zero +/- pair is not allowed (repeat of 0)")
        E2, F2, _, W, _ = _coi_block(beta)
        Winv = np.linalg.inv(W)
        sl = slice(2 * k, 2 * k + 2)
        E[sl, sl] = Winv @ E2 @ W
        F[sl, sl] = Winv @ F2 @ W
    # odd dimension: trailing 1x1 zero block with E = F = 0
    return _make_pair(E, F, "idempotent-commutator", D, tol)


# ---------------------------------------------------------------------------
# the closure approximant (balanced targets)
# ---------------------------------------------------------------------------

_GOLDEN = 0.6180339887498949
_PLASTIC_A = 0.7548776662466927
_PLASTIC_B = 0.5698402909980532


def _jitter(idx: int, seed: int, scale: float) -> complex:
    """Deterministic low-discrepancy jitter value of magnitude <= scale."""
    u = (idx * _PLASTIC_A + seed * _PLASTIC_B) % 1.0
    ang = ((idx + 1) * _GOLDEN + seed * _PLASTIC_A) % 1.0
    return (0.5 + 0.5 * u) * scale * np.exp(2j * np.pi * ang)


def _triangular_eigvecs(R: np.ndarray) -> np.ndarray:
    """Eigenvector matrix of an upper-triangular R with distinct diagonal.

    Column j solves (R - d_j I) v = 0 by back substitution; columns are
    normalized. The result is upper triangular.
    """
    n = R.shape[0]
    d = np.diag(R)
    V = np.eye(n, dtype=complex)
    for j in range(n):
        for i in range(j - 1, -1, -1):
            V[i, j] = (R[i, i + 1:j + 1] @ V[i + 1:j + 1, j]) / (d[j] - R[i, i])
        V[: j + 1, j] /= np.linalg.norm(V[: j + 1, j])
    return V


def _pair_order_positions(T, tol):
    """Reordered Schur form of a balanced T with diagonal (a1,-a1,...,[0]).

    Returns (U, R) with the diagonal arranged in +/- pair slots and, for odd
    dimensions, a single near-zero entry at the end.
    """
    rep = spectrum(T, tol)
    U, R = schur(T)
    vals = np.diag(R)
    centers = np.array([c for c, _ in rep.clusters])
    lab = np.argmin(np.abs(vals[:, None] - centers[None, :]), axis=1)
    radius = rep.tol_used
    pairs, zeros, unpaired = _pair_under_negation(rep.clusters, radius, radius)
    if unpaired:
        raise PreconditionError("spectrum does not pair under negation")

    order: list[int] = []
    pool: list[int] = []  # positions whose eigenvalue pairs with itself (near 0)
    for i, j in sorted(pairs, key=lambda p: -abs(centers[p[0]])):
        if i == j:
            pool.extend(p for p in range(len(vals)) if lab[p] == i)
            continue
        pos_i = [p for p in range(len(vals)) if lab[p] == i]
        pos_j = [p for p in range(len(vals)) if lab[p] == j]
        if len(pos_i) != len(pos_j):
            raise PreconditionError("negation pairing has unequal multiplicities")
        for a, b in zip(pos_i, pos_j):
            order.extend([a, b])
    for z in zeros:
        pool.extend(p for p in range(len(vals)) if lab[p] == z)
    order.extend(pool)
    U, R = _reorder_schur(U, R, order)
    return U, R


def coi_approximant(T, eps: float, tol: Tolerances | None = None, seed: int = 0):
    """Idempotent pair whose commutator lands within ``eps`` of balanced T.

    Triangularizes with the diagonal in +/- pair order, perturbs the diagonal
    to distinct exact +/- pairs (jitter only where values collide, drawn from
    a seeded low-discrepancy sequence), realizes the perturbed matrix X
    exactly as a commutator through its diagonalization, and pulls the pair
    back.  Retries shrink the jitter and reseed.  Returns ``(pair, X)``.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    bal = is_balanced(T, tol)
    if not bal.verdict:
        raise MembershipRejection(bal)
    n = T.shape[0]
    if n == 0:
        Z = np.zeros((0, 0), complex)
        return _make_pair(Z, Z, "idempotent-commutator", T, tol), T.copy()

    U0, R0 = _pair_order_positions(T, tol)
    best: tuple[float, CertificatePair, np.ndarray] | None = None
    last_error = "no attempt"
    for retry in range(8):
        delta = eps / (4.0 * 2 ** retry)
        gap_floor = delta * 1e-2
        R = R0.copy()
        taken: list[complex] = []
        ok = True
        for k in range(n // 2):
            a, b = R[2 * k, 2 * k], R[2 * k + 1, 2 * k + 1]
            beta = (a - b) / 2
            jdx = 0
            while (
                abs(beta) <= gap_floor
                or any(
                    min(abs(beta - t), abs(beta + t)) <= gap_floor for t in taken
                )
            ):
                jdx += 1
                if jdx > 64:
                    ok = False
                    break
                beta = (a - b) / 2 + _jitter(
                    k * 67 + jdx, seed + retry * 1031, delta
                )
            if not ok:
                break
            taken.append(beta)
            R[2 * k, 2 * k] = beta
            R[2 * k + 1, 2 * k + 1] = -beta
        if not ok:
            last_error = "could not separate the perturbed eigenvalue pairs"
            continue
        if n % 2:
            R[n - 1, n - 1] = 0.0

        X = U0 @ R @ U0.conj().T
        err_x = opnorm(X - T)
        if err_x >= eps:
            last_error = f"||X - T|| = {err_x:.3g} >= eps"
            continue
        try:
            V = _triangular_eigvecs(R)
            cond = cond2(V)
            if cond > tol.cond_cap:
                raise ConditionCapError(
                    f"eigenvector condition {cond:.3g} exceeds cap", cond
                )
            D = np.diag(np.diag(R))
            pair_d = coi_pair_diag_balanced(D, tol)
            S = U0 @ V
            Vinv = sla.solve_triangular(V, np.eye(n), lower=False)
            Sinv = Vinv @ U0.conj().T
            E = purify_idempotent(S @ pair_d.left @ Sinv)
            F = purify_idempotent(S @ pair_d.right @ Sinv)
        except (ConditionCapError, PreconditionError, ConstructionError) as exc:
            last_error = str(exc)
            continue
        comm = E @ F - F @ E
        err_cx = opnorm(comm - X)
        err_ct = opnorm(comm - T)
        sr = structure_defect(E, F, "idempotent-commutator")
        bound_cx = tol.residual * max(1.0, cond) * max(1.0, opnorm(X))
        good = (
            err_ct < eps
            and err_cx <= bound_cx
            and sr <= tol.residual * max(1.0, opnorm(E), opnorm(F)) ** 2
        )
        pair = CertificatePair(
            left=E,
            right=F,
            kind="idempotent-commutator",
            target_residual=float(err_ct),
            structure_residual=float(sr),
            basis=S,
            similarity_cond=float(cond),
        )
        if best is None or err_ct < best[0]:
            best = (err_ct, pair, X)
        if good:
            return pair, X
        last_error = (
            f"residuals not met: ||[E,F]-T||={err_ct:.3g}, "
            f"||[E,F]-X||={err_cx:.3g}, structure={sr:.3g}, cond={cond:.3g}"
        )
    raise ConstructionError(
        f"coi approximant failed after 8 retries ({last_error})",
        best_residual=best[0] if best else float("nan"),
    )


# ---------------------------------------------------------------------------
# exact pairs for order-2 nilpotents
# ---------------------------------------------------------------------------


def coi_pair_nilpotent_order2(N, tol: Tolerances | None = None) -> CertificatePair:
    """Exact commutator pair for a nonzero nilpotent of order two.

    In a basis (range of N first) the matrix is [[0, X], [0, 0]], and
    P = diag(I, 0), F = [[I, X], [0, 0]] satisfy [P, F] = [[0, X], [0, 0]].
    """
    N = as_matrix(N)
    tol = _tol(tol)
    nrm = opnorm(N)
    if nrm == 0:
        raise PreconditionError("N must be nonzero")
    if opnorm(N @ N) > tol.residual * nrm ** 2:
        raise PreconditionError("N is not nilpotent of order two under tolerance")
    n = N.shape[0]
    U, s, _ = np.linalg.svd(N)
    r = int(np.sum(s > tol.rank_rel * s[0]))
    S = U  # first r columns span ran N, the rest complete the basis
    B = S.conj().T @ N @ S
    junk = max(opnorm(B[:r, :r]), opnorm(B[r:, :]))
    if junk > tol.residual * nrm:
        raise PreconditionError(
            f"range/kernel block form off by {junk:.3g}; not order-2 nilpotent"
        )
    X = B[:r, r:]
    Eb = np.zeros((n, n), dtype=complex)
    Eb[:r, :r] = np.eye(r)
    Fb = np.zeros((n, n), dtype=complex)
    Fb[:r, :r] = np.eye(r)
    Fb[:r, r:] = X
    E = S @ Eb @ S.conj().T
    F = S @ Fb @ S.conj().T
    return _make_pair(E, F, "idempotent-commutator", N, tol, basis=S, cond=1.0)


# ---------------------------------------------------------------------------
# commutator -> difference transform
# ---------------------------------------------------------------------------


def coi_to_doi(E, F, tol: Tolerances | None = None) -> CertificatePair:
    """Turn a commutator [E, F] of idempotents into a difference G - H.

    Conjugating so that E = diag(I, 0) and writing F in blocks, the pieces
    G = [[I, F2], [0, 0]] and H = [[I, 0], [F3, 0]] are idempotent with
    G - H = [E, F].
    """
    E = as_matrix(E)
    F = as_matrix(F)
    tol = _tol(tol)
    if E.shape != F.shape:
        raise PreconditionError("E and F must have the same shape")
    for name, M in (("E", E), ("F", F)):
        if opnorm(M @ M - M) > tol.residual * max(1.0, opnorm(M)) ** 2:
            raise PreconditionError(f"{name} is not idempotent under tolerance")
    n = E.shape[0]
    tr = complex(np.trace(E))
    k = int(round(tr.real))
    U, s, Vh = np.linalg.svd(E) if opnorm(E) > 0 else (
        np.eye(n), np.zeros(n), np.eye(n)
    )
    r = int(np.sum(s > tol.rank_rel * s[0])) if s.size and s[0] > 0 else 0
    if r != k:
        raise PreconditionError(
            f"rank {r} of E disagrees with its trace {tr:.3g}"
        )
    ran = U[:, :r]
    ker = Vh[r:, :].conj().T
    S = np.column_stack([ran, ker]) if r else ker
    cond = cond2(S)
    if cond > tol.cond_cap:
        raise ConditionCapError(
            f"range/kernel basis condition {cond:.3g} exceeds cap", cond
        )
    Sinv = np.linalg.inv(S)
    Fb = Sinv @ F @ S
    G = np.zeros((n, n), dtype=complex)
    H = np.zeros((n, n), dtype=complex)
    G[:r, :r] = np.eye(r)
    H[:r, :r] = np.eye(r)
    G[:r, r:] = Fb[:r, r:]
    H[r:, :r] = Fb[r:, :r]
    G = purify_idempotent(S @ G @ Sinv)
    H = purify_idempotent(S @ H @ Sinv)
    target = E @ F - F @ E
    return _make_pair(
        G, H, "idempotent-difference", target, tol, basis=S, cond=float(cond)
    )


# ---------------------------------------------------------------------------
# difference pairs
# ---------------------------------------------------------------------------

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def doi_pair_plusminus(alpha: complex) -> CertificatePair:
    """Idempotents with E - F = [[0, a], [a, 0]] (eigenvalues +/-a).

    The pairing unitary taking the off-diagonal form to diag(a, -a) travels
    in the ``basis`` field.
    """
    alpha = complex(alpha)
    tol = _tol(None)
    if alpha == 0:
        Z = np.zeros((2, 2), dtype=complex)
        return _make_pair(Z, Z, "idempotent-difference", Z, tol, basis=_HADAMARD)
    E = np.array([[1, alpha], [0, 0]], dtype=complex)
    F = np.array([[1, 0], [-alpha, 0]], dtype=complex)
    target = np.array([[0, alpha], [alpha, 0]], dtype=complex)
    return _make_pair(
        E, F, "idempotent-difference", target, tol, basis=_HADAMARD, cond=1.0
    )


def _diag_pm_difference_pair(values, pair_index):
    """Idempotents E, F with E - F = diag(values).

    ``values`` contains entries equal to +/-1 (left as rank-one pieces) and
    +/-d pairs listed in ``pair_index`` as (plus_position, minus_position).
    """
    n = len(values)
    E = np.zeros((n, n), dtype=complex)
    F = np.zeros((n, n), dtype=complex)
    handled = set()
    for i, j in pair_index:
        d = values[i]
        base = doi_pair_plusminus(d)
        h = _HADAMARD
        E2 = h @ base.left @ h
        F2 = h @ base.right @ h
        ix = np.ix_([i, j], [i, j])
        E[ix] = E2
        F[ix] = F2
        handled.add(i)
        handled.add(j)
    for i in range(n):
        if i in handled:
            continue
        v = values[i]
        if abs(v - 1) < 1e-9:
            E[i, i] = 1.0
        elif abs(v + 1) < 1e-9:
            F[i, i] = 1.0
        elif abs(v) < 1e-9:
            pass
        else:  # pragma: no cover - guarded by callers
            raise ConstructionError(f"unpaired diagonal value {v:.3g}")
    return E, F


def _nilpotent_jordan_basis(N, tol: Tolerances, scale: float | None = None):
    """Jordan basis of a nilpotent matrix.

    Returns ``(P, sizes)`` with ``inv(P) @ N @ P`` a direct sum of nilpotent
    Jordan cells of the given non-increasing sizes.  ``scale`` is the norm of
    the surrounding problem; singular values below the clustering resolution
    at that scale count as zero.
    """
    from .core import EIG_CLUSTER_REL, EIG_SCALE_FLOOR

    N = as_matrix(N)
    n = N.shape[0]
    if n == 0:
        return np.eye(0, dtype=complex), ()
    nrm = opnorm(N)
    floor = EIG_CLUSTER_REL * max(scale if scale else nrm, EIG_SCALE_FLOOR)
    if nrm <= floor:
        return np.eye(n, dtype=complex), (1,) * n

    def power_rank(Mk):
        s = sla.svdvals(Mk)
        if s.size == 0 or s[0] <= floor:
            return 0
        return int(np.sum(s > max(tol.rank_rel * s[0], floor)))

    powers = [np.eye(n, dtype=complex), N.copy()]
    d = []
    while True:
        k = len(d) + 1
        while len(powers) <= k:
            powers.append(powers[-1] @ N)
        d.append(n - power_rank(powers[k]))
        if d[-1] >= n:
            break
        if k > n or (len(d) >= 2 and d[-1] <= d[-2]):
            raise StaircaseError(
                f"matrix is not nilpotent under tolerance (staircase {d})", d
            )
    K = len(d)
    incs = [d[0]] + [d[k] - d[k - 1] for k in range(1, K)]
    counts = {
        k: incs[k - 1] - (incs[k] if k < K else 0) for k in range(1, K + 1)
    }

    def kernel_basis(k):
        Mk = powers[k]
        _, s, Vh = np.linalg.svd(Mk)
        rk = power_rank(Mk)
        return Vh[rk:, :].conj().T

    chains: list[np.ndarray] = []
    sizes: list[int] = []
    bottoms = np.zeros((n, 0), dtype=complex)
    for k in range(K, 0, -1):
        bk = counts.get(k, 0)
        if bk == 0:
            continue
        Wk = kernel_basis(k)
        cand_bottoms = powers[k - 1] @ Wk
        if bottoms.shape[1]:
            Qb, _ = np.linalg.qr(bottoms)
            cand_bottoms = cand_bottoms - Qb @ (Qb.conj().T @ cand_bottoms)
        _, s2, Vh2 = np.linalg.svd(cand_bottoms)
        if len(s2) < bk or s2[bk - 1] <= tol.rank_rel * max(1.0, nrm):
            raise StaircaseError(
                f"could not extract {bk} independent chains of length {k}", d
            )
        heads = Wk @ Vh2[:bk, :].conj().T
        for c in range(bk):
            h = heads[:, c]
            chain = [h]
            for _ in range(k - 1):
                chain.append(N @ chain[-1])
            chain.reverse()  # bottom (kernel) vector first
            block = np.column_stack(chain)
            block /= max(np.linalg.norm(col) for col in chain)
            chains.append(block)
            sizes.append(k)
            bottoms = np.column_stack([bottoms, block[:, 0]])
    P = np.hstack(chains)
    # verification: P^-1 N P must be the direct sum of the nilpotent cells
    J = np.zeros((n, n), dtype=complex)
    off = 0
    for k in sizes:
        for i in range(k - 1):
            J[off + i, off + i + 1] = 1.0
        off += k
    resid = opnorm(np.linalg.solve(P, N @ P) - J)
    cond = cond2(P)
    if cond > tol.cond_cap:
        raise ConditionCapError(
            f"Jordan basis condition {cond:.3g} exceeds cap", cond
        )
    if resid > 1e-6 * max(1.0, nrm) * cond:
        raise StaircaseError(
            f"Jordan basis residual {resid:.3g} too large (staircase {d})", d
        )
    return P, tuple(sizes)


def doi_approximant_pm1(Z, eps: float, tol: Tolerances | None = None) -> CertificatePair:
    """Difference pair within ``eps`` of Z when sigma(Z) is inside {+1, -1}.

    Requires r := round(Re tr Z) >= 0 and nullity(Z - I) >= r.  Diagonalizable
    inputs are realized exactly; otherwise the Jordan diagonal is relaxed to
    distinct values d in (0, 1) close to 1, giving a matrix similar to
    I_r (+) D (+) -D which is a difference of idempotents by construction.
    """
    Z = as_matrix(Z)
    tol = _tol(tol)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    n = Z.shape[0]
    if n == 0:
        E = np.zeros((0, 0), complex)
        return _make_pair(E, E, "idempotent-difference", Z, tol)
    rep = spectrum(Z, tol)
    sp_radius = tol.special_radius(Z)
    for c, _ in rep.clusters:
        if abs(c - 1) > sp_radius and abs(c + 1) > sp_radius:
            raise PreconditionError(
                f"spectrum must lie in {{+1, -1}}; found cluster at {c:.6g}"
            )
    tr = complex(np.trace(Z))
    r = int(round(tr.real))
    if abs(tr - r) > 10 * tol.residual * n:
        raise PreconditionError(f"trace {tr:.6g} is not a near-integer")
    if r < 0:
        raise PreconditionError("round(Re tr Z) must be >= 0 (flip the sign first)")
    if nullity(Z - np.eye(n), tol, abs_floor=tol.eig_radius(Z)) < r:
        raise MembershipRejection(in_clos_doi(Z, tol))

    plus_centers = [c for c, _ in rep.clusters if abs(c - 1) <= sp_radius]
    minus_centers = [c for c, _ in rep.clusters if abs(c + 1) <= sp_radius]
    S1, Zp, Zm = split_at_centers(Z, plus_centers, tol)
    if Zp is None:
        Zp = np.zeros((0, 0), complex)
    if Zm is None:
        Zm = np.zeros((0, 0), complex)
    kp, km = Zp.shape[0], Zm.shape[0]
    zscale = max(opnorm(Z), 1.0)
    Pp, sizes_p = _nilpotent_jordan_basis(Zp - np.eye(kp), tol, scale=zscale)
    Pm, sizes_m = _nilpotent_jordan_basis(Zm + np.eye(km), tol, scale=zscale)
    if len(sizes_p) < r:
        raise PreconditionError(
            f"nullity(Z - I) = {len(sizes_p)} is below the trace {r}"
        )
    W0 = S1 @ sla.block_diag(Pp, Pm) if kp + km else S1
    cond0 = cond2(W0)
    s_dim = km

    if all(s == 1 for s in sizes_p) and all(s == 1 for s in sizes_m):
        # diagonalizable: exact realization from (+1, -1) pairs and leftovers
        values = np.array([1.0] * kp + [-1.0] * km)
        npair = min(kp, km)
        pair_index = [(i, kp + i) for i in range(npair)]
        E0, F0 = _diag_pm_difference_pair(values, pair_index)
        W0inv = np.linalg.inv(W0)
        G = purify_idempotent(W0 @ E0 @ W0inv)
        H = purify_idempotent(W0 @ F0 @ W0inv)
        return _make_pair(
            G, H, "idempotent-difference", Z, tol, basis=W0, cond=float(cond0)
        )

    # proof construction: r carrier cells keep an exact leading 1, every other
    # plus-side slot takes a d in (0,1), the minus side takes the matching -d
    best: tuple[float, CertificatePair] | None = None
    last_error = "no attempt"
    eta0 = min(0.25, eps / (4.0 * max(1.0, cond0)))
    for attempt, scale_eta in enumerate((1.0, 1 / 8, 1 / 64, 8.0)):
        eta = eta0 * scale_eta
        if not 0 < eta < 0.5:
            continue
        ds = [1.0 - eta * (1.0 + ell) / (s_dim + 1.0) for ell in range(s_dim)]
        d_iter = iter(ds)
        diag_plus: list[list[float]] = []
        for j, m in enumerate(sizes_p):
            if j < r:
                diag_plus.append([1.0] + [next(d_iter) for _ in range(m - 1)])
            else:
                diag_plus.append([next(d_iter) for _ in range(m)])
        leftover = list(d_iter)
        if leftover:
            last_error = "internal d-count mismatch"
            continue
        minus_vals = [-d for d in ds]
        diag_minus: list[list[float]] = []
        it = iter(minus_vals)
        for m in sizes_m:
            diag_minus.append([next(it) for _ in range(m)])

        # per-cell triangular eigenvector matrices
        blocks_V = []
        delta: list[float] = []
        ok = True
        for vals_cell in diag_plus + diag_minus:
            m = len(vals_cell)
            Rc = np.diag(np.array(vals_cell, dtype=complex))
            for i in range(m - 1):
                Rc[i, i + 1] = 1.0
            if m > 1 and len(set(vals_cell)) < m:
                ok = False
                break
            blocks_V.append(_triangular_eigvecs(Rc) if m > 1 else np.eye(1, dtype=complex))
            delta.extend(vals_cell)
        if not ok:
            last_error = "repeated diagonal values inside a cell"
            continue
        V = sla.block_diag(*blocks_V) if blocks_V else np.eye(0, dtype=complex)
        W = W0 @ V
        condW = cond2(W)
        if condW > tol.cond_cap:
            last_error = f"similarity condition {condW:.3g} exceeds cap"
            continue
        values = np.array(delta)
        pos_of = {}
        for idx, v in enumerate(values):
            pos_of.setdefault(round(v, 14), idx)
        pair_index = []
        for d in ds:
            i = pos_of[round(d, 14)]
            j = pos_of[round(-d, 14)]
            pair_index.append((i, j))
        E0, F0 = _diag_pm_difference_pair(values, pair_index)
        Winv = np.linalg.inv(W)
        G = purify_idempotent(W @ E0 @ Winv)
        H = purify_idempotent(W @ F0 @ Winv)
        err = opnorm((G - H) - Z)
        sr = structure_defect(G, H, "idempotent-difference")
        pair = CertificatePair(
            left=G,
            right=H,
            kind="idempotent-difference",
            target_residual=float(err),
            structure_residual=float(sr),
            basis=W,
            similarity_cond=float(condW),
        )
        if best is None or err < best[0]:
            best = (err, pair)
        if err < eps and sr <= tol.residual * max(1.0, opnorm(G), opnorm(H)) ** 2:
            return pair
        last_error = f"residual {err:.3g} >= eps (eta {eta:.3g})"
    raise ConstructionError(
        f"pm1 approximant failed ({last_error})",
        best_residual=best[0] if best else float("nan"),
    )


def doi_approximant(T, eps: float, tol: Tolerances | None = None, seed: int = 0) -> CertificatePair:
    """Difference pair within eps of any T accepted by the closure decider.

    Splits off the {+1,-1} spectral block, approximates the balanced rest via
    the commutator route plus the commutator-to-difference transform, handles
    the {+1,-1} block separately, and direct-sums the results.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    rep = in_clos_doi(T, tol)
    if not rep.verdict:
        raise MembershipRejection(rep)
    n = T.shape[0]
    if n == 0 or opnorm(T) == 0:
        Z = np.zeros((n, n), complex)
        return _make_pair(Z, Z, "idempotent-difference", T, tol)
    flipped = bool(rep.evidence.get("sign_flipped", False))
    Teff = -T if flipped else T

    srep = spectrum(Teff, tol)
    sp_radius = tol.special_radius(Teff)
    pm_centers = [
        c
        for c, _ in srep.clusters
        if abs(c - 1) <= sp_radius or abs(c + 1) <= sp_radius
    ]
    S, Z, B = split_at_centers(Teff, pm_centers, tol)
    cond_split = cond2(S)
    eps_sub = eps / (2.0 * max(1.0, cond_split))
    # sub-blocks carry junk at the parent's scale; analyse them there
    sub_tol = child_tol(tol, tol.eig_radius(Teff))

    parts_G = []
    parts_H = []
    dims = []
    if Z is not None:
        pz = doi_approximant_pm1(Z, eps_sub, sub_tol)
        parts_G.append(pz.left)
        parts_H.append(pz.right)
        dims.append(Z.shape[0])
    if B is not None:
        pc, _ = coi_approximant(B, eps_sub, sub_tol, seed=seed)
        pb = coi_to_doi(pc.left, pc.right, sub_tol)
        # G - H = [E, F] which is within eps_sub of B
        parts_G.append(pb.left)
        parts_H.append(pb.right)
        dims.append(B.shape[0])
    G0 = sla.block_diag(*parts_G)
    H0 = sla.block_diag(*parts_H)
    Sinv = np.linalg.inv(S)
    G = purify_idempotent(S @ G0 @ Sinv)
    H = purify_idempotent(S @ H0 @ Sinv)
    if flipped:
        G, H = H, G
    err = opnorm((G - H) - T)
    sr = structure_defect(G, H, "idempotent-difference")
    if err >= eps * (1.0 + cond_split):
        raise ConstructionError(
            f"difference approximant residual {err:.3g} exceeds "
            f"eps*(1+cond) = {eps * (1 + cond_split):.3g}",
            best_residual=err,
        )
    if sr > tol.residual * max(1.0, opnorm(G), opnorm(H)) ** 2:
        raise ConstructionError(
            f"structure residual {sr:.3g} exceeds tolerance", best_residual=err
        )
    return CertificatePair(
        left=G,
        right=H,
        kind="idempotent-difference",
        target_residual=float(err),
        structure_residual=float(sr),
        basis=S,
        similarity_cond=float(cond_split),
    )


# ---------------------------------------------------------------------------
# projection pairs
# ---------------------------------------------------------------------------

# unitary aligning [[0, t], [-t, 0]] with diag(-it, it)
_COP_ALIGN = np.array([[1j, -1j], [1, 1]], dtype=complex) / np.sqrt(2)


def _sorted_negation_pairs(w: np.ndarray, radius: float, pair_tol: float, what: str):
    """Pair positive with negative eigenvalues by sorted magnitude.

    Sorted matching is the optimal assignment for values on a line, so the
    greedy choice and the bipartite optimum agree; failures raise with the
    pairing table attached.
    """
    pos = sorted((i for i, v in enumerate(w) if v > radius), key=lambda i: -w[i])
    neg = sorted((i for i, v in enumerate(w) if v < -radius), key=lambda i: w[i])
    zero = [i for i, v in enumerate(w) if abs(v) <= radius]
    if len(pos) != len(neg):
        raise PreconditionError(
            f"{what}: unpaired spectrum "
            f"(positive {[float(w[i]) for i in pos]}, "
            f"negative {[float(w[i]) for i in neg]})"
        )
    pairs = []
    for a, b in zip(pos, neg):
        if abs(w[a] + w[b]) > pair_tol:
            raise PreconditionError(
                f"{what}: eigenvalue pairing failure, table "
                f"{[(float(w[x]), float(w[y])) for x, y in zip(pos, neg)]}"
            )
        pairs.append((a, b))
    return pairs, zero


def cop_pair(T, tol: Tolerances | None = None) -> CertificatePair:
    """Orthogonal projections P, Q with [P, Q] = T for a valid target.

    On each +/-t eigenplane of iT installs the rotated two-projection model
    P = diag(1, 0), Q = [[c^2, cs], [cs, s^2]] with half-angle
    theta = arcsin(2t)/2, whose commutator entry is cs = t.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    repm = is_cop(T, tol)
    if not repm.verdict:
        raise MembershipRejection(repm)
    n = T.shape[0]
    Hh = 1j * T
    Hh = (Hh + Hh.conj().T) / 2
    w, U = np.linalg.eigh(Hh)
    radius = tol.eig_radius(T)
    pairs, _ = _sorted_negation_pairs(w, radius, 2 * radius, "cop_pair")
    P = np.zeros((n, n), dtype=complex)
    Q = np.zeros((n, n), dtype=complex)
    for a, b in pairs:
        t = min(0.5, (w[a] - w[b]) / 2)
        theta = 0.5 * np.arcsin(min(1.0, 2 * t))
        c, s = np.cos(theta), np.sin(theta)
        P2 = np.array([[1, 0], [0, 0]], dtype=complex)
        Q2 = np.array([[c * c, c * s], [c * s, s * s]], dtype=complex)
        B = U[:, [a, b]] @ _COP_ALIGN.conj().T
        P += B @ P2 @ B.conj().T
        Q += B @ Q2 @ B.conj().T
    P = (P + P.conj().T) / 2
    Q = (Q + Q.conj().T) / 2
    return _make_pair(P, Q, "projection-commutator", T, tol, basis=U, cond=1.0)


def dop_pair(H, tol: Tolerances | None = None) -> CertificatePair:
    """Orthogonal projections P, Q with P - Q = H for a valid target.

    Eigenvalue 1 goes to P alone, -1 to Q alone, 0 to neither; each interior
    pair (c, -c) gets the model P = diag(1, 0), Q = [[s^2, sc], [sc, c^2]]
    rotated into the corresponding eigenplane.
    """
    H = as_matrix(H)
    tol = _tol(tol)
    repm = is_dop(H, tol)
    if not repm.verdict:
        raise MembershipRejection(repm)
    n = H.shape[0]
    Hh = (H + H.conj().T) / 2
    w, U = np.linalg.eigh(Hh)
    sp_radius = tol.special_radius(H)
    P = np.zeros((n, n), dtype=complex)
    Q = np.zeros((n, n), dtype=complex)
    interior = []
    for i, v in enumerate(w):
        if abs(v - 1) <= sp_radius:
            P += np.outer(U[:, i], U[:, i].conj())
        elif abs(v + 1) <= sp_radius:
            Q += np.outer(U[:, i], U[:, i].conj())
        elif abs(v) <= sp_radius:
            pass  # common kernel block: P = Q = 0 there
        else:
            interior.append(i)
    wi = w[interior]
    pairs, _ = _sorted_negation_pairs(wi, sp_radius, 2 * sp_radius, "dop_pair")
    for a, b in pairs:
        c = float(np.clip((wi[a] - wi[b]) / 2, 0.0, 1.0))
        s = float(np.sqrt(max(0.0, 1.0 - c * c)))
        P2 = np.array([[1, 0], [0, 0]], dtype=complex)
        Q2 = np.array([[s * s, s * c], [s * c, c * c]], dtype=complex)
        nrm = np.sqrt(2 * (1 - c))
        V = np.array([[s, 1 - c], [c - 1, s]]) / nrm
        B = U[:, [interior[a], interior[b]]] @ V.T
        P += B @ P2 @ B.conj().T
        Q += B @ Q2 @ B.conj().T
    P = (P + P.conj().T) / 2
    Q = (Q + Q.conj().T) / 2
    return _make_pair(P, Q, "projection-difference", H, tol, basis=U, cond=1.0)


def symmetrize_spectrum(K, eps: float, tol: Tolerances | None = None) -> np.ndarray:
    """Nearest-by-construction hermitian L with exactly symmetric spectrum.

    Keeps the eigenspaces above +eps, zeroes the middle band (-eps, eps), and
    rebuilds the negative side as the transported negative of the positive
    part; guarantees ||L - K|| < 2*eps and ||L|| <= ||K||.
    """
    K = as_matrix(K)
    tol = _tol(tol)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    scale = max(1.0, opnorm(K))
    if opnorm(K - K.conj().T) > tol.residual * scale:
        raise PreconditionError("K must be hermitian within tolerance")
    Kh = (K + K.conj().T) / 2
    w, U = np.linalg.eigh(Kh)
    plus = [i for i, v in enumerate(w) if v >= eps]
    minus = [i for i, v in enumerate(w) if v <= -eps]
    plus.sort(key=lambda i: -w[i])
    minus.sort(key=lambda i: w[i])
    if len(plus) != len(minus):
        raise PreconditionError(
            "outer spectrum does not pair under negation: "
            f"positive {[float(w[i]) for i in plus]}, "
            f"negative {[float(w[i]) for i in minus]}"
        )
    for a, b in zip(plus, minus):
        if abs(w[a] + w[b]) >= eps:
            raise PreconditionError(
                f"outer eigenvalues {w[a]:.6g} and {w[b]:.6g} are not "
                "negation partners within the band"
            )
    L = np.zeros_like(Kh)
    for a, b in zip(plus, minus):
        L += w[a] * np.outer(U[:, a], U[:, a].conj())
        L -= w[a] * np.outer(U[:, b], U[:, b].conj())
    L = (L + L.conj().T) / 2
    if opnorm(L - K) >= 2 * eps or opnorm(L) > opnorm(K) + tol.residual:
        raise ConstructionError("symmetrized operator misses its bounds")
    return L
