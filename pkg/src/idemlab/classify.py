"""Membership deciders for commutator/difference classes of idempotents and
projections, plus the spectral-symmetry classes they reduce to.

Every decider returns a :class:`MembershipReport` whose verdict is the
conjunction of named condition flags, with the numeric evidence (pairing
tables, traces, nullities) recorded alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    LinalgError,
    Tolerances,
    _tol,
    as_matrix,
    jordan_structure,
    nullity,
    opnorm,
    schur,
    spectrum,
    split_at_centers,
)

__all__ = [
    "MembershipReport",
    "SegrePairingTable",
    "NonIntegerTraceError",
    "CLASS_TAGS",
    "is_balanced",
    "charpoly_parity",
    "is_neg_similar",
    "is_coi",
    "is_doi",
    "in_clos_coi",
    "in_clos_doi",
    "is_cop",
    "is_dop",
    "in_clos_cop",
    "in_clos_dop",
    "segre_has_sqrt",
    "classify_all",
]

CLASS_TAGS = (
    "balanced",
    "neg_similar",
    "coi",
    "doi",
    "clos_coi",
    "clos_doi",
    "cop",
    "dop",
    "clos_cop",
    "clos_dop",
)


class NonIntegerTraceError(LinalgError):
    """The {+1,-1} block trace is too far from an integer to classify."""


@dataclass(frozen=True)
class MembershipReport:
    verdict: bool
    class_tag: str
    evidence: dict
    tol_used: Tolerances

    @property
    def conditions(self) -> dict:
        return self.evidence.get("conditions", {})


@dataclass(frozen=True)
class SegrePairingTable:
    """Segre sequences at a +/- eigenvalue pair, side by side."""

    plus: tuple[int, ...]
    minus: tuple[int, ...]

    def padded(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        k = max(len(self.plus), len(self.minus))
        return (
            self.plus + (0,) * (k - len(self.plus)),
            self.minus + (0,) * (k - len(self.minus)),
        )

    def max_diff(self) -> int:
        p, m = self.padded()
        return max((abs(a - b) for a, b in zip(p, m)), default=0)


def _report(tag: str, conditions: dict, evidence: dict, tol: Tolerances) -> MembershipReport:
    evidence = dict(evidence)
    evidence["conditions"] = dict(conditions)
    return MembershipReport(
        verdict=all(conditions.values()),
        class_tag=tag,
        evidence=evidence,
        tol_used=tol,
    )


def child_tol(tol: Tolerances, radius: float) -> Tolerances:
    """Tolerances for analysing an extracted sub-block at the resolution of
    its parent problem (blocks inherit junk at the parent's scale)."""
    return Tolerances(
        eig_cluster=radius,
        rank_rel=tol.rank_rel,
        residual=tol.residual,
        cond_cap=tol.cond_cap,
    )


# ---------------------------------------------------------------------------
# negation pairing of eigenvalue clusters
# ---------------------------------------------------------------------------


def _pair_under_negation(clusters, radius: float, pair_tol: float):
    """Match clusters with their negatives.

    Clusters within ``radius`` of 0 are self-paired.  The others are matched
    greedily by nearest negation; if two candidates compete within 10% the
    matching is redone as an optimal assignment to remove order dependence.
    Returns ``(pairs, zeros, unpaired)`` with pairs as index tuples ``(i, j)``
    (i == j for self-paired clusters away from zero).
    """
    centers = [c for c, _ in clusters]
    zeros = [i for i, c in enumerate(centers) if abs(c) <= radius]
    todo = [i for i in range(len(centers)) if i not in zeros]

    def cost(i, j):
        return abs(centers[i] + centers[j])

    ambiguous = False
    pairs: list[tuple[int, int]] = []
    unpaired: list[int] = []
    taken: set[int] = set()
    for i in sorted(todo, key=lambda k: (-abs(centers[k]), k)):
        if i in taken:
            continue
        cands = [j for j in todo if j not in taken and j != i]
        cands += [i]  # allow self-pairing (center ~ its own negative)
        costs = sorted((cost(i, j), j) for j in cands)
        best_c, best_j = costs[0]
        if len(costs) > 1 and costs[1][0] <= best_c * 1.1 + 1e-300:
            ambiguous = True
        if best_c <= pair_tol:
            pairs.append((i, best_j))
            taken.add(i)
            taken.add(best_j)
        else:
            unpaired.append(i)
            taken.add(i)

    if ambiguous and todo:
        # optimal assignment on the full negation-cost matrix
        m = len(todo)
        C = np.empty((m, m))
        for a, i in enumerate(todo):
            for b, j in enumerate(todo):
                C[a, b] = cost(i, j)
        rows, cols = linear_sum_assignment(C)
        assign = {todo[a]: todo[b] for a, b in zip(rows, cols)}
        pairs, unpaired, seen = [], [], set()
        for i in todo:
            if i in seen:
                continue
            j = assign[i]
            if assign.get(j) == i and cost(i, j) <= pair_tol:
                pairs.append((i, j))
                seen.add(i)
                seen.add(j)
            else:
                unpaired.append(i)
                seen.add(i)
    return pairs, zeros, unpaired


def _pairing_evidence(clusters, pairs, zeros, unpaired):
    table = []
    for i, j in pairs:
        (ci, mi), (cj, mj) = clusters[i], clusters[j]
        table.append(
            {"alpha": ci, "neg": cj, "mult_alpha": mi, "mult_neg": mj}
        )
    return {
        "pairing_table": table,
        "zero_clusters": [
            {"center": clusters[i][0], "mult": clusters[i][1]} for i in zeros
        ],
        "unpaired": [
            {"center": clusters[i][0], "mult": clusters[i][1]} for i in unpaired
        ],
    }


# ---------------------------------------------------------------------------
# spectral symmetry classes
# ---------------------------------------------------------------------------


def is_balanced(T, tol: Tolerances | None = None) -> MembershipReport:
    """Spectrum symmetric under negation with matching multiplicities."""
    T = as_matrix(T)
    tol = _tol(tol)
    rep = spectrum(T, tol)
    radius = rep.tol_used
    pairs, zeros, unpaired = _pair_under_negation(rep.clusters, radius, radius)
    mult_ok = all(rep.clusters[i][1] == rep.clusters[j][1] for i, j in pairs)
    conditions = {
        "negation_pairing": not unpaired,
        "multiplicities_match": mult_ok,
    }
    ev = _pairing_evidence(rep.clusters, pairs, zeros, unpaired)
    ev["spectrum_ambiguous"] = rep.ambiguous
    return _report("balanced", conditions, ev, tol)


def charpoly_parity(T, tol: Tolerances | None = None) -> bool:
    """True iff the characteristic polynomial is an even or an odd function.

    Works on the polynomial coefficients with a scale-aware vanishing test,
    which makes it an independent cross-check of :func:`is_balanced`.  Guarded
    to n <= 64 where coefficient magnitudes stay representable.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    n = T.shape[0]
    if n > 64:
        raise ValueError(
            "charpoly_parity is limited to n <= 64 (coefficient growth); "
            "use is_balanced instead"
        )
    if n == 0:
        return True
    _, R = schur(T)
    lam = np.diag(R)
    coeffs = np.poly(lam)  # c[k] multiplies z^(n-k), c[0] = 1
    scale = np.abs(np.poly(-np.abs(lam)))  # elementary symmetric in |lam|
    lam_max = float(np.max(np.abs(lam))) if n else 0.0
    radius = tol.eig_radius(T)

    def vanishes(k: int) -> bool:
        budget = scale[k] * 1e-12 * n
        if k >= 1:
            budget += n * radius * scale[k - 1]
        return abs(coeffs[k]) <= budget + np.finfo(float).tiny

    even_ok = all(vanishes(k) for k in range(n + 1) if (n - k) % 2 == 1)
    odd_ok = all(vanishes(k) for k in range(n + 1) if (n - k) % 2 == 0)
    return bool(even_ok or odd_ok)


def is_neg_similar(T, tol: Tolerances | None = None) -> MembershipReport:
    """Similarity to the own negative: Segre(lam) == Segre(-lam) for all lam."""
    T = as_matrix(T)
    tol = _tol(tol)
    js = jordan_structure(T, tol)
    rep_clusters = tuple((c, sum(s)) for c, s in js.blocks)
    radius = tol.eig_radius(T)
    pairs, zeros, unpaired = _pair_under_negation(rep_clusters, radius, radius)
    tables = []
    segre_ok = True
    for i, j in pairs:
        tab = SegrePairingTable(plus=js.blocks[i][1], minus=js.blocks[j][1])
        tables.append({"alpha": js.blocks[i][0], "table": tab})
        if sorted(js.blocks[i][1]) != sorted(js.blocks[j][1]):
            segre_ok = False
    conditions = {
        "negation_pairing": not unpaired,
        "segre_match": segre_ok,
    }
    ev = _pairing_evidence(rep_clusters, pairs, zeros, unpaired)
    ev["segre_tables"] = tables
    ev["jordan"] = js.blocks
    return _report("neg_similar", conditions, ev, tol)


# ---------------------------------------------------------------------------
# commutators / differences of idempotents
# ---------------------------------------------------------------------------


def segre_has_sqrt(segre) -> bool:
    """Square-root criterion for a nilpotent matrix from its Segre sequence.

    With the sizes sorted non-increasingly and padded by a trailing zero when
    of odd length, a nilpotent square root exists iff consecutive pairs differ
    by at most one.  Validated against the exhaustive oracle in testkit.
    """
    seq = sorted(segre, reverse=True)
    if len(seq) % 2:
        seq.append(0)
    return all(seq[2 * j] - seq[2 * j + 1] <= 1 for j in range(len(seq) // 2))


def is_coi(T, tol: Tolerances | None = None) -> MembershipReport:
    """Commutator-of-idempotents decider.

    Requires similarity to the negative, plus: the spectral component at i/2
    (when present) must have ``component^2 + I/4`` -- a nilpotent matrix --
    admit a square root, tested through its Segre sequence.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    neg = is_neg_similar(T, tol)
    rep = spectrum(T, tol)
    sp_radius = tol.special_radius(T)
    idx = rep.find(0.5j, sp_radius)
    ev: dict = {"neg_similar": neg.evidence, "half_i_cluster": None}
    sqrt_ok = True
    if idx is not None:
        center, mult = rep.clusters[idx]
        _, T1, _ = split_at_centers(T, [center], tol)
        N = T1 @ T1 + 0.25 * np.eye(mult)
        # squaring scales perturbations by ~2*norm(T1); analyse N at the
        # correspondingly scaled parent resolution
        radius_n = tol.eig_radius(T) * (1.0 + 2.0 * opnorm(T1))
        js_n = jordan_structure(N, child_tol(tol, radius_n))
        segre = js_n.segre_at(0.0, max(radius_n, opnorm(N)))
        sqrt_ok = segre_has_sqrt(segre)
        ev["half_i_cluster"] = {
            "center": center,
            "mult": mult,
            "nilpotent_segre": segre,
        }
    conditions = {
        "neg_similar": neg.verdict,
        "half_i_component_sqrt": sqrt_ok,
    }
    return _report("coi", conditions, ev, tol)


def is_doi(T, tol: Tolerances | None = None) -> MembershipReport:
    """Difference-of-idempotents decider (elementary-divisor conditions).

    No constraint at 0; Segre sequences at +/-alpha (alpha not in {0, 1, -1})
    must agree as multisets; at +1/-1 the sorted sequences, zero-padded to a
    common length, must differ by at most 1 entrywise.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    js = jordan_structure(T, tol)
    radius = tol.eig_radius(T)
    sp_radius = tol.special_radius(T)

    seg_plus: list[int] = []
    seg_minus: list[int] = []
    generic = []
    for c, seg in js.blocks:
        if abs(c) <= sp_radius:
            continue  # no restriction at 0
        if abs(c - 1) <= sp_radius:
            seg_plus.extend(seg)
            continue
        if abs(c + 1) <= sp_radius:
            seg_minus.extend(seg)
            continue
        generic.append((c, seg))

    pairs, zeros, unpaired = _pair_under_negation(
        tuple((c, sum(s)) for c, s in generic), radius, radius
    )
    pair_ok = not unpaired and not zeros
    segre_ok = all(
        sorted(generic[i][1]) == sorted(generic[j][1]) for i, j in pairs
    )
    table = SegrePairingTable(
        plus=tuple(sorted(seg_plus, reverse=True)),
        minus=tuple(sorted(seg_minus, reverse=True)),
    )
    pm_ok = table.max_diff() <= 1
    conditions = {
        "generic_pairs": pair_ok and segre_ok,
        "plus_minus_one_interlace": pm_ok,
    }
    ev = {
        "plus_minus_table": table,
        "generic_tables": [
            {
                "alpha": generic[i][0],
                "table": SegrePairingTable(plus=generic[i][1], minus=generic[j][1]),
            }
            for i, j in pairs
        ],
        "unpaired": [generic[i][0] for i in unpaired],
        "jordan": js.blocks,
    }
    return _report("doi", conditions, ev, tol)


# ---------------------------------------------------------------------------
# norm-closures
# ---------------------------------------------------------------------------


def in_clos_coi(T, tol: Tolerances | None = None) -> MembershipReport:
    """Closure of the commutators of idempotents: the balanced matrices."""
    T = as_matrix(T)
    tol = _tol(tol)
    bal = is_balanced(T, tol)
    ev = dict(bal.evidence)
    ev.pop("conditions", None)
    if T.shape[0] <= 64:
        parity = charpoly_parity(T, tol)
        ev["charpoly_parity"] = parity
        ev["parity_disagrees"] = bool(parity != bal.verdict)
    conditions = {"balanced": bal.verdict}
    return _report("clos_coi", conditions, ev, tol)


def in_clos_doi(T, tol: Tolerances | None = None) -> MembershipReport:
    """Closure of the differences of idempotents.

    Split off the spectral block Z at {+1, -1}; after flipping the sign so
    that r := round(Re tr Z) >= 0, membership requires the complementary
    block to be balanced and ``nullity(Z - I) >= r``.  Without eigenvalues at
    +/-1 this is exactly the balanced condition.
    """
    T = as_matrix(T)
    tol = _tol(tol)
    n = T.shape[0]
    rep = spectrum(T, tol)
    sp_radius = tol.special_radius(T)
    pm_centers = [
        c
        for c, _ in rep.clusters
        if abs(c - 1) <= sp_radius or abs(c + 1) <= sp_radius
    ]
    ev: dict = {"pm_block_present": bool(pm_centers), "sign_flipped": False}
    if not pm_centers:
        bal = is_balanced(T, tol)
        ev["balanced_evidence"] = bal.evidence
        return _report("clos_doi", {"balanced": bal.verdict, "pm_trace_nullity": True}, ev, tol)

    _, Z, B = split_at_centers(T, pm_centers, tol)
    tr_z = complex(np.trace(Z))
    r = int(round(tr_z.real))
    if abs(tr_z - r) > 10 * tol.residual * max(n, 1):
        raise NonIntegerTraceError(
            f"trace of the +/-1 block is {tr_z:.6g}, not within "
            f"{10 * tol.residual * n:.3g} of an integer"
        )
    if r < 0:
        Z = -Z
        B = None if B is None else -B
        r = -r
        ev["sign_flipped"] = True
    # nullity resolved at the clustering radius that pinned the block to +/-1
    nz = nullity(Z - np.eye(Z.shape[0]), tol, abs_floor=tol.eig_radius(T))
    bal_ok = True
    if B is not None:
        bal = is_balanced(B, child_tol(tol, tol.eig_radius(T)))
        bal_ok = bal.verdict
        ev["balanced_evidence"] = bal.evidence
    ev["r"] = r
    ev["nullity_z_minus_i"] = nz
    conditions = {"balanced": bal_ok, "pm_trace_nullity": nz >= r}
    return _report("clos_doi", conditions, ev, tol)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def _real_negation_pairing(values: np.ndarray, radius: float, pair_tol: float):
    """Pair sorted real values t with -t; returns (pairs, zeros, unpaired).

    Sorted matching is the optimal assignment in one dimension, so the greedy
    and the bipartite answers coincide here.
    """
    zeros = [i for i, v in enumerate(values) if abs(v) <= radius]
    pos = sorted((i for i, v in enumerate(values) if v > radius),
                 key=lambda i: -values[i])
    neg = sorted((i for i, v in enumerate(values) if v < -radius),
                 key=lambda i: values[i])
    pairs = []
    unpaired = []
    for a, b in zip(pos, neg):
        if abs(values[a] + values[b]) <= pair_tol:
            pairs.append((a, b))
        else:
            unpaired.extend([a, b])
    tail = pos[len(neg):] + neg[len(pos):]
    unpaired.extend(tail)
    return pairs, zeros, unpaired


def is_cop(T, tol: Tolerances | None = None) -> MembershipReport:
    """Commutator of two orthogonal projections: skew-adjoint, norm <= 1/2,
    spectrum of iT symmetric about 0 with equal multiplicities."""
    T = as_matrix(T)
    tol = _tol(tol)
    scale = max(1.0, opnorm(T))
    skew_defect = opnorm(T + T.conj().T)
    sv_max = opnorm(T)
    H = 1j * T
    H = (H + H.conj().T) / 2
    w = np.linalg.eigvalsh(H) if T.size else np.array([])
    radius = tol.eig_radius(T)
    pairs, zeros, unpaired = _real_negation_pairing(w, radius, 2 * radius)
    conditions = {
        "skew_adjoint": skew_defect <= tol.residual * scale,
        "norm_at_most_half": sv_max <= 0.5 + tol.residual,
        "spectrum_symmetric": not unpaired,
    }
    ev = {
        "skew_defect": float(skew_defect),
        "norm": float(sv_max),
        "hermitian_eigenvalues": w.tolist(),
        "pairs": [(float(w[a]), float(w[b])) for a, b in pairs],
        "unpaired": [float(w[i]) for i in unpaired],
    }
    return _report("cop", conditions, ev, tol)


def is_dop(H, tol: Tolerances | None = None) -> MembershipReport:
    """Difference of two orthogonal projections: hermitian, spectrum within
    [-1, 1], and the part away from {-1, 0, 1} symmetric under negation."""
    H = as_matrix(H)
    tol = _tol(tol)
    scale = max(1.0, opnorm(H))
    herm_defect = opnorm(H - H.conj().T)
    Hh = (H + H.conj().T) / 2
    w = np.linalg.eigvalsh(Hh) if H.size else np.array([])
    sp_radius = tol.special_radius(H)
    in_range = bool(np.all(w >= -1 - tol.residual) and np.all(w <= 1 + tol.residual)) if len(w) else True
    # drop the special buckets at -1, 0, 1; the rest must pair under negation
    interior = np.array(
        [v for v in w if abs(v) > sp_radius and abs(v - 1) > sp_radius and abs(v + 1) > sp_radius]
    )
    pairs, zeros, unpaired = _real_negation_pairing(interior, sp_radius, 2 * sp_radius)
    conditions = {
        "hermitian": herm_defect <= tol.residual * scale,
        "spectrum_in_unit_interval": in_range,
        "interior_symmetric": not unpaired,
    }
    ev = {
        "hermitian_defect": float(herm_defect),
        "eigenvalues": w.tolist(),
        "interior": interior.tolist(),
        "pairs": [(float(interior[a]), float(interior[b])) for a, b in pairs],
        "unpaired": [float(interior[i]) for i in unpaired],
    }
    return _report("dop", conditions, ev, tol)


def in_clos_cop(T, tol: Tolerances | None = None) -> MembershipReport:
    """Closure of the projection commutators; closed in finite dimension."""
    rep = is_cop(T, tol)
    return MembershipReport(rep.verdict, "clos_cop", rep.evidence, rep.tol_used)


def in_clos_dop(H, tol: Tolerances | None = None) -> MembershipReport:
    """Closure of the projection differences; closed in finite dimension."""
    rep = is_dop(H, tol)
    return MembershipReport(rep.verdict, "clos_dop", rep.evidence, rep.tol_used)


_DECIDERS = {
    "balanced": is_balanced,
    "neg_similar": is_neg_similar,
    "coi": is_coi,
    "doi": is_doi,
    "clos_coi": in_clos_coi,
    "clos_doi": in_clos_doi,
    "cop": is_cop,
    "dop": is_dop,
    "clos_cop": in_clos_cop,
    "clos_dop": in_clos_dop,
}


def classify_all(T, classes=None, tol: Tolerances | None = None):
    """Run the requested deciders (all of them by default) on ``T``."""
    tags = CLASS_TAGS if classes is None else tuple(classes)
    out = {}
    for tag in tags:
        if tag not in _DECIDERS:
            raise ValueError(f"unknown class tag {tag!r}")
        out[tag] = _DECIDERS[tag](T, tol)
    return out
