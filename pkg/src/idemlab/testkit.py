"""Ground-truth generators and brute-force oracles.

Samplers build genuine class members *by definition* (conjugated projections,
frame products), independently of the deciders they are used to test.  The
square-root oracle settles, by exhaustive search, the combinatorial question
the commutator decider answers through a pairing criterion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Tolerances, _tol, as_matrix, opnorm

__all__ = [
    "SamplerConfig",
    "sample_idempotent",
    "sample_projection",
    "sample_coi",
    "sample_doi",
    "sample_cop",
    "sample_dop",
    "sample_balanced",
    "nilpotent_sqrt_oracle",
    "sqrt_source_multiset",
    "squared_cell_sizes",
    "brute_distance",
    "random_invertible",
    "random_unitary",
]


@dataclass(frozen=True)
class SamplerConfig:
    """Shared sampler knobs; ``rank_law`` is "uniform" or explicit weights."""

    n: int
    seed: int = 0
    cond_cap: float = 1e3
    rank_law: str | Sequence[float] = "uniform"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.cond_cap < 1:
            raise ValueError("cond_cap must be >= 1")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def draw_rank(self, rng: np.random.Generator) -> int:
        if isinstance(self.rank_law, str):
            if self.rank_law != "uniform":
                raise ValueError(f"unknown rank law {self.rank_law!r}")
            return int(rng.integers(0, self.n + 1))
        w = np.asarray(self.rank_law, dtype=float)
        if len(w) != self.n + 1 or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("rank_law weights must be n+1 nonnegative numbers")
        return int(rng.choice(self.n + 1, p=w / w.sum()))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish unitary from the QR of a complex Gaussian, phase-fixed."""
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_invertible(rng: np.random.Generator, n: int, cond_cap: float) -> np.ndarray:
    """Invertible matrix with condition number drawn log-uniform in [1, cap]."""
    c = float(np.exp(rng.uniform(0.0, np.log(max(cond_cap, 1.0)))))
    sv = np.exp(np.linspace(np.log(np.sqrt(c)), -np.log(np.sqrt(c)), n)) if n > 1 else np.ones(1)
    return random_unitary(rng, n) @ np.diag(sv) @ random_unitary(rng, n)


def _idempotent_from_similarity(S: np.ndarray, k: int) -> np.ndarray:
    from .construct import purify_idempotent

    n = S.shape[0]
    if k == 0:
        return np.zeros((n, n), dtype=complex)
    if k == n:
        return np.eye(n, dtype=complex)
    D = np.zeros((n, n), dtype=complex)
    D[:k, :k] = np.eye(k)
    # refine away the conjugation roundoff so members are exact to machine eps
    return purify_idempotent(S @ D @ np.linalg.inv(S))


def sample_idempotent(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """E = S diag(I_k, 0) S^-1 for random similarity and rank."""
    rng = cfg.rng() if rng is None else rng
    k = cfg.draw_rank(rng)
    S = random_invertible(rng, cfg.n, cfg.cond_cap)
    return _idempotent_from_similarity(S, k)


def sample_projection(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Orthogonal projection onto a random k-dimensional subspace."""
    rng = cfg.rng() if rng is None else rng
    k = cfg.draw_rank(rng)
    if k == 0:
        return np.zeros((cfg.n, cfg.n), dtype=complex)
    Z = rng.normal(size=(cfg.n, k)) + 1j * rng.normal(size=(cfg.n, k))
    Q, _ = np.linalg.qr(Z)
    return Q @ Q.conj().T


def sample_coi(cfg: SamplerConfig):
    """(T, E, F) with T = [E, F]; a commutator of idempotents by definition."""
    rng = cfg.rng()
    E = sample_idempotent(cfg, rng)
    F = sample_idempotent(cfg, rng)
    return E @ F - F @ E, E, F


def sample_doi(cfg: SamplerConfig):
    """(T, E, F) with T = E - F; a difference of idempotents by definition."""
    rng = cfg.rng()
    E = sample_idempotent(cfg, rng)
    F = sample_idempotent(cfg, rng)
    return E - F, E, F


def sample_cop(cfg: SamplerConfig):
    """(T, P, Q) with T = [P, Q] for orthogonal projections P, Q."""
    rng = cfg.rng()
    P = sample_projection(cfg, rng)
    Q = sample_projection(cfg, rng)
    return P @ Q - Q @ P, P, Q


def sample_dop(cfg: SamplerConfig):
    """(H, P, Q) with H = P - Q for orthogonal projections P, Q."""
    rng = cfg.rng()
    P = sample_projection(cfg, rng)
    Q = sample_projection(cfg, rng)
    return P - Q, P, Q


def sample_balanced(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Matrix with exactly negation-symmetric spectrum (balanced by build).

    Eigenvalues come in random +/- pairs (plus zeros filling an odd leftover
    or a random kernel), conjugated by a random similarity.
    """
    rng = cfg.rng() if rng is None else rng
    n = cfg.n
    npairs = n // 2
    vals = []
    for _ in range(npairs):
        b = rng.normal() + 1j * rng.normal()
        vals.extend([b, -b])
    if n % 2:
        vals.append(0.0)
    rng.shuffle(vals)
    S = random_invertible(rng, n, cfg.cond_cap)
    return S @ np.diag(np.array(vals, dtype=complex)) @ np.linalg.inv(S)


# ---------------------------------------------------------------------------
# nilpotent square-root oracle
# ---------------------------------------------------------------------------


def squared_cell_sizes(m: int) -> tuple[int, ...]:
    """Jordan block sizes of the square of a single nilpotent m-cell."""
    if m < 1:
        raise ValueError("cell size must be positive")
    hi, lo = (m + 1) // 2, m // 2
    return (hi,) if lo == 0 else (hi, lo)


def sqrt_source_multiset(segre) -> tuple[int, ...] | None:
    """Cell sizes of a nilpotent square root of the given Segre data, if any.

    Squaring an m-cell yields cells of sizes ceil(m/2) and floor(m/2), so a
    root exists iff the multiset splits into such pairs; decided by
    backtracking over the largest remaining part.
    """
    seq = sorted((int(s) for s in segre), reverse=True)
    if any(s < 1 for s in seq):
        raise ValueError("Segre entries must be positive")

    def search(parts: tuple[int, ...]):
        if not parts:
            return ()
        a = parts[0]
        rest = list(parts[1:])
        # source 2a contributes (a, a); source 2a - 1 contributes (a, a - 1)
        if a in rest:
            rest.remove(a)
            sub = search(tuple(rest))
            if sub is not None:
                return (2 * a,) + sub
            rest = list(parts[1:])
        if a - 1 in rest:
            rest.remove(a - 1)
            sub = search(tuple(rest))
            if sub is not None:
                return (2 * a - 1,) + sub
            rest = list(parts[1:])
        if a == 1:  # a 1-cell can come from a single 1-cell (0^2 = 0)
            sub = search(tuple(rest))
            if sub is not None:
                return (1,) + sub
        return None

    found = search(tuple(seq))
    return None if found is None else tuple(sorted(found, reverse=True))


def nilpotent_sqrt_oracle(segre) -> bool:
    """Exhaustive decision: does a nilpotent with this Segre data have a
    square root?  Independent of the pairing criterion used by the decider."""
    if sum(int(s) for s in segre) > 12:
        raise ValueError("oracle is limited to Segre sums <= 12")
    return sqrt_source_multiset(segre) is not None


# ---------------------------------------------------------------------------
# Monte-Carlo distance bound
# ---------------------------------------------------------------------------


def _member_from_params(class_tag: str, n: int, theta: np.ndarray, k1: int, k2: int):
    """Class member parameterized by a flat real vector.

    Idempotents use the frame form A (B A)^-1 B; projections use the frame
    form A (A* A)^-1 A*, which is hermitian-idempotent by construction.
    """

    def frames(vec, rows, cols):
        m = rows * cols
        A = vec[:m].reshape(rows, cols) + 1j * vec[m:2 * m].reshape(rows, cols)
        return A

    def idem(vec, k):
        if k == 0:
            return np.zeros((n, n), dtype=complex)
        A = frames(vec, n, k)
        B = frames(vec[2 * n * k:], k, n)
        return A @ np.linalg.solve(B @ A, B)

    def proj(vec, k):
        if k == 0:
            return np.zeros((n, n), dtype=complex)
        A = frames(vec, n, k)
        return A @ np.linalg.solve(A.conj().T @ A, A.conj().T)

    half = len(theta) // 2
    if class_tag in ("coi", "doi"):
        E = idem(theta[:half], k1)
        F = idem(theta[half:], k2)
        return E @ F - F @ E if class_tag == "coi" else E - F
    P = proj(theta[:half], k1)
    Q = proj(theta[half:], k2)
    return P @ Q - Q @ P if class_tag == "cop" else P - Q


def brute_distance(
    T,
    class_tag: str,
    budget: int,
    cfg: SamplerConfig,
    tol: Tolerances | None = None,
) -> float:
    """Monte-Carlo upper bound on the distance from T to a class.

    Streams ``budget`` random members; whenever the raw distance improves,
    coordinate descent refines the winning parameter vector.  The running
    minimum makes the bound non-increasing in the budget for a fixed seed.
    """
    if class_tag not in ("coi", "doi", "cop", "dop"):
        raise ValueError(f"unknown class tag {class_tag!r}")
    T = as_matrix(T)
    _tol(tol)
    n = T.shape[0]
    if n != cfg.n:
        raise ValueError("cfg.n must match the dimension of T")
    rng = cfg.rng()
    best = float("inf")
    # each member needs two frames of up to n*n complex entries per factor
    param_len = 8 * n * n

    def objective(theta, k1, k2):
        try:
            M = _member_from_params(class_tag, n, theta, k1, k2)
        except np.linalg.LinAlgError:
            return float("inf")
        return opnorm(T - M)

    def refine(theta, k1, k2, value):
        step = 0.25
        for _ in range(3):
            improved = False
            for c in range(len(theta)):
                for sgn in (1.0, -1.0):
                    cand = theta.copy()
                    cand[c] += sgn * step
                    v = objective(cand, k1, k2)
                    if v < value:
                        theta, value = cand, v
                        improved = True
                        break
            if not improved:
                step /= 4
        return value

    for _ in range(budget):
        k1 = cfg.draw_rank(rng)
        k2 = cfg.draw_rank(rng)
        theta = rng.normal(size=param_len)
        v = objective(theta, k1, k2)
        if v < best:
            best = min(best, refine(theta.copy(), k1, k2, v))
    return float(best)
