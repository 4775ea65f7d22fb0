"""Desk-scale harness for compact-operator behaviour.

Finite truncations with prescribed decaying spectra stand in for compact
operators: the generator produces upper-triangular matrices (in a random
unitary basis) whose diagonals decay geometrically or polynomially, and the
sweep demonstrates that commutator approximants keep a uniform residual
across truncation sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classify import MembershipReport, in_clos_coi, is_coi
from .construct import coi_approximant
from .core import Tolerances, _tol

__all__ = [
    "CompactProfile",
    "SweepRow",
    "sample_truncation",
    "truncation_residual_sweep",
    "example_410_witness",
    "ladder_commutator_pair",
]


@dataclass(frozen=True)
class CompactProfile:
    """Spectral decay profile for finite truncations.

    ``kind`` is "geometric" (param = ratio in (0,1)) or "power"
    (param = exponent > 0).  With ``paired`` the diagonal comes in +/- pairs;
    ``nilpotent_tail_dim`` zeroes out that many trailing diagonal entries.
    """

    kind: str
    param: float
    paired: bool = True
    nilpotent_tail_dim: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind == "geometric":
            if not 0 < self.param < 1:
                raise ValueError("geometric ratio must be in (0, 1)")
        elif self.kind == "power":
            if self.param <= 0:
                raise ValueError("power exponent must be positive")
        else:
            raise ValueError(f"unknown decay kind {self.kind!r}")
        if self.nilpotent_tail_dim < 0:
            raise ValueError("nilpotent_tail_dim must be >= 0")

    @classmethod
    def geometric(cls, ratio: float, **kw) -> "CompactProfile":
        return cls(kind="geometric", param=ratio, **kw)

    @classmethod
    def power(cls, exponent: float, **kw) -> "CompactProfile":
        return cls(kind="power", param=exponent, **kw)

    def magnitude(self, i: int) -> float:
        if self.kind == "geometric":
            return self.param ** i
        return (i + 1.0) ** (-self.param)


def sample_truncation(profile: CompactProfile, n: int) -> np.ndarray:
    """n x n truncation: upper-triangular in a random unitary basis.

    The diagonal follows the decay profile (+/- paired when requested, with a
    zero filling an odd leftover) and ends in ``nilpotent_tail_dim`` zeros.
    Strictly-upper entries are bounded and column-scaled by the profile, the
    way a compact operator's triangular form decays along its columns.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    tail = min(profile.nilpotent_tail_dim, n)
    lead = n - tail
    rng = np.random.default_rng([profile.seed & 0x7FFFFFFF, n, 0x1DE])

    diag = np.zeros(n, dtype=complex)
    scale = np.zeros(n)
    if profile.paired:
        for j in range(n):
            scale[j] = profile.magnitude(j // 2)
        for k in range(lead // 2):
            a = profile.magnitude(k)
            diag[2 * k] = a
            diag[2 * k + 1] = -a
        # odd leftover stays zero
    else:
        for j in range(n):
            scale[j] = profile.magnitude(j)
        for j in range(lead):
            diag[j] = profile.magnitude(j) * np.exp(2j * np.pi * rng.uniform())

    R = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(R, diag)
    for i in range(n):
        for j in range(i + 1, n):
            r = np.sqrt(rng.uniform())
            phase = np.exp(2j * np.pi * rng.uniform())
            R[i, j] = 0.3 * r * phase * scale[j]

    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, Rq = np.linalg.qr(Z)
    Q = Q * (np.diag(Rq) / np.abs(np.diag(Rq)))
    return Q @ R @ Q.conj().T


@dataclass(frozen=True)
class SweepRow:
    n: int
    residual: float
    cond: float
    seed: int


def truncation_residual_sweep(
    profile: CompactProfile,
    dims: Sequence[int],
    eps: float,
    tol: Tolerances | None = None,
) -> list[SweepRow]:
    """Commutator-approximant residuals across truncation sizes.

    Each row records the achieved ``||[E,F] - T_n||`` and the conditioning of
    the transform used; rows are reproducible from (profile, n, seed).
    """
    if not profile.paired:
        raise ValueError("residual sweep requires a paired profile")
    tol = _tol(tol)
    rows = []
    for n in dims:
        T = sample_truncation(profile, int(n))
        pair, _ = coi_approximant(T, eps, tol, seed=profile.seed)
        rows.append(
            SweepRow(
                n=int(n),
                residual=float(pair.target_residual),
                cond=float(pair.similarity_cond or 1.0),
                seed=profile.seed,
            )
        )
    return rows


def example_410_witness(
    tol: Tolerances | None = None,
) -> tuple[np.ndarray, MembershipReport, MembershipReport]:
    """Packaged regression witness separating the commutator class from its
    closure: a 4x4 matrix similar to its negative (via the swap involution)
    and inside the closure, yet not itself a commutator of idempotents.
    """
    A0 = np.array([[0.5j, 1.0], [0.0, 0.5j]], dtype=complex)
    T = np.zeros((4, 4), dtype=complex)
    T[:2, :2] = A0
    T[2:, 2:] = -A0
    return T, is_coi(T, tol), in_clos_coi(T, tol)


def ladder_commutator_pair(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """K = sum of 2x2 cells [[0, 1/k], [0, 0]] with its exact commutator pair.

    Returns (K, E, F) where E is the direct sum of diag(1, 0) cells and F the
    direct sum of [[1, 1/k], [0, 0]] cells, so [E, F] = K with residual 0.
    """
    if n < 1:
        raise ValueError("n must be positive")
    dim = 2 * n
    K = np.zeros((dim, dim), dtype=complex)
    E = np.zeros((dim, dim), dtype=complex)
    F = np.zeros((dim, dim), dtype=complex)
    for k in range(1, n + 1):
        i = 2 * (k - 1)
        K[i, i + 1] = 1.0 / k
        E[i, i] = 1.0
        F[i, i] = 1.0
        F[i, i + 1] = 1.0 / k
    return K, E, F
