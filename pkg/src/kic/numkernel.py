"""Dense SVD, truncated pseudoinverse and eigendecomposition.

All estimators sit on these three routines. Factorizations come from LAPACK
(through numpy/scipy); this module owns truncation, ordering and the sign and
phase conventions that make results reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError

_TIE_RTOL = 1e-10
_PHASE_RTOL = 1e-8


@dataclass(frozen=True)
class TruncationRule:
    """Which singular values survive a factorization.

    ``kind`` is one of ``"exact"`` (keep every nonzero value), ``"rank"`` (keep
    at most ``rank`` values) or ``"relative"`` (drop values below
    ``tau * sigma_max``). Exactly-zero singular values are always dropped.
    """

    kind: str = "relative"
    rank: int | None = None
    tau: float | None = 1e-12

    def __post_init__(self):
        if self.kind == "exact":
            pass
        elif self.kind == "rank":
            if self.rank is None or int(self.rank) != self.rank or self.rank < 1:
                raise ValueError(f"rank cap must be a positive integer, got {self.rank!r}")
        elif self.kind == "relative":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError(f"relative threshold must lie in (0, 1), got {self.tau!r}")
        else:
            raise ValueError(f"unknown truncation kind {self.kind!r}")

    @classmethod
    def exact(cls) -> TruncationRule:
        return cls("exact", None, None)

    @classmethod
    def rank_cap(cls, r: int) -> TruncationRule:
        return cls("rank", r, None)

    @classmethod
    def relative(cls, tau: float) -> TruncationRule:
        return cls("relative", None, float(tau))

    @classmethod
    def parse(cls, text: str) -> TruncationRule:
        """Parse ``exact``, ``rank:R`` or ``rel:TAU``."""
        head, _, arg = text.strip().partition(":")
        head = head.lower()
        try:
            if head == "exact" and not arg:
                return cls.exact()
            if head == "rank":
                return cls.rank_cap(int(arg))
            if head in ("rel", "relative"):
                return cls.relative(float(arg))
        except ValueError as exc:
            raise ValueError(f"bad truncation rule {text!r}: {exc}") from None
        raise ValueError(f"bad truncation rule {text!r}; expected exact, rank:R or rel:TAU")

    def __str__(self):
        if self.kind == "exact":
            return "exact"
        if self.kind == "rank":
            return f"rank:{self.rank}"
        return f"rel:{self.tau!r}"

    def retained(self, singular_values: np.ndarray) -> int:
        """Number of leading values kept from a nonincreasing array."""
        s = np.asarray(singular_values)
        keep = int(np.count_nonzero(s > 0))
        if keep == 0:
            return 0
        if self.kind == "rank":
            keep = min(keep, self.rank)
        elif self.kind == "relative":
            keep = min(keep, int(np.count_nonzero(s >= self.tau * s[0])))
        return keep


DEFAULT_TRUNCATION = TruncationRule.relative(1e-12)


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD ``M ~ U diag(s) V^T`` after truncation."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues with unit-norm right (``A v = lam v``) and left
    (``w^H A = lam w^H``) eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"expected a nonempty 2-D matrix, got shape {M.shape}")
    return M


def svd(M, rule: TruncationRule = DEFAULT_TRUNCATION) -> SvdFactors:
    """Truncated thin SVD.

    Each left singular vector is signed so its largest-magnitude entry is
    positive; the matching right vector is flipped with it.
    """
    M = _as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    r = rule.retained(s)
    U, s, V = U[:, :r], s[:r], Vt[:r].T
    if r:
        pivot = np.argmax(np.abs(U), axis=0)
        signs = np.sign(U[pivot, np.arange(r)])
        signs[signs == 0] = 1.0
        U = U * signs
        V = V * signs
    return SvdFactors(np.ascontiguousarray(U), s.copy(), np.ascontiguousarray(V))


def pinv_from(factors: SvdFactors, shape: tuple[int, int]) -> np.ndarray:
    m, n = shape
    if factors.rank == 0:
        return np.zeros((n, m))
    return (factors.right_vectors / factors.singular_values) @ factors.left_vectors.T


def pinv(M, rule: TruncationRule = DEFAULT_TRUNCATION) -> np.ndarray:
    """Moore-Penrose pseudoinverse of ``M`` truncated by ``rule``."""
    M = _as_matrix(M)
    return pinv_from(svd(M, rule), M.shape)


def spectral_order(values: np.ndarray, rtol: float = _TIE_RTOL) -> np.ndarray:
    """Indices sorting ``values`` by descending modulus.

    Moduli within ``rtol`` (relative to the largest) count as ties and are
    ordered by ascending argument in ``[0, 2*pi)``.
    """
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return np.zeros(0, dtype=int)
    mod = np.abs(values)
    arg = np.mod(np.angle(values), 2 * np.pi)
    arg[arg >= 2 * np.pi - 1e-12] = 0.0
    scale = max(float(mod.max()), np.finfo(float).tiny)
    groups: list[list[int]] = []
    for i in np.argsort(-mod, kind="stable"):
        if groups and mod[groups[-1][0]] - mod[i] <= rtol * scale:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return np.array([i for g in groups for i in sorted(g, key=lambda k: arg[k])], dtype=int)


def normalize_phase(vectors: np.ndarray) -> np.ndarray:
    """Unit-normalize columns and rotate each so its largest entry is real positive.

    The first entry within a relative ``1e-8`` of the column maximum is the
    pivot, which keeps the choice stable when several entries tie.
    """
    out = np.array(vectors, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        norm = np.linalg.norm(col)
        if norm == 0:
            continue
        col = col / norm
        mags = np.abs(col)
        k = int(np.argmax(mags >= (1 - _PHASE_RTOL) * mags.max()))
        col = col * (np.conj(col[k]) / mags[k])
        col[k] = col[k].real
        out[:, j] = col
    return out


def eig(M) -> EigenDecomposition:
    """Eigendecomposition with deterministic ordering and phases."""
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"eigendecomposition needs a square matrix, got {M.shape}")
    lam, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    order = spectral_order(lam)
    lam = lam[order].astype(complex)
    return EigenDecomposition(
        eigenvalues=lam,
        right_vectors=normalize_phase(vr[:, order]),
        left_vectors=normalize_phase(vl[:, order]),
    )
