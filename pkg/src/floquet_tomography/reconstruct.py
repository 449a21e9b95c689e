"""Inverse problem: recurrence order, characteristic data and realizations
from finite trace records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicateRow,
    NoRankGap,
    NotEnoughData,
    RankDeficient,
    RepeatedRoots,
    SingularStencil,
)
from .spectral import CharPoly
from .traces import TraceSequence

RANK_TOL = 1e-8
GAP_RATIO = 1e3
REALIZE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class HankelData:
    matrix: np.ndarray
    row_index_set: tuple
    order_guess: int
    singular_values: np.ndarray
    rank_tol: float = RANK_TOL
    block_shape: tuple = (1, 1)

    def numerical_rank(self, rel_tol: Optional[float] = None) -> int:
        tol = self.rank_tol if rel_tol is None else rel_tol
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > tol * s[0]))


def _blocks(z) -> np.ndarray:
    """Normalize input to an array of shape (n, L, R)."""
    if isinstance(z, TraceSequence):
        z = z.values
    a = np.asarray(z, dtype=complex)
    if a.ndim == 1:
        return a[:, None, None]
    if a.ndim == 2:
        return a[:, :, None]
    if a.ndim == 3:
        return a
    raise ValueError(f"unsupported trace array of shape {a.shape}")


def _hankel_matrix(b: np.ndarray, n_set: Sequence[int], order: int,
                   ascending: bool = False) -> np.ndarray:
    L, R = b.shape[1:]
    ks = range(order + 1) if ascending else range(order, -1, -1)
    rows = []
    for n in n_set:
        rows.append(np.hstack([b[n + k] for k in ks]))
    return np.vstack(rows).reshape(len(n_set) * L, (order + 1) * R)


def build_hankel(z, n_set: Sequence[int], order: int, rank_tol: float = RANK_TOL,
                 ascending: bool = False) -> HankelData:
    """Hankel with entry (i, k) = zeta_{n_i + order - k}.

    Block rows and columns are used for (L,) or (L, R) valued sequences.
    ``ascending=True`` flips the column order (k = 0..order).
    """
    b = _blocks(z)
    n_set = tuple(int(n) for n in n_set)
    if len(set(n_set)) != len(n_set):
        raise DuplicateRow(f"row indices {n_set} are not distinct")
    if min(n_set) < 0:
        raise ValueError("row indices must be nonnegative")
    need = max(n_set) + order
    if need >= len(b):
        raise NotEnoughData(f"need zeta_{need}, have {len(b)} values")
    H = _hankel_matrix(b, n_set, order, ascending)
    s = np.linalg.svd(H, compute_uv=False)
    return HankelData(H, n_set, order, s, rank_tol, b.shape[1:])


@dataclass(frozen=True)
class OrderAudit:
    order: int
    ratios: tuple   # sigma_{N'+1}/sigma_1 per candidate N'
    gaps: tuple     # sigma_{N'}/sigma_{N'+1}


def detect_order(z, max_order: int, rel_tol: float = RANK_TOL,
                 gap_ratio: float = GAP_RATIO, audit: bool = False):
    """Smallest N' whose (N'+1)-column Hankel has numerical rank N'."""
    b = _blocks(z)
    if b.shape[2] != 1:
        raise ValueError("order detection takes scalar or vector-valued records")
    if len(b) < 2 * max_order + 1:
        raise NotEnoughData(f"need {2 * max_order + 1} values, have {len(b)}")
    if not np.any(b):
        return (0, OrderAudit(0, (), ())) if audit else 0
    ratios, gaps = [], []
    for order in range(0, max_order + 1):
        rows = min(2 * max(order, 1), len(b) - order)
        s = build_hankel(b, range(rows), order).singular_values
        s = np.concatenate([s, np.zeros(order + 1 - len(s))])
        ratio = s[order] / s[0]
        gap = np.inf if order == 0 or s[order] == 0 else s[order - 1] / s[order]
        ratios.append(float(ratio))
        gaps.append(float(gap))
        if ratio < rel_tol and gap > gap_ratio:
            return (order, OrderAudit(order, tuple(ratios), tuple(gaps))) if audit else order
    raise NoRankGap(f"no rank gap below {rel_tol} up to order {max_order}")


def solve_char_coeffs(h: HankelData) -> CharPoly:
    """Null vector of the (descending-column) Hankel, scaled to E[0] = 1."""
    if h.block_shape != (1, 1):
        raise ValueError("characteristic coefficients need a scalar Hankel")
    N = h.order_guess
    if h.matrix.shape[0] < N:
        raise RankDeficient("window has fewer rows than the order")
    _, s, vh = np.linalg.svd(h.matrix)
    E = vh[-1].conj()
    if abs(E[0]) < 1e-12 * np.abs(E).max():
        raise RankDeficient("null vector has vanishing leading component")
    E = E / E[0]
    if len(s) >= N and N > 0 and s[N - 1] < h.rank_tol * s[0]:
        raise RankDeficient("Hankel rank below the requested order")
    return CharPoly(E * (-1.0) ** np.arange(N + 1))


def ch_residual(values, cp: CharPoly) -> float:
    """max_n |sum_a E_a zeta_{n+N-a}| / max|zeta| over the record."""
    v = np.asarray(values, dtype=complex)
    E = cp.delta_coeffs
    N = cp.dim
    if len(v) <= N:
        return 0.0
    res = np.convolve(v, E, mode="valid")
    scale = np.abs(v).max()
    return float(np.abs(res).max() / scale) if scale > 0 else 0.0


@dataclass(frozen=True, eq=False)
class ReconstructedSkeleton:
    order: int
    char_coeffs: CharPoly
    eigenvalues: np.ndarray
    dressing: np.ndarray
    residual: float

    def sequence(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1)
        return (self.dressing[None, :] * self.eigenvalues[None, :] ** n[:, None]).sum(1)


def prony(z, cp: CharPoly, repeat_tol: float = 1e-7) -> ReconstructedSkeleton:
    v = z.values if isinstance(z, TraceSequence) else np.asarray(z, dtype=complex)
    N = cp.dim
    if len(v) < N:
        raise NotEnoughData(f"need {N} values, have {len(v)}")
    lam = cp.roots()
    if N > 1:
        d = np.abs(lam[:, None] - lam[None, :]) / np.abs(lam).max()
        if d[np.triu_indices(N, 1)].min() < repeat_tol:
            raise RepeatedRoots("clustered roots; use the block realization instead")
    V = lam[None, :] ** np.arange(N)[:, None]
    c = np.linalg.solve(V, v[:N]) if N else np.zeros(0, dtype=complex)
    return ReconstructedSkeleton(N, cp, lam, c, ch_residual(v, cp))


def reconstruct_scalar(z, max_order: int, rel_tol: float = RANK_TOL) -> ReconstructedSkeleton:
    """detect_order -> solve_char_coeffs -> prony on a scalar record."""
    v = z.values if isinstance(z, TraceSequence) else np.asarray(z, dtype=complex)
    N = detect_order(v, max_order, rel_tol)
    rows = min(2 * max(N, 1), len(v) - N)
    cp = solve_char_coeffs(build_hankel(v, range(rows), N, rel_tol))
    return prony(v, cp)


# ---------------------------------------------------------------- Schur


@dataclass(frozen=True, eq=False)
class SchurStencil:
    offsets: tuple
    coeffs: np.ndarray
    mu: tuple
    mu_r: tuple

    def apply(self, values, n0: int) -> complex:
        """zeta_{n0} + sum_r S^(r) zeta_{n0 - k_r}."""
        v = np.asarray(values, dtype=complex)
        return complex(v[n0] + sum(s * v[n0 - k] for s, k in zip(self.coeffs, self.offsets)))

    def residual(self, values) -> float:
        v = np.asarray(values, dtype=complex)
        K = self.offsets[-1]
        res = [abs(self.apply(v, n)) for n in range(K, len(v))]
        scale = np.abs(v).max()
        return float(max(res) / scale) if res and scale > 0 else 0.0


def conjugate_partition(mu: Sequence[int]) -> list:
    mu = [m for m in mu if m > 0]
    if not mu:
        return []
    return [sum(1 for m in mu if m >= i) for i in range(1, mu[0] + 1)]


def schur_from_e(mu: Sequence[int], e: Sequence[complex]) -> complex:
    """Dual Jacobi-Trudi: s_mu = det(e_{mu'_i - i + j})."""
    conj = conjugate_partition(mu)
    k = len(conj)
    if k == 0:
        return 1.0 + 0j
    N = len(e) - 1

    def ea(a):
        return e[a] if 0 <= a <= N else 0.0

    mat = np.array([[ea(conj[i] - i + j) for j in range(k)] for i in range(k)], dtype=complex)
    return complex(np.linalg.det(mat))


def schur_stencil(cp: CharPoly, offsets: Sequence[int]) -> SchurStencil:
    """Coefficients of zeta_{n} + sum_r S^(r) zeta_{n - k_r} = 0."""
    k = [int(x) for x in offsets]
    N = cp.dim
    if len(k) != N:
        raise ValueError(f"need {N} offsets, got {len(k)}")
    if k[0] <= 0 or any(b <= a for a, b in zip(k, k[1:])):
        raise ValueError("offsets must be strictly increasing positive integers")
    # n^(0) > n^(1) > ... > n^(N) = 0, n^(r) = k_N - k_r, n^(0) = k_N
    n = [k[-1]] + [k[-1] - kr for kr in k]
    mu = tuple(n[i] - N + i for i in range(1, N + 1))
    e = np.asarray(cp.coeffs, dtype=complex)
    s_mu = schur_from_e(mu, e)
    if abs(s_mu) < 1e-14 * max(1.0, np.abs(e).max()) ** max(1, sum(mu)):
        raise SingularStencil(f"s_mu vanishes for mu = {mu}")
    mus, S = [], []
    for r in range(1, N + 1):
        rest = [n[i] for i in range(N + 1) if i != r]
        mu_r = tuple(rest[i - 1] - N + i for i in range(1, N + 1))
        mus.append(mu_r)
        S.append((-1) ** r * schur_from_e(mu_r, e) / s_mu)
    return SchurStencil(tuple(k), np.array(S), mu, tuple(mus))


# ---------------------------------------------------------------- realization


@dataclass(frozen=True, eq=False)
class RealizedMonodromy:
    matrix: np.ndarray
    singular_values: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rank_residual_curve: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)


def rank_residual(h) -> np.ndarray:
    """R_r = sum_{k>r} s_k^2 / sum_k s_k^2 for r = 1..len(s)."""
    s = np.asarray(getattr(h, "singular_values", h), dtype=float)
    tot = np.sum(s ** 2)
    if tot == 0:
        return np.zeros(len(s))
    tail = np.cumsum((s ** 2)[::-1])[::-1]
    out = np.append(tail[1:], 0.0) / tot
    return out


def realize(blocks, order: int, n_set: Optional[Sequence[int]] = None,
            window: Optional[int] = None, floor: float = REALIZE_FLOOR) -> RealizedMonodromy:
    """Shift-invariance realization from block Hankels at n and n+1.

    ``window`` is the number of column blocks minus one (defaults to
    ``order``); ``n_set`` defaults to 0..order.
    """
    b = _blocks(blocks)
    Nw = order if window is None else window
    n_set = tuple(range(order + 1)) if n_set is None else tuple(n_set)
    h0 = build_hankel(b, n_set, Nw)
    h1 = build_hankel(b, tuple(n + 1 for n in n_set), Nw)
    U, s, Vh = np.linalg.svd(h0.matrix, full_matrices=False)
    if order > len(s) or s[0] == 0 or s[order - 1] / s[0] < floor:
        raise RankDeficient(f"singular value {order} is below the floor")
    Un, sn, Vn = U[:, :order], s[:order], Vh[:order].conj().T
    w = 1.0 / np.sqrt(sn)
    Mrel = (w[:, None] * (Un.conj().T @ h1.matrix @ Vn)) * w[None, :]
    return RealizedMonodromy(Mrel, s, Un, sn, Vn, rank_residual(s))
