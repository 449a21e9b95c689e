"""Generating functions of trace sequences and phase functionals.

OSD  h(z) = exp(sum_n zeta_n z^n / n)       (spectral determinant)
ORS  Z(z) = sum_n zeta_{n+1} z^n = N(z) / Delta(z)
ODSD F(p) = sum_{n>=1} zeta_n / n^p          (Dirichlet series)

Delta(z) = det(1 - z M) = sum_a (-1)^a e_a z^a.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DomainError,
    MatchingAmbiguous,
    NotEnoughData,
    PoleAtEvaluation,
    RefinementExhausted,
    ZeroCrossing,
)
from .monodromy import SpectralDecomposition, spectral_decompose, _as_matrix
from .traces import (
    ORDINARY,
    TIME_SHIFTED,
    DressingCoefficients,
    TraceSequence,
    dressing,
)

# ---------------------------------------------------------------- char poly


@dataclass(frozen=True, eq=False)
class CharPoly:
    coeffs: np.ndarray  # e_0 = 1, e_1, ..., e_N

    @property
    def dim(self) -> int:
        return len(self.coeffs) - 1

    @property
    def delta_coeffs(self) -> np.ndarray:
        """Coefficients of Delta(z) in ascending powers."""
        return self.coeffs * (-1.0) ** np.arange(len(self.coeffs))

    @property
    def basis_vector(self) -> np.ndarray:
        """E_N = (1, -e_1, ..., (-1)^N e_N)."""
        return self.delta_coeffs

    def delta(self, z):
        return np.polyval(self.delta_coeffs[::-1], z)

    def roots(self) -> np.ndarray:
        """Eigenvalues: roots of x^N - e_1 x^{N-1} + ... (companion matrix)."""
        if self.dim == 0:
            return np.array([], dtype=complex)
        return np.roots(self.delta_coeffs)

    @classmethod
    def from_eigenvalues(cls, lams) -> "CharPoly":
        c = np.poly(np.asarray(lams, dtype=complex))
        return cls(np.asarray(c * (-1.0) ** np.arange(len(c)), dtype=complex))


def newton_coefficients(power_traces: Sequence[complex]) -> np.ndarray:
    """e_0..e_N from p_k = Tr(M^k), k = 1..N, by Newton's identities."""
    p = np.asarray(power_traces, dtype=complex)
    N = len(p)
    e = np.zeros(N + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, N + 1):
        s = sum((-1) ** (i - 1) * e[k - i] * p[i - 1] for i in range(1, k + 1))
        e[k] = s / k
    return e


def char_poly(m) -> CharPoly:
    M = _as_matrix(m)
    n = M.shape[0]
    p, X = [], np.eye(n, dtype=complex)
    for _ in range(n):
        X = X @ M
        p.append(np.trace(X))
    return CharPoly(newton_coefficients(p))


# ---------------------------------------------------------------- OSD / ORS


@dataclass(frozen=True, eq=False)
class OsdSeries:
    coeffs: np.ndarray
    source: Optional[TraceSequence] = None

    def eval(self, z):
        return np.polyval(self.coeffs[::-1], z)


def _values(z) -> np.ndarray:
    if isinstance(z, TraceSequence):
        return z.values
    return np.asarray(z, dtype=complex)


def osd_series(z, n_max: int) -> OsdSeries:
    """h_n from h_n = (1/n) sum_{k=1}^n zeta_k h_{n-k}."""
    if isinstance(z, TraceSequence) and z.kind not in (ORDINARY, TIME_SHIFTED):
        raise ValueError(f"OSD needs an ordinary trace sequence, got {z.kind}")
    zeta = _values(z)
    if len(zeta) < n_max + 1:
        raise NotEnoughData(f"need zeta_0..zeta_{n_max}, have {len(zeta)} values")
    h = np.zeros(n_max + 1, dtype=complex)
    h[0] = 1.0
    for n in range(1, n_max + 1):
        h[n] = np.dot(zeta[1:n + 1], h[n - 1::-1]) / n
    return OsdSeries(h, z if isinstance(z, TraceSequence) else None)


def _ep_entries(d: DressingCoefficients):
    return [np.atleast_1d(np.asarray(c, dtype=complex)) for c in d.entries]


def osd_log(sd: SpectralDecomposition, d: DressingCoefficients, z: complex) -> complex:
    """Principal-branch log h(z)."""
    total = 0j
    for lam, c in zip(sd.distinct_eigenvalues, _ep_entries(d)):
        w = 1.0 - lam * z
        if abs(w) < 1e-14:
            raise PoleAtEvaluation(f"z={z} hits the pole 1/lambda={1 / lam}")
        total += -c[0] * np.log(w)
        for mm in range(2, len(c) + 1):
            # normalized so that h(0) = 1
            total += c[mm - 1] / (mm - 1) * (w ** (-(mm - 1)) - 1.0)
    return total


def osd_eval(sd: SpectralDecomposition, d: DressingCoefficients, z: complex) -> complex:
    """Closed-form OSD: prod (1 - lambda_j z)^(-c_j), EP factors included."""
    return complex(np.exp(osd_log(sd, d, z)))


@dataclass(frozen=True, eq=False)
class OrsRational:
    numerator_coeffs: np.ndarray
    denominator: CharPoly

    def eval(self, z):
        num = np.polyval(self.numerator_coeffs[::-1], z)
        return num / self.denominator.delta(z)

    def series(self, n_terms: int) -> np.ndarray:
        """Power-series coefficients of N(z)/Delta(z)."""
        dc = self.denominator.delta_coeffs
        num = np.zeros(n_terms, dtype=complex)
        k = min(n_terms, len(self.numerator_coeffs))
        num[:k] = self.numerator_coeffs[:k]
        out = np.zeros(n_terms, dtype=complex)
        for n in range(n_terms):
            acc = num[n]
            for a in range(1, min(n, len(dc) - 1) + 1):
                acc -= dc[a] * out[n - a]
            out[n] = acc / dc[0]
        return out


def ors_rational(z, cp: CharPoly) -> OrsRational:
    """Numerator N_n = sum_{a<=n} (-1)^a e_a zeta_{n-a+1}, n = 0..N-1."""
    zeta = _values(z)
    N = cp.dim
    if len(zeta) < N + 1:
        raise NotEnoughData(f"need {N + 1} values, have {len(zeta)}")
    dc = cp.delta_coeffs
    num = np.array([sum(dc[a] * zeta[n - a + 1] for a in range(n + 1))
                    for n in range(N)], dtype=complex)
    return OrsRational(num, cp)


# ---------------------------------------------------------------- polylog

_TAIL = 1e-12
_MAX_TERMS = 2_000_000


def _negative_order_poly(k: int) -> np.poly1d:
    """Numerator P_k with Li_{-k}(x) = P_k(x) / (1 - x)^{k+1}."""
    P = np.poly1d([1.0, 0.0])
    one_minus_x = np.poly1d([-1.0, 1.0])
    x = np.poly1d([1.0, 0.0])
    for j in range(k):
        P = x * (P.deriv() * one_minus_x + (j + 1) * P)
    return P


def _tail_bound(ax: float, s: float, n: int) -> float:
    # sum_{k>n} ax^k k^{-s}, bounded with k^{-s} <= (n+1)^{-s} (s >= 0)
    # or by the ratio of successive terms (s < 0)
    first = ax ** (n + 1) * (n + 1) ** (-s)
    if s >= 0:
        return first / (1.0 - ax)
    ratio = ax * ((n + 2) / (n + 1)) ** (-s)
    return np.inf if ratio >= 1 else first / (1.0 - ratio)


def _series_terms(ax: float, s: float) -> Optional[int]:
    n = 16
    while _tail_bound(ax, s, n) > _TAIL:
        n *= 2
        if n > _MAX_TERMS:
            return None
    return n


def polylog(p, x):
    """Li_p(x) = sum_{n>=1} x^n / n^p.

    Closed forms for integer p <= 1. Otherwise the direct series for
    |x| < 1 (tail bound 1e-12) or |x| = 1 with Re p > 1. No analytic
    continuation beyond that; such arguments raise DomainError.
    """
    x = complex(x)
    p = complex(p)
    if x == 0:
        return 0j
    if p.imag == 0 and p.real == round(p.real) and p.real <= 1:
        k = int(round(p.real))
        if x == 1:
            raise DomainError("Li_p has a pole at x = 1 for p <= 1")
        if k == 1:
            return complex(-np.log(1.0 - x))
        if k == 0:
            return x / (1.0 - x)
        return complex(_negative_order_poly(-k)(x) / (1.0 - x) ** (1 - k))
    ax = abs(x)
    if ax < 1.0:
        n = _series_terms(ax, p.real)
        if n is not None:
            ns = np.arange(1, n + 1, dtype=float)
            return complex(np.sum(x ** ns / ns ** p))
    if ax <= 1.0 + 1e-15 and p.real > 1:
        import mpmath

        return complex(mpmath.polylog(mpmath.mpc(p.real, p.imag), mpmath.mpc(x.real, x.imag)))
    raise DomainError(f"Li_{p}({x}) outside the convergence domain")


def stirling1_unsigned(n: int, k: int) -> int:
    """Number of permutations of n elements with k cycles."""
    table = [[0] * (n + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            table[i][j] = table[i - 1][j - 1] + (i - 1) * table[i - 1][j]
    return table[n][k] if 0 <= k <= n else 0


def odsd_eval(sd: SpectralDecomposition, d: DressingCoefficients, p) -> complex:
    """F(p) = sum_j c_j Li_p(lambda_j), with Stirling-weighted EP terms."""
    if np.any(np.abs(sd.distinct_eigenvalues) > 1.0 + 1e-12):
        raise DomainError("ODSD diverges: some |lambda| > 1")
    total = 0j
    for lam, c in zip(sd.distinct_eigenvalues, _ep_entries(d)):
        for mm in range(1, len(c) + 1):
            for r in range(1, mm + 1):
                s = stirling1_unsigned(mm - 1, r - 1)
                if s:
                    total += c[mm - 1] / factorial(mm - 1) * s * polylog(p - r + 1, lam)
    return complex(total)


# ---------------------------------------------------------------- T-system


@dataclass(frozen=True, eq=False)
class TSystemData:
    dets: np.ndarray           # H[a, n], a = 0..N+1, n = 0..n_max
    top_deviation: np.ndarray  # xi_n
    source_terms: np.ndarray   # S[a, n], NaN where the recurrence is not defined
    rank_polys: list           # E^{(a)} coefficients of Delta_a, a = 0..N

    def bilinear_residual(self, a: int, n: int) -> complex:
        H = self.dets
        return H[a, n] ** 2 - H[a, n + 1] * H[a, n - 1] - H[a + 1, n] * H[a - 1, n]


def band_determinant(h: np.ndarray, a: int, n: int) -> complex:
    """det(h_{n + l - k}), l, k = 1..a, with h_m = 0 for m < 0."""
    if a == 0:
        return 1.0 + 0j
    idx = n + np.arange(a)[:, None] - np.arange(a)[None, :]
    mat = np.where(idx >= 0, h[np.clip(idx, 0, None)], 0.0)
    return complex(np.linalg.det(mat))


def tsystem(osd: OsdSeries, sd: SpectralDecomposition, det_m: Optional[complex] = None,
            n_max: Optional[int] = None) -> TSystemData:
    """Band Hankel determinants H_{a,n} of the OSD coefficients, a = 0..N+1."""
    h = np.asarray(osd.coeffs, dtype=complex)
    N = sd.matrix.shape[0]
    if det_m is None:
        det_m = complex(np.linalg.det(sd.matrix))
    if n_max is None:
        n_max = len(h) - N - 1
    if n_max < 0 or n_max + N > len(h) - 1:
        raise NotEnoughData(f"need h_0..h_{n_max + N}, have {len(h)} coefficients")
    dets = np.array([[band_determinant(h, a, n) for n in range(n_max + 1)]
                     for a in range(N + 2)])
    xi = dets[N] / det_m ** np.arange(n_max + 1) - 1.0
    rank_polys = []
    S = np.full((N + 1, n_max + 1), np.nan, dtype=complex)
    lams = np.repeat(sd.distinct_eigenvalues, sd.multiplicities)
    for a in range(N + 1):
        Lam = np.array([np.prod(lams[list(J)]) for J in combinations(range(N), a)])
        E = CharPoly.from_eigenvalues(Lam).coeffs
        rank_polys.append(E)
        R = len(E) - 1
        sgn = (-1.0) ** np.arange(R + 1)
        for n in range(R, n_max + 1):
            S[a, n] = np.sum(sgn * E * dets[a, n - np.arange(R + 1)])
    return TSystemData(dets=dets, top_deviation=xi, source_terms=S, rank_polys=rank_polys)


# ---------------------------------------------------------------- phases


@dataclass(frozen=True, eq=False)
class PhaseTrack:
    samples: np.ndarray
    unwrapped_args: np.ndarray
    total_winding: float
    params: Optional[np.ndarray] = None


def phase_track(values, params=None) -> PhaseTrack:
    """Unwrap arg along ordered samples; the start sample fixes the branch."""
    v = np.asarray(values, dtype=complex)
    if np.any(np.abs(v) == 0):
        raise ZeroCrossing("a sample is exactly zero; refine the path")
    u = np.unwrap(np.angle(v))
    return PhaseTrack(v, u, float((u[-1] - u[0]) / (2 * np.pi)),
                      None if params is None else np.asarray(params))


def _wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def winding_scan(f: Callable, path: Sequence[float], max_refine: int = 20,
                 max_step: float = np.pi / 2) -> PhaseTrack:
    """Phase track of f along path, bisecting until every step < max_step.

    A step is accepted only when its midpoint confirms it: both half steps
    are below max_step and add up to the full step. This catches steps whose
    endpoints agree modulo 2 pi, e.g. a single full loop.
    """
    path = [float(t) for t in path]
    vals = [complex(f(t)) for t in path]
    ts, vs = [path[0]], [vals[0]]
    for (ta, va), (tb, vb) in zip(zip(path, vals), zip(path[1:], vals[1:])):
        stack = [(ta, va, tb, vb, 0)]
        while stack:
            a, fa, b, fb, depth = stack.pop()
            if fa == 0 or fb == 0:
                raise ZeroCrossing(f"f vanishes near parameter {a if fa == 0 else b}")
            c = 0.5 * (a + b)
            fc = complex(f(c))
            if fc == 0:
                raise ZeroCrossing(f"f vanishes near parameter {c}")
            d = _wrap(np.angle(fb) - np.angle(fa))
            d1 = _wrap(np.angle(fc) - np.angle(fa))
            d2 = _wrap(np.angle(fb) - np.angle(fc))
            if abs(d1) < max_step and abs(d2) < max_step and abs(d1 + d2 - d) < 1e-9:
                ts += [c, b]
                vs += [fc, fb]
                continue
            if depth >= max_refine:
                raise RefinementExhausted(f"phase step unresolved on [{a}, {b}]")
            # right half is popped after the left one
            stack.append((c, fc, b, fb, depth + 1))
            stack.append((a, fa, c, fc, depth + 1))
    return phase_track(vs, ts)


def concatenate_tracks(*tracks: PhaseTrack) -> float:
    return float(sum(t.total_winding for t in tracks))


@dataclass(frozen=True, eq=False)
class OsdBranchTrack:
    """Branch-continued OSD along a path: log h = -sum_j c_j L_j + rational."""

    track: PhaseTrack
    eigenvalues: np.ndarray   # (n_points, K) tracked
    dressing: np.ndarray      # (n_points, K) first-order coefficients
    log_h: np.ndarray


def _osd_parts(sd, d, z):
    lam = sd.distinct_eigenvalues
    ent = _ep_entries(d)
    w = 1.0 - lam * z
    if np.any(np.abs(w) < 1e-14):
        raise PoleAtEvaluation(f"z={z} hits a pole")
    c1 = np.array([c[0] for c in ent])
    rational = 0j
    for wj, c in zip(w, ent):
        for mm in range(2, len(c) + 1):
            rational += c[mm - 1] / (mm - 1) * (wj ** (-(mm - 1)) - 1.0)
    return c1, np.log(w), rational


def osd_branch_tracks(monodromy_at: Callable, observables: Sequence, z_ref: complex,
                      path: Sequence[float], max_refine: int = 20,
                      cluster_tol: float = 1e-7) -> list:
    """Visible OSD phases along a parameter path by analytic continuation.

    Each factor log(1 - lambda_j z) is continued along its tracked
    eigenvalue, so a closed path returns the dressed winding
    sum_j Re(c_j) n_j rather than the winding of the single-valued
    principal product. A step is bisected until every branch log and every
    channel phase moves by less than pi/2 and the eigenvalue matching is
    unambiguous. One track is returned per observable.
    """
    Os = [np.asarray(getattr(o, "matrix", o), dtype=complex) for o in observables]

    def point(t):
        sd = spectral_decompose(monodromy_at(t), cluster_tol)
        parts = [_osd_parts(sd, dressing(sd, O), z_ref) for O in Os]
        L = parts[0][1]
        return (sd.distinct_eigenvalues, L, np.array([p[0] for p in parts]),
                np.array([p[2] for p in parts]))

    path = [float(t) for t in path]
    lam0, L0, c0, r0 = point(path[0])
    params, lams, cs = [path[0]], [lam0], [c0]
    logs = [-(c0 * L0[None, :]).sum(1) + r0]
    cur = (lam0, L0)
    todo = [(path[i], path[i + 1], 0) for i in range(len(path) - 1)][::-1]
    while todo:
        a, b, depth = todo.pop()
        lam, Lp, c, r = point(b)
        lam_prev, L_prev = cur
        if len(lam) != len(lam_prev):
            bad = True
        else:
            _, col = linear_sum_assignment(np.abs(lam_prev[:, None] - lam[None, :]))
            lam, Lp, c = lam[col], Lp[col], c[:, col]
            # continue each branch to the representative nearest the previous one
            L = Lp + 2j * np.pi * np.round((L_prev.imag - Lp.imag) / (2 * np.pi))
            logh = -(c * L[None, :]).sum(1) + r
            dist = np.abs(lam_prev[:, None] - lam_prev[None, :])
            sep = dist[np.triu_indices(len(lam_prev), 1)].min() if len(lam_prev) > 1 else np.inf
            bad = (np.abs(L.imag - L_prev.imag).max() >= np.pi / 2
                   or np.abs(logh.imag - logs[-1].imag).max() >= np.pi / 2
                   or np.abs(lam - lam_prev).max() > 0.5 * sep)
        if bad:
            if depth >= max_refine:
                raise RefinementExhausted(f"OSD branch step unresolved on [{a}, {b}]")
            mid = 0.5 * (a + b)
            todo.append((mid, b, depth + 1))
            todo.append((a, mid, depth + 1))
            continue
        cur = (lam, L)
        params.append(b)
        lams.append(lam)
        cs.append(c)
        logs.append(logh)
    logs = np.array(logs)      # (n_points, n_obs)
    cs = np.array(cs)          # (n_points, n_obs, K)
    lams = np.array(lams)
    out = []
    for k in range(len(Os)):
        lg = logs[:, k]
        samples = np.exp(lg)
        # the continuous phase is anchored at the principal arg of the first sample
        args = lg.imag - lg[0].imag + np.angle(samples[0])
        track = PhaseTrack(samples, args, float((args[-1] - args[0]) / (2 * np.pi)),
                           np.array(params))
        out.append(OsdBranchTrack(track, lams, cs[:, k], lg))
    return out


def osd_branch_track(monodromy_at: Callable, observable, z_ref: complex,
                     path: Sequence[float], **kw) -> OsdBranchTrack:
    return osd_branch_tracks(monodromy_at, [observable], z_ref, path, **kw)[0]
