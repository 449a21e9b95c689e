"""Propagators, monodromy matrices and their spectral (Jordan) structure.

Conventions
-----------
* Time ordering puts later times on the left: U(t2, t0) = U(t2, t1) U(t1, t0).
* Clustering of eigenvalues uses the relative distance |l_i - l_j| / max|l|.
* Quasienergies follow lambda = exp(i eps) on the principal branch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    AmbiguousClustering,
    IllConditionedInverse,
    InvalidHamiltonian,
    InvalidInterval,
)

CLUSTER_TOL = 1e-7
EP_TOL = 1e-7
DEFAULT_STEPS = 4096

# two-exponential commutator-free scheme on Gauss-Legendre nodes (4th order)
_GL_C = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)
_CF_A = ((3.0 - 2.0 * np.sqrt(3.0)) / 12.0, (3.0 + 2.0 * np.sqrt(3.0)) / 12.0)


@dataclass(frozen=True, eq=False)
class PeriodicHamiltonian:
    """T-periodic complex generator, either piecewise constant or sampled.

    Use :meth:`piecewise` or :meth:`sampled` rather than the raw constructor.
    ``scheme`` selects the sampled-form integrator: ``"cf4"`` (default,
    fourth order, two exponentials per step) or ``"midpoint"``.
    """

    dim: int
    period: float
    segments: Optional[tuple] = None
    sampler: Optional[Callable] = None
    steps_per_period: int = DEFAULT_STEPS
    vectorized: bool = False
    scheme: str = "cf4"

    @classmethod
    def piecewise(cls, segments: Sequence, period: Optional[float] = None):
        """Build from ``[(generator, duration), ...]`` in chronological order."""
        segs = []
        for gen, dur in segments:
            g = np.array(gen, dtype=complex)
            if g.ndim != 2 or g.shape[0] != g.shape[1]:
                raise InvalidHamiltonian("generator must be a square matrix")
            if not np.all(np.isfinite(g)):
                raise InvalidHamiltonian("non-finite generator entries")
            if not dur > 0:
                raise InvalidHamiltonian("segment durations must be positive")
            g.setflags(write=False)
            segs.append((g, float(dur)))
        if not segs:
            raise InvalidHamiltonian("at least one segment is required")
        n = segs[0][0].shape[0]
        if any(g.shape != (n, n) for g, _ in segs):
            raise InvalidHamiltonian("all generators must share one shape")
        total = sum(d for _, d in segs)
        if period is None:
            period = total
        if abs(total - period) > 1e-12 * period:
            raise InvalidHamiltonian(
                f"durations sum to {total}, expected period {period}")
        return cls(dim=n, period=float(period), segments=tuple(segs))

    @classmethod
    def sampled(cls, sampler: Callable, period: float, dim: int,
                steps_per_period: int = DEFAULT_STEPS, vectorized: bool = False,
                scheme: str = "cf4"):
        """Build from ``sampler(t) -> (dim, dim)`` matrix.

        With ``vectorized=True`` the sampler must accept a 1d array of times
        and return an array of shape ``(len(t), dim, dim)``.
        """
        if period <= 0 or steps_per_period < 1:
            raise InvalidHamiltonian("period and steps_per_period must be positive")
        if scheme not in ("cf4", "midpoint"):
            raise InvalidHamiltonian(f"unknown scheme {scheme!r}")
        return cls(dim=int(dim), period=float(period), sampler=sampler,
                   steps_per_period=int(steps_per_period),
                   vectorized=vectorized, scheme=scheme)

    @property
    def is_piecewise(self) -> bool:
        return self.segments is not None

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    def generator(self, t):
        """H(t) for scalar t, or a stack for an array of times."""
        ts = np.atleast_1d(np.asarray(t, dtype=float)) % self.period
        if self.is_piecewise:
            edges = np.cumsum([0.0] + [d for _, d in self.segments])
            idx = np.clip(np.searchsorted(edges, ts, side="right") - 1,
                          0, len(self.segments) - 1)
            out = np.stack([self.segments[i][0] for i in idx])
        elif self.vectorized:
            out = np.asarray(self.sampler(ts), dtype=complex)
        else:
            out = np.stack([np.asarray(self.sampler(s), dtype=complex) for s in ts])
        if out.shape[1:] != (self.dim, self.dim):
            raise InvalidHamiltonian(f"sampler returned shape {out.shape[1:]}")
        if not np.all(np.isfinite(out)):
            raise InvalidHamiltonian("non-finite generator entries")
        return out[0] if np.ndim(t) == 0 else out


@dataclass(frozen=True, eq=False)
class Propagator:
    matrix: np.ndarray
    t_start: float
    t_end: float
    source: Optional[PeriodicHamiltonian] = None


@dataclass(frozen=True, eq=False)
class MonodromyMatrix:
    """One-period evolution operator M = U(T, 0)."""

    matrix: np.ndarray
    dim: int
    det_value: complex
    period: Optional[float] = None

    @classmethod
    def from_matrix(cls, m, period: Optional[float] = None) -> "MonodromyMatrix":
        m = np.array(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("monodromy must be square")
        det = complex(np.linalg.det(m))
        if not abs(det) > 0:
            raise IllConditionedInverse("monodromy matrix is singular")
        m.setflags(write=False)
        return cls(matrix=m, dim=m.shape[0], det_value=det, period=period)

    def effective_hamiltonian(self, period: Optional[float] = None) -> np.ndarray:
        """H_eff = (i/T) log M on the principal branch."""
        T = period if period is not None else self.period
        if T is None:
            raise ValueError("a period is needed for the effective Hamiltonian")
        return 1j / T * sla.logm(self.matrix)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    distinct_eigenvalues: np.ndarray
    multiplicities: tuple
    projectors: tuple
    nilpotents: tuple
    classification: str
    quasienergies: np.ndarray
    eigvec_condition: float
    cluster_tolerance: float
    matrix: np.ndarray = field(repr=False, default=None)

    @property
    def K(self) -> int:
        return len(self.multiplicities)

    def reconstruct(self) -> np.ndarray:
        return sum(l * p + n for l, p, n in
                   zip(self.distinct_eigenvalues, self.projectors, self.nilpotents))


@dataclass(frozen=True, eq=False)
class SlReduction:
    central_factor: complex
    normalized_matrix: np.ndarray


def _as_matrix(m) -> np.ndarray:
    return m.matrix if isinstance(m, MonodromyMatrix) else np.asarray(m, dtype=complex)


def _tree_product(mats: np.ndarray) -> np.ndarray:
    """Ordered product mats[-1] @ ... @ mats[0] by pairwise reduction."""
    while mats.shape[0] > 1:
        odd = None
        if mats.shape[0] % 2:
            odd, mats = mats[-1], mats[:-1]
        mats = mats[1::2] @ mats[0::2]
        if odd is not None:
            mats = np.concatenate([mats, odd[None]])
    return mats[0]


def _sampled_steps(h: PeriodicHamiltonian, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dt = (b - a)[:, None, None]
    if h.scheme == "midpoint":
        H = h.generator(0.5 * (a + b))
        return sla.expm(-1j * dt * H)
    H1 = h.generator(a + _GL_C[0] * (b - a))
    H2 = h.generator(a + _GL_C[1] * (b - a))
    a1, a2 = _CF_A
    first = sla.expm(-1j * dt * (a2 * H1 + a1 * H2))
    second = sla.expm(-1j * dt * (a1 * H1 + a2 * H2))
    return second @ first


def _sampled_intervals(h: PeriodicHamiltonian, t0: float, t1: float):
    dt = h.period / h.steps_per_period
    k0 = int(np.floor(t0 / dt + 1e-9))
    k1 = int(np.ceil(t1 / dt - 1e-9))
    grid = np.arange(k0, k1 + 1) * dt
    pts = np.concatenate([[t0], grid[(grid > t0 + 1e-12 * h.period)
                                     & (grid < t1 - 1e-12 * h.period)], [t1]])
    return pts[:-1], pts[1:]


def _propagate_within(h: PeriodicHamiltonian, t0: float, t1: float) -> np.ndarray:
    n = h.dim
    if t1 - t0 <= 0:
        return np.eye(n, dtype=complex)
    if h.is_piecewise:
        out = np.eye(n, dtype=complex)
        start = 0.0
        for gen, dur in h.segments:
            lo, hi = max(start, t0), min(start + dur, t1)
            if hi > lo:
                out = sla.expm(-1j * (hi - lo) * gen) @ out
            start += dur
        return out
    a, b = _sampled_intervals(h, t0, t1)
    return _tree_product(_sampled_steps(h, a, b))


def propagate(h: PeriodicHamiltonian, t0: float, t1: float) -> Propagator:
    """Time-ordered propagator U(t1, t0).

    Windows extending past one period are composed through periodicity
    U(t + T, T) = U(t, 0).
    """
    T = h.period
    if t1 < t0:
        raise InvalidInterval(f"t1={t1} < t0={t0}")
    if t0 < 0 or t0 > T * (1 + 1e-12):
        raise InvalidInterval(f"t0={t0} outside [0, T]")
    t0 = min(t0, T)
    if t1 <= T * (1 + 1e-12):
        u = _propagate_within(h, t0, min(t1, T))
    else:
        k = int(np.floor(t1 / T))
        rest = t1 - k * T
        m = _propagate_within(h, 0.0, T)
        u = _propagate_within(h, t0, T)
        u = np.linalg.matrix_power(m, k - 1) @ u
        u = _propagate_within(h, 0.0, rest) @ u
    if not abs(np.linalg.det(u)) > 1e-300:
        raise IllConditionedInverse("propagator numerically singular")
    return Propagator(matrix=u, t_start=float(t0), t_end=float(t1), source=h)


def propagator_grid(h: PeriodicHamiltonian, times: Sequence[float]) -> np.ndarray:
    """Stack of U(t_i, 0) for ascending times in [0, T], built incrementally."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise InvalidInterval("times must be ascending")
    out = np.empty((len(times), h.dim, h.dim), dtype=complex)
    u = np.eye(h.dim, dtype=complex)
    prev = 0.0
    for i, t in enumerate(times):
        if t < 0 or t > h.period * (1 + 1e-12):
            raise InvalidInterval(f"t={t} outside [0, T]")
        u = _propagate_within(h, prev, t) @ u
        out[i] = u
        prev = t
    return out


def monodromy(h: PeriodicHamiltonian) -> MonodromyMatrix:
    return MonodromyMatrix.from_matrix(propagate(h, 0.0, h.period).matrix,
                                       period=h.period)


def time_shifted_monodromy(h: PeriodicHamiltonian, t: float) -> MonodromyMatrix:
    """M_t = U(t, 0) M U(t, 0)^-1."""
    if not 0 <= t < h.period:
        raise InvalidInterval(f"t={t} outside [0, T)")
    u = propagate(h, 0.0, t).matrix
    m = monodromy(h).matrix
    return MonodromyMatrix.from_matrix(u @ m @ np.linalg.inv(u), period=h.period)


def _cluster(w: np.ndarray, tol: float):
    """Single-linkage grouping of eigenvalues at relative distance < tol."""
    scale = max(np.max(np.abs(w)), 1e-300)
    n = len(w)
    labels = -np.ones(n, dtype=int)
    dist = np.abs(w[:, None] - w[None, :]) / scale
    c = 0
    for i in range(n):
        if labels[i] >= 0:
            continue
        stack = [i]
        labels[i] = c
        while stack:
            k = stack.pop()
            for j in np.nonzero((dist[k] < tol) & (labels < 0))[0]:
                labels[j] = c
                stack.append(j)
        c += 1
    groups = [np.nonzero(labels == k)[0] for k in range(c)]
    # spread inside a cluster beyond tol is only acceptable when the cluster
    # is well separated from every other one
    for k, g in enumerate(groups):
        spread = dist[np.ix_(g, g)].max()
        if spread <= tol or len(groups) == 1:
            continue
        others = np.concatenate([h for kk, h in enumerate(groups) if kk != k])
        sep = dist[np.ix_(g, others)].min()
        if sep < 10 * tol:
            raise AmbiguousClustering(
                f"cluster spread {spread:.3g} with separation {sep:.3g}; "
                "adjust cluster_tol")
    return groups


def _spectral_projector(m: np.ndarray, select: Callable, d: int) -> np.ndarray:
    n = m.shape[0]
    if d == n:
        return np.eye(n, dtype=complex)
    T, Z, sdim = sla.schur(m, output="complex", sort=select)
    if sdim != d:
        raise AmbiguousClustering(f"Schur reordering selected {sdim} of {d} eigenvalues")
    T11, T12, T22 = T[:d, :d], T[:d, d:], T[d:, d:]
    # T11 R - R T22 = -T12 block-diagonalizes the triangular form
    R = sla.solve_sylvester(T11, -T22, -T12)
    PT = np.zeros((n, n), dtype=complex)
    PT[:d, :d] = np.eye(d)
    PT[:d, d:] = -R
    return Z @ PT @ Z.conj().T


def spectral_decompose(m, cluster_tol: float = CLUSTER_TOL,
                       ep_tol: float = EP_TOL) -> SpectralDecomposition:
    """Spectral (Jordan) decomposition M = sum_j (lambda_j P_j + N_j)."""
    a = _as_matrix(m)
    n = a.shape[0]
    w = np.linalg.eigvals(a)
    groups = _cluster(w, cluster_tol)
    centers = np.array([w[g].mean() for g in groups])
    eye = np.eye(n, dtype=complex)
    lams, mults, projs, nils = [], [], [], []
    for j, g in enumerate(groups):
        d = len(g)
        if len(groups) == 1:
            P = eye.copy()
        else:
            P = _spectral_projector(
                a, lambda x, j=j: int(np.argmin(np.abs(x - centers))) == j, d)
        lam = np.trace(a @ P) / d
        lams.append(lam)
        mults.append(d)
        projs.append(P)
        nils.append((a - lam * eye) @ P)
    a_norm = np.linalg.norm(a, 2)
    is_ep = any(np.linalg.norm(N, 2) > ep_tol * a_norm for N in nils)
    if is_ep:
        cls = "EP"
    elif len(groups) < n:
        cls = "DP"
    else:
        cls = "SS"
    lams = np.array(lams, dtype=complex)
    kappa = np.inf if is_ep else _eigvec_condition(a)
    return SpectralDecomposition(
        distinct_eigenvalues=lams,
        multiplicities=tuple(mults),
        projectors=tuple(projs),
        nilpotents=tuple(nils),
        classification=cls,
        quasienergies=-1j * np.log(lams),
        eigvec_condition=kappa,
        cluster_tolerance=cluster_tol,
        matrix=a,
    )


def _eigvec_condition(a: np.ndarray) -> float:
    _, U = np.linalg.eig(a)
    s = np.linalg.svd(U, compute_uv=False)
    if s[-1] <= 1e-14 * s[0]:
        return np.inf
    return float(s[0] / s[-1])


def sl_reduce(m) -> SlReduction:
    a = _as_matrix(m)
    n = a.shape[0]
    det = complex(np.linalg.det(a))
    g0 = abs(det) ** (1.0 / n) * np.exp(1j * np.angle(det) / n)
    return SlReduction(central_factor=complex(g0), normalized_matrix=a / g0)


def spectral_diagnostics(m) -> tuple:
    """(min_gap, condition) over the raw eigenvalue list."""
    a = _as_matrix(m)
    w = np.linalg.eigvals(a)
    d = np.abs(w[:, None] - w[None, :])
    iu = np.triu_indices(len(w), 1)
    gap = float(d[iu].min()) if len(iu[0]) else 0.0
    return gap, _eigvec_condition(a)
