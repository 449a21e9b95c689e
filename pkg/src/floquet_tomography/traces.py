"""Observable trace sequences (OTS) and their Liouville-space form.

Vectorization is row-major, vec(X)[i*N + j] = X[i, j], so that
vec(M X M^-1) = kron(M, M^-T) vec(X). The Liouville pairing is the bilinear
form <<A|B>> = Tr(A B).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import DimMismatch, IllConditionedInverse
from .monodromy import (
    MonodromyMatrix,
    PeriodicHamiltonian,
    SpectralDecomposition,
    monodromy,
    propagate,
)

ORDINARY = "Ordinary"
FUNDAMENTAL = "Fundamental"
ADJOINT = "Adjoint"
TIME_SHIFTED = "TimeShifted"
KINDS = (ORDINARY, FUNDAMENTAL, ADJOINT, TIME_SHIFTED)


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray
    label: str = "O"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimMismatch("observable must be square")
        if not np.any(m):
            raise ValueError("observable must be non-zero")
        object.__setattr__(self, "matrix", m)

    @property
    def hermitian_flag(self) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T))


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    matrix: np.ndarray
    label: str = "Omega"


@dataclass(frozen=True, eq=False)
class TraceSequence:
    values: np.ndarray
    kind: str = ORDINARY
    observable_label: str = "O"
    boundary_label: Optional[str] = None
    time_offset: float = 0.0
    dim_hint: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(v)):
            raise ValueError("trace sequence values must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def n_max(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True, eq=False)
class DressingCoefficients:
    """SS/DP: ``entries[j]`` is a scalar. EP: ``entries[j]`` is an array of
    length d_j holding c_{j,1..d_j}."""

    mode: str
    entries: tuple

    def first_order(self) -> np.ndarray:
        if self.mode == "EP":
            return np.array([e[0] for e in self.entries])
        return np.asarray(self.entries, dtype=complex)


@dataclass(frozen=True, eq=False)
class AdjointSuperoperator:
    matrix: np.ndarray
    dim: int


def _mat(x) -> np.ndarray:
    if isinstance(x, (Observable, BoundaryOperator, MonodromyMatrix)):
        return np.asarray(x.matrix, dtype=complex)
    return np.asarray(x, dtype=complex)


def _label(x, default):
    return getattr(x, "label", default)


def _check(*mats):
    n = mats[0].shape[0]
    for a in mats:
        if a.shape != (n, n):
            raise DimMismatch(f"shapes {[b.shape for b in mats]} do not match")
    return n


def vec(x) -> np.ndarray:
    return np.asarray(x).reshape(-1)


def unvec(v, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n)


def liouville_pairing(a, b) -> complex:
    """<<A|B>> = Tr(A B), evaluated without forming products."""
    return complex(np.sum(np.asarray(a).T * np.asarray(b)))


def ordinary_ots(o, m, n_max: int) -> TraceSequence:
    """zeta_n = Tr(O M^n) for n = 0..n_max by one running power."""
    O, M = _mat(o), _mat(m)
    n = _check(O, M)
    out = np.empty(n_max + 1, dtype=complex)
    X = O.copy()
    for k in range(n_max + 1):
        out[k] = np.trace(X)
        X = X @ M
    return TraceSequence(out, ORDINARY, _label(o, "O"), dim_hint=n)


def fundamental_ots(o, m, w, n_max: int) -> TraceSequence:
    """zeta_n = Tr(O M^n Omega)."""
    O, M, W = _mat(o), _mat(m), _mat(w)
    n = _check(O, M, W)
    out = np.empty(n_max + 1, dtype=complex)
    R = W.copy()
    for k in range(n_max + 1):
        out[k] = liouville_pairing(O, R)
        R = M @ R
    return TraceSequence(out, FUNDAMENTAL, _label(o, "O"), _label(w, "Omega"), dim_hint=n)


def _check_invertible(M: np.ndarray):
    n = M.shape[0]
    norm = np.linalg.norm(M, 2)
    if abs(np.linalg.det(M)) < 1e-12 * norm ** n:
        raise IllConditionedInverse("monodromy too close to singular for M^-1")


def adjoint_ots(o, m, w, n_max: int) -> TraceSequence:
    """zeta_n = Tr(O M^n Omega M^-n) via Omega_{n+1} = M Omega_n M^-1."""
    O, M, W = _mat(o), _mat(m), _mat(w)
    n = _check(O, M, W)
    _check_invertible(M)
    out = np.empty(n_max + 1, dtype=complex)
    R = W.copy()
    for k in range(n_max + 1):
        out[k] = liouville_pairing(O, R)
        # R M^-1 as a solve against M^T
        R = np.linalg.solve(M.T, (M @ R).T).T
    return TraceSequence(out, ADJOINT, _label(o, "O"), _label(w, "Omega"), dim_hint=n)


def conjugated_observable(o, u) -> np.ndarray:
    """O(t) = U^-1 O U."""
    U = _mat(u)
    return np.linalg.solve(U, _mat(o) @ U)


def time_shifted_ots(o, h: PeriodicHamiltonian, t: float, n_max: int,
                     m: Optional[MonodromyMatrix] = None) -> TraceSequence:
    """zeta_{n,t} = Tr(O(t) M^n), O(t) = U(t,0)^-1 O U(t,0)."""
    from .errors import InvalidInterval

    if not 0 <= t < h.period:
        raise InvalidInterval(f"t={t} outside [0, T)")
    U = propagate(h, 0.0, t).matrix
    M = monodromy(h) if m is None else m
    seq = ordinary_ots(conjugated_observable(o, U), M, n_max)
    return TraceSequence(seq.values, TIME_SHIFTED, _label(o, "O"),
                         time_offset=float(t), dim_hint=h.dim)


def dressing(sd: SpectralDecomposition, o) -> DressingCoefficients:
    """Observable dressing: Tr(O P_j) plus the nilpotent corrections at EPs."""
    O = _mat(o)
    if sd.classification != "EP":
        return DressingCoefficients(sd.classification,
                                    tuple(complex(np.trace(O @ P)) for P in sd.projectors))
    entries = []
    for lam, d, P, N in zip(sd.distinct_eigenvalues, sd.multiplicities,
                            sd.projectors, sd.nilpotents):
        tr_on = [complex(np.trace(O @ P))]
        Nk = np.eye(sd.matrix.shape[0], dtype=complex)
        for _ in range(1, d):
            Nk = Nk @ N
            tr_on.append(complex(np.trace(O @ Nk)))
        c = np.zeros(d, dtype=complex)
        c[0] = tr_on[0]
        for mm in range(2, d + 1):
            c[mm - 1] = sum((-1) ** (k - mm + 1) * comb(k - 1, mm - 2)
                            * tr_on[k] * lam ** (-k) for k in range(mm - 1, d))
        entries.append(c)
    return DressingCoefficients("EP", tuple(entries))


def ots_oracle(sd: SpectralDecomposition, o, n_max: int) -> TraceSequence:
    """Closed-form OTS from the spectral data and the dressing."""
    d = dressing(sd, o)
    ns = np.arange(n_max + 1)
    out = np.zeros(n_max + 1, dtype=complex)
    for lam, c in zip(sd.distinct_eigenvalues, d.entries):
        pw = lam ** ns
        cs = np.atleast_1d(c)
        for mm, cm in enumerate(cs, start=1):
            binom = np.array([comb(n + mm - 2, mm - 1) if n + mm - 2 >= 0 else 0
                              for n in ns], dtype=float)
            if mm == 1:
                binom = np.ones_like(binom)
            out += cm * binom * pw
    return TraceSequence(out, ORDINARY, _label(o, "O"), dim_hint=sd.matrix.shape[0])


def adjoint_superoperator(m) -> AdjointSuperoperator:
    M = _mat(m)
    _check_invertible(M)
    Minv_T = np.linalg.inv(M).T
    return AdjointSuperoperator(np.kron(M, Minv_T), M.shape[0] ** 2)


def liouville_adjoint_ots(o, m, w, n_max: int) -> np.ndarray:
    """<<O| M_adj^n |Omega>> evaluated in Liouville space."""
    O, W = _mat(o), _mat(w)
    A = adjoint_superoperator(m).matrix
    bra = vec(O.T)  # <<O|X>> = Tr(O X) = vec(O^T) . vec(X)
    ket = vec(W).copy()
    out = np.empty(n_max + 1, dtype=complex)
    for k in range(n_max + 1):
        out[k] = bra @ ket
        ket = A @ ket
    return out


def matrix_ots(os: Sequence, m, ws: Optional[Sequence], n_max: int) -> np.ndarray:
    """Array of shape (n_max+1, L, R) with entries Tr(O_l M^n Omega_p).

    ``ws=None`` uses the single boundary operator Omega = I.
    """
    M = _mat(m)
    n = M.shape[0]
    Os = np.stack([_mat(x) for x in os])
    Ws = (np.eye(n, dtype=complex)[None] if ws is None
          else np.stack([_mat(x) for x in ws]))
    if Os.shape[1:] != (n, n) or Ws.shape[1:] != (n, n):
        raise DimMismatch("observables, boundaries and monodromy differ in shape")
    out = np.empty((n_max + 1, len(Os), len(Ws)), dtype=complex)
    R = Ws.copy()
    for k in range(n_max + 1):
        # Tr(O_l R_p) = sum_ij O_l[i,j] R_p[j,i]
        out[k] = np.einsum("lij,pji->lp", Os, R)
        R = M[None] @ R
    return out
