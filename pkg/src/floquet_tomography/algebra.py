"""Operator algebras generated by observables, commutants, visible
projections and basis-resolved reconstruction of the monodromy.

Frobenius inner product <A, B>_F = Tr(A^H B). Observable families sampled in
time are stacked as rows vec(X^T) so that K0 @ vec(P) = Tr(X P) with the
row-major vec of :mod:`traces`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    AmbiguousClustering,
    JordanDetectionAmbiguous,
    PartialVisibility,
)
from .monodromy import (
    CLUSTER_TOL,
    PeriodicHamiltonian,
    SpectralDecomposition,
    monodromy,
    propagator_grid,
    spectral_decompose,
    _as_matrix,
)

GS_TOL = 1e-10
RANK_TOL = 1e-8
PINV_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    dim: int
    members: np.ndarray  # (k, N, N), Frobenius-orthonormal

    @property
    def span_dim(self) -> int:
        return len(self.members)

    def flat(self) -> np.ndarray:
        return self.members.reshape(len(self.members), -1)

    def project(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=complex)
        if self.span_dim == 0:
            return np.zeros_like(X)
        c = self.flat().conj() @ X.reshape(-1)
        return (c @ self.flat()).reshape(X.shape)

    def contains(self, x, tol: float = 1e-8) -> bool:
        X = np.asarray(x, dtype=complex)
        nrm = np.linalg.norm(X)
        return bool(np.linalg.norm(X - self.project(X)) <= tol * max(nrm, 1e-300))


@dataclass(frozen=True, eq=False)
class ObservableAlgebra:
    generators: tuple
    algebra: OperatorBasis
    commutant: Optional[OperatorBasis] = None
    bicommutant: Optional[OperatorBasis] = None


def _gram_schmidt(basis: list, cands: np.ndarray, tol: float) -> list:
    """Extend orthonormal flat vectors ``basis`` by ``cands`` (rows)."""
    for v in cands:
        v = v.astype(complex)
        nrm0 = np.linalg.norm(v)
        if nrm0 == 0:
            continue
        for _ in range(2):  # re-orthogonalize once
            if basis:
                B = np.array(basis)
                v = v - (B.conj() @ v) @ B
        nrm = np.linalg.norm(v)
        if nrm > tol * nrm0 and nrm > tol:
            basis.append(v / nrm)
    return basis


def _mats(gens) -> np.ndarray:
    return np.stack([np.asarray(getattr(g, "matrix", g), dtype=complex) for g in gens])


def generate_algebra(gens, tol: float = GS_TOL) -> ObservableAlgebra:
    """Span of all words in gens and their adjoints, identity included.

    The span is closed under right multiplication by the generating set,
    which together with the identity yields every word.
    """
    G = _mats(gens)
    n = G.shape[1]
    G = np.concatenate([G, G.conj().transpose(0, 2, 1)])
    basis = _gram_schmidt([], np.eye(n, dtype=complex).reshape(1, -1), tol)
    basis = _gram_schmidt(basis, G.reshape(len(G), -1), tol)
    frontier = list(range(len(basis)))
    while frontier and len(basis) < n * n:
        start = len(basis)
        prods = np.einsum("kij,gjl->kgil",
                          np.array([basis[i] for i in frontier]).reshape(-1, n, n), G)
        basis = _gram_schmidt(basis, prods.reshape(-1, n * n), tol)
        frontier = list(range(start, len(basis)))
    return ObservableAlgebra(tuple(gens), OperatorBasis(n, np.array(basis).reshape(-1, n, n)))


def commutant(a: OperatorBasis, tol: float = 1e-9) -> OperatorBasis:
    """Null space of X -> [X, B_k] stacked over the basis."""
    n = a.dim
    eye = np.eye(n)
    # row-major vec: vec(X B) = kron(I, B^T) vec X, vec(B X) = kron(B, I) vec X
    blocks = [np.kron(eye, B.T) - np.kron(B, eye) for B in a.members]
    if not blocks:
        return OperatorBasis(n, np.eye(n * n, dtype=complex).reshape(-1, n, n))
    C = np.vstack(blocks)
    # null space of C equals that of C^H C, which is only N^2 x N^2
    G = C.conj().T @ C
    w, V = np.linalg.eigh(G)
    # members are Frobenius-normalized, so a nontrivial commutator map is O(1);
    # the floor keeps the scalar algebra (all maps ~0) from losing its null space
    scale = max(w[-1], 1.0)
    null = V[:, w < tol * scale]
    return OperatorBasis(n, null.T.reshape(-1, n, n))


@dataclass(frozen=True, eq=False)
class VisibleSplit:
    m_vis: np.ndarray
    delta_m: np.ndarray
    algebra: ObservableAlgebra
    delta_obs: int


def full_algebra(gens, tol: float = GS_TOL) -> ObservableAlgebra:
    alg = generate_algebra(gens, tol)
    c1 = commutant(alg.algebra)
    c2 = commutant(c1)
    return ObservableAlgebra(alg.generators, alg.algebra, c1, c2)


def bicommutant_and_project(gens, m) -> VisibleSplit:
    M = _as_matrix(m)
    alg = full_algebra(gens)
    m_vis = alg.bicommutant.project(M)
    n = M.shape[0]
    return VisibleSplit(m_vis, M - m_vis, alg, n * n - alg.bicommutant.span_dim)


def numerical_rank(a: np.ndarray, rel_tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


# ---------------------------------------------------------------- micromotion


@dataclass(frozen=True, eq=False)
class MicromotionFamily:
    slices: int
    times: np.ndarray
    observables: np.ndarray  # (L, Q, N, N)
    k0: np.ndarray           # (L*Q, N^2), ordered (l, q)
    d_obs: int
    propagators: np.ndarray  # U(t_q, 0)


def _conjugate_family(G: np.ndarray, U: np.ndarray) -> np.ndarray:
    """O_l(t_q) = U_q^-1 O_l U_q for all l, q."""
    Uinv = np.linalg.inv(U)
    return np.einsum("qij,ljk,qkm->lqim", Uinv, G, U)


def _k0(obs: np.ndarray) -> np.ndarray:
    L, Q, n, _ = obs.shape
    return obs.transpose(0, 1, 3, 2).reshape(L * Q, n * n)


def micromotion_family(h: PeriodicHamiltonian, gens, Q: int,
                       rank_tol: float = RANK_TOL) -> MicromotionFamily:
    if Q < 1:
        raise ValueError("Q must be >= 1")
    G = _mats(gens)
    times = h.period * np.arange(Q) / Q
    U = propagator_grid(h, times)
    obs = _conjugate_family(G, U)
    k0 = _k0(obs)
    return MicromotionFamily(Q, times, obs, k0, numerical_rank(k0, rank_tol), U)


def dobs_growth_scan(h: PeriodicHamiltonian, gens, Q_list: Sequence[int],
                     rank_tol: float = RANK_TOL) -> list:
    """[(Q, d_obs)] with one propagator sweep when every Q divides max(Q)."""
    Q_list = [int(q) for q in Q_list]
    if any(b < a for a, b in zip(Q_list, Q_list[1:])):
        raise ValueError("Q_list must be ascending")
    qmax = Q_list[-1]
    nested = all(qmax % q == 0 for q in Q_list)
    out = []
    if nested:
        fam = micromotion_family(h, gens, qmax, rank_tol)
        for q in Q_list:
            sub = fam.observables[:, ::qmax // q]
            out.append((q, numerical_rank(_k0(sub), rank_tol)))
        d = [x[1] for x in out]
        assert all(b >= a for a, b in zip(d, d[1:])), "d_obs must grow on nested grids"
    else:
        for q in Q_list:
            out.append((q, micromotion_family(h, gens, q, rank_tol).d_obs))
    return out


def symmetry_deficiency(h: PeriodicHamiltonian, gens, candidates, Q: int,
                        labels: Optional[Sequence[str]] = None, tol: float = 1e-8) -> dict:
    """Commutation of candidate symmetries with dynamics and observables.

    The extended algebra is generated by the sampled family O_l(t_q).
    """
    fam = micromotion_family(h, gens, Q)
    n = h.dim
    flat = fam.observables.reshape(-1, n, n)
    alg = full_algebra(list(flat))
    dim_bic = alg.bicommutant.span_dim
    U_all = np.concatenate([fam.propagators, monodromy(h).matrix[None]])
    G = _mats(gens)
    records = []
    labels = list(labels) if labels is not None else [f"Q{i}" for i in range(len(candidates))]
    for lab, q in zip(labels, candidates):
        Qm = np.asarray(q, dtype=complex)
        c = np.trace(Qm) / n
        if np.linalg.norm(Qm - c * np.eye(n)) <= tol * max(np.linalg.norm(Qm), 1e-300):
            records.append({"label": lab, "trivial": True, "comm_norm_dynamics": 0.0,
                            "comm_norm_observables": 0.0, "is_symmetry": False,
                            "in_commutant": True, "deficiency": None})
            continue
        scale = np.linalg.norm(Qm, 2)
        cd = max(np.linalg.norm(Qm @ u - u @ Qm, 2) / (scale * np.linalg.norm(u, 2))
                 for u in U_all)
        co = max(np.linalg.norm(Qm @ g - g @ Qm, 2) / (scale * max(np.linalg.norm(g, 2), 1e-300))
                 for g in G)
        is_sym = bool(cd < tol and co < tol)
        in_comm = alg.commutant.contains(Qm, 1e-6)
        if is_sym:
            assert in_comm, "a verified symmetry must lie in the commutant"
        records.append({"label": lab, "trivial": False, "comm_norm_dynamics": float(cd),
                        "comm_norm_observables": float(co), "is_symmetry": is_sym,
                        "in_commutant": bool(in_comm),
                        "deficiency": int(n * n - dim_bic) if is_sym else None})
    return {"candidates": records, "d_obs": int(fam.d_obs), "dim_bicommutant": int(dim_bic),
            "n_sq": n * n, "slices": Q, "sampled_family": True}


# ---------------------------------------------------------------- exact reconstruction


@dataclass(frozen=True, eq=False)
class ExactReconstruction:
    recovered_m: np.ndarray
    eigenvalues: np.ndarray
    multiplicities: tuple
    projectors: tuple
    nilpotent_powers: tuple  # per j: [N_j, N_j^2, ...]
    jordan_form: np.ndarray
    gauge: np.ndarray
    mode: str
    d_obs: int
    order: int
    singular_values: np.ndarray

    @property
    def nilpotents(self) -> tuple:
        n = self.recovered_m.shape[0]
        return tuple(p[0] if p else np.zeros((n, n), dtype=complex) for p in self.nilpotent_powers)


def _pinv_apply(K: np.ndarray, a: np.ndarray, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    U, s, Vh = np.linalg.svd(K, full_matrices=False)
    keep = s > cutoff * s[0]
    return Vh[keep].conj().T @ ((U[:, keep].conj().T @ a) / s[keep])


def exact_reconstruct(h: PeriodicHamiltonian, gens, Q: int, n_set: Optional[Sequence[int]] = None,
                      order: Optional[int] = None, mode_hint: Optional[str] = None,
                      cluster_tol: float = CLUSTER_TOL, rank_tol: float = RANK_TOL
                      ) -> ExactReconstruction:
    """Recover M elementwise from the micromotion-extended trace record.

    Hankel columns run k = 0..W (ascending) so that the right factor has
    entries binom(k, m-1) lambda^(k-m+1). The pencil V1 V0^+ from the
    shifted right singular vectors carries the Jordan structure; its
    projectors applied to the k = 0 column give the left factor columns.
    """
    n = h.dim
    fam = micromotion_family(h, gens, Q, rank_tol)
    if fam.d_obs < n * n:
        raise PartialVisibility(fam.d_obs, n * n)
    M = monodromy(h).matrix
    Wn = n if order is None else order
    n_set = tuple(range(Wn + 1)) if n_set is None else tuple(int(x) for x in n_set)
    if 0 not in n_set:
        raise ValueError("the row index set must contain n = 0")
    nmax = max(n_set) + Wn + 1
    X = fam.observables.reshape(-1, n, n)  # rows alpha = (l, q)
    # zeta[n, alpha] = Tr(X_alpha M^n)
    zeta = np.empty((nmax, len(X)), dtype=complex)
    P = np.eye(n, dtype=complex)
    for k in range(nmax):
        zeta[k] = np.einsum("aij,ji->a", X, P)
        P = P @ M
    H = np.vstack([np.column_stack([zeta[m + k] for k in range(Wn + 1)]) for m in n_set])
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    r = int(np.sum(s > rank_tol * s[0])) if order is None else order
    Ur, sr, Vr = U[:, :r], s[:r], Vh[:r]
    V0, V1 = Vr[:, :Wn], Vr[:, 1:Wn + 1]
    W = V1 @ np.linalg.pinv(V0)
    try:
        sdw = spectral_decompose(W, cluster_tol)
    except AmbiguousClustering as exc:
        raise JordanDetectionAmbiguous(str(exc)) from exc
    mode = "EP" if sdw.classification == "EP" else "SS"
    if mode_hint is not None and mode_hint != mode:
        raise JordanDetectionAmbiguous(f"pencil reads {mode}, hint was {mode_hint}")
    Y = (Ur * sr)[: len(X)]  # n = 0 rows of U Sigma
    v0 = Vr[:, 0]
    K0 = fam.k0
    lams, mults, projs, nilp, cols = [], [], [], [], []
    for lam, d, Pi, Nw in zip(sdw.distinct_eigenvalues, sdw.multiplicities,
                              sdw.projectors, sdw.nilpotents):
        g = Pi @ v0
        chain = [g]
        for _ in range(1, d):
            chain.append(Nw @ chain[-1])
        # vanishing chain members belong to semisimple clusters
        chain = [chain[0]] + [c for c in chain[1:]
                              if np.linalg.norm(c) > 1e-8 * np.linalg.norm(g)]
        mats = [_pinv_apply(K0, Y @ c).reshape(n, n) for c in chain]
        lams.append(lam)
        mults.append(d)
        projs.append(mats[0])
        nilp.append(mats[1:])
        cols.extend(chain)
    Ginv = np.column_stack(cols) if cols else np.zeros((r, 0))
    rec = sum(l * p for l, p in zip(lams, projs))
    rec = rec + sum(pw[0] for pw in nilp if pw)
    G = np.linalg.pinv(Ginv)
    J = G @ W @ Ginv
    return ExactReconstruction(rec, np.array(lams), tuple(mults), tuple(projs),
                               tuple(nilp), J, G, mode, fam.d_obs, r, s)


def ep_toy_hamiltonian(m, period: float = 1.0) -> PeriodicHamiltonian:
    """Single-segment generator with exp(-i T H) = m, H = (i/T) log m."""
    H = 1j / period * sla.logm(_as_matrix(m))
    return PeriodicHamiltonian.piecewise([(H, period)], period=period)
