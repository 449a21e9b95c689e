"""Property suites over deterministic random corpora (dims 2..6, SS/DP/EP)."""
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from floquet_tomography.algebra import bicommutant_and_project, generate_algebra, symmetry_deficiency
from floquet_tomography.errors import SingularStencil
from floquet_tomography.monodromy import PeriodicHamiltonian, spectral_decompose
from floquet_tomography.reconstruct import (
    build_hankel,
    ch_residual,
    realize,
    reconstruct_scalar,
    schur_stencil,
)
from floquet_tomography.spectral import char_poly, ors_rational, osd_log, osd_series, tsystem
from floquet_tomography.traces import (
    adjoint_ots,
    dressing,
    liouville_adjoint_ots,
    matrix_ots,
    ordinary_ots,
)

from conftest import corpus, random_monodromy, random_op

CORPUS = corpus(7, 200)


def _multiset_err(a, b):
    _, col = linear_sum_assignment(np.abs(a[:, None] - b[None, :]))
    return np.abs(a - b[col]).max()


def test_ch_recurrence_corpus():
    r = np.random.default_rng(1)
    worst = 0.0
    for M, _, _ in CORPUS:
        n = len(M)
        z = ordinary_ots(random_op(r, n), M, 3 * n).values
        worst = max(worst, ch_residual(z, char_poly(M)))
    assert worst < 1e-10


def test_ors_series_corpus():
    r = np.random.default_rng(2)
    for M, _, _ in CORPUS[::4]:
        n = len(M)
        z = ordinary_ots(random_op(r, n), M, 2 * n + 1).values
        rat = ors_rational(z, char_poly(M))
        s = rat.series(2 * n)
        assert np.abs(s - z[1:2 * n + 1]).max() < 1e-8 * np.abs(z).max()


def test_osd_exp_log_corpus():
    r = np.random.default_rng(3)
    for M, _, kind in CORPUS[::5]:
        n = len(M)
        O = random_op(r, n)
        sd = spectral_decompose(M)
        d = dressing(sd, O)
        rho = np.abs(np.linalg.eigvals(M)).max()
        s = osd_series(ordinary_ots(O, M, 150), 150)
        for z in 0.25 / rho * np.exp(2j * np.pi * (np.arange(5) + 0.3) / 5):
            ref = s.eval(z)
            assert abs(np.exp(osd_log(sd, d, z)) - ref) < 1e-9 * max(1.0, abs(ref))


@pytest.mark.parametrize("kind", ["SS", "DP", "EP"])
def test_tsystem_corpus(kind):
    r = np.random.default_rng(4)
    for n in (2, 3, 4):
        M, _ = random_monodromy(r, n, kind)
        sd = spectral_decompose(M)
        ts = tsystem(osd_series(ordinary_ots(random_op(r, n), M, 16), 16), sd)
        H = ts.dets
        for a in range(1, n):
            for k in range(1, H.shape[1] - 1):
                scale = abs(H[a, k]) ** 2 + abs(H[a, k + 1] * H[a, k - 1]) + abs(H[a + 1, k] * H[a - 1, k])
                assert abs(ts.bilinear_residual(a, k)) < 1e-6 * max(scale, 1e-300)
        ti = tsystem(osd_series(ordinary_ots(np.eye(n), M, 16), 16), sd)
        assert np.abs(ti.top_deviation).max() < 1e-7
        for a, E in enumerate(ti.rank_polys):
            R = len(E) - 1
            for k in range(R, ti.dets.shape[1]):
                sc = np.sum(np.abs(E) * np.abs(ti.dets[a, k - np.arange(R + 1)]))
                assert abs(ti.source_terms[a, k]) < 1e-7 * max(sc, 1.0)


def test_adjoint_scale_and_liouville_corpus():
    r = np.random.default_rng(5)
    for M, _, _ in CORPUS[::7]:
        n = len(M)
        O, W = random_op(r, n), random_op(r, n)
        a = adjoint_ots(O, M, W, 10).values
        c = complex(*r.normal(size=2))
        b = adjoint_ots(O, c * M, W, 10).values
        assert np.abs(a - b).max() < 1e-9 * np.abs(a).max()
        li = liouville_adjoint_ots(O, M, W, 10)
        assert np.abs(a - li).max() < 1e-9 * np.abs(a).max()


def _rank_one_blocks(r, M, n_max):
    n = len(M)
    Os = [random_op(r, n) for _ in range(n)]
    w = r.normal(size=n) + 1j * r.normal(size=n)
    Ws = [np.outer(r.normal(size=n) + 1j * r.normal(size=n), w) for _ in range(n)]
    return matrix_ots(Os, M, Ws, n_max)


def test_realization_spectrum_corpus():
    r = np.random.default_rng(6)
    for M, _, _ in CORPUS[::3]:
        n = len(M)
        b = _rank_one_blocks(r, M, 2 * n + 2)
        rel = realize(b, n, n_set=range(n), window=n)
        w = np.linalg.eigvals(M)
        assert _multiset_err(rel.eigenvalues, w) < 1e-7 * np.abs(w).max()


def test_realization_preserves_jordan_dims():
    r = np.random.default_rng(8)
    for M, _, kind in CORPUS:
        if kind != "EP" or len(M) > 4:
            continue
        n = len(M)
        rel = realize(_rank_one_blocks(r, M, 2 * n + 2), n, n_set=range(n), window=n)
        sd = spectral_decompose(rel.matrix)
        assert sd.classification == "EP"
        assert sorted(sd.multiplicities) == sorted(spectral_decompose(M).multiplicities)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0.5, 1.5), st.floats(-np.pi, np.pi), st.floats(0.2, 2.0)),
                min_size=1, max_size=5))
def test_prony_roundtrip(modes):
    lam = np.array([m * np.exp(1j * t) for m, t, _ in modes])
    d = np.abs(lam[:, None] - lam[None, :])
    if len(lam) > 1 and d[np.triu_indices(len(lam), 1)].min() < 0.1:
        return
    c = np.array([x for _, _, x in modes])
    n = np.arange(2 * len(lam) + 3)
    z = (c[None] * lam[None] ** n[:, None]).sum(1)
    sk = reconstruct_scalar(z, len(lam) + 1)
    assert sk.order == len(lam)
    _, col = linear_sum_assignment(np.abs(lam[:, None] - sk.eigenvalues[None]))
    assert np.abs(sk.eigenvalues[col] - lam).max() < 1e-7
    assert np.abs(sk.dressing[col] - c).max() < 1e-7 * c.max()


def test_schur_stencil_corpus():
    r = np.random.default_rng(9)
    for M, _, _ in CORPUS[::6]:
        n = len(M)
        z = ordinary_ots(random_op(r, n), M, 3 * n + 4).values
        offs = tuple(sorted(r.choice(np.arange(1, 2 * n + 2), n, replace=False)))
        try:
            stc = schur_stencil(char_poly(M), offs)
        except SingularStencil:
            continue
        assert stc.residual(z) < 1e-7


def test_trace_invisibility_restricted():
    r = np.random.default_rng(10)
    for i in range(50):
        n = 3 + i % 3
        # restricted probes: block-diagonal on a random split, rotated by a unitary
        k = 1 + i % (n - 1)
        U = sla.qr(random_op(r, n))[0]
        gens = [U @ sla.block_diag(random_op(r, k), np.diag(r.normal(size=n - k))) @ U.conj().T]
        M = random_op(r, n)
        vs = bicommutant_and_project(gens, M)
        basis = generate_algebra(gens).algebra.members
        worst = max(abs(np.trace(s @ vs.delta_m)) for s in basis)
        assert worst < 1e-8 * np.linalg.norm(M)


def test_block_symmetry_deficiency_property():
    r = np.random.default_rng(11)
    for n1, n2 in ((2, 1), (2, 2), (3, 2)):
        H = sla.block_diag(random_op(r, n1), random_op(r, n2))
        h = PeriodicHamiltonian.piecewise([(H, 1.0)])
        O = sla.block_diag(random_op(r, n1), np.zeros((n2, n2)))
        Qsym = sla.block_diag(np.zeros((n1, n1)), np.eye(n2))
        rep = symmetry_deficiency(h, [O], [Qsym], 4)
        rec = rep["candidates"][0]
        assert rec["is_symmetry"] and rec["in_commutant"]
        assert rec["deficiency"] >= n2 * n2
