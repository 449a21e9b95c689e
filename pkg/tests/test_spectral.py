import numpy as np
import pytest

from floquet_tomography.errors import DomainError, NotEnoughData, PoleAtEvaluation, ZeroCrossing
from floquet_tomography.monodromy import sl_reduce, spectral_decompose
from floquet_tomography.spectral import (
    CharPoly,
    char_poly,
    concatenate_tracks,
    odsd_eval,
    ors_rational,
    osd_eval,
    osd_log,
    osd_series,
    phase_track,
    polylog,
    stirling1_unsigned,
    tsystem,
    winding_scan,
)
from floquet_tomography.traces import dressing, ordinary_ots

from conftest import random_monodromy, random_op

D235 = np.diag([2.0, 3.0, 5.0])


def test_char_poly_examples(rng):
    assert np.allclose(char_poly(np.eye(3)).coeffs, [1, 3, 3, 1])
    assert np.allclose(char_poly(D235).coeffs, [1, 10, 31, 30])
    M, _ = random_monodromy(rng, 4, "SS")
    e = char_poly(sl_reduce(M).normalized_matrix).coeffs
    assert abs(e[-1] - 1) < 1e-9


def test_char_poly_roots_and_delta():
    cp = char_poly(D235)
    assert np.allclose(np.sort(cp.roots().real), [2, 3, 5])
    assert abs(cp.delta(0.5)) < 1e-12
    assert np.allclose(CharPoly.from_eigenvalues([2, 3, 5]).coeffs, cp.coeffs)


def test_osd_series_examples(rng):
    assert np.allclose(osd_series(np.zeros(6), 5).coeffs, [1, 0, 0, 0, 0, 0])
    h = osd_series(ordinary_ots(np.eye(3), D235, 8), 4).coeffs
    assert np.allclose(h, [1, 10, 69, 410, 2261])
    assert h[2] == 10 ** 2 - 31
    z = ordinary_ots(random_op(rng, 3), D235, 4)
    assert np.isclose(osd_series(z, 3).coeffs[1], z.values[1])
    with pytest.raises(NotEnoughData):
        osd_series(z, 9)


def test_osd_eval_examples():
    sd = spectral_decompose(D235)
    d = dressing(sd, np.eye(3))
    assert np.isclose(osd_eval(sd, d, 0.0), 1)
    cp = char_poly(D235)
    assert np.isclose(osd_eval(sd, d, 0.1), 1 / cp.delta(0.1))
    sd1 = spectral_decompose(np.diag([2.0]))
    assert np.isclose(osd_eval(sd1, dressing(sd1, np.eye(1)), 0.25), 2.0)
    with pytest.raises(PoleAtEvaluation):
        osd_eval(sd1, dressing(sd1, np.eye(1)), 0.5)


def test_osd_truncated_series():
    M = np.array([[2.0, 1.0], [0.0, 2.0]]) * 0.2
    O = np.array([[1.0, 0.0], [1.0, 1.0]])
    sd = spectral_decompose(M)
    s = osd_series(ordinary_ots(O, M, 80), 80)
    # frozen: exact value of the EP OSD at z = 0.7
    assert abs(osd_eval(sd, dressing(sd, O), 0.7) - 2.343047841884113) < 1e-12
    assert abs(s.eval(0.7) - 2.343047841884113) < 1e-8


@pytest.mark.parametrize("kind", ["SS", "DP", "EP"])
def test_osd_log_vs_series(rng, kind):
    M, _ = random_monodromy(rng, 3, kind)
    O = random_op(rng, 3)
    sd = spectral_decompose(M)
    d = dressing(sd, O)
    rmax = np.abs(np.linalg.eigvals(M)).max()
    s = osd_series(ordinary_ots(O, M, 120), 120)
    for z in 0.3 / rmax * np.exp(2j * np.pi * np.arange(5) / 5):
        assert abs(np.exp(osd_log(sd, d, z)) - s.eval(z)) < 1e-9 * max(1, abs(s.eval(z)))


def test_ors_examples():
    z = ordinary_ots(np.eye(3), D235, 10)
    cp = char_poly(D235)
    r = ors_rational(z, cp)
    assert np.allclose(r.numerator_coeffs, [10, -62, 90])
    assert np.allclose(r.series(7), z.values[1:8])
    # pole-zero cancellation when a mode is not dressed
    M = np.diag([2.0, 3.0])
    z2 = ordinary_ots(np.diag([0.0, 1.0]), M, 6)
    cp2 = char_poly(M)
    r2 = ors_rational(z2, cp2)
    num = np.polynomial.polynomial.polyval(0.5, r2.numerator_coeffs)
    assert abs(num) < 1e-12 and abs(cp2.delta(0.5)) < 1e-12
    zero = ors_rational(np.zeros(8), cp)
    assert np.allclose(zero.numerator_coeffs, 0)


def test_polylog_examples():
    assert polylog(0, 0.5) == pytest.approx(1.0)
    assert polylog(1, 0.5) == pytest.approx(np.log(2), abs=1e-7)
    assert polylog(1, 0.5) == pytest.approx(0.6931471805599453, abs=1e-14)
    for p in (0, 1, 2.5, -3, 1 + 2j):
        assert polylog(p, 0) == 0
    assert polylog(2, 0.5) == pytest.approx(np.pi ** 2 / 12 - np.log(2) ** 2 / 2, abs=1e-12)
    x = 0.3
    assert polylog(-2, x) == pytest.approx(sum(x ** n * n * n for n in range(1, 200)), rel=1e-12)
    assert polylog(3, 1) == pytest.approx(1.2020569031595942, rel=1e-12)


def test_polylog_domain():
    with pytest.raises(DomainError):
        polylog(2, 1.5)
    with pytest.raises(DomainError):
        polylog(1, 1.0)
    with pytest.raises(DomainError):
        polylog(0.5, -1.0)


def test_stirling():
    assert [stirling1_unsigned(4, k) for k in range(5)] == [0, 6, 11, 6, 1]


def test_odsd_structure_and_ors_identity(rng):
    M = np.diag([0.2, 0.5, 0.7])
    sd = spectral_decompose(M)
    d = dressing(sd, np.eye(3))
    v = odsd_eval(sd, d, 1.7)
    assert abs(v.imag) < 1e-14
    assert v.real == pytest.approx(sum(polylog(1.7, x).real for x in (0.2, 0.5, 0.7)), rel=1e-12)
    M, _ = random_monodromy(rng, 3, "SS")
    M = 0.6 * M / np.abs(np.linalg.eigvals(M)).max()
    O = random_op(rng, 3)
    sd = spectral_decompose(M)
    z = ordinary_ots(O, M, 10)
    lhs = odsd_eval(sd, dressing(sd, O), 0)
    assert abs(lhs - ors_rational(z, char_poly(M)).eval(1.0)) < 1e-10 * abs(lhs)


def test_odsd_partial_sums():
    M = np.array([[2.0, 1.0], [0.0, 2.0]]) * 0.2
    O = np.array([[1.0, 0.0], [1.0, 1.0]])
    sd = spectral_decompose(M)
    z = ordinary_ots(O, M, 80).values
    n = np.arange(1, 81)
    assert abs(odsd_eval(sd, dressing(sd, O), 1) - np.sum(z[1:] / n)) < 1e-8
    assert abs(odsd_eval(sd, dressing(sd, O), 2) - np.sum(z[1:] / n ** 2)) < 1e-8
    with pytest.raises(DomainError):
        odsd_eval(spectral_decompose(np.diag([1.2, 0.3])), dressing(spectral_decompose(np.diag([1.2, 0.3])), np.eye(2)), 1)


def test_tsystem_identity_channel():
    sd = spectral_decompose(D235)
    ts = tsystem(osd_series(ordinary_ots(np.eye(3), D235, 14), 14), sd)
    assert np.abs(ts.top_deviation).max() < 1e-7
    h = osd_series(ordinary_ots(np.eye(3), D235, 14), 14).coeffs
    assert np.allclose(ts.dets[1], h[: ts.dets.shape[1]])
    for a, E in enumerate(ts.rank_polys):
        R = len(E) - 1
        for n in range(R, ts.dets.shape[1]):
            scale = np.sum(np.abs(E) * np.abs(ts.dets[a, n - np.arange(R + 1)]))
            assert abs(ts.source_terms[a, n]) < 1e-7 * scale


def test_tsystem_bilinear_random(rng):
    sd = spectral_decompose(D235)
    O = rng.normal(size=(3, 3))
    ts = tsystem(osd_series(ordinary_ots(O, D235, 14), 14), sd)
    H = ts.dets
    for a in range(1, 3):
        for n in range(1, 9):
            scale = abs(H[a, n]) ** 2 + abs(H[a, n + 1] * H[a, n - 1]) + abs(H[a + 1, n] * H[a - 1, n])
            assert abs(ts.bilinear_residual(a, n)) < 1e-6 * scale


def test_phase_track_examples():
    assert phase_track(np.full(10, 2 - 1j)).total_winding == 0
    loop = np.exp(2j * np.pi * np.arange(101) / 100)
    assert phase_track(loop).total_winding == pytest.approx(1.0, abs=1e-12)
    two = np.concatenate([loop, loop[1:]])
    assert phase_track(two).total_winding == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ZeroCrossing):
        phase_track([1, 0, 1])


def test_winding_scan_and_additivity():
    w = winding_scan(lambda t: np.exp(1j * t), [0.0, 2 * np.pi])
    assert w.total_winding == pytest.approx(1.0, abs=1e-12)
    a = winding_scan(lambda t: np.exp(3j * t) + 0.2, [0.0, np.pi])
    b = winding_scan(lambda t: np.exp(3j * t) + 0.2, [np.pi, 2 * np.pi])
    full = winding_scan(lambda t: np.exp(3j * t) + 0.2, [0.0, 2 * np.pi])
    assert concatenate_tracks(a, b) == pytest.approx(full.total_winding, abs=1e-9)
    assert full.total_winding == pytest.approx(3.0, abs=1e-9)
    c = winding_scan(lambda t: (4 - 2j) * (np.exp(3j * t) + 0.2), [0.0, 2 * np.pi])
    assert c.total_winding == pytest.approx(full.total_winding, abs=1e-12)
