import numpy as np
import pytest
import scipy.linalg as sla

from floquet_tomography.algebra import (
    OperatorBasis,
    bicommutant_and_project,
    commutant,
    dobs_growth_scan,
    ep_toy_hamiltonian,
    exact_reconstruct,
    full_algebra,
    generate_algebra,
    micromotion_family,
    symmetry_deficiency,
)
from floquet_tomography.errors import PartialVisibility
from floquet_tomography.models import (
    Dtq3Params,
    SshParams,
    dtq3_hamiltonian,
    dtq3_observables,
    ssh_hamiltonian,
    ssh_observables,
    ssh_symmetries,
)
from floquet_tomography.monodromy import PeriodicHamiltonian, monodromy, spectral_decompose

SX = np.array([[0, 1.0], [1.0, 0]])
SZ = np.diag([1.0, -1.0])


def _closed(basis: OperatorBasis) -> bool:
    return all(basis.contains(a @ b) for a in basis.members for b in basis.members)


def test_generate_algebra_examples():
    a = generate_algebra([SX]).algebra
    assert a.span_dim == 2 and a.contains(np.eye(2)) and a.contains(SX)
    assert generate_algebra([SX, SZ]).algebra.span_dim == 4
    assert generate_algebra([np.eye(2)]).algebra.span_dim == 1


def test_basis_orthonormal_and_closed(rng):
    gens = [np.diag([1.0, 1.0, 2.0, 3.0]), np.kron(SX, np.eye(2))]
    a = generate_algebra(gens).algebra
    F = a.flat()
    assert np.abs(F.conj() @ F.T - np.eye(a.span_dim)).max() < 1e-9
    assert _closed(a)
    assert all(a.contains(m.conj().T) for m in a.members)


def test_commutant_examples():
    full = generate_algebra([SX, SZ]).algebra
    assert commutant(full).span_dim == 1
    a = generate_algebra([np.diag([1.0, 1.0, 2.0])]).algebra
    c = commutant(a)
    assert c.span_dim == 5
    X = np.zeros((3, 3))
    X[:2, :2] = [[1, 2], [3, 4]]
    assert c.contains(X) and not c.contains(np.eye(3)[[1, 0, 2]] @ np.diag([1, 1, 0]) + np.eye(3)[:, [2, 0, 1]])
    scal = generate_algebra([np.eye(3)]).algebra
    assert commutant(scal).span_dim == 9


def test_visible_split_example():
    M = np.array([[1.0, 2, 0], [3, 4, 0], [0, 0, 7]])
    vs = bicommutant_and_project([np.diag([1.0, 1.0, 2.0])], M)
    assert np.allclose(vs.m_vis, np.diag([2.5, 2.5, 7]), atol=1e-10)
    assert np.allclose(vs.m_vis + vs.delta_m, M)
    for a, b in ((1.0, 0.0), (0.0, 1.0), (0.3, -2.0)):
        assert abs(np.trace(np.diag([a, a, b]) @ vs.delta_m)) < 1e-10
    assert vs.delta_obs == 7


def test_visible_split_full_and_idempotent(rng):
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    vs = bicommutant_and_project([SX, SZ], M)
    assert np.abs(vs.delta_m).max() < 1e-12 and vs.delta_obs == 0
    g = [np.diag([1.0, 1.0, 2.0])]
    vs = bicommutant_and_project(g, rng.normal(size=(3, 3)))
    again = bicommutant_and_project(g, vs.m_vis)
    assert np.abs(again.delta_m).max() < 1e-12


def test_bicommutant_closure(rng):
    gens = [np.diag([1.0, 1.0, 2.0, 2.0]) + 0.5 * np.kron(np.eye(2), SX)]
    alg = full_algebra(gens)
    assert all(alg.bicommutant.contains(m) for m in alg.algebra.members)
    assert alg.bicommutant.span_dim >= alg.algebra.span_dim
    again = commutant(commutant(alg.bicommutant))
    assert again.span_dim == alg.bicommutant.span_dim
    for c in alg.commutant.members:
        for s in alg.algebra.members:
            assert np.abs(c @ s - s @ c).max() < 1e-8


def test_projection_self_adjoint():
    b = full_algebra([np.diag([1.0, 1.0, 2.0])]).bicommutant
    E = np.array([b.project(e.reshape(3, 3)).reshape(-1) for e in np.eye(9)]).T
    assert np.abs(E @ E - E).max() < 1e-12
    assert np.abs(E - E.conj().T).max() < 1e-12


def test_micromotion_static_commuting():
    h = PeriodicHamiltonian.piecewise([(np.diag([0.3, 1.1, -0.4]), 1.0)])
    for Q in (1, 3, 8):
        assert micromotion_family(h, [np.diag([1.0, 0.0, 0.0])], Q).d_obs == 1
    scan = dobs_growth_scan(h, [np.diag([1.0, 0.0, 0.0])], [1, 2, 4, 8])
    assert [d for _, d in scan] == [1, 1, 1, 1]


def test_micromotion_q1_static_family():
    h = dtq3_hamiltonian(Dtq3Params(), 256)
    O = dtq3_observables()["O_qub"]
    fam = micromotion_family(h, [O], 1)
    assert np.allclose(fam.observables[0, 0], O)
    with pytest.raises(ValueError):
        micromotion_family(h, [O], 0)


def test_dtq3_dobs_growth():
    O = dtq3_observables()["O_qub"]
    scan = dobs_growth_scan(dtq3_hamiltonian(Dtq3Params(), 1024), [O], [1, 2, 4, 8, 16, 32])
    assert [d for _, d in scan] == [1, 2, 4, 8, 9, 9]
    scan = dobs_growth_scan(dtq3_hamiltonian(Dtq3Params(B=0.0), 1024), [O], [1, 4, 32])
    assert [d for _, d in scan] == [1, 1, 1]


def test_dobs_bounded_by_bicommutant():
    h = dtq3_hamiltonian(Dtq3Params(), 512)
    fam = micromotion_family(h, [dtq3_observables()["O_qub"]], 8)
    alg = full_algebra(list(fam.observables.reshape(-1, 3, 3)))
    assert fam.d_obs <= alg.bicommutant.span_dim <= 9


def test_dobs_scan_rejects_unsorted():
    h = PeriodicHamiltonian.piecewise([(np.eye(2), 1.0)])
    with pytest.raises(ValueError):
        dobs_growth_scan(h, [SZ], [4, 2])


def test_ssh_clean_obc_plateau():
    p = SshParams(boundary="OBC")
    scan = dobs_growth_scan(ssh_hamiltonian(p), [ssh_observables(p)["O_0"]], [1, 2, 4, 8, 16, 32])
    d = [x for _, x in scan]
    assert d == [1, 2, 3, 3, 3, 3] and max(d) < 50


def test_exact_reconstruct_dtq3():
    h = dtq3_hamiltonian(Dtq3Params(), 1024)
    er = exact_reconstruct(h, [dtq3_observables()["O_qub"]], 32)
    M = monodromy(h).matrix
    assert er.d_obs == 9 and er.mode == "SS"
    assert np.abs(er.recovered_m - M).max() < 1e-6 * np.abs(M).max()


def test_exact_reconstruct_static_matrix_units():
    H = np.diag([0.2, -0.7, 1.3])
    h = PeriodicHamiltonian.piecewise([(H, 1.5)])
    units = [np.eye(3)[:, [i]] @ np.eye(3)[[j]] for i in range(3) for j in range(3)]
    er = exact_reconstruct(h, units, 1)
    assert np.abs(er.recovered_m - sla.expm(-1.5j * H)).max() < 1e-9
    sd = spectral_decompose(er.recovered_m)
    assert np.abs(sum(er.projectors) - np.eye(3)).max() < 1e-9
    assert sd.classification == "SS"


def test_exact_reconstruct_ep_toy(rng):
    M = np.array([[2.0, 1.0], [0.0, 2.0]])
    h = ep_toy_hamiltonian(M)
    gens = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    er = exact_reconstruct(h, gens, 4)
    assert er.mode == "EP"
    assert np.linalg.norm(er.nilpotents[0]) > 1e-3
    assert np.abs(er.recovered_m - M).max() < 1e-6


def test_exact_reconstruct_partial_visibility():
    h = dtq3_hamiltonian(Dtq3Params(B=0.0), 256)
    with pytest.raises(PartialVisibility):
        exact_reconstruct(h, [dtq3_observables()["O_qub"]], 8)


def test_block_symmetry_deficiency(rng):
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = sla.block_diag(A, B)
    h = PeriodicHamiltonian.piecewise([(H, 1.0)])
    O = sla.block_diag(rng.normal(size=(2, 2)), np.zeros((2, 2)))
    Qsym = sla.block_diag(np.zeros((2, 2)), np.eye(2))
    rep = symmetry_deficiency(h, [O], [Qsym, np.eye(4)], 4, labels=["block", "I"])
    blk, triv = rep["candidates"]
    assert blk["is_symmetry"] and blk["in_commutant"] and blk["deficiency"] >= 4
    assert triv["trivial"] and triv["deficiency"] is None


def test_ssh_parity_deficiency():
    p = SshParams(boundary="OBC")
    Q = ssh_symmetries(p)["Q_parity"]
    O = ssh_observables(p)["O_0"]
    G = O + Q @ O @ np.linalg.inv(Q)
    rep = symmetry_deficiency(ssh_hamiltonian(p), [G], [Q], 8, labels=["parity"])
    rec = rep["candidates"][0]
    assert rec["is_symmetry"] and rec["deficiency"] > 0
    assert rep["d_obs"] <= rep["dim_bicommutant"] < rep["n_sq"]


def test_non_symmetry_reported():
    p = SshParams(boundary="OBC")
    rep = symmetry_deficiency(ssh_hamiltonian(p), [ssh_observables(p)["O_0"]],
                              [ssh_symmetries(p)["Q_parity"]], 4)
    rec = rep["candidates"][0]
    assert not rec["is_symmetry"] and rec["deficiency"] is None
    assert rec["comm_norm_observables"] > 1e-3
