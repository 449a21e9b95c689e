import numpy as np
import pytest


def random_monodromy(rng, n, kind):
    """Random M = S J S^-1 of class SS, DP (one doubled eigenvalue) or EP
    (one 2x2 Jordan block). Eigenvalue moduli lie in [0.6, 1.4]."""
    k = n if kind == "SS" else n - 1
    while True:
        lam = rng.uniform(0.6, 1.4, k) * np.exp(2j * np.pi * rng.uniform(size=k))
        d = np.abs(lam[:, None] - lam[None, :])
        if k < 2 or d[np.triu_indices(k, 1)].min() > 0.05:
            break
    if kind == "SS":
        J = np.diag(lam)
    else:
        J = np.diag(np.concatenate([[lam[0]], lam]))
        if kind == "EP":
            J[0, 1] = 0.5
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    S += 2 * np.eye(n)
    return S @ J @ np.linalg.inv(S), J


def random_op(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)


def corpus(seed, count, dims=range(2, 7), kinds=("SS", "DP", "EP")):
    """Deterministic list of (M, J, kind) for property suites."""
    r = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(dims[i % len(dims)])
        kind = kinds[(i // len(dims)) % len(kinds)]
        M, J = random_monodromy(r, n, kind)
        out.append((M, J, kind))
    return out
