"""Built-in example systems.

* DTQ3: a driven, leaky transmon qutrit with a smooth cosine drive.
* NHFSSH: a two-step non-Hermitian Floquet SSH chain with nonreciprocal
  inter-cell hopping, staggered gain/loss, a boundary twist and disorder.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, linear_sum_assignment

from .errors import BracketError, MatchingAmbiguous
from .monodromy import (
    DEFAULT_STEPS,
    MonodromyMatrix,
    PeriodicHamiltonian,
    monodromy,
)

# ---------------------------------------------------------------- DTQ3


@dataclass(frozen=True)
class Dtq3Params:
    E0: float = 0.0
    E1: float = 1.0
    E2: float = 2.05
    gamma0: float = 0.0
    gamma1: float = 0.02
    gamma2: float = 0.40
    A: float = 0.94
    B: float = 0.47
    omega: float = 1.0

    @property
    def anharmonicity(self) -> float:
        return (self.E2 - self.E1) - (self.E1 - self.E0)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def with_(self, **kw) -> "Dtq3Params":
        return replace(self, **kw)


def dtq3_hamiltonian(p: Dtq3Params, steps_per_period: int = DEFAULT_STEPS,
                     scheme: str = "cf4") -> PeriodicHamiltonian:
    if p.omega <= 0:
        raise ValueError("omega must be positive")
    diag = np.diag([p.E0 - 1j * p.gamma0, p.E1 - 1j * p.gamma1, p.E2 - 1j * p.gamma2])
    cpl = np.zeros((3, 3), dtype=complex)
    cpl[0, 1] = cpl[1, 0] = p.A
    cpl[1, 2] = cpl[2, 1] = p.B
    omega = p.omega

    def sampler(t):
        return diag[None] + np.cos(omega * t)[:, None, None] * cpl[None]

    return PeriodicHamiltonian.sampled(sampler, p.period, 3, steps_per_period,
                                       vectorized=True, scheme=scheme)


def dtq3_observables() -> dict:
    return {"O_qub": np.diag([1.0, 1.0, 0.0]).astype(complex),
            "O_diff": np.diag([1.0, -1.0, 0.0]).astype(complex)}


# ---------------------------------------------------------------- NHFSSH

_MASK = (1 << 64) - 1
_KIND = {"v": 1, "w": 2, "onsite": 3}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def disorder_uniform(seed: int, index: int, kind: str) -> float:
    """Counter-based U(-1, 1) draw keyed by (seed, index, kind)."""
    x = _splitmix64((seed & _MASK) ^ _splitmix64((_KIND[kind] << 32) + index))
    return (x >> 11) * 2.0 ** -53 * 2.0 - 1.0


@dataclass(frozen=True)
class SshParams:
    n_sites: int = 10
    period: float = 2.0
    v: float = 0.5
    w: float = 1.5
    h: float = 0.4
    gamma: float = 0.0
    theta: float = 0.0
    boundary: str = "PBC"
    V: float = 0.0
    W: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_sites % 2 or self.n_sites < 2:
            raise ValueError("n_sites must be a positive even integer")
        if self.boundary not in ("PBC", "OBC"):
            raise ValueError("boundary must be 'PBC' or 'OBC'")

    def with_(self, **kw) -> "SshParams":
        return replace(self, **kw)


def sigma_z(n: int) -> np.ndarray:
    return np.diag([1.0 if s % 2 == 0 else -1.0 for s in range(n)]).astype(complex)


def ssh_step_hamiltonians(p: SshParams):
    """The two half-period generators (H1, H2) in the site basis."""
    n = p.n_sites
    half = n // 2
    dv = [p.V * disorder_uniform(p.seed, m, "v") for m in range(half)]
    dw = [p.V * disorder_uniform(p.seed, m, "w") for m in range(half)]
    de = np.array([p.W * disorder_uniform(p.seed, s, "onsite") for s in range(n)])
    onsite = np.diag(de).astype(complex) + 1j * p.gamma * sigma_z(n)
    H1 = onsite.copy()
    H2 = onsite.copy()
    eh, emh = np.exp(p.h), np.exp(-p.h)
    for m in range(half):
        a, b = 2 * m, 2 * m + 1
        H1[a, b] += p.v + dv[m]
        H1[b, a] += p.v + dv[m]
    for m in range(half - 1):
        b, a_next = 2 * m + 1, 2 * m + 2
        H2[b, a_next] += (p.w + dw[m]) * emh
        H2[a_next, b] += (p.w + dw[m]) * eh
    if p.boundary == "PBC":
        tw = np.exp(1j * p.theta)
        H2[n - 1, 0] += (p.w + dw[half - 1]) * emh * tw
        H2[0, n - 1] += (p.w + dw[half - 1]) * eh / tw
    return H1, H2


def ssh_hamiltonian(p: SshParams) -> PeriodicHamiltonian:
    H1, H2 = ssh_step_hamiltonians(p)
    return PeriodicHamiltonian.piecewise([(H1, p.period / 2), (H2, p.period / 2)],
                                         period=p.period)


def ssh_monodromy(p: SshParams):
    """(M, H1, H2) with M = exp(-i T/2 H2) exp(-i T/2 H1)."""
    H1, H2 = ssh_step_hamiltonians(p)
    m = sla.expm(-0.5j * p.period * H2) @ sla.expm(-0.5j * p.period * H1)
    return MonodromyMatrix.from_matrix(m, period=p.period), H1, H2


def imaginary_gauge(p: SshParams) -> np.ndarray:
    return np.kron(np.diag(np.exp(p.h * np.arange(p.n_sites // 2))), np.eye(2))


def ssh_symmetries(p: SshParams) -> dict:
    n = p.n_sites
    S = imaginary_gauge(p)
    P = np.fliplr(np.eye(n))
    return {"Q_parity": (S @ P @ np.linalg.inv(S)).astype(complex),
            "Q_chiral": sigma_z(n)}


def ssh_observables(p: SshParams) -> dict:
    n = p.n_sites
    O0 = np.zeros((n, n), dtype=complex)
    O0[0, 0] = 1.0
    OA = np.diag([1.0 if s % 2 == 0 else 0.0 for s in range(n)]).astype(complex)
    Ob = OA.copy()
    Ob[0, 1] = Ob[1, 0] = 1.0
    return {"O_0": O0, "O_stag": sigma_z(n) / n, "O_A": OA, "O_break": Ob}


def bloch_monodromy(p: SshParams, k: float, gamma: Optional[float] = None) -> np.ndarray:
    """2x2 Bloch-sector monodromy of the clean infinite chain.

    Bloch states carry e^{ikm} on unit cell m, so the inter-cell hop
    B_m <- A_{m+1} picks up e^{+ik} and its partner e^{-ik}.
    """
    g = p.gamma if gamma is None else gamma
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    H1 = p.v * sx + 1j * g * sz
    H2 = np.array([[0, p.w * np.exp(p.h) * np.exp(-1j * k)],
                   [p.w * np.exp(-p.h) * np.exp(1j * k), 0]]) + 1j * g * sz
    return sla.expm(-0.5j * p.period * H2) @ sla.expm(-0.5j * p.period * H1)


def bloch_discriminant(p: SshParams, k: float, gamma: float) -> complex:
    m = bloch_monodromy(p, k, gamma)
    return complex(np.trace(m) ** 2 - 4.0 * np.linalg.det(m))


def bloch_ep_locate(p: SshParams, k: float = np.pi,
                    gamma_bracket: tuple = (0.5, 0.6), xtol: float = 1e-13) -> float:
    """Gain/loss strength where the two Bloch Floquet eigenvalues coalesce."""
    f = lambda g: bloch_discriminant(p, k, g).real
    lo, hi = gamma_bracket
    if np.sign(f(lo)) == np.sign(f(hi)):
        raise BracketError(f"no sign change of the discriminant on [{lo}, {hi}]")
    return float(brentq(f, lo, hi, xtol=xtol))


@dataclass(frozen=True)
class EpLoop:
    theta_c: float
    gamma_c: float
    r_theta: float = 0.18
    r_gamma: float = 0.025
    samples: int = 256

    def point(self, tau):
        return (self.theta_c + self.r_theta * np.cos(tau),
                self.gamma_c + self.r_gamma * np.sin(tau))

    def taus(self, cycles: int = 1) -> np.ndarray:
        return np.linspace(0.0, 2.0 * np.pi * cycles, self.samples * cycles + 1)


@dataclass(frozen=True, eq=False)
class LoopTrack:
    taus: np.ndarray
    paths: np.ndarray        # (len(taus), N) tracked eigenvalues
    permutation: np.ndarray  # perm[i]: start index reached by branch i
    cycles: int

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.permutation == np.arange(len(self.permutation))))


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - cur[None, :])
    _, col = linear_sum_assignment(cost)
    return cur[col]


def ep_loop_track(p: SshParams, loop: EpLoop, cycles: int = 1,
                  max_points: int = 2 ** 14) -> LoopTrack:
    """Continue the Floquet eigenvalues around ``loop`` and read the permutation.

    Each step is accepted when the largest eigenvalue motion is below half
    the smallest inter-eigenvalue distance; otherwise the step is bisected.
    """
    def eigs(tau):
        th, g = loop.point(tau)
        m, _, _ = ssh_monodromy(p.with_(theta=th, gamma=g))
        return np.linalg.eigvals(m.matrix)

    grid = list(loop.taus(cycles))
    start = eigs(grid[0])
    taus, path = [grid[0]], [start]
    pending = grid[1:][::-1]
    cur_t, cur = grid[0], start
    n_points = len(grid)
    while pending:
        t = pending.pop()
        nxt = _match(cur, eigs(t))
        motion = np.abs(nxt - cur).max()
        d = np.abs(cur[:, None] - cur[None, :])
        sep = d[np.triu_indices(len(cur), 1)].min()
        if motion > 0.5 * sep:
            if n_points >= max_points:
                raise MatchingAmbiguous(f"step at tau={t:.6g} unresolved")
            pending.append(t)
            pending.append(0.5 * (cur_t + t))
            n_points += 1
            continue
        cur_t, cur = t, nxt
        taus.append(t)
        path.append(cur)
    paths = np.array(path)
    idx = np.array([int(np.argmin(np.abs(start - x))) for x in paths[-1]])
    if len(set(idx)) != len(idx):
        raise MatchingAmbiguous("loop end does not map onto the start spectrum")
    return LoopTrack(taus=np.array(taus), paths=paths, permutation=idx, cycles=cycles)


def permutation_cycles(perm) -> list:
    perm = list(perm)
    seen, out = set(), []
    for i in range(len(perm)):
        if i in seen:
            continue
        c, j = [], i
        while j not in seen:
            seen.add(j)
            c.append(j)
            j = perm[j]
        out.append(tuple(c))
    return out


def min_eigen_gap(m) -> float:
    w = np.linalg.eigvals(np.asarray(getattr(m, "matrix", m)))
    d = np.abs(w[:, None] - w[None, :])
    return float(d[np.triu_indices(len(w), 1)].min())


def remnant_ep_locate(p: SshParams, theta0: float = np.pi, gamma0: Optional[float] = None,
                      steps: int = 20) -> tuple:
    """Follow the clean finite-chain EP at (theta0, gamma0) while on-site
    disorder is ramped from 0 to p.W; returns (theta, gamma, gap).

    Each ramp step minimizes the smallest eigenvalue distance by Nelder-Mead
    starting from the previous location.
    """
    from scipy.optimize import minimize

    if gamma0 is None:
        gamma0 = bloch_ep_locate(p.with_(V=0.0, W=0.0))
    x = np.array([theta0, gamma0], dtype=float)
    fun = 0.0
    for W in np.linspace(p.W / steps, p.W, steps):
        q = p.with_(W=float(W))

        def gap(y, q=q):
            m, _, _ = ssh_monodromy(q.with_(theta=float(y[0]), gamma=float(y[1])))
            return min_eigen_gap(m)

        simplex = [x, x + [0.02, 0.0], x + [0.0, 0.005]]
        r = minimize(gap, x, method="Nelder-Mead",
                     options=dict(xatol=1e-7, fatol=1e-12, initial_simplex=simplex))
        x, fun = r.x, float(r.fun)
    return float(x[0]), float(x[1]), fun
