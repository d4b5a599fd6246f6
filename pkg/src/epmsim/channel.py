"""Pulse-cycle qubit channel: superoperators, fixed point, Kraus sets, time reversal.

The open dynamics alternates a free unitary evolution U (Hamiltonian
H = omega*sigma_z/2, duration tau) with a short dissipative pulse S that
projects along the bare spin axis and optically pumps population toward
the bare ground state. Both are represented as 4x4 superoperators acting
on column-stacked 2x2 density matrices; N cycles compose to L = (S U)^N.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linops
from .errors import (
    DomainError,
    NonUniqueFixedPoint,
    NotAFixedPoint,
    NotCompletelyPositive,
    SingularFixedPoint,
)

I2 = np.eye(2, dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)

GAP_TOL = 1e-9
FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True)
class PulseParams:
    """Parameters of one pulse cycle.

    p_abs: probability that a laser pulse is absorbed (dissipation strength).
    p_d:   probability of population transfer to the bare ground state.
    alpha: mixing angle between the bare spin axis and the Hamiltonian
           eigenbasis, in [0, pi/2].
    omega_tau: dimensionless product of level splitting and inter-pulse delay.
    """

    p_abs: float
    p_d: float
    alpha: float
    omega_tau: float

    def __post_init__(self):
        if not 0.0 <= self.p_abs <= 1.0:
            raise DomainError(f"p_abs must be in [0, 1], got {self.p_abs}")
        if not 0.0 <= self.p_d <= 1.0:
            raise DomainError(f"p_d must be in [0, 1], got {self.p_d}")
        if not 0.0 <= self.alpha <= np.pi / 2:
            raise DomainError(f"alpha must be in [0, pi/2], got {self.alpha}")
        if not np.isfinite(self.omega_tau):
            raise DomainError(f"omega_tau must be finite, got {self.omega_tau}")

    @property
    def energies(self) -> tuple[float, float]:
        """Energy eigenvalues (E0, E1) = (+omega/2, -omega/2) in units of 1/tau."""
        return (0.5 * self.omega_tau, -0.5 * self.omega_tau)


def k_coefficients(p_d: float, alpha: float) -> tuple[float, float, float]:
    """The (k_c, k_s, k_sc) combinations entering the dissipative superoperator."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    k_c = 1.0 - (1.0 - p_d) * ca * ca
    k_s = 1.0 - (1.0 - p_d) * sa * sa
    k_sc = (1.0 - p_d) * sa * ca
    return k_c, k_s, k_sc


def dissipative_superoperator(params: PulseParams) -> np.ndarray:
    """4x4 superoperator of a single short laser pulse (projection + pumping)."""
    pa, pd, al = params.p_abs, params.p_d, params.alpha
    k_c, k_s, k_sc = k_coefficients(pd, al)
    ca, sa = np.cos(al), np.sin(al)
    s = 0.5 * np.array(
        [
            [2 - pa * (k_c - pd * ca), pa * k_sc, pa * k_sc, pa * (pd * ca + k_c)],
            [pa * (k_sc + pd * sa), 2 - pa * (1 + k_s), -pa * (k_s - 1), pa * (pd * sa - k_sc)],
            [pa * (k_sc + pd * sa), -pa * (k_s - 1), 2 - pa * (1 + k_s), pa * (pd * sa - k_sc)],
            [pa * (k_c - pd * ca), -pa * k_sc, -pa * k_sc, 2 - pa * (pd * ca + k_c)],
        ],
        dtype=complex,
    )
    return s


def unitary_superoperator(params: PulseParams) -> np.ndarray:
    """Superoperator of the free evolution between pulses.

    H is diagonal in the energy basis, so exp(-i tau (H kron I - I kron H*))
    is diagonal with phases exp(-i omega tau (0, 1, -1, 0)).
    """
    phases = params.omega_tau * np.array([0.0, 1.0, -1.0, 0.0])
    return np.diag(np.exp(-1j * phases))


def cycle_superoperator(params: PulseParams) -> np.ndarray:
    """One full cycle: unitary evolution followed by a dissipative pulse."""
    return dissipative_superoperator(params) @ unitary_superoperator(params)


def compose_cycles(s: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """(S U)^n; n = 0 gives the identity map."""
    if n < 0:
        raise DomainError(f"cycle count must be >= 0, got {n}")
    return np.linalg.matrix_power(s @ u, n)


def n_pulse_superoperator(params: PulseParams, n: int) -> np.ndarray:
    return compose_cycles(dissipative_superoperator(params), unitary_superoperator(params), n)


@dataclass(frozen=True)
class KrausSet:
    """Operator-sum representation of a channel."""

    operators: tuple = ()
    rank_tol: float = linops.RANK_TOL

    def __len__(self):
        return len(self.operators)

    def completeness_defect(self) -> float:
        total = sum(linops.dagger(k) @ k for k in self.operators)
        return float(np.max(np.abs(total - I2)))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ linops.dagger(k) for k in self.operators)

    def superoperator(self) -> np.ndarray:
        return sum(linops.kron(k.conj(), k) for k in self.operators)


def apply_superoperator(l: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return linops.unvec(l @ linops.vec(rho))


def apply_channel(channel, rho: np.ndarray) -> np.ndarray:
    """Apply a channel given either as a 4x4 superoperator or as a KrausSet."""
    if isinstance(channel, KrausSet):
        return channel.apply(rho)
    return apply_superoperator(np.asarray(channel), rho)


def choi_matrix(l: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator under the column-stacking convention."""
    l = np.asarray(l, dtype=complex)
    t = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[k, j] = 1.0
            t += linops.kron(e, I2) @ l @ linops.kron(I2, e)
    return t


def kraus_from_choi(l: np.ndarray, rank_tol: float = linops.RANK_TOL) -> KrausSet:
    """Extract Kraus operators by diagonalizing the Choi matrix.

    Eigenvalues below rank_tol are discarded; an eigenvalue below
    -rank_tol means the map is not completely positive. Each operator's
    global phase is fixed by making its largest-magnitude entry real
    and positive, so the output is deterministic.
    """
    t = choi_matrix(l)
    w, v = linops.hermitian_eig(t)
    if w[-1] < -rank_tol:
        raise NotCompletelyPositive(f"Choi matrix has eigenvalue {w[-1]:.3e} < -{rank_tol:.1e}")
    ops = []
    for xi, u in zip(w, v.T):
        if xi <= rank_tol:
            continue
        k = linops.unvec(np.sqrt(xi) * u)
        pivot = k.ravel()[np.argmax(np.abs(k.ravel()))]
        k = k * (abs(pivot) / pivot)
        ops.append(k)
    return KrausSet(operators=tuple(ops), rank_tol=rank_tol)


@dataclass(frozen=True)
class FixedPoint:
    """Steady state of a one-cycle map plus the spectral gap 1 - |lambda_2|."""

    state: np.ndarray = field(repr=False)
    spectral_gap: float = 0.0


def fixed_point(l_one_cycle: np.ndarray) -> FixedPoint:
    """Unique unit-trace fixed point of the one-cycle superoperator.

    Solves the nullspace of (L - I) with the trace constraint appended;
    the spectrum of L is used only to verify uniqueness and report the gap.
    """
    l = np.asarray(l_one_cycle, dtype=complex)
    evals = np.sort(np.abs(np.linalg.eigvals(l)))[::-1]
    lam2 = evals[1]
    if lam2 >= 1.0 - GAP_TOL:
        raise NonUniqueFixedPoint(
            f"second eigenvalue modulus {lam2:.12f} too close to 1; fixed point not unique"
        )
    a = np.vstack([l - np.eye(4), np.array([[1.0, 0.0, 0.0, 1.0]], dtype=complex)])
    b = np.zeros(5, dtype=complex)
    b[4] = 1.0
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = linops.unvec(x)
    rho = 0.5 * (rho + linops.dagger(rho))
    rho = rho / np.real(np.trace(rho))
    residual = np.max(np.abs(apply_superoperator(l, rho) - rho))
    if residual > 1e-10:
        raise NotAFixedPoint(f"fixed-point solve failed (residual {residual:.3e})")
    return FixedPoint(state=rho, spectral_gap=float(1.0 - lam2))


def time_reversed_channel(
    kraus: KrausSet, rho_star: np.ndarray, rank_tol: float = linops.RANK_TOL
) -> KrausSet:
    """Backward channel with Kraus operators rho*^(1/2) K^dag rho*^(-1/2).

    rho_star must be full rank and invariant under the forward channel;
    completeness of the forward set then guarantees the reversed set is
    trace preserving and leaves rho_star invariant.
    """
    rho_star = np.asarray(rho_star, dtype=complex)
    try:
        root, inv_root = linops.psd_sqrt_and_invsqrt(rho_star, rank_tol)
    except SingularFixedPoint:
        raise SingularFixedPoint("rho_star is singular; the backward channel is undefined")
    defect = np.max(np.abs(kraus.apply(rho_star) - rho_star))
    if defect > FIXED_POINT_TOL:
        raise NotAFixedPoint(
            f"rho_star is not fixed by the forward channel (defect {defect:.3e})"
        )
    ops = tuple(root @ linops.dagger(k) @ inv_root for k in kraus.operators)
    return KrausSet(operators=ops, rank_tol=rank_tol)
