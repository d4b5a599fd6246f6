"""End-point and two-point measurement statistics and entropy-production terms.

Energy basis convention: index 0 is the eigenstate with energy +omega/2,
index 1 the one with energy -omega/2. States are decomposed as
rho0 = P + chi with P the diagonal (thermal) part and chi the traceless
coherence. The inverse temperature beta carries no sign restriction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channel as _channel
from .errors import (
    DivergentEntropyTerm,
    DivergentRatio,
    DomainError,
    InfiniteBeta,
    NonPhysicalCoherenceRatio,
)

ZERO_PROB = 1e-300

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
PLUS_Y = (KET0 + 1j * KET1) / np.sqrt(2.0)
MINUS_Y = (KET0 - 1j * KET1) / np.sqrt(2.0)

STATE_VECTORS = {"ket0": KET0, "ket1": KET1, "plus_y": PLUS_Y, "minus_y": MINUS_Y}
STATE_LABELS = ("ket0", "ket1", "plus_y", "minus_y")


def pure_state(vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=complex)
    return np.outer(v, v.conj())


def state_from_label(label: str) -> np.ndarray:
    if label not in STATE_VECTORS:
        raise DomainError(f"unknown state label {label!r}; expected one of {STATE_LABELS}")
    return pure_state(STATE_VECTORS[label])


def experimental_initial_state(p: float) -> np.ndarray:
    """Convex mixture of the pump-target eigenstate (index 0) and |+y>.

    rho0 = p |0><0| + (1-p) |+y><+y|, populations (1+p)/2 and (1-p)/2.
    The overweighted state is the high-energy one, so the decomposed
    inverse temperature is negative for p > 0 (population inversion).
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"mixing probability must be in [0, 1], got {p}")
    return p * pure_state(KET0) + (1.0 - p) * pure_state(PLUS_Y)


def projector(k: int) -> np.ndarray:
    pi = np.zeros((2, 2), dtype=complex)
    pi[k, k] = 1.0
    return pi


def populations(rho: np.ndarray) -> np.ndarray:
    return np.real(np.diag(rho)).copy()


def coherence_part(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex) - np.diag(np.diag(rho))


@dataclass(frozen=True)
class ThermalDecomposition:
    """rho = thermal(beta) + chi in the energy eigenbasis."""

    beta: float
    z: float
    chi: np.ndarray = field(repr=False)
    energies: tuple[float, float] = (0.5, -0.5)

    def thermal_state(self) -> np.ndarray:
        return thermal_state(self.beta, self.energies)


def thermal_state(beta: float, energies) -> np.ndarray:
    w = np.exp(-beta * np.asarray(energies, dtype=float))
    return np.diag(w / w.sum()).astype(complex)


def decompose_state(rho0: np.ndarray, energies) -> ThermalDecomposition:
    """Split rho0 into a thermal diagonal and a coherence part.

    beta is read off the population log-ratio; a vanishing population
    makes it undefined.
    """
    p = populations(rho0)
    e0, e1 = float(energies[0]), float(energies[1])
    if np.min(p) <= ZERO_PROB:
        raise InfiniteBeta(f"populations {p} admit no finite inverse temperature")
    if e0 == e1:
        raise DomainError("energies are degenerate; beta is not identifiable")
    beta = float(np.log(p[1] / p[0]) / (e0 - e1))
    z = float(np.exp(-beta * e0) + np.exp(-beta * e1))
    return ThermalDecomposition(beta=beta, z=z, chi=coherence_part(rho0), energies=(e0, e1))


def final_probability(chan, operator: np.ndarray) -> np.ndarray:
    """tr(Pi_f channel(operator)) for f = 0, 1; real for Hermitian operators."""
    out = _channel.apply_channel(chan, operator)
    return np.real(np.diag(out)).copy()


@dataclass(frozen=True)
class EpmDistribution:
    """Product-form joint table over (initial, final) energy outcomes."""

    joint: np.ndarray = field(repr=False)
    p_in: np.ndarray = field(repr=False)
    p_fin: np.ndarray = field(repr=False)
    energies: tuple[float, float] = (0.5, -0.5)

    def delta_e(self) -> np.ndarray:
        e = np.asarray(self.energies)
        return e[None, :] - e[:, None]

    def mean_delta_e(self) -> float:
        return float(np.sum(self.joint * self.delta_e()))


@dataclass(frozen=True)
class TpmDistribution:
    """Joint table P(i,f) = p_i * tr(Pi_f channel(Pi_i))."""

    joint: np.ndarray = field(repr=False)
    p_in: np.ndarray = field(repr=False)
    energies: tuple[float, float] = (0.5, -0.5)

    def p_fin(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def delta_e(self) -> np.ndarray:
        e = np.asarray(self.energies)
        return e[None, :] - e[:, None]

    def mean_delta_e(self) -> float:
        return float(np.sum(self.joint * self.delta_e()))


def epm_distribution(rho0: np.ndarray, chan, energies) -> EpmDistribution:
    p_in = populations(rho0)
    p_fin = final_probability(chan, rho0)
    return EpmDistribution(
        joint=np.outer(p_in, p_fin),
        p_in=p_in,
        p_fin=p_fin,
        energies=(float(energies[0]), float(energies[1])),
    )


def tpm_distribution(rho0: np.ndarray, chan, energies) -> TpmDistribution:
    p_in = populations(rho0)
    joint = np.array([p_in[i] * final_probability(chan, projector(i)) for i in range(2)])
    return TpmDistribution(
        joint=joint, p_in=p_in, energies=(float(energies[0]), float(energies[1]))
    )


@dataclass(frozen=True)
class EntropyLedger:
    """Per-outcome energy and entropy terms plus their EPM averages.

    delta_big_sigma depends on the final outcome only; it is stored as a
    full (i, f) table with identical rows. backward_joint is indexed
    [f, i] in the order the backward trajectory visits the outcomes.
    """

    delta_e: np.ndarray = field(repr=False)
    delta_sigma: np.ndarray = field(repr=False)
    delta_big_sigma: np.ndarray = field(repr=False)
    joint: np.ndarray = field(repr=False)
    backward_joint: np.ndarray = field(repr=False)
    beta: float = 0.0
    energies: tuple[float, float] = (0.5, -0.5)
    mean_delta_e: float = 0.0
    mean_delta_sigma: float = 0.0
    mean_delta_big_sigma: float = 0.0
    sigma_ft_mean: float = 0.0
    integral_ft_mean: float = 0.0


def entropy_terms(rho0: np.ndarray, chan, reversed_chan, energies) -> EntropyLedger:
    """Per-outcome Delta E, Delta sigma, Delta Sigma and their averages.

    The backward process starts from the thermal state at the decomposed
    beta (the Hamiltonian is time independent, so the initial and final
    thermal states coincide).
    """
    dec = decompose_state(rho0, energies)
    rho_th = dec.thermal_state()
    rho_b = rho_th

    pf_th = final_probability(chan, rho_th)
    if np.min(pf_th) <= ZERO_PROB:
        raise DivergentEntropyTerm(f"thermal final probabilities {pf_th} contain a zero")
    pf_chi = final_probability(chan, dec.chi)
    ratio = 1.0 + pf_chi / pf_th
    if np.min(ratio) <= 0.0:
        raise NonPhysicalCoherenceRatio(f"1 + p_f(chi)/p_f(thermal) = {ratio} not positive")
    big_sigma_f = np.log(ratio)

    p_tilde = final_probability(reversed_chan, rho_b)
    if np.min(p_tilde) <= ZERO_PROB:
        raise DivergentEntropyTerm(f"backward final probabilities {p_tilde} contain a zero")
    delta_sigma = np.log(pf_th)[None, :] - np.log(p_tilde)[:, None]
    delta_big_sigma = np.broadcast_to(big_sigma_f[None, :], (2, 2)).copy()

    epm = epm_distribution(rho0, chan, energies)
    delta_e = epm.delta_e()
    backward_joint = np.outer(populations(rho_b), p_tilde)

    joint = epm.joint
    mean_de = float(np.sum(joint * delta_e))
    mean_ds = float(np.sum(joint * delta_sigma))
    mean_dbs = float(np.sum(joint * delta_big_sigma))
    sigma_ft = float(np.sum(joint * np.exp(-delta_big_sigma)))
    integral_ft = float(
        np.sum(joint * np.exp(-dec.beta * delta_e - delta_sigma - delta_big_sigma))
    )
    return EntropyLedger(
        delta_e=delta_e,
        delta_sigma=delta_sigma,
        delta_big_sigma=delta_big_sigma,
        joint=joint,
        backward_joint=backward_joint,
        beta=dec.beta,
        energies=(float(energies[0]), float(energies[1])),
        mean_delta_e=mean_de,
        mean_delta_sigma=mean_ds,
        mean_delta_big_sigma=mean_dbs,
        sigma_ft_mean=sigma_ft,
        integral_ft_mean=integral_ft,
    )


def verify_sigma_ft(ledger: EntropyLedger) -> float:
    """<exp(-Delta Sigma)> over the forward EPM distribution; exactly 1."""
    return ledger.sigma_ft_mean


def verify_integral_ft(ledger: EntropyLedger, delta_f: float = 0.0) -> tuple[float, float]:
    """(lhs, rhs) of the integral fluctuation theorem; rhs = exp(-beta dF)."""
    lhs = float(
        np.sum(
            ledger.joint
            * np.exp(
                -ledger.beta * (ledger.delta_e - delta_f)
                - ledger.delta_sigma
                - ledger.delta_big_sigma
            )
        )
        * np.exp(-ledger.beta * delta_f)
    )
    return lhs, float(np.exp(-ledger.beta * delta_f))


def epm_characteristic_identity(rho0: np.ndarray, chan, energies):
    """lhs = <exp(-beta DeltaE)> split into classical and coherence trace terms.

    Returns (lhs, classical_term, coherence_term) with
    classical_term = d tr(rho_th channel(rho_th)) and
    coherence_term = d tr(rho_th channel(chi)); d = 2. DeltaF = 0 because
    the Hamiltonian is time independent.
    """
    dec = decompose_state(rho0, energies)
    rho_th = dec.thermal_state()
    epm = epm_distribution(rho0, chan, energies)
    lhs = float(np.sum(epm.joint * np.exp(-dec.beta * epm.delta_e())))
    d = 2.0
    classical = d * float(np.real(np.trace(rho_th @ _channel.apply_channel(chan, rho_th))))
    coherence = d * float(np.real(np.trace(rho_th @ _channel.apply_channel(chan, dec.chi))))
    return lhs, classical, coherence


def heat_split(rho0: np.ndarray, chan, energies):
    """(EPM mean, TPM mean, coherence term) of the average energy change.

    The coherence term is sum_f E_f tr(Pi_f channel(chi)), i.e. the part
    of the final energy average carried by the propagated coherence.
    """
    epm = epm_distribution(rho0, chan, energies)
    tpm = tpm_distribution(rho0, chan, energies)
    chi = coherence_part(rho0)
    e = np.asarray(energies, dtype=float)
    coherence = float(np.dot(e, final_probability(chan, chi)))
    return epm.mean_delta_e(), tpm.mean_delta_e(), coherence


def epm_characteristic_function(rho0: np.ndarray, chan, energies) -> float:
    """G_EPM = 2 tr(rho_th channel(rho0)) at the decomposed beta."""
    dec = decompose_state(rho0, energies)
    rho_th = dec.thermal_state()
    return 2.0 * float(np.real(np.trace(rho_th @ _channel.apply_channel(chan, rho0))))


def jensen_bounds(ledger: EntropyLedger, rho0: np.ndarray, chan):
    """(beta <DeltaE>, char-fn bound, entropy bound); both bounds <= first value."""
    g = epm_characteristic_function(rho0, chan, ledger.energies)
    if g <= 0.0:
        raise DomainError(f"characteristic function {g} is not positive")
    beta_mean_de = ledger.beta * ledger.mean_delta_e
    bound_charfn = -float(np.log(g))
    bound_entropy = -(ledger.mean_delta_sigma + ledger.mean_delta_big_sigma)
    return beta_mean_de, bound_charfn, bound_entropy


def detailed_balance_ratio(i: int, f: int, ledger: EntropyLedger) -> float:
    """Forward/backward joint probability ratio P(i,f)/P~(f,i)."""
    back = ledger.backward_joint[f, i]
    if back <= ZERO_PROB:
        raise DivergentRatio(f"backward joint probability for (f={f}, i={i}) is zero")
    return float(ledger.joint[i, f] / back)


def detailed_balance_residual(ledger: EntropyLedger, delta_f: float = 0.0) -> float:
    """Max over outcomes of |direct ratio - exponential form| of the balance equation."""
    worst = 0.0
    for i in range(2):
        for f in range(2):
            direct = detailed_balance_ratio(i, f, ledger)
            exponent = (
                ledger.beta * (ledger.delta_e[i, f] - delta_f)
                + ledger.delta_sigma[i, f]
                + ledger.delta_big_sigma[i, f]
            )
            worst = max(worst, abs(direct - float(np.exp(exponent))))
    return worst


def general_entropy_terms(rho0: np.ndarray, rho_b_in: np.ndarray, chan, reversed_chan, energies):
    """Four-term entropy split allowing coherence in the backward initial state.

    Returns (delta_sigma, delta_big_sigma) as (i, f)-indexed tables; with a
    coherence-free backward state it reduces to the tables of entropy_terms.
    """
    dec_fwd = decompose_state(rho0, energies)
    dec_bwd = decompose_state(rho_b_in, energies)

    pf_th = final_probability(chan, dec_fwd.thermal_state())
    pf_chi = final_probability(chan, dec_fwd.chi)
    pt_th = final_probability(reversed_chan, np.diag(np.diag(rho_b_in)))
    pt_chi = final_probability(reversed_chan, dec_bwd.chi)
    if min(np.min(pf_th), np.min(pt_th)) <= ZERO_PROB:
        raise DivergentEntropyTerm("a propagated thermal probability vanished")
    ratio_fwd = 1.0 + pf_chi / pf_th
    ratio_bwd = 1.0 + pt_chi / pt_th
    if min(np.min(ratio_fwd), np.min(ratio_bwd)) <= 0.0:
        raise NonPhysicalCoherenceRatio("a coherence ratio left the physical range")

    delta_sigma = np.log(pf_th)[None, :] - np.log(pt_th)[:, None]
    delta_big_sigma = np.log(ratio_fwd)[None, :] - np.log(ratio_bwd)[:, None]
    return delta_sigma, delta_big_sigma


def relative_entropy_identity(p_in: np.ndarray, p_tilde: np.ndarray):
    """(mean of ln(p~/p) under p, minus the relative entropy); the two are equal."""
    p = np.asarray(p_in, dtype=float)
    q = np.asarray(p_tilde, dtype=float)
    support = p > ZERO_PROB
    if np.any(q[support] <= ZERO_PROB):
        raise DivergentEntropyTerm("backward distribution vanishes on the forward support")
    mean = float(np.sum(p[support] * np.log(q[support] / p[support])))
    neg_relent = -float(np.sum(p[support] * np.log(p[support] / q[support])))
    return mean, neg_relent


def initial_entropy_terms(rho0: np.ndarray, reversed_chan, rho_b_in: np.ndarray) -> np.ndarray:
    """Per-outcome initial-time entropy terms ln[tr(Pi_n rho0) / tr(Pi_n backward(rho_b))].

    Zero for every outcome when the dynamics is unitary and the backward
    process starts from the final state of the forward one.
    """
    p0 = populations(rho0)
    p_back = final_probability(reversed_chan, rho_b_in)
    if min(np.min(p0), np.min(p_back)) <= ZERO_PROB:
        raise DivergentEntropyTerm("an initial-time probability vanished")
    return -np.log(p0 / p_back)


def backward_forward_consistency(chan, reversed_chan, beta: float, energies) -> float:
    """Max discrepancy between backward and forward thermal final probabilities."""
    rho_th = thermal_state(beta, energies)
    forward = final_probability(chan, rho_th)
    backward = final_probability(reversed_chan, rho_th)
    return float(np.max(np.abs(backward - forward)))
