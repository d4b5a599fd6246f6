"""Finite-shot synthetic measurements with bootstrap error bars.

Each probability that the measurement protocol needs (initial excited
population of rho0, per-pulse final excited probability of each of the
four pure preparation states, and an independent direct run on rho0 that
supplies the outcome weights) is drawn as its own binomial experiment.
Derived quantities rebuild the thermal/coherence split from the sampled
pure-state curves, the same data processing used on the real curves.
Keeping the weight dataset separate from the curve datasets is what makes
the fluctuation-theorem estimators fluctuate: for a qubit every single
marginal is automatically normalized, so an estimator built from one
dataset would telescope to exactly 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import thermo
from .errors import DivergentEntropyTerm, DomainError

RNG_ALGORITHM = "numpy.random.PCG64"


@dataclass(frozen=True)
class ShotConfig:
    """Shot count (None = infinite-shot analytic passthrough), seed, resamples."""

    shots: int | None = 10**6
    seed: int = 12345
    bootstrap_resamples: int = 1000

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise DomainError(f"shots must be >= 1 (or None), got {self.shots}")
        if self.bootstrap_resamples < 1:
            raise DomainError(f"bootstrap_resamples must be >= 1, got {self.bootstrap_resamples}")

    def metadata(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "bootstrap_resamples": self.bootstrap_resamples,
            "rng": RNG_ALGORITHM,
        }


@dataclass(frozen=True)
class EmpiricalEstimate:
    value: float
    std_err: float
    shots: int | None


def sample_marginal(prob: float, config: ShotConfig, rng=None) -> EmpiricalEstimate:
    """Binomial estimate of a probability with its analytic standard error."""
    if not 0.0 <= prob <= 1.0:
        raise DomainError(f"probability must be in [0, 1], got {prob}")
    if config.shots is None:
        return EmpiricalEstimate(value=float(prob), std_err=0.0, shots=None)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    k = rng.binomial(config.shots, prob)
    p_hat = k / config.shots
    std = float(np.sqrt(p_hat * (1.0 - p_hat) / config.shots))
    return EmpiricalEstimate(value=float(p_hat), std_err=std, shots=config.shots)


def pure_mixture_weights(rho0: np.ndarray) -> np.ndarray:
    """Convex weights over (ket0, ket1, plus_y, minus_y) reproducing rho0.

    Only states in the y-z plane of the Bloch sphere (real part of the
    off-diagonal zero) are reachable from the four preparation states.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if abs(np.real(rho0[0, 1])) > 1e-12:
        raise DomainError("state is outside the y-z plane; not a mixture of the four preparations")
    m = -2.0 * float(np.imag(rho0[0, 1]))  # +1 for |+y>, -1 for |-y>
    wp, wm = max(m, 0.0), max(-m, 0.0)
    pops = thermo.populations(rho0)
    w0 = pops[0] - 0.5 * (wp + wm)
    w1 = pops[1] - 0.5 * (wp + wm)
    if min(w0, w1) < -1e-12:
        raise DomainError("state is not a convex mixture of the four preparation states")
    w = np.array([max(w0, 0.0), max(w1, 0.0), wp, wm])
    return w / w.sum()


@dataclass(frozen=True)
class EmpiricalLedger:
    """Finite-shot analogues of the entropy-ledger averages."""

    sigma_ft: EmpiricalEstimate
    mean_delta_big_sigma: EmpiricalEstimate
    integral_ft: EmpiricalEstimate
    mean_delta_e: EmpiricalEstimate
    dropped_resamples: int
    metadata: dict = field(repr=False, default_factory=dict)


def _derived(q1, p_k0, p_k1, p_py, p_my, p_a, weights, p_tilde, energies):
    """Vectorized derived quantities from the sampled base probabilities.

    All inputs broadcast; returns (sigma_ft, mean_bs, integral_ft, mean_de,
    valid_mask) arrays of the broadcast shape.
    """
    e = np.asarray(energies, dtype=float)
    q = np.stack([1.0 - q1, q1], axis=-1)
    th1 = (1.0 - q1) * p_k0 + q1 * p_k1
    th = np.stack([1.0 - th1, th1], axis=-1)
    curves = np.stack([p_k0, p_k1, p_py, p_my], axis=-1)
    b1 = curves @ weights
    b = np.stack([1.0 - b1, b1], axis=-1)
    a = np.stack([1.0 - p_a, p_a], axis=-1)

    valid = (th.min(axis=-1) > 0.0) & (b.min(axis=-1) > 0.0) & (q.min(axis=-1) > 0.0)
    th_safe = np.where(th > 0.0, th, 1.0)
    b_safe = np.where(b > 0.0, b, 1.0)
    q_safe = np.where(q > 0.0, q, 1.0)

    big_sigma = np.log(b_safe / th_safe)  # indexed by final outcome
    beta = np.log(q_safe[..., 1] / q_safe[..., 0]) / (e[0] - e[1])
    delta_e = e[None, :] - e[:, None]
    # (..., i, f) tables
    dsig = np.log(th_safe)[..., None, :] - np.log(p_tilde)[:, None]
    joint = q[..., :, None] * a[..., None, :]
    bs_table = big_sigma[..., None, :] * np.ones((2, 1))
    sigma_ft = np.sum(joint * np.exp(-bs_table), axis=(-2, -1))
    mean_bs = np.sum(joint * bs_table, axis=(-2, -1))
    expo = -beta[..., None, None] * delta_e - dsig - bs_table
    integral_ft = np.sum(joint * np.exp(expo), axis=(-2, -1))
    mean_de = np.sum(joint * delta_e, axis=(-2, -1))
    return sigma_ft, mean_bs, integral_ft, mean_de, valid


def empirical_ledger(
    rho0: np.ndarray, chan, reversed_chan, energies, config: ShotConfig
) -> EmpiricalLedger:
    """Sampled fluctuation-theorem averages with bootstrap standard errors.

    Identical (config, inputs) give bit-identical output. The backward
    probabilities entering Delta sigma are computed, not sampled (the
    backward process is simulated, not measured).
    """
    weights = pure_mixture_weights(rho0)
    true_q1 = float(thermo.populations(rho0)[1])
    true_curves = [
        float(thermo.final_probability(chan, thermo.state_from_label(lbl))[1])
        for lbl in thermo.STATE_LABELS
    ]
    true_a = float(thermo.final_probability(chan, rho0)[1])
    p_tilde = thermo.final_probability(
        reversed_chan, np.diag(np.diag(rho0)).astype(complex)
    )
    if np.min(p_tilde) <= thermo.ZERO_PROB:
        raise DivergentEntropyTerm(f"backward final probabilities {p_tilde} contain a zero")

    if config.shots is None:
        base = np.array([true_q1, *true_curves, true_a])
        s, mbs, ift, mde, valid = _derived(*base, weights, p_tilde, energies)
        if not valid:
            raise DomainError("analytic probabilities leave a log undefined")
        return EmpiricalLedger(
            sigma_ft=EmpiricalEstimate(float(s), 0.0, None),
            mean_delta_big_sigma=EmpiricalEstimate(float(mbs), 0.0, None),
            integral_ft=EmpiricalEstimate(float(ift), 0.0, None),
            mean_delta_e=EmpiricalEstimate(float(mde), 0.0, None),
            dropped_resamples=0,
            metadata=config.metadata(),
        )

    rng = np.random.default_rng(config.seed)
    shots = config.shots
    base_true = np.array([true_q1, *true_curves, true_a])
    base_hat = rng.binomial(shots, base_true) / shots

    s, mbs, ift, mde, valid = _derived(*base_hat, weights, p_tilde, energies)
    if not valid:
        raise DomainError("sampled probabilities leave a log undefined; increase shots")

    nres = config.bootstrap_resamples
    res = rng.binomial(shots, np.broadcast_to(base_hat, (nres, 6))) / shots
    rs, rbs, rift, rmde, rvalid = _derived(
        res[:, 0], res[:, 1], res[:, 2], res[:, 3], res[:, 4], res[:, 5],
        weights, p_tilde, energies,
    )
    dropped = int(nres - np.count_nonzero(rvalid))

    def est(value, samples):
        good = samples[rvalid]
        std = float(np.std(good)) if good.size > 1 else 0.0
        return EmpiricalEstimate(float(value), std, shots)

    return EmpiricalLedger(
        sigma_ft=est(s, rs),
        mean_delta_big_sigma=est(mbs, rbs),
        integral_ft=est(ift, rift),
        mean_delta_e=est(mde, rmde),
        dropped_resamples=dropped,
        metadata=config.metadata(),
    )
