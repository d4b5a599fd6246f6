"""Tests for the measurement statistics and entropy-production terms."""
import numpy as np
import pytest

from epmsim import channel, thermo
from epmsim.errors import DivergentRatio, DomainError, InfiniteBeta

REF = channel.PulseParams(p_abs=0.700, p_d=0.255, alpha=np.pi / 4, omega_tau=2 * np.pi * 0.9)


def ref_machinery(n):
    one = channel.cycle_superoperator(REF)
    fp = channel.fixed_point(one)
    kraus = channel.kraus_from_choi(np.linalg.matrix_power(one, n))
    rev = channel.time_reversed_channel(kraus, fp.state)
    return kraus, rev


def test_state_labels_and_vectors():
    for label in thermo.STATE_LABELS:
        rho = thermo.state_from_label(label)
        assert abs(np.trace(rho) - 1.0) < 1e-15
        assert np.max(np.abs(rho @ rho - rho)) < 1e-15
    assert np.imag(thermo.state_from_label("plus_y")[0, 1]) == pytest.approx(-0.5)
    assert np.imag(thermo.state_from_label("minus_y")[0, 1]) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        thermo.state_from_label("plus_x")


def test_experimental_state_family():
    rho = thermo.experimental_initial_state(0.38)
    assert thermo.populations(rho) == pytest.approx([0.69, 0.31])
    assert np.imag(rho[0, 1]) == pytest.approx(-0.31)
    assert np.real(rho[0, 1]) == pytest.approx(0.0)
    assert np.allclose(thermo.experimental_initial_state(0.0), thermo.state_from_label("plus_y"))
    with pytest.raises(DomainError):
        thermo.experimental_initial_state(1.2)


def test_decompose_state_beta_frozen():
    rho = thermo.experimental_initial_state(0.38)
    dec = thermo.decompose_state(rho, REF.energies)
    assert dec.beta == pytest.approx(-0.14149215741785615, abs=1e-14)
    # thermal part reproduces the populations, chi the off-diagonals
    assert np.max(np.abs(np.diag(dec.thermal_state()).real - thermo.populations(rho))) < 1e-14
    assert np.max(np.abs(dec.thermal_state() + dec.chi - rho)) < 1e-14


def test_decompose_pure_eigenstate_raises():
    with pytest.raises(InfiniteBeta):
        thermo.decompose_state(thermo.state_from_label("ket0"), REF.energies)


def test_thermal_state_signs():
    e = (0.5, -0.5)
    hot = thermo.thermal_state(0.0, e)
    assert np.allclose(np.diag(hot).real, [0.5, 0.5])
    cold = thermo.thermal_state(10.0, e)
    assert np.diag(cold).real[1] > 0.99
    inverted = thermo.thermal_state(-10.0, e)
    assert np.diag(inverted).real[0] > 0.99


def test_epm_joint_factorizes():
    kraus, _ = ref_machinery(4)
    rho = thermo.experimental_initial_state(0.2)
    epm = thermo.epm_distribution(rho, kraus, REF.energies)
    assert epm.joint.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(epm.joint - np.outer(epm.p_in, epm.p_fin))) < 1e-15


def test_tpm_destroys_coherence():
    kraus, _ = ref_machinery(4)
    rho = thermo.experimental_initial_state(0.2)
    diag = np.diag(np.diag(rho))
    tpm = thermo.tpm_distribution(rho, kraus, REF.energies)
    assert tpm.joint.sum() == pytest.approx(1.0, abs=1e-14)
    # TPM final marginal equals the EPM one of the dephased state
    epm_diag = thermo.epm_distribution(diag, kraus, REF.energies)
    assert np.max(np.abs(tpm.p_fin() - epm_diag.p_fin)) < 1e-14


def test_sigma_ft_exact():
    for n in (0, 1, 5, 13):
        kraus, rev = ref_machinery(n)
        for p in (0.0, 0.2, 0.38):
            rho = thermo.experimental_initial_state(p)
            ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
            assert abs(thermo.verify_sigma_ft(ledger) - 1.0) < 1e-13


def test_integral_ft_exact():
    for n in (0, 1, 5, 13):
        kraus, rev = ref_machinery(n)
        for p in (0.0, 0.2, 0.38):
            rho = thermo.experimental_initial_state(p)
            ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
            lhs, rhs = thermo.verify_integral_ft(ledger)
            assert lhs == pytest.approx(rhs, abs=1e-12)
            assert rhs == pytest.approx(1.0)  # time-independent Hamiltonian


def test_detailed_balance_per_outcome():
    kraus, rev = ref_machinery(6)
    rho = thermo.experimental_initial_state(0.38)
    ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
    assert thermo.detailed_balance_residual(ledger) < 1e-12
    for i in range(2):
        for f in range(2):
            ratio = thermo.detailed_balance_ratio(i, f, ledger)
            assert ratio > 0.0


def test_detailed_balance_zero_backward_raises():
    kraus, rev = ref_machinery(2)
    rho = thermo.experimental_initial_state(0.2)
    ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
    broken = thermo.EntropyLedger(
        delta_e=ledger.delta_e,
        delta_sigma=ledger.delta_sigma,
        delta_big_sigma=ledger.delta_big_sigma,
        joint=ledger.joint,
        backward_joint=np.zeros((2, 2)),
        beta=ledger.beta,
        energies=ledger.energies,
    )
    with pytest.raises(DivergentRatio):
        thermo.detailed_balance_ratio(0, 0, broken)


def test_big_sigma_depends_on_final_outcome_only():
    kraus, rev = ref_machinery(7)
    rho = thermo.state_from_label("plus_y")
    ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
    assert np.array_equal(ledger.delta_big_sigma[0], ledger.delta_big_sigma[1])


def test_epm_characteristic_identity():
    for n in (1, 4, 12):
        kraus, _ = ref_machinery(n)
        for p in (0.0, 0.38):
            rho = thermo.experimental_initial_state(p)
            lhs, classical, coherence = thermo.epm_characteristic_identity(
                rho, kraus, REF.energies
            )
            assert lhs == pytest.approx(classical + coherence, abs=1e-12)
            if p > 0.0:
                # at beta != 0 the coherence genuinely contributes
                assert abs(coherence) > 1e-6


def test_heat_split():
    for n in (1, 4, 12):
        kraus, _ = ref_machinery(n)
        rho = thermo.experimental_initial_state(0.38)
        epm, tpm, coherence = thermo.heat_split(rho, kraus, REF.energies)
        assert epm == pytest.approx(tpm + coherence, abs=1e-12)
    # dephased state: no coherence contribution, EPM = TPM
    diag = np.diag(np.diag(thermo.experimental_initial_state(0.38)))
    epm, tpm, coherence = thermo.heat_split(diag, kraus, REF.energies)
    assert coherence == pytest.approx(0.0, abs=1e-14)
    assert epm == pytest.approx(tpm, abs=1e-14)


def test_jensen_bounds_hold():
    for n in range(0, 21, 4):
        kraus, rev = ref_machinery(n)
        rho = thermo.experimental_initial_state(0.38)
        ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
        bde, b_cf, b_ent = thermo.jensen_bounds(ledger, rho, kraus)
        assert b_cf <= bde + 1e-12
        assert b_ent <= bde + 1e-12


def test_mean_big_sigma_nonnegative_equals_relative_entropy_bound():
    for n in (1, 5, 20):
        kraus, rev = ref_machinery(n)
        for p in (0.0, 0.2, 0.38):
            rho = thermo.experimental_initial_state(p)
            ledger = thermo.entropy_terms(rho, kraus, rev, REF.energies)
            assert ledger.mean_delta_big_sigma >= -1e-13


def test_relative_entropy_identity():
    rng = np.random.default_rng(29)
    for _ in range(20):
        p = rng.dirichlet(np.ones(2))
        q = rng.dirichlet(np.ones(2))
        mean, neg_relent = thermo.relative_entropy_identity(p, q)
        assert mean == pytest.approx(neg_relent, abs=1e-13)
        assert mean <= 1e-13  # -D(p||q) <= 0


def test_initial_entropy_terms_zero_for_unitary():
    params = channel.PulseParams(0.0, 0.0, np.pi / 4, 2 * np.pi * 0.9)
    one = channel.cycle_superoperator(params)
    ln = np.linalg.matrix_power(one, 9)
    kraus = channel.kraus_from_choi(ln)
    rev = channel.time_reversed_channel(kraus, 0.5 * np.eye(2, dtype=complex))
    rho0 = thermo.experimental_initial_state(0.38)
    rho_fin = channel.apply_superoperator(ln, rho0)
    terms = thermo.initial_entropy_terms(rho0, rev, rho_fin)
    assert np.max(np.abs(terms)) < 1e-12


def test_backward_forward_consistency_magnitude():
    # the backward channel is not the reverse protocol; the discrepancy is
    # small but nonzero for the dissipative cycle
    one = channel.cycle_superoperator(REF)
    fp = channel.fixed_point(one)
    kraus = channel.kraus_from_choi(one)
    rev = channel.time_reversed_channel(kraus, fp.state)
    d = thermo.backward_forward_consistency(kraus, rev, -0.14149215741785615, REF.energies)
    assert 0.0 < d < 0.1
