"""Tests for the command-line front end."""
import json

import numpy as np
import pytest

from epmsim import channel, cli, dataio
from epmsim.errors import NotTracePreserving


def run(argv):
    return cli.main(argv)


def test_simulate_n_max_zero(tmp_path):
    out = tmp_path / "sim.csv"
    assert run(["simulate", "--n-max", "0", "--state", "ket0", "--out", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "state,N,p_excited,p_excited_tpm,re_coherence,im_coherence"
    assert lines[1].startswith("ket0,0,1,1,0,0")
    assert len(lines) == 2


def test_simulate_all_states_converge(tmp_path):
    out = tmp_path / "sim.csv"
    assert run(["simulate", "--n-max", "20", "--out", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][1:]
    finals = [float(ln.split(",")[2]) for ln in lines if ln.split(",")[1] == "20"]
    assert len(finals) == 4
    params = channel.PulseParams(0.700, 0.255, np.pi / 4, 2 * np.pi * 0.9)
    fp = channel.fixed_point(channel.cycle_superoperator(params))
    for value in finals:
        assert abs(value - np.real(fp.state[0, 0])) < 1e-3


def test_simulate_unitary_oscillation(tmp_path):
    out = tmp_path / "sim.csv"
    assert run(["simulate", "--p-abs", "0", "--state", "plus-y", "--n-max", "12", "--out", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][1:]
    values = np.array([float(ln.split(",")[2]) for ln in lines])
    # populations frozen under the free Hamiltonian; coherence rotates undamped
    assert np.max(np.abs(values - 0.5)) < 1e-12
    mags = np.array([abs(complex(float(ln.split(",")[4]), float(ln.split(",")[5]))) for ln in lines])
    assert np.max(np.abs(mags - 0.5)) < 1e-12


def test_verify_passes_and_reports(tmp_path):
    out = tmp_path / "report.json"
    assert run(["verify", "--state", "mix:0.38", "--n-max", "10", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["state"] == "mix:0.38"
    assert len(report["rows"]) == 11
    for key, value in report["worst_residuals"].items():
        assert value <= report["tolerance"], key


def test_verify_corrupted_channel_not_tp():
    cfg = dataio.ExperimentConfig(n_max=2)
    params = cfg.pulse_params()
    bad = channel.cycle_superoperator(params).copy()
    bad[0, 0] += 0.05  # breaks trace preservation
    with pytest.raises(NotTracePreserving):
        cli.verify_report(cfg, channel_override=bad)


def test_verify_unitary_limit(tmp_path):
    out = tmp_path / "u.json"
    assert run(["verify", "--p-abs", "0", "--state", "plus-y", "--n-max", "6", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["spectral_gap"] == 0.0


def test_entropy_and_bounds_outputs(tmp_path):
    e_out = tmp_path / "e.csv"
    b_out = tmp_path / "b.csv"
    assert run(["entropy", "--state", "plus-y", "--n-max", "8", "--out", str(e_out)]) == 0
    assert run(["bounds", "--state", "mix:0.38", "--n-max", "8", "--out", str(b_out)]) == 0
    e_lines = [ln for ln in e_out.read_text().splitlines() if not ln.startswith("#")][1:]
    for ln in e_lines:
        _, _, mean_bs, sigma_ft, integral_ft = ln.split(",")
        assert float(mean_bs) >= -1e-12
        assert float(sigma_ft) == pytest.approx(1.0, abs=1e-12)
        assert float(integral_ft) == pytest.approx(1.0, abs=1e-10)
    b_lines = [ln for ln in b_out.read_text().splitlines() if not ln.startswith("#")][1:]
    for ln in b_lines:
        _, bde, b_cf, b_ent = map(float, ln.split(","))
        assert b_cf <= bde + 1e-10
        assert b_ent <= bde + 1e-10


def test_heat_dephased_state_zero_coherence_term(tmp_path):
    out = tmp_path / "h.csv"
    assert run(["heat", "--beta", "0.3", "--n-max", "5", "--out", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][1:]
    for ln in lines:
        _, epm, tpm, coh = map(float, ln.split(","))
        assert coh == pytest.approx(0.0, abs=1e-13)
        assert epm == pytest.approx(tpm, abs=1e-13)


def test_kraus_report(tmp_path):
    out = tmp_path / "k.json"
    assert run(["kraus", "--n-max", "1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["kraus_rank"] == 3
    assert report["kraus_completeness_defect"] < 1e-10
    assert report["reversed_completeness_defect"] < 1e-8
    assert report["reversed_fixed_point_defect"] < 1e-8
    assert report["choi_eigenvalues"][0] == pytest.approx(1.2237445087377734, abs=1e-10)


def test_sample_fit_pipeline(tmp_path):
    meas = tmp_path / "meas.csv"
    fit_out = tmp_path / "fit.json"
    assert run(["sample", "--shots", "1000000", "--seed", "5", "--n-max", "20", "--out", str(meas)]) == 0
    assert run(["fit", str(meas), "--out", str(fit_out)]) == 0
    result = json.loads(fit_out.read_text())
    assert abs(result["p_abs"] - 0.700) < 0.01
    assert abs(result["p_d"] - 0.255) < 0.01


def test_mix_command(tmp_path):
    meas = tmp_path / "meas.csv"
    mix_out = tmp_path / "mix.csv"
    assert run(["sample", "--n-max", "6", "--out", str(meas)]) == 0
    assert run(["mix", str(meas), "--state", "mix:0.38", "--out", str(mix_out)]) == 0
    lines = [ln for ln in mix_out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "N,p_excited,std_err"
    assert len(lines) == 8
    # weight-1 identity through the CLI
    one_out = tmp_path / "one.csv"
    assert run(["mix", str(meas), "--weights", "0,0,1,0", "--out", str(one_out)]) == 0
    table = dataio.read_measurements(meas)
    p, _ = table.curve("plus_y")
    data = [ln for ln in one_out.read_text().splitlines() if not ln.startswith("#")][1:]
    got = [float(ln.split(",")[1]) for ln in data]
    assert np.array_equal(got, p)


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["entropy", "--state", "plus-y", "--n-max", "5", "--shots", "20000", "--seed", "9"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    dataio.write_config(dataio.ExperimentConfig(n_max=3, p_abs=0.5), cfg_path)
    out = tmp_path / "o.csv"
    assert run(["heat", "--config", str(cfg_path), "--p-abs", "0.7", "--state", "plus-y", "--out", str(out)]) == 0
    text = out.read_text()
    assert "# p_abs = 0.7" in text  # flag wins
    assert "# n_max = 3" in text  # file value kept
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")][1:]
    assert len(lines) == 4


def test_exit_codes_for_bad_input(tmp_path):
    assert run(["heat", "--p-abs", "1.5"]) == 2
    assert run(["fit", str(tmp_path / "missing.csv")]) == 2
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text('{"alpha": 0.1, "bogus": 1}')
    assert run(["heat", "--config", str(bad_cfg)]) == 2
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("state,N,p_excited,std_err\nket0,0,2.0,0.0\n")
    assert run(["fit", str(bad_csv)]) == 2
