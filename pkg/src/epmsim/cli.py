"""Command-line front end.

Every subcommand accepts ``--config <json>`` plus individual flags; flags
win over file values, and the effective configuration is echoed into
every output. Exit status: 0 success, 1 identity violation, 2 input
error. Outputs are plain CSV or JSON and are byte-identical across runs
with the same configuration and seed.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import asdict, fields, replace

import numpy as np

from . import __version__, channel, dataio, linops, montecarlo, thermo
from .errors import DomainError, EpmError, NonUniqueFixedPoint, NotTracePreserving, ParseError

IDENTITY_TOL = 1e-9
TP_TOL = 1e-9


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON configuration file")
    parser.add_argument("--alpha", type=float, help="pulse mixing angle in radians")
    parser.add_argument("--omega-tau", type=float, dest="omega_tau", help="level splitting times delay")
    parser.add_argument("--p-abs", type=float, dest="p_abs", help="pulse absorption probability")
    parser.add_argument("--p-d", type=float, dest="p_d", help="ground-state transfer probability")
    parser.add_argument("--n-max", type=int, dest="n_max", help="largest pulse count")
    parser.add_argument(
        "--state",
        help="initial state: ket0 | ket1 | plus-y | minus-y | mix:p (p in [0,1])",
    )
    parser.add_argument("--beta", type=float, help="inverse temperature of a thermal initial state")
    parser.add_argument("--shots", type=int, help="measurement repetitions (omit for analytic values)")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def effective_config(args: argparse.Namespace) -> dataio.ExperimentConfig:
    """Config-file values overridden by any explicitly given flags."""
    if args.config:
        cfg = dataio.read_config(args.config)
    else:
        cfg = dataio.ExperimentConfig()
    overrides = {}
    for f in fields(dataio.ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if getattr(args, "state", None) and getattr(args, "state").startswith("mix:"):
        overrides["mix_p"] = float(args.state.split(":", 1)[1])
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def parse_state(spec: str | None, cfg: dataio.ExperimentConfig) -> tuple[str, np.ndarray]:
    """(description, density matrix) for a --state value or config fallback."""
    if spec is None:
        if cfg.mix_p is not None:
            spec = f"mix:{cfg.mix_p}"
        elif cfg.beta is not None:
            rho = thermo.thermal_state(cfg.beta, cfg.pulse_params().energies)
            return f"thermal(beta={cfg.beta})", rho
        else:
            spec = "plus-y"
    if spec.startswith("mix:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad mixture spec {spec!r}; expected mix:p") from None
        return spec, thermo.experimental_initial_state(p)
    label = spec.replace("-", "_")
    return spec, thermo.state_from_label(label)


def _config_header(cfg: dataio.ExperimentConfig, extra: dict | None = None) -> list[str]:
    items = dict(sorted(asdict(cfg).items()))
    if extra:
        items.update(extra)
    lines = [f"# epmsim {__version__}"]
    lines += [f"# {k} = {v}" for k, v in items.items()]
    return lines


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fixed_point(one: np.ndarray) -> channel.FixedPoint:
    """Fixed point of the one-cycle map; the unitary limit falls back to I/2."""
    try:
        return channel.fixed_point(one)
    except NonUniqueFixedPoint:
        rho = 0.5 * np.eye(2, dtype=complex)
        if np.max(np.abs(channel.apply_superoperator(one, rho) - rho)) <= 1e-10:
            return channel.FixedPoint(state=rho, spectral_gap=0.0)
        raise


def _channels(cfg: dataio.ExperimentConfig):
    """Per-N superoperators plus the shared one-cycle fixed point."""
    params = cfg.pulse_params()
    one = channel.cycle_superoperator(params)
    fp = _fixed_point(one)
    ls = [np.linalg.matrix_power(one, n) for n in range(cfg.n_max + 1)]
    return params, fp, ls


def trace_preservation_defect(l: np.ndarray) -> float:
    """How far a superoperator is from preserving the trace."""
    tr = linops.vec(np.eye(2)).conj()
    return float(np.max(np.abs(tr @ np.asarray(l, dtype=complex) - tr)))


def cmd_simulate(args) -> int:
    cfg = effective_config(args)
    params = cfg.pulse_params()
    if args.state:
        desc, rho = parse_state(args.state, cfg)
        states = [(desc, rho)]
    else:
        states = [(lbl.replace("_", "-"), thermo.state_from_label(lbl)) for lbl in thermo.STATE_LABELS]
    one = channel.cycle_superoperator(params)
    buf = io.StringIO()
    buf.write("\n".join(_config_header(cfg)) + "\n")
    buf.write("# per-pulse EPM/TPM excited-state statistics and state trajectory\n")
    buf.write("state,N,p_excited,p_excited_tpm,re_coherence,im_coherence\n")
    for desc, rho in states:
        v = linops.vec(rho)
        p_in = thermo.populations(rho)
        for n in range(cfg.n_max + 1):
            out = linops.unvec(v)
            p_epm = float(np.real(out[0, 0]))
            ln = np.linalg.matrix_power(one, n)
            tpm = thermo.tpm_distribution(rho, ln, params.energies)
            p_tpm = float(tpm.p_fin()[0])
            buf.write(
                f"{desc},{n},{p_epm:.17g},{p_tpm:.17g},"
                f"{np.real(out[0, 1]):.17g},{np.imag(out[0, 1]):.17g}\n"
            )
            v = one @ v
    _emit(buf.getvalue(), args.out)
    return 0


def verify_report(cfg: dataio.ExperimentConfig, state_spec=None, channel_override=None) -> dict:
    """Machine-readable residuals of every verified identity.

    channel_override, if given, replaces the one-cycle superoperator
    (used to exercise the failure paths on corrupted channels).
    """
    params = cfg.pulse_params()
    one = channel_override if channel_override is not None else channel.cycle_superoperator(params)
    one = np.asarray(one, dtype=complex)
    tp_defect = trace_preservation_defect(one)
    if tp_defect > TP_TOL:
        raise NotTracePreserving(f"one-cycle map trace defect {tp_defect:.3e} > {TP_TOL:.1e}")
    fp = _fixed_point(one)
    desc, rho0 = parse_state(state_spec, cfg)

    rows = []
    warnings = []
    for n in range(cfg.n_max + 1):
        ln = np.linalg.matrix_power(one, n)
        kraus = channel.kraus_from_choi(ln)
        reversed_chan = channel.time_reversed_channel(kraus, fp.state)
        row = {
            "N": n,
            "kraus_completeness": kraus.completeness_defect(),
            "reversed_completeness": reversed_chan.completeness_defect(),
            "kraus_reconstruction": float(np.max(np.abs(kraus.superoperator() - ln))),
        }
        try:
            ledger = thermo.entropy_terms(rho0, kraus, reversed_chan, params.energies)
            lhs, rhs = thermo.verify_integral_ft(ledger)
            e_lhs, e_cl, e_coh = thermo.epm_characteristic_identity(rho0, kraus, params.energies)
            h_epm, h_tpm, h_coh = thermo.heat_split(rho0, kraus, params.energies)
            bde, b_cf, b_ent = thermo.jensen_bounds(ledger, rho0, kraus)
            row.update(
                {
                    "sigma_ft": abs(thermo.verify_sigma_ft(ledger) - 1.0),
                    "integral_ft": abs(lhs - rhs),
                    "detailed_balance": thermo.detailed_balance_residual(ledger),
                    "epm_characteristic": abs(e_lhs - (e_cl + e_coh)),
                    "heat_split": abs(h_epm - (h_tpm + h_coh)),
                    "bound_violation": max(0.0, b_cf - bde, b_ent - bde),
                    "mean_big_sigma_negativity": max(0.0, -ledger.mean_delta_big_sigma),
                }
            )
        except EpmError as exc:
            warnings.append(f"N={n}: {type(exc).__name__}: {exc}")
        rows.append(row)

    residual_keys = sorted({k for r in rows for k in r if k != "N"})
    worst = {k: max(r.get(k, 0.0) for r in rows) for k in residual_keys}
    report = {
        "tool": "epmsim",
        "version": __version__,
        "config": dict(sorted(asdict(cfg).items())),
        "state": desc,
        "spectral_gap": fp.spectral_gap,
        "tolerance": IDENTITY_TOL,
        "rows": rows,
        "worst_residuals": worst,
        "warnings": warnings,
        "rng": montecarlo.RNG_ALGORITHM,
        "passed": bool(all(v <= IDENTITY_TOL for v in worst.values())),
    }
    return report


def cmd_verify(args) -> int:
    cfg = effective_config(args)
    report = verify_report(cfg, state_spec=args.state)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if report["passed"] else 1


def cmd_entropy(args) -> int:
    cfg = effective_config(args)
    params, fp, ls = _channels(cfg)
    desc, rho0 = parse_state(args.state, cfg)
    shot_cfg = None
    if cfg.shots is not None:
        shot_cfg = montecarlo.ShotConfig(shots=cfg.shots, seed=cfg.seed)
    buf = io.StringIO()
    extra = {"state": desc, "rng": montecarlo.RNG_ALGORITHM} if shot_cfg else {"state": desc}
    buf.write("\n".join(_config_header(cfg, extra)) + "\n")
    buf.write("# coherence-affected entropy production and fluctuation-theorem means per pulse count\n")
    if shot_cfg:
        buf.write(
            "N,mean_delta_sigma,mean_big_sigma,sigma_ft,integral_ft,"
            "mean_big_sigma_err,sigma_ft_err,integral_ft_err,dropped_resamples\n"
        )
    else:
        buf.write("N,mean_delta_sigma,mean_big_sigma,sigma_ft,integral_ft\n")
    for n, ln in enumerate(ls):
        kraus = channel.kraus_from_choi(ln)
        rev = channel.time_reversed_channel(kraus, fp.state)
        ledger = thermo.entropy_terms(rho0, kraus, rev, params.energies)
        lhs, _ = thermo.verify_integral_ft(ledger)
        if shot_cfg:
            emp = montecarlo.empirical_ledger(rho0, kraus, rev, params.energies, shot_cfg)
            buf.write(
                f"{n},{ledger.mean_delta_sigma:.17g},{emp.mean_delta_big_sigma.value:.17g},"
                f"{emp.sigma_ft.value:.17g},{emp.integral_ft.value:.17g},"
                f"{emp.mean_delta_big_sigma.std_err:.17g},{emp.sigma_ft.std_err:.17g},"
                f"{emp.integral_ft.std_err:.17g},{emp.dropped_resamples}\n"
            )
        else:
            buf.write(
                f"{n},{ledger.mean_delta_sigma:.17g},{ledger.mean_delta_big_sigma:.17g},"
                f"{ledger.sigma_ft_mean:.17g},{lhs:.17g}\n"
            )
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_heat(args) -> int:
    cfg = effective_config(args)
    params, fp, ls = _channels(cfg)
    desc, rho0 = parse_state(args.state, cfg)
    buf = io.StringIO()
    buf.write("\n".join(_config_header(cfg, {"state": desc})) + "\n")
    buf.write("# average energy change: end-point mean, two-point mean, coherence contribution\n")
    buf.write("N,mean_delta_e_epm,mean_delta_e_tpm,coherence_term\n")
    for n, ln in enumerate(ls):
        epm, tpm, coh = thermo.heat_split(rho0, ln, params.energies)
        buf.write(f"{n},{epm:.17g},{tpm:.17g},{coh:.17g}\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_bounds(args) -> int:
    cfg = effective_config(args)
    params, fp, ls = _channels(cfg)
    desc, rho0 = parse_state(args.state, cfg)
    buf = io.StringIO()
    buf.write("\n".join(_config_header(cfg, {"state": desc})) + "\n")
    buf.write("# average EPM energy change against its two lower bounds\n")
    buf.write("N,beta_mean_delta_e,bound_characteristic,bound_entropy\n")
    for n, ln in enumerate(ls):
        kraus = channel.kraus_from_choi(ln)
        rev = channel.time_reversed_channel(kraus, fp.state)
        ledger = thermo.entropy_terms(rho0, kraus, rev, params.energies)
        bde, b_cf, b_ent = thermo.jensen_bounds(ledger, rho0, kraus)
        buf.write(f"{n},{bde:.17g},{b_cf:.17g},{b_ent:.17g}\n")
    _emit(buf.getvalue(), args.out)
    return 0


def _complex_listing(m: np.ndarray) -> list:
    return [[[float(np.real(x)), float(np.imag(x))] for x in row] for row in np.asarray(m)]


def cmd_kraus(args) -> int:
    cfg = effective_config(args)
    params = cfg.pulse_params()
    ln = channel.n_pulse_superoperator(params, cfg.n_max)
    one = channel.cycle_superoperator(params)
    fp = _fixed_point(one)
    kraus = channel.kraus_from_choi(ln)
    rev = channel.time_reversed_channel(kraus, fp.state)
    choi = channel.choi_matrix(ln)
    w, _ = linops.hermitian_eig(choi)
    out = {
        "tool": "epmsim",
        "version": __version__,
        "config": dict(sorted(asdict(cfg).items())),
        "choi_eigenvalues": [float(x) for x in w],
        "kraus_rank": len(kraus),
        "kraus_operators": [_complex_listing(k) for k in kraus.operators],
        "kraus_completeness_defect": kraus.completeness_defect(),
        "fixed_point": _complex_listing(fp.state),
        "spectral_gap": fp.spectral_gap,
        "reversed_kraus_operators": [_complex_listing(k) for k in rev.operators],
        "reversed_completeness_defect": rev.completeness_defect(),
        "reversed_fixed_point_defect": float(np.max(np.abs(rev.apply(fp.state) - fp.state))),
    }
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_fit(args) -> int:
    cfg = effective_config(args)
    table = dataio.read_measurements(args.measurements)
    result = dataio.fit_parameters(table, cfg.alpha, cfg.omega_tau, weighted=args.weighted)
    out = {
        "tool": "epmsim",
        "version": __version__,
        "alpha": cfg.alpha,
        "omega_tau": cfg.omega_tau,
        "weighted": bool(args.weighted),
        "p_abs": result.p_abs,
        "p_d": result.p_d,
        "residual": result.residual,
    }
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_mix(args) -> int:
    cfg = effective_config(args)
    table = dataio.read_measurements(args.measurements)
    if args.weights:
        parts = args.weights.split(",")
        if len(parts) != 4:
            raise DomainError("expected 4 comma-separated weights (ket0,ket1,plus_y,minus_y)")
        weights = np.array([float(x) for x in parts])
        desc = f"weights:{args.weights}"
    else:
        desc, rho0 = parse_state(args.state, cfg)
        weights = dataio.mix_weights(rho0)
    mixed = dataio.mix_measured(table, weights)
    buf = io.StringIO()
    buf.write("\n".join(_config_header(cfg, {"state": desc})) + "\n")
    buf.write("# measured curves combined into the statistics of a mixed initial state\n")
    buf.write("N,p_excited,std_err\n")
    for n, (p, err) in enumerate(zip(mixed.p_excited, mixed.std_err)):
        buf.write(f"{n},{p:.17g},{err:.17g}\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_sample(args) -> int:
    cfg = effective_config(args)
    params = cfg.pulse_params()
    rng = np.random.default_rng(cfg.seed)
    table = dataio.synthetic_table(params, cfg.n_max, rng=rng, shots=cfg.shots)
    buf = io.StringIO()
    extra = {"rng": montecarlo.RNG_ALGORITHM}
    buf.write("\n".join(_config_header(cfg, extra)) + "\n")
    buf.write("# synthetic per-pulse excited-state measurement curves\n")
    buf.write(",".join(dataio.CSV_HEADER) + "\n")
    for label, n, p, err in table.rows:
        buf.write(f"{label},{n},{p:.17g},{err:.17g}\n")
    _emit(buf.getvalue(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epmsim",
        description="Pulsed dissipative qubit channel: measurement statistics and "
        "fluctuation-theorem verification.",
    )
    parser.add_argument("--version", action="version", version=f"epmsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    specs = [
        ("simulate", cmd_simulate, "per-pulse EPM/TPM statistics and state trajectory"),
        ("verify", cmd_verify, "check every fluctuation-theorem identity, exit 1 on violation"),
        ("entropy", cmd_entropy, "entropy-production terms and exponential means per pulse count"),
        ("heat", cmd_heat, "EPM/TPM average energy change and the coherence contribution"),
        ("bounds", cmd_bounds, "average energy change against its two lower bounds"),
        ("kraus", cmd_kraus, "Kraus operators, Choi spectrum, fixed point, time-reversed set"),
        ("fit", cmd_fit, "fit (p_abs, p_d) to a measurement CSV"),
        ("mix", cmd_mix, "combine measured pure-state curves into a mixed-state curve"),
        ("sample", cmd_sample, "emit a synthetic (optionally finite-shot) measurement CSV"),
    ]
    for name, fn, help_text in specs:
        sp = sub.add_parser(name, help=help_text)
        _add_common(sp)
        if name in ("fit", "mix"):
            sp.add_argument("measurements", help="measurement CSV path")
        if name == "fit":
            sp.add_argument("--weighted", action="store_true", help="inverse-variance weighting")
        if name == "mix":
            sp.add_argument("--weights", help="comma-separated weights over ket0,ket1,plus_y,minus_y")
        sp.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, DomainError, FileNotFoundError) as exc:
        print(f"epmsim: error: {exc}", file=sys.stderr)
        return 2
    except EpmError as exc:
        print(f"epmsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
