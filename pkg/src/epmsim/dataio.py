"""File formats, curve mixing, and parameter fitting.

Measurement tables are CSV with header ``state,N,p_excited,std_err``
(UTF-8, dot decimal separator); ``p_excited`` is the population of the
energy eigenstate with E = +omega/2 after N pulse cycles. Configurations
are JSON with the exact ExperimentConfig field names; unknown fields are
rejected. All numbers are serialized with 17 significant digits.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from . import channel, linops, thermo
from .errors import DomainError, IncompleteData, ParseError

CSV_HEADER = ("state", "N", "p_excited", "std_err")
GRID_STEP = 0.005
REFINE_STEP = 1e-5


@dataclass(frozen=True)
class MeasurementTable:
    """Rows of (state label, pulse count, excited population, standard error).

    (label, N) pairs are unique and N runs contiguously from 0 within
    each label.
    """

    rows: tuple = ()

    def __post_init__(self):
        seen = {}
        for k, row in enumerate(self.rows):
            label, n, p, err = row
            where = f"row {k} ({label!r}, N={n})"
            if label not in thermo.STATE_LABELS:
                raise ParseError(f"{where}: unknown state label")
            if not isinstance(n, int) or n < 0:
                raise ParseError(f"{where}: N must be a nonnegative integer")
            if not 0.0 <= p <= 1.0:
                raise ParseError(f"{where}: p_excited = {p} outside [0, 1]")
            if err < 0.0:
                raise ParseError(f"{where}: std_err = {err} is negative")
            if (label, n) in seen:
                raise ParseError(f"{where}: duplicate (state, N) pair")
            seen[(label, n)] = True
        for label in self.labels():
            ns = sorted(n for lbl, n, _, _ in self.rows if lbl == label)
            if ns != list(range(len(ns))):
                raise ParseError(f"state {label!r}: N values {ns} are not contiguous from 0")

    def labels(self) -> tuple:
        out = []
        for label, *_ in self.rows:
            if label not in out:
                out.append(label)
        return tuple(out)

    def curve(self, label: str):
        """(p_excited, std_err) arrays indexed by N for one state label."""
        rows = sorted((n, p, e) for lbl, n, p, e in self.rows if lbl == label)
        if not rows:
            raise IncompleteData(f"no rows for state {label!r}")
        return (
            np.array([p for _, p, _ in rows]),
            np.array([e for _, _, e in rows]),
        )


def write_measurements(table: MeasurementTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for label, n, p, err in table.rows:
            writer.writerow([label, n, f"{p:.17g}", f"{err:.17g}"])


def read_measurements(path) -> MeasurementTable:
    """Read a measurement CSV; lines starting with '#' are comments."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        numbered = [
            (k, line)
            for k, line in enumerate(fh, start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
        if not numbered:
            raise ParseError(f"{path}: empty file")
        linenos = [k for k, _ in numbered]
        reader = csv.reader(line for _, line in numbered)
        header = next(reader)
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"{path} line {linenos[0]}: header {header} != {list(CSV_HEADER)}")
        for lineno, rec in zip(linenos[1:], reader):
            if len(rec) != 4:
                raise ParseError(f"{path} line {lineno}: expected 4 fields, got {len(rec)}")
            label = rec[0].strip()
            try:
                n = int(rec[1])
            except ValueError:
                raise ParseError(f"{path} line {lineno}: field 'N' = {rec[1]!r} is not an integer") from None
            try:
                p, err = float(rec[2]), float(rec[3])
            except ValueError:
                raise ParseError(f"{path} line {lineno}: non-numeric probability fields") from None
            rows.append((label, n, p, err))
    try:
        return MeasurementTable(rows=tuple(rows))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Run configuration; ranges mirror the channel parameter domain."""

    alpha: float = np.pi / 4
    omega_tau: float = 2 * np.pi * 0.9
    tau_ns: float = 190.0
    p_abs: float = 0.700
    p_d: float = 0.255
    n_max: int = 20
    beta: float | None = None
    mix_p: float | None = None
    shots: int | None = None
    seed: int = 12345

    def __post_init__(self):
        channel.PulseParams(self.p_abs, self.p_d, self.alpha, self.omega_tau)
        if not self.tau_ns > 0:
            raise DomainError(f"tau_ns must be positive, got {self.tau_ns}")
        if self.n_max < 0:
            raise DomainError(f"n_max must be >= 0, got {self.n_max}")
        if self.mix_p is not None and not 0.0 <= self.mix_p <= 1.0:
            raise DomainError(f"mix_p must be in [0, 1], got {self.mix_p}")
        if self.shots is not None and self.shots < 1:
            raise DomainError(f"shots must be >= 1, got {self.shots}")

    def pulse_params(self) -> channel.PulseParams:
        return channel.PulseParams(self.p_abs, self.p_d, self.alpha, self.omega_tau)


_REQUIRED_CONFIG = ("alpha", "omega_tau", "tau_ns", "p_abs", "p_d", "n_max")


def write_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_from_mapping(data: dict, source: str = "config") -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParseError(f"{source}: unknown field(s) {unknown}")
    missing = sorted(k for k in _REQUIRED_CONFIG if k not in data)
    if missing:
        raise ParseError(f"{source}: missing required field(s) {missing}")
    try:
        return ExperimentConfig(**data)
    except (DomainError, TypeError) as exc:
        raise ParseError(f"{source}: {exc}") from None


def read_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top-level value must be an object")
    return config_from_mapping(data, source=str(path))


@dataclass(frozen=True)
class MixedCurve:
    """Convex combination of measured curves with quadrature-combined errors."""

    p_excited: np.ndarray = field(repr=False)
    std_err: np.ndarray = field(repr=False)


def mix_weights(rho0: np.ndarray) -> np.ndarray:
    """Weights over the four preparation labels reproducing a y-z plane state."""
    from .montecarlo import pure_mixture_weights

    return pure_mixture_weights(rho0)


def mix_measured(table: MeasurementTable, weights) -> MixedCurve:
    """Weighted sum of per-label curves over their common N range.

    weights: mapping label -> weight or a sequence in the order of
    thermo.STATE_LABELS; nonnegative, summing to 1.
    """
    if isinstance(weights, dict):
        w = np.array([float(weights.get(lbl, 0.0)) for lbl in thermo.STATE_LABELS])
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (4,):
            raise DomainError(f"expected 4 weights, got shape {w.shape}")
    if np.min(w) < -1e-12 or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError(f"weights {w} must be nonnegative and sum to 1")

    active = [lbl for lbl, wk in zip(thermo.STATE_LABELS, w) if wk > 0.0]
    curves, errors = {}, {}
    for lbl in active:
        if lbl not in table.labels():
            raise IncompleteData(f"state {lbl!r} (weight > 0) has no rows in the table")
        curves[lbl], errors[lbl] = table.curve(lbl)
    n_pts = min(len(curves[lbl]) for lbl in active)
    p = np.zeros(n_pts)
    var = np.zeros(n_pts)
    for lbl, wk in zip(thermo.STATE_LABELS, w):
        if wk > 0.0:
            p += wk * curves[lbl][:n_pts]
            var += (wk * errors[lbl][:n_pts]) ** 2
    return MixedCurve(p_excited=p, std_err=np.sqrt(var))


def model_curves(params: channel.PulseParams, n_max: int) -> np.ndarray:
    """(4, n_max + 1) excited-state populations of the four preparations."""
    m = channel.cycle_superoperator(params)
    v = np.stack(
        [linops.vec(thermo.state_from_label(lbl)) for lbl in thermo.STATE_LABELS], axis=1
    )
    out = np.empty((4, n_max + 1))
    out[:, 0] = np.real(v[0])
    for n in range(1, n_max + 1):
        v = m @ v
        out[:, n] = np.real(v[0])
    return out


def synthetic_table(params: channel.PulseParams, n_max: int, labels=None, rng=None, shots=None) -> MeasurementTable:
    """Analytic (or binomially sampled) measurement table for the model."""
    if labels is None:
        labels = thermo.STATE_LABELS
    curves = model_curves(params, n_max)
    rows = []
    for lbl in labels:
        k = thermo.STATE_LABELS.index(lbl)
        for n in range(n_max + 1):
            p = float(curves[k, n])
            if shots is None:
                rows.append((lbl, n, p, 0.0))
            else:
                p_hat = rng.binomial(shots, p) / shots
                err = float(np.sqrt(p_hat * (1.0 - p_hat) / shots))
                rows.append((lbl, n, float(p_hat), err))
    return MeasurementTable(rows=tuple(rows))


_GRID_CACHE: dict = {}


def _grid_axis() -> np.ndarray:
    return np.round(np.arange(0.0, 1.0 + GRID_STEP / 2, GRID_STEP), 10)


def _grid_curves(alpha: float, omega_tau: float, n_max: int):
    """Cached excited-population curves on the (p_abs, p_d) parameter grid.

    Returns (points, curves) with points of shape (G, 2) and curves of
    shape (G, 4, n_max + 1).
    """
    key = (round(float(alpha), 12), round(float(omega_tau), 12), int(n_max))
    if key in _GRID_CACHE:
        return _GRID_CACHE[key]
    axis = _grid_axis()
    pa, pd = np.meshgrid(axis, axis, indexing="ij")
    points = np.stack([pa.ravel(), pd.ravel()], axis=1)
    g = points.shape[0]
    s_stack = np.empty((g, 4, 4), dtype=complex)
    for i, (a, d) in enumerate(points):
        s_stack[i] = channel.dissipative_superoperator(
            channel.PulseParams(a, d, alpha, omega_tau)
        )
    u = np.diag(channel.unitary_superoperator(
        channel.PulseParams(0.0, 0.0, alpha, omega_tau)
    ))
    m_stack = s_stack * u[None, None, :]
    v = np.stack(
        [linops.vec(thermo.state_from_label(lbl)) for lbl in thermo.STATE_LABELS], axis=1
    )
    v = np.broadcast_to(v, (g, 4, 4)).copy()
    curves = np.empty((g, 4, n_max + 1))
    curves[:, :, 0] = np.real(v[:, 0, :])
    for n in range(1, n_max + 1):
        v = m_stack @ v
        curves[:, :, n] = np.real(v[:, 0, :])
    _GRID_CACHE[key] = (points, curves)
    return points, curves


@dataclass(frozen=True)
class FitResult:
    p_abs: float
    p_d: float
    residual: float


def _fit_arrays(table: MeasurementTable, weighted: bool):
    idx_label, idx_n, p_obs, w = [], [], [], []
    for label, n, p, err in table.rows:
        idx_label.append(thermo.STATE_LABELS.index(label))
        idx_n.append(n)
        p_obs.append(p)
        w.append(1.0 / max(err, 1e-6) ** 2 if weighted else 1.0)
    return (
        np.array(idx_label),
        np.array(idx_n),
        np.array(p_obs),
        np.array(w),
    )


def fit_parameters(
    table: MeasurementTable, alpha: float, omega_tau: float, weighted: bool = False
) -> FitResult:
    """Least-squares fit of (p_abs, p_d) to a measurement table.

    Global grid search at resolution 0.005 over [0,1]^2, then coordinate
    descent with step halving down to 1e-5. (alpha, omega_tau) are held
    fixed. Residuals are unweighted unless weighted=True (inverse-variance).
    """
    if not table.rows:
        raise IncompleteData("measurement table is empty")
    if len(table.labels()) < 2:
        raise IncompleteData("fit needs curves for at least 2 initial states")
    n_values = {n for _, n, _, _ in table.rows}
    if len(n_values) < 5:
        raise IncompleteData("fit needs at least 5 distinct values of N")
    n_max = max(n_values)

    idx_label, idx_n, p_obs, w = _fit_arrays(table, weighted)
    points, curves = _grid_curves(alpha, omega_tau, n_max)
    model = curves[:, idx_label, idx_n]
    rss = np.sum(w * (model - p_obs) ** 2, axis=1)
    best = int(np.argmin(rss))
    pa, pd = points[best]

    def objective(a, d):
        c = model_curves(channel.PulseParams(a, d, alpha, omega_tau), n_max)
        return float(np.sum(w * (c[idx_label, idx_n] - p_obs) ** 2))

    val = objective(pa, pd)
    step = GRID_STEP
    while step > REFINE_STEP:
        moved = False
        for da, dd in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            a = min(max(pa + da, 0.0), 1.0)
            d = min(max(pd + dd, 0.0), 1.0)
            if (a, d) == (pa, pd):
                continue
            trial = objective(a, d)
            if trial < val:
                pa, pd, val = a, d, trial
                moved = True
        if not moved:
            step *= 0.5
    return FitResult(p_abs=float(pa), p_d=float(pd), residual=val)
