"""Command-line experiment runner.

    sqha <vqu|eigencheck|evolve|noise-check|lambda-q|report> --config FILE [--out DIR]
         [--seed N] [--conserve-mass BOOL]

Exit codes: 0 ok, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import EXPERIMENTS, ExperimentConfig
from .dynamics import (EvolutionConfig, bohmian_trajectories, continuity_residual,
                       ensemble_density_distance, evolve_deterministic, evolve_stochastic,
                       hydrodynamic_energy, rms_delta_s, run_ensemble)
from .errors import ConfigError, NumericalAbort
from .fields import (ComplexField, Grid1D, PhysicalParams, RealField, boundary_fraction,
                     integrate, normalize_wave, read_field_csv, write_field_csv)
from .noise import NoiseSpec, lambda_c, sample_noise
from .nonlocality import (PseudoGaussianSpec, classify_typology, lambda_q, log_amplitude_of)
from .oscillator import HOSpec, energy_expectation, ho_eigenstate, ho_wave, verify_vqu_identity
from .qpotential import compute_vqu, compute_vqu_from_log
from .regimes import SPEED_OF_LIGHT, mass_window, regime_report

log = logging.getLogger("sqha")
BOUNDARY_WARN = 1e-8


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


class Writer:
    """Single funnel for every output file of a run."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return p

    def rows(self, name: str, header, rows) -> None:
        with open(self._path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])

    def field(self, name: str, fld) -> None:
        write_field_csv(self._path(name), fld)

    def text(self, name: str, text: str) -> None:
        with open(self._path(name), "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- builders

def _wrap(what: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{what}: {exc}") from None


def build_grid(cfg: ExperimentConfig) -> Grid1D:
    return _wrap("[grid]", Grid1D, cfg.get_float("grid", "x_min"), cfg.get_float("grid", "x_max"),
                 cfg.get_int("grid", "n_points"))


def build_params(cfg: ExperimentConfig, grid: Grid1D | None = None) -> PhysicalParams:
    pot = cfg.get_str("physics", "potential", "free")
    if pot == "csv":
        fld = _wrap("physics.potential_csv", read_field_csv, cfg.get_str("physics", "potential_csv"))
        if not isinstance(fld, RealField) or (grid is not None and fld.grid != grid):
            raise ConfigError("physics.potential_csv: must be a real field on the configured grid")
        pot = fld
    return _wrap("[physics]", PhysicalParams,
                 mass=cfg.get_float("physics", "mass", 1.0),
                 hbar=cfg.get_float("physics", "hbar", 1.0),
                 boltzmann=cfg.get_float("physics", "boltzmann", 1.0),
                 temperature=cfg.get_float("physics", "temperature", 0.0),
                 potential=pot,
                 omega=cfg.get_float("physics", "omega", 1.0),
                 center=cfg.get_float("physics", "center", 0.0))


def _need_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("experiment.seed: required for stochastic experiments")
    return cfg.seed


def build_noise(cfg: ExperimentConfig, params: PhysicalParams) -> NoiseSpec:
    seed = _need_seed(cfg)
    lam = cfg.raw("noise", "lambda_c", "auto")
    lam = lambda_c(params) if lam == "auto" else float(lam)
    return _wrap("[noise]", NoiseSpec, params.temperature, lam,
                 cfg.get_float("noise", "mu", 1.0), seed,
                 cfg.get_bool("noise", "conserve_mass", True), params.boltzmann)


def build_state(cfg: ExperimentConfig, grid: Grid1D, params: PhysicalParams) -> ComplexField:
    kind = cfg.get_str("state", "kind", "gaussian")
    q = grid.points
    if kind == "ho":
        spec = HOSpec(params.mass, params.omega, params.hbar, cfg.get_int("state", "level", 0))
        psi = _wrap("[state]", ho_wave, spec, grid)
    elif kind == "gaussian":
        sigma = cfg.get_float("state", "sigma", 1.0)
        if not sigma > 0:
            raise ConfigError("state.sigma: must be positive")
        c = cfg.get_float("state", "center", 0.0)
        p0 = cfg.get_float("state", "momentum", 0.0)
        psi = ComplexField(grid, np.exp(-(q - c) ** 2 / (4 * sigma**2) + 1j * p0 * q / params.hbar))
    else:
        psi = _wrap("state.path", read_field_csv, cfg.get_str("state", "path"))
        if psi.grid != grid:
            raise ConfigError("state.path: field is not on the configured grid")
        if isinstance(psi, RealField):
            psi = ComplexField(grid, psi.values.astype(complex))
    return _wrap("[state]", normalize_wave, psi)


def _warn_boundary(density: np.ndarray, what: str) -> None:
    frac = boundary_fraction(density)
    if frac > BOUNDARY_WARN:
        log.warning("%s: boundary density is %.3g of the maximum (> %g); widen the grid", what, frac, BOUNDARY_WARN)


# ---------------------------------------------------------------- experiments

def run_vqu(cfg: ExperimentConfig, w: Writer) -> None:
    grid = build_grid(cfg)
    params = build_params(cfg, grid)
    q = grid.points
    src = cfg.get_str("vqu", "source", "cosine")
    if src == "cosine":
        amp = RealField(grid, np.cos(2 * np.pi * q / cfg.get_float("vqu", "wavelength", 1.0)))
    elif src == "gaussian":
        s = cfg.get_float("vqu", "sigma", 1.0)
        amp = RealField(grid, np.exp(-q * q / (2 * s * s)))
    elif src == "ho":
        amp = _wrap("[vqu]", ho_eigenstate,
                    HOSpec(params.mass, params.omega, params.hbar, cfg.get_int("vqu", "level", 0)), grid)
    else:
        fld = _wrap("vqu.path", read_field_csv, cfg.get_str("vqu", "path"))
        amp = RealField(fld.grid, np.abs(fld.values)) if isinstance(fld, ComplexField) else fld
    res = _wrap("[vqu]", compute_vqu, amp, params)
    w.field("vqu.csv", res.vqu)
    w.field("force.csv", res.force)
    inner = res.mask.copy()
    inner[:2] = inner[-2:] = False
    n = amp.values**2
    e = integrate(n * res.vqu.values, grid, res.mask) / integrate(n, grid, res.mask)
    rows = [("mean_vqu", float(np.mean(res.vqu.values[inner]))),
            ("quantum_energy", e),
            ("min_vqu", float(res.vqu.values[inner].min())),
            ("max_vqu", float(res.vqu.values[inner].max())),
            ("masked_points", int((~res.mask).sum()))]
    w.rows("summary.csv", ["quantity", "value"], rows)
    print(f"mean V_qu = {rows[0][1]:.12g}, density-weighted = {e:.12g}")


def run_eigencheck(cfg: ExperimentConfig, w: Writer) -> None:
    params = build_params(cfg)
    n_max = cfg.get_int("eigencheck", "n_max", 5)
    periods = cfg.get_float("eigencheck", "periods", 10.0)
    dt = cfg.get_float("eigencheck", "dt", 0.01)
    dx = cfg.get_float("eigencheck", "dx", 0.01)
    if not 0 <= n_max <= 12:
        raise ConfigError("eigencheck.n_max: must lie in [0, 12]")
    rows = []
    for n in range(n_max + 1):
        spec = _wrap("[eigencheck]", HOSpec, params.mass, params.omega, params.hbar, n)
        grid = _wrap("[eigencheck]", Grid1D.symmetric, 6 * spec.turning_point + 20 * dx, dx)
        hp = spec.params()
        energy = energy_expectation(spec, grid, hp)
        dev = verify_vqu_identity(spec, grid, hp)
        psi0 = ho_wave(spec, grid)
        steps = max(1, int(round(periods * spec.period / dt)))
        run = evolve_deterministic(psi0, hp, EvolutionConfig(dt, steps, record_every=max(1, steps // 100)))
        a0 = np.abs(psi0.values)
        drift = max(float(np.max(np.abs(np.abs(s.values) - a0))) for s in run.states)
        rows.append((n, energy, dev, drift))
        print(f"n={n}: E={energy:.12g} dev={dev:.3g} drift={drift:.3g}")
    w.rows("eigencheck.csv", ["n", "E_n", "max_vqu_deviation", "stationarity_drift"], rows)


def run_evolve(cfg: ExperimentConfig, w: Writer) -> None:
    grid = build_grid(cfg)
    params = build_params(cfg, grid)
    psi0 = build_state(cfg, grid, params)
    _warn_boundary(np.abs(psi0.values) ** 2, "initial state")
    scheme = cfg.get_str("evolution", "scheme", "deterministic")
    noise = build_noise(cfg, params) if scheme == "stochastic" else None
    ec = _wrap("[evolution]", EvolutionConfig, cfg.get_float("evolution", "dt"),
               cfg.get_int("evolution", "n_steps"), scheme,
               cfg.get_int("evolution", "record_every", 1), noise)
    starts = cfg.get_floats("evolution", "trajectories")
    if not starts:
        lo, hi = mass_window(np.abs(psi0.values) ** 2, grid.points, 0.9)
        starts = list(np.linspace(lo, hi, 9))
    det = evolve_deterministic(psi0, params, ec)
    if scheme == "stochastic":
        if noise.temperature > 0 and grid.dx >= noise.lambda_c / 2:
            raise ConfigError(f"grid.n_points: dx = {grid.dx:.3g} must be < lambda_c/2 = {noise.lambda_c / 2:.3g}")
        runs = run_ensemble(psi0, params, ec, max(1, cfg.get_int("evolution", "ensemble", 1)),
                            cfg.get_int("evolution", "workers", 1))
    else:
        runs = [det]
    bundles = [bohmian_trajectories(r, params, starts, reference=det) for r in runs]
    main = runs[0]
    resid = continuity_residual(main, params) if len(main.times) >= 3 else None
    rms = rms_delta_s(bundles)
    rows = []
    for k, t in enumerate(main.times):
        rows.append((t, main.norms[k], hydrodynamic_energy(main.states[k], params),
                     resid.max_abs[k] if resid is not None else math.nan, rms[k]))
    w.rows("timeseries.csv", ["t", "norm", "energy", "max_residual", "rms_deltaS"], rows)
    traj = bundles[0].trajectories
    w.rows("trajectories.csv", ["t"] + [f"q_{i + 1}" for i in range(traj.shape[1])],
           ([t] + list(traj[k]) for k, t in enumerate(main.times)))
    if scheme == "stochastic":
        dist = ensemble_density_distance(runs, det)
        w.rows("ensemble.csv", ["t", "mean_density_distance", "rms_deltaS"],
               zip(main.times, dist, rms))
        clamps = sum(r.clamp_events for r in runs)
        if clamps:
            log.warning("%d clamp events across the ensemble", clamps)
    if cfg.get_bool("evolution", "snapshots", True):
        for k, st in enumerate(main.states):
            w.field(f"snapshots/psi_{k:06d}.csv", st)
    print(f"{len(runs)} run(s), {len(main.times)} snapshots, final norm {main.norms[-1]:.15g}, "
          f"final rms dS {rms[-1]:.6g}")


def run_noise_check(cfg: ExperimentConfig, w: Writer) -> None:
    grid = build_grid(cfg)
    params = build_params(cfg, grid)
    if not params.temperature > 0:
        raise ConfigError("physics.temperature: noise-check needs T > 0")
    spec = build_noise(cfg, params)
    samples = cfg.get_int("noise_check", "samples", 10000)
    dt = cfg.get_float("noise_check", "dt", 1.0)
    if samples < 1:
        raise ConfigError("noise_check.samples: must be positive")
    lam = spec.lambda_c
    lags = [int(round(f * lam / grid.dx)) for f in (0.0, 0.5, 1.0, 2.0)]
    if lags[-1] >= grid.n_points:
        raise ConfigError("[grid]: span shorter than 2 lambda_c")
    rng = spec.rng()
    acc = np.zeros(len(lags))
    for _ in range(samples):
        eta = _wrap("[noise]", sample_noise, grid, spec, dt, rng).values
        for i, lag in enumerate(lags):
            acc[i] += np.mean(eta * eta) if lag == 0 else np.mean(eta[:-lag] * eta[lag:])
    emp = acc / samples
    c0 = spec.variance(dt)
    rows = []
    for lag, e in zip(lags, emp):
        sep = lag * grid.dx
        theory = c0 * math.exp(-(sep / lam) ** 2)
        rows.append((sep, sep / lam, e, theory, e / theory))
    w.rows("covariance.csv", ["separation", "separation_over_lambda_c", "empirical", "theory", "ratio"], rows)
    print(f"lambda_c = {lam:.6g}; C(0) empirical/theory = {emp[0] / c0:.4f}")


def run_lambda_q(cfg: ExperimentConfig, w: Writer) -> None:
    grid = build_grid(cfg)
    params = build_params(cfg, grid)
    src = cfg.get_str("lambda_q", "source", "pseudo_gaussian")
    center = cfg.get_float("lambda_q", "center", 0.0)
    if src == "pseudo_gaussian":
        g = cfg.raw("lambda_q", "g")
        spec = _wrap("[lambda_q]", PseudoGaussianSpec, cfg.get_str("lambda_q", "case", "d"),
                     cfg.get_float("lambda_q", "Lambda", 1.0), cfg.get_float("lambda_q", "delta_q", 0.1),
                     None if g is None else float(g), center)
        logamp = log_amplitude_of(spec, grid)
        res = _wrap("[lambda_q]", compute_vqu_from_log, logamp, params)
        typ, tail = _wrap("[lambda_q]", classify_typology, logamp, log_amplitude=True, center=center)
    else:
        fld = _wrap("lambda_q.path", read_field_csv, cfg.get_str("lambda_q", "path"))
        amp = RealField(fld.grid, np.abs(fld.values)) if isinstance(fld, ComplexField) else fld
        res = _wrap("[lambda_q]", compute_vqu, amp, params)
        typ, tail = _wrap("[lambda_q]", classify_typology, amp, center=center)
    lam = cfg.raw("lambda_q", "lambda_c", "auto")
    if lam == "auto":
        lam = lambda_c(params)
        if not math.isfinite(lam):
            raise ConfigError("lambda_q.lambda_c: auto needs physics.temperature > 0")
    q_max = cfg.get_float("lambda_q", "q_max", res.grid.x_max - center)
    out = _wrap("[lambda_q]", lambda_q, res, float(lam), q_max, center)
    w.rows("lambda_q.csv", ["lambda_q", "typology", "k_fit", "fit_residual"],
           [(out.value, typ.value, tail.poly_degree, tail.fit_residual)])
    print(f"lambda_q = {out.value:.12g} ({typ.value}, k = {tail.poly_degree:.4f})")


def run_report(cfg: ExperimentConfig, w: Writer) -> None:
    params = build_params(cfg)
    rep = _wrap("[report]", regime_report, params, cfg.get_float("report", "system_length"),
                cfg.get_float("report", "lambda_q", math.inf), None, None,
                cfg.get_float("report", "c", SPEED_OF_LIGHT))
    w.rows("report.csv", list(rep.COLUMNS), [rep.row()])
    text = rep.text(params.hbar)
    w.text("report.txt", text)
    print(text, end="")


RUNNERS = {"vqu": run_vqu, "eigencheck": run_eigencheck, "evolve": run_evolve,
           "noise-check": run_noise_check, "lambda-q": run_lambda_q, "report": run_report}


def write_manifest(cfg: ExperimentConfig, w: Writer) -> None:
    head = ["[manifest]", "tool = sqha", f"version = {__version__}", f"backend = {kernels.BACKEND}",
            f"config_sha256 = {cfg.digest()}", f"seed = {cfg.seed if cfg.seed is not None else ''}",
            f"outputs = {', '.join(sorted(w.files))}", ""]
    w.text("manifest.ini", "\n".join(head) + "\n" + cfg.to_text())


def run(cfg: ExperimentConfig, out: Path | None = None) -> Path:
    """Execute a parsed config; returns the output directory."""
    name = cfg.experiment
    out = Path(out if out is not None else cfg.get_str("experiment", "out", "sqha-out"))
    w = Writer(out)
    RUNNERS[name](cfg, w)
    write_manifest(cfg, w)
    return out


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sqha", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sqha {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output directory (overrides experiment.out)")
        p.add_argument("--seed", help="RNG seed (overrides experiment.seed)")
        p.add_argument("--conserve-mass", dest="conserve_mass", help="project out the noise mean (true/false)")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.INFO)
    args = _parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = lambda message, *_a, **_k: log.warning("%s", message)
        return _main(args)


def _main(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config)
        given = cfg.raw("experiment", "name")
        if given is not None and given != args.command:
            raise ConfigError(f"experiment.name = {given} does not match subcommand {args.command}")
        cfg.set("experiment", "name", args.command)
        if args.seed is not None:
            cfg.set("experiment", "seed", args.seed)
        if args.conserve_mass is not None:
            cfg.set("noise", "conserve_mass", args.conserve_mass)
        if args.out is not None:
            cfg.set("experiment", "out", args.out)
        run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
