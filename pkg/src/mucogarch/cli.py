"""Command-line front end.

Subcommands: ``simulate`` writes per-path CSVs and a manifest, ``moments``
and ``check`` emit analytic/empirical reports, ``validate`` runs the bundled
acceptance suite, and ``counterexample`` reproduces the deterministic
cone-exit computation.  Report paths also render figures next to the
delimited output unless figures are disabled.

Exit codes: 0 success, 1 criterion failure, 2 configuration error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__, acceptance, bounds, kronalg as ka, moments as mo, sim
from .config import ExperimentConfig, default_config, load_config
from .exceptions import ConfigError, MucogarchError


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _write_matrix_csv(path: Path, matrix: np.ndarray, label: str) -> None:
    matrix = np.atleast_2d(matrix)
    header = [label] + [f"col_{j + 1}" for j in range(matrix.shape[1])]
    rows = [[f"row_{i + 1}", *map(float, matrix[i])] for i in range(matrix.shape[0])]
    _write_rows(path, header, rows)


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        run = cfg.run
        cfg = ExperimentConfig(
            model=cfg.model,
            levy=cfg.levy,
            run=type(run)(
                horizon=run.horizon,
                grid_step=run.grid_step,
                delta=run.delta,
                n_paths=run.n_paths,
                seed=int(args.seed),
                burn_in=run.burn_in,
                eps_ladder=run.eps_ladder,
                steps_per_unit=run.steps_per_unit,
            ),
            outputs=cfg.outputs,
        )
    return cfg


def _figures_enabled(cfg: ExperimentConfig, args) -> bool:
    return cfg.outputs.figures and not args.no_figures


def cmd_simulate(cfg: ExperimentConfig, out: Path, with_figures: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.run.grid
    files = []
    for p in range(cfg.run.n_paths):
        sample = sim.simulate_path(
            cfg.model,
            cfg.levy,
            grid,
            seed=cfg.run.seed + p,
            burn_in=cfg.run.burn_in,
            steps_per_unit=cfg.run.steps_per_unit,
        )
        path_file = out / f"path_{p:03d}.csv"
        with path_file.open("w", newline="") as fh:
            sample.write_csv(fh)
        jumps_file = out / f"path_{p:03d}_jumps.csv"
        with jumps_file.open("w", newline="") as fh:
            sample.write_jumps_csv(fh)
        files += [path_file.name, jumps_file.name]
        if with_figures and p < 3:
            from . import figures

            figures.save_path_figure(sample, out / f"path_{p:03d}.png")
    manifest = {
        "version": __version__,
        "seed": cfg.run.seed,
        "config_hash": cfg.config_hash(),
        "n_paths": cfg.run.n_paths,
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"wrote {cfg.run.n_paths} path(s) to {out}")
    return 0


def cmd_moments(cfg: ExperimentConfig, out: Path, with_figures: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    lags = tuple(
        h for h in (0.5, 1.0, 2.0, 4.0) if h <= cfg.run.horizon / 4 and _aligned(h, cfg.run.grid_step)
    )
    report = mo.build_moment_report(
        cfg.model,
        cfg.levy,
        grid=cfg.run.grid,
        delta=cfg.run.delta,
        n_paths=cfg.run.n_paths,
        seed=cfg.run.seed,
        burn_in=cfg.run.burn_in,
        acov_lags=lags,
        steps_per_unit=cfg.run.steps_per_unit,
    )
    emp = report.empirical
    _write_matrix_csv(out / "analytic_mean_v.csv", ka.unvec(report.mean_v), "mean_V")
    _write_matrix_csv(out / "analytic_var_vec_y.csv", report.var_y, "var_vecY")
    _write_matrix_csv(out / "analytic_second_moment.csv", report.second_moment, "second_vecY")
    _write_matrix_csv(out / "analytic_increment_var.csv", report.increment.var, "var_G")
    _write_matrix_csv(out / "empirical_mean_v.csv", ka.unvec(emp.mean_v.value), "mean_V")
    _write_matrix_csv(out / "empirical_var_vec_y.csv", emp.var_y.value, "var_vecY")
    if emp.var_g is not None:
        _write_matrix_csv(out / "empirical_increment_var.csv", emp.var_g.value, "var_G")
    (out / "moments_summary.txt").write_text(report.to_text())

    if with_figures and lags:
        from . import figures

        ops = bounds.params_operators(cfg.model, cfg.levy)
        analytic_norms = [np.linalg.norm(mo.acov_y(h, emp.var_y.value, ops)) for h in lags]
        empirical_norms = [np.linalg.norm(emp.acov_y[h].value) for h in lags]
        se_norms = [np.linalg.norm(emp.acov_y[h].se) for h in lags]
        figures.save_acov_figure(lags, analytic_norms, empirical_norms, se_norms, out / "acov_decay.png")
    print(f"wrote moment report to {out} (max |z| = {report.max_abs_z():.2f})")
    return 0


def _aligned(h: float, step: float) -> bool:
    ratio = h / step
    return abs(ratio - round(ratio)) < 1e-9


def cmd_check(cfg: ExperimentConfig, out: Path, with_figures: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    report = bounds.stationarity_report(cfg.model, cfg.levy, seed=cfg.run.seed)
    text = report.to_text()
    (out / "check.txt").write_text(text)
    (out / "check.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    if with_figures:
        from . import figures

        ops = bounds.params_operators(cfg.model, cfg.levy)
        figures.save_spectra_figure(ops, out / "spectra.png")
    sys.stdout.write(text)
    return 0


def cmd_validate(cfg: ExperimentConfig, out: Path | None, with_figures: bool, only: str | None) -> int:
    suite = acceptance.AcceptanceSuite(seed=cfg.run.seed)
    try:
        results = suite.run_all(only=only)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    for res in results:
        print(res.line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(
            out / "validation.csv",
            ["criterion", "title", "passed", "observed", "tolerance", "seconds"],
            [[r.key, r.title, r.passed, r.observed, r.tolerance, float(r.seconds)] for r in results],
        )
        if with_figures:
            from . import figures

            figures.save_validation_figure(results, out / "validation.png")
    return 1 if n_fail else 0


def cmd_counterexample(out: Path | None) -> int:
    b = np.array([[-0.5 * np.log(10 / 9), 0.0], [1.0, -0.5 * np.log(10 / 9)]])
    params = sim.ModelParams(a=np.zeros((2, 2)), b=b, c=2 * np.eye(2))
    e_b = ka.matrix_exp(b, 1.0)
    v1 = sim.deterministic_flow_v(0.5 * np.eye(2), params, 1.0)
    x = np.array([1.0, 1.0])
    quad = float(x @ v1 @ x)
    min_eig = float(np.linalg.eigvalsh(v1)[0])
    lines = [
        "deterministic flow started below the baseline level:",
        f"e^B =\n{e_b}",
        f"V_1 =\n{v1}",
        f"x' V_1 x = {quad:.17g}   (expected -11/4)",
        f"min eigenvalue of V_1 = {min_eig:.17g}",
    ]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if abs(quad + 11 / 4) > 1e-12:
        print("FAIL: quadratic form deviates from -11/4 beyond 1e-12", file=sys.stderr)
        return 1
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "counterexample.txt").write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mucogarch",
        description="Simulation and moment analytics for multivariate COGARCH(1,1) covariance processes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("simulate", "simulate paths and write CSVs plus a manifest"),
        ("moments", "analytic vs empirical moment report"),
        ("check", "stationarity condition report"),
        ("validate", "run the bundled validation suite"),
        ("counterexample", "deterministic cone-exit computation"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", type=str, default=None, help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--out", type=str, default=None, help="override the output directory")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
        if name == "validate":
            p.add_argument("--only", type=str, default=None, help="run a single named criterion")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "counterexample":
            out = Path(args.out) if args.out else None
            return cmd_counterexample(out)
        cfg = _resolve_config(args)
        with_figures = _figures_enabled(cfg, args)
        if args.command == "validate":
            out = Path(args.out) if args.out else None
            return cmd_validate(cfg, out, with_figures, args.only)
        out = cfg.output_dir(args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, with_figures)
        if args.command == "moments":
            return cmd_moments(cfg, out, with_figures)
        if args.command == "check":
            return cmd_check(cfg, out, with_figures)
        raise RuntimeError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MucogarchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
