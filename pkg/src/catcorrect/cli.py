"""Command-line front end: ``catcorrect state|experiment|analytics``."""

from __future__ import annotations

import argparse
import json
import datetime as _dt
import os
import secrets
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CatCorrectError,
    ConfigError,
    CoverageError,
    CutoffError,
    DegenerateStateError,
    ImpossibleOutcomeError,
    ParameterError,
    UndefinedPhaseError,
)
from .experiments import (
    ExperimentConfig,
    HistogramSummary,
    iter_records,
    optimize_displacement,
    parity_check,
)
from .fock import coherent_state
from .measurement import HeterodyneModel, cat_single_trial_error, tvd_cat
from .serialization import config_from_dict, parse_config, record_line, summary_document, write_json, write_state
from .states import cat_state, displaced_ys, logical_state, modular_populations, ys_state

OUT_ENV = "CATCORRECT_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_DEGENERATE = 0, 2, 3, 4


def _preset(name: str) -> ExperimentConfig:
    if name == "fig3-left":
        # mod-2 measurement: 2-component probe, output code K=4
        return ExperimentConfig("modmeas", K=4, N=2, alphas=(8.0, 4.0),
                                model=HeterodyneModel.finite_lo(6.0), samples=100_000)
    if name == "fig3-right":
        return ExperimentConfig("modmeas", K=8, N=4, alphas=(24.0, 12.0),
                                model=HeterodyneModel.finite_lo(8.0), samples=40_000)
    if name == "fig5-left":
        return ExperimentConfig("telecorrect", K=2, M=4, N=4, alphas=(3.0, 3.0, 3.0),
                                model=HeterodyneModel.finite_lo(10.0), samples=100_000,
                                ys_rail="first", ys_sigma=None)
    if name == "fig5-right":
        return ExperimentConfig("telecorrect", K=4, M=8, N=8, alphas=(4.0, 4.0, 4.0),
                                model=HeterodyneModel.finite_lo(10.0), samples=100_000,
                                ys_rail="first", ys_sigma=None)
    raise ConfigError(f"unknown figure preset {name!r}")


FIGURES = ("fig3-left", "fig3-right", "fig4-inset", "fig5-left", "fig5-right")


def _out_dir(arg) -> Path:
    path = Path(arg if arg else os.environ.get(OUT_ENV, "results"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


# state


def cmd_state(args) -> int:
    kind = args.kind
    params = {"alpha": args.alpha}
    if kind == "coherent":
        st = coherent_state(args.alpha, args.cutoff)
    elif kind == "cat":
        st = cat_state(args.alpha, args.distance, args.mu, args.cutoff)
        params.update(distance=args.distance, mu=args.mu)
    elif kind == "ys":
        st = ys_state(args.alpha, args.components, args.cutoff)
        params.update(components=args.components)
    elif kind == "displaced_ys":
        sigma = complex(args.sigma.replace(" ", ""))
        st = displaced_ys(args.alpha, args.components, sigma, args.cutoff)
        params.update(components=args.components, sigma=args.sigma)
    else:
        c0, c1 = complex(args.c0), complex(args.c1)
        st = logical_state(c0, c1, args.alpha, args.code, args.cutoff)
        params.update(code=args.code, c0=args.c0, c1=args.c1)
    out = Path(args.out) if args.out else _out_dir(None) / f"{kind}.state"
    write_state(out, st, kind, params)
    print(f"wrote {out} (cutoff {st.cutoff})")
    return EXIT_OK


# experiment


def _fig4_inset(args) -> int:
    out = _out_dir(args.out)
    alpha = 10.0
    rows = ["N\tP_target\tsigma_re\tsigma_im\tabs_sigma"]
    dist_rows = ["N\tresidue\tprobability"]
    started = _now()
    for N in (2, 3, 4, 6, 8):
        opt = optimize_displacement(alpha, N, "modular_mass")
        s = opt.sigma
        rows.append(f"{N}\t{opt.value!r}\t{s.real!r}\t{s.imag!r}\t{abs(s)!r}")
        pops = modular_populations(displaced_ys(alpha, N, s), N)
        dist_rows += [f"{N}\t{r}\t{p!r}" for r, p in enumerate(pops)]
        print(f"N={N}  P_target={opt.value:.6f}  sigma*={s.real:+.5f}{s.imag:+.5f}j  |sigma*|={abs(s):.5f}")
    table, dists = out / "fig4_inset.tsv", out / "fig4_populations.tsv"
    table.write_text("\n".join(rows) + "\n", encoding="ascii")
    dists.write_text("\n".join(dist_rows) + "\n", encoding="ascii")
    write_json(out / "manifest.json", {
        "tool": "catcorrect", "version": __version__, "figure": "fig4-inset", "alpha": alpha,
        "started": started, "finished": _now(), "outputs": [str(table), str(dists)],
    })
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.figure == "fig4-inset":
        return _fig4_inset(args)
    if args.figure and args.config:
        raise ConfigError("give either --figure or --config, not both")
    if args.figure:
        cfg = _preset(args.figure)
    elif args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if path.suffix == ".json":
            try:
                cfg = config_from_dict(json.loads(text)["config"])
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path}: no usable config echo ({exc})") from None
        else:
            cfg = parse_config(text, str(path))
    else:
        raise ConfigError("experiment needs --figure or --config")
    seed = args.seed if args.seed is not None else (cfg.seed if args.config else secrets.randbits(63))
    updates = {"seed": seed}
    if args.samples is not None:
        updates["samples"] = args.samples
    try:
        cfg = replace(cfg, **updates)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.circuit == "telecorrect" and cfg.ys_rail == "first" and cfg.ys_sigma is None:
        # resolve once so the summary echoes the displacement actually used
        cfg = replace(cfg, ys_sigma=optimize_displacement(cfg.alphas[0], cfg.K, cfg.ys_objective).sigma)
    out = _out_dir(args.out)
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    started = _now()
    summary = HistogramSummary(tuple(cfg.thresholds))
    rec_path = out / "records.jsonl"
    with open(rec_path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in iter_records(cfg, threads):
            summary.add(rec)
            fh.write(record_line(rec) + "\n")
    extra = {"parity_check_0.99": parity_check(summary, 0.99)}
    if args.figure:
        extra["figure"] = args.figure
    sum_path = out / "summary.json"
    write_json(sum_path, summary_document(cfg, summary, extra))
    doc = summary_document(cfg, summary)
    write_json(out / "manifest.json", {
        "tool": "catcorrect", "version": __version__, "seed": cfg.seed, "config": doc["config"],
        "started": started, "finished": _now(), "outputs": [str(rec_path), str(sum_path)],
    })
    print(f"shots {summary.total}  mean fidelity {summary.mean_fidelity:.6f}")
    for t in cfg.thresholds:
        lo, hi = summary.interval(t)
        print(f"P(F>{t}) = {summary.probability(t):.4f}  Wilson95 [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


# analytics


def cmd_analytics(args) -> int:
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.alpha_steps)
    if args.alpha_steps < 1 or not args.distances:
        raise ConfigError("analytics ranges must be nonempty")
    lines = ["alpha\tD\ttvd_exact\ttvd_burmann\tp_err"]
    for D in args.distances:
        for a in alphas:
            exact, approx = tvd_cat(float(a), D)
            lines.append(f"{float(a)!r}\t{D}\t{exact!r}\t{approx!r}\t{cat_single_trial_error(float(a), D)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catcorrect", description="Cat-code correction circuits and analytics.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("state", help="write a Fock-basis state file")
    s.add_argument("kind", choices=("coherent", "cat", "ys", "displaced_ys", "logical"))
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--distance", type=int, default=1, help="cat distance D (2D components)")
    s.add_argument("--mu", type=int, default=0)
    s.add_argument("--components", type=int, default=2, help="YS component count")
    s.add_argument("--sigma", default="0", help="displacement, e.g. 0.1+0.2j")
    s.add_argument("--code", type=int, default=2, help="code component count K")
    s.add_argument("--c0", default="1")
    s.add_argument("--c1", default="0")
    s.add_argument("--cutoff", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_state)

    e = sub.add_parser("experiment", help="run a sampled circuit experiment")
    e.add_argument("--config", default=None, help="INI experiment description")
    e.add_argument("--figure", choices=FIGURES, default=None)
    e.add_argument("--samples", type=int, default=None)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--threads", type=int, default=None)
    e.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./results)")
    e.set_defaults(func=cmd_experiment)

    a = sub.add_parser("analytics", help="TVD and single-trial error table")
    a.add_argument("--alpha-min", type=float, default=0.0)
    a.add_argument("--alpha-max", type=float, default=6.0)
    a.add_argument("--alpha-steps", type=int, default=13)
    a.add_argument("--distances", type=int, nargs="+", default=[1, 2, 3, 4])
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analytics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateStateError as exc:
        print(f"degenerate parameters: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (CutoffError, CoverageError, ImpossibleOutcomeError, UndefinedPhaseError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CatCorrectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
