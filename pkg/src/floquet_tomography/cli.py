"""Command-line front end.

    floquet-tomo gen-ots       write a trace sequence (CSV + JSON sidecar)
    floquet-tomo reconstruct   skeleton and dressing from sequence files
    floquet-tomo deficiency    symmetry deficiency of a model and probe set
    floquet-tomo experiment    run a named experiment, write CSVs, report, figures
    floquet-tomo plot-scripts  emit standalone plotting scripts for a report dir

Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NoRankGap, NumericFailure, RepeatedRoots, TomographyError
from .experiments import EXPERIMENTS, run_experiment
from .io import (
    jsonable,
    load_config,
    read_hamiltonian,
    read_matrix,
    read_trace_sequence,
    validate,
    write_csv,
    write_trace_sequence,
)
from .models import (
    Dtq3Params,
    SshParams,
    dtq3_hamiltonian,
    dtq3_observables,
    ssh_hamiltonian,
    ssh_observables,
    ssh_symmetries,
)
from .monodromy import MonodromyMatrix, monodromy
from .reconstruct import RANK_TOL, build_hankel, detect_order, prony, rank_residual, solve_char_coeffs
from .traces import TraceSequence, adjoint_ots, fundamental_ots, ordinary_ots, time_shifted_ots

log = logging.getLogger("floquet_tomography")


def _complex_list(a):
    return [{"re": float(np.real(x)), "im": float(np.imag(x))} for x in np.atleast_1d(a)]


# ---------------------------------------------------------------- model inputs


def _section(cfg, name):
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _model(cfg, seed=None):
    """(hamiltonian or None, monodromy matrix, named observables)."""
    g = _section(cfg, "gen_ots")
    kind = g.get("model", "dtq3")
    if kind == "dtq3":
        try:
            p = Dtq3Params(**_section(cfg, "dtq3"))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        h = dtq3_hamiltonian(p, int(g.get("steps_per_period", 4096)))
        return h, monodromy(h), dtq3_observables()
    if kind == "ssh":
        d = dict(_section(cfg, "ssh"))
        if seed is not None:
            d["seed"] = seed
        if (d.get("V", 0) or d.get("W", 0)) and "seed" not in d:
            raise ConfigError("a seed is required when V > 0 or W > 0")
        try:
            p = SshParams(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        h = ssh_hamiltonian(p)
        return h, monodromy(h), ssh_observables(p)
    if kind == "hamiltonian":
        h = read_hamiltonian(_need(g, "file"))
        return h, monodromy(h), {}
    if kind == "matrix":
        return None, MonodromyMatrix.from_matrix(read_matrix(_need(g, "file"))), {}
    raise ConfigError(f"unknown model {kind!r}; use dtq3, ssh, hamiltonian or matrix")


def _need(sec, key):
    if key not in sec:
        raise ConfigError(f"missing key {key!r}")
    return sec[key]


def _operator(spec, named, n):
    if spec in (None, "I"):
        return np.eye(n, dtype=complex)
    if spec in named:
        return named[spec]
    if Path(str(spec)).exists():
        return read_matrix(spec)
    raise ConfigError(f"operator {spec!r} is neither a known observable nor a matrix file")


# ---------------------------------------------------------------- commands


def cmd_gen_ots(args, cfg) -> int:
    g = dict(_section(cfg, "gen_ots"))
    for key in ("model", "observable", "kind", "boundary", "n_max", "t", "file"):
        v = getattr(args, key, None)
        if v is not None:
            g[key] = v
    cfg = dict(cfg, gen_ots=g)
    h, M, named = _model(cfg, args.seed)
    n = M.matrix.shape[0]
    obs_name = g.get("observable", "O_qub" if g.get("model", "dtq3") == "dtq3" else "I")
    O = _operator(obs_name, named, n)
    n_max = int(g.get("n_max", 5))
    kind = g.get("kind", "Ordinary")
    if kind == "Ordinary":
        seq = ordinary_ots(O, M, n_max)
    elif kind in ("Fundamental", "Adjoint"):
        W = _operator(g.get("boundary", "I"), named, n)
        fn = fundamental_ots if kind == "Fundamental" else adjoint_ots
        seq = fn(O, M, W, n_max)
        seq = TraceSequence(seq.values, kind, str(obs_name), str(g.get("boundary", "I")), dim_hint=n)
    elif kind == "TimeShifted":
        if h is None:
            raise ConfigError("time-shifted sequences need a Hamiltonian, not a bare matrix")
        seq = time_shifted_ots(O, h, float(g.get("t", 0.0)), n_max, M)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    if kind in ("Ordinary", "TimeShifted"):
        seq = TraceSequence(seq.values, seq.kind, str(obs_name), None, seq.time_offset, n)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{g.get('name', 'ots')}.csv"
    write_trace_sequence(path, seq)
    print(json.dumps({"file": str(path), "length": len(seq), "kind": seq.kind}))
    return 0


def reconstruct_report(seq: TraceSequence, max_order=None, rel_tol: float = RANK_TOL) -> dict:
    v = seq.values
    if max_order is None:
        max_order = seq.dim_hint if seq.dim_hint else (len(v) - 1) // 2
    detectable = (len(v) - 1) // 2
    try:
        order, audit = detect_order(v, min(int(max_order), detectable), rel_tol, audit=True)
        src = "rank"
        audit = {"ratios": list(audit.ratios), "gaps": [jsonable(g) for g in audit.gaps]}
    except NoRankGap:
        # 2N values fix an order-N recurrence once N is known
        if not (seq.dim_hint and detectable < seq.dim_hint <= len(v) // 2):
            raise
        order, src, audit = seq.dim_hint, "dim_hint", {}
    rows = min(2 * max(order, 1), len(v) - order)
    h = build_hankel(v, range(rows), order, rel_tol)
    rep = {"order": int(order), "dim_hint": seq.dim_hint,
           "singular_values": [float(s) for s in h.singular_values],
           "rank_residuals": [float(r) for r in rank_residual(h)],
           "order_audit": dict(audit, source=src)}
    if order == 0:
        rep.update(e=_complex_list([1.0]), **{"lambda": []}, c=[], ch_residual=0.0)
    else:
        cp = solve_char_coeffs(h)
        rep["e"] = _complex_list(cp.coeffs)
        try:
            sk = prony(v, cp)
            rep.update(**{"lambda": _complex_list(sk.eigenvalues)}, c=_complex_list(sk.dressing),
                       ch_residual=float(sk.residual))
        except RepeatedRoots:
            from .reconstruct import ch_residual

            rep.update(**{"lambda": _complex_list(cp.roots())}, c=[],
                       ch_residual=ch_residual(v, cp))
            rep["warning"] = "clustered roots: dressing needs the block realization"
    if seq.dim_hint and order < seq.dim_hint:
        msg = (f"detected order {order} is below the dimension {seq.dim_hint}: "
               "degenerate eigenvalues or modes invisible to this observable")
        rep["warning"] = f"{rep['warning']}; {msg}" if "warning" in rep else msg
    return rep


def cmd_reconstruct(args, cfg) -> int:
    sec = _section(cfg, "reconstruct")
    files = list(args.files) or list(sec.get("files", []))
    if not files:
        raise ConfigError("no sequence files given")
    reports = []
    rel_tol = float(sec.get("rank_tol", RANK_TOL))
    for f in files:
        seq = read_trace_sequence(f)
        rep = dict(source=str(f), **reconstruct_report(seq, args.max_order or sec.get("max_order"), rel_tol))
        validate(rep, "reconstruction_report")
        reports.append(rep)
    text = json.dumps(reports[0] if len(reports) == 1 else reports, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "reconstruction.json").write_text(text)
    print(text)
    return 0


def cmd_deficiency(args, cfg) -> int:
    sec = dict(_section(cfg, "deficiency"))
    from .algebra import symmetry_deficiency

    model = sec.get("model", "ssh")
    cfg = dict(cfg, gen_ots=dict(_section(cfg, "gen_ots"), model=model))
    h, M, named = _model(cfg, args.seed)
    n = M.matrix.shape[0]
    gens = [_operator(g, named, n) for g in sec.get("observables", ["O_0"])]
    cands, labels = [], []
    if model == "ssh":
        sym = ssh_symmetries(SshParams(**{**_section(cfg, "ssh"), **({"seed": args.seed} if args.seed is not None else {})}))
        for k, v in sym.items():
            cands.append(v)
            labels.append(k)
    for f in sec.get("candidates", []):
        cands.append(read_matrix(f))
        labels.append(Path(f).stem)
    rep = jsonable(symmetry_deficiency(h, gens, cands, int(sec.get("Q", 16)), labels))
    validate(rep, "deficiency_report")
    text = json.dumps(rep, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "deficiency.json").write_text(text)
    print(text)
    return 0


def cmd_experiment(args, cfg) -> int:
    from .plotting import render

    name = args.name
    if name not in EXPERIMENTS:
        print(f"floquet-tomo: unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}",
              file=sys.stderr)
        return 2
    if args.grid_scale <= 0:
        raise ConfigError("--grid-scale must be positive")
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    res = run_experiment(name, cfg, threads=args.threads, grid_scale=args.grid_scale, seed=args.seed)
    out = Path(args.out or Path("runs") / name)
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for tname, (cols, rows) in res.tables.items():
        write_csv(out / f"{tname}.csv", cols, rows)
        tables[tname] = {"file": f"{tname}.csv", "columns": list(cols), "rows": len(rows)}
    figs = render(name, out, {t: {c: np.array([r[c] for r in rows]) for c in cols}
                              for t, (cols, rows) in res.tables.items()})
    report = jsonable({"experiment": name, "config": res.config, "seed": args.seed,
                       "grid_scale": args.grid_scale, "threads": args.threads, "tables": tables,
                       "summary": res.summary, "figures": figs, "wall_time": res.wall_time,
                       "version": __version__})
    validate(report, "experiment_report")
    (out / "report.json").write_text(json.dumps(report, indent=2))
    print(json.dumps({"experiment": name, "out": str(out), "summary": report["summary"]}, indent=2))
    return 0


def cmd_plot_scripts(args, cfg) -> int:
    from .plotting import plot_scripts

    d = Path(args.dir)
    name = args.experiment
    if name is None:
        rp = d / "report.json"
        if not rp.exists():
            print(f"floquet-tomo: {rp} not found (pass --experiment)", file=sys.stderr)
            return 2
        name = json.loads(rp.read_text())["experiment"]
    try:
        written = plot_scripts(name, d)
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}") from None
    except FileNotFoundError as exc:
        print(f"floquet-tomo: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"dir": str(d), "scripts": written}))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="disorder seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--grid-scale", type=float, default=1.0,
                        help="grid density multiplier, e.g. 0.125 for smoke runs")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="floquet-tomo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-ots", parents=[common], help="write a trace sequence")
    g.add_argument("--model", choices=["dtq3", "ssh", "hamiltonian", "matrix"])
    g.add_argument("--file", help="Hamiltonian or matrix JSON for model=hamiltonian/matrix")
    g.add_argument("--observable")
    g.add_argument("--boundary")
    g.add_argument("--kind", choices=["Ordinary", "Fundamental", "Adjoint", "TimeShifted"])
    g.add_argument("--n-max", type=int, dest="n_max")
    g.add_argument("--t", type=float)
    g.set_defaults(func=cmd_gen_ots)

    r = sub.add_parser("reconstruct", parents=[common], help="reconstruct from sequence files")
    r.add_argument("files", nargs="*")
    r.add_argument("--max-order", type=int)
    r.set_defaults(func=cmd_reconstruct)

    d = sub.add_parser("deficiency", parents=[common], help="symmetry deficiency report")
    d.set_defaults(func=cmd_deficiency)

    e = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    e.add_argument("name", help=", ".join(EXPERIMENTS))
    e.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot-scripts", parents=[common], help="emit plotting scripts")
    p.add_argument("dir")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.set_defaults(func=cmd_plot_scripts)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("floquet-tomo: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else {}
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"floquet-tomo: config error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"floquet-tomo: numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except (TomographyError, ValueError, OSError) as exc:
        print(f"floquet-tomo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
