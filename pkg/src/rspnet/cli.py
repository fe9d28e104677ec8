"""``rspnet`` command line.

Exit codes: 0 success, 1 usage, 2 domain or I/O error, 3 numerical failure.
Every output file carries a run manifest: JSON outputs embed it under
``"manifest"``, CSV and PGM outputs get a ``<name>.manifest.json`` sidecar.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import game_core as gc

OUT_ENV = "RSPNET_OUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --- argument types ---------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def params_arg(text) -> gc.Params:
    vals = list(text) if isinstance(text, (list, tuple)) else _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("parameters are given as EPS_X,EPS_Y")
    try:
        return gc.Params(*vals)
    except gc.DomainError as exc:
        raise argparse.ArgumentTypeError(f"parameter out of range: {exc}")


def vector_arg(text) -> np.ndarray:
    return np.array(list(text) if isinstance(text, (list, tuple)) else _floats(text), dtype=float)


def itinerary_arg(text):
    from .switching import Itinerary, ItineraryError

    try:
        return Itinerary.parse(str(text))
    except ItineraryError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def positive(text) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


# --- manifest and output -------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, gc.Params):
        return [v.eps_x, v.eps_y]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (str, int, float, bool, type(None), list, dict)):
        return v
    return str(v)


def manifest(args, started: str) -> dict:
    opts = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "config", "command")}
    digest = hashlib.sha256(json.dumps(opts, sort_keys=True).encode()).hexdigest()
    return {
        "command": args.command,
        "params": _jsonable(getattr(args, "p", None)),
        "options": opts,
        "config_digest": digest,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }


def out_path(name: str | None, default: str) -> Path:
    base = Path(os.environ.get(OUT_ENV, "."))
    p = Path(name) if name else Path(default)
    return p if p.is_absolute() else base / p


def _sidecar(path: Path, man: dict) -> None:
    Path(str(path) + ".manifest.json").write_text(json.dumps(man, indent=1) + "\n")


def _write_json(path: Path, payload: dict, man: dict) -> None:
    payload = dict(payload)
    payload["manifest"] = man
    path.write_text(json.dumps(payload, indent=1, default=_jsonable) + "\n")


# --- subcommands -----------------------------------------------------------------------------


def cmd_simulate(args, man) -> int:
    from . import integrator as it

    cfg = it.IntegratorConfig(rel_tol=args.rtol, abs_tol=args.atol)
    s0 = args.s0 if args.s0 is not None else gc.SimplexState.nash().vector
    if args.s0 is None and args.chart != "simplex":
        s0 = it.to_chart(s0, args.chart)
    traj = it.integrate(args.p, s0, args.t, cfg, chart=args.chart)
    path = out_path(args.out, "simulate.csv")
    traj.to_csv(path)
    _sidecar(path, man())
    print(f"wrote {len(traj.times)} rows to {path}; t_final={traj.final_time:.6g}")
    if args.p.zero_sum:
        v = np.array([gc.hamiltonian_v(s) for s in traj.simplex_states()])
        print(f"zero-sum run: max |V(t)-V(0)| = {np.max(np.abs(v - v[0])):.3e}")
    if not traj.complete:
        print(f"integration stopped early: {traj.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_regions(args, man) -> int:
    from . import stability as st

    rows = st.region_atlas(args.step)
    csv_path = out_path(args.out_csv, "regions.csv")
    pgm_path = out_path(args.out_pgm, "regions.pgm")
    st.write_atlas_csv(rows, csv_path)
    st.write_pgm(st.atlas_label_grid(rows), pgm_path)
    m = man()
    _sidecar(csv_path, m)
    _sidecar(pgm_path, m)
    print(f"wrote {len(rows)} grid rows to {csv_path} and {pgm_path}")
    return EXIT_OK


def cmd_itinerary(args, man) -> int:
    from . import switching as sw

    if args.scan:
        rows = sw.scan_itinerary(args.steps, args.step, args.h, args.workers, args.samples)
        stem = args.out or "itinerary_scan"
        csv_path, pgm_path = out_path(stem + ".csv", ""), out_path(stem + ".pgm", "")
        sw.write_scan(rows, args.h, csv_path, pgm_path)
        m = man()
        _sidecar(csv_path, m)
        _sidecar(pgm_path, m)
        counts = {k: sum(r[2] == k for r in rows) for k in ("Attainable", "NotAttainable", "Unknown", "Skipped")}
        print(json.dumps({"rows": len(rows), "counts": counts, "csv": str(csv_path), "pgm": str(pgm_path)}))
        return EXIT_OK
    if args.p is None:
        raise UsageError("give --p or --scan")
    v = sw.check_attainable(args.steps, args.p, args.h, args.samples, args.seed, with_trace=args.trace)
    payload = v.to_dict()
    payload["manifest"] = man()
    text = json.dumps(payload, indent=1, default=_jsonable)
    if args.out:
        out_path(args.out, "").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_lyapunov(args, man) -> int:
    from . import lyapunov as ly

    if args.batch:
        jobs = ly.load_batch(args.batch)
    elif args.p is not None and args.s0 is not None:
        if len(args.s0) != 4:
            raise UsageError("--s0 takes the four log coordinates u1,u2,v1,v2")
        jobs = [{"p": [args.p.eps_x, args.p.eps_y], "s0": args.s0.tolist(), "t_total": args.t}]
    else:
        raise UsageError("give --p and --s0, or --batch")
    results = ly.run_batch(jobs, args.workers, args.renorm, args.field)
    path = out_path(args.out, "lyapunov.csv")
    ly.write_batch_csv(results, path)
    _sidecar(path, man())
    failed = 0
    for i, r, err in results:
        if r is None:
            failed += 1
            print(f"[{i}] failed: {err}", file=sys.stderr)
        else:
            print(f"[{i}] p=({r.p.eps_x:g},{r.p.eps_y:g}) exponents={np.array2string(r.exponents, precision=6)} "
                  f"pattern={ly.classify_spectrum(r).value}")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_basin(args, man) -> int:
    from . import stability as st

    b = st.basin_fraction(args.p, args.cycle, args.radius, args.delta, args.samples, args.seed,
                          args.edge, args.t_max, args.workers)
    payload = {"cycle": args.cycle, "fraction": b.fraction, "half_width_95": b.half_width,
               "n_samples": b.n_samples, "n_inside": b.n_inside, "center": b.center.tolist()}
    path = out_path(args.out, "basin.json")
    _write_json(path, payload, man())
    print(json.dumps(payload))
    return EXIT_OK


def cmd_gap(args, man) -> int:
    from . import equilibria as eq

    g = eq.heteroclinic_gap(args.p, args.t_max, args.points)
    payload = {"eps_x": args.p.eps_x, "eps_y": args.p.eps_y, "gap": g}
    path = out_path(args.out, "gap.json")
    _write_json(path, payload, man())
    print(json.dumps(payload))
    return EXIT_OK


def cmd_atlas_dump(args, man) -> int:
    from . import hetnet as hn

    data = hn.atlas(args.h)
    path = out_path(args.out, "atlas.json")
    _write_json(path, data, man())
    counts = {k: len(v) for k, v in data.items() if isinstance(v, (list, dict))}
    print(json.dumps({"out": str(path), "counts": counts}))
    return EXIT_OK


# --- parser ------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rspnet", description="Bimatrix Rock-Scissors-Paper replicator dynamics and its heteroclinic network.")
    ap.add_argument("--version", action="version", version=f"rspnet {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(sp, need_p=True):
        sp.add_argument("--config", help="JSON file of option values; explicit flags win")
        if need_p:
            sp.add_argument("--p", type=params_arg, required=False, metavar="EX,EY", help="tie payoffs eps_x,eps_y in (-1,1)")
        sp.add_argument("--out", help=f"output file (relative paths resolve against ${OUT_ENV})")

    s = sub.add_parser("simulate", help="integrate the replicator field",
                       description="Integrate the replicator vector field on the product of two simplices "
                                   "(or in the reduced or log chart) and write the trajectory as CSV.")
    common(s)
    s.add_argument("--s0", type=vector_arg, help="initial state in the chosen chart (default: Nash equilibrium)")
    s.add_argument("--t", type=positive, default=10.0)
    s.add_argument("--chart", choices=("simplex", "reduced", "log"), default="simplex")
    s.add_argument("--rtol", type=positive, default=1e-12)
    s.add_argument("--atol", type=positive, default=1e-14)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("regions", help="stability regions of the three cycles",
                       description="Classify each grid point of the parameter square by the eigenvalues of the "
                                   "cycle matrices of C0, C1, C2 and write the region atlas (CSV and PGM).")
    s.add_argument("--config")
    s.add_argument("--step", type=positive, default=0.05)
    s.add_argument("--out-csv")
    s.add_argument("--out-pgm")
    s.set_defaults(func=cmd_regions)

    s = sub.add_parser("itinerary", help="attainability of an itinerary near the network",
                       description="Decide whether an orbit can follow a finite itinerary of corners (PP,SP,...) or "
                                   "quotient sections (3,4,3,2,1; C0 and C2 abbreviate their section pairs) through "
                                   "the composed local, global and transition maps.")
    common(s)
    s.add_argument("--steps", type=itinerary_arg, required=False, help='e.g. "PP,SP,SR,RR" or "3,4,3,2,1"')
    s.add_argument("--h", type=positive, default=1e-3)
    s.add_argument("--scan", action="store_true", help="scan the parameter grid instead of one point")
    s.add_argument("--step", type=positive, default=0.05)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--trace", action="store_true", help="attach per-factor log-magnitude ranges")
    s.set_defaults(func=cmd_itinerary)

    s = sub.add_parser("lyapunov", help="Lyapunov spectrum by QR re-orthonormalisation",
                       description="Lyapunov spectra of the log-chart system using the QR (Ruelle-Eckmann type) "
                                   "re-orthonormalisation of a tangent frame; batch input is a JSON list.")
    common(s)
    s.add_argument("--s0", type=vector_arg, help="log-chart state u1,u2,v1,v2")
    s.add_argument("--t", type=positive, default=2000.0)
    s.add_argument("--renorm", type=positive, default=1.0)
    s.add_argument("--field", choices=("derived", "printed"), default="derived")
    s.add_argument("--batch", help="JSON list of {p, s0, t_total}")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("basin", help="local basin share of a heteroclinic cycle",
                       description="Monte Carlo share of a ball at a cycle edge midpoint whose orbits stay in a tube "
                                   "around the cycle and approach it.")
    common(s)
    s.add_argument("--cycle", choices=("C0", "C1", "C2"), default="C0")
    s.add_argument("--radius", type=positive, default=5e-3)
    s.add_argument("--delta", type=positive, default=0.05)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--edge", type=int, default=0)
    s.add_argument("--t-max", type=positive, default=400.0)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_basin)

    s = sub.add_parser("gap", help="distance between the traced branches of two center-equilibrium manifolds",
                       description="Smallest distance between the unstable branch of Z^b and the stable branch of "
                                   "Z^a in the face x1 = 0; small values flag near-connections.")
    common(s)
    s.add_argument("--t-max", type=positive, default=60.0)
    s.add_argument("--points", type=int, default=10_000)
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("atlas-dump", help="sections and maps of the heteroclinic network as JSON",
                       description="Export every cross-section, local map, global map and constant-free quotient "
                                   "map of the heteroclinic network.")
    common(s, need_p=False)
    s.add_argument("--h", type=positive, default=1e-3)
    s.set_defaults(func=cmd_atlas_dump)
    return ap


_TYPES = {"p": params_arg, "s0": vector_arg, "steps": itinerary_arg}


_VALUE_FLAGS = {"--p", "--s0"}


def _glue_negative_values(argv: list[str]) -> list[str]:
    """``--p -0.8,-0.9`` would otherwise be read as an unknown option."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def parse(argv) -> argparse.Namespace:
    argv = _glue_negative_values(list(argv))
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise gc.DomainError(f"cannot read config {args.config}: {exc}")
        explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key in explicit or not hasattr(args, key):
                continue
            try:
                setattr(args, key, _TYPES[key](v) if key in _TYPES else v)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config {k}: {exc}")
    if args.command in ("simulate", "basin", "gap") and args.p is None:
        raise UsageError("--p EX,EY is required")
    if args.command == "itinerary" and args.steps is None:
        raise UsageError("--steps is required")
    return args


def main(argv=None) -> int:
    from .integrator import IntegrationError
    from .lyapunov import LyapunovError

    argv = list(sys.argv[1:] if argv is None else argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        args = parse(argv)
        return args.func(args, lambda: manifest(args, started))
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"rspnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (gc.DomainError, OSError) as exc:
        print(f"rspnet: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (IntegrationError, LyapunovError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"rspnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
