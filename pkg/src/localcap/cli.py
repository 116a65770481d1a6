"""Command-line front end.

Subcommands: `capacity` (one protocol, one (K, alpha) point), `sweep`
(Cartesian K/alpha axes, per-protocol CSV plus ratios to the triangular
grid), `trace` (dump one reception-area boundary polyline), and
`optimality` (deformation-matrix report).  Every output CSV gets a
`.meta.json` sidecar carrying the resolved configuration, its hash, the
seed and the wall time.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from . import __version__
from .area_tracer import TracerConfig, save_trace_csv, trace_boundary
from .capacity import (DEFAULT_SAMPLES, ProtocolSpec, SweepRow,
                       monte_carlo_capacity, protocol_capacity,
                       ratios_to_triangular, sweep, write_capacity_csv,
                       write_ratio_csv)
from .errors import LocalcapError
from .optimality import deformation_matrices, write_deformation_csv
from .point_processes import GridKind, MapExtent, generate_grid, origin_index
from .sir_field import FieldContext, SirParams

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _parse_axis(text: str) -> list[float]:
    """Axis syntax: single value, comma list, or start:stop:step."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad axis {text!r}; want start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("axis step must be positive")
        vals = []
        v = start
        while v <= stop + 1e-12 * max(1.0, abs(stop)):
            vals.append(round(v, 12))
            v += step
        return vals
    return [float(p) for p in text.split(",")]


def _protocol_spec(name: str, args) -> ProtocolSpec:
    if name in ("triangular", "square", "hexagonal"):
        return ProtocolSpec.grid(name, args.d)
    if name == "aloha":
        return ProtocolSpec.aloha(args.aloha_lambda)
    if name == "coloring":
        return ProtocolSpec.coloring(args.d, args.node_density)
    if name == "csma":
        return ProtocolSpec.csma(args.theta, args.node_density)
    raise ValueError(f"unknown protocol {name!r}")


def _extent(args, spec: ProtocolSpec) -> MapExtent:
    if args.side is not None:
        return MapExtent(args.side)
    return spec.default_extent()


def _tracer_config(args) -> TracerConfig:
    kwargs = {}
    if args.dt is not None:
        kwargs["dt"] = args.dt
    if args.max_steps is not None:
        kwargs["max_steps"] = args.max_steps
    return TracerConfig(**kwargs)


def _resolved_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "config") and not callable(v)}
    return cfg


def _write_sidecar(out_path: str, args, wall_time: float) -> None:
    cfg = _resolved_config(args)
    blob = json.dumps(cfg, sort_keys=True, default=str)
    meta = {
        "config": cfg,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "seed": cfg.get("seed"),
        "version": __version__,
        "wall_time_s": wall_time,
    }
    with open(out_path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _cmd_capacity(args) -> int:
    spec = _protocol_spec(args.protocol, args)
    params = SirParams(K=args.k, alpha=args.alpha)
    extent = _extent(args, spec)
    cfg = _tracer_config(args)
    t0 = time.perf_counter()
    est = protocol_capacity(spec, params, extent, args.samples, args.seed,
                            cfg, args.workers)
    rows = [SweepRow(spec.kind, params.K, params.alpha, est)]
    write_capacity_csv(rows, args.output)
    _write_sidecar(args.output, args, time.perf_counter() - t0)
    print(f"{spec.kind}: capacity = {est.capacity:.6g} "
          f"(lambda = {est.lambda_mean:.6g}, sigma = {est.sigma_mean:.6g}, "
          f"stderr = {est.stderr:.2g})")
    return 0


def _cmd_sweep(args) -> int:
    protocols = [_protocol_spec(p.strip(), args)
                 for p in args.protocols.split(",") if p.strip()]
    k_values = _parse_axis(args.k)
    alpha_values = _parse_axis(args.alpha)
    extent = MapExtent(args.side) if args.side is not None else None
    cfg = _tracer_config(args)
    t0 = time.perf_counter()
    rows = sweep(protocols, k_values, alpha_values, extent, args.samples,
                 args.seed, cfg, args.workers)
    write_capacity_csv(rows, args.output)
    _write_sidecar(args.output, args, time.perf_counter() - t0)
    ratios = ratios_to_triangular(rows)
    if ratios:
        write_ratio_csv(ratios, args.ratio_output)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def _cmd_trace(args) -> int:
    spec = _protocol_spec(args.protocol, args)
    params = SirParams(K=args.k, alpha=args.alpha)
    extent = _extent(args, spec)
    cfg = _tracer_config(args)
    t0 = time.perf_counter()
    if spec.kind in ("triangular", "square", "hexagonal"):
        ts = generate_grid(GridKind(spec.kind), spec.d, extent)
        ctx = FieldContext(ts, params)
        trace = trace_boundary(ctx, origin_index(ts), cfg)
    else:
        # one Monte Carlo sample's centrally picked transmitter
        from .capacity import (_draw_transmitters, _pick_central,
                               _sample_rng)
        rng = _sample_rng(args.seed, 0)
        ts = _draw_transmitters(spec, params, extent, rng)
        i = _pick_central(ts, rng)
        if i < 0:
            raise LocalcapError("sample has no central transmitter")
        ctx = FieldContext(ts, params)
        trace = trace_boundary(ctx, i, cfg)
    save_trace_csv(trace, args.dump_boundary)
    _write_sidecar(args.dump_boundary, args, time.perf_counter() - t0)
    print(f"traced {trace.steps} steps, area = {trace.area:.9g} m^2")
    return 0


def _cmd_optimality(args) -> int:
    params = SirParams(K=args.k, alpha=args.alpha)
    extent = MapExtent(args.side if args.side is not None else 40 * args.d)
    ts = generate_grid(GridKind(args.grid), args.d, extent)
    ctx = FieldContext(ts, params)
    cfg = _tracer_config(args)
    t0 = time.perf_counter()
    report = deformation_matrices(ctx, cfg, args.trunc_radius, args.fd_step)
    write_deformation_csv(report, args.output)
    _write_sidecar(args.output, args, time.perf_counter() - t0)
    print(f"sigma0 = {report.sigma0:.6g}, asymmetry = "
          f"{report.asymmetry:.3g}, tr residual = "
          f"{report.trace_residual:.3g}, |T|_F = {report.t_frobenius:.3g}")
    return 0


def _add_common(p: argparse.ArgumentParser, axis: bool = False) -> None:
    if axis:
        p.add_argument("--k", type=str, default="10",
                       help="K axis: value, comma list, or start:stop:step")
        p.add_argument("--alpha", type=str, default="4",
                       help="alpha axis: value, comma list, or "
                            "start:stop:step")
    else:
        p.add_argument("--k", type=float, default=10.0,
                       help="SIR threshold K")
        p.add_argument("--alpha", type=float, default=4.0,
                       help="path-loss exponent")
    p.add_argument("--d", type=float, default=25.0,
                   help="grid/coloring spacing (m)")
    p.add_argument("--theta", type=float, default=1e-5,
                   help="carrier-sense threshold")
    p.add_argument("--aloha-lambda", type=float, default=0.0016,
                   help="ALOHA transmitter density (1/m^2)")
    p.add_argument("--node-density", type=float, default=0.1,
                   help="node population density (1/m^2)")
    p.add_argument("--side", type=float, default=None,
                   help="map side (m); default 40x the spacing scale")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help="Monte Carlo samples")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("LOCALCAP_WORKERS", "1")),
                   help="parallel sample workers")
    p.add_argument("--dt", type=float, default=None,
                   help="tracer step length (m); default seed_dist/100")
    p.add_argument("--max-steps", type=int, default=None,
                   help="tracer step limit")
    p.add_argument("--config", default=None,
                   help="TOML config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localcap",
        description="Local capacity of wireless ad hoc networks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("capacity", help="capacity of one protocol")
    _add_common(p)
    p.add_argument("--protocol", required=True,
                   choices=["triangular", "square", "hexagonal", "aloha",
                            "coloring", "csma"])
    p.add_argument("--output", default="capacity.csv")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("sweep", help="K/alpha sweep over protocols")
    _add_common(p, axis=True)
    p.add_argument("--protocols", required=True,
                   help="comma list of protocol names")
    p.add_argument("--output", default="sweep.csv")
    p.add_argument("--ratio-output", default="sweep_ratios.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("trace", help="dump one reception-area boundary")
    _add_common(p)
    p.add_argument("--protocol", required=True,
                   choices=["triangular", "square", "hexagonal", "aloha",
                            "coloring", "csma"])
    p.add_argument("--dump-boundary", default="boundary.csv")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("optimality", help="deformation-matrix report")
    _add_common(p)
    p.add_argument("--grid", required=True,
                   choices=["triangular", "square", "hexagonal"])
    p.add_argument("--trunc-radius", type=float, default=None,
                   help="truncation radius for the D sum (m)")
    p.add_argument("--fd-step", type=float, default=None,
                   help="finite-difference step (m)")
    p.add_argument("--output", default="optimality.csv")
    p.set_defaults(func=_cmd_optimality)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser,
                       argv: list[str]) -> list[str]:
    """Load TOML defaults named by --config; flags still override."""
    path = None
    for idx, tok in enumerate(argv):
        if tok == "--config" and idx + 1 < len(argv):
            path = argv[idx + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return argv
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    defaults = {k.replace("-", "_"): v for k, v in data.items()}
    for p in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in p._actions}
        p.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, IndexError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LocalcapError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
