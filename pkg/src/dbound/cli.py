"""Command-line entry point.

Subcommands expose each layer of the package: analytic curves (analyze),
Monte Carlo runs (simulate), the switch detector (detect), the trade-off
chart (tradeoff), the constrained parameter search (optimize), and the
comparison-figure datasets with rendered PNGs (figures).

stdout carries only data (CSV or JSON); everything else goes to stderr.
Every command is deterministic given --seed; without one, a seed is drawn
from entropy and echoed on stderr.  Seed resolution order: --seed flag,
config file, DBOUND_SEED environment variable, entropy.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path

from . import analytics
from .experiments import (
    FIGURES,
    GridSpec,
    figure_rows,
    optimize,
    tradeoff_chart,
)
from .noise import NoiseModel, switched_rounds
from .simkit import (
    ExperimentConfig,
    estimate_availability,
    estimate_security,
    result_record,
)

ANALYZE_CURVES = ("mafia", "distance", "mafia-exact", "distance-exact",
                  "hk-mafia", "hk-frr", "naive")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_bytes()
    if path.endswith((".toml", ".tml")):
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text.decode())
    return json.loads(text)


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _resolve_seed(args: argparse.Namespace, config: dict) -> int:
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = config.get("seed")
    if seed is None:
        env = os.environ.get("DBOUND_SEED")
        if env is not None:
            seed = int(env)
    if seed is None:
        seed = secrets.randbits(62)
        print(f"seed drawn from entropy: {seed}", file=sys.stderr)
    return int(seed)


def _out_stream(out: str | None):
    if out and out != "-":
        return open(out, "w", newline="")
    return sys.stdout


def _emit_csv(header, rows, out: str | None) -> None:
    stream = _out_stream(out)
    try:
        stream.write(",".join(header) + "\n")
        for row in rows:
            stream.write(",".join(row) + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    n_max = int(_resolve(args, config, "n", 64))
    x = int(_resolve(args, config, "x", 0))
    p_f = float(_resolve(args, config, "pf", 0.0))
    p_b = float(_resolve(args, config, "pb", 0.0))
    curve = args.curve
    if curve == "mafia":
        values = analytics.mafia_success_curve(n_max)
    elif curve == "distance":
        values = analytics.distance_success_curve(n_max)
    elif curve in ("mafia-exact", "distance-exact"):
        values = analytics.adversary_exact_curve(n_max)
    elif curve == "hk-mafia":
        values = [analytics.hk_mafia(n) for n in range(1, n_max + 1)]
    elif curve == "hk-frr":
        values = [analytics.hk_frr(n, min(x, n), p_f, p_b) for n in range(1, n_max + 1)]
    elif curve == "naive":
        values = [analytics.naive_bound(n) for n in range(1, n_max + 1)]
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(curve)
    rows = [[str(n), f"{v:.5e}"] for n, v in zip(range(1, n_max + 1), values)]
    _emit_csv(["n", "value"], rows, args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    cfg = ExperimentConfig(
        protocol=_resolve(args, config, "protocol", "ours"),
        n=int(_resolve(args, config, "n", 48)),
        noise=NoiseModel(
            p_f=float(_resolve(args, config, "pf", 0.0)),
            p_b=float(_resolve(args, config, "pb", 0.0)),
        ),
        x=int(_resolve(args, config, "x", 0)),
        dl=int(_resolve(args, config, "dl", 1)),
        trials=int(_resolve(args, config, "trials", 100_000)),
        master_seed=seed,
        adversary=args.mode if args.mode != "honest" else "mafia-preask",
        noise_legs=_resolve(args, config, "legs", "both"),
        workers=int(_resolve(args, config, "workers", 1)),
    )
    if args.mode == "honest":
        estimate = estimate_availability(cfg)
        record = result_record(cfg, "availability", estimate)
        record["config"]["adversary"] = None
    else:
        estimate = estimate_security(cfg)
        record = result_record(cfg, "security", estimate)
    text = json.dumps(record, sort_keys=True)
    stream = _out_stream(args.out)
    try:
        stream.write(text + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    events = switched_rounds(args.d, args.q, args.dl)
    record = {
        "d": args.d,
        "q": args.q,
        "dl": args.dl,
        "events": [[r, s] for r, s in events],
    }
    print(json.dumps(record, sort_keys=True))
    return 0


def _cmd_tradeoff(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    protocols = tuple(_resolve(args, config, "protocols", "ours,hk,at,at3").split(","))
    cells = tradeoff_chart(
        protocols,
        a_max=int(_resolve(args, config, "amax", 64)),
        b_max=int(_resolve(args, config, "bmax", 64)),
        n_max=int(_resolve(args, config, "nmax", 64)),
        memory_cap_per_round=args.memory_cap,
        seed=seed,
    )
    rows = [
        [str(c.a), str(c.b), c.winner or "", "" if c.rounds is None else str(c.rounds),
         "" if c.memory_bits is None else str(c.memory_bits)]
        for c in cells
    ]
    _emit_csv(["a", "b", "winner", "rounds", "memory_bits"], rows, args.out)
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    n = int(_resolve(args, config, "n", 48))
    grid = GridSpec.full(n)
    if args.x_max is not None or args.dl_max is not None:
        grid = GridSpec(
            xs=tuple(range(0, (args.x_max if args.x_max is not None else n) + 1)),
            dls=tuple(range(1, (args.dl_max if args.dl_max is not None else n) + 1)),
        )
    result = optimize(
        protocol=_resolve(args, config, "protocol", "ours"),
        n=n,
        noise=NoiseModel(
            p_f=float(_resolve(args, config, "pf", 0.0)),
            p_b=float(_resolve(args, config, "pb", 0.0)),
        ),
        delta=float(_resolve(args, config, "delta", 0.05)),
        grid=grid,
        trials=int(_resolve(args, config, "trials", 100_000)),
        master_seed=seed,
        workers=int(_resolve(args, config, "workers", 1)),
    )
    text = json.dumps(result.to_dict(), sort_keys=True)
    stream = _out_stream(args.out)
    try:
        stream.write(text + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def _cmd_figures(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config)
    which_list = FIGURES if args.which == "all" else (args.which,)
    out_dir = Path(_resolve(args, config, "out", "figures"))
    out_dir.mkdir(parents=True, exist_ok=True)
    emitted = []
    for which in which_list:
        header, rows = figure_rows(
            which,
            n_max=int(_resolve(args, config, "nmax", 64)),
            n_noisy=int(_resolve(args, config, "n", 48)),
            delta=float(_resolve(args, config, "delta", 0.05)),
            trials=int(_resolve(args, config, "trials", 100_000)),
            master_seed=seed,
            workers=int(_resolve(args, config, "workers", 1)),
        )
        csv_path = out_dir / f"{which}.csv"
        _emit_csv(header, rows, str(csv_path))
        emitted.append(str(csv_path))
        if not args.no_plot:
            from .plots import render_figure

            png_path = out_dir / f"{which}.png"
            render_figure(which, header, rows, str(png_path))
            emitted.append(str(png_path))
        print(f"wrote {which}", file=sys.stderr)
    for path in emitted:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbound",
        description="Distance-bounding protocol analysis and experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, seeded: bool = True) -> None:
        p.add_argument("--config", help="TOML or JSON file with flag defaults")
        p.add_argument("--out", help="output file (default: stdout)")
        if seeded:
            p.add_argument("--seed", type=int, help="master seed (fallback: DBOUND_SEED, then entropy)")
            p.add_argument("--workers", type=int, help="parallel trial workers")

    p = sub.add_parser("analyze", help="emit an analytic curve as CSV")
    p.add_argument("curve", choices=ANALYZE_CURVES)
    p.add_argument("--n", type=int, help="largest round count (default 64)")
    p.add_argument("--x", type=int, help="tolerance for hk-frr (default 0)")
    p.add_argument("--pf", type=float, help="forward flip probability")
    p.add_argument("--pb", type=float, help="backward flip probability")
    common(p, seeded=False)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo estimate as JSON")
    p.add_argument("mode", choices=("honest", "mafia-preask", "distance-earlyreply", "naive-random"))
    p.add_argument("--protocol", help="ours | hk | at | at3 | at:d=<d>")
    p.add_argument("--n", type=int)
    p.add_argument("--pf", type=float)
    p.add_argument("--pb", type=float)
    p.add_argument("--x", type=int)
    p.add_argument("--dl", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--legs", choices=("both", "prover", "verifier"))
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("detect", help="run the switch detector on a mismatch string")
    p.add_argument("d", help="mismatch vector as a 0/1 string")
    p.add_argument("q", help="register q as a 0/1 string")
    p.add_argument("dl", type=int, help="minimum pattern threshold")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("tradeoff", help="emit the winner grid as CSV")
    p.add_argument("--protocols", help="comma list (default ours,hk,at,at3)")
    p.add_argument("--amax", type=int)
    p.add_argument("--bmax", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--memory-cap", type=float, default=None,
                   help="max state bits per round (e.g. 5 for the 5n chart)")
    common(p)
    p.set_defaults(func=_cmd_tradeoff)

    p = sub.add_parser("optimize", help="constrained (x, dl) search as JSON")
    p.add_argument("--protocol")
    p.add_argument("--n", type=int)
    p.add_argument("--pf", type=float)
    p.add_argument("--pb", type=float)
    p.add_argument("--delta", type=float, help="FRR bound (default 0.05)")
    p.add_argument("--trials", type=int)
    p.add_argument("--x-max", type=int, help="restrict the tolerance grid")
    p.add_argument("--dl-max", type=int, help="restrict the threshold grid")
    common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("figures", help="write figure CSVs and PNGs")
    p.add_argument("which", choices=FIGURES + ("all",))
    p.add_argument("--n", type=int, help="rounds for noisy figures (default 48)")
    p.add_argument("--nmax", type=int, help="rounds for curve/chart figures (default 64)")
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--no-plot", action="store_true", help="CSV only, skip PNG rendering")
    common(p)
    p.set_defaults(func=_cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
