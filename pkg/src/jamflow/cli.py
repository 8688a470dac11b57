"""Command line front end.

Exit status is 0 on success, 1 on domain errors and failed checks, 2 on
usage errors (including malformed configuration tokens).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from . import experiments, generators
from .errors import JamflowError, ParseError
from .io import (
    RunManifest, fmt_decimal, fmt_fraction, load_manifest, neg_shift_of, parse_fraction,
    parse_fraction_list, parse_tails, sweep_csv,
)
from .jams import basin_extents, basin_of_attraction, find_jams
from .model import RING, Configuration, ModelParams, make_params, simulate
from .stats import density, fd_predict, space_avg_velocity, time_avg_velocity
from .tokens import parse_config, render_config, render_trajectory


class UsageError(Exception):
    pass


def _params(args) -> ModelParams:
    return make_params(parse_fraction(args.a), args.vmax)


def _boundary(args):
    return parse_tails(args.tails) if args.line else RING


def _config(args, p: ModelParams) -> Configuration:
    if args.config is None:
        raise UsageError("--config is required")
    return parse_config(args.config, p, general=args.general, boundary=_boundary(args), origin=args.origin)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _fmt_lifetime(x) -> str:
    return "inf" if x == float("inf") else str(x)


def _fmt_basin(b) -> str:
    left = "-inf" if b.left is None else str(b.left)
    return f"[{left},{b.right}]"


GENERATORS = {
    "jammed_block": (generators.jammed_block, ("length", "count")),
    "free_flow": (generators.free_flow, ("length", "count")),
    "block_ring": (generators.block_ring, ("holes", "particles", "repeats")),
}


def build_generated(name: str, values: Dict[str, str], p: ModelParams) -> Configuration:
    if name == "exp_blocks":
        return generators.exp_blocks(int(values.get("k_max", "3")), p)
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}")
    fn, keys = GENERATORS[name]
    missing = [k for k in keys if k not in values and k != "repeats"]
    if missing:
        raise UsageError(f"generator {name} needs {', '.join(missing)}")
    return fn(*(int(values[k]) for k in keys if k in values))


def _manifest_config(m: RunManifest) -> Configuration:
    if m.config is not None:
        return parse_config(m.config, m.params, general=m.general, boundary=m.boundary, origin=m.origin)
    if m.generator is not None:
        return build_generated(m.generator, m.generator_args, m.params)
    raise UsageError("manifest has neither config nor generator")


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.manifest:
        m = load_manifest(Path(args.manifest).read_text(encoding="utf-8"))
        p, c = m.params, _manifest_config(m)
        steps, general, neg = m.horizon, m.general, m.neg_shift
        out = args.out or m.outputs.get("trajectory")
    else:
        p = _params(args)
        c = _config(args, p)
        steps, general, neg = args.steps, args.general, neg_shift_of(args.neg_shift)
        out = args.out
    t = simulate(c, p, steps, general=general, neg_shift=neg)
    marks = None
    if args.annotate_basin is not None:
        jam = next((j for j in find_jams(c) if j.end == args.annotate_basin), None)
        if jam is None:
            raise UsageError(f"no jam is led from site {args.annotate_basin}")
        marks = basin_extents(t, jam)
    _emit(render_trajectory(t, marks), out)
    return 0


def cmd_jams(args) -> int:
    p = _params(args)
    c = _config(args, p)
    lines = []
    for j in find_jams(c):
        start = "-inf" if j.start is None else str(j.start)
        lines.append(f"jam=[{start},{j.end}] lead={fmt_fraction(j.leading_velocity)}\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_basin(args) -> int:
    p = _params(args)
    c = _config(args, p)
    lines = []
    for j in find_jams(c):
        b = basin_of_attraction(c, j, p)
        weight = "inf" if b.weight is None else str(b.weight)
        lines.append(f"jam_end={j.end} basin={_fmt_basin(b)} weight={weight}\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_lifetime(args) -> int:
    p = _params(args)
    c = _config(args, p)
    lines = []
    for j in find_jams(c):
        if args.jam is not None and j.end != args.jam:
            continue
        b = basin_of_attraction(c, j, p)
        lines.append(f"tau={_fmt_lifetime(b.lifetime)} basin={_fmt_basin(b)}\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_stats(args) -> int:
    p = _params(args)
    c = _config(args, p)
    lo, hi = c.origin, c.end
    rho = density(c, lo, hi)
    lines = [f"density={fmt_fraction(rho)}\n"]
    if c.n_particles:
        lines.append(f"space_avg_velocity={fmt_fraction(space_avg_velocity(c, lo, hi))}\n")
    if rho > 0:
        pred = fd_predict(rho, p)
        lines.append(f"gamma1={fmt_fraction(pred.gamma1)} gamma2={fmt_fraction(pred.gamma2)}\n")
        lines.append(f"predicted_lower={fmt_fraction(pred.lower_branch)} "
                     f"upper_branch={'1' if pred.upper_branch_present else '0'}\n")
    if args.steps and c.n_particles:
        t = simulate(c, p, args.steps, general=args.general, neg_shift=neg_shift_of(args.neg_shift))
        first = c.particles()[0][0]
        _, v = time_avg_velocity(t, first)[-1]
        lines.append(f"site={first} time_avg_velocity={fmt_fraction(v)} ({fmt_decimal(v)})\n")
    _emit("".join(lines), args.out)
    return 0


def _sweep_spec(args) -> experiments.SweepSpec:
    return experiments.SweepSpec(
        a_values=parse_fraction_list(args.a_values),
        densities=parse_fraction_list(args.densities),
        lattice_length=args.length,
        horizon=args.steps,
        burn_in=args.burn_in,
        inits=tuple(t.strip() for t in args.inits.split(",") if t.strip()),
        seeds=tuple(int(t) for t in args.seeds.split(",")),
    )


def cmd_fd_sweep(args) -> int:
    out = args.out
    workers = args.workers
    if args.manifest:
        m = load_manifest(Path(args.manifest).read_text(encoding="utf-8"))
        if m.sweep is None:
            raise UsageError("manifest has no [sweep] section")
        spec = m.sweep
        out = out or m.outputs.get("csv")
        workers = workers or m.workers
    else:
        spec = _sweep_spec(args)
    rows = experiments.fd_sweep(spec, workers=workers or 1)
    _emit(sweep_csv(rows), out)
    return 0


def cmd_hysteresis(args) -> int:
    p = _params(args)
    r = experiments.hysteresis_run(parse_fraction(args.rho), p, args.length, args.steps, args.burn_in)
    text = (f"rho={fmt_fraction(r.rho)}\n"
            f"before_V={fmt_fraction(r.before_V)} ({fmt_decimal(r.before_V)})\n"
            f"after_V={fmt_fraction(r.after_V)} ({fmt_decimal(r.after_V)})\n"
            f"perturbed_sites={','.join(map(str, r.perturbed_sites))}\n"
            f"predicted_lower={fmt_fraction(r.predicted_lower)} predicted_upper={fmt_fraction(r.predicted_upper)}\n"
            f"ultimately_jammed={'1' if r.ultimately_jammed else '0'}\n")
    _emit(text, args.out)
    return 0


def cmd_lifetime_check(args) -> int:
    report = experiments.lifetime_campaign(
        count=args.count, max_len=args.max_len, a_values=parse_fraction_list(args.a_values),
        seed=args.seed, exhaustive_len=args.exhaustive_len, full_len=args.full_len,
    )
    lines = []
    for part in report.parts:
        lines.append(
            f"a={fmt_fraction(part.a)} prefixes={part.exhaustive_prefixes} full_jams={part.full_jams} "
            f"random_jams={part.random_jams} reference_jams={part.reference_jams} "
            f"mismatches={part.mismatches}\n")
        lines.extend(f"  {ex}\n" for ex in part.examples)
    lines.append(f"total_mismatches={report.mismatches}\n")
    _emit("".join(lines), args.out)
    return 0 if report.mismatches == 0 else 1


def cmd_jam_growth(args) -> int:
    p = _params(args)
    if args.config is not None:
        c = _config(args, p)
        if args.leader is None:
            raise UsageError("--leader is required with --config")
        leader = args.leader
    else:
        base = generators.free_flow(args.length, args.length // 2, even_sites=True)
        leader = base.particles()[-1][0]
        c = generators.single_site_stop(base, leader)
    r = experiments.jam_growth(c, p, args.steps, leader, expected_slope=parse_fraction(args.slope))
    died = "none" if r.lifetime is None else str(r.lifetime)
    text = (f"final_length={r.lengths[-1]} slope={r.slope:.6f} "
            f"max_residual={r.max_residual:.6f} died_at={died}\n")
    _emit(text, args.out)
    return 0


def cmd_flux_audit(args) -> int:
    p = _params(args)
    c = _config(args, p)
    t = simulate(c, p, args.steps)
    audit = experiments.flux_balance(t, burn_in=args.burn_in)
    flux = sum(s.particle_displacement for s in audit.steps)
    text = (f"steps={len(audit.steps)} violations=0 total_displacement={flux}\n"
            f"mean_velocity={fmt_fraction(audit.mean_velocity)} gaps={len(audit.gaps)}\n")
    _emit(text, args.out)
    return 0


def cmd_generate(args) -> int:
    p = _params(args)
    bad = [kv for kv in args.param if "=" not in kv]
    if bad:
        raise UsageError(f"expected KEY=VALUE, got {bad[0]!r}")
    values = dict(kv.split("=", 1) for kv in args.param)
    c = build_generated(args.kind, values, p)
    _emit(render_config(c, p) + "\n", args.out)
    return 0


# -- parser --------------------------------------------------------------------


def _model_flags(sp: argparse.ArgumentParser, config: bool = True) -> None:
    sp.add_argument("--a", default="1/2", help="acceleration as p/q")
    sp.add_argument("--vmax", type=int, default=1)
    sp.add_argument("--out", help="write output to this file")
    if not config:
        return
    sp.add_argument("--config", help="whitespace-separated cell tokens")
    sp.add_argument("--line", action="store_true", help="line lattice instead of a ring")
    sp.add_argument("--tails", default="holes,holes", help="left,right tails of a line")
    sp.add_argument("--origin", type=int, default=0)
    sp.add_argument("--general", action="store_true", help="allow negative velocities")
    sp.add_argument("--neg-shift", default="trunc", choices=("trunc", "floor"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jamflow", description="Exact slow-to-start traffic model.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="print a trajectory")
    _model_flags(sp)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--manifest")
    sp.add_argument("--annotate-basin", type=int, metavar="SITE", help="bracket the basin of the jam led from SITE")
    sp.set_defaults(func=cmd_simulate)

    for name, func, text in (("jams", cmd_jams, "list jams"), ("basin", cmd_basin, "basins of attraction")):
        sp = sub.add_parser(name, help=text)
        _model_flags(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("lifetime", help="closed-form jam life-times")
    _model_flags(sp)
    sp.add_argument("--jam", type=int, metavar="SITE", help="only the jam led from SITE")
    sp.set_defaults(func=cmd_lifetime)

    sp = sub.add_parser("stats", help="densities and average velocities")
    _model_flags(sp)
    sp.add_argument("--steps", type=int, default=0)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("fd-sweep", help="fundamental diagram sweep as CSV")
    _model_flags(sp, config=False)
    sp.add_argument("--manifest")
    sp.add_argument("--a-values", default="1,1/2,1/3")
    sp.add_argument("--densities", default="grid:1/24")
    sp.add_argument("--length", type=int, default=120)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--burn-in", type=int, default=1_000)
    sp.add_argument("--inits", default="jammed_block,free_flow")
    sp.add_argument("--seeds", default="0")
    sp.add_argument("--workers", type=int, default=0)
    sp.set_defaults(func=cmd_fd_sweep)

    sp = sub.add_parser("hysteresis", help="free flow before and after a sparse stop set")
    _model_flags(sp, config=False)
    sp.add_argument("--rho", default="2/5")
    sp.add_argument("--length", type=int, default=120)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--burn-in", type=int, default=1_000)
    sp.set_defaults(func=cmd_hysteresis)

    sp = sub.add_parser("lifetime-check", help="closed-form life-time against simulation")
    sp.add_argument("--out")
    sp.add_argument("--a-values", default="1,1/2,1/3")
    sp.add_argument("--count", type=int, default=10_000)
    sp.add_argument("--max-len", type=int, default=30)
    sp.add_argument("--exhaustive-len", type=int, default=12)
    sp.add_argument("--full-len", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_lifetime_check)

    sp = sub.add_parser("jam-growth", help="growth of a jam seeded in free flow")
    _model_flags(sp)
    sp.add_argument("--leader", type=int)
    sp.add_argument("--length", type=int, default=8200)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--slope", default="1/2")
    sp.set_defaults(func=cmd_jam_growth)

    sp = sub.add_parser("flux-audit", help="check the per-step flux balance")
    _model_flags(sp)
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--burn-in", type=int, default=0)
    sp.set_defaults(func=cmd_flux_audit)

    sp = sub.add_parser("generate", help="print a generated configuration")
    _model_flags(sp, config=False)
    sp.add_argument("kind", choices=sorted(GENERATORS) + ["exp_blocks"])
    sp.add_argument("param", nargs="*", metavar="KEY=VALUE")
    sp.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"jamflow {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (JamflowError, ValueError, OSError) as exc:
        print(f"jamflow {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
