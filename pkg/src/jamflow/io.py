"""Run manifests (INI files) and CSV output."""

from __future__ import annotations

import configparser
import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from .errors import DomainError
from .experiments import SweepRow, SweepSpec, fd_grid
from .model import RING, Boundary, Line, ModelParams, NegShift, Tail, make_params


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"not a rational number: {text!r}") from None


def parse_fraction_list(text: str) -> Tuple[Fraction, ...]:
    """Comma-separated rationals, or ``grid:STEP`` for ``STEP, 2*STEP, ... < 1``."""
    text = text.strip()
    if text.startswith("grid:"):
        return fd_grid(parse_fraction(text[5:]))
    return tuple(parse_fraction(t) for t in text.split(",") if t.strip())


def parse_tails(text: str) -> Line:
    parts = [t.strip().lower() for t in text.split(",")]
    if len(parts) != 2 or any(t not in ("holes", "zeros") for t in parts):
        raise DomainError(f"tails must look like 'holes,zeros', got {text!r}")
    return Line(Tail(parts[0]), Tail(parts[1]))


def fmt_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fmt_decimal(x: Fraction, digits: int = 6) -> str:
    return f"{float(x):.{digits}f}"


@dataclass
class RunManifest:
    """Everything needed to reproduce a run.

    Sections: ``[model]`` (a, vmax), ``[boundary]`` (mode, tails, origin),
    ``[init]`` (config, or generator plus args), ``[run]`` (horizon,
    burn_in, general, neg_shift, observables), ``[output]`` (trajectory,
    csv) and, for sweeps, ``[sweep]``.
    """

    params: ModelParams
    boundary: Boundary = RING
    origin: int = 0
    config: Optional[str] = None
    generator: Optional[str] = None
    generator_args: Dict[str, str] = field(default_factory=dict)
    horizon: int = 0
    burn_in: int = 0
    general: bool = False
    neg_shift: NegShift = NegShift.TOWARD_ZERO
    observables: Tuple[str, ...] = ()
    outputs: Dict[str, str] = field(default_factory=dict)
    sweep: Optional[SweepSpec] = None
    workers: int = 1


def load_manifest(text: str) -> RunManifest:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise DomainError(f"bad manifest: {exc}") from None
    model = cp["model"] if cp.has_section("model") else {}
    params = make_params(parse_fraction(model.get("a", "1")), int(model.get("vmax", "1")))
    m = RunManifest(params)
    if cp.has_section("boundary"):
        b = cp["boundary"]
        mode = b.get("mode", "ring").strip().lower()
        if mode == "line":
            m.boundary = parse_tails(b.get("tails", "holes,holes"))
        elif mode != "ring":
            raise DomainError(f"unknown boundary mode {mode!r}")
        m.origin = b.getint("origin", 0)
    if cp.has_section("init"):
        init = cp["init"]
        m.config = init.get("config")
        m.generator = init.get("generator")
        m.generator_args = {k: v for k, v in init.items() if k not in ("config", "generator")}
    if cp.has_section("run"):
        r = cp["run"]
        m.horizon = r.getint("horizon", 0)
        m.burn_in = r.getint("burn_in", 0)
        m.general = r.getboolean("general", False)
        m.neg_shift = neg_shift_of(r.get("neg_shift", "trunc"))
        m.observables = tuple(t.strip() for t in r.get("observables", "").split(",") if t.strip())
    if cp.has_section("output"):
        m.outputs = dict(cp["output"].items())
    if cp.has_section("sweep"):
        s = cp["sweep"]
        m.sweep = SweepSpec(
            a_values=parse_fraction_list(s.get("a_values", fmt_fraction(params.a))),
            densities=parse_fraction_list(s.get("densities", "grid:1/24")),
            lattice_length=s.getint("lattice_length", 120),
            horizon=s.getint("horizon", 10_000),
            burn_in=s.getint("burn_in", 1_000),
            inits=tuple(t.strip() for t in s.get("inits", "jammed_block,free_flow").split(",")),
            seeds=tuple(int(t) for t in s.get("seeds", "0").split(",")),
            tolerance=parse_fraction(s.get("tolerance", "1/50")),
        )
        m.workers = s.getint("workers", 1)
    return m


def neg_shift_of(text: str) -> NegShift:
    key = text.strip().lower()
    if key in ("trunc", "toward_zero", "toward-zero"):
        return NegShift.TOWARD_ZERO
    if key == "floor":
        return NegShift.FLOOR
    raise DomainError(f"unknown negative shift {text!r}")


SWEEP_HEADER = (
    "a", "w", "rho_requested", "rho_actual", "rho_actual_dec", "init", "seed", "tagged",
    "measured_V", "measured_V_dec", "predicted_lower", "predicted_lower_dec",
    "predicted_upper_present", "matched", "abs_error", "abs_error_dec",
    "audit_violations", "holes_checked", "holes_periodic", "holes_censored",
)


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def sweep_rows(rows: Iterable[SweepRow]) -> List[List[str]]:
    out = []
    for r in rows:
        out.append([
            fmt_fraction(r.a), str(r.w), fmt_fraction(r.rho_requested),
            fmt_fraction(r.rho_actual), fmt_decimal(r.rho_actual), r.init, str(r.seed), str(r.tagged),
            fmt_fraction(r.measured_V), fmt_decimal(r.measured_V),
            fmt_fraction(r.predicted_lower), fmt_decimal(r.predicted_lower),
            "1" if r.predicted_upper_present else "0", fmt_fraction(r.matched),
            fmt_fraction(r.abs_error_vs_matched_branch), fmt_decimal(r.abs_error_vs_matched_branch),
            str(r.audit_violations), str(r.holes_checked), str(r.holes_periodic), str(r.holes_censored),
        ])
    return out


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    write_csv(buf, SWEEP_HEADER, sweep_rows(rows))
    return buf.getvalue()
