"""Whitespace-separated token format for configurations.

``.`` is a hole; a particle is written as its velocity: an integer (``0``,
``1``, ``-1``), an exact fraction (``3/4``) or the symbols ``a`` / ``-a``
standing for plus or minus the acceleration.  Square brackets glued to a
token (``[.``, ``0]``) mark a basin extent and are ignored on input.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .errors import ParseError, RangeError, WindowError
from .model import RING, Boundary, Cell, Configuration, ModelParams, Trajectory

_NUMBER = re.compile(r"^-?\d+(/\d+)?$")


def parse_cell(token: str, p: Optional[ModelParams] = None, index: Optional[int] = None) -> Cell:
    tok = token.strip("[]")
    if tok == ".":
        return None
    if tok in ("a", "-a"):
        if p is None:
            raise ParseError("symbolic velocity needs an acceleration", index)
        return p.a if tok == "a" else -p.a
    if not _NUMBER.match(tok):
        raise ParseError(f"bad token {token!r}", index)
    try:
        return Fraction(tok)
    except ZeroDivisionError:
        raise ParseError(f"zero denominator in {token!r}", index) from None


def parse_cells(text: str, p: Optional[ModelParams] = None, general: bool = False) -> Tuple[Cell, ...]:
    cells = []
    for idx, tok in enumerate(text.split()):
        v = parse_cell(tok, p, idx)
        if v is not None and p is not None:
            low = -p.vmax if general else 0
            if not low <= v <= p.vmax:
                raise RangeError(f"token {idx}: velocity {v} outside [{low}, {p.vmax}]")
        cells.append(v)
    return tuple(cells)


def parse_config(text: str, p: Optional[ModelParams] = None, general: bool = False,
                 boundary: Boundary = RING, origin: int = 0) -> Configuration:
    return Configuration(parse_cells(text, p, general), boundary, origin)


def render_cell(v: Cell, p: Optional[ModelParams] = None) -> str:
    if v is None:
        return "."
    if v.denominator == 1:
        return str(v.numerator)
    if p is not None and v == p.a:
        return "a"
    if p is not None and v == -p.a:
        return "-a"
    return f"{v.numerator}/{v.denominator}"


def render_cells(cells: Sequence[Cell], p: Optional[ModelParams] = None,
                 brackets: Optional[Tuple[int, int]] = None) -> str:
    """Render cells; ``brackets=(k, m)`` are offsets into ``cells``."""
    toks = [render_cell(v, p) for v in cells]
    if brackets is not None:
        k, m = brackets
        if 0 <= k < len(toks):
            toks[k] = "[" + toks[k]
        if 0 <= m < len(toks):
            toks[m] = toks[m] + "]"
    return " ".join(toks)


def render_config(c: Configuration, p: Optional[ModelParams] = None) -> str:
    return render_cells(c.cells, p)


def render_trajectory(t: Trajectory, annotations: Optional[Iterable] = None,
                      lo: Optional[int] = None, hi: Optional[int] = None,
                      row_windows: Optional[Sequence[Tuple[int, int]]] = None) -> str:
    """One line per time step over the lattice window ``[lo, hi]``.

    ``annotations[t]`` is an optional ``(left, right)`` lattice extent to be
    bracketed in row ``t``.  ``row_windows[t]`` overrides the window of a
    single row.
    """
    if not len(t):
        return ""
    first = t.configs[0]
    lo = first.origin if lo is None else lo
    hi = first.end if hi is None else hi
    marks: List = list(annotations) if annotations is not None else []
    lines = []
    for step, config in enumerate(t.configs):
        row_lo, row_hi = row_windows[step] if row_windows is not None else (lo, hi)
        if first.is_ring and row_hi - row_lo + 1 > len(first):
            raise WindowError(f"window [{row_lo}, {row_hi}] is longer than the ring")
        row = config.window(row_lo, row_hi)
        mark = marks[step] if step < len(marks) else None
        rel = None
        if mark is not None:
            left = row_lo - 1 if mark[0] is None else mark[0]
            rel = (left - row_lo, mark[1] - row_lo)
        lines.append(render_cells(row, t.params, rel))
    return "\n".join(lines) + "\n"
