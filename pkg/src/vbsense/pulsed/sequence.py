"""Textual pulse-sequence language.

Statements are separated by ``;`` or newlines, ``#`` starts a comment::

    laser 5us; wait t; read 300ns
    mw pi/2; wait t; mw pi; wait t; mw pi/2 phase 180; read 300ns

Statements:

    laser <dur>
    mw <dur|t|pi|pi/2> [phase <deg>] [rabi <freq>]
    wait <dur|t>
    read <dur>

Durations need a unit (ns, us, ms); frequencies accept Hz, kHz, MHz, GHz.
A bare identifier such as ``t`` is the swept duration. It may appear
several times (all occurrences take the same value), but only one distinct
name is allowed per sequence.
"""

import bisect
import re
from dataclasses import dataclass

from ..errors import (MalformedSequence, MultipleSweepPlaceholders, SequenceSyntaxError,
                      UnknownUnit)

TIME_UNITS = {"ns": 1.0, "us": 1e3, "µs": 1e3, "ms": 1e6}
FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
KINDS = ("laser", "mw", "wait", "read")
RESERVED = set(KINDS) | {"pi", "phase", "rabi"}

_TOKEN = re.compile(r"(?P<comment>#[^\n]*)|(?P<sep>[;\n])|(?P<word>[^\s;#]+)")
_QUANTITY = re.compile(r"(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<unit>.*)")
_IDENT = re.compile(r"[A-Za-z_]\w*")


@dataclass(frozen=True)
class PulseOp:
    kind: str
    duration_ns: float | None = None  # None when swept or given as a pulse angle
    sweep: str | None = None  # placeholder name for swept durations
    angle: str | None = None  # "pi" or "pi/2" for mw pulses
    phase_deg: float = 0.0
    rabi_hz: float | None = None


@dataclass(frozen=True)
class PulseSequence:
    ops: tuple

    def __post_init__(self):
        if not any(op.kind == "read" for op in self.ops):
            raise MalformedSequence("sequence has no read window")
        for op in self.ops:
            if op.duration_ns is not None and not op.duration_ns > 0:
                raise MalformedSequence(f"{op.kind} duration must be positive")

    @property
    def sweep_indices(self):
        return tuple(i for i, op in enumerate(self.ops) if op.sweep is not None)

    @property
    def placeholder(self):
        names = {op.sweep for op in self.ops if op.sweep is not None}
        return names.pop() if names else None


class _Tokens:
    def __init__(self, text):
        starts = [0] + [m.end() for m in re.finditer("\n", text)]
        self.items = []  # (kind, value, line, col)
        for m in _TOKEN.finditer(text):
            group = m.lastgroup
            if group is None or group == "comment":
                continue
            pos = m.start(group)
            line = bisect.bisect_right(starts, pos)
            self.items.append((group, m.group(group), line, pos - starts[line - 1] + 1))


def _parse_quantity(word, units, what, line, col):
    m = _QUANTITY.fullmatch(word)
    if m is None:
        raise SequenceSyntaxError(f"expected a {what}, got {word!r}", line, col)
    value = float(m.group("num"))
    unit = m.group("unit")
    if not unit:
        raise UnknownUnit(f"{what} {word!r} needs a unit", line, col)
    key = unit if units is TIME_UNITS else unit.lower()
    if key not in units:
        raise UnknownUnit(f"unknown {what} unit {unit!r}", line, col + len(m.group("num")))
    if not value > 0:
        raise SequenceSyntaxError(f"{what} must be positive", line, col)
    return value * units[key]


def _statements(tokens):
    stmt = []
    for tok in tokens.items:
        if tok[0] == "sep":
            if stmt:
                yield stmt
            stmt = []
        else:
            stmt.append(tok)
    if stmt:
        yield stmt


def _duration_or_placeholder(tok):
    _, word, line, col = tok
    if _IDENT.fullmatch(word) and word not in TIME_UNITS:
        if word in RESERVED:
            raise SequenceSyntaxError(f"{word!r} cannot be used here", line, col)
        return None, word
    return _parse_quantity(word, TIME_UNITS, "duration", line, col), None


def _parse_statement(stmt):
    _, kind, line, col = stmt[0]
    if kind not in KINDS:
        raise SequenceSyntaxError(f"unknown operation {kind!r}", line, col)
    if len(stmt) < 2:
        raise SequenceSyntaxError(f"{kind} needs an argument", line, col + len(kind))
    arg = stmt[1]
    rest = stmt[2:]
    if kind in ("laser", "read"):
        if rest:
            raise SequenceSyntaxError(f"unexpected {rest[0][1]!r}", rest[0][2], rest[0][3])
        return PulseOp(kind, _parse_quantity(arg[1], TIME_UNITS, "duration", arg[2], arg[3]))
    if kind == "wait":
        if rest:
            raise SequenceSyntaxError(f"unexpected {rest[0][1]!r}", rest[0][2], rest[0][3])
        dur, name = _duration_or_placeholder(arg)
        return PulseOp(kind, dur, sweep=name)

    angle = None
    dur = name = None
    if arg[1] in ("pi", "pi/2"):
        angle = arg[1]
    else:
        dur, name = _duration_or_placeholder(arg)
    phase = 0.0
    rabi = None
    i = 0
    while i < len(rest):
        _, key, kl, kc = rest[i]
        if key not in ("phase", "rabi"):
            raise SequenceSyntaxError(f"unexpected {key!r}", kl, kc)
        if i + 1 >= len(rest):
            raise SequenceSyntaxError(f"{key} needs a value", kl, kc + len(key))
        _, val, vl, vc = rest[i + 1]
        if key == "phase":
            try:
                phase = float(val)
            except ValueError:
                raise SequenceSyntaxError(f"phase must be a number of degrees, got {val!r}",
                                          vl, vc) from None
        else:
            rabi = _parse_quantity(val, FREQ_UNITS, "frequency", vl, vc)
        i += 2
    return PulseOp("mw", dur, sweep=name, angle=angle, phase_deg=phase, rabi_hz=rabi)


def parse_sequence(text):
    """Parse ``text`` into a PulseSequence; errors carry 1-based line/column."""
    tokens = _Tokens(text)
    ops = []
    names = {}
    for stmt in _statements(tokens):
        op = _parse_statement(stmt)
        if op.sweep is not None:
            names.setdefault(op.sweep, (stmt[1][2], stmt[1][3]))
            if len(names) > 1:
                line, col = stmt[1][2], stmt[1][3]
                raise MultipleSweepPlaceholders(
                    f"placeholders {sorted(names)} found; only one swept duration is allowed",
                    line, col)
        ops.append(op)
    if not ops:
        raise MalformedSequence("empty sequence")
    return PulseSequence(tuple(ops))


def _fmt_ns(value):
    return f"{value!r}ns"


def _fmt_hz(value):
    return f"{value!r}Hz"


def format_sequence(seq):
    """Canonical text for ``seq``; ``parse_sequence`` reproduces it exactly."""
    parts = []
    for op in seq.ops:
        if op.sweep is not None:
            arg = op.sweep
        elif op.angle is not None:
            arg = op.angle
        else:
            arg = _fmt_ns(op.duration_ns)
        text = f"{op.kind} {arg}"
        if op.kind == "mw":
            if op.phase_deg != 0.0:
                text += f" phase {op.phase_deg!r}"
            if op.rabi_hz is not None:
                text += f" rabi {_fmt_hz(op.rabi_hz)}"
        parts.append(text)
    return "; ".join(parts)


TEMPLATES = {
    "rabi": "laser 5us; mw t; read 300ns",
    "t1": "laser 5us; wait t; read 300ns",
    "echo": "laser 5us; mw pi/2; wait t; mw pi; wait t; mw pi/2 phase 180; read 300ns",
}
# phase-cycling partners: same sequence with the projection pulse at phase 0
REFERENCE_TEMPLATES = {
    "echo": "laser 5us; mw pi/2; wait t; mw pi; wait t; mw pi/2; read 300ns",
}
