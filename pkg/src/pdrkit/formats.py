"""File formats: weights container, clause files, CTI pools, witnesses.

Weights container ("wts"):
    line 1:  "wts v1 <kind> <binary|text> <ntensors>"        (ASCII)
    0+ lines: "meta <key> <value>"                           (ASCII, no spaces in key)
    then, per tensor, an ASCII header line "<name> <ndim> <dim0> <dim1> ..."
    followed by the payload: row-major little-endian float32 for binary mode,
    or one line of space-separated decimal floats for text mode.
    Kinds in use: "gin" (encoder), "scorer" (DeepSets scorer), "table"
    (per-circuit embedding table).  Tensor order is fixed per kind and
    validated by the loaders in ``embed``/``scorer``.

Clause file ("c-format"):
    line 1: "c-format v1 latches=<n>"
    one clause per line: signed 1-based latch ordinals (sign = polarity),
    whitespace-separated.  "#" starts a comment; blank lines ignored.

CTI pool:
    comment header "# cti-pool v1 latches=<n> inputs=<m>", then one line per
    sample: signed latch ordinals of the minimized cube, "|", then 2m input
    bits (current-step bits then next-step bits, declaration order).  The
    labeled variant appends "| <mask>" with one keep(1)/drop(0) bit per cube
    literal, aligned with the ordinals on the line.

Witness (counterexample) format:
    "1", then "b0" (property index), then one line of initial latch values,
    one line of input bits per step, and a closing "." line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aiger import TransitionSystem
from .cubes import Clause, Cube
from .pdr import Trace


class FormatError(ValueError):
    pass


WEIGHTS_MAGIC = "wts"
WEIGHTS_VERSION = "v1"
WEIGHT_KINDS = ("gin", "scorer", "table")


# --------------------------------------------------------------------- weights


def write_weights(
    kind: str,
    tensors: Sequence[tuple[str, np.ndarray]],
    meta: dict[str, str] | None = None,
    binary: bool = True,
) -> bytes:
    if kind not in WEIGHT_KINDS:
        raise FormatError(f"unknown weights kind {kind!r}")
    mode = "binary" if binary else "text"
    out = [f"{WEIGHTS_MAGIC} {WEIGHTS_VERSION} {kind} {mode} {len(tensors)}\n".encode()]
    for key, value in (meta or {}).items():
        if " " in key:
            raise FormatError(f"meta key {key!r} contains a space")
        out.append(f"meta {key} {value}\n".encode())
    for name, arr in tensors:
        a = np.asarray(arr, dtype=np.float32)
        if not np.isfinite(a).all():
            raise FormatError(f"tensor {name!r} has non-finite values")
        dims = " ".join(str(d) for d in a.shape)
        out.append(f"{name} {a.ndim}{' ' + dims if a.ndim else ''}\n".encode())
        if binary:
            out.append(a.astype("<f4").tobytes(order="C"))
        else:
            flat = " ".join(f"{x:.9g}" for x in a.reshape(-1))
            out.append((flat + "\n").encode())
    return b"".join(out)


def read_weights(data: bytes) -> tuple[str, list[tuple[str, np.ndarray]], dict[str, str]]:
    pos = 0

    def read_line() -> str:
        nonlocal pos
        end = data.find(b"\n", pos)
        if end < 0:
            raise FormatError("unexpected end of file in header line")
        line = data[pos:end].decode("ascii", errors="replace")
        pos = end + 1
        return line

    header = read_line().split()
    if len(header) != 5 or header[0] != WEIGHTS_MAGIC:
        raise FormatError("not a weights file (bad magic line)")
    if header[1] != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weights version {header[1]!r}")
    kind, mode, ntensors_s = header[2], header[3], header[4]
    if kind not in WEIGHT_KINDS:
        raise FormatError(f"unknown weights kind {kind!r}")
    if mode not in ("binary", "text"):
        raise FormatError(f"unknown weights mode {mode!r}")
    try:
        ntensors = int(ntensors_s)
    except ValueError:
        raise FormatError(f"bad tensor count {ntensors_s!r}") from None

    meta: dict[str, str] = {}
    tensors: list[tuple[str, np.ndarray]] = []
    pending_header: list[str] | None = None
    while len(tensors) < ntensors:
        if pending_header is None:
            fields = read_line().split()
            if not fields:
                continue
            if fields[0] == "meta":
                if tensors:
                    raise FormatError("meta lines must precede tensors")
                if len(fields) < 3:
                    raise FormatError("malformed meta line")
                meta[fields[1]] = " ".join(fields[2:])
                continue
            pending_header = fields
        fields = pending_header
        pending_header = None
        if len(fields) < 2:
            raise FormatError(f"malformed tensor header {' '.join(fields)!r}")
        name = fields[0]
        try:
            ndim = int(fields[1])
            dims = tuple(int(x) for x in fields[2 : 2 + ndim])
        except ValueError:
            raise FormatError(f"malformed tensor header for {name!r}") from None
        if len(dims) != ndim:
            raise FormatError(f"tensor {name!r}: dimension list does not match ndim")
        count = 1
        for d in dims:
            if d < 0:
                raise FormatError(f"tensor {name!r}: negative dimension")
            count *= d
        if mode == "binary":
            nbytes = count * 4
            if pos + nbytes > len(data):
                raise FormatError(f"truncated while reading tensor {name!r}")
            arr = np.frombuffer(data[pos : pos + nbytes], dtype="<f4").reshape(dims)
            pos += nbytes
        else:
            line = read_line() if count else ""
            parts = line.split()
            if len(parts) != count:
                raise FormatError(
                    f"truncated while reading tensor {name!r}: "
                    f"expected {count} values, found {len(parts)}"
                )
            arr = np.array([np.float32(x) for x in parts], dtype=np.float32).reshape(dims)
        if not np.isfinite(arr).all():
            raise FormatError(f"tensor {name!r} has non-finite values")
        tensors.append((name, arr.astype(np.float32)))
    return kind, tensors, meta


# ----------------------------------------------------------------- clause file

CLAUSE_MAGIC = "c-format"
CLAUSE_VERSION = "v1"


def clause_ordinals(ts: TransitionSystem, clause: Clause) -> str:
    """Render one clause as signed 1-based latch ordinals (one file line)."""
    ordinal = {v: i + 1 for i, v in enumerate(ts.latch_vars)}
    parts = []
    for lit in clause:
        o = ordinal.get(abs(lit))
        if o is None:
            raise FormatError(f"clause literal over non-latch variable {abs(lit)}")
        parts.append(str(o if lit > 0 else -o))
    return " ".join(parts)


def write_clauses(
    ts: TransitionSystem, clauses: Sequence[Clause], comments: Sequence[str] = ()
) -> str:
    n = len(ts.latch_vars)
    lines = [f"{CLAUSE_MAGIC} {CLAUSE_VERSION} latches={n}"]
    for c in comments:
        lines.append(f"# {c}")
    for cl in clauses:
        lines.append(clause_ordinals(ts, cl))
    return "\n".join(lines) + "\n"


def read_clauses(ts: TransitionSystem, text: str) -> list[Clause]:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty clause file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != CLAUSE_MAGIC:
        raise FormatError("not a clause file (bad header)")
    if header[1] != CLAUSE_VERSION:
        raise FormatError(f"unsupported clause file version {header[1]!r}")
    if not header[2].startswith("latches="):
        raise FormatError("clause file header missing latch count")
    n = int(header[2].split("=", 1)[1])
    if n != len(ts.latch_vars):
        raise FormatError(
            f"clause file is for {n} latches, circuit has {len(ts.latch_vars)}"
        )
    out = []
    for lineno, raw in enumerate(lines[1:], start=2):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        lits = []
        for tok in body.split():
            try:
                o = int(tok)
            except ValueError:
                raise FormatError(f"line {lineno}: bad ordinal {tok!r}") from None
            if o == 0 or abs(o) > n:
                raise FormatError(f"line {lineno}: ordinal {o} out of range 1..{n}")
            v = ts.latch_vars[abs(o) - 1]
            lits.append(v if o > 0 else -v)
        try:
            out.append(Clause.of(lits))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return out


# ------------------------------------------------------------------- CTI pool

POOL_MAGIC = "cti-pool"
POOL_VERSION = "v1"


@dataclass(frozen=True)
class PoolEntry:
    cube: Cube
    inputs: tuple[bool, ...]
    next_inputs: tuple[bool, ...]
    keep_mask: tuple[bool, ...] | None = None  # aligned with cube.lits


def _bits_str(bits: Sequence[bool]) -> str:
    return "".join("1" if b else "0" for b in bits)


def _parse_bits(s: str, what: str, lineno: int) -> tuple[bool, ...]:
    if any(ch not in "01" for ch in s):
        raise FormatError(f"line {lineno}: {what} must be 0/1 bits, got {s!r}")
    return tuple(ch == "1" for ch in s)


def write_cti_pool(
    ts: TransitionSystem,
    entries: Sequence,
    labeled: bool = False,
) -> str:
    """Serialize CtiSample-likes (cube/inputs/next_inputs [+keep_mask])."""
    n = len(ts.latch_vars)
    m = len(ts.aig.input_vars())
    ordinal = {v: i + 1 for i, v in enumerate(ts.latch_vars)}
    lines = [
        f"# {POOL_MAGIC} {POOL_VERSION} latches={n} inputs={m}",
        "# fields: cube ordinals | current then next input bits"
        + (" | keep mask" if labeled else ""),
    ]
    for e in entries:
        parts = []
        for lit in e.cube:
            o = ordinal.get(abs(lit))
            if o is None:
                raise FormatError(f"cube literal over non-latch variable {abs(lit)}")
            parts.append(str(o if lit > 0 else -o))
        line = " ".join(parts) + " | " + _bits_str(tuple(e.inputs) + tuple(e.next_inputs))
        if labeled:
            mask = getattr(e, "keep_mask", None)
            if mask is None or len(mask) != len(e.cube):
                raise FormatError("labeled pool entry needs a keep mask per literal")
            line += " | " + _bits_str(mask)
        lines.append(line)
    return "\n".join(lines) + "\n"


def read_cti_pool(ts: TransitionSystem, text: str) -> list[PoolEntry]:
    lines = text.splitlines()
    header = None
    for raw in lines:
        s = raw.strip()
        if s.startswith("#"):
            fields = s[1:].split()
            if fields[:2] == [POOL_MAGIC, POOL_VERSION]:
                header = dict(f.split("=", 1) for f in fields[2:] if "=" in f)
            break
    if header is None:
        raise FormatError("not a CTI pool file (missing header comment)")
    n = int(header.get("latches", "-1"))
    m = int(header.get("inputs", "-1"))
    if n != len(ts.latch_vars):
        raise FormatError(f"pool is for {n} latches, circuit has {len(ts.latch_vars)}")
    if m != len(ts.aig.input_vars()):
        raise FormatError(
            f"pool is for {m} inputs, circuit has {len(ts.aig.input_vars())}"
        )
    out = []
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        sections = [s.strip() for s in body.split("|")]
        if len(sections) not in (2, 3):
            raise FormatError(f"line {lineno}: expected 2 or 3 '|' sections")
        lits = []
        for tok in sections[0].split():
            o = int(tok)
            if o == 0 or abs(o) > n:
                raise FormatError(f"line {lineno}: ordinal {o} out of range")
            v = ts.latch_vars[abs(o) - 1]
            lits.append(v if o > 0 else -v)
        cube = Cube.of(lits)
        bits = _parse_bits(sections[1], "input bits", lineno)
        if len(bits) != 2 * m:
            raise FormatError(
                f"line {lineno}: expected {2 * m} input bits, got {len(bits)}"
            )
        mask = None
        if len(sections) == 3:
            mask = _parse_bits(sections[2], "keep mask", lineno)
            if len(mask) != len(cube):
                raise FormatError(
                    f"line {lineno}: keep mask length {len(mask)} != cube size {len(cube)}"
                )
        out.append(
            PoolEntry(cube=cube, inputs=bits[:m], next_inputs=bits[m:], keep_mask=mask)
        )
    return out


# -------------------------------------------------------------------- witness


def write_witness(ts: TransitionSystem, trace: Trace, property_index: int = 0) -> str:
    lines = ["1", f"b{property_index}"]
    lines.append(_bits_str(trace.initial))
    for vec in trace.inputs:
        lines.append(_bits_str(vec))
    lines.append(".")
    return "\n".join(lines) + "\n"


def read_witness(ts: TransitionSystem, text: str) -> Trace:
    # Blank lines are meaningful between the initial state and the closing
    # '.': for an input-free circuit every step's input vector is the empty
    # line.  Only leading blank lines are skipped.
    lines = [l.strip() for l in text.splitlines()]
    idx = 0
    while idx < len(lines) and not lines[idx]:
        idx += 1
    if idx >= len(lines) or lines[idx] != "1":
        raise FormatError("witness must start with a '1' result line")
    idx += 1
    if idx < len(lines) and lines[idx].startswith("b"):
        idx += 1
    n = len(ts.latch_vars)
    m = len(ts.aig.input_vars())
    if idx >= len(lines) or not lines[idx]:
        raise FormatError("witness missing initial state line")
    initial = _parse_bits(lines[idx], "initial state", idx + 1)
    if len(initial) != n:
        raise FormatError(f"initial state has {len(initial)} bits, expected {n}")
    idx += 1
    inputs = []
    while idx < len(lines) and lines[idx] != ".":
        vec = _parse_bits(lines[idx], "input vector", idx + 1)
        if len(vec) != m:
            raise FormatError(f"input line has {len(vec)} bits, expected {m}")
        inputs.append(vec)
        idx += 1
    if idx >= len(lines):
        raise FormatError("witness missing closing '.'")
    if not inputs:
        raise FormatError("witness has no input lines")
    return Trace(initial=initial, inputs=tuple(inputs))
