"""AIGER circuit frontend: parsing, writing, and the transition-system view.

Supports the ASCII ("aag") and binary ("aig") forms of AIGER 1.0/1.9
and-inverter graphs.  A literal is ``2*var`` (+1 for negation); literal 0 is
constant false, literal 1 constant true.  Files carrying constraint, justice,
or fairness sections are rejected with a clear error -- only plain safety
(outputs / bad-state properties) is in scope.

The ``Aig`` value is immutable after construction and validated:
  * every AND left-hand side is even and its variable is strictly greater
    than both right-hand-side variables (this implies acyclicity),
  * inputs, latches and AND outputs are pairwise disjoint,
  * every referenced literal fits under ``2*max_var + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .cubes import Cube


class AigerError(ValueError):
    """Malformed AIGER input; carries a line (ASCII) or byte offset (binary)."""

    def __init__(self, msg: str, *, line: int | None = None, offset: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif offset is not None:
            where = f" (byte offset {offset})"
        super().__init__(msg + where)
        self.line = line
        self.offset = offset


@dataclass(frozen=True)
class Latch:
    lit: int            # even literal of the latch output
    next: int           # literal driving the next-state value
    init: int | None    # 0, 1, or None (uninitialized)


@dataclass(frozen=True)
class Aig:
    max_var: int
    inputs: tuple[int, ...]                 # even literals
    latches: tuple[Latch, ...]
    outputs: tuple[int, ...]
    bads: tuple[int, ...]                   # bad-state literals (AIGER 1.9)
    ands: tuple[tuple[int, int, int], ...]  # (lhs, rhs0, rhs1)
    symbols: tuple[tuple[str, int, str], ...] = ()   # (kind, position, name)
    comments: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def outputs_or_bads(self) -> tuple[int, ...]:
        """Property candidates: bad literals if present, else outputs."""
        return self.bads if self.bads else self.outputs

    def num_inputs(self) -> int:
        return len(self.inputs)

    def num_latches(self) -> int:
        return len(self.latches)

    def num_ands(self) -> int:
        return len(self.ands)

    def latch_vars(self) -> tuple[int, ...]:
        return tuple(l.lit >> 1 for l in self.latches)

    def input_vars(self) -> tuple[int, ...]:
        return tuple(l >> 1 for l in self.inputs)

    def and_for_var(self) -> dict[int, tuple[int, int, int]]:
        return {a[0] >> 1: a for a in self.ands}


def _validate(aig: Aig) -> None:
    top = 2 * aig.max_var + 1
    defined: set[int] = set()

    def check_lit(lit: int, what: str) -> None:
        if not (0 <= lit <= top):
            raise AigerError(f"{what} literal {lit} exceeds maximum {top}")

    for lit in aig.inputs:
        check_lit(lit, "input")
        if lit < 2 or lit & 1:
            raise AigerError(f"input literal {lit} must be even and positive")
        if lit >> 1 in defined:
            raise AigerError(f"variable {lit >> 1} defined twice")
        defined.add(lit >> 1)
    for latch in aig.latches:
        check_lit(latch.lit, "latch")
        check_lit(latch.next, "latch next-state")
        if latch.lit < 2 or latch.lit & 1:
            raise AigerError(f"latch literal {latch.lit} must be even and positive")
        if latch.lit >> 1 in defined:
            raise AigerError(f"variable {latch.lit >> 1} defined twice")
        if latch.init not in (0, 1, None):
            raise AigerError(f"latch reset value {latch.init!r} invalid")
        defined.add(latch.lit >> 1)
    for lhs, rhs0, rhs1 in aig.ands:
        check_lit(lhs, "AND")
        check_lit(rhs0, "AND operand")
        check_lit(rhs1, "AND operand")
        if lhs & 1 or lhs < 2:
            raise AigerError(f"AND literal {lhs} must be even and positive")
        if lhs >> 1 in defined:
            raise AigerError(f"variable {lhs >> 1} defined twice")
        if (rhs0 >> 1) >= (lhs >> 1) or (rhs1 >> 1) >= (lhs >> 1):
            raise AigerError(
                f"AND {lhs} references operand variable not strictly below it "
                f"({rhs0}, {rhs1}); definitions must be topologically ordered"
            )
        defined.add(lhs >> 1)
    for lit in aig.outputs:
        check_lit(lit, "output")
    for lit in aig.bads:
        check_lit(lit, "bad")


# ---------------------------------------------------------------------------
# parsing

def parse(data: bytes) -> Aig:
    """Parse ASCII or binary AIGER from raw bytes (format chosen by magic)."""
    if data.startswith(b"aag "):
        return _parse_ascii(data)
    if data.startswith(b"aig "):
        return _parse_binary(data)
    raise AigerError("not an AIGER file: header must start with 'aag' or 'aig'", line=1)


def parse_file(path: str) -> Aig:
    with open(path, "rb") as fh:
        return parse(fh.read())


def _parse_header(line: bytes, lineno: int) -> tuple[str, list[int]]:
    parts = line.split()
    magic = parts[0].decode("ascii", "replace") if parts else ""
    if magic not in ("aag", "aig"):
        raise AigerError("bad magic in header", line=lineno)
    try:
        counts = [int(p) for p in parts[1:]]
    except ValueError:
        raise AigerError("non-numeric field in header", line=lineno)
    if not 5 <= len(counts) <= 9:
        raise AigerError("header must carry M I L O A and optionally B C J F", line=lineno)
    counts += [0] * (9 - len(counts))
    m, i, l, o, a, b, c, j, f = counts
    if any(x < 0 for x in counts):
        raise AigerError("negative count in header", line=lineno)
    if c or j or f:
        raise AigerError(
            "constraint/justice/fairness sections are not supported", line=lineno
        )
    if m < i + l + a:
        raise AigerError("maximum variable index smaller than I+L+A", line=lineno)
    return magic, [m, i, l, o, a, b]


def _parse_ascii(data: bytes) -> Aig:
    lines = data.split(b"\n")
    lineno = 0

    def next_line() -> bytes:
        nonlocal lineno
        if lineno >= len(lines):
            raise AigerError("unexpected end of file", line=lineno)
        line = lines[lineno]
        lineno += 1
        return line

    _, (m, ni, nl, no, na, nb) = _parse_header(next_line(), 1)

    def ints(expected: int, what: str) -> list[int]:
        line = next_line()
        parts = line.split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise AigerError(f"non-numeric token in {what} line", line=lineno)
        if len(vals) != expected and not (what == "latch" and len(vals) in (2, 3)):
            raise AigerError(f"{what} line must carry {expected} fields", line=lineno)
        return vals

    inputs = tuple(ints(1, "input")[0] for _ in range(ni))
    latches = []
    for _ in range(nl):
        vals = ints(2, "latch")
        lit, nxt = vals[0], vals[1]
        init: int | None = 0
        if len(vals) == 3:
            if vals[2] == lit:
                init = None          # reset to itself: uninitialized
            elif vals[2] in (0, 1):
                init = vals[2]
            else:
                raise AigerError(f"latch reset value {vals[2]} invalid", line=lineno)
        latches.append(Latch(lit, nxt, init))
    outputs = tuple(ints(1, "output")[0] for _ in range(no))
    bads = tuple(ints(1, "bad")[0] for _ in range(nb))
    ands = []
    for _ in range(na):
        lhs, rhs0, rhs1 = ints(3, "AND")
        ands.append((lhs, rhs0, rhs1))

    symbols, comments = _parse_trailer(lines[lineno:], lineno)
    return Aig(
        max_var=m,
        inputs=inputs,
        latches=tuple(latches),
        outputs=outputs,
        bads=bads,
        ands=tuple(ands),
        symbols=symbols,
        comments=comments,
    )


def _parse_trailer(rest: list[bytes], base_line: int) -> tuple[tuple, tuple]:
    symbols: list[tuple[str, int, str]] = []
    comments: list[str] = []
    in_comments = False
    for k, raw in enumerate(rest):
        line = raw.decode("utf-8", "replace")
        if in_comments:
            comments.append(line)
            continue
        if line == "c":
            in_comments = True
            continue
        if not line.strip():
            continue
        kind = line[0]
        if kind in ("i", "l", "o", "b") and " " in line:
            pos_str, _, name = line[1:].partition(" ")
            try:
                pos = int(pos_str)
            except ValueError:
                raise AigerError("malformed symbol entry", line=base_line + k + 1)
            symbols.append((kind, pos, name))
        else:
            raise AigerError(f"unexpected trailer line {line!r}", line=base_line + k + 1)
    while comments and comments[-1] == "":
        comments.pop()
    return tuple(symbols), tuple(comments)


def _parse_binary(data: bytes) -> Aig:
    nl_header = data.find(b"\n")
    if nl_header < 0:
        raise AigerError("missing header newline", line=1)
    _, (m, ni, nl, no, na, nb) = _parse_header(data[:nl_header], 1)

    pos = nl_header + 1
    lineno = 1

    def next_line(what: str) -> bytes:
        nonlocal pos, lineno
        end = data.find(b"\n", pos)
        if end < 0:
            raise AigerError(f"unexpected end of file in {what} section", line=lineno + 1)
        line = data[pos:end]
        pos = end + 1
        lineno += 1
        return line

    inputs = tuple(2 * (i + 1) for i in range(ni))

    latches = []
    for k in range(nl):
        lit = 2 * (ni + k + 1)
        parts = next_line("latch").split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise AigerError("non-numeric token in latch line", line=lineno)
        if len(vals) not in (1, 2):
            raise AigerError("latch line must carry next-state and optional reset", line=lineno)
        nxt = vals[0]
        init: int | None = 0
        if len(vals) == 2:
            if vals[1] == lit:
                init = None
            elif vals[1] in (0, 1):
                init = vals[1]
            else:
                raise AigerError(f"latch reset value {vals[1]} invalid", line=lineno)
        latches.append(Latch(lit, nxt, init))

    outputs = tuple(int(next_line("output")) for _ in range(no))
    bads = tuple(int(next_line("bad")) for _ in range(nb))

    ands = []
    for k in range(na):
        lhs = 2 * (ni + nl + k + 1)
        delta0, pos = _read_varint(data, pos)
        delta1, pos = _read_varint(data, pos)
        if delta0 == 0:
            raise AigerError(
                "non-monotone binary AND encoding (zero first delta)", offset=pos
            )
        rhs0 = lhs - delta0
        rhs1 = rhs0 - delta1
        if rhs1 < 0:
            raise AigerError("binary AND delta underflows literal 0", offset=pos)
        ands.append((lhs, rhs0, rhs1))

    symbols, comments = _parse_trailer(data[pos:].split(b"\n"), lineno) if pos < len(data) else ((), ())
    return Aig(
        max_var=m,
        inputs=inputs,
        latches=tuple(latches),
        outputs=outputs,
        bads=bads,
        ands=tuple(ands),
        symbols=symbols,
        comments=comments,
    )


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    """AIGER varint: little-endian 7-bit groups, high bit marks continuation."""
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise AigerError("truncated binary AND section", offset=pos)
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7


def _write_varint(value: int) -> bytes:
    out = bytearray()
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)
    return bytes(out)


# ---------------------------------------------------------------------------
# writing

def _trailer_bytes(aig: Aig) -> bytes:
    out = []
    for kind, posn, name in aig.symbols:
        out.append(f"{kind}{posn} {name}".encode())
    if aig.comments:
        out.append(b"c")
        out.extend(c.encode() for c in aig.comments)
    return b"\n".join(out) + b"\n" if out else b""


def write_ascii(aig: Aig) -> bytes:
    head = (
        f"aag {aig.max_var} {len(aig.inputs)} {len(aig.latches)} "
        f"{len(aig.outputs)} {len(aig.ands)}"
    )
    if aig.bads:
        head += f" {len(aig.bads)}"
    lines = [head]
    lines += [str(lit) for lit in aig.inputs]
    for latch in aig.latches:
        if latch.init == 0:
            lines.append(f"{latch.lit} {latch.next}")
        elif latch.init == 1:
            lines.append(f"{latch.lit} {latch.next} 1")
        else:
            lines.append(f"{latch.lit} {latch.next} {latch.lit}")
    lines += [str(lit) for lit in aig.outputs]
    lines += [str(lit) for lit in aig.bads]
    lines += [f"{a} {b} {c}" for a, b, c in aig.ands]
    return ("\n".join(lines) + "\n").encode() + _trailer_bytes(aig)


def is_canonical_binary_order(aig: Aig) -> bool:
    """True if variables are numbered inputs, latches, then ANDs consecutively."""
    ni, nl = len(aig.inputs), len(aig.latches)
    if aig.inputs != tuple(2 * (i + 1) for i in range(ni)):
        return False
    if tuple(l.lit for l in aig.latches) != tuple(2 * (ni + k + 1) for k in range(nl)):
        return False
    if tuple(a[0] for a in aig.ands) != tuple(2 * (ni + nl + k + 1) for k in range(len(aig.ands))):
        return False
    return True


def write_binary(aig: Aig) -> bytes:
    if not is_canonical_binary_order(aig):
        raise AigerError(
            "binary form requires consecutive input/latch/AND variable numbering"
        )
    head = (
        f"aig {aig.max_var} {len(aig.inputs)} {len(aig.latches)} "
        f"{len(aig.outputs)} {len(aig.ands)}"
    )
    if aig.bads:
        head += f" {len(aig.bads)}"
    out = bytearray((head + "\n").encode())
    for latch in aig.latches:
        if latch.init == 0:
            out += f"{latch.next}\n".encode()
        elif latch.init == 1:
            out += f"{latch.next} 1\n".encode()
        else:
            out += f"{latch.next} {latch.lit}\n".encode()
    for lit in aig.outputs:
        out += f"{lit}\n".encode()
    for lit in aig.bads:
        out += f"{lit}\n".encode()
    for lhs, rhs0, rhs1 in aig.ands:
        if rhs0 < rhs1:
            rhs0, rhs1 = rhs1, rhs0
        out += _write_varint(lhs - rhs0)
        out += _write_varint(rhs0 - rhs1)
    return bytes(out) + _trailer_bytes(aig)


# ---------------------------------------------------------------------------
# transition-system view

@dataclass(frozen=True)
class TransitionSystem:
    """Safety-checking view of one AIG property.

    State variables are the latch AIG variable ids; ``property`` is the
    negation of the selected bad literal, so the system is safe iff no
    reachable state/input valuation satisfies ``bad``.
    """

    aig: Aig
    latch_vars: tuple[int, ...]
    init_cube: Cube                  # over latch vars; uninitialized latches absent
    next_fn: Mapping[int, int]       # latch var -> driving AIG literal
    bad: int                         # AIG literal
    property: int                    # AIG literal, == bad ^ 1

    def init_value(self, var: int) -> int | None:
        for lit in self.init_cube:
            if abs(lit) == var:
                return 1 if lit > 0 else 0
        return None

    def latch_ordinal(self, var: int) -> int:
        return self.latch_vars.index(var)


def to_transition_system(aig: Aig, bad_index: int = 0) -> TransitionSystem:
    """Select one safety property (bad literal if any, else output literal)."""
    candidates = aig.outputs_or_bads
    if not candidates:
        raise AigerError("circuit carries no output or bad literal to check")
    if not 0 <= bad_index < len(candidates):
        raise AigerError(
            f"bad index {bad_index} out of range (have {len(candidates)})"
        )
    bad = candidates[bad_index]
    init_lits = []
    next_fn: dict[int, int] = {}
    for latch in aig.latches:
        var = latch.lit >> 1
        next_fn[var] = latch.next
        if latch.init == 0:
            init_lits.append(-var)
        elif latch.init == 1:
            init_lits.append(var)
    return TransitionSystem(
        aig=aig,
        latch_vars=aig.latch_vars(),
        init_cube=Cube.of(init_lits),
        next_fn=dict(next_fn),
        bad=bad,
        property=bad ^ 1,
    )


# ---------------------------------------------------------------------------
# scalar simulation (reference semantics; also used for witness replay)

def evaluate(aig: Aig, values: dict[int, bool]) -> dict[int, bool]:
    """Evaluate every AND given input/latch variable values.

    ``values`` maps every input and latch variable to a bool; the result
    extends it with constant and AND-gate variables.  AND definitions are
    evaluable in ascending variable order by the structural invariant.
    """
    out = {0: False}
    out.update(values)

    def lit_val(lit: int) -> bool:
        v = out[lit >> 1]
        return (not v) if lit & 1 else v

    for lhs, rhs0, rhs1 in sorted(aig.ands):
        out[lhs >> 1] = lit_val(rhs0) and lit_val(rhs1)
    return out


def literal_value(values: dict[int, bool], lit: int) -> bool:
    v = values[lit >> 1]
    return (not v) if lit & 1 else v


def step(
    ts: TransitionSystem, state: dict[int, bool], inputs: dict[int, bool]
) -> tuple[dict[int, bool], bool]:
    """One transition: returns (next latch state, bad holds now)."""
    values = dict(state)
    values.update(inputs)
    values = evaluate(ts.aig, values)
    bad_now = literal_value(values, ts.bad)
    nxt = {var: literal_value(values, ts.next_fn[var]) for var in ts.latch_vars}
    return nxt, bad_now
