"""AIGER front end: parsing, writing, validation, and reference simulation."""

import pytest
from helpers import AigBuilder, random_aig, ts_of

from pdrkit.aiger import (
    Aig,
    AigerError,
    Latch,
    evaluate,
    literal_value,
    parse,
    step,
    to_transition_system,
    write_ascii,
    write_binary,
)

TOGGLE = b"aag 1 0 1 1 0\n2 3\n2\n"
AND_GATE = b"aag 3 1 1 1 1\n2\n4 6 0\n6\n6 2 4\n"


def test_parse_toggle():
    aig = parse(TOGGLE)
    assert aig.max_var == 1
    assert aig.inputs == ()
    assert aig.latches == (Latch(lit=2, next=3, init=0),)
    assert aig.outputs == (2,)
    assert aig.ands == ()


def test_parse_and_gate():
    aig = parse(AND_GATE)
    assert aig.inputs == (2,)
    assert aig.latches == (Latch(lit=4, next=6, init=0),)
    assert aig.ands == ((6, 2, 4),)


def test_default_latch_init_is_zero():
    aig = parse(b"aag 1 0 1 1 0\n2 2\n2\n")
    assert aig.latches[0].init == 0


def test_explicit_latch_init_values():
    # third field: 0, 1, or the latch's own literal for "uninitialized"
    aig = parse(b"aag 1 0 1 1 0\n2 2 1\n2\n")
    assert aig.latches[0].init == 1
    aig = parse(b"aag 1 0 1 1 0\n2 2 2\n2\n")
    assert aig.latches[0].init is None


def test_parse_bad_literal_section():
    aig = parse(b"aag 1 0 1 0 0 1\n2 3\n2\n")
    assert aig.outputs == ()
    assert aig.bads == (2,)
    assert aig.outputs_or_bads == (2,)


def test_bads_win_over_outputs_for_property():
    aig = parse(b"aag 1 0 1 1 0 1\n2 3\n3\n2\n")
    assert aig.outputs == (3,)
    assert aig.bads == (2,)
    assert aig.outputs_or_bads == (2,)


def test_symbols_and_comments_round_trip():
    src = b"aag 1 0 1 1 0\n2 3\n2\nl0 counter\no0 out\nc\nhello\nworld\n"
    aig = parse(src)
    assert ("l", 0, "counter") in aig.symbols
    assert aig.comments == ("hello", "world")
    again = parse(write_ascii(aig))
    assert again.symbols == aig.symbols
    assert again.comments == aig.comments


@pytest.mark.parametrize(
    "data,fragment",
    [
        (b"", "aiger file"),
        (b"xyz 1 0 0 0 0\n", "header"),
        (b"aag 1 0 0 0\n", "header"),
        (b"aag 0 0 0 0 1\n2 0 0\n", "maximum variable"),  # M < I+L+A
        (b"aag 1 0 0 0 1\n2 3 3\n", "strictly below"),  # self-referencing AND
        (b"aag 2 1 0 0 1\n2\n4 2 5\n", "strictly below"),  # forward operand
        (b"aag 2 1 1 0 0\n2\n2 2\n", "defined twice"),  # input/latch share a var
        (b"aag 1 0 0 1 0\n4\n", "output literal"),
        (b"aag 1 0 1 1 0\n2 9\n2\n", "next-state literal"),
    ],
)
def test_parse_rejects_malformed(data, fragment):
    with pytest.raises(AigerError) as err:
        parse(data)
    assert fragment in str(err.value).lower()


def test_and_must_be_topologically_ordered():
    # 6 = 8 & 2 forward-references 8 = 2 & 4
    with pytest.raises(AigerError):
        parse(b"aag 4 2 0 0 2\n2\n4\n6 8 2\n8 2 4\n")


def test_ascii_round_trip_random():
    for seed in range(25):
        aig = random_aig(seed, n_inputs=3, n_latches=4, n_ands=9)
        assert parse(write_ascii(aig)) == aig


def _normalize_and_order(aig: Aig) -> Aig:
    """Binary delta encoding stores rhs0 >= rhs1; conjunction is symmetric."""
    ands = tuple((lhs, max(a, b), min(a, b)) for lhs, a, b in aig.ands)
    return Aig(
        max_var=aig.max_var,
        inputs=aig.inputs,
        latches=aig.latches,
        outputs=aig.outputs,
        bads=aig.bads,
        ands=ands,
        symbols=aig.symbols,
        comments=aig.comments,
    )


def test_binary_round_trip_random():
    for seed in range(25):
        aig = random_aig(seed, n_inputs=3, n_latches=4, n_ands=9)
        blob = write_binary(aig)
        assert blob.startswith(b"aig ")
        assert _normalize_and_order(parse(blob)) == _normalize_and_order(aig)


def test_binary_matches_ascii_semantics():
    aig = random_aig(3, n_inputs=2, n_latches=3, n_ands=6)
    a = parse(write_ascii(aig))
    b = parse(write_binary(aig))
    assert _normalize_and_order(a) == _normalize_and_order(b)


def test_evaluate_and_gate():
    aig = parse(AND_GATE)
    for x in (False, True):
        for l in (False, True):
            values = evaluate(aig, {1: x, 2: l})
            assert values[3] == (x and l)


def test_literal_value_inversion():
    values = {4: True}
    assert literal_value(values, 8) is True
    assert literal_value(values, 9) is False


def test_step_toggle():
    ts = to_transition_system(parse(TOGGLE))
    state = {1: False}
    nxt, bad = step(ts, state, {})
    assert bad is False  # output literal 2: latch currently 0
    assert nxt == {1: True}
    nxt2, bad2 = step(ts, nxt, {})
    assert bad2 is True
    assert nxt2 == {1: False}


def test_transition_system_fields():
    b = AigBuilder()
    x = b.input()
    l1 = b.latch(init=0)
    l2 = b.latch(init=None)
    b.set_next(l1, b.AND(x, l2))
    b.set_next(l2, b.NOT(l1))
    b.bad(l1)
    ts = ts_of(b.build())
    assert ts.latch_vars == (l1 >> 1, l2 >> 1)
    assert ts.init_cube.lits == (-(l1 >> 1),)  # uninitialized latch absent
    assert ts.init_value(l1 >> 1) == 0
    assert ts.init_value(l2 >> 1) is None
    assert ts.bad == l1
    assert ts.property == l1 ^ 1


def test_to_transition_system_requires_property():
    aig = Aig(max_var=1, inputs=(2,), latches=(), outputs=(), bads=(), ands=())
    with pytest.raises(AigerError):
        to_transition_system(aig)


def test_to_transition_system_bad_index_range():
    aig = parse(TOGGLE)
    with pytest.raises(AigerError):
        to_transition_system(aig, bad_index=1)
