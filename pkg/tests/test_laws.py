from __future__ import annotations

import pytest

from errors import ArityError, LawNormalizationError, LawSyntaxError
from groups import LatticeVec, build_group, free_reduce, standard_generators
from laws import (
    Comm,
    Conj,
    Inv,
    Mul,
    Pow,
    Var,
    degrees,
    derive,
    evaluate,
    evaluate_word,
    flatten,
    format_law,
    is_balanced,
    metabelian_law,
    nilpotent_law,
    parse_law,
    power_law,
    rename,
    self_commutator,
    simple_products,
    variable_count,
)
from walks import derive_stream, walk_endpoint


def _random_expr(stream, depth):
    if depth == 0 or stream.random() < 0.25:
        return Var(int(stream.integers(1, 4)))
    kind = int(stream.integers(0, 5))
    left = _random_expr(stream, depth - 1)
    if kind == 0:
        return Inv(left)
    if kind == 1:
        return Pow(left, int(stream.choice([-2, -1, 2, 3])))
    right = _random_expr(stream, depth - 1)
    return (Mul, Comm, Conj)[kind - 2](left, right)


def _random_letters(stream, length):
    gens = stream.integers(1, 4, size=length)
    signs = stream.choice([-1, 1], size=length)
    return [(int(g), int(s)) for g, s in zip(gens, signs)]


def test_aliases_name_the_first_four_variables():
    assert parse_law("[x,y]") == Comm(Var(1), Var(2))
    assert parse_law("[a,b]") == parse_law("[x1,x2]")
    assert parse_law("[[z,w],x,y]") == parse_law("[[[x3,x4],x1],x2]")


def test_long_commutators_are_left_normed():
    assert parse_law("[x,y,z]") == Comm(Comm(Var(1), Var(2)), Var(3))


def test_powers_inverses_and_conjugates():
    assert parse_law("x^-1 y") == parse_law("x1^-1*x2")
    assert parse_law("x^3") == Pow(Var(1), 3)
    assert parse_law("x^-1") == Inv(Var(1))
    assert parse_law("conj(x,y)") == Conj(Var(1), Var(2))


@pytest.mark.parametrize(
    "text", ["[[x1,x2],[x3,x4]]", "x1^6", "conj(x1*x2^-1,x2)^3", "x1*(x2*x3)", "(x1*x2)^-1"]
)
def test_format_is_canonical(text):
    assert format_law(parse_law(text)) == text


@pytest.mark.parametrize(
    "text, position",
    [("[x,y", 4), ("x^y", 2), ("x + y", 2), ("[x]", 0), ("x2 3", 3)],
)
def test_syntax_errors_carry_a_position(text, position):
    with pytest.raises(LawSyntaxError) as info:
        parse_law(text, contiguous=False)
    assert info.value.position == position


def test_trivial_word_is_not_a_law():
    with pytest.raises(LawSyntaxError):
        parse_law("1")


def test_variables_must_be_contiguous():
    with pytest.raises(LawNormalizationError):
        parse_law("[x1,x3]")
    assert variable_count(parse_law("[x1,x3]", contiguous=False)) == 3


def test_flatten_reduces_freely():
    assert len(flatten(metabelian_law())) == 16
    assert flatten(parse_law("x y y^-1 x^-1 x")).letters == ((1, 1),)
    with pytest.raises(LawNormalizationError):
        flatten(parse_law("[x,x]"))
    assert flatten(parse_law("[x,x]"), allow_empty=True).letters == ()


def test_degrees_and_balance():
    assert degrees(parse_law("x^2 y^-1")) == (2, -1)
    assert is_balanced(metabelian_law())
    assert not is_balanced(power_law(2))


def test_law_families():
    assert format_law(nilpotent_law(2)) == "[[x1,x2],x3]"
    assert format_law(self_commutator(power_law(2))) == "[x1^2,x2^2]"
    assert format_law(derive(parse_law("x^2"))) == "[x1^2,x2]"
    assert rename(Var(1), 3) == Var(4)
    with pytest.raises(LawNormalizationError):
        nilpotent_law(0)


def test_simple_products_over_four_letters():
    products = simple_products()
    assert len(products) == 632
    words = {flatten(p).letters for p in products}
    assert len(words) == 632
    assert all(len({gen for gen, _ in w}) == len(w) for w in words)


def test_evaluate_on_symmetric_group():
    G = build_group("sym(3)")
    a, b = G.transposition(0, 1), G.transposition(1, 2)
    expr = parse_law("[x,y]")
    value = evaluate(expr, G, [a, b])
    assert value != G.identity
    assert evaluate(parse_law("[x,y]^3"), G, [a, b]) == G.identity
    assert evaluate_word(G, flatten(expr), [a, b]) == value


def test_evaluate_needs_enough_elements():
    G = build_group("lattice(1)")
    with pytest.raises(ArityError):
        evaluate(metabelian_law(), G, [LatticeVec((1,))] * 3)


def test_abelian_groups_satisfy_balanced_laws():
    G = build_group("lattice(2)")
    elements = [LatticeVec((1, 2)), LatticeVec((-3, 0)), LatticeVec((5, 5)), LatticeVec((0, 1))]
    assert evaluate(metabelian_law(), G, elements) == G.identity
    assert evaluate(power_law(2), G, elements) == LatticeVec((2, 4))


@pytest.mark.parametrize(
    "group", ["sym(4)", "heisenberg(2)", "wreath(cyclic(2),lattice(1))"]
)
def test_evaluate_agrees_with_the_flattened_word(group):
    G = build_group(group)
    S = standard_generators(G)
    stream = derive_stream(8, 1)
    for t in range(40):
        expr = _random_expr(stream, 4)
        elements = [walk_endpoint(G, S, 6, derive_stream(8, 2, t, i)) for i in range(3)]
        word = flatten(expr, allow_empty=True)
        assert evaluate(expr, G, elements) == evaluate_word(G, word, elements)


def test_free_reduction_is_confluent():
    stream = derive_stream(3, 0)
    for _ in range(200):
        u = _random_letters(stream, int(stream.integers(0, 12)))
        v = _random_letters(stream, int(stream.integers(0, 12)))
        reduced = free_reduce(u + v)
        assert free_reduce(list(free_reduce(u)) + list(free_reduce(v))) == reduced
        assert free_reduce(reduced) == reduced
        assert all(a != (b[0], -b[1]) for a, b in zip(reduced, reduced[1:]))
