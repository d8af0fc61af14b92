from __future__ import annotations

import pytest
from sympy import Matrix, eye

from errors import ConstructionError, ElementTypeError, LawSyntaxError
from groups import (
    CyclicResidue,
    FreeWord,
    HeisenbergElem,
    LatticeVec,
    Perm,
    QuaternionElem,
    SemidirectElem,
    WreathElem,
    build_group,
    canonical_bytes,
    commutator,
    companion_matrix,
    cyclotomic_action_matrix,
    format_group,
    fourteen_wreath_generators,
    generating_power,
    order_divides,
    parse_group,
    power,
    product_generators,
    shifted_wreath_generators,
    standard_generators,
    switch_move_switch_generators,
    unit_vector,
)
from walks import derive_stream, walk_endpoint

CONSTRUCTIONS = [
    "free(2)",
    "lattice(3)",
    "cyclic(5)",
    "semidirect(4)",
    "cyclotomic(5)",
    "dihedral-infinite",
    "heisenberg(3)",
    "heisenberg-semidirect(2)",
    "wreath(cyclic(2),lattice(1))",
    "wreath(free(2),lattice(2))",
    "product(sym(3),semidirect(3))",
    "dihedral(8)",
    "sym(4)",
    "extraspecial3",
    "quaternion",
    "quotient(heisenberg(2),5)",
]


def _random_elements(G, count, seed, steps=12):
    S = standard_generators(G)
    return [walk_endpoint(G, S, steps, derive_stream(seed, i)) for i in range(count)]


@pytest.mark.parametrize(
    "text",
    [
        "wreath(free(2),lattice(5))",
        "quotient(semidirect(3),9)",
        "semidirect([[0,-1],[1,-1]],3)",
        "product(wreath(cyclic(2),lattice(1)),sym(4))",
    ],
)
def test_descriptor_text_is_canonical(text):
    assert format_group(parse_group(text)) == text
    assert str(build_group(text).descriptor) == text


def test_descriptor_whitespace_is_ignored():
    assert parse_group(" wreath( cyclic(2) , lattice(1) ) ") == parse_group(
        "wreath(cyclic(2),lattice(1))"
    )


def test_bad_descriptor_reports_position():
    with pytest.raises(LawSyntaxError) as info:
        parse_group("wreath(free(2),")
    assert info.value.position == len("wreath(free(2),")


def test_unknown_kind_is_rejected():
    with pytest.raises(ConstructionError):
        build_group("hyperbolic(3)")


def test_wreath_over_wreath_is_rejected():
    with pytest.raises(ConstructionError):
        build_group("wreath(cyclic(2),wreath(cyclic(2),lattice(1)))")


@pytest.mark.parametrize("m", [2, 3, 4, 6, 7])
def test_companion_matrix_has_order_m(m):
    A = Matrix(companion_matrix(m))
    size = m - 1
    assert A**m == eye(size)
    assert (A - eye(size)).det() != 0


@pytest.mark.parametrize("m, size", [(5, 4), (6, 2), (8, 4), (12, 4)])
def test_cyclotomic_matrix_has_totient_size(m, size):
    A = Matrix(cyclotomic_action_matrix(m))
    assert A.shape == (size, size)
    assert A**m == eye(size)
    assert all(A**j != eye(size) for j in range(1, m))


def test_semidirect_multiplication_and_inverse():
    G = build_group("semidirect(3)")
    a = SemidirectElem((1, 2), 1)
    b = SemidirectElem((-3, 0), 2)
    c = SemidirectElem((0, 5), 1)
    assert G.multiply(G.multiply(a, b), c) == G.multiply(a, G.multiply(b, c))
    assert G.multiply(a, G.inverse(a)) == G.identity
    # (v, 1)^3 = ((I + A + A^2) v, 0) = 0
    assert power(G, a, 3) == G.identity


def test_infinite_dihedral_reflections_are_involutions():
    G = build_group("dihedral-infinite")
    reflection = SemidirectElem((7,), 1)
    rotation = SemidirectElem((3,), 0)
    assert power(G, reflection, 2) == G.identity
    assert power(G, rotation, 2) == SemidirectElem((6,), 0)


def test_heisenberg_commutator_is_central():
    G = build_group("heisenberg(2)")
    x = HeisenbergElem((1,), 0, (0,))
    y = HeisenbergElem((0,), 0, (1,))
    z = commutator(G, x, y)
    assert z == HeisenbergElem((0,), 1, (0,))
    assert G.multiply(z, x) == G.multiply(x, z)


def test_heisenberg_semidirect_squares_are_central():
    G = build_group("heisenberg-semidirect(2)")
    x = SemidirectElem(HeisenbergElem((2,), 5, (-1,)), 1)
    y = SemidirectElem(HeisenbergElem((3,), 0, (4,)), 0)
    square = power(G, x, 2)
    assert square.k == 0
    assert commutator(G, square, y) == G.identity
    assert G.multiply(x, G.inverse(x)) == G.identity


def test_lamplighter_conjugation_moves_the_lamp():
    G = build_group("wreath(cyclic(2),lattice(1))")
    t = G.move(LatticeVec((1,)))
    a = G.lamp_at(CyclicResidue(1, 2))
    moved = G.product((t, a, G.inverse(t)))
    assert moved == WreathElem({LatticeVec((1,)): CyclicResidue(1, 2)}, LatticeVec((0,)))
    assert G.multiply(a, a) == G.identity
    assert G.multiply(a, a).lamps == {}


def test_wreath_equality_ignores_insertion_order():
    G = build_group("wreath(cyclic(3),lattice(1))")
    one, two = LatticeVec((1,)), LatticeVec((2,))
    first = WreathElem({one: CyclicResidue(1, 3), two: CyclicResidue(2, 3)}, one)
    second = WreathElem({two: CyclicResidue(2, 3), one: CyclicResidue(1, 3)}, one)
    assert first == second
    assert hash(first) == hash(second)
    assert canonical_bytes(G, first) == canonical_bytes(G, second)


def test_quaternion_relations():
    G = build_group("quaternion")
    i, j = QuaternionElem(1, "i"), QuaternionElem(1, "j")
    assert G.multiply(i, j) == QuaternionElem(1, "k")
    assert G.multiply(j, i) == QuaternionElem(-1, "k")
    assert power(G, i, 2) == QuaternionElem(-1, "1")
    assert power(G, i, 4) == G.identity


def test_symmetric_composition():
    G = build_group("sym(3)")
    a, b = G.transposition(0, 1), G.transposition(1, 2)
    assert G.multiply(a, b) == Perm((1, 2, 0))
    assert power(G, G.multiply(a, b), 3) == G.identity


def test_elements_of_other_groups_are_rejected():
    G = build_group("lattice(2)")
    with pytest.raises(ElementTypeError):
        G.multiply(LatticeVec((1, 0)), CyclicResidue(1, 2))
    with pytest.raises(ElementTypeError):
        G.multiply(LatticeVec((1, 0)), LatticeVec((1, 0, 0)))


def test_nested_quotients_need_divisibility():
    G = build_group("quotient(quotient(lattice(2),4),2)")
    assert G.order == 4
    with pytest.raises(ConstructionError):
        build_group("quotient(quotient(lattice(2),4),3)")


def test_orders_of_finite_constructions():
    assert build_group("dihedral(4)").order == 8
    assert build_group("extraspecial3").order == 27
    assert build_group("quotient(heisenberg(2),3)").order == 27
    assert build_group("product(cyclic(2),sym(4))").order == 48
    assert build_group("lattice(2)").order is None


def test_standard_generators_are_symmetric_and_lazy():
    G = build_group("dihedral-infinite")
    S = standard_generators(G)
    assert S.contains_identity
    assert set(S.atoms) == {
        SemidirectElem((0,), 0),
        SemidirectElem((1,), 0),
        SemidirectElem((-1,), 0),
        SemidirectElem((0,), 1),
    }
    assert len(standard_generators(build_group("lattice(3)"), lazy=False)) == 6


def test_shifted_wreath_generators():
    G = build_group("wreath(free(2),lattice(5))")
    S = shifted_wreath_generators(G, 50)
    assert len(S) == 160
    assert not S.contains_identity
    assert len(fourteen_wreath_generators(G, 50)) == 14
    far = unit_vector(5, 0, 50)
    assert any(far in atom.lamps for atom in S.atoms)


def test_shifted_generators_need_the_five_dimensional_lattice():
    with pytest.raises(ConstructionError):
        shifted_wreath_generators(build_group("wreath(free(2),lattice(4))"), 5)
    with pytest.raises(ConstructionError):
        shifted_wreath_generators(build_group("wreath(free(3),lattice(5))"), 5)


def test_switch_move_switch_generators():
    G = build_group("wreath(cyclic(2),lattice(1))")
    S = switch_move_switch_generators(G, lazy=True)
    assert len(S) == 9
    assert G.identity in S.atoms
    assert all(G.inverse(a) in S.atoms for a in S.atoms)


def test_generating_power_of_lazy_lattice():
    G = build_group("lattice(1)")
    S2 = generating_power(G, standard_generators(G), 2)
    assert set(S2.atoms) == {LatticeVec((k,)) for k in range(-2, 3)}
    assert S2.contains_identity


def test_product_generators_embed_each_factor():
    G = build_group("product(cyclic(3),sym(3))")
    T = product_generators(
        G,
        [standard_generators(G.factors[0], lazy=False), standard_generators(G.factors[1], lazy=False)],
    )
    assert len(T) == 2 + 3
    assert all(
        G.factors[0].is_identity(a.components[0]) or G.factors[1].is_identity(a.components[1])
        for a in T.atoms
    )


def test_canonical_bytes_are_versioned():
    G = build_group("quotient(lattice(2),5)")
    assert canonical_bytes(G, LatticeVec((7, -1))) == canonical_bytes(G, LatticeVec((2, 4)))
    assert b'"format":1' in canonical_bytes(G, G.identity)


@pytest.mark.parametrize("text", CONSTRUCTIONS)
def test_group_axioms_on_random_elements(text):
    G = build_group(text)
    elements = _random_elements(G, 9, seed=17)
    for a, b, c in zip(elements[0::3], elements[1::3], elements[2::3]):
        left = G.canonicalize(G.multiply(G.multiply(a, b), c))
        right = G.canonicalize(G.multiply(a, G.multiply(b, c)))
        assert left == right
        assert G.is_identity(G.multiply(a, G.inverse(a)))
        assert G.is_identity(G.multiply(G.inverse(a), a))
        assert G.canonicalize(G.multiply(a, G.identity)) == G.canonicalize(a)
        assert G.canonicalize(G.canonicalize(a)) == G.canonicalize(a)


@pytest.mark.parametrize(
    "text", ["wreath(cyclic(3),lattice(1))", "wreath(free(2),lattice(2))"]
)
def test_wreath_product_support_stays_in_the_shifted_union(text):
    G = build_group(text)
    elements = _random_elements(G, 20, seed=5, steps=8)
    for a, b in zip(elements[0::2], elements[1::2]):
        shifted = {G.base.multiply(a.pos, key) for key in b.support()}
        assert G.multiply(a, b).support() <= a.support() | shifted


def test_lamps_that_commute_pointwise_give_a_trivial_commutator():
    G = build_group("wreath(free(2),lattice(5))")
    a, b = FreeWord(((1, 1),)), FreeWord(((2, 1),))
    here, there, far = unit_vector(5, 0, 0), unit_vector(5, 0, 1), unit_vector(5, 0, 3)
    x = G.multiply(G.lamp_at(a, here), G.lamp_at(b, there))
    y = G.multiply(G.lamp_at(G.multiply(a, a), here), G.lamp_at(a, far))
    assert G.is_identity(commutator(G, x, y))
    clash = G.lamp_at(b, here)
    assert not G.is_identity(commutator(G, x, clash))


def test_order_divides():
    G = build_group("semidirect(6)")
    rotation = SemidirectElem((0, 0, 0, 0, 0), 1)
    translation = SemidirectElem((1, 0, 0, 0, 0), 0)
    assert order_divides(G, rotation, 6)
    assert not order_divides(G, rotation, 3)
    assert not order_divides(G, translation, 6)
    assert order_divides(G, G.identity, 1)
