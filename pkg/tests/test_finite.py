from __future__ import annotations

from fractions import Fraction

import pytest

import walks
from errors import BudgetExceededError, ConfigError, ConstructionError
from finite import (
    all_elements_generators,
    commuting_probability,
    dihedral_family,
    element_orders,
    enumerate_group,
    exact_law_probability,
    exponent,
    parse_family,
    quotient_family_infimum,
)
from groups import format_group
from laws import metabelian_law, nilpotent_law, parse_law, power_law


def test_identity_comes_first():
    table = enumerate_group("sym(3)")
    assert table.order == 6
    assert table.elements[0] == table.group.identity
    assert list(table.table[0]) == list(range(6))
    assert all(table.table[i, table.inverses[i]] == 0 for i in range(6))


@pytest.mark.parametrize(
    "group, expected",
    [("sym(3)", Fraction(1, 2)), ("quaternion", Fraction(5, 8)), ("cyclic(5)", Fraction(1))],
)
def test_commuting_probability(group, expected):
    assert commuting_probability(enumerate_group(group)) == expected


def test_involutions_in_the_square():
    table = enumerate_group("dihedral(4)")
    assert exact_law_probability(table, power_law(2)) == Fraction(3, 4)


def test_exponent_three_group_is_nilpotent_of_class_two():
    table = enumerate_group("extraspecial3")
    assert exponent(table) == 3
    assert exact_law_probability(table, nilpotent_law(2), threads=1) == 1
    assert exact_law_probability(table, parse_law("[x,y]^3"), threads=1) == 1


def test_worker_count_does_not_change_exact_counts():
    table = enumerate_group("sym(4)")
    law = parse_law("[x^2,y]")
    assert exact_law_probability(table, law, threads=1) == exact_law_probability(
        table, law, threads=3
    )


def test_element_orders_of_sym3():
    assert element_orders(enumerate_group("sym(3)")) == {1: 1, 2: 3, 3: 2}


def test_all_elements_generators():
    table = enumerate_group("quaternion")
    S = all_elements_generators(table)
    assert len(S) == 8
    assert S.contains_identity


def test_odd_dihedral_family_approaches_one_half():
    points = quotient_family_infimum(dihedral_family(range(3, 10, 2)), power_law(2))
    for point, m in zip(points, (3, 5, 7, 9)):
        assert point.order == 2 * m
        assert point.probability == Fraction(m + 1, 2 * m)
    assert points[-1].running_inf == Fraction(5, 9)
    assert points[-1].to_record()["denominator"] == 9


def test_family_limit():
    points = quotient_family_infimum(parse_family("dihedral:3..49:2"), power_law(2), limit=2)
    assert [p.group for p in points] == ["dihedral(3)", "dihedral(5)"]


@pytest.mark.parametrize(
    "text, names",
    [
        ("quotient:lattice(1):2..4", ["quotient(lattice(1),2)", "quotient(lattice(1),3)", "quotient(lattice(1),4)"]),
        ("quotient:lattice(1):2..10:4", ["quotient(lattice(1),2)", "quotient(lattice(1),6)", "quotient(lattice(1),10)"]),
        ("dihedral:3..7:2", ["dihedral(3)", "dihedral(5)", "dihedral(7)"]),
    ],
)
def test_parse_family(text, names):
    assert [format_group(d) for d in parse_family(text)] == names


@pytest.mark.parametrize("text", ["cyclic:2..4", "dihedral:3-9", "dihedral:a..b"])
def test_bad_families(text):
    with pytest.raises(ConfigError):
        list(parse_family(text))


def test_cyclic_quotients_of_the_line():
    points = quotient_family_infimum(parse_family("quotient:lattice(1):2..4"), power_law(2))
    assert [p.probability for p in points] == [1, Fraction(1, 3), Fraction(1, 2)]


def test_infinite_groups_cannot_be_enumerated():
    with pytest.raises(ConstructionError):
        enumerate_group("lattice(2)")


def test_budgets():
    with pytest.raises(BudgetExceededError):
        enumerate_group("sym(4)", budget=10)
    table = enumerate_group("sym(4)")
    with pytest.raises(BudgetExceededError):
        exact_law_probability(table, metabelian_law(), budget=1000)


@pytest.mark.parametrize(
    "group",
    [
        "sym(3)",
        "sym(4)",
        "dihedral(4)",
        "dihedral(5)",
        "quaternion",
        "extraspecial3",
        "quotient(heisenberg(2),3)",
        "product(sym(3),cyclic(2))",
    ],
)
def test_nonabelian_groups_commute_at_most_five_eighths_of_the_time(group):
    p = commuting_probability(enumerate_group(group))
    assert p < 1
    assert p <= Fraction(5, 8)


def test_probabilities_multiply_over_products():
    product = enumerate_group("product(sym(3),quaternion)")
    for law in (parse_law("[x,y]"), power_law(2), parse_law("[x^2,y]")):
        expected = exact_law_probability(
            enumerate_group("sym(3)"), law
        ) * exact_law_probability(enumerate_group("quaternion"), law)
        assert exact_law_probability(product, law, threads=1) == expected
    assert commuting_probability(product) == Fraction(1, 2) * Fraction(5, 8)


@pytest.mark.parametrize(
    "cover, quotient",
    [
        ("quotient(semidirect(3),9)", "quotient(semidirect(3),3)"),
        ("dihedral(12)", "dihedral(6)"),
        ("dihedral(6)", "dihedral(3)"),
        ("quotient(lattice(2),8)", "quotient(lattice(2),4)"),
    ],
)
def test_quotients_never_lower_the_probability(cover, quotient):
    big, small = enumerate_group(cover), enumerate_group(quotient)
    for law in (parse_law("[x,y]"), power_law(2), power_law(3), parse_law("[x^2,y]")):
        assert exact_law_probability(small, law, threads=1) >= exact_law_probability(
            big, law, threads=1
        )


def test_small_tables_are_counted_without_worker_processes(monkeypatch):
    def no_pool(*args, **kwargs):
        raise AssertionError("a worker pool was started")

    monkeypatch.setattr(walks, "Pool", no_pool)
    table = enumerate_group("sym(4)")
    law = parse_law("[x^2,y]")
    assert exact_law_probability(table, law, threads=4) == Fraction(13, 24)
