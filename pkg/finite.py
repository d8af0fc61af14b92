"""Exact law probabilities on finite groups via multiplication tables."""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Iterator

import numpy as np
from loguru import logger

import config
from errors import BudgetExceededError, ConfigError, ConstructionError
from groups import (
    GeneratingSet,
    Group,
    GroupDescriptor,
    build_group,
    format_group,
    parse_group,
    standard_generators,
)
from laws import Comm, LawExpr, Var, flatten
from walks import run_trials

COMMUTATOR_WORD = ((1, 1), (2, 1), (1, -1), (2, -1))
# tuple counts up to this are enumerated in-process
INLINE_TUPLES = 10**5


@dataclass
class FiniteGroupTable:
    """A finite group as an indexed element list and a Cayley table.

    Args:
        group: The group handle the table was built from.
        elements: Canonical elements; index 0 is the identity.
        index: Element to index.
        table: table[i, j] is the index of elements[i] * elements[j].
        inverses: inverses[i] is the index of elements[i]^-1.
    """

    group: Group
    elements: list[Any]
    index: dict[Any, int]
    table: np.ndarray
    inverses: np.ndarray

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def name(self) -> str:
        return format_group(self.group.descriptor)


def enumerate_group(
    descriptor: GroupDescriptor | str | Group, budget: int | None = None
) -> FiniteGroupTable:
    """Close the generators of a finite group under multiplication.

    Args:
        descriptor: Finite group descriptor, its text, or a handle.
        budget: Maximum number of elements.

    Returns:
        The table, with its size checked against the known order.

    Raises:
        ConstructionError: If the group is infinite or the closure is short.
        BudgetExceededError: If the order exceeds the budget.
    """
    G = descriptor if isinstance(descriptor, Group) else build_group(descriptor)
    if not G.is_finite:
        raise ConstructionError(f"{format_group(G.descriptor)} is not finite")
    budget = budget or config.GROUPLAW_ELEMENT_BUDGET
    if G.order > budget or G.order**2 > config.GROUPLAW_TUPLE_BUDGET:
        raise BudgetExceededError(
            f"{format_group(G.descriptor)} has {G.order} elements, over budget"
        )

    gens = standard_generators(G, lazy=False).atoms
    elements = [G.identity]
    index = {G.identity: 0}
    queue = deque([G.identity])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = G.multiply(g, s)
            if h not in index:
                index[h] = len(elements)
                elements.append(h)
                queue.append(h)
    if len(elements) != G.order:
        raise ConstructionError(
            f"generators of {format_group(G.descriptor)} reach {len(elements)} "
            f"of {G.order} elements"
        )

    size = len(elements)
    table = np.empty((size, size), dtype=np.int32)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            table[i, j] = index[G.multiply(a, b)]
    inverses = np.array([index[G.inverse(a)] for a in elements], dtype=np.int32)

    rng = np.random.default_rng(0)
    for i, j, k in rng.integers(0, size, size=(min(100, size**3), 3)):
        if table[table[i, j], k] != table[i, table[j, k]]:
            raise ConstructionError(f"{format_group(G.descriptor)} is not associative")
    logger.debug(f"Enumerated {format_group(G.descriptor)}: {size} elements")
    return FiniteGroupTable(G, elements, index, table, inverses)


def _word_kernel(payload: tuple, start: int, stop: int) -> int:
    table, inverses, letters, variables = payload
    size = table.shape[0]
    rest = np.indices((size,) * (variables - 1)).reshape(variables - 1, -1)
    count = 0
    for outer in range(start, stop):
        columns = [np.full(rest.shape[1], outer, dtype=np.int64), *rest]
        current = np.zeros(rest.shape[1], dtype=np.int64)
        for gen, sign in letters:
            operand = columns[gen - 1] if sign > 0 else inverses[columns[gen - 1]]
            current = table[current, operand]
        count += int((current == 0).sum())
    return count


def exact_law_probability(
    table: FiniteGroupTable,
    expr: LawExpr,
    threads: int | None = None,
    budget: int | None = None,
) -> Fraction:
    """Exact probability that d uniform elements satisfy a law.

    [x1, x2] uses the centralizer sum; other laws enumerate all |G|^d tuples,
    split over workers by the value of x1.

    Raises:
        BudgetExceededError: If |G|^d exceeds the tuple budget.
    """
    word = flatten(expr, allow_empty=True)
    if not word.letters:
        return Fraction(1)
    variables = max(gen for gen, _ in word.letters)
    size = table.order
    if word.letters == COMMUTATOR_WORD:
        commuting = int((table.table == table.table.T).sum())
        return Fraction(commuting, size * size)
    budget = budget or config.GROUPLAW_TUPLE_BUDGET
    if size**variables > budget:
        raise BudgetExceededError(
            f"{size}^{variables} tuples on {table.name} exceed the budget {budget}"
        )
    if variables == 1:
        rows = np.arange(size, dtype=np.int64)
        current = np.zeros(size, dtype=np.int64)
        for _, sign in word.letters:
            current = table.table[current, rows if sign > 0 else table.inverses[rows]]
        return Fraction(int((current == 0).sum()), size)
    if size**variables <= INLINE_TUPLES:
        threads = 1
    payload = (table.table, table.inverses, word.letters, variables)
    count = run_trials(_word_kernel, payload, size, threads)
    return Fraction(count, size**variables)


def commuting_probability(table: FiniteGroupTable) -> Fraction:
    """Pr([x, y] = 1) = (sum over g of |C(g)|) / |G|^2."""
    return exact_law_probability(table, Comm(Var(1), Var(2)))


def element_orders(table: FiniteGroupTable) -> Counter:
    """Number of elements of each order."""
    orders: Counter = Counter()
    for i in range(table.order):
        current, k = i, 1
        while current != 0:
            current = int(table.table[current, i])
            k += 1
        orders[k] += 1
    return orders


def exponent(table: FiniteGroupTable) -> int:
    return math.lcm(*element_orders(table))


def all_elements_generators(table: FiniteGroupTable) -> GeneratingSet:
    """Every element of a finite group as a step atom."""
    return GeneratingSet(tuple(table.elements), True)


# Quotient families


@dataclass
class FamilyPoint:
    group: str
    order: int
    probability: Fraction
    running_inf: Fraction

    def to_record(self) -> dict[str, Any]:
        return {
            "group": self.group,
            "order": self.order,
            "numerator": self.probability.numerator,
            "denominator": self.probability.denominator,
            "probability": float(self.probability),
            "running_inf": float(self.running_inf),
        }


def dihedral_family(moduli: Iterable[int]) -> Iterator[GroupDescriptor]:
    for m in moduli:
        yield GroupDescriptor("dihedral", (m,))


def quotient_family(base: GroupDescriptor | str, moduli: Iterable[int]) -> Iterator[GroupDescriptor]:
    """quotient(base, N) for each N."""
    if isinstance(base, str):
        base = parse_group(base)
    for modulus in moduli:
        yield GroupDescriptor("quotient", (base, modulus))


def parse_family(text: str) -> Iterator[GroupDescriptor]:
    """Family text: ``dihedral:START..STOP[:STEP]`` or ``quotient:BASE:START..STOP[:STEP]``.

    Ranges include STOP.
    """
    kind, _, rest = text.partition(":")
    if kind == "dihedral":
        return dihedral_family(_parse_range(rest))
    if kind == "quotient":
        parts = rest.rsplit(":", 2)
        if len(parts) == 3 and ".." not in parts[2]:
            base, bounds = parts[0], f"{parts[1]}:{parts[2]}"
        else:
            base, _, bounds = rest.rpartition(":")
        return quotient_family(base, _parse_range(bounds))
    raise ConfigError(f"unknown family {text!r}")


def _parse_range(text: str) -> range:
    try:
        bounds, _, step = text.partition(":")
        low, _, high = bounds.partition("..")
        return range(int(low), int(high) + 1, int(step) if step else 1)
    except ValueError as e:
        raise ConfigError(f"bad range {text!r}; expected START..STOP[:STEP]") from e


def quotient_family_infimum(
    family: Iterable[GroupDescriptor | str],
    expr: LawExpr,
    limit: int | None = None,
    threads: int | None = None,
) -> list[FamilyPoint]:
    """Exact law probabilities along a family of finite groups, with running infimum."""
    points: list[FamilyPoint] = []
    running = Fraction(1)
    for position, descriptor in enumerate(family):
        if limit is not None and position >= limit:
            break
        table = enumerate_group(descriptor)
        probability = exact_law_probability(table, expr, threads)
        running = min(running, probability)
        points.append(FamilyPoint(table.name, table.order, probability, running))
    return points
