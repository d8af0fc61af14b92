"""Identity claims: free-group verification and search for counterexamples in finite models."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence

import numpy as np
from loguru import logger

import config
from errors import BudgetExceededError, ConfigError, GroupLawError
from finite import FiniteGroupTable, enumerate_group
from groups import FreeWord, Letter, free_reduce, to_json
from laws import (
    Conj,
    Inv,
    LawExpr,
    Mul,
    Pow,
    Var,
    expand,
    flatten,
    format_law,
    parse_law,
    simple_products,
    variable_count,
    word_to_expr,
)
from walks import derive_stream, run_trials

ClaimKind = Literal["free", "conditional"]


@dataclass(frozen=True)
class IdentityClaim:
    """An identity lhs = rhs, possibly under hypotheses.

    Args:
        name: Manifest name.
        kind: free (holds in every group) or conditional.
        lhs: Left-hand side.
        rhs: Right-hand side; None stands for the identity.
        hypotheses: (lhs, rhs) pairs that must hold for the claim to apply.
    """

    name: str
    kind: ClaimKind
    lhs: LawExpr
    rhs: LawExpr | None = None
    hypotheses: tuple[tuple[LawExpr, LawExpr | None], ...] = ()

    def letters(self) -> tuple[Letter, ...]:
        return relation_word(self.lhs, self.rhs)

    @property
    def variables(self) -> int:
        exprs = [self.lhs] + [e for pair in self.hypotheses for e in pair if e is not None]
        if self.rhs is not None:
            exprs.append(self.rhs)
        return max(variable_count(e) for e in exprs)

    def __str__(self) -> str:
        rhs = "" if self.rhs is None else f" = {format_law(self.rhs)}"
        return f"{format_law(self.lhs)}{rhs}"


def relation_word(lhs: LawExpr, rhs: LawExpr | None) -> tuple[Letter, ...]:
    """Reduced letters of lhs rhs^-1."""
    relation = lhs if rhs is None else Mul(lhs, Inv(rhs))
    return free_reduce(expand(relation))


def verify_free_identity(claim: IdentityClaim) -> bool:
    """True iff lhs rhs^-1 reduces to the empty word, i.e. the claim holds in every group."""
    if claim.kind != "free":
        raise ConfigError(f"{claim.name} is conditional; check it on finite models")
    return not claim.letters()


# Conditional checks


@dataclass(frozen=True)
class _Hypothesis:
    """Relation u^k = 1 with u given by its letters."""

    letters: tuple[Letter, ...]
    power: int


def _cyclically_reduce(letters: tuple[Letter, ...]) -> tuple[Letter, ...]:
    while len(letters) > 1 and letters[0] == (letters[-1][0], -letters[-1][1]):
        letters = letters[1:-1]
    return letters


def _primitive_root(letters: tuple[Letter, ...]) -> tuple[tuple[Letter, ...], int]:
    size = len(letters)
    for period in range(1, size):
        if size % period == 0 and letters == letters[:period] * (size // period):
            return letters[:period], size // period
    return letters, 1


def _cyclic_key(letters: tuple[Letter, ...]) -> tuple[Letter, ...]:
    inverse = tuple((gen, -sign) for gen, sign in reversed(letters))
    return min(
        word[i:] + word[:i] for word in (letters, inverse) for i in range(len(word))
    )


def compile_hypotheses(
    hypotheses: Iterable[tuple[LawExpr, LawExpr | None]]
) -> list[_Hypothesis]:
    """Reduce hypotheses to distinct relations u^k = 1.

    A relation is equivalent to any cyclic conjugate and to its inverse, so
    hypotheses are kept once per cyclic class.
    """
    seen: dict[tuple[Letter, ...], _Hypothesis] = {}
    for lhs, rhs in hypotheses:
        letters = _cyclically_reduce(relation_word(lhs, rhs))
        if not letters:
            continue
        root, k = _primitive_root(letters)
        seen.setdefault(_cyclic_key(letters), _Hypothesis(root, k))
    return list(seen.values())


def _power_identity(table: FiniteGroupTable, k: int) -> np.ndarray:
    """mask[i] is True when elements[i]^k is the identity."""
    rows = np.arange(table.order)
    current = np.zeros(table.order, dtype=np.int64)
    for _ in range(k):
        current = table.table[current, rows]
    return current == 0


def _evaluate(table: np.ndarray, inverses: np.ndarray, letters, columns) -> np.ndarray:
    current = np.zeros(len(columns[0]), dtype=np.int64)
    for gen, sign in letters:
        operand = columns[gen - 1] if sign > 0 else inverses[columns[gen - 1]]
        current = table[current, operand]
    return current


def _first_failure(payload: tuple, columns: list[np.ndarray]) -> int | None:
    table, inverses, hypotheses, powers, claim = payload
    candidates = np.arange(len(columns[0]))
    for hypothesis in hypotheses:
        if not len(candidates):
            return None
        picked = [c[candidates] for c in columns]
        values = _evaluate(table, inverses, hypothesis.letters, picked)
        candidates = candidates[powers[hypothesis.power][values]]
    if not len(candidates):
        return None
    picked = [c[candidates] for c in columns]
    failing = np.flatnonzero(_evaluate(table, inverses, claim, picked) != 0)
    return int(candidates[failing[0]]) if len(failing) else None


def _exhaustive_kernel(payload: tuple, start: int, stop: int) -> tuple[int, ...] | None:
    table, variables = payload[0], payload[-1]
    size = table.shape[0]
    rest = np.indices((size,) * (variables - 1)).reshape(variables - 1, -1)
    for outer in range(start, stop):
        columns = [np.full(rest.shape[1], outer, dtype=np.int64), *rest]
        found = _first_failure(payload[:-1], columns)
        if found is not None:
            return tuple(int(c[found]) for c in columns)
    return None


def _sampled_kernel(payload: tuple, start: int, stop: int) -> tuple[int, ...] | None:
    table, variables, seed = payload[0], payload[-2], payload[-1]
    draws = np.array(
        [
            derive_stream(seed, t).integers(0, table.shape[0], size=variables)
            for t in range(start, stop)
        ]
    )
    columns = [draws[:, i] for i in range(variables)]
    found = _first_failure(payload[:-2], columns)
    return None if found is None else tuple(int(c[found]) for c in columns)


def _first(a: Any, b: Any) -> Any:
    return a if a is not None else b


@dataclass
class Counterexample:
    claim: str
    group: str
    assignment: list[Any] = field(default_factory=list)

    def to_record(self) -> dict[str, Any]:
        return {
            "claim": self.claim,
            "group": self.group,
            "assignment": [to_json(g) for g in self.assignment],
        }


def conditional_check(
    claim: IdentityClaim,
    table: FiniteGroupTable,
    mode: Literal["exhaustive", "sampled"] = "exhaustive",
    trials: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
    budget: int | None = None,
) -> Counterexample | None:
    """Search a finite model for an assignment satisfying the hypotheses but not the claim.

    Args:
        claim: The claim; free claims are checked like conditional ones with
            no hypotheses.
        table: The finite model.
        mode: exhaustive over all |G|^d tuples, or sampled.
        trials: Tuples drawn in sampled mode.
        seed: Root seed for sampled mode.
        threads: Worker processes.
        budget: Tuple budget for exhaustive mode.

    Returns:
        The first counterexample in enumeration (or trial) order, or None.

    Raises:
        BudgetExceededError: If exhaustive mode would exceed the budget.
    """
    variables = claim.variables
    hypotheses = compile_hypotheses(claim.hypotheses)
    powers = {h.power: _power_identity(table, h.power) for h in hypotheses}
    base = (table.table, table.inverses, hypotheses, powers, claim.letters())
    if mode == "exhaustive":
        budget = budget or config.GROUPLAW_TUPLE_BUDGET
        if table.order**variables > budget:
            raise BudgetExceededError(
                f"{table.order}^{variables} tuples on {table.name} exceed {budget}"
            )
        if variables == 1:
            found = _first_failure(base, [np.arange(table.order, dtype=np.int64)])
            found = None if found is None else (found,)
        else:
            found = run_trials(
                _exhaustive_kernel, base + (variables,), table.order, threads, _first
            )
    else:
        found = run_trials(
            _sampled_kernel, base + (variables, seed), trials, threads, _first
        )
    if found is None:
        return None
    counterexample = Counterexample(
        claim.name, table.name, [table.elements[i] for i in found]
    )
    logger.info(f"Counterexample to {claim.name} in {table.name}")
    return counterexample


# Manifest


def _substitute(expr: LawExpr, values: Sequence[LawExpr]) -> LawExpr:
    if isinstance(expr, Var):
        return values[expr.index - 1]
    if isinstance(expr, Inv):
        return Inv(_substitute(expr.expr, values))
    if isinstance(expr, Pow):
        return Pow(_substitute(expr.expr, values), expr.exponent)
    if isinstance(expr, Conj):
        return Conj(_substitute(expr.expr, values), _substitute(expr.by, values))
    return type(expr)(_substitute(expr.left, values), _substitute(expr.right, values))


def good_hypotheses(arguments: Sequence[LawExpr]) -> list[tuple[LawExpr, None]]:
    """Cube relations for every simple product of four elements."""
    if len(arguments) != 4:
        raise ConfigError("good(...) takes four arguments")
    return [(Pow(_substitute(p, arguments), 3), None) for p in simple_products()]


_GOOD = re.compile(r"^good\((.*)\)$")


def _parse_relation(text: str) -> tuple[LawExpr, LawExpr | None]:
    lhs, _, rhs = text.partition("=")
    return (
        parse_law(lhs, contiguous=False),
        parse_law(rhs, contiguous=False) if rhs.strip() else None,
    )


def parse_claim(line: str) -> IdentityClaim:
    """Parse ``name | free|conditional | lhs [= rhs] | hyp; hyp; ...``."""
    fields = [part.strip() for part in line.split("|")]
    if len(fields) not in (3, 4) or fields[1] not in ("free", "conditional"):
        raise ConfigError(f"bad manifest line {line!r}")
    name, kind, relation = fields[:3]
    lhs, rhs = _parse_relation(relation)
    hypotheses: list[tuple[LawExpr, LawExpr | None]] = []
    for text in (fields[3].split(";") if len(fields) == 4 else []):
        text = text.strip()
        if not text:
            continue
        macro = _GOOD.match(text)
        if macro:
            arguments = [parse_law(a, contiguous=False) for a in macro.group(1).split(",")]
            hypotheses.extend(good_hypotheses(arguments))
        else:
            hypotheses.append(_parse_relation(text))
    if kind == "free" and hypotheses:
        raise ConfigError(f"free claim {name} cannot have hypotheses")
    return IdentityClaim(name, kind, lhs, rhs, tuple(hypotheses))


def load_manifest(path: str | Path | None = None) -> list[IdentityClaim]:
    """Read claims from a manifest file; ``#`` starts a comment."""
    path = Path(path or config.GROUPLAW_MANIFEST)
    claims = []
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            claims.append(parse_claim(line))
        except GroupLawError as e:
            raise ConfigError(f"{path}:{number}: {e}") from e
    logger.debug(f"Loaded {len(claims)} claims from {path}")
    return claims


# Perturbations


def _mutate(letters: list[Letter], variables: int, stream: np.random.Generator) -> list[Letter]:
    while True:
        choice = int(stream.integers(0, 4))
        position = int(stream.integers(0, len(letters)))
        if choice == 0:
            letter = (int(stream.integers(1, variables + 1)), int(stream.choice((1, -1))))
            return letters[:position] + [letter] + letters[position:]
        if choice == 1 and len(letters) > 1:
            return letters[:position] + letters[position + 1 :]
        if choice == 2:
            gen, sign = letters[position]
            return letters[:position] + [(gen, -sign)] + letters[position + 1 :]
        if choice == 3 and position + 1 < len(letters):
            first, second = letters[position], letters[position + 1]
            if first[0] != second[0]:
                swapped = [second, first]
                return letters[:position] + swapped + letters[position + 2 :]


def perturbed_claims(claim: IdentityClaim, count: int, seed: int = 0) -> list[IdentityClaim]:
    """Free claims obtained by one insertion, deletion, sign flip or adjacent swap.

    Each perturbation changes the right-hand side as an element of the free
    group, so none of them holds in every group.
    """
    if claim.rhs is None:
        raise ConfigError(f"{claim.name} has no right-hand side to perturb")
    letters = list(flatten(claim.rhs).letters)
    variables = claim.variables
    perturbed = []
    for i in range(count):
        mutated = _mutate(letters, variables, derive_stream(seed, i))
        reduced = free_reduce(mutated)
        rhs = word_to_expr(reduced) if reduced else None
        perturbed.append(IdentityClaim(f"{claim.name}~{i}", "free", claim.lhs, rhs))
    return perturbed


def verify_manifest(
    claims: Iterable[IdentityClaim],
    models: Sequence[str] = ("extraspecial3",),
    mode: Literal["exhaustive", "sampled"] = "exhaustive",
    trials: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> list[dict[str, Any]]:
    """Check every claim; one record per free claim and per (conditional claim, model)."""
    tables: dict[str, FiniteGroupTable] = {}
    records = []
    for claim in claims:
        if claim.kind == "free":
            passed = verify_free_identity(claim)
            word = FreeWord(claim.letters())
            records.append(
                {
                    "claim": claim.name,
                    "kind": "free",
                    "identity": str(claim),
                    "passed": passed,
                    "residual": [list(letter) for letter in word.letters],
                }
            )
            continue
        for model in models:
            if model not in tables:
                tables[model] = enumerate_group(model)
            found = conditional_check(
                claim, tables[model], mode, trials, seed, threads
            )
            records.append(
                {
                    "claim": claim.name,
                    "kind": "conditional",
                    "identity": str(claim),
                    "model": tables[model].name,
                    "mode": mode,
                    "passed": found is None,
                    "counterexample": None if found is None else found.to_record(),
                }
            )
    return records
