"""Group-law expressions: parsing, printing, evaluation and transformations.

Grammar (whitespace is insignificant)::

    law     := product
    product := power ( ["*"] power )*
    power   := factor ( "^" ["-"] INT )*
    factor  := VAR | "(" product ")" | "[" product ("," product)+ "]"
             | "conj" "(" product "," product ")"
    VAR     := "x" INT | "a" | "b" | "c" | "d" | "x" | "y" | "z" | "w"

``a b c d`` and ``x y z w`` are aliases of ``x1 .. x4``. Commutators with
more than two entries are left-normed, ``[A, B, C] = [[A, B], C]``, and
``conj(A, B)`` is A^B = B A B^-1. ``A^B`` with a non-integer exponent is
rejected.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import reduce
from typing import Any, Iterator, Sequence, Union

from errors import ArityError, LawNormalizationError, LawSyntaxError
from groups import FreeWord, Group, Letter, commutator, conjugate, free_reduce, power

ALIASES = {"a": 1, "b": 2, "c": 3, "d": 4, "x": 1, "y": 2, "z": 3, "w": 4}


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Inv:
    expr: LawExpr


@dataclass(frozen=True)
class Pow:
    expr: LawExpr
    exponent: int


@dataclass(frozen=True)
class Mul:
    left: LawExpr
    right: LawExpr


@dataclass(frozen=True)
class Comm:
    left: LawExpr
    right: LawExpr


@dataclass(frozen=True)
class Conj:
    """expr conjugated by ``by``: by * expr * by^-1."""

    expr: LawExpr
    by: LawExpr


LawExpr = Union[Var, Inv, Pow, Mul, Comm, Conj]


# Parsing

_TOKEN = re.compile(
    r"(?P<conj>conj)|x(?P<index>\d+)|(?P<alias>[abcdxyzw])|(?P<int>\d+)"
    r"|(?P<sym>[()\[\],*^-])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None:
            raise LawSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, symbol: str) -> None:
        kind, value, position = self.advance()
        if value != symbol or kind not in ("sym", "conj"):
            found = value or "end of input"
            raise LawSyntaxError(f"expected {symbol!r}, found {found!r}", position)

    def starts_factor(self) -> bool:
        kind, value, _ = self.peek()
        return kind in ("conj", "index", "alias") or value in ("(", "[")

    def product(self) -> LawExpr:
        expr = self.power()
        while True:
            if self.peek()[1] == "*":
                self.advance()
            elif not self.starts_factor():
                return expr
            expr = Mul(expr, self.power())

    def power(self) -> LawExpr:
        expr = self.factor()
        while self.peek()[1] == "^":
            self.advance()
            negative = False
            if self.peek()[1] == "-":
                self.advance()
                negative = True
            kind, value, position = self.advance()
            if kind != "int":
                raise LawSyntaxError(
                    "exponents must be integers; write conj(A,B) for conjugation",
                    position,
                )
            exponent = -int(value) if negative else int(value)
            expr = Inv(expr) if exponent == -1 else Pow(expr, exponent)
        return expr

    def factor(self) -> LawExpr:
        kind, value, position = self.advance()
        if kind == "index":
            if int(value) < 1:
                raise LawSyntaxError("variables are numbered from x1", position)
            return Var(int(value))
        if kind == "alias":
            return Var(ALIASES[value])
        if kind == "conj":
            self.expect("(")
            inner = self.product()
            self.expect(",")
            by = self.product()
            self.expect(")")
            return Conj(inner, by)
        if value == "(":
            inner = self.product()
            self.expect(")")
            return inner
        if value == "[":
            entries = [self.product()]
            while self.peek()[1] == ",":
                self.advance()
                entries.append(self.product())
            self.expect("]")
            if len(entries) < 2:
                raise LawSyntaxError("a commutator needs at least two entries", position)
            return reduce(Comm, entries)
        if kind == "int":
            raise LawSyntaxError("integers may only appear as exponents", position)
        raise LawSyntaxError(f"unexpected {value or 'end of input'!r}", position)


def parse_law(text: str, contiguous: bool = True) -> LawExpr:
    """Parse law text into an expression.

    Args:
        text: Law in the grammar of this module, e.g. ``[[x1,x2],[x3,x4]]``.
        contiguous: Require the variables used to be exactly x1..xd.

    Returns:
        The parsed expression.

    Raises:
        LawSyntaxError: If the text is not in the grammar; carries a position.
        LawNormalizationError: If the variables are not contiguous.
    """
    if text.strip() == "1":
        raise LawSyntaxError("the trivial word is not a law", text.index("1"))
    parser = _Parser(text)
    expr = parser.product()
    kind, value, position = parser.peek()
    if kind != "end":
        raise LawSyntaxError(f"unexpected trailing {value!r}", position)
    if contiguous:
        used = variables(expr)
        if used != set(range(1, len(used) + 1)):
            raise LawNormalizationError(
                f"variables {sorted(used)} are not contiguous from x1"
            )
    return expr


def _atom(expr: LawExpr) -> str:
    text = format_law(expr)
    return text if isinstance(expr, (Var, Comm, Conj)) else f"({text})"


def format_law(expr: LawExpr) -> str:
    """Canonical text of an expression; parse_law(format_law(e)) == e."""
    if isinstance(expr, Var):
        return f"x{expr.index}"
    if isinstance(expr, Inv):
        return f"{_atom(expr.expr)}^-1"
    if isinstance(expr, Pow):
        return f"{_atom(expr.expr)}^{expr.exponent}"
    if isinstance(expr, Mul):
        right = format_law(expr.right)
        if isinstance(expr.right, Mul):
            right = f"({right})"
        return f"{format_law(expr.left)}*{right}"
    if isinstance(expr, Comm):
        return f"[{format_law(expr.left)},{format_law(expr.right)}]"
    if isinstance(expr, Conj):
        return f"conj({format_law(expr.expr)},{format_law(expr.by)})"
    raise TypeError(f"not a law expression: {expr!r}")


# Structure


def _children(expr: LawExpr) -> tuple[LawExpr, ...]:
    if isinstance(expr, Var):
        return ()
    if isinstance(expr, (Inv, Pow)):
        return (expr.expr,)
    if isinstance(expr, Conj):
        return (expr.expr, expr.by)
    return (expr.left, expr.right)


def variables(expr: LawExpr) -> set[int]:
    if isinstance(expr, Var):
        return {expr.index}
    return set().union(*(variables(c) for c in _children(expr)))


def variable_count(expr: LawExpr) -> int:
    """d for an expression in x1..xd (the largest index used)."""
    return max(variables(expr))


def rename(expr: LawExpr, offset: int) -> LawExpr:
    """Shift every variable index by ``offset``; used to put laws on disjoint letters."""
    if isinstance(expr, Var):
        if expr.index + offset < 1:
            raise LawNormalizationError(f"renaming x{expr.index} by {offset}")
        return Var(expr.index + offset)
    if isinstance(expr, Inv):
        return Inv(rename(expr.expr, offset))
    if isinstance(expr, Pow):
        return Pow(rename(expr.expr, offset), expr.exponent)
    if isinstance(expr, Conj):
        return Conj(rename(expr.expr, offset), rename(expr.by, offset))
    return type(expr)(rename(expr.left, offset), rename(expr.right, offset))


def _invert(letters: Sequence[Letter]) -> list[Letter]:
    return [(gen, -sign) for gen, sign in reversed(letters)]


def expand(expr: LawExpr) -> tuple[Letter, ...]:
    """Letter sequence of an expression before free reduction."""
    if isinstance(expr, Var):
        return ((expr.index, 1),)
    if isinstance(expr, Inv):
        return tuple(_invert(expand(expr.expr)))
    if isinstance(expr, Pow):
        base = list(expand(expr.expr))
        if expr.exponent < 0:
            base = _invert(base)
        return tuple(base * abs(expr.exponent))
    if isinstance(expr, Mul):
        return expand(expr.left) + expand(expr.right)
    if isinstance(expr, Comm):
        a, b = list(expand(expr.left)), list(expand(expr.right))
        return tuple(a + b + _invert(a) + _invert(b))
    if isinstance(expr, Conj):
        a, b = list(expand(expr.expr)), list(expand(expr.by))
        return tuple(b + a + _invert(b))
    raise TypeError(f"not a law expression: {expr!r}")


def flatten(expr: LawExpr, allow_empty: bool = False) -> FreeWord:
    """Freely reduced word of an expression.

    Raises:
        LawNormalizationError: If the word reduces to the identity and
            ``allow_empty`` is not set.
    """
    word = FreeWord(free_reduce(expand(expr)))
    if not word.letters and not allow_empty:
        raise LawNormalizationError(f"{format_law(expr)} is the trivial word")
    return word


def word_to_expr(letters: Sequence[Letter]) -> LawExpr:
    """Expression spelling out a nonempty letter sequence."""
    if not letters:
        raise LawNormalizationError("cannot build an expression from the empty word")
    factors: list[LawExpr] = [
        Var(gen) if sign > 0 else Inv(Var(gen)) for gen, sign in letters
    ]
    return reduce(Mul, factors)


def degrees(expr: LawExpr) -> tuple[int, ...]:
    """Per-variable exponent sums, indexed x1..xd."""
    sums = [0] * variable_count(expr)
    for gen, sign in expand(expr):
        sums[gen - 1] += sign
    return tuple(sums)


def is_balanced(expr: LawExpr) -> bool:
    """True when the law has trivial abelianization."""
    return not any(degrees(expr))


def derive(expr: LawExpr) -> LawExpr:
    """The derived law [w(x1..xd), x(d+1)]."""
    return Comm(expr, Var(variable_count(expr) + 1))


# Evaluation


def _check_arity(expr: LawExpr, assignment: Sequence[Any]) -> None:
    if len(assignment) < variable_count(expr):
        raise ArityError(
            f"{format_law(expr)} needs {variable_count(expr)} elements, "
            f"got {len(assignment)}"
        )


def _evaluate(expr: LawExpr, G: Group, assignment: Sequence[Any]) -> Any:
    if isinstance(expr, Var):
        return assignment[expr.index - 1]
    if isinstance(expr, Inv):
        return G.inverse(_evaluate(expr.expr, G, assignment))
    if isinstance(expr, Pow):
        return power(G, _evaluate(expr.expr, G, assignment), expr.exponent)
    if isinstance(expr, Mul):
        return G.multiply(
            _evaluate(expr.left, G, assignment), _evaluate(expr.right, G, assignment)
        )
    if isinstance(expr, Comm):
        return commutator(
            G, _evaluate(expr.left, G, assignment), _evaluate(expr.right, G, assignment)
        )
    if isinstance(expr, Conj):
        return conjugate(
            G, _evaluate(expr.expr, G, assignment), _evaluate(expr.by, G, assignment)
        )
    raise TypeError(f"not a law expression: {expr!r}")


def evaluate(expr: LawExpr, G: Group, assignment: Sequence[Any]) -> Any:
    """Value of the word map at ``assignment``, in canonical form.

    Raises:
        ArityError: If fewer elements than variables are given.
    """
    _check_arity(expr, assignment)
    return G.canonicalize(_evaluate(expr, G, assignment))


def evaluate_word(G: Group, word: FreeWord, assignment: Sequence[Any]) -> Any:
    """Substitute ``assignment`` into a letter sequence."""
    needed = max((gen for gen, _ in word.letters), default=0)
    if len(assignment) < needed:
        raise ArityError(f"word needs {needed} elements, got {len(assignment)}")
    inverses = [G.inverse(a) for a in assignment[:needed]]
    return G.canonicalize(
        G.product(
            assignment[gen - 1] if sign > 0 else inverses[gen - 1]
            for gen, sign in word.letters
        )
    )


# Families


def power_law(m: int) -> LawExpr:
    return Pow(Var(1), m)


def metabelian_law() -> LawExpr:
    return Comm(Comm(Var(1), Var(2)), Comm(Var(3), Var(4)))


def nilpotent_law(k: int) -> LawExpr:
    """The k-step nilpotent law [x1, ..., x(k+1)]."""
    if k < 1:
        raise LawNormalizationError(f"nilpotency class must be >= 1, got {k}")
    return reduce(Comm, (Var(i) for i in range(1, k + 2)))


def self_commutator(expr: LawExpr) -> LawExpr:
    """[w(x1..xd), w(x(d+1)..x2d)]: the law commuted with a copy on disjoint letters."""
    return Comm(expr, rename(expr, variable_count(expr)))


def _signed_orders(letters: int) -> Iterator[tuple[Letter, ...]]:
    for size in range(1, letters + 1):
        for chosen in itertools.permutations(range(1, letters + 1), size):
            for signs in itertools.product((1, -1), repeat=size):
                yield tuple(zip(chosen, signs))


def simple_products(letters: int = 4) -> list[LawExpr]:
    """Products of signed letters in which each letter appears at most once.

    Returns:
        The 632 simple products over four letters, shortest first.
    """
    seen: dict[tuple[Letter, ...], LawExpr] = {}
    for word in _signed_orders(letters):
        seen.setdefault(free_reduce(word), word_to_expr(word))
    return list(seen.values())
