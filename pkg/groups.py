"""Group elements, group arithmetic and the explicit group constructions.

Conventions used everywhere in grouplaw:

    [a, b] = a b a^-1 b^-1        a^b = b a b^-1

Elements are immutable, hashable values; two elements of a group are equal
exactly when their canonical forms are equal. Handles are immutable after
construction and can be shared between threads and processes.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

from loguru import logger
from sympy import Matrix, Poly, cyclotomic_poly, eye, symbols, totient

from errors import ConstructionError, ElementTypeError, LawSyntaxError

SERIAL_VERSION = 1

IntMatrix = tuple[tuple[int, ...], ...]
Letter = tuple[int, int]


# Elements


@dataclass(frozen=True, slots=True)
class FreeWord:
    """Freely reduced word; letters are (generator index, sign) pairs."""

    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)


@dataclass(frozen=True, slots=True, order=True)
class LatticeVec:
    coords: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class CyclicResidue:
    value: int
    modulus: int


@dataclass(frozen=True, slots=True)
class HeisenbergElem:
    """Triple (u, a, v) of the integer Heisenberg group."""

    u: tuple[int, ...]
    a: int
    v: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SemidirectElem:
    """Pair (v, k); v is an integer vector, or a Heisenberg triple."""

    v: Union[tuple[int, ...], HeisenbergElem]
    k: int


@dataclass(frozen=True, slots=True, eq=False)
class WreathElem:
    """Pair (L, g) of a lamp configuration and a lamplighter position.

    The lamp map is sparse: no key maps to the lamp identity.
    """

    lamps: Mapping[Any, Any]
    pos: Any

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WreathElem):
            return NotImplemented
        return self.pos == other.pos and self.lamps == other.lamps

    def __hash__(self) -> int:
        return hash((frozenset(self.lamps.items()), self.pos))

    def support(self) -> frozenset:
        return frozenset(self.lamps)


@dataclass(frozen=True, slots=True)
class TupleElem:
    components: tuple[Any, ...]


@dataclass(frozen=True, slots=True)
class Perm:
    """Permutation of 0..n-1 as its tuple of images."""

    images: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class QuaternionElem:
    sign: int
    unit: str


GroupElement = Union[
    FreeWord,
    LatticeVec,
    CyclicResidue,
    HeisenbergElem,
    SemidirectElem,
    WreathElem,
    TupleElem,
    Perm,
    QuaternionElem,
]


# Matrices


def _matvec(matrix: IntMatrix, vector: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(a * b for a, b in zip(row, vector)) for row in matrix)


def _matmul(left: IntMatrix, right: IntMatrix) -> IntMatrix:
    columns = list(zip(*right))
    return tuple(
        tuple(sum(a * b for a, b in zip(row, col)) for col in columns) for row in left
    )


def _identity_matrix(size: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(size)) for i in range(size))


def _transpose(matrix: IntMatrix) -> IntMatrix:
    return tuple(zip(*matrix))


def _reduce(vector: Iterable[int], modulus: int | None) -> tuple[int, ...]:
    if modulus is None:
        return tuple(vector)
    return tuple(x % modulus for x in vector)


def _validate_action(rows: IntMatrix, m: int) -> IntMatrix:
    """Check A^m = I and det(A - I) != 0 with exact arithmetic.

    Raises:
        ConstructionError: If either property fails.
    """
    matrix = Matrix(rows)
    size = matrix.shape[0]
    if matrix**m != eye(size):
        raise ConstructionError(f"action matrix does not satisfy A^{m} = I")
    if (matrix - eye(size)).det() == 0:
        raise ConstructionError("action matrix has eigenvalue 1")
    return rows


def companion_matrix(m: int) -> IntMatrix:
    """Companion matrix of 1 + x + ... + x^(m-1).

    Args:
        m: Order of the action, at least 2.

    Returns:
        (m-1) x (m-1) integer matrix A with A^m = I and det(A - I) != 0.
    """
    if m < 2:
        raise ConstructionError(f"companion matrix needs m >= 2, got {m}")
    size = m - 1
    rows = tuple(
        tuple(1 if i == j + 1 else (-1 if j == size - 1 else 0) for j in range(size))
        for i in range(size)
    )
    return _validate_action(rows, m)


def cyclotomic_action_matrix(m: int) -> IntMatrix:
    """Companion matrix of the m-th cyclotomic polynomial.

    Its minimal polynomial is irreducible, so f(A) is either zero or
    invertible for every rational polynomial f.

    Args:
        m: Order of the action, at least 2.

    Returns:
        phi(m) x phi(m) integer matrix A with A^m = I.
    """
    if m < 2:
        raise ConstructionError(f"cyclotomic action needs m >= 2, got {m}")
    x = symbols("x")
    coeffs = [int(c) for c in reversed(Poly(cyclotomic_poly(m, x), x).all_coeffs())]
    size = len(coeffs) - 1
    if size != int(totient(m)):
        raise ConstructionError(f"cyclotomic polynomial of order {m} has wrong degree")
    rows = tuple(
        tuple(
            -coeffs[i] if j == size - 1 else (1 if i == j + 1 else 0)
            for j in range(size)
        )
        for i in range(size)
    )
    return _validate_action(rows, m)


# Descriptors


MatrixArg = IntMatrix
DescriptorArg = Union[int, MatrixArg, "GroupDescriptor"]


@dataclass(frozen=True)
class GroupDescriptor:
    """Construction recipe of a group, e.g. ``wreath(free(2), lattice(5))``."""

    kind: str
    args: tuple[DescriptorArg, ...] = ()

    @property
    def params(self) -> tuple:
        return tuple(a for a in self.args if not isinstance(a, GroupDescriptor))

    @property
    def children(self) -> tuple[GroupDescriptor, ...]:
        return tuple(a for a in self.args if isinstance(a, GroupDescriptor))

    def __str__(self) -> str:
        return format_group(self)


_GROUP_TOKEN = re.compile(r"(?P<name>[a-z][a-z0-9-]*)|(?P<int>-?\d+)|(?P<sym>[()\[\],])")


def _tokenize_group(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _GROUP_TOKEN.match(text, pos)
        if match is None:
            raise LawSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _GroupParser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize_group(text)
        self.index = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def take(self, value: str | None = None, kind: str | None = None) -> str:
        token_kind, token, position = self.peek()
        if (value is not None and token != value) or (
            kind is not None and token_kind != kind
        ):
            expected = value if value is not None else kind
            raise LawSyntaxError(f"expected {expected!r}, found {token!r}", position)
        self.index += 1
        return token

    def descriptor(self) -> GroupDescriptor:
        name = self.take(kind="name")
        args: list[DescriptorArg] = []
        if self.peek()[1] == "(":
            self.take("(")
            args.append(self.argument())
            while self.peek()[1] == ",":
                self.take(",")
                args.append(self.argument())
            self.take(")")
        return GroupDescriptor(name, tuple(args))

    def argument(self) -> DescriptorArg:
        kind, token, _ = self.peek()
        if kind == "int":
            self.take()
            return int(token)
        if token == "[":
            return self.matrix()
        return self.descriptor()

    def matrix(self) -> MatrixArg:
        self.take("[")
        rows = [self.row()]
        while self.peek()[1] == ",":
            self.take(",")
            rows.append(self.row())
        self.take("]")
        return tuple(rows)

    def row(self) -> tuple[int, ...]:
        self.take("[")
        entries = [int(self.take(kind="int"))]
        while self.peek()[1] == ",":
            self.take(",")
            entries.append(int(self.take(kind="int")))
        self.take("]")
        return tuple(entries)


def parse_group(text: str) -> GroupDescriptor:
    """Parse group descriptor text such as ``quotient(semidirect(3), 9)``.

    Raises:
        LawSyntaxError: If the text is not a descriptor.
    """
    parser = _GroupParser(text)
    descriptor = parser.descriptor()
    kind, token, position = parser.peek()
    if kind != "end":
        raise LawSyntaxError(f"unexpected trailing {token!r}", position)
    return descriptor


def format_group(descriptor: GroupDescriptor) -> str:
    """Canonical text of a descriptor; parse_group inverts it."""

    def fmt(arg: DescriptorArg) -> str:
        if isinstance(arg, GroupDescriptor):
            return format_group(arg)
        if isinstance(arg, tuple):
            return "[" + ",".join("[" + ",".join(map(str, r)) + "]" for r in arg) + "]"
        return str(arg)

    if not descriptor.args:
        return descriptor.kind
    return f"{descriptor.kind}({','.join(fmt(a) for a in descriptor.args)})"


# Group handles


class Group(ABC):
    """A validated group: identity, multiply, inverse and canonicalize."""

    element_type: type = object

    def __init__(self, descriptor: GroupDescriptor) -> None:
        self.descriptor = descriptor

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {format_group(self.descriptor)}>"

    @property
    @abstractmethod
    def identity(self) -> Any: ...

    @abstractmethod
    def multiply(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def inverse(self, a: Any) -> Any: ...

    @abstractmethod
    def canonicalize(self, a: Any) -> Any: ...

    @abstractmethod
    def basic_generators(self) -> list[Any]:
        """Canonical generators before symmetrization."""

    @property
    def order(self) -> int | None:
        """Number of elements, or None for infinite groups."""
        return None

    @property
    def is_finite(self) -> bool:
        return self.order is not None

    def check(self, a: Any) -> None:
        if not isinstance(a, self.element_type):
            raise ElementTypeError(
                f"{type(a).__name__} is not an element of {format_group(self.descriptor)}"
            )

    def is_identity(self, a: Any) -> bool:
        return a == self.identity

    def product(self, elements: Iterable[Any]) -> Any:
        """Left-to-right product of a sequence of elements."""
        return functools.reduce(self.multiply, elements, self.identity)

    def with_modulus(self, modulus: int) -> Group:
        """The quotient obtained by reducing coordinates mod ``modulus``."""
        raise ConstructionError(
            f"{format_group(self.descriptor)} has no coordinatewise quotient"
        )


class FreeGroup(Group):
    element_type = FreeWord

    def __init__(self, rank: int, descriptor: GroupDescriptor | None = None) -> None:
        if rank < 1:
            raise ConstructionError(f"free group needs rank >= 1, got {rank}")
        super().__init__(descriptor or GroupDescriptor("free", (rank,)))
        self.rank = rank

    @property
    def identity(self) -> FreeWord:
        return FreeWord()

    def multiply(self, a: FreeWord, b: FreeWord) -> FreeWord:
        self.check(a)
        self.check(b)
        left = list(a.letters)
        right = b.letters
        cut = 0
        while left and cut < len(right):
            gen, sign = left[-1]
            if right[cut] != (gen, -sign):
                break
            left.pop()
            cut += 1
        return FreeWord(tuple(left) + right[cut:])

    def inverse(self, a: FreeWord) -> FreeWord:
        self.check(a)
        return FreeWord(tuple((gen, -sign) for gen, sign in reversed(a.letters)))

    def canonicalize(self, a: FreeWord) -> FreeWord:
        self.check(a)
        return FreeWord(free_reduce(a.letters))

    def basic_generators(self) -> list[FreeWord]:
        return [FreeWord(((i, 1),)) for i in range(1, self.rank + 1)]


def free_reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    """Cancel adjacent inverse pairs until none are left."""
    stack: list[Letter] = []
    for gen, sign in letters:
        if stack and stack[-1] == (gen, -sign):
            stack.pop()
        else:
            stack.append((gen, sign))
    return tuple(stack)


class Lattice(Group):
    element_type = LatticeVec

    def __init__(
        self,
        dim: int,
        modulus: int | None = None,
        descriptor: GroupDescriptor | None = None,
    ) -> None:
        if dim < 1:
            raise ConstructionError(f"lattice needs dimension >= 1, got {dim}")
        _check_modulus(modulus)
        super().__init__(descriptor or GroupDescriptor("lattice", (dim,)))
        self.dim = dim
        self.modulus = modulus

    def check(self, a: Any) -> None:
        super().check(a)
        if len(a.coords) != self.dim:
            raise ElementTypeError(f"expected {self.dim} coordinates, got {a.coords}")

    @property
    def identity(self) -> LatticeVec:
        return LatticeVec((0,) * self.dim)

    @property
    def order(self) -> int | None:
        return None if self.modulus is None else self.modulus**self.dim

    def multiply(self, a: LatticeVec, b: LatticeVec) -> LatticeVec:
        self.check(a)
        self.check(b)
        return LatticeVec(
            _reduce((x + y for x, y in zip(a.coords, b.coords)), self.modulus)
        )

    def inverse(self, a: LatticeVec) -> LatticeVec:
        self.check(a)
        return LatticeVec(_reduce((-x for x in a.coords), self.modulus))

    def canonicalize(self, a: LatticeVec) -> LatticeVec:
        self.check(a)
        return LatticeVec(_reduce(a.coords, self.modulus))

    def product(self, elements: Iterable[LatticeVec]) -> LatticeVec:
        total = [0] * self.dim
        for e in elements:
            for i, x in enumerate(e.coords):
                total[i] += x
        return LatticeVec(_reduce(total, self.modulus))

    def basic_generators(self) -> list[LatticeVec]:
        return [self.canonicalize(unit_vector(self.dim, i)) for i in range(self.dim)]

    def with_modulus(self, modulus: int) -> Lattice:
        return Lattice(
            self.dim,
            _nested_modulus(self.modulus, modulus),
            GroupDescriptor("quotient", (self.descriptor, modulus)),
        )


def unit_vector(dim: int, index: int, scale: int = 1) -> LatticeVec:
    return LatticeVec(tuple(scale if i == index else 0 for i in range(dim)))


def _check_modulus(modulus: int | None) -> None:
    if modulus is not None and modulus < 2:
        raise ConstructionError(f"quotient modulus must be >= 2, got {modulus}")


def _nested_modulus(current: int | None, modulus: int) -> int:
    _check_modulus(modulus)
    if current is not None and current % modulus != 0:
        raise ConstructionError(
            f"cannot reduce a quotient mod {current} further mod {modulus}"
        )
    return modulus


class Cyclic(Group):
    element_type = CyclicResidue

    def __init__(self, m: int, descriptor: GroupDescriptor | None = None) -> None:
        if m < 1:
            raise ConstructionError(f"cyclic group needs m >= 1, got {m}")
        super().__init__(descriptor or GroupDescriptor("cyclic", (m,)))
        self.m = m

    def check(self, a: Any) -> None:
        super().check(a)
        if a.modulus != self.m:
            raise ElementTypeError(f"residue mod {a.modulus} used in Z/{self.m}")

    @property
    def identity(self) -> CyclicResidue:
        return CyclicResidue(0, self.m)

    @property
    def order(self) -> int:
        return self.m

    def multiply(self, a: CyclicResidue, b: CyclicResidue) -> CyclicResidue:
        self.check(a)
        self.check(b)
        return CyclicResidue((a.value + b.value) % self.m, self.m)

    def inverse(self, a: CyclicResidue) -> CyclicResidue:
        self.check(a)
        return CyclicResidue(-a.value % self.m, self.m)

    def canonicalize(self, a: CyclicResidue) -> CyclicResidue:
        self.check(a)
        return CyclicResidue(a.value % self.m, self.m)

    def basic_generators(self) -> list[CyclicResidue]:
        return [CyclicResidue(1 % self.m, self.m)]

    def with_modulus(self, modulus: int) -> Cyclic:
        if self.m % modulus != 0:
            raise ConstructionError(f"Z/{modulus} is not a quotient of Z/{self.m}")
        return Cyclic(modulus, GroupDescriptor("quotient", (self.descriptor, modulus)))


class Semidirect(Group):
    """Z^d semidirect Z/m, with Z/m acting through an integer matrix A.

    (v1, k1)(v2, k2) = (v1 + A^k1 v2, k1 + k2).
    """

    element_type = SemidirectElem

    def __init__(
        self,
        matrix: IntMatrix,
        m: int,
        modulus: int | None = None,
        descriptor: GroupDescriptor | None = None,
    ) -> None:
        size = len(matrix)
        if m < 1 or size == 0 or any(len(row) != size for row in matrix):
            raise ConstructionError("semidirect product needs a square matrix and m >= 1")
        _check_modulus(modulus)
        powers = [_identity_matrix(size)]
        for _ in range(m):
            powers.append(_matmul(powers[-1], matrix))
        if powers[m] != _identity_matrix(size):
            raise ConstructionError(f"action matrix does not satisfy A^{m} = I")
        super().__init__(descriptor or GroupDescriptor("semidirect", (matrix, m)))
        self.matrix = tuple(tuple(row) for row in matrix)
        self.m = m
        self.dim = size
        self.modulus = modulus
        self.powers = tuple(powers[:m])

    def check(self, a: Any) -> None:
        super().check(a)
        if not isinstance(a.v, tuple) or len(a.v) != self.dim:
            raise ElementTypeError(f"expected a vector of length {self.dim}")

    @property
    def identity(self) -> SemidirectElem:
        return SemidirectElem((0,) * self.dim, 0)

    @property
    def order(self) -> int | None:
        return None if self.modulus is None else self.modulus**self.dim * self.m

    def act(self, k: int, v: Sequence[int]) -> tuple[int, ...]:
        return _reduce(_matvec(self.powers[k % self.m], v), self.modulus)

    def multiply(self, a: SemidirectElem, b: SemidirectElem) -> SemidirectElem:
        self.check(a)
        self.check(b)
        moved = _matvec(self.powers[a.k], b.v)
        return SemidirectElem(
            _reduce((x + y for x, y in zip(a.v, moved)), self.modulus),
            (a.k + b.k) % self.m,
        )

    def inverse(self, a: SemidirectElem) -> SemidirectElem:
        self.check(a)
        back = self.act(-a.k, a.v)
        return SemidirectElem(_reduce((-x for x in back), self.modulus), -a.k % self.m)

    def canonicalize(self, a: SemidirectElem) -> SemidirectElem:
        self.check(a)
        return SemidirectElem(_reduce(a.v, self.modulus), a.k % self.m)

    def basic_generators(self) -> list[SemidirectElem]:
        gens = [
            self.canonicalize(SemidirectElem(unit_vector(self.dim, i).coords, 0))
            for i in range(self.dim)
        ]
        gens.append(SemidirectElem((0,) * self.dim, 1 % self.m))
        return gens

    def with_modulus(self, modulus: int) -> Semidirect:
        return Semidirect(
            self.matrix,
            self.m,
            _nested_modulus(self.modulus, modulus),
            GroupDescriptor("quotient", (self.descriptor, modulus)),
        )


class Heisenberg(Group):
    """Integer Heisenberg group of triples (u, a, v) with u, v in Z^(m-1).

    (u1, a1, v1)(u2, a2, v2) = (u1 + u2, a1 + a2 + u1.v2, v1 + v2).
    """

    element_type = HeisenbergElem

    def __init__(
        self,
        m: int,
        modulus: int | None = None,
        descriptor: GroupDescriptor | None = None,
    ) -> None:
        if m < 2:
            raise ConstructionError(f"Heisenberg group needs m >= 2, got {m}")
        _check_modulus(modulus)
        super().__init__(descriptor or GroupDescriptor("heisenberg", (m,)))
        self.m = m
        self.dim = m - 1
        self.modulus = modulus

    def check(self, a: Any) -> None:
        super().check(a)
        if len(a.u) != self.dim or len(a.v) != self.dim:
            raise ElementTypeError(f"expected vectors of length {self.dim}")

    @property
    def identity(self) -> HeisenbergElem:
        zero = (0,) * self.dim
        return HeisenbergElem(zero, 0, zero)

    @property
    def order(self) -> int | None:
        return None if self.modulus is None else self.modulus ** (2 * self.dim + 1)

    def _center(self, a: int) -> int:
        return a if self.modulus is None else a % self.modulus

    def multiply(self, x: HeisenbergElem, y: HeisenbergElem) -> HeisenbergElem:
        self.check(x)
        self.check(y)
        dot = sum(p * q for p, q in zip(x.u, y.v))
        return HeisenbergElem(
            _reduce((p + q for p, q in zip(x.u, y.u)), self.modulus),
            self._center(x.a + y.a + dot),
            _reduce((p + q for p, q in zip(x.v, y.v)), self.modulus),
        )

    def inverse(self, x: HeisenbergElem) -> HeisenbergElem:
        self.check(x)
        dot = sum(p * q for p, q in zip(x.u, x.v))
        return HeisenbergElem(
            _reduce((-p for p in x.u), self.modulus),
            self._center(-x.a + dot),
            _reduce((-q for q in x.v), self.modulus),
        )

    def canonicalize(self, x: HeisenbergElem) -> HeisenbergElem:
        self.check(x)
        return HeisenbergElem(
            _reduce(x.u, self.modulus), self._center(x.a), _reduce(x.v, self.modulus)
        )

    def basic_generators(self) -> list[HeisenbergElem]:
        zero = (0,) * self.dim
        gens = []
        for i in range(self.dim):
            unit = _reduce(unit_vector(self.dim, i).coords, self.modulus)
            gens.append(HeisenbergElem(unit, 0, zero))
            gens.append(HeisenbergElem(zero, 0, unit))
        return gens

    def with_modulus(self, modulus: int) -> Heisenberg:
        return Heisenberg(
            self.m,
            _nested_modulus(self.modulus, modulus),
            GroupDescriptor("quotient", (self.descriptor, modulus)),
        )


class HeisenbergSemidirect(Group):
    """H_(2m-1) semidirect Z/m, where 1 acts by (u, a, v) -> (A^T u, a, A^-1 v).

    A is the companion matrix of 1 + x + ... + x^(m-1).
    """

    element_type = SemidirectElem

    def __init__(
        self,
        m: int,
        modulus: int | None = None,
        descriptor: GroupDescriptor | None = None,
    ) -> None:
        super().__init__(descriptor or GroupDescriptor("heisenberg-semidirect", (m,)))
        self.m = m
        self.modulus = modulus
        self.heisenberg = Heisenberg(m, modulus)
        matrix = companion_matrix(m)
        powers = [_identity_matrix(m - 1)]
        for _ in range(m - 1):
            powers.append(_matmul(powers[-1], matrix))
        self.transposed_powers = tuple(_transpose(p) for p in powers)
        # A^-k = A^(m-k)
        self.inverse_powers = tuple(powers[-k % m] for k in range(m))

    def check(self, a: Any) -> None:
        super().check(a)
        self.heisenberg.check(a.v)

    @property
    def identity(self) -> SemidirectElem:
        return SemidirectElem(self.heisenberg.identity, 0)

    @property
    def order(self) -> int | None:
        inner = self.heisenberg.order
        return None if inner is None else inner * self.m

    def act(self, k: int, h: HeisenbergElem) -> HeisenbergElem:
        k %= self.m
        if k == 0:
            return h
        return HeisenbergElem(
            _reduce(_matvec(self.transposed_powers[k], h.u), self.modulus),
            h.a,
            _reduce(_matvec(self.inverse_powers[k], h.v), self.modulus),
        )

    def multiply(self, a: SemidirectElem, b: SemidirectElem) -> SemidirectElem:
        self.check(a)
        self.check(b)
        return SemidirectElem(
            self.heisenberg.multiply(a.v, self.act(a.k, b.v)), (a.k + b.k) % self.m
        )

    def inverse(self, a: SemidirectElem) -> SemidirectElem:
        self.check(a)
        return SemidirectElem(
            self.act(-a.k, self.heisenberg.inverse(a.v)), -a.k % self.m
        )

    def canonicalize(self, a: SemidirectElem) -> SemidirectElem:
        self.check(a)
        return SemidirectElem(self.heisenberg.canonicalize(a.v), a.k % self.m)

    def basic_generators(self) -> list[SemidirectElem]:
        gens = [SemidirectElem(h, 0) for h in self.heisenberg.basic_generators()]
        gens.append(SemidirectElem(self.heisenberg.identity, 1 % self.m))
        return gens

    def with_modulus(self, modulus: int) -> HeisenbergSemidirect:
        return HeisenbergSemidirect(
            self.m,
            _nested_modulus(self.modulus, modulus),
            GroupDescriptor("quotient", (self.descriptor, modulus)),
        )


class Wreath(Group):
    """Lamplighter product H wr G.

    (L1, g1)(L2, g2) = (L1 . (g1 . L2), g1 g2), where (g . L)(x) = L(g^-1 x).
    """

    element_type = WreathElem

    def __init__(
        self, lamp: Group, base: Group, descriptor: GroupDescriptor | None = None
    ) -> None:
        if isinstance(base, Wreath):
            raise ConstructionError("wreath products over wreath bases are not supported")
        super().__init__(
            descriptor or GroupDescriptor("wreath", (lamp.descriptor, base.descriptor))
        )
        self.lamp = lamp
        self.base = base

    def check(self, a: Any) -> None:
        super().check(a)
        self.base.check(a.pos)

    @property
    def identity(self) -> WreathElem:
        return WreathElem({}, self.base.identity)

    @property
    def order(self) -> int | None:
        if self.lamp.order is None or self.base.order is None:
            return None
        return self.lamp.order**self.base.order * self.base.order

    def _light(self, lamps: dict, site: Any, value: Any) -> None:
        current = lamps.get(site)
        updated = value if current is None else self.lamp.multiply(current, value)
        if self.lamp.is_identity(updated):
            lamps.pop(site, None)
        else:
            lamps[site] = updated

    def multiply(self, a: WreathElem, b: WreathElem) -> WreathElem:
        self.check(a)
        self.check(b)
        lamps = dict(a.lamps)
        for key, value in b.lamps.items():
            self._light(lamps, self.base.multiply(a.pos, key), value)
        return WreathElem(lamps, self.base.multiply(a.pos, b.pos))

    def product(self, elements: Iterable[WreathElem]) -> WreathElem:
        # Accumulates in place; a walk step then costs O(|atom support|).
        lamps: dict = {}
        pos = self.base.identity
        for e in elements:
            for key, value in e.lamps.items():
                self._light(lamps, self.base.multiply(pos, key), value)
            pos = self.base.multiply(pos, e.pos)
        return WreathElem(lamps, pos)

    def inverse(self, a: WreathElem) -> WreathElem:
        self.check(a)
        back = self.base.inverse(a.pos)
        lamps = {
            self.base.multiply(back, key): self.lamp.inverse(value)
            for key, value in a.lamps.items()
        }
        return WreathElem(lamps, back)

    def canonicalize(self, a: WreathElem) -> WreathElem:
        self.check(a)
        lamps: dict = {}
        for key, value in a.lamps.items():
            self._light(lamps, self.base.canonicalize(key), self.lamp.canonicalize(value))
        return WreathElem(lamps, self.base.canonicalize(a.pos))

    def lamp_at(self, value: Any, site: Any = None) -> WreathElem:
        """The element value * delta_site with the lamplighter at the identity."""
        site = self.base.identity if site is None else site
        lamps = {} if self.lamp.is_identity(value) else {site: value}
        return WreathElem(lamps, self.base.identity)

    def move(self, g: Any) -> WreathElem:
        return WreathElem({}, g)

    def basic_generators(self) -> list[WreathElem]:
        return [self.lamp_at(h) for h in self.lamp.basic_generators()] + [
            self.move(g) for g in self.base.basic_generators()
        ]


class Product(Group):
    element_type = TupleElem

    def __init__(
        self, factors: Sequence[Group], descriptor: GroupDescriptor | None = None
    ) -> None:
        if not factors:
            raise ConstructionError("a direct product needs at least one factor")
        super().__init__(
            descriptor or GroupDescriptor("product", tuple(f.descriptor for f in factors))
        )
        self.factors = tuple(factors)

    def check(self, a: Any) -> None:
        super().check(a)
        if len(a.components) != len(self.factors):
            raise ElementTypeError(f"expected {len(self.factors)} components")

    @property
    def identity(self) -> TupleElem:
        return TupleElem(tuple(f.identity for f in self.factors))

    @property
    def order(self) -> int | None:
        orders = [f.order for f in self.factors]
        return None if None in orders else math.prod(orders)

    def multiply(self, a: TupleElem, b: TupleElem) -> TupleElem:
        self.check(a)
        self.check(b)
        return TupleElem(
            tuple(
                f.multiply(x, y)
                for f, x, y in zip(self.factors, a.components, b.components)
            )
        )

    def product(self, elements: Iterable[TupleElem]) -> TupleElem:
        columns = list(zip(*(e.components for e in elements)))
        if not columns:
            return self.identity
        return TupleElem(tuple(f.product(c) for f, c in zip(self.factors, columns)))

    def inverse(self, a: TupleElem) -> TupleElem:
        self.check(a)
        return TupleElem(tuple(f.inverse(x) for f, x in zip(self.factors, a.components)))

    def canonicalize(self, a: TupleElem) -> TupleElem:
        self.check(a)
        return TupleElem(
            tuple(f.canonicalize(x) for f, x in zip(self.factors, a.components))
        )

    def embed(self, index: int, element: Any) -> TupleElem:
        parts = [f.identity for f in self.factors]
        parts[index] = element
        return TupleElem(tuple(parts))

    def basic_generators(self) -> list[TupleElem]:
        return [
            self.embed(i, g)
            for i, f in enumerate(self.factors)
            for g in f.basic_generators()
        ]


class Symmetric(Group):
    """Sym(n) acting on 0..n-1, composed as (ab)(i) = a(b(i))."""

    element_type = Perm

    def __init__(self, n: int, descriptor: GroupDescriptor | None = None) -> None:
        if n < 1:
            raise ConstructionError(f"symmetric group needs n >= 1, got {n}")
        super().__init__(descriptor or GroupDescriptor("sym", (n,)))
        self.n = n

    def check(self, a: Any) -> None:
        super().check(a)
        if len(a.images) != self.n:
            raise ElementTypeError(f"expected a permutation of {self.n} points")

    @property
    def identity(self) -> Perm:
        return Perm(tuple(range(self.n)))

    @property
    def order(self) -> int:
        return math.factorial(self.n)

    def multiply(self, a: Perm, b: Perm) -> Perm:
        self.check(a)
        self.check(b)
        return Perm(tuple(a.images[i] for i in b.images))

    def inverse(self, a: Perm) -> Perm:
        self.check(a)
        images = [0] * self.n
        for i, j in enumerate(a.images):
            images[j] = i
        return Perm(tuple(images))

    def canonicalize(self, a: Perm) -> Perm:
        self.check(a)
        if sorted(a.images) != list(range(self.n)):
            raise ElementTypeError(f"{a.images} is not a permutation")
        return a

    def transposition(self, i: int, j: int) -> Perm:
        images = list(range(self.n))
        images[i], images[j] = j, i
        return Perm(tuple(images))

    def basic_generators(self) -> list[Perm]:
        return [
            self.transposition(i, j)
            for i, j in itertools.combinations(range(self.n), 2)
        ]


_UNITS = {
    ("1", "1"): (1, "1"),
    ("i", "i"): (-1, "1"),
    ("j", "j"): (-1, "1"),
    ("k", "k"): (-1, "1"),
    ("i", "j"): (1, "k"),
    ("j", "i"): (-1, "k"),
    ("j", "k"): (1, "i"),
    ("k", "j"): (-1, "i"),
    ("k", "i"): (1, "j"),
    ("i", "k"): (-1, "j"),
}


class Quaternion(Group):
    """The quaternion group Q8 = {+-1, +-i, +-j, +-k}."""

    element_type = QuaternionElem

    def __init__(self, descriptor: GroupDescriptor | None = None) -> None:
        super().__init__(descriptor or GroupDescriptor("quaternion"))

    @property
    def identity(self) -> QuaternionElem:
        return QuaternionElem(1, "1")

    @property
    def order(self) -> int:
        return 8

    def multiply(self, a: QuaternionElem, b: QuaternionElem) -> QuaternionElem:
        self.check(a)
        self.check(b)
        if a.unit == "1":
            sign, unit = 1, b.unit
        elif b.unit == "1":
            sign, unit = 1, a.unit
        else:
            sign, unit = _UNITS[(a.unit, b.unit)]
        return QuaternionElem(a.sign * b.sign * sign, unit)

    def inverse(self, a: QuaternionElem) -> QuaternionElem:
        self.check(a)
        return a if a.unit == "1" else QuaternionElem(-a.sign, a.unit)

    def canonicalize(self, a: QuaternionElem) -> QuaternionElem:
        self.check(a)
        return a

    def basic_generators(self) -> list[QuaternionElem]:
        return [QuaternionElem(1, "i"), QuaternionElem(1, "j")]


# Construction


def _int_arg(descriptor: GroupDescriptor, minimum: int = 1) -> int:
    params = descriptor.params
    if len(params) != 1 or not isinstance(params[0], int) or descriptor.children:
        raise ConstructionError(f"{descriptor.kind} takes exactly one integer")
    if params[0] < minimum:
        raise ConstructionError(f"{descriptor.kind} needs an integer >= {minimum}")
    return params[0]


def _no_args(descriptor: GroupDescriptor) -> None:
    if descriptor.args:
        raise ConstructionError(f"{descriptor.kind} takes no arguments")


def _build_semidirect(d: GroupDescriptor) -> Group:
    if len(d.args) == 2 and isinstance(d.args[0], tuple):
        matrix, m = d.args
        if not isinstance(m, int):
            raise ConstructionError("semidirect([[...]], m) needs an integer m")
        return Semidirect(matrix, m, descriptor=d)
    m = _int_arg(d, 2)
    return Semidirect(companion_matrix(m), m, descriptor=d)


def _build_wreath(d: GroupDescriptor) -> Group:
    if len(d.args) != 2 or len(d.children) != 2:
        raise ConstructionError("wreath takes a lamp group and a base group")
    lamp, base = (build_group(c) for c in d.children)
    return Wreath(lamp, base, d)


def _build_product(d: GroupDescriptor) -> Group:
    if d.params or not d.children:
        raise ConstructionError("product takes one or more groups")
    return Product([build_group(c) for c in d.children], d)


def _build_quotient(d: GroupDescriptor) -> Group:
    if len(d.args) != 2 or len(d.children) != 1 or not isinstance(d.args[1], int):
        raise ConstructionError("quotient takes a group and an integer modulus")
    base = build_group(d.children[0])
    group = base.with_modulus(d.args[1])
    group.descriptor = d
    return group


def _build_cyclotomic(d: GroupDescriptor) -> Group:
    m = _int_arg(d, 2)
    return Semidirect(cyclotomic_action_matrix(m), m, descriptor=d)


def _build_infinite_dihedral(d: GroupDescriptor) -> Group:
    _no_args(d)
    return Semidirect(companion_matrix(2), 2, descriptor=d)


def _build_extraspecial(d: GroupDescriptor) -> Group:
    _no_args(d)
    return Semidirect(companion_matrix(3), 3, 3, descriptor=d)


def _build_quaternion(d: GroupDescriptor) -> Group:
    _no_args(d)
    return Quaternion(d)


_BUILDERS = {
    "free": lambda d: FreeGroup(_int_arg(d), d),
    "lattice": lambda d: Lattice(_int_arg(d), descriptor=d),
    "cyclic": lambda d: Cyclic(_int_arg(d), d),
    "semidirect": _build_semidirect,
    "cyclotomic": _build_cyclotomic,
    "dihedral-infinite": _build_infinite_dihedral,
    "heisenberg": lambda d: Heisenberg(_int_arg(d, 2), descriptor=d),
    "heisenberg-semidirect": lambda d: HeisenbergSemidirect(_int_arg(d, 2), descriptor=d),
    "wreath": _build_wreath,
    "product": _build_product,
    "dihedral": lambda d: Semidirect(companion_matrix(2), 2, _int_arg(d, 2), descriptor=d),
    "sym": lambda d: Symmetric(_int_arg(d), d),
    "extraspecial3": _build_extraspecial,
    "quaternion": _build_quaternion,
    "quotient": _build_quotient,
}


def build_group(descriptor: GroupDescriptor | str) -> Group:
    """Build and validate the group handle of a descriptor.

    Args:
        descriptor: A GroupDescriptor or its text form.

    Returns:
        The group handle. Handles are cached per descriptor.

    Raises:
        ConstructionError: For unknown kinds, bad parameters or bad nesting.
    """
    if isinstance(descriptor, str):
        descriptor = parse_group(descriptor)
    return _build_cached(descriptor)


@functools.lru_cache(maxsize=256)
def _build_cached(descriptor: GroupDescriptor) -> Group:
    builder = _BUILDERS.get(descriptor.kind)
    if builder is None:
        raise ConstructionError(f"unknown group kind {descriptor.kind!r}")
    group = builder(descriptor)
    logger.debug(f"Built {group!r}")
    return group


# Derived operations


def power(G: Group, a: Any, k: int) -> Any:
    """a^k by repeated squaring; negative k uses the inverse."""
    if k < 0:
        a, k = G.inverse(a), -k
    result = G.identity
    while k:
        if k & 1:
            result = G.multiply(result, a)
        k >>= 1
        if k:
            a = G.multiply(a, a)
    return result


def commutator(G: Group, a: Any, b: Any) -> Any:
    """[a, b] = a b a^-1 b^-1."""
    return G.product((a, b, G.inverse(a), G.inverse(b)))


def conjugate(G: Group, a: Any, b: Any) -> Any:
    """a^b = b a b^-1."""
    return G.product((b, a, G.inverse(b)))


def order_divides(G: Group, a: Any, k: int) -> bool:
    return G.is_identity(power(G, a, k))


# Generating sets


@dataclass(frozen=True)
class GeneratingSet:
    """Atoms of a uniform step distribution.

    Args:
        atoms: Step elements; the set is closed under inverse.
        contains_identity: Whether the identity is an atom (lazy walks).
    """

    atoms: tuple[Any, ...]
    contains_identity: bool = field(default=False)

    def __len__(self) -> int:
        return len(self.atoms)


def symmetrize(G: Group, atoms: Iterable[Any], lazy: bool = False) -> GeneratingSet:
    """Close ``atoms`` under inverse, dropping repeats and keeping order."""
    seen: dict[Any, None] = {}
    if lazy:
        seen[G.identity] = None
    for atom in atoms:
        atom = G.canonicalize(atom)
        seen.setdefault(atom, None)
        seen.setdefault(G.inverse(atom), None)
    result = tuple(seen)
    return GeneratingSet(result, G.identity in seen)


def standard_generators(G: Group, lazy: bool = True) -> GeneratingSet:
    return symmetrize(G, G.basic_generators(), lazy)


def switch_move_switch_generators(G: Group, lazy: bool = False) -> GeneratingSet:
    """Atoms s1 m s2 with lamp switches s1, s2 (or nothing) around a move m."""
    if not isinstance(G, Wreath):
        raise ConstructionError("switch-move-switch generators need a wreath product")
    lamp_moves = standard_generators(G.lamp, lazy=True).atoms
    switches = [G.lamp_at(h) for h in lamp_moves]
    moves = [
        G.move(g)
        for g in standard_generators(G.base, lazy=False).atoms
        if not G.base.is_identity(g)
    ]
    atoms = [G.product((s1, m, s2)) for s1 in switches for m in moves for s2 in switches]
    return symmetrize(G, atoms, lazy)


def _shifted_parts(G: Group, k: int) -> tuple[list[WreathElem], list[WreathElem]]:
    if not isinstance(G, Wreath):
        raise ConstructionError("shifted generators need a wreath product")
    base = G.base
    if not isinstance(base, Lattice) or base.dim != 5 or base.modulus is not None:
        raise ConstructionError("shifted generators need the base group Z^5")
    lamp_gens = G.lamp.basic_generators()
    if len(lamp_gens) != 2:
        raise ConstructionError("shifted generators need a 2-generated lamp group")
    if k < 0:
        raise ConstructionError(f"offset must be nonnegative, got {k}")
    a, b = lamp_gens
    far = unit_vector(5, 0, k)
    switches = [
        G.lamp_at(a),
        G.lamp_at(G.lamp.inverse(a)),
        G.lamp_at(b, far),
        G.lamp_at(G.lamp.inverse(b), far),
    ]
    moves = [G.move(unit_vector(5, i, s)) for i in range(5) for s in (1, -1)]
    return switches, moves


def shifted_wreath_generators(G: Group, k: int) -> GeneratingSet:
    """The 160 atoms s1 m s2 with s1, s2 in {a^+-1 delta_0, b^+-1 delta_(k e1)}.

    Args:
        G: H wr Z^5 with a 2-generated lamp group H = <a, b>.
        k: Offset of the b lamps along the first axis.

    Returns:
        Symmetric, non-lazy generating set of exactly 160 atoms.
    """
    switches, moves = _shifted_parts(G, k)
    atoms = tuple(
        G.product((s1, m, s2)) for s1 in switches for m in moves for s2 in switches
    )
    return GeneratingSet(atoms, False)


def fourteen_wreath_generators(G: Group, k: int) -> GeneratingSet:
    """The small variant: a^+-1 delta_0, b^+-1 delta_(k e1) and the moves +-e_i."""
    switches, moves = _shifted_parts(G, k)
    return GeneratingSet(tuple(switches + moves), False)


def product_generators(
    G: Group, sets: Sequence[GeneratingSet], lazy: bool = False
) -> GeneratingSet:
    """Union of the factor generating sets embedded coordinate by coordinate."""
    if not isinstance(G, Product) or len(sets) != len(G.factors):
        raise ConstructionError("need one generating set per factor of a product")
    atoms = [G.embed(i, atom) for i, s in enumerate(sets) for atom in s.atoms]
    return symmetrize(G, atoms, lazy)


def generating_power(G: Group, S: GeneratingSet, k: int) -> GeneratingSet:
    """S^k: all products of k atoms of S."""
    if k < 1:
        raise ConstructionError(f"generating power needs k >= 1, got {k}")
    layer: dict[Any, None] = dict.fromkeys(S.atoms)
    for _ in range(k - 1):
        layer = dict.fromkeys(G.multiply(x, s) for x in layer for s in S.atoms)
    return GeneratingSet(tuple(layer), G.identity in layer)


# Serialization


@functools.singledispatch
def to_json(element: Any) -> Any:
    """JSON-ready form of an element."""
    raise ElementTypeError(f"cannot serialize {type(element).__name__}")


@to_json.register
def _(element: FreeWord) -> Any:
    return {"free": [list(letter) for letter in element.letters]}


@to_json.register
def _(element: LatticeVec) -> Any:
    return {"lattice": list(element.coords)}


@to_json.register
def _(element: CyclicResidue) -> Any:
    return {"cyclic": [element.value, element.modulus]}


@to_json.register
def _(element: HeisenbergElem) -> Any:
    return {"heisenberg": [list(element.u), element.a, list(element.v)]}


@to_json.register
def _(element: SemidirectElem) -> Any:
    v = to_json(element.v) if isinstance(element.v, HeisenbergElem) else list(element.v)
    return {"semidirect": [v, element.k]}


@to_json.register
def _(element: WreathElem) -> Any:
    lamps = sorted(
        ([to_json(k), to_json(v)] for k, v in element.lamps.items()),
        key=lambda pair: json.dumps(pair[0], sort_keys=True),
    )
    return {"wreath": {"lamps": lamps, "pos": to_json(element.pos)}}


@to_json.register
def _(element: TupleElem) -> Any:
    return {"tuple": [to_json(c) for c in element.components]}


@to_json.register
def _(element: Perm) -> Any:
    return {"perm": list(element.images)}


@to_json.register
def _(element: QuaternionElem) -> Any:
    return {"quaternion": [element.sign, element.unit]}


def canonical_bytes(G: Group, element: Any) -> bytes:
    """Byte-stable, versioned encoding of the canonical form of ``element``."""
    payload = {"format": SERIAL_VERSION, "element": to_json(G.canonicalize(element))}
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
