"""Path intersections, occupation of balls, ball enumeration and sparse systems."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np
from loguru import logger

import config
from errors import BudgetExceededError, ConfigError, ConstructionError
from groups import GeneratingSet, Group, Lattice, standard_generators
from laws import LawExpr, evaluate_word, flatten, format_law
from models import Estimate, OccupationProfile
from walks import (
    derive_stream,
    lattice_trace,
    lattice_word_path,
    make_estimate,
    run_trials,
    run_walk,
    wilson_interval,
    word_path,
)

# bounds are checked against many systems at once
Z_BOUND_CHECK = 3.29


class VisitSet:
    """The distinct points of a path, held in canonical form."""

    def __init__(self, points: Iterable[Any] = ()) -> None:
        self._points = set(points)

    @classmethod
    def from_path(cls, G: Group, points: Iterable[Any]) -> VisitSet:
        return cls(G.canonicalize(p) for p in points)

    def __contains__(self, point: Any) -> bool:
        return point in self._points

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def meets(self, G: Group, other: Iterable[Any], shift: Any = None) -> bool:
        """Whether some point p of ``other`` has p * shift in this set."""
        if shift is None:
            return any(G.canonicalize(p) in self._points for p in other)
        return any(G.multiply(p, shift) in self._points for p in other)


def _lattice_keys(points: np.ndarray, bound: int) -> np.ndarray:
    width = 2 * bound + 1
    return np.ravel_multi_index(tuple((points + bound).T), (width,) * points.shape[1])


def lattice_paths_meet(first: np.ndarray, second: np.ndarray, offset: np.ndarray) -> bool:
    """Whether the point sets of two Z^d paths meet after translating ``second``."""
    moved = second + offset
    bound = int(max(np.abs(first).max(initial=0), np.abs(moved).max(initial=0)))
    if (2 * bound + 1) ** first.shape[1] >= 2**62:
        return bool(set(map(tuple, first.tolist())) & set(map(tuple, moved.tolist())))
    # Set built on the shorter path, looked up with the longer one.
    short, long = sorted((first, moved), key=len)
    return bool(np.isin(_lattice_keys(long, bound), _lattice_keys(short, bound)).any())


# Loop intersections


def _law_variables(expr: LawExpr) -> int:
    return max(gen for gen, _ in flatten(expr).letters)


def _loop_kernel(payload: tuple, start: int, stop: int) -> int:
    lattice, gens, first, second, n, offset, seed, key = payload
    counts = (
        max(gen for gen, _ in first.letters),
        max(gen for gen, _ in second.letters),
    )
    hits = 0
    for t in range(start, stop):
        paths = []
        for side, word in enumerate((first, second)):
            traces = [
                lattice_trace(lattice, gens, n, derive_stream(seed, *key, t, side, i))
                for i in range(counts[side])
            ]
            paths.append(lattice_word_path(word, traces))
        hits += lattice_paths_meet(paths[0], paths[1], offset)
    return hits


def loop_intersection_prob(
    first: LawExpr,
    second: LawExpr,
    dim: int,
    n: int,
    offset: Sequence[int],
    trials: int,
    seed: int,
    lazy: bool = True,
    threads: int | None = None,
    stream_key: tuple[int, ...] = (),
) -> Estimate:
    """Estimate Pr(gamma meets gamma' + v) for word paths on Z^dim.

    gamma and gamma' are the paths of two laws along independent families of
    n-step walks.

    Raises:
        ConfigError: If the offset does not have ``dim`` coordinates.
    """
    if len(offset) != dim:
        raise ConfigError(f"offset {tuple(offset)} does not live in Z^{dim}")
    lattice = Lattice(dim)
    gens = standard_generators(lattice, lazy)
    payload = (
        lattice,
        gens,
        flatten(first),
        flatten(second),
        n,
        np.asarray(offset, dtype=np.int64),
        seed,
        tuple(stream_key),
    )
    hits = run_trials(_loop_kernel, payload, trials, threads)
    return make_estimate(
        hits, trials, seed, n=n, law=f"{format_law(first)} | {format_law(second)}"
    )


def _two_walk_kernel(payload: tuple, start: int, stop: int) -> int:
    lattice, gens, r, horizon, seed = payload
    offset = np.zeros(lattice.dim, dtype=np.int64)
    offset[0] = r
    hits = 0
    for t in range(start, stop):
        first = lattice_trace(lattice, gens, horizon, derive_stream(seed, t, 0))
        second = lattice_trace(lattice, gens, horizon, derive_stream(seed, t, 1))
        hits += lattice_paths_meet(first, second, offset)
    return hits


def walk_intersection_prob(
    dim: int,
    r: int,
    trials: int,
    seed: int,
    horizon_factor: int | None = None,
    threads: int | None = None,
) -> Estimate:
    """Pr(two simple random walks started r apart ever meet).

    Both walks are truncated at horizon_factor * r^2 steps, by default
    ``config.GROUPLAW_HORIZON_FACTOR``.
    """
    if r < 1:
        raise ConfigError(f"start distance must be positive, got {r}")
    horizon_factor = horizon_factor or config.GROUPLAW_HORIZON_FACTOR
    lattice = Lattice(dim)
    gens = standard_generators(lattice, lazy=False)
    horizon = horizon_factor * r * r
    hits = run_trials(
        _two_walk_kernel, (lattice, gens, r, horizon, seed), trials, threads
    )
    return make_estimate(hits, trials, seed, n=horizon)


def _coset_kernel(payload: tuple, start: int, stop: int) -> int:
    G, gens, first, second, n, shift, seed = payload
    hits = 0
    for t in range(start, stop):
        paths = []
        for side, word in enumerate((first, second)):
            count = max(gen for gen, _ in word.letters)
            traces = [
                run_walk(G, gens, n, derive_stream(seed, t, side, i)) for i in range(count)
            ]
            paths.append(word_path(G, word, traces).points)
        visits = VisitSet.from_path(G, paths[0])
        hits += visits.meets(G, paths[1], shift)
    return hits


def coset_path_intersection_prob(
    G: Group,
    S: GeneratingSet,
    first: LawExpr,
    second: LawExpr,
    shift: Any,
    n: int,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> Estimate:
    """Estimate Pr(gamma meets gamma' q) for word paths in a general group.

    gamma' q is the right translate of the second path by ``shift``.
    """
    payload = (G, S, flatten(first), flatten(second), n, G.canonicalize(shift), seed)
    hits = run_trials(_coset_kernel, payload, trials, threads)
    return make_estimate(
        hits,
        trials,
        seed,
        n=n,
        law=f"{format_law(first)} | {format_law(second)}",
        group=str(G.descriptor),
    )


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x over points with y > 0."""
    points = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(points) < 2:
        raise ConfigError("a log-log fit needs two points with positive values")
    logs = np.log(np.array(points, dtype=float))
    return float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])


def fit_estimate_slope(
    xs: Sequence[float], estimates: Sequence[Estimate]
) -> tuple[float, list[float]]:
    """Log-log slope of p_hat against x over the estimates whose interval excludes 0.

    Returns:
        The slope and the x values it was fitted on.

    Raises:
        ConfigError: If fewer than two intervals exclude 0.
    """
    kept = [(x, e.p_hat) for x, e in zip(xs, estimates) if e.ci_lo > 0]
    if len(kept) < 2:
        raise ConfigError("a slope needs two estimates whose interval excludes 0")
    return fit_loglog_slope(*zip(*kept)), [x for x, _ in kept]


# Balls


@dataclass
class Ball:
    """Ball around the identity in the word metric of a generating set.

    Args:
        distances: Element to word length, in breadth-first order.
        growth: |B(r)| for r = 0..radius.
    """

    distances: dict[Any, int]
    growth: list[int]

    @property
    def radius(self) -> int:
        return len(self.growth) - 1


def ball_enumerate(
    G: Group, S: GeneratingSet, radius: int, budget: int | None = None
) -> Ball:
    """Breadth-first enumeration of S^0 u ... u S^radius.

    Raises:
        BudgetExceededError: If the ball holds more elements than ``budget``.
    """
    if radius < 0:
        raise ConfigError(f"radius must be nonnegative, got {radius}")
    budget = budget or config.GROUPLAW_ELEMENT_BUDGET
    distances = {G.identity: 0}
    frontier = deque([G.identity])
    growth = [1]
    for r in range(1, radius + 1):
        layer = deque()
        for g in frontier:
            for atom in S.atoms:
                h = G.multiply(g, atom)
                if h not in distances:
                    distances[h] = r
                    layer.append(h)
            if len(distances) > budget:
                raise BudgetExceededError(
                    f"ball of radius {r} in {G.descriptor} exceeds {budget} elements"
                )
        frontier = layer
        growth.append(len(distances))
    logger.debug(f"Ball of radius {radius} in {G.descriptor}: {growth[-1]} elements")
    return Ball(distances, growth)


def _uniform_kernel(payload: tuple, start: int, stop: int) -> int:
    G, elements, word, variables, seed = payload
    successes = 0
    for t in range(start, stop):
        picks = derive_stream(seed, t).integers(0, len(elements), size=variables)
        if G.is_identity(evaluate_word(G, word, [elements[i] for i in picks])):
            successes += 1
    return successes


def uniform_ball_estimate(
    G: Group,
    S: GeneratingSet,
    radius: int,
    expr: LawExpr,
    trials: int,
    seed: int,
    threads: int | None = None,
    budget: int | None = None,
) -> Estimate:
    """Estimate a law probability for independent uniform elements of B(radius)."""
    ball = ball_enumerate(G, S, radius, budget)
    word = flatten(expr)
    payload = (G, list(ball.distances), word, _law_variables(expr), seed)
    successes = run_trials(_uniform_kernel, payload, trials, threads)
    return make_estimate(
        successes, trials, seed, law=format_law(expr), group=str(G.descriptor)
    )


# Occupation


def _standard_lattice(G: Group, S: GeneratingSet) -> bool:
    if not isinstance(G, Lattice) or G.modulus is not None:
        return False
    units = {a.coords for a in S.atoms if any(a.coords)}
    expected = set()
    for i in range(G.dim):
        for sign in (1, -1):
            expected.add(tuple(sign if j == i else 0 for j in range(G.dim)))
    return units == expected


def _occupation_kernel(payload: tuple, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    G, gens, word, n, radii, distinct, distances, seed = payload
    variables = max(gen for gen, _ in word.letters)
    radii = np.asarray(radii)
    sums = np.zeros(len(radii), dtype=np.int64)
    squares = np.zeros(len(radii), dtype=np.int64)
    for t in range(start, stop):
        streams = [derive_stream(seed, t, i) for i in range(variables)]
        if distances is None:
            traces = [lattice_trace(G, gens, n, s) for s in streams]
            path = lattice_word_path(word, traces)
            if distinct:
                path = np.unique(path, axis=0)
            lengths = np.abs(path).sum(axis=1)
        else:
            traces = [run_walk(G, gens, n, s) for s in streams]
            points = word_path(G, word, traces).points
            if distinct:
                points = list(VisitSet.from_path(G, points))
            lengths = np.array(
                [distances.get(G.canonicalize(p), radii[-1] + 1) for p in points]
            )
        counts = (lengths[None, :] <= radii[:, None]).sum(axis=1)
        sums += counts
        squares += counts * counts
    return sums, squares


def occupation_profile(
    G: Group,
    S: GeneratingSet,
    expr: LawExpr,
    n: int,
    radii: Sequence[int],
    trials: int,
    seed: int,
    distinct: bool = False,
    threads: int | None = None,
) -> OccupationProfile:
    """Mean number of word-path points inside B(identity, r), for each r.

    Time points of the path are counted unless ``distinct`` is set. On Z^d
    with the standard generators the word metric is the l1 norm; elsewhere
    the ball is enumerated.

    Raises:
        ConfigError: If the radii are not strictly increasing.
    """
    radii = list(radii)
    if not radii or radii[0] < 0 or any(a >= b for a, b in zip(radii, radii[1:])):
        raise ConfigError(f"radii must be strictly increasing, got {radii}")
    distances = None
    if not _standard_lattice(G, S):
        distances = ball_enumerate(G, S, radii[-1]).distances
    payload = (G, S, flatten(expr), n, radii, distinct, distances, seed)
    sums, squares = run_trials(
        _occupation_kernel,
        payload,
        trials,
        threads,
        combine=lambda x, y: (x[0] + y[0], x[1] + y[1]),
    )
    means = sums / trials
    variance = np.maximum(squares / trials - means**2, 0.0) * trials / max(trials - 1, 1)
    return OccupationProfile(
        radii=radii,
        mean_counts=[float(m) for m in means],
        stderr=[float(s) for s in np.sqrt(variance / trials)],
        trials=trials,
        distinct=distinct,
    )


# Sparse systems


@dataclass
class SparseSystem:
    """Linear system A X = v over Z/l with independent random X.

    Args:
        matrix: m x m' integer matrix with entries in 0..l-1.
        modulus: l.
        k: Bound on the nonzeros of every row and every column.
        target: v, length m.
        distributions: m' x l array; row j is the law of X_j.
        epsilon: No X_j takes a single value with probability above 1 - epsilon.
    """

    matrix: np.ndarray
    modulus: int
    k: int
    target: np.ndarray
    distributions: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.int64) % self.modulus
        self.target = np.asarray(self.target, dtype=np.int64) % self.modulus
        self.distributions = np.asarray(self.distributions, dtype=float)
        nonzero = self.matrix != 0
        rows, columns = self.matrix.shape
        if self.modulus < 2 or self.k < 1:
            raise ConstructionError("sparse system needs l >= 2 and k >= 1")
        if not nonzero.any(axis=1).all():
            raise ConstructionError("sparse system has an identically zero row")
        if nonzero.sum(axis=1).max() > self.k or nonzero.sum(axis=0).max() > self.k:
            raise ConstructionError(f"a row or column has more than {self.k} nonzeros")
        if self.target.shape != (rows,):
            raise ConstructionError("target length does not match the matrix")
        if self.distributions.shape != (columns, self.modulus):
            raise ConstructionError("need one distribution over Z/l per variable")
        if not np.allclose(self.distributions.sum(axis=1), 1.0):
            raise ConstructionError("variable distributions must sum to 1")
        if not 0 < self.epsilon <= 1:
            raise ConstructionError("epsilon must lie in (0, 1]")
        if self.distributions.max() > 1 - self.epsilon + 1e-12:
            raise ConstructionError("a variable exceeds the point-mass bound 1 - epsilon")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def bound(self) -> float:
        """(1 - epsilon)^ceil(m / k^2)."""
        return (1 - self.epsilon) ** math.ceil(self.rows / self.k**2)


class SparseHit(NamedTuple):
    estimate: Estimate
    bound: float
    bound_satisfied: bool


def _sparse_kernel(payload: tuple, start: int, stop: int) -> int:
    system, seed = payload
    cdf = np.cumsum(system.distributions, axis=1)
    cdf[:, -1] = 1.0
    hits = 0
    for t in range(start, stop):
        u = derive_stream(seed, t).random(cdf.shape[0])
        x = np.array([np.searchsorted(row, value, side="right") for row, value in zip(cdf, u)])
        hits += bool(np.all((system.matrix @ x - system.target) % system.modulus == 0))
    return hits


def sparse_system_hit_prob(
    system: SparseSystem, trials: int, seed: int, threads: int | None = None
) -> SparseHit:
    """Estimate Pr(A X = v) and compare it with (1 - epsilon)^ceil(m / k^2).

    The bound counts as satisfied unless the 99.9% Wilson lower bound exceeds it.
    """
    hits = run_trials(_sparse_kernel, (system, seed), trials, threads)
    estimate = make_estimate(hits, trials, seed)
    lower, _ = wilson_interval(hits, trials, z=Z_BOUND_CHECK)
    return SparseHit(estimate, system.bound, lower <= system.bound)


def random_sparse_system(
    m: int, modulus: int, k: int, stream: np.random.Generator
) -> SparseSystem:
    """Random m x m system whose rows and columns have at most k nonzeros."""
    matrix = np.zeros((m, m), dtype=np.int64)
    capacity = np.full(m, k)
    for row in range(m):
        open_columns = np.flatnonzero(capacity > 0)
        size = min(int(stream.integers(1, k + 1)), len(open_columns))
        for column in stream.choice(open_columns, size=size, replace=False):
            matrix[row, column] = stream.integers(1, modulus)
            capacity[column] -= 1
    distributions = np.empty((m, modulus))
    for j in range(m):
        if stream.random() < 0.5:
            distributions[j] = 1.0 / modulus
        else:
            distributions[j] = stream.dirichlet(np.ones(modulus))
    epsilon = 1.0 - float(distributions.max())
    target = stream.integers(0, modulus, size=m)
    return SparseSystem(matrix, modulus, k, target, distributions, epsilon)
