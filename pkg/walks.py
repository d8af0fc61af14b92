"""Random walks on groups, word paths and Monte Carlo law probabilities.

Every trial draws from its own counter-based stream derived from
(seed, key, trial, variable), so results do not depend on how trials are
split across worker processes.
"""

from __future__ import annotations

import math
import operator
from collections import Counter
from dataclasses import dataclass, field
from functools import reduce
from multiprocessing import Pool
from typing import Any, Callable, Sequence

import numpy as np
from loguru import logger

import config
from errors import ArityError, ConfigError, ConstructionError
from groups import FreeWord, GeneratingSet, Group, Lattice, power, to_json
from laws import LawExpr, evaluate_word, flatten, format_law, nilpotent_law, simple_products
from models import CurvePoint, Estimate, GoodnessResult

MASK64 = (1 << 64) - 1
Z95 = 1.96


def derive_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox stream for a (seed, path) pair.

    Args:
        seed: Root seed; reduced to 64 bits.
        path: Nonnegative integers naming the stream, e.g. (trial, variable).

    Returns:
        A numpy Generator that depends only on seed and path.
    """
    sequence = np.random.SeedSequence(seed & MASK64, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(sequence))


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Args:
        successes: Number of successful trials.
        trials: Total number of trials.
        z: Normal quantile; 1.96 gives a 95% interval.

    Returns:
        (lower, upper), clamped to [0, 1] and containing successes / trials.
    """
    if trials == 0:
        return (0.0, 1.0)
    p_hat = successes / trials
    denominator = 1 + z**2 / trials
    center = (p_hat + z**2 / (2 * trials)) / denominator
    margin = (z / denominator) * math.sqrt(
        p_hat * (1 - p_hat) / trials + z**2 / (4 * trials**2)
    )
    lower = max(0.0, min(center - margin, p_hat))
    upper = min(1.0, max(center + margin, p_hat))
    return (lower, upper)


def make_estimate(successes: int, trials: int, seed: int, **labels: Any) -> Estimate:
    lower, upper = wilson_interval(successes, trials)
    return Estimate(
        successes=successes,
        trials=trials,
        p_hat=successes / trials,
        ci_lo=lower,
        ci_hi=upper,
        seed=seed,
        **labels,
    )


# Parallel trials


Kernel = Callable[[Any, int, int], Any]


def _run_chunk(task: tuple[Kernel, Any, int, int]) -> Any:
    kernel, payload, start, stop = task
    return kernel(payload, start, stop)


def run_trials(
    kernel: Kernel,
    payload: Any,
    trials: int,
    threads: int | None = None,
    combine: Callable[[Any, Any], Any] = operator.add,
) -> Any:
    """Run ``kernel(payload, start, stop)`` over trial ranges and combine the parts.

    Kernels must be module-level functions so worker processes can import
    them. Parts are combined in trial order.

    Args:
        kernel: Function computing the result of trials start..stop-1.
        payload: Picklable arguments shared by all chunks.
        trials: Total number of trials.
        threads: Worker processes; 1 runs inline.
        combine: Associative reduction of chunk results.

    Returns:
        The combined result.
    """
    threads = threads or config.GROUPLAW_THREADS
    chunks = max(1, min(trials, threads * 4))
    size = math.ceil(trials / chunks)
    tasks = [
        (kernel, payload, start, min(start + size, trials))
        for start in range(0, trials, size)
    ]
    if threads <= 1 or len(tasks) == 1:
        parts = [_run_chunk(task) for task in tasks]
    else:
        with Pool(processes=min(threads, len(tasks))) as pool:
            parts = pool.map(_run_chunk, tasks)
    return reduce(combine, parts)


# Walks


def _draw(S: GeneratingSet, n: int, stream: np.random.Generator) -> np.ndarray:
    if not S.atoms:
        raise ConstructionError("cannot walk with an empty generating set")
    return stream.integers(0, len(S.atoms), size=n)


def run_walk(
    G: Group, S: GeneratingSet, n: int, stream: np.random.Generator
) -> list[Any]:
    """Right random walk R_0 .. R_n with R_(t+1) = R_t x_t."""
    current = G.identity
    trace = [current]
    for choice in _draw(S, n, stream):
        current = G.multiply(current, S.atoms[choice])
        trace.append(current)
    return trace


def walk_endpoint(
    G: Group, S: GeneratingSet, n: int, stream: np.random.Generator
) -> Any:
    """R_n alone; consumes the stream exactly as run_walk does."""
    return G.product(S.atoms[choice] for choice in _draw(S, n, stream))


@dataclass
class PathTrace:
    """Cayley-graph path of a word along walk traces.

    Args:
        points: gamma_0 .. gamma_(l n).
        boundaries: Indices j n where letter segments meet.
    """

    points: list[Any]
    boundaries: tuple[int, ...] = field(default=())


def _letters(expr: LawExpr | FreeWord) -> FreeWord:
    return expr if isinstance(expr, FreeWord) else flatten(expr)


def word_path(G: Group, expr: LawExpr | FreeWord, traces: Sequence[list[Any]]) -> PathTrace:
    """Path traced by a word when its letters are replaced by walks.

    A letter a^+1 appends P R_k for k = 1..n, where P is the point reached so
    far; a letter a^-1 appends P R_n^-1 R_(n-k), walking the trace backwards.

    Args:
        G: The group.
        expr: Law, or an already reduced word.
        traces: One trace R_0..R_n per variable, all of equal length.

    Returns:
        The path; its last point is the word evaluated at the trace endpoints.

    Raises:
        ArityError: If traces are missing or have different lengths.
    """
    word = _letters(expr)
    needed = max(gen for gen, _ in word.letters)
    if len(traces) < needed:
        raise ArityError(f"word needs {needed} walks, got {len(traces)}")
    n = len(traces[0]) - 1
    if any(len(trace) != n + 1 for trace in traces):
        raise ArityError("all walk traces must have the same length")

    points = [G.identity]
    boundaries = [0]
    start = G.identity
    for gen, sign in word.letters:
        trace = traces[gen - 1]
        if sign > 0:
            segment = (G.multiply(start, trace[k]) for k in range(1, n + 1))
        else:
            base = G.multiply(start, G.inverse(trace[n]))
            segment = (G.multiply(base, trace[n - k]) for k in range(1, n + 1))
        points.extend(segment)
        start = points[-1]
        boundaries.append(len(points) - 1)
    return PathTrace(points, tuple(boundaries))


def lattice_trace(
    G: Lattice, S: GeneratingSet, n: int, stream: np.random.Generator
) -> np.ndarray:
    """run_walk on Z^d as an (n + 1, d) integer array."""
    steps = np.array([atom.coords for atom in S.atoms], dtype=np.int64)
    path = np.zeros((n + 1, G.dim), dtype=np.int64)
    np.cumsum(steps[_draw(S, n, stream)], axis=0, out=path[1:])
    return path


def lattice_word_path(word: FreeWord, traces: Sequence[np.ndarray]) -> np.ndarray:
    """word_path on Z^d for traces from lattice_trace, as an (l n + 1, d) array."""
    n = traces[0].shape[0] - 1
    segments = [np.zeros((1, traces[0].shape[1]), dtype=np.int64)]
    start = segments[0][0]
    for gen, sign in word.letters:
        trace = traces[gen - 1]
        if sign > 0:
            segment = start + trace[1:]
        else:
            segment = start - trace[n] + trace[:n][::-1]
        segments.append(segment)
        start = segment[-1]
    return np.concatenate(segments)


# Law probabilities


@dataclass(frozen=True)
class _LawPayload:
    group: Group
    gens: GeneratingSet
    word: FreeWord
    variables: int
    n: int
    seed: int
    key: tuple[int, ...]


def _law_kernel(payload: _LawPayload, start: int, stop: int) -> int:
    G = payload.group
    successes = 0
    for t in range(start, stop):
        endpoints = [
            walk_endpoint(
                G, payload.gens, payload.n, derive_stream(payload.seed, *payload.key, t, i)
            )
            for i in range(payload.variables)
        ]
        if G.is_identity(evaluate_word(G, payload.word, endpoints)):
            successes += 1
    return successes


def estimate_law(
    G: Group,
    S: GeneratingSet,
    expr: LawExpr,
    n: int,
    trials: int,
    seed: int,
    threads: int | None = None,
    stream_key: tuple[int, ...] = (),
) -> Estimate:
    """Estimate the probability that d independent n-step walks satisfy a law.

    Args:
        G: The group.
        S: Step atoms, sampled uniformly.
        expr: The law.
        n: Walk length.
        trials: Number of independent d-tuples of walks.
        seed: Root seed.
        threads: Worker processes.
        stream_key: Extra stream namespace, so related estimates use disjoint streams.

    Returns:
        The estimate with its Wilson interval.
    """
    word = flatten(expr, allow_empty=True)
    variables = max((gen for gen, _ in word.letters), default=0)
    payload = _LawPayload(G, S, word, variables, n, seed, tuple(stream_key))
    successes = run_trials(_law_kernel, payload, trials, threads)
    estimate = make_estimate(
        successes,
        trials,
        seed,
        n=n,
        law=format_law(expr),
        group=str(G.descriptor),
    )
    logger.debug(
        f"{estimate.law} on {estimate.group} at n={n}: {successes}/{trials}"
    )
    return estimate


def estimate_curve(
    G: Group,
    S: GeneratingSet,
    expr: LawExpr,
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    threads: int | None = None,
) -> list[CurvePoint]:
    """Law probabilities over a grid of walk lengths.

    The running maximum is the reported proxy for the limsup in n; the
    running minimum is reported alongside it.

    Raises:
        ConfigError: If the grid is empty or not strictly increasing.
    """
    if not n_grid or any(a >= b for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError(f"n grid must be strictly increasing, got {list(n_grid)}")
    points = []
    running_max, running_min = 0.0, 1.0
    for n in n_grid:
        estimate = estimate_law(G, S, expr, n, trials, seed, threads, stream_key=(n,))
        running_max = max(running_max, estimate.p_hat)
        running_min = min(running_min, estimate.p_hat)
        points.append(
            CurvePoint(
                n=n, estimate=estimate, running_max=running_max, running_min=running_min
            )
        )
    return points


# Good quadruples


@dataclass
class _Tally:
    good: int = 0
    commuting: int = 0
    counterexamples: list = field(default_factory=list)

    def __add__(self, other: _Tally) -> _Tally:
        return _Tally(
            self.good + other.good,
            self.commuting + other.commuting,
            self.counterexamples + other.counterexamples,
        )


def is_good(G: Group, quadruple: Sequence[Any], words: Sequence[FreeWord]) -> bool:
    """True when every simple product of the quadruple cubes to the identity."""
    return all(
        G.is_identity(power(G, evaluate_word(G, word, quadruple), 3)) for word in words
    )


def _goodness_kernel(payload: tuple, start: int, stop: int) -> _Tally:
    G, S, n, seed = payload
    words = [flatten(e) for e in simple_products()]
    target = flatten(nilpotent_law(3))
    tally = _Tally()
    for t in range(start, stop):
        quadruple = [walk_endpoint(G, S, n, derive_stream(seed, t, i)) for i in range(4)]
        if not is_good(G, quadruple, words):
            continue
        tally.good += 1
        if G.is_identity(evaluate_word(G, target, quadruple)):
            tally.commuting += 1
        else:
            tally.counterexamples.append([to_json(g) for g in quadruple])
    return tally


def estimate_goodness(
    G: Group,
    S: GeneratingSet,
    n: int,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> GoodnessResult:
    """Sample quadruples of walk endpoints and test goodness and [x, y, z, w] = 1."""
    tally = run_trials(_goodness_kernel, (G, S, n, seed), trials, threads)
    if tally.counterexamples:
        logger.warning(f"{len(tally.counterexamples)} good quadruples fail [x,y,z,w]=1")
    return GoodnessResult(
        trials=trials,
        good=tally.good,
        good_and_commuting=tally.commuting,
        counterexamples=tally.counterexamples,
    )


# Simple product distribution


def _distribution_kernel(payload: tuple, start: int, stop: int) -> tuple[Counter, Counter]:
    G, S, word, n, seed = payload
    variables = max(gen for gen, _ in word.letters)
    length = len(word.letters) * n
    products: Counter = Counter()
    direct: Counter = Counter()
    for t in range(start, stop):
        endpoints = [
            walk_endpoint(G, S, n, derive_stream(seed, 0, t, i)) for i in range(variables)
        ]
        products[evaluate_word(G, word, endpoints)] += 1
        direct[G.canonicalize(walk_endpoint(G, S, length, derive_stream(seed, 1, t)))] += 1
    return products, direct


def total_variation(first: Counter, second: Counter) -> float:
    """Total variation distance between two empirical distributions."""
    a, b = sum(first.values()), sum(second.values())
    return 0.5 * sum(abs(first[k] / a - second[k] / b) for k in set(first) | set(second))


def estimate_simple_product_distribution(
    G: Group,
    S: GeneratingSet,
    expr: LawExpr,
    n: int,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> float:
    """Distance between a simple product of n-step walks and one l n-step walk.

    Returns:
        Total variation distance between the two empirical distributions.
    """
    word = flatten(expr)
    gens = {gen for gen, _ in word.letters}
    if len(gens) != len(word.letters):
        raise ConfigError(f"{format_law(expr)} is not a simple product")
    products, direct = run_trials(
        _distribution_kernel,
        (G, S, word, n, seed),
        trials,
        threads,
        combine=lambda x, y: (x[0] + y[0], x[1] + y[1]),
    )
    return total_variation(products, direct)
