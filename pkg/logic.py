"""grouplaw experiment logic: dispatch, reproduce bundles and report files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from fractions import Fraction
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

import numpy as np
from dotenv import dotenv_values
from loguru import logger
from pydantic import ValidationError
from sympy import Matrix, ZZ, eye, totient
from sympy.polys.matrices import DomainMatrix

import config
from errors import ConfigError
from finite import (
    all_elements_generators,
    commuting_probability,
    dihedral_family,
    enumerate_group,
    exact_law_probability,
    parse_family,
    quotient_family_infimum,
)
from geometry import (
    ball_enumerate,
    coset_path_intersection_prob,
    fit_estimate_slope,
    fit_loglog_slope,
    loop_intersection_prob,
    occupation_profile,
    random_sparse_system,
    sparse_system_hit_prob,
    uniform_ball_estimate,
    walk_intersection_prob,
)
from groups import (
    GeneratingSet,
    Group,
    SemidirectElem,
    build_group,
    companion_matrix,
    cyclotomic_action_matrix,
    fourteen_wreath_generators,
    generating_power,
    order_divides,
    product_generators,
    shifted_wreath_generators,
    standard_generators,
    switch_move_switch_generators,
    unit_vector,
)
from identities import (
    conditional_check,
    load_manifest,
    perturbed_claims,
    verify_free_identity,
    verify_manifest,
)
from laws import (
    Comm,
    LawExpr,
    Var,
    degrees,
    flatten,
    format_law,
    is_balanced,
    metabelian_law,
    parse_law,
    power_law,
    self_commutator,
    variable_count,
)
from models import Check, Estimate, ExperimentConfig, LawResponse, Report
from walks import derive_stream, estimate_curve, estimate_law, estimate_goodness

LIST_FIELDS = {"n_grid", "offsets", "radii", "models"}
PACKAGES = ("numpy", "sympy", "pydantic", "loguru", "flask")


# Configuration


def _split_top_level(text: str) -> list[str]:
    """Split at commas that are not inside brackets."""
    parts, depth, current = [], 0, []
    for char in text:
        if char in "([":
            depth += 1
        elif char in ")]":
            depth -= 1
        if char == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(char)
    parts.append("".join(current).strip())
    return [p for p in parts if p]


def _unflatten(values: dict[str, str | None]) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            continue
        *parents, leaf = key.strip().split(".")
        target = nested
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = _split_top_level(value) if leaf in LIST_FIELDS else value
    return nested


def load_config_file(
    path: str | Path | None = None, overrides: list[str] | None = None, **fields: Any
) -> ExperimentConfig:
    """Build an ExperimentConfig from a key=value file, --set overrides and fields.

    Args:
        path: Config file with dotted keys, e.g. ``walk.steps=400``.
        overrides: ``key=value`` strings; they win over the file.
        fields: Already-typed values; they win over everything else.

    Returns:
        The validated config.

    Raises:
        ConfigError: If the file is missing or the values do not validate.
    """
    values: dict[str, str | None] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} does not exist")
        values.update(dotenv_values(path))
    for override in overrides or []:
        key, sep, value = override.partition("=")
        if not sep:
            raise ConfigError(f"override {override!r} is not key=value")
        values[key.strip()] = value.strip()
    merged = _unflatten(values)
    for key, value in fields.items():
        if value is None:
            continue
        if key == "seed":
            merged.setdefault("walk", {})["seed"] = value
        else:
            merged[key] = value
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def _require(value: str | None, name: str, kind: str) -> str:
    if not value:
        raise ConfigError(f"{kind} experiments need a {name}")
    return value


def resolve_generators(G: Group, cfg: ExperimentConfig) -> GeneratingSet:
    """The generating set a config names for a group."""
    if cfg.generators == "standard":
        return standard_generators(G, cfg.walk.lazy)
    if cfg.generators == "switch-move-switch":
        return switch_move_switch_generators(G, cfg.walk.lazy)
    if cfg.generators == "shifted":
        return shifted_wreath_generators(G, cfg.offset)
    if cfg.generators == "fourteen":
        return fourteen_wreath_generators(G, cfg.offset)
    if cfg.generators == "all":
        return all_elements_generators(enumerate_group(G))
    raise ConfigError(f"unknown generating set {cfg.generators!r}")


def validate_config(cfg: ExperimentConfig) -> None:
    """Parse every text the experiment will use, without computing anything."""
    needs_group = (
        cfg.kind in ("estimate", "ball")
        or (cfg.kind == "exact" and not cfg.family)
        or (cfg.kind == "occupation" and cfg.group)
    )
    if needs_group:
        build_group(_require(cfg.group, "group", cfg.kind))
    if cfg.kind in ("estimate", "exact", "intersect", "occupation"):
        parse_law(_require(cfg.law, "law", cfg.kind))
    if cfg.second_law:
        parse_law(cfg.second_law)
    if cfg.kind == "exact" and cfg.family:
        list(parse_family(cfg.family))
    if cfg.kind == "verify" and not Path(cfg.manifest).is_file():
        raise ConfigError(f"manifest {cfg.manifest} does not exist")
    if cfg.kind == "reproduce" and _require(cfg.section, "section", "reproduce") not in BUNDLES:
        raise ConfigError(f"unknown section {cfg.section!r}; known: {', '.join(BUNDLES)}")
    if cfg.n_grid and any(a >= b for a, b in zip(cfg.n_grid, cfg.n_grid[1:])):
        raise ConfigError("n_grid must be strictly increasing")


# Plain experiments

Outcome = tuple[list[dict[str, Any]], list[Check]]


def _estimate_record(estimate: Estimate, **extra: Any) -> dict[str, Any]:
    record = estimate.model_dump(exclude_none=True)
    record.update(extra)
    return record


def _run_estimate(cfg: ExperimentConfig) -> Outcome:
    G = build_group(cfg.group)
    S = resolve_generators(G, cfg)
    expr = parse_law(cfg.law)
    walk = cfg.walk
    if cfg.n_grid:
        curve = estimate_curve(G, S, expr, cfg.n_grid, walk.trials, walk.seed, cfg.threads)
        records = [
            _estimate_record(
                p.estimate, running_max=p.running_max, running_min=p.running_min
            )
            for p in curve
        ]
    else:
        estimate = estimate_law(G, S, expr, walk.steps, walk.trials, walk.seed, cfg.threads)
        records = [_estimate_record(estimate)]
    return records, []


def _run_exact(cfg: ExperimentConfig) -> Outcome:
    expr = parse_law(cfg.law)
    if cfg.family:
        points = quotient_family_infimum(parse_family(cfg.family), expr, threads=cfg.threads)
        return [dict(p.to_record(), law=format_law(expr)) for p in points], []
    table = enumerate_group(cfg.group)
    probability = exact_law_probability(table, expr, cfg.threads)
    return [_exact_record(table.name, table.order, expr, probability)], []


def _exact_record(group: str, order: int, expr: LawExpr, p: Fraction) -> dict[str, Any]:
    return {
        "group": group,
        "order": order,
        "law": format_law(expr),
        "numerator": p.numerator,
        "denominator": p.denominator,
        "probability": float(p),
    }


def _run_intersect(cfg: ExperimentConfig) -> Outcome:
    first = parse_law(cfg.law)
    second = parse_law(cfg.second_law or cfg.law)
    walk = cfg.walk
    records = []
    for offset in cfg.offsets:
        estimate = loop_intersection_prob(
            first,
            second,
            cfg.dim,
            walk.steps,
            unit_vector(cfg.dim, 0, offset).coords,
            walk.trials,
            walk.seed,
            walk.lazy,
            cfg.threads,
        )
        records.append(_estimate_record(estimate, offset=offset))
    return records, []


def _run_occupation(cfg: ExperimentConfig) -> Outcome:
    G = build_group(cfg.group or f"lattice({cfg.dim})")
    S = resolve_generators(G, cfg)
    walk = cfg.walk
    profile = occupation_profile(
        G,
        S,
        parse_law(cfg.law),
        walk.steps,
        cfg.radii,
        walk.trials,
        walk.seed,
        cfg.distinct,
        cfg.threads,
    )
    records = [
        {"r": r, "mean": mean, "stderr": err, "n": walk.steps, "trials": walk.trials}
        for r, mean, err in zip(profile.radii, profile.mean_counts, profile.stderr)
    ]
    return records, []


def _run_ball(cfg: ExperimentConfig) -> Outcome:
    G = build_group(cfg.group)
    ball = ball_enumerate(G, resolve_generators(G, cfg), cfg.radius)
    records = [
        {"group": str(G.descriptor), "r": r, "size": size}
        for r, size in enumerate(ball.growth)
    ]
    return records, []


def _run_verify(cfg: ExperimentConfig) -> Outcome:
    records = verify_manifest(
        load_manifest(cfg.manifest),
        cfg.models,
        cfg.mode,
        cfg.walk.trials,
        cfg.walk.seed,
        cfg.threads,
    )
    checks = [
        Check(
            name=f"{r['claim']}@{r['model']}" if "model" in r else r["claim"],
            passed=r["passed"],
            detail=r["identity"],
        )
        for r in records
    ]
    return records, checks


def _run_reproduce(cfg: ExperimentConfig) -> Outcome:
    report = reproduce(cfg.section, cfg.scale, cfg.walk.seed, cfg.threads)
    return report.records, report.checks


RUNNERS: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "estimate": _run_estimate,
    "exact": _run_exact,
    "intersect": _run_intersect,
    "occupation": _run_occupation,
    "ball": _run_ball,
    "verify": _run_verify,
    "reproduce": _run_reproduce,
}


def provenance(cfg: ExperimentConfig | None = None, **extra: Any) -> dict[str, Any]:
    versions = {}
    for package in PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    block: dict[str, Any] = {
        "grouplaw": config.VERSION,
        "python": platform.python_version(),
        "packages": versions,
    }
    if cfg is not None:
        block["config"] = cfg.model_dump()
        block["seed"] = cfg.walk.seed
    block.update(extra)
    return block


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Report:
    """Validate a config, run the experiment it names and optionally write the report.

    Args:
        cfg: The experiment.
        write: Write results.jsonl, summary.csv and provenance.json to cfg.out
            (or GROUPLAW_OUT_DIR).

    Returns:
        The report.
    """
    validate_config(cfg)
    kind = f"reproduce:{cfg.section}" if cfg.kind == "reproduce" else cfg.kind
    if cfg.dry_run:
        logger.info(f"Dry run: {kind} config is valid")
        return Report(kind=kind, provenance=provenance(cfg, dry_run=True))

    logger.info(f"Running {kind} experiment")
    records, checks = RUNNERS[cfg.kind](cfg)
    report = Report(kind=kind, records=records, checks=checks, provenance=provenance(cfg))
    for check in checks:
        if not check.passed:
            logger.warning(f"Check {check.name} failed: {check.detail}")
    if write:
        write_report(report, cfg.out or config.GROUPLAW_OUT_DIR)
    logger.info(f"Finished {kind}: {len(records)} records, passed={report.passed}")
    return report


# Report files


def _atomic_write(path: Path, text: str) -> None:
    with tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=f".{path.name}.", delete=False, newline=""
    ) as handle:
        handle.write(text)
    os.replace(handle.name, path)


def _csv_text(records: list[dict[str, Any]]) -> str:
    columns: list[str] = []
    for record in records:
        columns.extend(k for k in record if k not in columns)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, restval="", lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(
            {
                k: json.dumps(v, separators=(",", ":")) if isinstance(v, (dict, list)) else v
                for k, v in record.items()
            }
        )
    return buffer.getvalue()


def write_report(report: Report, out_dir: str | Path) -> Path:
    """Write results.jsonl, summary.csv and provenance.json, each atomically."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(r, sort_keys=True) for r in report.records]
    lines += [json.dumps({"check": c.model_dump()}, sort_keys=True) for c in report.checks]
    _atomic_write(out / "results.jsonl", "".join(line + "\n" for line in lines))
    summary = report.records + [
        {"check": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold}
        for c in report.checks
    ]
    _atomic_write(out / "summary.csv", _csv_text(summary))
    _atomic_write(
        out / "provenance.json",
        json.dumps(dict(report.provenance, kind=report.kind), indent=2, sort_keys=True),
    )
    logger.info(f"Report written to {out}")
    return out


def describe_law(text: str) -> LawResponse:
    expr = parse_law(text)
    word = flatten(expr, allow_empty=True)
    letters = " ".join(f"x{g}" if s > 0 else f"x{g}^-1" for g, s in word.letters)
    return LawResponse(
        canonical=format_law(expr),
        variables=variable_count(expr),
        degrees=list(degrees(expr)),
        balanced=is_balanced(expr),
        word=letters,
    )


# Reproduce bundles


def _scaled(trials: int, scale: float) -> int:
    return max(1, round(trials * scale))


def _check(name: str, passed: bool, detail: str, value=None, threshold=None) -> Check:
    return Check(
        name=name,
        passed=bool(passed),
        detail=detail,
        value=None if value is None else float(value),
        threshold=None if threshold is None else float(threshold),
    )


def _section_5_1(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("dihedral-infinite")
    estimate = estimate_law(
        G, standard_generators(G), power_law(2), 400, _scaled(10_000, scale), seed, threads
    )
    points = quotient_family_infimum(dihedral_family(range(3, 50, 2)), power_law(2))
    infimum = points[-1].running_inf
    records = [_estimate_record(estimate)] + [p.to_record() for p in points]
    checks = [
        _check(
            "x2-dihedral-half",
            0.45 <= estimate.p_hat <= 0.55,
            "lazy walk estimate of x^2 = 1 on D_inf lies in [0.45, 0.55]",
            estimate.p_hat,
        ),
        _check(
            "x2-quotient-infimum",
            abs(float(infimum) - estimate.p_hat) <= 0.02,
            f"infimum over odd D_m (m <= 49) is {infimum}, within 0.02 of the estimate",
            float(infimum),
            estimate.p_hat,
        ),
    ]
    return records, checks


def _section_5_2(scale: float, seed: int, threads: int | None) -> Outcome:
    claims = load_manifest()
    records: list[dict[str, Any]] = []
    checks: list[Check] = []
    free = [c for c in claims if c.kind == "free"]
    perturbed = [p for c in free[:3] for p in perturbed_claims(c, 7, seed)][:20]
    checks.append(
        _check(
            "free-identities",
            all(verify_free_identity(c) for c in free),
            f"{len(free)} identities reduce to the empty word",
        )
    )
    checks.append(
        _check(
            "perturbed-identities-fail",
            not any(verify_free_identity(p) for p in perturbed),
            f"{len(perturbed)} perturbed identities all fail",
        )
    )
    table = enumerate_group("extraspecial3")
    for claim in (c for c in claims if c.kind == "conditional"):
        found = conditional_check(claim, table, "exhaustive", threads=threads)
        checks.append(
            _check(
                f"{claim.name}@extraspecial3",
                found is None,
                f"{claim} has no counterexample under exhaustive search",
            )
        )
    for name, G in (("extraspecial3", build_group("extraspecial3")), ("sym3", build_group("sym(3)"))):
        result = estimate_goodness(
            G, standard_generators(G), 50, _scaled(500, scale), seed, threads
        )
        records.append(
            {
                "group": name,
                "trials": result.trials,
                "fraction_good": result.fraction_good,
                "fraction_good_and_commuting": result.fraction_good_and_commuting,
                "counterexamples": len(result.counterexamples),
            }
        )
        checks.append(
            _check(
                f"good-quadruples-commute@{name}",
                not result.counterexamples,
                "every sampled good quadruple satisfies [x,y,z,w] = 1",
            )
        )
    checks.append(
        _check(
            "exponent-three-all-good",
            records[0]["fraction_good"] == 1.0,
            "all quadruples in the exponent 3 group are good",
            records[0]["fraction_good"],
        )
    )
    checks.append(
        _check(
            "sym3-not-all-good",
            records[1]["fraction_good"] < 1.0,
            "transpositions keep some quadruples in Sym(3) from being good",
            records[1]["fraction_good"],
        )
    )
    return records, checks


def _section_5_3(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("semidirect(6)")
    estimate = estimate_law(
        G, standard_generators(G), power_law(6), 400, _scaled(10_000, scale), seed, threads
    )
    stream = derive_stream(seed, 53)
    nontrivial = 0
    for _ in range(100):
        v = tuple(int(x) for x in stream.integers(-10, 11, size=5))
        if not any(v):
            v = (1,) + v[1:]
        if not order_divides(G, SemidirectElem(v, 0), 6):
            nontrivial += 1
    target = int(totient(6)) / 6
    checks = [
        _check(
            "x6-totient-ratio",
            abs(estimate.p_hat - target) <= 0.05,
            "estimate of x^6 = 1 on Z^5 x| Z/6 lies within 0.05 of phi(6)/6",
            estimate.p_hat,
            target,
        ),
        _check(
            "x6-translations-fail",
            nontrivial == 100,
            "no sampled nonzero (v, 0) satisfies (v, 0)^6 = 1",
            nontrivial,
            100,
        ),
    ]
    return [_estimate_record(estimate)], checks


def _section_6(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("wreath(free(2),lattice(5))")
    law = metabelian_law()
    estimates = {}
    for k in (0, 50):
        estimates[k] = estimate_law(
            G,
            shifted_wreath_generators(G, k),
            law,
            200,
            _scaled(2_000, scale),
            seed,
            threads,
            stream_key=(k,),
        )
    records = [_estimate_record(e, offset=k) for k, e in estimates.items()]

    commutator = Comm(Var(1), Var(2))
    offsets = (5, 10, 20, 40)
    loops = {
        k: loop_intersection_prob(
            commutator,
            commutator,
            5,
            200,
            unit_vector(5, 0, k).coords,
            _scaled(20_000, scale),
            seed,
            threads=threads,
        )
        for k in offsets
    }
    records += [_estimate_record(e, offset=k, kind="loop-intersection") for k, e in loops.items()]

    distances = (8, 16, 32)
    meetings = {
        r: walk_intersection_prob(5, r, _scaled(10_000, scale), seed, threads=threads)
        for r in distances
    }
    records += [
        _estimate_record(e, distance=r, kind="walk-intersection") for r, e in meetings.items()
    ]
    # envelope C r^-1/2 through the nearest start
    envelope = meetings[8].p_hat * math.sqrt(8)
    try:
        slope, fitted = fit_estimate_slope(offsets, [loops[k] for k in offsets])
    except ConfigError:
        slope, fitted = None, []
    decreasing = all(
        loops[b].ci_hi < loops[a].ci_lo for a, b in zip(offsets, offsets[1:])
    )
    checks = [
        _check(
            "metabelian-far-lamps",
            estimates[50].p_hat >= 0.9,
            "metabelian law with b lamps at offset 50 holds with probability >= 0.9",
            estimates[50].p_hat,
            0.9,
        ),
        _check(
            "metabelian-offset-gain",
            estimates[50].p_hat >= estimates[0].p_hat + 0.1,
            "moving the b lamps to offset 50 raises the probability by >= 0.1",
            estimates[50].p_hat - estimates[0].p_hat,
            0.1,
        ),
        _check(
            "loop-intersections-decrease",
            decreasing,
            "commutator loop intersections decrease beyond CI overlap in the offset",
        ),
        _check(
            "loop-intersections-halve",
            loops[40].p_hat <= loops[5].p_hat / 2,
            "p(40) <= p(5) / 2",
            loops[40].p_hat,
            loops[5].p_hat / 2,
        ),
        _check(
            "loop-intersection-slope",
            slope is not None and slope <= -0.5,
            f"log-log slope over offsets {fitted} decays at least like k^-1/2",
            slope,
            -0.5,
        ),
        _check(
            "walk-intersections-decrease",
            meetings[32].ci_hi < meetings[8].ci_lo
            and meetings[8].p_hat > meetings[16].p_hat > meetings[32].p_hat,
            "two walks in Z^5 started r apart meet less often as r grows",
            meetings[32].p_hat,
            meetings[8].p_hat,
        ),
        _check(
            "walk-intersections-envelope",
            all(meetings[r].ci_lo <= envelope / math.sqrt(r) for r in distances),
            "Pr(walks started r apart meet) <= C r^-1/2 with C fitted at r = 8",
            max(meetings[r].ci_lo * math.sqrt(r) for r in distances),
            envelope,
        ),
    ]
    return records, checks


def _polynomial_sweep(m: int, bound: int) -> tuple[int, int]:
    """Count polynomials f with coefficients in [-bound, bound] by whether f(A) is singular.

    Returns:
        (number with f(A) = 0, number with f(A) singular but nonzero).
    """
    A = Matrix(cyclotomic_action_matrix(m))
    size = A.shape[0]
    powers = [A**i for i in range(size)]
    zero, singular = 0, 0
    for coeffs in np.ndindex(*(2 * bound + 1,) * size):
        f = sum(
            ((c - bound) * P for c, P in zip(coeffs, powers)), Matrix.zeros(size, size)
        )
        if f.is_zero_matrix:
            zero += 1
            continue
        rows = [[ZZ(int(x)) for x in f.row(i)] for i in range(size)]
        if DomainMatrix(rows, (size, size), ZZ).det() == 0:
            singular += 1
    return zero, singular


def _section_7(scale: float, seed: int, threads: int | None) -> Outcome:
    records: list[dict[str, Any]] = []
    exact_orders = True
    for m in range(2, 13):
        for build in (companion_matrix, cyclotomic_action_matrix):
            A = Matrix(build(m))
            size = A.shape[0]
            orders = [j for j in range(1, m + 1) if A**j == eye(size)]
            exact_orders &= orders == [m]
    sweep_ok = True
    for m in range(2, 13):
        size = len(cyclotomic_action_matrix(m))
        if size > 4:
            continue
        bound = 3 if size <= 3 else 2
        zero, singular = _polynomial_sweep(m, bound)
        records.append({"m": m, "coefficient_bound": bound, "zero": zero, "singular": singular})
        sweep_ok &= singular == 0

    G = build_group("cyclotomic(5)")
    S = standard_generators(G)
    estimate = estimate_law(G, S, power_law(5), 400, _scaled(10_000, scale), seed, threads)
    target = int(totient(5)) / 5
    records.append(_estimate_record(estimate))

    first, second = power_law(5), Comm(Var(1), Var(2))
    distances = (2, 8, 32)
    coset = {
        r: coset_path_intersection_prob(
            G,
            S,
            first,
            second,
            SemidirectElem(unit_vector(4, 0, r).coords, 0),
            50,
            _scaled(2_000, scale),
            seed,
            threads,
        )
        for r in distances
    }
    records += [_estimate_record(e, distance=r, kind="coset-intersection") for r, e in coset.items()]
    checks = [
        _check("action-matrix-orders", exact_orders, "A^m = I with exact order m, m = 2..12"),
        _check(
            "cyclotomic-no-zero-divisors",
            sweep_ok,
            "every small-coefficient f has f(A) = 0 or f(A) invertible over Q",
        ),
        _check(
            "x5-totient-ratio",
            abs(estimate.p_hat - target) <= 0.05,
            "estimate of x^5 = 1 on Z^4 x| Z/5 lies within 0.05 of phi(5)/5",
            estimate.p_hat,
            target,
        ),
        _check(
            "coset-intersection-decreases",
            coset[distances[-1]].ci_hi < coset[distances[0]].ci_lo,
            "Pr(gamma meets gamma' q) decreases as |v0| grows",
            coset[distances[-1]].p_hat,
            coset[distances[0]].p_hat,
        ),
    ]
    return records, checks


def _section_8(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("heisenberg-semidirect(2)")
    law = Comm(power_law(2), Var(2))
    estimate = estimate_law(
        G, standard_generators(G), law, 400, _scaled(10_000, scale), seed, threads
    )
    checks = [
        _check(
            "commutator-power-totient",
            estimate.p_hat >= 0.45,
            "estimate of [x^2, y] = 1 on H_3 x| Z/2 is at least 0.45",
            estimate.p_hat,
            0.45,
        )
    ]
    return [_estimate_record(estimate)], checks


def _section_9_1(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("wreath(cyclic(2),dihedral-infinite)")
    law = self_commutator(power_law(2))
    estimate = estimate_law(
        G, standard_generators(G), law, 400, _scaled(10_000, scale), seed, threads
    )
    records = [_estimate_record(estimate)]
    violations = 0
    for i in range(100):
        stream = derive_stream(seed, 91, i)
        m = int(stream.integers(2, 13))
        modulus = int(stream.choice((2, 3, 5)))
        k = int(stream.integers(1, 4))
        system = random_sparse_system(m, modulus, k, stream)
        hit = sparse_system_hit_prob(system, _scaled(2_000, scale), seed + i, threads)
        violations += not hit.bound_satisfied
        records.append(
            _estimate_record(
                hit.estimate, m=m, l=modulus, k=k, bound=hit.bound, kind="sparse-system"
            )
        )
    checks = [
        _check(
            "self-commutator-squares",
            estimate.p_hat >= 0.20,
            "estimate of [x^2, y^2] = 1 on Z/2 wr D_inf is at least 0.20",
            estimate.p_hat,
            0.20,
        ),
        _check(
            "sparse-system-bound",
            violations == 0,
            "no sampled sparse system beats (1 - eps)^ceil(m / k^2) beyond its CI",
            violations,
            0,
        ),
    ]
    return records, checks


def _section_10(scale: float, seed: int, threads: int | None) -> Outcome:
    G = build_group("lattice(5)")
    radii = list(range(1, 9))
    profile = occupation_profile(
        G,
        standard_generators(G),
        Comm(Var(1), Var(2)),
        200,
        radii,
        _scaled(2_000, scale),
        seed,
        threads=threads,
    )
    slope = fit_loglog_slope(radii, profile.mean_counts)
    records = [
        {"r": r, "mean": mean, "stderr": err}
        for r, mean, err in zip(radii, profile.mean_counts, profile.stderr)
    ]
    means = profile.mean_counts
    checks = [
        _check(
            "occupation-cubic",
            slope <= 3,
            "log-log slope of mean |gamma meets B(1, r)| is at most 3",
            slope,
            3,
        ),
        _check(
            "occupation-monotone",
            all(a <= b for a, b in zip(means, means[1:])),
            "mean occupation is nondecreasing in r",
        ),
    ]
    return records, checks


def _section_11(scale: float, seed: int, threads: int | None) -> Outcome:
    lamplighter = build_group("wreath(cyclic(2),lattice(1))")
    G = build_group("product(wreath(cyclic(2),lattice(1)),sym(4))")
    S = switch_move_switch_generators(lamplighter, lazy=True)
    everything = all_elements_generators(enumerate_group("sym(4)"))
    T = product_generators(G, [S, everything], lazy=True)
    T2 = product_generators(G, [generating_power(lamplighter, S, 2), everything], lazy=True)
    trials = _scaled(10_000, scale)
    law = metabelian_law()
    single = uniform_ball_estimate(G, T, 4, law, trials, seed, threads)
    doubled = uniform_ball_estimate(G, T2, 2, law, trials, seed, threads)
    exact = exact_law_probability(enumerate_group("sym(4)"), law, threads)
    records = [
        _estimate_record(single, radius=4, generators="T"),
        _estimate_record(doubled, radius=2, generators="T2"),
        _exact_record("sym(4)", 24, law, exact),
        {"group": "sym(4)", "commuting_probability": float(commuting_probability(enumerate_group("sym(4)")))},
    ]
    checks = [
        _check(
            "uniform-ball-increase",
            doubled.ci_lo > single.ci_hi,
            "replacing S by S^2 raises the uniform-on-ball estimate beyond CI overlap",
            doubled.p_hat,
            single.p_hat,
        )
    ]
    return records, checks


BUNDLES: dict[str, Callable[[float, int, int | None], Outcome]] = {
    "5.1": _section_5_1,
    "5.2": _section_5_2,
    "5.3": _section_5_3,
    "6": _section_6,
    "7": _section_7,
    "8": _section_8,
    "9.1": _section_9_1,
    "10": _section_10,
    "11": _section_11,
}


def reproduce(
    section: str, scale: float = 1.0, seed: int | None = None, threads: int | None = None
) -> Report:
    """Run the pre-registered experiment bundle of a section with pass/fail checks.

    Args:
        section: One of 5.1, 5.2, 5.3, 6, 7, 8, 9.1, 10, 11.
        scale: Factor on trial counts; thresholds are calibrated for 1.0.
        seed: Root seed.
        threads: Worker processes.

    Raises:
        ConfigError: For an unknown section.
    """
    if section not in BUNDLES:
        raise ConfigError(f"unknown section {section!r}; known: {', '.join(BUNDLES)}")
    if not math.isfinite(scale) or scale <= 0:
        raise ConfigError(f"scale must be positive, got {scale}")
    seed = config.GROUPLAW_SEED if seed is None else seed
    logger.info(f"Reproducing section {section} at scale {scale}")
    records, checks = BUNDLES[section](scale, seed, threads)
    return Report(
        kind=f"reproduce:{section}",
        records=records,
        checks=checks,
        provenance=provenance(section=section, scale=scale, seed=seed),
    )
