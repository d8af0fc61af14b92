"""grouplaw models: walk settings, estimates, experiment configs and reports."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator

import config

ExperimentKind = Literal[
    "estimate", "exact", "intersect", "occupation", "ball", "verify", "reproduce"
]


class WalkConfig(BaseModel):
    """Random walk settings.

    Args:
        steps: Walk length n.
        trials: Number of independent trials.
        seed: Root seed; every trial derives its own stream from it.
        lazy: Whether the identity is a step atom.
    """

    steps: int = Field(default=400, ge=0)
    trials: int = Field(default=10_000, ge=1)
    seed: int = Field(default_factory=lambda: config.GROUPLAW_SEED)
    lazy: bool = True


class Estimate(BaseModel):
    """Monte Carlo estimate of a probability with a 95% Wilson interval.

    Args:
        successes: Number of successful trials.
        trials: Number of trials.
        p_hat: successes / trials.
        ci_lo: Lower Wilson bound.
        ci_hi: Upper Wilson bound.
        seed: Root seed of the run.
        n: Walk length, when the estimate comes from walks.
        law: Canonical law text.
        group: Canonical group descriptor text.
    """

    successes: int = Field(ge=0)
    trials: int = Field(ge=1)
    p_hat: float
    ci_lo: float
    ci_hi: float
    seed: int
    n: int | None = None
    law: str | None = None
    group: str | None = None

    @model_validator(mode="after")
    def _ordered(self) -> Estimate:
        if self.successes > self.trials:
            raise ValueError("more successes than trials")
        if not 0.0 <= self.ci_lo <= self.p_hat <= self.ci_hi <= 1.0:
            raise ValueError("confidence interval does not contain the estimate")
        return self


class CurvePoint(BaseModel):
    """One point of a law-probability curve over walk lengths."""

    n: int
    estimate: Estimate
    running_max: float
    running_min: float


class GoodnessResult(BaseModel):
    """Outcome of sampling quadruples and testing the goodness condition.

    Args:
        trials: Quadruples sampled.
        good: Quadruples all of whose simple products cube to the identity.
        good_and_commuting: Good quadruples with [x, y, z, w] = 1.
        counterexamples: Good quadruples with [x, y, z, w] != 1, as JSON.
    """

    trials: int
    good: int
    good_and_commuting: int
    counterexamples: list[Any] = []

    @property
    def fraction_good(self) -> float:
        return self.good / self.trials

    @property
    def fraction_good_and_commuting(self) -> float:
        return self.good_and_commuting / self.trials


class OccupationProfile(BaseModel):
    """Mean number of path points inside balls around the identity.

    Args:
        radii: Increasing radii.
        mean_counts: Per-radius mean count.
        stderr: Per-radius standard error of the mean.
        trials: Number of sampled paths.
        distinct: Whether distinct vertices rather than time points were counted.
    """

    radii: list[int]
    mean_counts: list[float]
    stderr: list[float]
    trials: int
    distinct: bool = False


class Check(BaseModel):
    """A named pass/fail acceptance check.

    Args:
        name: Short identifier.
        passed: Whether the check held.
        detail: Human-readable statement of what was compared.
        value: Observed value, if numeric.
        threshold: Threshold the value was compared against.
    """

    name: str
    passed: bool
    detail: str = ""
    value: float | None = None
    threshold: float | None = None


class ExperimentConfig(BaseModel):
    """Experiment configuration, read from a key=value file or an API body.

    Args:
        kind: Which experiment to run.
        group: Group descriptor text.
        law: Law text.
        second_law: Second law for intersections; defaults to ``law``.
        generators: standard | switch-move-switch | shifted | fourteen | all.
        offset: Lamp offset k for the shifted wreath generators.
        walk: Walk settings.
        n_grid: Walk lengths for a probability curve; empty for a single n.
        dim: Lattice dimension for intersections and occupation.
        offsets: Offsets along the first axis for intersections.
        radii: Radii for occupation profiles.
        radius: Ball radius for ball enumeration and uniform-on-ball estimates.
        family: Quotient family descriptor for exact runs, e.g. ``dihedral:3..49:2``.
        manifest: Identity manifest path.
        mode: exhaustive | sampled, for conditional identity checks.
        models: Finite groups conditional claims are checked on.
        section: Reproduce bundle id.
        scale: Factor applied to trial counts of a reproduce bundle.
        distinct: Count distinct vertices in occupation profiles.
        threads: Worker processes.
        out: Report directory.
        dry_run: Validate without computing.
    """

    kind: ExperimentKind = "estimate"
    group: str | None = None
    law: str | None = None
    second_law: str | None = None
    generators: str = "standard"
    offset: int = Field(default=0, ge=0)
    walk: WalkConfig = Field(default_factory=WalkConfig)
    n_grid: list[int] = []
    dim: int = Field(default=5, ge=1)
    offsets: list[int] = [5, 10, 20, 40]
    radii: list[int] = [1, 2, 3, 4, 5, 6, 7, 8]
    radius: int = Field(default=4, ge=0)
    family: str | None = None
    manifest: str = Field(default_factory=lambda: config.GROUPLAW_MANIFEST)
    mode: Literal["exhaustive", "sampled"] = "exhaustive"
    models: list[str] = ["extraspecial3"]
    section: str | None = None
    scale: float = Field(default=1.0, gt=0)
    distinct: bool = False
    threads: int = Field(default_factory=lambda: config.GROUPLAW_THREADS, ge=1)
    out: str | None = None
    dry_run: bool = False


class Report(BaseModel):
    """Experiment results.

    Args:
        kind: Experiment kind, or ``reproduce:<section>``.
        records: Machine-readable result rows, one JSON object each.
        checks: Acceptance checks, empty for plain experiments.
        provenance: Config echo, seed and package versions.
    """

    kind: str
    records: list[dict[str, Any]] = []
    checks: list[Check] = []
    provenance: dict[str, Any] = {}

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class LawRequest(BaseModel):
    """Law Request.

    Args:
        law: Law text.
    """

    law: str


class LawResponse(BaseModel):
    """Law Response.

    Args:
        canonical: Canonical law text.
        variables: Number of variables.
        degrees: Per-variable exponent sums.
        balanced: Whether every exponent sum vanishes.
        word: Freely reduced word, empty when the law is trivial.
    """

    canonical: str
    variables: int
    degrees: list[int]
    balanced: bool
    word: str


class ReproduceQuery(BaseModel):
    """Reproduce Query.

    Args:
        scale: Factor applied to trial counts.
        seed: Root seed.
    """

    scale: float = Field(default=1.0, gt=0)
    seed: int = Field(default_factory=lambda: config.GROUPLAW_SEED)


class GeneralResponse(BaseModel):
    """General Response.

    Args:
        message: Response message.
    """

    message: str
