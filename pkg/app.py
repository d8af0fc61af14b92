"""grouplaw API Flask app."""

from flask_pydantic import validate

import config
import logic
from models import (
    ExperimentConfig,
    GeneralResponse,
    LawRequest,
    LawResponse,
    Report,
    ReproduceQuery,
)
from server import app


@app.route("/api/health", methods=["GET"])
@validate()
def health() -> GeneralResponse:
    """Liveness check.

    Returns:
        HTTP 200: Version message.
    """
    return GeneralResponse(message=f"grouplaw {config.VERSION}")


@app.route("/api/law", methods=["POST"])
@validate()
def describe_law(body: LawRequest) -> LawResponse:
    """Parse a law and describe it.

    Args:
        body: Contains the law text.

    Returns:
        HTTP 200: Canonical form, variable count, exponent sums and reduced word.
        HTTP 400: The law does not parse.
    """
    return logic.describe_law(body.law)


@app.route("/api/experiment", methods=["POST"])
@validate()
def run_experiment(body: ExperimentConfig) -> Report:
    """Run an experiment.

    Report files are written only when the body names an ``out`` directory.

    Args:
        body: The experiment config.

    Returns:
        HTTP 200: The report.
        HTTP 400: The config names an unknown group, law or section.
    """
    return logic.run_experiment(body, write=body.out is not None)


@app.route("/api/reproduce/<section_id>", methods=["GET"])
@validate(query=ReproduceQuery)
def reproduce(section_id: str, query: ReproduceQuery) -> Report:
    """Run a reproduce bundle.

    Args:
        section_id: Bundle id, e.g. ``5.1``.
        query: Contains the trial scale and the seed.

    Returns:
        HTTP 200: The report with its checks.
        HTTP 400: Unknown section.
    """
    return logic.reproduce(section_id, query.scale, query.seed)
