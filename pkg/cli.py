"""grouplaw command line: one subcommand per experiment kind."""

import functools
import json
import sys
from typing import Any, Callable

import click
from loguru import logger

import config
import logic
from errors import GroupLawError
from models import Report

EXIT_FAILED_CHECKS = 1
EXIT_BAD_INPUT = 2


def _common_options(command: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(), help="key=value config file."),
        click.option("--set", "overrides", multiple=True, help="Override a key, e.g. walk.steps=200."),
        click.option("--seed", type=int, default=None, help="Root seed."),
        click.option("--threads", type=int, default=None, help="Worker processes."),
        click.option("--out", type=click.Path(), default=None, help="Report directory."),
        click.option(
            "--dry-run", is_flag=True, default=None, help="Validate the config and stop."
        ),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _run(kind: str, config_path: str | None, overrides: tuple[str, ...], **fields: Any) -> None:
    # an absent flag must not override dry_run from the config file
    fields["dry_run"] = fields.get("dry_run") or None
    try:
        cfg = logic.load_config_file(config_path, list(overrides), kind=kind, **fields)
        report = logic.run_experiment(cfg)
    except GroupLawError as e:
        logger.error(str(e))
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_BAD_INPUT)
    _echo(report)
    if not report.passed:
        sys.exit(EXIT_FAILED_CHECKS)


def _echo(report: Report) -> None:
    for record in report.records:
        click.echo(json.dumps(record, sort_keys=True))
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        click.echo(f"{status} {check.name}: {check.detail}")


@click.group()
@click.option("--log-level", default=None, help="loguru level; defaults to GROUPLAW_LOG_LEVEL.")
@click.version_option(config.VERSION, prog_name="grouplaw")
def main(log_level: str | None) -> None:
    """Estimate and verify probabilities of group laws along random walks."""
    logger.remove()
    logger.add(sys.stderr, level=(log_level or config.GROUPLAW_LOG_LEVEL).upper())


def _subcommand(kind: str, *extra: Callable) -> Callable:
    def decorate(function: Callable) -> Callable:
        @functools.wraps(function)
        def command(config_path, overrides, **fields):
            _run(kind, config_path, overrides, **fields)

        for option in reversed(extra):
            command = option(command)
        return main.command(name=kind)(_common_options(command))

    return decorate


GROUP = click.option("--group", default=None, help="Group descriptor, e.g. 'semidirect(6)'.")
LAW = click.option("--law", default=None, help="Law, e.g. '[[x,y],[z,w]]'.")


@_subcommand("estimate", GROUP, LAW)
def estimate() -> None:
    """Monte Carlo law probability along lazy random walks."""


@_subcommand("exact", GROUP, LAW, click.option("--family", default=None, help="e.g. dihedral:3..49:2"))
def exact() -> None:
    """Exact law probability on a finite group or along a quotient family."""


@_subcommand("intersect", LAW, click.option("--second-law", default=None))
def intersect() -> None:
    """Loop intersection probabilities of word paths in Z^d."""


@_subcommand("occupation", GROUP, LAW)
def occupation() -> None:
    """Mean word-path occupation of balls around the identity."""


@_subcommand("ball", GROUP, click.option("--radius", type=int, default=None))
def ball() -> None:
    """Word-metric ball growth."""


@_subcommand("verify", click.option("--manifest", type=click.Path(), default=None))
def verify() -> None:
    """Verify an identity manifest."""


@main.command()
@click.argument("section")
@click.option("--scale", type=float, default=None, help="Factor on trial counts.")
@_common_options
def reproduce(section: str, config_path, overrides, **fields) -> None:
    """Run the experiment bundle of SECTION with pass/fail checks."""
    _run("reproduce", config_path, overrides, section=section, **fields)


if __name__ == "__main__":
    main()
