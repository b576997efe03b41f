"""Command-line entry point: ``pocmem``."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import NoReturn, Optional, Sequence

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from config import ConfigManager
from formats import dump_json, trace_to_jsonl
from services import (
    DeformationService,
    DualService,
    PocSetService,
    ScenarioService,
    ServiceResult,
    SimulationService,
)
from simulation import SimulationResult

EXIT_CODES = {
    "VALIDATION_FAILED": 1,
    "CLOSURE_FAILED": 1,
    "DEGENERATION_FAILED": 1,
    "AUDIT_FAILED": 1,
    "INVALID_ARGUMENT": 1,
    "IO_ERROR": 2,
    "PARSE_ERROR": 2,
    "SIZE_GUARD": 3,
}

logger = logging.getLogger("pocmem")


def _configure_logging(level: Optional[str]) -> None:
    logging_config = ConfigManager.load_config().logging
    assert logging_config is not None
    logging.basicConfig(
        level=(level or logging_config.level).upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _fail(result: ServiceResult) -> NoReturn:
    click.echo(f"error: {result.message}", err=True)
    sys.exit(EXIT_CODES.get(result.error_code or "", 1))


def _emit(text: str, output: Optional[str]) -> None:
    if output is None:
        click.echo(text, nl=False)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as e:
        click.echo(f"error: cannot write {output}: {e}", err=True)
        sys.exit(EXIT_CODES["IO_ERROR"])


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Overrides POCMEM_LOG_LEVEL.",
)
def cli(log_level: Optional[str]) -> None:
    """Poc-set memory toolkit."""
    _configure_logging(log_level)


@cli.command("validate")
@click.argument("file", type=click.Path(dir_okay=False))
def validate_command(file: str) -> None:
    """Validate a poc-set file and print its relation table."""
    result = PocSetService.validate(file)
    if not result.success:
        _fail(result)
    assert isinstance(result.data, dict)
    table = Table(title=f"{file}: ok")
    table.add_column("pair")
    table.add_column("relation")
    for pair in result.data["pairs"]:
        table.add_row(f"{pair.a.tag}, {pair.b.tag}", str(pair))
    Console().print(table)


@cli.command("dual")
@click.argument("file", type=click.Path(dir_okay=False))
@click.option(
    "--format",
    "fmt",
    type=click.Choice(DualService.FORMATS),
    default="dot",
    show_default=True,
)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def dual_command(file: str, fmt: str, output: Optional[str]) -> None:
    """Export the dual median graph."""
    result = DualService.export(file, fmt)
    if not result.success:
        _fail(result)
    logger.info(result.message)
    _emit(str(result.data), output)


@cli.command("simulate")
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--budget", default=None, help="inf, a hop count k, or charge:λ,θ[,split].")
@click.option("--threshold", type=float, default=None, help="Degeneration threshold.")
@click.option("--trace", type=click.Path(dir_okay=False), default=None)
def simulate_command(
    scenario: str,
    seed: Optional[int],
    budget: Optional[str],
    threshold: Optional[float],
    trace: Optional[str],
) -> None:
    """Run a scenario and write its JSON-lines trace."""
    result = SimulationService.run(scenario, seed, budget, threshold)
    if isinstance(result.data, SimulationResult):
        _emit(trace_to_jsonl(result.data.records), trace)
    if not result.success:
        _fail(result)
    logger.info(result.message)


@cli.command("degenerate")
@click.argument("file", type=click.Path(dir_okay=False))
@click.argument("a")
@click.argument("b")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--retraction", type=click.Path(dir_okay=False), default=None)
def degenerate_command(
    file: str, a: str, b: str, output: Optional[str], retraction: Optional[str]
) -> None:
    """Collapse the corner V(A, B) by adding A < B*."""
    result = DeformationService.degenerate(file, a, b)
    if not result.success:
        _fail(result)
    assert isinstance(result.data, dict)
    if result.data["unchanged"]:
        click.echo(f"note: {result.message}", err=True)
    _emit(dump_json(result.data["pocset"]), output)
    if retraction is not None:
        _emit(dump_json(result.data["retraction"]), retraction)


@cli.command("expand")
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--tag", "new_tag", default=None, help="Fresh tag to add.")
@click.option("--relax", nargs=2, default=None, help="Covering relation X Y to drop.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--retraction", type=click.Path(dir_okay=False), default=None)
def expand_command(
    file: str,
    new_tag: Optional[str],
    relax: Optional[Sequence[str]],
    output: Optional[str],
    retraction: Optional[str],
) -> None:
    """Add a fresh tag or relax a covering relation."""
    pair = (relax[0], relax[1]) if relax else None
    result = DeformationService.expand(file, new_tag=new_tag, relax=pair)
    if not result.success:
        _fail(result)
    assert isinstance(result.data, dict)
    _emit(dump_json(result.data["pocset"]), output)
    if retraction is not None:
        _emit(dump_json(result.data["retraction"]), retraction)


@cli.command("scenario-gen")
@click.argument("name")
@click.argument("params", nargs=-1, type=float)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def scenario_gen_command(
    name: str, params: Sequence[float], seed: int, output: Optional[str]
) -> None:
    """Write a built-in poc-set or realization as JSON.

    NAME is one of compass, compass-pocset, grid, cube, square, path3,
    chain, pompom or random.
    """
    result = ScenarioService.generate(name, params, seed)
    if not result.success:
        _fail(result)
    _emit(dump_json(result.data), output)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
