"""Command-line entry point: validate, format, and run programs, serve the
hub and instrument sides, and inspect persisted datasets.

Exit codes are the stable machine-readable contract: 0 for success
(a run that finished), 1 for a failed run or failed verification,
2 for file and argument errors, 3 for an exhausted step budget.
"""

from __future__ import annotations

import csv
import json
import threading
import time
from pathlib import Path

import click

from falcon.bus import BusError, DEFAULT_HOST, DEFAULT_PORT, TcpBroker, TcpClient
from falcon.core import InvariantViolation
from falcon.dsl import ast, check, format_program, parse
from falcon.dsl.diagnostics import has_errors
from falcon.dsl.libraries import STANDARD_SURFACE
from falcon.hub import DatasetIntegrityError, HubService, InstrumentHub, load_dataset
from falcon.runtime import (
    Failed,
    Finished,
    StepBudgetExceeded,
    instantiate,
)
from falcon.runtime.config import RunConfig, default_config
from falcon.runtime.engine import DEFAULT_STEP_BUDGET, EngineError
from falcon.runtime.stdlib import config_value
from falcon.runtime.values import (
    ArrayVal,
    BoolVal,
    IntVal,
    NIL_VALUE,
    StructVal,
    TextVal,
    value_to_jsonable,
)
from falcon.server import InstrumentServer
from falcon.session import instrument_entries, open_loopback, open_remote


class CliError(click.ClickException):
    """A file or argument problem; always exits with code 2."""

    exit_code = 2


def _fail(message: str) -> CliError:
    return CliError(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc.strerror or exc}")


def _read_json(path: str) -> object:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(f"{path} is not valid JSON: {exc}")


def _parse_program(path: str):
    result = parse(_read_text(path))
    if result.diagnostics:
        for diagnostic in result.diagnostics:
            click.echo(str(diagnostic), err=True)
        raise _fail(f"{path} does not parse")
    return result.program


def _parse_endpoint(bus: str) -> tuple[str, int]:
    host, sep, port_text = bus.rpartition(":")
    if not sep or not host:
        raise _fail(f"bus endpoint {bus!r} must look like host:port")
    try:
        port = int(port_text)
    except ValueError:
        raise _fail(f"bus endpoint port {port_text!r} is not a number")
    if not 0 < port < 65536:
        raise _fail(f"bus endpoint port {port} is out of range")
    return host, port


def _load_config(path) -> RunConfig:
    if path is None:
        return default_config()
    document = _read_json(path)
    try:
        return RunConfig.from_dict(document)
    except InvariantViolation as exc:
        raise _fail(f"{path}: {exc}")


def _describe_type(type_expr) -> str:
    if isinstance(type_expr, ast.IntType):
        return "int"
    if isinstance(type_expr, ast.StringType):
        return "string"
    if isinstance(type_expr, ast.BoolType):
        return "bool"
    if isinstance(type_expr, ast.ErrorType):
        return "Error"
    if isinstance(type_expr, ast.StructType):
        return type_expr.name
    if isinstance(type_expr, ast.LibType):
        return f"{type_expr.library}::{type_expr.name}"
    if isinstance(type_expr, ast.GenericType):
        return f"{_describe_type(type_expr.base)}<{_describe_type(type_expr.arg)}>"
    return type(type_expr).__name__


def _convert_argument(name: str, value: object, type_expr, program, config: RunConfig):
    """JSON document value to a runtime value of the declared type."""
    described = _describe_type(type_expr)
    if isinstance(type_expr, ast.IntType):
        if isinstance(value, bool) or not isinstance(value, int):
            raise _fail(f"argument {name!r} expects an int, got {value!r}")
        return IntVal(value)
    if isinstance(type_expr, ast.StringType):
        if not isinstance(value, str):
            raise _fail(f"argument {name!r} expects a string, got {value!r}")
        return TextVal(value)
    if isinstance(type_expr, ast.BoolType):
        if not isinstance(value, bool):
            raise _fail(f"argument {name!r} expects a bool, got {value!r}")
        return BoolVal(value)
    if isinstance(type_expr, ast.LibType):
        if type_expr.library == "config" and type_expr.name == "Config":
            if value is not None:
                raise _fail(
                    f"argument {name!r} is the run configuration; pass null"
                )
            return config_value(config)
        raise _fail(f"argument {name!r} of type {described} cannot be given as JSON")
    if isinstance(type_expr, ast.GenericType):
        if _describe_type(type_expr.base) != "array::Array":
            raise _fail(f"argument {name!r} of type {described} cannot be given as JSON")
        if not isinstance(value, list):
            raise _fail(f"argument {name!r} expects an array, got {value!r}")
        elements = tuple(
            _convert_argument(f"{name}[{i}]", item, type_expr.arg, program, config)
            for i, item in enumerate(value)
        )
        return ArrayVal(elements, type_expr.arg)
    if isinstance(type_expr, ast.StructType):
        decl = program.struct(type_expr.name)
        if decl is None:
            raise _fail(f"argument {name!r} names unknown struct {type_expr.name!r}")
        if not isinstance(value, dict):
            raise _fail(f"argument {name!r} expects an object, got {value!r}")
        declared = {field.name for field in decl.fields}
        given = set(value)
        if declared != given:
            missing = ", ".join(sorted(declared - given))
            extra = ", ".join(sorted(given - declared))
            parts = []
            if missing:
                parts.append(f"missing {missing}")
            if extra:
                parts.append(f"unexpected {extra}")
            raise _fail(
                f"argument {name!r} fields do not match {decl.name}: "
                + "; ".join(parts)
            )
        fields = {
            field.name: _convert_argument(
                f"{name}.{field.name}", value[field.name], field.type, program, config
            )
            for field in decl.fields
        }
        return StructVal(decl, fields)
    if isinstance(type_expr, ast.ErrorType):
        if value is not None:
            raise _fail(f"argument {name!r} expects null for an Error")
        return NIL_VALUE
    raise _fail(f"argument {name!r} of type {described} cannot be given as JSON")


def _bind_arguments(decl, document: object, program, config: RunConfig) -> list:
    if not isinstance(document, dict):
        raise _fail("argument document must be a JSON object")
    declared = [param.name for param in decl.params]
    given = set(document)
    if set(declared) != given:
        missing = ", ".join(sorted(set(declared) - given))
        extra = ", ".join(sorted(given - set(declared)))
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise _fail(
            "argument document keys do not match autotuner parameters: "
            + "; ".join(parts)
        )
    return [
        _convert_argument(param.name, document[param.name], param.type, program, config)
        for param in decl.params
    ]


def _block_until_interrupted() -> None:
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        click.echo("interrupted, shutting down")


@click.group()
def main() -> None:
    """Autotuning stack tools: programs, services, and datasets."""


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def validate(path: str) -> None:
    """Parse and check a program, printing diagnostics."""
    program = _parse_program(path)
    diagnostics = check(program, STANDARD_SURFACE)
    for diagnostic in diagnostics:
        click.echo(str(diagnostic))
    if has_errors(diagnostics):
        raise SystemExit(1)
    click.echo(f"{path}: ok")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--write", is_flag=True, help="Rewrite the file in place.")
def fmt(path: str, write: bool) -> None:
    """Print a program in canonical formatting."""
    program = _parse_program(path)
    formatted = format_program(program)
    if write:
        Path(path).write_text(formatted, encoding="utf-8")
        click.echo(f"{path}: formatted")
    else:
        click.echo(formatted, nl=False)


@main.command()
@click.option("--program", "program_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--autotuner", "autotuner_name", default=None,
              help="Autotuner to run; defaults to the only one in the program.")
@click.option("--args", "args_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON document mapping parameter names to values.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Run configuration JSON; defaults to the packaged one.")
@click.option("--bus", "bus_endpoint", default=None,
              help="Attach to a running bus at host:port.")
@click.option("--loopback", is_flag=True,
              help="Host bus, hub, and simulated instruments in process.")
@click.option("--run-dir", "run_dir", default=".",
              type=click.Path(file_okay=False))
@click.option("--max-steps", "max_steps", default=DEFAULT_STEP_BUDGET,
              show_default=True, type=click.IntRange(min=1))
def run(
    program_path: str,
    autotuner_name,
    args_path,
    config_path,
    bus_endpoint,
    loopback: bool,
    run_dir: str,
    max_steps: int,
) -> None:
    """Run an autotuner to terminal, writing trace and outputs."""
    if loopback and bus_endpoint:
        raise _fail("--loopback and --bus are mutually exclusive")
    if not loopback and not bus_endpoint:
        raise _fail("choose a bus: --loopback or --bus host:port")

    program = _parse_program(program_path)
    if autotuner_name is None:
        if len(program.autotuners) != 1:
            names = ", ".join(a.name for a in program.autotuners)
            raise _fail(f"--autotuner is required; program declares: {names}")
        autotuner_name = program.autotuners[0].name
    decl = program.autotuner(autotuner_name)
    if decl is None:
        raise _fail(f"program has no autotuner {autotuner_name!r}")

    config = _load_config(config_path)
    document = _read_json(args_path) if args_path else {}

    diagnostics = check(program, STANDARD_SURFACE)
    if has_errors(diagnostics):
        for diagnostic in diagnostics:
            click.echo(str(diagnostic), err=True)
        raise _fail(f"{program_path} does not check")
    arguments = _bind_arguments(decl, document, program, config)

    run_path = Path(run_dir)
    run_path.mkdir(parents=True, exist_ok=True)

    if loopback:
        session = open_loopback(config, run_dir=str(run_path))
    else:
        host, port = _parse_endpoint(bus_endpoint)
        try:
            session = open_remote(config, host, port)
        except BusError as exc:
            raise _fail(str(exc))
    with session:
        started = time.monotonic()
        try:
            execution = instantiate(
                program, autotuner_name, arguments, session.registry
            )
        except EngineError as exc:
            raise _fail(str(exc))
        outcome = execution.run_to_terminal(max_steps)
        elapsed = time.monotonic() - started

        trace_path = run_path / "trace.ndjson"
        with trace_path.open("w", encoding="utf-8") as handle:
            for event in execution.trace_jsonable():
                handle.write(json.dumps(event, sort_keys=True) + "\n")
        for line in execution.output:
            click.echo(line)

        if isinstance(outcome, Finished):
            outputs = {
                name: value_to_jsonable(value)
                for name, value in outcome.outputs.items()
            }
            (run_path / "outputs.json").write_text(
                json.dumps(outputs, indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            click.echo(
                f"{autotuner_name} finished in {elapsed:.2f} s:"
                f" {len(execution.trace)} transitions,"
                f" outputs {', '.join(outputs) or 'none'}"
            )
            return
        if isinstance(outcome, Failed):
            click.echo(f"{autotuner_name} failed: {outcome.message}")
            raise SystemExit(1)
        if isinstance(outcome, StepBudgetExceeded):
            click.echo(
                f"{autotuner_name} exceeded the step budget ({max_steps} steps)"
            )
            raise SystemExit(3)
        raise SystemExit(1)


@main.command("serve-hub")
@click.option("--bus", "bus_endpoint", default=f"{DEFAULT_HOST}:{DEFAULT_PORT}",
              show_default=True, help="Endpoint to host the bus on.")
@click.option("--run-dir", "run_dir", default=".",
              type=click.Path(file_okay=False))
def serve_hub(bus_endpoint: str, run_dir: str) -> None:
    """Host the message bus and the instrument hub until interrupted."""
    host, port = _parse_endpoint(bus_endpoint)
    Path(run_dir).mkdir(parents=True, exist_ok=True)
    try:
        broker = TcpBroker(host=host, port=port)
    except OSError as exc:
        raise _fail(f"cannot listen on {bus_endpoint}: {exc}")
    hub = InstrumentHub(run_dir=run_dir)
    client = TcpClient(host=host, port=broker.port)
    service = HubService(hub, client)
    click.echo(f"hub serving on {host}:{broker.port}, run dir {run_dir}")
    try:
        _block_until_interrupted()
    finally:
        service.close()
        client.close()
        broker.close()


@main.command("serve-instruments")
@click.option("--bus", "bus_endpoint", default=f"{DEFAULT_HOST}:{DEFAULT_PORT}",
              show_default=True, help="Bus endpoint to attach to.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Run configuration with instrument definitions.")
def serve_instruments(bus_endpoint: str, config_path) -> None:
    """Attach instrument workers to a running bus until interrupted."""
    host, port = _parse_endpoint(bus_endpoint)
    config = _load_config(config_path)
    entries = instrument_entries(config)
    try:
        client = TcpClient(host=host, port=port)
    except (BusError, OSError) as exc:
        raise _fail(f"cannot reach the bus at {bus_endpoint}: {exc}")
    server = InstrumentServer(client, entries)
    for instrument_id, worker in server.workers.items():
        state = "ready" if worker.alive else f"dead: {worker.death_reason}"
        click.echo(f"instrument {instrument_id}: {state}")
    for failure in server.registration_errors:
        click.echo(f"registration problem: {failure}", err=True)
    try:
        _block_until_interrupted()
    finally:
        server.close()
        client.close()


@main.command("inspect-dataset")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--report", is_flag=True,
              help="Write rows as CSV and render figures next to it.")
def inspect_dataset(directory: str, report: bool) -> None:
    """Print a dataset summary, verifying its checksum."""
    try:
        manifest, rows = load_dataset(directory)
    except DatasetIntegrityError as exc:
        click.echo(f"dataset is corrupt: {exc}", err=True)
        raise SystemExit(1)
    except (OSError, ValueError, KeyError) as exc:
        raise _fail(f"cannot load dataset at {directory}: {exc}")

    names = [f"{column.name} ({column.unit})" for column in manifest.columns]
    click.echo(f"job {manifest.job_id} [{manifest.schema_id}]")
    click.echo(f"columns: {', '.join(names)}")
    click.echo(f"rows: {len(rows)} (manifest says {manifest.row_count})")
    click.echo("checksum: ok")
    if rows:
        click.echo(f"first: {', '.join(f'{v:.9g}' for v in rows[0])}")
        click.echo(f"last:  {', '.join(f'{v:.9g}' for v in rows[-1])}")

    if report:
        _write_report(Path(directory), manifest, rows)


def _write_report(directory: Path, manifest, rows) -> None:
    csv_path = directory / "data.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([column.name for column in manifest.columns])
        writer.writerows(rows)
    click.echo(f"wrote {csv_path}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    columns = manifest.columns
    swept = "sweptTarget" in manifest.request
    if swept and len(columns) > 1:
        x = [row[0] for row in rows]
        x_label = f"{columns[0].name} ({columns[0].unit})"
        measured = list(enumerate(columns))[1:]
    else:
        x = list(range(len(rows)))
        x_label = "row"
        measured = list(enumerate(columns))
    figure, axes = plt.subplots(figsize=(7, 4))
    for index, column in measured:
        axes.plot(x, [row[index] for row in rows], label=column.name)
    axes.set_xlabel(x_label)
    axes.set_ylabel(", ".join(f"{c.name} ({c.unit})" for _i, c in measured))
    axes.set_title(f"job {manifest.job_id[:8]} [{manifest.schema_id}]")
    if measured:
        axes.legend(loc="best")
    figure.tight_layout()
    figure_path = directory / "report.png"
    figure.savefig(figure_path, dpi=120)
    plt.close(figure)
    click.echo(f"wrote {figure_path}")


if __name__ == "__main__":
    main()
