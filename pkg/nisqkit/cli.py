"""Command line front end: analyze, prune, ansatz, calibrate, experiment, mitigate."""

from __future__ import annotations

import contextlib
import json
import sys
from datetime import datetime, timezone

import click

from nisqkit import ConfigError, Settings, create_settings
from nisqkit.experiments import ExperimentError, run_experiment
from nisqkit.expressivity import (
    ExpressivityError,
    classify_parameters,
    inductive_ansatz,
    remove_redundant,
)
from nisqkit.formats import (
    FormatError,
    build_meta,
    decode_circuit,
    decode_counts,
    decode_experiment_config,
    decode_noise_model,
    decode_noise_or_calibration,
    decode_observable,
    decode_report,
    dump_json,
    encode_calibration,
    encode_circuit,
    encode_report,
    encode_value,
    load_json,
    meta_path,
)
from nisqkit.helpers import format_real, write_csv
from nisqkit.models import CalibrationRecord, CircuitError, ParametricCircuit
from nisqkit.readout import MitigationError, SimulatedExecutor, calibration_series, mitigated_estimate

USAGE_EXIT = 1
DATA_EXIT = 2

DOMAIN_ERRORS = (CircuitError, ExpressivityError, MitigationError, ExperimentError, FormatError)


class DataError(click.ClickException):
    """Input files parsed but their content is unusable."""

    exit_code = DATA_EXIT


class ToolkitGroup(click.Group):
    """Click group with usage errors on exit code 1 and data errors on 2."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as exc:
            exc.show()
            sys.exit(USAGE_EXIT)
        except click.ClickException as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(USAGE_EXIT)


@contextlib.contextmanager
def domain_errors():
    try:
        yield
    except DOMAIN_ERRORS as exc:
        raise DataError(str(exc)) from exc


def _settings() -> Settings:
    return click.get_current_context().find_object(Settings)


def _seed(seed: int | None) -> int:
    return _settings().seed if seed is None else seed


def _timestamp(no_timestamp: bool) -> str | None:
    return None if no_timestamp else datetime.now(timezone.utc).isoformat()


def _load_circuit(path: str) -> ParametricCircuit:
    circuit = decode_circuit(load_json(path))
    limit = _settings().max_qubits
    if circuit.num_qubits > limit:
        raise DataError(f"circuit has {circuit.num_qubits} qubits; the limit is {limit}")
    return circuit


def _parse_point(raw: str | None, circuit: ParametricCircuit):
    if raw is None:
        return None
    try:
        point = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"not a comma-separated list of numbers: {raw!r}") from exc
    if len(point) != circuit.num_parameters:
        raise click.BadParameter(f"expected {circuit.num_parameters} values, got {len(point)}")
    return point


def _emit(data, out: str | None) -> None:
    if out:
        dump_json(data, out)
        click.echo(f"Wrote {out}")
    else:
        click.echo(json.dumps(encode_value(data), indent=2))


@click.group(cls=ToolkitGroup, help="Expressivity analysis and readout-error mitigation toolkit.")
@click.pass_context
def cli(ctx: click.Context) -> None:
    try:
        ctx.obj = create_settings()
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


point_option = click.option("--params", "point", default=None,
                            help="Comma-separated evaluation point (random when omitted).")
seed_option = click.option("--seed", type=int, default=None, help="Top-level seed (defaults to NISQKIT_SEED).")
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output path.")


@cli.command("analyze")
@click.option("--circuit", "circuit_path", required=True, type=click.Path(exists=True, dir_okay=False))
@point_option
@click.option("--epsilon", type=float, default=None, help="Redundancy threshold on the smallest eigenvalue.")
@click.option("--mode", type=click.Choice(["exact", "sampled"]), default="exact")
@click.option("--shots", type=click.IntRange(min=1), default=None, help="Shots per Hadamard test (sampled mode).")
@click.option("--dim-target", type=int, default=None, help="Override the state-space dimension.")
@seed_option
@out_option
def analyze(circuit_path, point, epsilon, mode, shots, dim_target, seed, out) -> None:
    """Classify circuit parameters as independent or redundant."""
    with domain_errors():
        circuit = _load_circuit(circuit_path)
        report = classify_parameters(
            circuit, _parse_point(point, circuit), epsilon=epsilon, mode=mode, shots=shots,
            seed=_seed(seed), dim_target=dim_target,
        )
    _emit(encode_report(report), out)
    click.echo(
        f"{report.independent_count} independent, {len(report.redundant_parameters)} redundant "
        f"(target {report.dim_target})",
        err=True,
    )


@cli.command("prune")
@click.option("--circuit", "circuit_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Report from `analyze` (classified afresh when omitted).")
@click.option("--freeze", multiple=True, help="NAME=VALUE angle for a redundant parameter (default 0).")
@point_option
@click.option("--epsilon", type=float, default=None)
@seed_option
@out_option
def prune(circuit_path, report_path, freeze, point, epsilon, seed, out) -> None:
    """Replace redundant parameters by fixed angles."""
    freeze_values = {}
    for item in freeze:
        name, sep, value = item.partition("=")
        try:
            freeze_values[name.strip()] = float(value)
        except ValueError:
            sep = ""
        if not sep:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint="--freeze")
    with domain_errors():
        circuit = _load_circuit(circuit_path)
        if report_path:
            report = decode_report(load_json(report_path))
        else:
            report = classify_parameters(circuit, _parse_point(point, circuit), epsilon=epsilon, seed=_seed(seed))
        reduced = remove_redundant(circuit, report, freeze_values)
    _emit(encode_circuit(reduced), out)


@cli.command("ansatz")
@click.option("--qubits", type=click.IntRange(min=1), required=True)
@click.option("--no-phase", is_flag=True, help="Drop the global-phase direction.")
@click.option("--check", is_flag=True, help="Classify the candidate and report its independent count.")
@seed_option
@out_option
def ansatz(qubits, no_phase, check, seed, out) -> None:
    """Write the inductively built candidate circuit."""
    if qubits > _settings().max_qubits:
        raise click.BadParameter(f"at most {_settings().max_qubits} qubits", param_hint="--qubits")
    with domain_errors():
        circuit = inductive_ansatz(qubits, include_phase=not no_phase, seed=_seed(seed))
        if check:
            report = classify_parameters(
                circuit, seed=_seed(seed),
                dim_target=None if not no_phase else 2 ** (qubits + 1) - 2,
            )
            click.echo(f"{report.independent_count} of {circuit.num_parameters} parameters independent", err=True)
    _emit(encode_circuit(circuit), out)


@cli.command("calibrate")
@click.option("--noise", "noise_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="True readout model of the simulated device.")
@click.option("--shots", type=click.IntRange(min=1), default=4096)
@click.option("--runs", type=click.IntRange(min=1), default=1, help="Repeated calibrations.")
@seed_option
@out_option
@click.option("--no-timestamp", is_flag=True, help="Omit timestamps for byte-identical output.")
def calibrate_cmd(noise_path, shots, runs, seed, out, no_timestamp) -> None:
    """Estimate flip probabilities from |0...0> and |1...1> preparations."""
    with domain_errors():
        noise = decode_noise_model(load_json(noise_path))
        executor = SimulatedExecutor(noise.num_qubits, noise)
        stamp = _timestamp(no_timestamp)
        records = [
            CalibrationRecord(r.model, r.shots, r.stderr0, r.stderr1, r.run_index, stamp)
            for r in calibration_series(executor, runs, shots, _seed(seed))
        ]
    encoded = [encode_calibration(r) for r in records]
    _emit(encoded[0] if runs == 1 else encoded, out)


@cli.command("experiment")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@seed_option
@out_option
@click.option("--no-timestamp", is_flag=True, help="Omit created_at from the metadata sidecar.")
def experiment(config_path, seed, out, no_timestamp) -> None:
    """Run a histogram, scaling or eigenvalue experiment and write CSV."""
    settings = _settings()
    with domain_errors():
        raw = load_json(config_path)
        config = decode_experiment_config(raw, settings.seed)
        if seed is not None:
            raw = {**raw, "seed": seed}
            config = decode_experiment_config(raw, settings.seed)
        target = out or config.output
        if not target:
            raise click.UsageError("provide --out or an 'output' key in the config")
        result = run_experiment(config, bootstrap=settings.bootstrap, max_diag_qubits=settings.max_diag_qubits)
    rows = write_csv(result.rows, result.headers, target)
    dump_json(build_meta(raw, config.seed, result.meta, timestamp=not no_timestamp), meta_path(target))
    click.echo(f"Wrote {rows} rows to {target}")


@cli.command("mitigate")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--observable", "observable_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--noise", "noise_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Noise model or calibration record.")
@click.option("--error-bars", is_flag=True, help="Also print shot and calibration standard errors.")
def mitigate(counts_path, observable_path, noise_path, error_bars) -> None:
    """Print the readout-mitigated expectation value."""
    with domain_errors():
        counts = decode_counts(load_json(counts_path))
        observable = decode_observable(load_json(observable_path))
        calibration = decode_noise_or_calibration(load_json(noise_path))
        estimate = mitigated_estimate(counts, observable, calibration)
    if error_bars:
        click.echo(" ".join(format_real(x) for x in (
            estimate.value, estimate.shot_stderr, estimate.calibration_stderr,
        )))
    else:
        click.echo(format_real(estimate.value))
