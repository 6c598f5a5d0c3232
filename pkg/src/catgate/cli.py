"""Command-line interface: design, truth-table, simulate, sweep and converge."""

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from catgate import __version__
from catgate.analysis import (
    convergence_probe,
    entangled_state_check,
    export_json,
    fidelity_pointwise,
    scenario_truth_table,
)
from catgate.config import RunConfig, default_config, parse_config
from catgate.dynamics import dump_trajectory_csv
from catgate.errors import CatgateError, ConfigError, NumericalError
from catgate.models import DecoherenceParams, derive, quality_factors, validity_report
from catgate.scenario import GateMode, simulate
from catgate.states import LogicalAngles, logical_basis
from catgate.sweep import (
    SweepRunner,
    cell_decoherence,
    write_manifest,
    write_sweep_csv,
)

logger = logging.getLogger("catgate")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def parse_values(text: str) -> list[float]:
    """Comma-separated positive numbers; ``inf`` is allowed."""
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc
    if not values or any(value <= 0 or math.isnan(value) for value in values):
        raise argparse.ArgumentTypeError(f"expected positive numbers, got {text!r}")
    return values


def parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like 3x4, got {text!r}") from exc
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError(f"grid dimensions must be positive, got {text!r}")
    return rows, cols


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catgate",
        description="Simulate the photonic-qubit / cat-qubit controlled-phase gate.",
    )
    parser.add_argument("--version", action="version", version=f"catgate {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--json", type=Path, dest="json_out", help="also write results as JSON")

    decoherence = argparse.ArgumentParser(add_help=False)
    decoherence.add_argument("--T", type=parse_values, dest="T", help="qutrit scale T in us")
    decoherence.add_argument(
        "--kappa-inv", type=parse_values, dest="kappa_inv", help="cavity decay time in us"
    )

    modes = [mode.value for mode in GateMode]
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "design", parents=[common], help="derived couplings, gate time and validity checks"
    )

    table = sub.add_parser(
        "truth-table", parents=[common, decoherence], help="4x4 logical truth table"
    )
    table.add_argument("--mode", choices=modes, default=GateMode.CLOSED_FORM.value)

    sim = sub.add_parser(
        "simulate", parents=[common, decoherence], help="one gate run from a logical input"
    )
    sim.add_argument("--mode", choices=modes)
    sim.add_argument("--theta", type=float, default=math.pi / 4)
    sim.add_argument("--phi", type=float, default=math.pi / 4)
    sim.add_argument("--dump-trajectory", type=Path, help="CSV of recorded observables")
    sim.add_argument("--record-stride", type=int, help="record every N steps")

    sweep = sub.add_parser(
        "sweep", parents=[common, decoherence], help="fidelity over a (T, 1/kappa) grid"
    )
    sweep.add_argument("--grid", type=parse_grid, help="cells as AxB (T values x 1/kappa values)")
    sweep.add_argument("--quadrature", type=int, help="quadrature points per angle")
    sweep.add_argument("--workers", type=int, help="worker threads (CATGATE_THREADS wins)")
    sweep.add_argument("--out", type=Path, help="CSV path; the manifest goes next to it")
    sweep.add_argument("--tui", action="store_true", help="live dashboard")
    sweep.add_argument("--no-timing", action="store_true", help="write wall times as 0")

    converge = sub.add_parser(
        "converge", parents=[common], help="fidelity change under dt/2 and larger truncations"
    )
    converge.add_argument("--mode", choices=modes)
    converge.add_argument("--quadrature", type=int)
    return parser


def configure_logging(args: argparse.Namespace) -> None:
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def load(args: argparse.Namespace) -> RunConfig:
    return parse_config(args.config) if args.config else default_config()


def _single_decoherence(
    args: argparse.Namespace, config: RunConfig
) -> tuple[float, float, DecoherenceParams]:
    T = args.T[0] if args.T else config.T_values[0]
    kappa_inv = args.kappa_inv[0] if args.kappa_inv else config.kappa_inv_values[0]
    return T, kappa_inv, cell_decoherence(T, kappa_inv)


def cmd_design(args: argparse.Namespace, config: RunConfig) -> int:
    params = config.system
    derived = derive(params, config.k)
    report = validity_report(params, derived)
    print(f"delta1/2pi        = {derived.delta1:.6f} GHz")
    print(f"delta2/2pi        = {derived.delta2:.6f} GHz")
    print(f"Delta/2pi         = {derived.big_delta:.6f} GHz")
    print(f"delta1~/2pi       = {derived.delta1_tilde:.6f} GHz")
    print(f"delta2~/2pi       = {derived.delta2_tilde:.6f} GHz")
    print(f"g1/2pi            = {params.g1 * 1e3:.3f} MHz")
    print(f"g2/2pi            = {params.g2 * 1e3:.3f} MHz")
    print(f"lambda1/2pi       = {derived.lambda1 * 1e3:.4f} MHz")
    print(f"lambda2/2pi       = {derived.lambda2 * 1e3:.4f} MHz")
    print(f"lambda/2pi        = {derived.lambda_exchange * 1e3:.4f} MHz")
    print(f"chi/2pi           = {derived.chi * 1e3:.5f} MHz")
    print(f"eta/2pi           = {derived.eta * 1e3:.5f} MHz")
    print(f"eta/chi           = {derived.eta_over_chi:.4f}")
    print(f"k                 = {derived.k}")
    print(f"t_gate            = {derived.t_gate:.2f} ns ({derived.t_gate * 1e-3:.4f} us)")
    gate = config.scenario(mode=GateMode.CLOSED)
    print(f"coupling ramp     = {gate.coupling_ramp:g} ns")
    print(f"run time          = {gate.duration():.2f} ns ({config.gate_time.value})")
    print(f"validity ratios (should be >= {report.threshold:g}):")
    for name, value in report.ratios.items():
        flag = "" if value >= report.threshold else "  WEAK"
        print(f"  {name:<16}{value:10.2f}{flag}")
    print("cavity quality factors:")
    for kappa_inv in config.kappa_inv_values:
        if math.isinf(kappa_inv):
            continue
        q1, q2 = quality_factors(params, kappa_inv)
        print(f"  1/kappa = {kappa_inv:g} us: Q1 = {q1:.3e}, Q2 = {q2:.3e}")
    if args.json_out:
        export_json(
            {
                "derived": {name: getattr(derived, name) for name in derived.__slots__},
                "validity": report.ratios,
                "config_hash": config.config_hash,
            },
            args.json_out,
        )
    return EXIT_OK


def cmd_truth_table(args: argparse.Namespace, config: RunConfig) -> int:
    mode = GateMode(args.mode)
    decoherence = None
    if mode is GateMode.OPEN:
        T, kappa_inv, decoherence = _single_decoherence(args, config)
        print(f"open system at T = {T:g} us, 1/kappa = {kappa_inv:g} us")
    scenario = config.scenario(decoherence=decoherence, mode=mode)
    table = scenario_truth_table(scenario)
    print(f"mode: {mode.value}")
    print(table.format())
    print(f"conditional phase = {table.conditional_phase:+.6f} rad")
    print(f"entangled-state overlap = {entangled_state_check(gate=table.matrix):.6f}")
    if args.json_out:
        payload = table.to_dict() | {"mode": mode.value, "config_hash": config.config_hash}
        export_json(payload, args.json_out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    if args.record_stride is not None:
        config = config.with_overrides(simulation={"record_stride": args.record_stride})
    mode = GateMode(args.mode) if args.mode else config.mode
    T, kappa_inv, decoherence = _single_decoherence(args, config)
    scenario = config.scenario(decoherence=decoherence, mode=mode)
    angles = LogicalAngles(args.theta % (2 * math.pi), args.phi % (2 * math.pi))

    if args.dump_trajectory and scenario.propagation.record_stride == 0:
        scenario = scenario.with_propagation(record_stride=1000)
    trajectory = simulate(scenario, angles)
    final = trajectory.final
    rho = np.outer(final, final.conj()) if final.ndim == 1 else final
    drift = trajectory.trace_drift
    space = scenario.space
    cat_amp = scenario.params.cat_amplitude
    fidelity = fidelity_pointwise(rho, angles, cat_amp, space, scenario.fidelity_kind)
    basis = logical_basis(cat_amp, space)
    kept = float(np.real(np.trace(basis.conj().T @ rho @ basis)))

    if mode is GateMode.OPEN:
        print(f"open system at T = {T:g} us, 1/kappa = {kappa_inv:g} us")
    print(f"mode: {mode.value}, theta = {angles.theta:.6f}, phi = {angles.phi:.6f}")
    print(f"gate time = {scenario.duration():.3f} ns, {trajectory.steps} steps")
    print(f"fidelity ({scenario.fidelity_kind.value}) = {fidelity:.8f}")
    print(f"leakage = {1.0 - kept:.3e}")
    print(f"trace drift = {drift:.3e}")
    if args.dump_trajectory:
        path = dump_trajectory_csv(trajectory, args.dump_trajectory)
        print(f"trajectory written to {path}")
    if args.json_out:
        export_json(
            {
                "mode": mode.value,
                "theta": angles.theta,
                "phi": angles.phi,
                "fidelity": fidelity,
                "leakage": 1.0 - kept,
                "trace_drift": drift,
                "config_hash": config.config_hash,
            },
            args.json_out,
        )
    return EXIT_OK


def sweep_axes(args: argparse.Namespace, config: RunConfig) -> tuple[list[float], list[float]]:
    """T and 1/kappa values from the flags, the grid shape and the config."""
    t_values = args.T or list(config.T_values)
    k_values = args.kappa_inv or list(config.kappa_inv_values)
    if args.grid is None:
        return t_values, k_values
    rows, cols = args.grid

    def fit(values: list[float], count: int, given: bool, flag: str) -> list[float]:
        if len(values) == count:
            return values
        if given:
            message = f"lists {len(values)} values but --grid asks for {count}"
            raise ConfigError(message, key=flag)
        finite = [v for v in values if math.isfinite(v)]
        if count == 1:
            return [min(finite)]
        return [float(v) for v in np.linspace(min(finite), max(finite), count)]

    return (
        fit(t_values, rows, args.T is not None, "--T"),
        fit(k_values, cols, args.kappa_inv is not None, "--kappa-inv"),
    )


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    t_values, k_values = sweep_axes(args, config)
    decoherence = {"T_us": t_values, "kappa_inv_us": k_values}
    overrides: dict[str, dict] = {"decoherence": decoherence}
    if args.quadrature is not None:
        overrides["analysis"] = {"quadrature_n": args.quadrature}
    if args.no_timing:
        overrides["output"] = {"record_wall_time": False}
    if args.out is not None:
        overrides.setdefault("output", {}).update(
            {
                "directory": str(args.out.parent),
                "sweep_csv": args.out.name,
                "manifest": args.out.with_suffix(".json").name,
            }
        )
    config = config.with_overrides(**overrides)

    runner = SweepRunner(config, args.workers)
    if args.tui:
        from catgate.app import SweepApp

        SweepApp(runner).run()
        runner.stop()
        results = runner.results()
        if len(results) < len(runner.cells):
            logger.warning(
                "sweep interrupted after %d of %d cells", len(results), len(runner.cells)
            )
    else:
        results = runner.run(progress=not args.quiet)

    csv_path = write_sweep_csv(results, config.output.csv_path)
    manifest = write_manifest(
        config, results, config.output.manifest_path, runner.workers, runner.elapsed
    )
    for result in results:
        status = "" if result.ok else f"  FAILED ({result.error})"
        print(
            f"T = {result.T_us:>6g} us  1/kappa = {result.kappa_inv_us:>6g} us  "
            f"F = {result.mean_fidelity:.6f}  leakage = {result.leakage:.2e}{status}"
        )
    print(f"wrote {csv_path} and {manifest} (config hash {config.config_hash})")
    return EXIT_OK if all(result.ok for result in results) else EXIT_NUMERICAL


def cmd_converge(args: argparse.Namespace, config: RunConfig) -> int:
    if args.quadrature is not None:
        config = config.with_overrides(analysis={"quadrature_n": args.quadrature})
    mode = GateMode(args.mode) if args.mode else GateMode.CLOSED
    decoherence = cell_decoherence(config.T_values[0], config.kappa_inv_values[0])
    scenario = config.scenario(
        decoherence=decoherence if mode is GateMode.OPEN else None, mode=mode
    )
    report = convergence_probe(scenario)
    print(f"mode: {mode.value}")
    print(f"base fidelity        = {report.base_fidelity:.10f}")
    print(f"dt/2 fidelity        = {report.dt_fidelity:.10f}  (delta {report.dt_delta:.2e})")
    print(
        f"(N1+2, N2+4) fidelity = {report.truncation_fidelity:.10f}"
        f"  (delta {report.truncation_delta:.2e})"
    )
    print(f"cat tail mass        = {report.tail_mass:.2e}")
    print("PASSED" if report.passed else "FAILED: " + "; ".join(report.failures))
    if args.json_out:
        export_json(report.to_dict() | {"config_hash": config.config_hash}, args.json_out)
    return EXIT_OK if report.passed else EXIT_NUMERICAL


COMMANDS = {
    "design": cmd_design,
    "truth-table": cmd_truth_table,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    configure_logging(args)
    try:
        config = load(args)
        return COMMANDS[args.command](args, config)
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except CatgateError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
