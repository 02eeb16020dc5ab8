"""Command-line interface: deterministic plot-ready data files and reports.

Subcommands: spectrum, kernel, evolve, compare, lindblad-check, fanodiag,
decay-rate.  Every run is controlled by one JSON config (see
:mod:`fanomode.config`); flags override file values.  Output is CSV with a
``#``-prefixed metadata header (or a JSON mirror via ``--format json``),
printed with 17 significant digits so values round-trip exactly, and carries
no wall-clock content: identical configs give byte-identical files.

Exit codes: 0 success, 1 usage or invalid input, 2 property violation,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import initial_c1_from_config, load_config, model_from_config
from .dynamics import (
    DensityMatrix3,
    Trajectory,
    build_discretized,
    decay_rate,
    solve_amplitudes,
    solve_discretized,
    solve_qme,
    solve_volterra,
)
from .embedding import embed_from_model, is_lindblad, kossakowski
from .errors import (
    ConfigError,
    DomainError,
    FactorizationError,
    FanomodeError,
    ParameterError,
    RecurrenceError,
    SpectralError,
    StepSizeError,
    UnsupportedRegimeError,
)
from .fanodiag import fano_lambda
from .spectral import (
    TWO_PI,
    ReducedForm,
    evaluate_J,
    evaluate_reduced_J,
    kernel_by_quadrature,
    memory_kernel,
    pole_residue_from_model,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PROPERTY = 2
EXIT_SOLVER = 3

_UNITS_NOTE = (
    "frequencies and rates share the configured model's unit system "
    "(presets: kappa = 1)"
)

# Eigenvalue / jump-increment levels beyond integrator noise that flag a
# positivity failure in `evolve` output.
_EIG_VIOLATION = -1e-9
_INCREMENT_VIOLATION = -1e-11
_TRACE_VIOLATION = 1e-8


class PropertyViolation(FanomodeError):
    """A run finished but violated a property it was expected to satisfy."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage is 1
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _format_number(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: str, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_table(
    command: str,
    config: dict,
    columns: list[str],
    rows: np.ndarray,
    meta: dict[str, Any],
    fmt: str,
    header: bool,
) -> str:
    if fmt == "csv":
        lines = []
        if header:
            lines.append(f"# fanomode {__version__}")
            lines.append(f"# command: {command}")
            lines.append(f"# units: {_UNITS_NOTE}")
            lines.append(
                "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":"))
            )
            for key in sorted(meta):
                lines.append(f"# {key}: {meta[key]}")
            lines.append("# columns: " + ",".join(columns))
        for row in rows:
            lines.append(",".join(_format_number(v) for v in row))
        return "\n".join(lines) + "\n"
    payload: dict[str, Any] = {"columns": columns, "rows": rows.tolist()}
    if header:
        payload["tool"] = f"fanomode {__version__}"
        payload["command"] = command
        payload["units"] = _UNITS_NOTE
        payload["config"] = config
        payload["meta"] = meta
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _render_report(
    command: str, config: dict, payload: dict[str, Any], fmt: str, header: bool
) -> str:
    if fmt == "csv":
        lines = []
        if header:
            lines.append(f"# fanomode {__version__}")
            lines.append(f"# command: {command}")
            lines.append(
                "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":"))
            )
        lines.append("key,value")
        for key, value in payload.items():
            lines.append(f"{key},{'' if value is None else value}")
        return "\n".join(lines) + "\n"
    doc: dict[str, Any] = dict(payload)
    if header:
        doc["tool"] = f"fanomode {__version__}"
        doc["command"] = command
        doc["config"] = config
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _run_method(method: str, config: dict) -> Trajectory:
    model = model_from_config(config)
    solver = config["solver"]
    c1_0 = initial_c1_from_config(config)
    h, t_max = solver["h"], solver["t_max"]
    if method == "volterra":
        return solve_volterra(
            pole_residue_from_model(model), model.omega_A, c1_0, t_max, h
        )
    if method == "amplitudes":
        return solve_amplitudes(embed_from_model(model), c1_0, t_max, h)
    if method == "qme":
        rho_0 = DensityMatrix3.from_amplitudes(
            math.sqrt(max(0.0, 1.0 - abs(c1_0) ** 2)), c1_0, 0.0
        )
        return solve_qme(embed_from_model(model), rho_0, t_max, h)
    if method == "discretized":
        reservoir = build_discretized(
            pole_residue_from_model(model), solver["window"], solver["n_modes"]
        )
        return solve_discretized(reservoir, model.omega_A, c1_0, t_max, h)
    raise ConfigError(
        f"unknown solver method {method!r} "
        "(expected volterra, amplitudes, qme, or discretized)"
    )


def cmd_spectrum(config: dict, out: str, fmt: str, header: bool) -> int:
    section = config["spectrum"]
    if section["n_points"] < 2:
        raise ConfigError("spectrum.n_points must be >= 2")
    if not section["epsilon_max"] > section["epsilon_min"]:
        raise ConfigError("spectrum.epsilon_max must exceed epsilon_min")
    if not section["curves"]:
        raise ConfigError("spectrum.curves must not be empty")
    eps = np.linspace(
        section["epsilon_min"], section["epsilon_max"], section["n_points"]
    )
    columns = ["epsilon"]
    data = [eps]
    meta: dict[str, Any] = {}
    for i, curve in enumerate(section["curves"], start=1):
        q = curve["q_abs"] * np.exp(1j * curve["delta_phi"])
        rf = ReducedForm(gamma=1.0, q=complex(q), eta=curve["eta"])
        data.append(TWO_PI * evaluate_reduced_J(rf, eps))
        columns.append(f"curve_{i}")
        meta[f"curve_{i}"] = (
            f"2piJ/gamma at eta={curve['eta']:g} |q|={curve['q_abs']:g} "
            f"dphi={curve['delta_phi']:g}"
        )
    text = _render_table(
        "spectrum", config, columns, np.column_stack(data), meta, fmt, header
    )
    _write_text(out, text)
    return EXIT_OK


def cmd_kernel(config: dict, out: str, fmt: str, header: bool) -> int:
    section = config["kernel"]
    if section["n_points"] < 2:
        raise ConfigError("kernel.n_points must be >= 2")
    if section["tau_max"] <= 0:
        raise ConfigError("kernel.tau_max must be > 0")
    model = model_from_config(config)
    spec = pole_residue_from_model(model)
    taus = np.linspace(0.0, section["tau_max"], section["n_points"])
    kernel = memory_kernel(spec, taus)
    columns = ["tau", "re_regular", "im_regular", "abs_regular"]
    data = [taus, kernel.regular.real, kernel.regular.imag, np.abs(kernel.regular)]
    meta: dict[str, Any] = {
        "delta_weight": _format_number(kernel.delta_weight),
        "pole": f"{spec.z1.real:.17g}{spec.z1.imag:+.17g}j",
    }
    if section["quadrature_check"]:
        values = np.empty(len(taus), dtype=complex)
        estimates = np.empty(len(taus))
        for i, tau in enumerate(taus):
            result = kernel_by_quadrature(
                spec, float(tau), section["quadrature_window"],
                section["quadrature_points"],
            )
            values[i] = result.value
            estimates[i] = result.error_estimate
        columns += ["re_quadrature", "im_quadrature", "quadrature_error_estimate",
                    "abs_deviation"]
        data += [values.real, values.imag, estimates, np.abs(values - kernel.regular)]
        meta["max_abs_deviation"] = _format_number(
            float(np.max(np.abs(values - kernel.regular)))
        )
    text = _render_table(
        "kernel", config, columns, np.column_stack(data), meta, fmt, header
    )
    _write_text(out, text)
    return EXIT_OK


def _evolve_table(traj: Trajectory) -> tuple[list[str], list[np.ndarray], list[str]]:
    """Columns, data, and any property-violation messages for one run."""
    violations: list[str] = []
    if traj.method == "qme":
        rho = traj.rho
        trace = np.trace(rho, axis1=1, axis2=2).real
        min_eig = np.linalg.eigvalsh(rho)[:, 0]
        columns = ["t", "rho_00", "rho_11", "rho_22", "trace", "min_eigenvalue"]
        data = [traj.times, rho[:, 0, 0].real, rho[:, 1, 1].real, rho[:, 2, 2].real,
                trace, min_eig]
        if float(np.min(min_eig)) < _EIG_VIOLATION:
            violations.append(
                f"density matrix loses positivity (min eigenvalue {np.min(min_eig):.3e})"
            )
        if float(np.max(np.abs(trace - 1.0))) > _TRACE_VIOLATION:
            violations.append(
                f"trace drifts by {np.max(np.abs(trace - 1.0)):.3e}"
            )
        return columns, data, violations
    if traj.method == "amplitudes":
        norm = (
            abs(traj.c0) ** 2 + traj.c1_abs2 + np.abs(traj.b1) ** 2 + traj.pi_j
        )
        columns = ["t", "c1_abs2", "b1_abs2", "pi_j", "norm_sum"]
        data = [traj.times, traj.c1_abs2, np.abs(traj.b1) ** 2, traj.pi_j, norm]
        increments = np.diff(traj.pi_j)
        if increments.size and float(np.min(increments)) < _INCREMENT_VIOLATION:
            violations.append(
                f"jump probability decreases (min increment {np.min(increments):.3e})"
            )
        if float(np.max(np.abs(norm - 1.0))) > _TRACE_VIOLATION:
            violations.append(
                f"norm identity drifts by {np.max(np.abs(norm - 1.0)):.3e}"
            )
        return columns, data, violations
    if traj.method == "discretized":
        reservoir = traj.extras["reservoir_population"]
        norm = abs(traj.c0) ** 2 + traj.c1_abs2 + reservoir
        columns = ["t", "c1_abs2", "reservoir_population", "norm_sum"]
        data = [traj.times, traj.c1_abs2, reservoir, norm]
        if float(np.max(np.abs(norm - 1.0))) > _TRACE_VIOLATION:
            violations.append(
                f"norm conservation drifts by {np.max(np.abs(norm - 1.0)):.3e}"
            )
        return columns, data, violations
    return ["t", "c1_abs2"], [traj.times, traj.c1_abs2], violations


def cmd_evolve(config: dict, out: str, fmt: str, header: bool) -> int:
    method = config["solver"]["method"]
    traj = _run_method(method, config)
    columns, data, violations = _evolve_table(traj)
    meta = {"method": method}
    text = _render_table(
        "evolve", config, columns, np.column_stack(data), meta, fmt, header
    )
    _write_text(out, text)
    if violations:
        raise PropertyViolation("; ".join(violations))
    return EXIT_OK


def cmd_compare(config: dict, out: str, fmt: str, header: bool) -> int:
    section = config["compare"]
    traj_a = _run_method(section["method_a"], config)
    traj_b = _run_method(section["method_b"], config)
    abs_a = np.abs(traj_a.c1) if traj_a.c1 is not None else np.sqrt(
        traj_a.rho[:, 1, 1].real
    )
    abs_b = np.abs(traj_b.c1) if traj_b.c1 is not None else np.sqrt(
        traj_b.rho[:, 1, 1].real
    )
    residual = np.abs(abs_a - abs_b)
    max_residual = float(np.max(residual))
    columns = ["t", f"c1_abs_{section['method_a']}", f"c1_abs_{section['method_b']}",
               "residual"]
    rows = np.column_stack([traj_a.times, abs_a, abs_b, residual])
    meta = {
        "max_residual": _format_number(max_residual),
        "tolerance": _format_number(section["tolerance"]),
    }
    text = _render_table("compare", config, columns, rows, meta, fmt, header)
    _write_text(out, text)
    if max_residual > section["tolerance"]:
        raise PropertyViolation(
            f"cross-method residual {max_residual:.3e} exceeds tolerance "
            f"{section['tolerance']:.3e}"
        )
    return EXIT_OK


def cmd_lindblad_check(config: dict, out: str, fmt: str, header: bool) -> int:
    model = model_from_config(config)
    qme = embed_from_model(model)
    gm = kossakowski(qme)
    report = is_lindblad(qme)
    payload = {
        "gamma": qme.gamma,
        "kappa": qme.kappa,
        "gamma_F": str(qme.gamma_F),
        "eigenvalue_min": report.eigenvalues[0],
        "eigenvalue_max": report.eigenvalues[1],
        "det": report.det,
        "trace": report.trace,
        "scalar_condition": report.scalar_condition,
        "j0_repair_threshold": report.j0_repair_threshold,
        "psd_tolerance": report.tolerance,
        "verdict": "PASS" if report.passed else "FAIL",
    }
    print(f"Kossakowski matrix: {gm.matrix.tolist()}")
    print(
        f"eigenvalues: ({report.eigenvalues[0]:.17g}, {report.eigenvalues[1]:.17g})"
        f"  det: {report.det:.17g}"
    )
    print(
        f"scalar condition (-Im z1) pi J0 - |nu|^2 = {report.scalar_condition:.17g}"
        f"  repair threshold J0* = {report.j0_repair_threshold:.17g}"
    )
    print(f"verdict: {payload['verdict']}")
    if out:
        _write_text(out, _render_report("lindblad-check", config, payload, fmt, header))
    if not report.passed:
        raise PropertyViolation("generator is not of Lindblad form")
    return EXIT_OK


def cmd_fanodiag(config: dict, out: str, fmt: str, header: bool) -> int:
    section = config["fanodiag"]
    if section["n_points"] < 2:
        raise ConfigError("fanodiag.n_points must be >= 2")
    if section["half_width"] <= 0:
        raise ConfigError("fanodiag.half_width must be > 0")
    model = model_from_config(config)
    if model.eta != 1.0:
        raise UnsupportedRegimeError(
            f"the coupling identity holds only for eta = 1, got eta = {model.eta}"
        )
    grid = np.linspace(
        model.omega_C - section["half_width"],
        model.omega_C + section["half_width"],
        section["n_points"],
    )
    lam_sq = TWO_PI * np.abs(fano_lambda(model, grid, section["psi"])) ** 2
    j_vals = TWO_PI * evaluate_J(pole_residue_from_model(model), grid)
    diff = np.abs(lam_sq - j_vals)
    max_rel_error = float(np.max(diff) / max(np.max(np.abs(j_vals)), 1e-300))
    columns = ["omega", "twopi_lambda_sq", "twopi_J", "abs_diff"]
    rows = np.column_stack([grid, lam_sq, j_vals, diff])
    meta = {"max_rel_error": _format_number(max_rel_error)}
    text = _render_table("fanodiag", config, columns, rows, meta, fmt, header)
    _write_text(out, text)
    print(f"max relative deviation of 2pi|Lambda|^2 from 2piJ: {max_rel_error:.3e}")
    if max_rel_error > 1e-12:
        raise PropertyViolation(
            f"coupling identity violated: max relative error {max_rel_error:.3e}"
        )
    return EXIT_OK


def cmd_decay_rate(config: dict, out: str, fmt: str, header: bool) -> int:
    section = config["decay_rate"]
    model = model_from_config(config)
    spec = pole_residue_from_model(model)
    predicted = TWO_PI * evaluate_J(spec, model.omega_A)
    notes = []
    if model.gamma > 0.1 * model.kappa:
        notes.append("gamma is not << kappa; outside the golden-rule regime")
    if predicted > 0.1 * model.kappa:
        notes.append("2piJ(omega_A) is not << kappa; outside the golden-rule regime")
    traj = solve_amplitudes(
        embed_from_model(model), initial_c1_from_config(config),
        section["t_max"], section["h"],
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fitted = decay_rate(traj, (section["fit_t_min"], section["fit_t_max"]))
    for warning in caught:
        notes.append(str(warning.message))
    deviation = (fitted - predicted) / predicted if predicted != 0.0 else None
    payload: dict[str, Any] = {
        "fitted_rate": fitted,
        "predicted_rate": predicted,
        "relative_deviation": deviation,
        "bare_gamma": model.gamma,
        "status": "warning" if notes else "ok",
        "notes": "; ".join(notes),
    }
    print(f"fitted decay rate:    {fitted:.17g}")
    print(f"predicted 2piJ(w_A):  {predicted:.17g}")
    if deviation is not None:
        print(f"relative deviation:   {deviation:.3e}")
    for note in notes:
        print(f"warning: {note}")
    if out:
        _write_text(out, _render_report("decay-rate", config, payload, fmt, header))
    return EXIT_OK


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "kernel": cmd_kernel,
    "evolve": cmd_evolve,
    "compare": cmd_compare,
    "lindblad-check": cmd_lindblad_check,
    "fanodiag": cmd_fanodiag,
    "decay-rate": cmd_decay_rate,
}

_DESCRIPTIONS = {
    "spectrum": "emit 2piJ/gamma over the reduced detuning for configured curves",
    "kernel": "emit the memory kernel's regular part (optionally cross-checked "
              "against direct quadrature)",
    "evolve": "run one time-evolution method and emit its populations",
    "compare": "run two methods on the same model and emit their residual",
    "lindblad-check": "report the Kossakowski matrix and the positivity verdict",
    "fanodiag": "check the diagonalized-coupling identity against the spectral "
                "function (eta = 1 only)",
    "decay-rate": "fit the emitter decay rate and compare with 2piJ(omega_A)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fanomode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fanomode {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
        help="override one config entry by dotted path (repeatable)",
    )
    common.add_argument(
        "--no-header", action="store_true", help="omit the metadata header"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        subparsers.add_parser(name, parents=[common], help=_DESCRIPTIONS[name])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config, args.overrides)
        out = args.out if args.out is not None else config["output"]["path"]
        fmt = args.format if args.format is not None else config["output"]["format"]
        header = config["output"]["header"] and not args.no_header
        return _COMMANDS[args.command](config, out, fmt, header)
    except PropertyViolation as exc:
        print(f"fanomode: property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except (StepSizeError, RecurrenceError, FactorizationError, SpectralError) as exc:
        print(f"fanomode: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ParameterError, DomainError, UnsupportedRegimeError) as exc:
        print(f"fanomode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream consumer (e.g. `head`) closed the stream; not an error
        try:
            sys.stdout.close()
        except OSError:
            pass
        return EXIT_OK
    except OSError as exc:
        print(f"fanomode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
