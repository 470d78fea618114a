"""Command-line entry point.

One command with subcommands that wire TOML configs to the library and
write every artifact deterministically: delimited data plus a rendered
figure side by side, and a manifest echoing the configuration, seeds,
and constants hash so a rerun can be checked byte for byte.

Config keys carry explicit units in their names (``duration_s``,
``rabi_peak_hz``); frequencies are plain Hz in configs and converted to
angular units on load.  All randomness flows from one global seed
through named substreams, so the optimizer, time-noise, and contrast
draws can be re-seeded independently.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ContrastSpec,
    InterferometerEvaluator,
    PulseEvaluator,
    SweepAxis,
    SweepSpec,
    contrast,
    effective_area,
    noise_robustness_trend,
    sweep,
)
from .atoms import TWO_PI, STRETCHED_EXCITED, PhysicalConstants
from .hamiltonian import NoiseParams
from .interferometer import build_sequence, run as run_interferometer
from .optimizer import NoiseDistribution, OptimizerConfig, optimize
from .propagation import (
    calibrate_amplitude,
    evolve,
    infidelity,
    phase_deviation,
    total_unitary,
)
from .pulses import (
    Waveform,
    composite_pulse,
    load_waveform,
    primitive_pi,
    save_waveform,
    smooth,
)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(Exception):
    """Bad or missing configuration; message names the offending key."""


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")


def _require(section: dict, name: str, key: str):
    if key not in section:
        raise ConfigError(f"missing required field {name}.{key}")
    return section[key]


def substream(seed: int, name: str) -> int:
    """Named deterministic substream of the global seed."""
    state = np.random.SeedSequence([seed, zlib.crc32(name.encode())])
    return int(state.generate_state(1)[0])


_CONSTANT_KEYS = {
    "b0_gauss": ("b0_gauss", 1.0),
    "omega_b_hz": ("omega_b", TWO_PI),
    "mu0_gs_hz": ("mu0_gs", TWO_PI),
    "mu0_gp_hz": ("mu0_gp", TWO_PI),
    "omega_d_hz": ("omega_d", TWO_PI),
    "rabi_peak_hz": ("rabi_peak", TWO_PI),
    "wavelength_m": ("wavelength", 1.0),
    "atom_mass_kg": ("atom_mass", 1.0),
}


def constants_from_config(cfg: dict) -> PhysicalConstants:
    section = cfg.get("constants", {})
    overrides = {}
    for key, value in section.items():
        if key not in _CONSTANT_KEYS:
            raise ConfigError(f"unknown field constants.{key}")
        field, scale = _CONSTANT_KEYS[key]
        overrides[field] = scale * float(value)
    return PhysicalConstants(**overrides)


def distribution_from_config(cfg: dict) -> NoiseDistribution:
    section = dict(cfg.get("noise", {}))
    allowed = {f.name for f in dataclasses.fields(NoiseDistribution)}
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown field noise.{key}")
    return NoiseDistribution(**section)


_NOISE_POINT_KEYS = (
    "eps_plus", "eps_plus_imag", "eps_minus", "eps_minus_imag",
    "beta_a", "beta_v", "beta_b",
)


def noise_point(section: dict) -> NoiseParams:
    values = {k: float(section.get(k, 0.0)) for k in _NOISE_POINT_KEYS}
    return NoiseParams(
        eps_plus=values["eps_plus"] + 1j * values["eps_plus_imag"],
        eps_minus=values["eps_minus"] + 1j * values["eps_minus_imag"],
        beta_a=values["beta_a"],
        beta_v=values["beta_v"],
        beta_b=values["beta_b"],
    )


def resolve_pulse(spec: str, constants: PhysicalConstants):
    """Pulse reference: 'primitive', 'primitive:<rabi_hz>',
    'composite:<name>', or a file path."""
    if spec == "primitive":
        return primitive_pi(constants.rabi_peak)
    if spec.startswith("primitive:"):
        try:
            rabi = TWO_PI * float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad primitive Rabi rate in {spec!r}")
        if not 0 < rabi <= constants.rabi_peak:
            raise ConfigError(
                f"primitive Rabi rate must be in (0, {constants.rabi_peak / TWO_PI:g}] Hz"
            )
        return primitive_pi(rabi, rabi_peak=constants.rabi_peak)
    if spec.startswith("composite:"):
        return composite_pulse(spec.split(":", 1)[1], constants.rabi_peak)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"pulse file not found: {spec}")
    try:
        return load_waveform(path)
    except ValueError as exc:
        raise ConfigError(f"{spec}: {exc}")


def _write_manifest(out: Path, command: str, args, cfg: dict,
                    constants: PhysicalConstants, outputs, extra=None) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "constants_digest": constants.digest(),
        "outputs": sorted(str(o) for o in outputs),
        "seed": args.seed,
        "version": __version__,
        "workers": args.workers,
    }
    if extra:
        manifest["result"] = extra
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _out_dir(args, command: str) -> Path:
    out = Path(args.out) if args.out else Path(f"out-{command}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_optimize(args) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    dist = distribution_from_config(cfg)
    section = dict(cfg.get("optimizer", {}))
    known = {
        "n_segments": "n_segments",
        "duration_s": "duration",
        "batch_size": "batch_size",
        "learning_rate": "learning_rate",
        "learning_rate_decay": "learning_rate_decay",
        "max_iterations": "max_iterations",
        "phase_jitter": "phase_jitter",
        "init_amplitude": "init_amplitude",
        "ftol": "ftol",
        "stall_iterations": "stall_iterations",
        "direction": "direction",
        "fixed_batch": "fixed_batch",
        "zero_edge_segments": "zero_edge_segments",
    }
    kwargs = {}
    for key, value in section.items():
        if key == "rabi_peak_hz":
            kwargs["rabi_peak"] = TWO_PI * float(value)
            continue
        if key == "initial_pulse":
            kwargs["initial_waveform"] = resolve_pulse(value, constants)
            continue
        if key not in known:
            raise ConfigError(f"unknown field optimizer.{key}")
        kwargs[known[key]] = value
    kwargs["seed"] = substream(args.seed, "optimizer")
    config = OptimizerConfig(**kwargs)

    out = _out_dir(args, "optimize")
    waveform, trace = optimize(config, dist, constants)
    pulse_path = out / "pulse.txt"
    save_waveform(pulse_path, waveform, constants.digest())
    trace_path = out / "trace.log"
    with open(trace_path, "w") as fh:
        fh.write("# iteration cost wall_s\n")
        for i, (cost, wall) in enumerate(zip(trace.costs, trace.wall_times)):
            fh.write(f"{i} {cost:.17g} {wall:.17g}\n")
        fh.write(f"# status = {trace.status}\n")
        fh.write(f"# best_cost = {trace.best_cost:.17g}\n")
        fh.write(f"# best_iteration = {trace.best_iteration}\n")
    outputs = [pulse_path.name, trace_path.name]
    if not args.no_figure:
        from . import figures

        outputs.append(figures.render(
            "waveform", [pulse_path], out / "pulse.svg", labels=["optimized"]
        ).name)
    _write_manifest(out, "optimize", args, cfg, constants, outputs, extra={
        "best_cost": trace.best_cost,
        "best_iteration": trace.best_iteration,
        "iterations": trace.iterations,
        "status": trace.status,
    })
    print(f"best cost {_fmt(trace.best_cost)} ({trace.status}) -> {pulse_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    section = cfg.get("evaluate", {})
    pulse_ref = args.pulse or section.get("pulse")
    if not pulse_ref:
        raise ConfigError("missing required field evaluate.pulse")
    wave = resolve_pulse(pulse_ref, constants)
    noise = noise_point(section)
    direction = int(section.get("direction", 1))
    sampled = wave.as_samples(constants.rabi_peak)
    u = total_unitary(sampled, noise, direction, constants)
    value = infidelity(u)
    psi, _ = evolve(sampled, noise, direction, constants=constants)
    reference = np.zeros_like(psi)
    reference[STRETCHED_EXCITED] = -1j
    try:
        dev = phase_deviation(psi, reference)
    except ValueError:
        dev = math.nan
    print(f"infidelity {_fmt(value)}")
    print(f"phase_deviation {_fmt(dev)}")
    return 0


def _sweep_axis(section: dict, suffix: str) -> SweepAxis:
    return SweepAxis(
        channel=_require(section, "sweep", f"channel_{suffix}"),
        start=float(_require(section, "sweep", f"start_{suffix}")),
        stop=float(_require(section, "sweep", f"stop_{suffix}")),
        n=int(_require(section, "sweep", f"n_{suffix}")),
    )


def _sweep_spec(section: dict, args, two_d: bool) -> SweepSpec:
    return SweepSpec(
        x=_sweep_axis(section, "x"),
        y=_sweep_axis(section, "y") if two_d else None,
        repeats=int(section.get("repeats", 1)),
        time_noise_rms=(
            float(section.get("time_noise_rms_amp", 0.0)),
            float(section.get("time_noise_rms_phase", 0.0)),
        ),
        seed=substream(args.seed, "time-noise"),
    )


def _sweep_evaluator(section: dict, args, constants: PhysicalConstants):
    kind = section.get("evaluator", "pulse")
    if kind == "pulse":
        wave = resolve_pulse(section.get("pulse", "primitive"), constants)
        return PulseEvaluator(
            wave, direction=int(section.get("direction", 1)), constants=constants
        )
    if kind == "interferometer":
        plan = _plan_from(section, args, constants)
        return InterferometerEvaluator(
            plan, constants, include_recoil=bool(section.get("include_recoil", True))
        )
    raise ConfigError(f"unknown field value sweep.evaluator = {kind!r}")


def _plan_from(section: dict, args, constants: PhysicalConstants):
    mini = args.mini or int(section.get("mini", 1))
    n_primitive = int(section.get("n_primitive", 20))
    n_optimized = int(section.get("n_optimized", 480))
    optimized = None
    if section.get("pulse"):
        optimized = resolve_pulse(section["pulse"], constants)
    elif n_optimized:
        raise ConfigError(
            "missing required field: a pulse file is needed unless n_optimized = 0"
        )
    if bool(section.get("calibrate", False)) and optimized is not None:
        if isinstance(optimized, Waveform):
            optimized = smooth(optimized, rabi_peak=constants.rabi_peak)
        optimized, _ = calibrate_amplitude(optimized, constants)
    primitive = None
    if section.get("primitive"):
        primitive = resolve_pulse(section["primitive"], constants)
    return build_sequence(
        optimized,
        primitive=primitive,
        mini=mini,
        n_primitive=n_primitive,
        n_optimized=n_optimized,
        constants=constants,
    )


def _run_sweep(args, two_d: bool) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    section = cfg.get("sweep", {})
    spec = _sweep_spec(section, args, two_d)
    evaluator = _sweep_evaluator(section, args, constants)
    result = sweep(spec, evaluator, workers=args.workers)
    out = _out_dir(args, "sweep2d" if two_d else "sweep1d")
    csv_path = out / "sweep.csv"
    result.write_csv(csv_path)
    outputs = [csv_path.name, csv_path.name + ".meta.json"]
    if not args.no_figure:
        from . import figures

        kind = "heatmap" if two_d else "line"
        outputs.append(figures.render(
            kind, [csv_path], out / "sweep.svg",
            labels=[result.label] if result.label else None,
        ).name)
    _write_manifest(out, "sweep2d" if two_d else "sweep1d", args, cfg,
                    constants, outputs)
    print(f"{len(spec.grid())} grid points -> {csv_path}")
    return 0


def cmd_sweep1d(args) -> int:
    return _run_sweep(args, two_d=False)


def cmd_sweep2d(args) -> int:
    return _run_sweep(args, two_d=True)


def cmd_area(args) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    section = cfg.get("area", {})
    out = _out_dir(args, "area")
    outputs = []
    if "input_csv" in section:
        from .figures import read_columns

        columns = read_columns(section["input_csv"])
        names = list(columns)
        metric = section.get("metric", "infidelity")
        key = f"mean_{metric}"
        if key not in columns or len(names) < 3:
            raise ConfigError(f"{section['input_csv']}: no 2D map column {key!r}")
        xs, ys = columns[names[0]], columns[names[1]]
        nx = np.unique(xs).size
        ny = xs.size // nx
        if nx * ny != xs.size or ny < 2:
            raise ConfigError(f"{section['input_csv']}: rows do not form a 2D grid")
        cell = abs((np.unique(xs)[1] - np.unique(xs)[0])
                   * (np.unique(ys)[1] - np.unique(ys)[0]))
        values = columns[key].reshape(ny, nx)
        thresholds = section.get("thresholds") or [_require(section, "area", "threshold")]
        rows = [
            (_fmt(t), _fmt(effective_area(values, float(t), cell_area=cell)))
            for t in thresholds
        ]
        area_path = out / "area.csv"
        _write_rows(area_path, ["threshold", "area"], rows)
        outputs.append(area_path.name)
        print(f"{len(rows)} thresholds -> {area_path}")
    else:
        sweep_section = cfg.get("sweep", {})
        if not sweep_section:
            raise ConfigError("missing required field area.input_csv (or a [sweep] table)")
        spec = _sweep_spec(sweep_section, args, two_d=True)
        threshold = float(_require(section, "area", "threshold"))
        levels = section.get("rms_levels") or [0.0]
        repeats = int(section.get("repeats", 2))

        def factory():
            return _sweep_evaluator(sweep_section, args, constants)

        rows = noise_robustness_trend(
            factory, spec, levels, threshold,
            repeats=repeats, metric=section.get("metric", "infidelity"),
        )
        trend_path = out / "trend.csv"
        _write_rows(
            trend_path,
            ["rms", "mean_area", "std_area"],
            [(_fmt(r), _fmt(m), _fmt(s)) for r, m, s in rows],
        )
        outputs.append(trend_path.name)
        if not args.no_figure:
            from . import figures

            outputs.append(
                figures.render("trend", [trend_path], out / "trend.svg").name
            )
        print(f"{len(rows)} RMS levels -> {trend_path}")
    _write_manifest(out, "area", args, cfg, constants, outputs)
    return 0


def cmd_interferometer(args) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    section = cfg.get("interferometer", {})
    plan = _plan_from(section, args, constants)
    result = run_interferometer(
        plan,
        noise_point(section),
        time_noise_rms=(
            float(section.get("time_noise_rms_amp", 0.0)),
            float(section.get("time_noise_rms_phase", 0.0)),
        ),
        noise_seed=substream(args.seed, "time-noise"),
        constants=constants,
        include_recoil=bool(section.get("include_recoil", True)),
    )
    out = _out_dir(args, "interferometer")
    data = result.as_dict()
    result_path = out / "result.csv"
    _write_rows(result_path, list(data), [[_fmt(v) for v in data.values()]])
    plan_path = out / "plan.txt"
    plan_path.write_text(plan.describe() + "\n")
    _write_manifest(out, "interferometer", args, cfg, constants,
                    [result_path.name, plan_path.name])
    print(f"efficiency {_fmt(result.transfer_efficiency)} "
          f"phase {_fmt(result.arm_phase_difference)} -> {result_path}")
    return 0


def cmd_contrast(args) -> int:
    cfg = _load_config(args.config)
    constants = constants_from_config(cfg)
    section = cfg.get("contrast", {})
    tables_csv = _require(section, "contrast", "tables_csv")
    widths = _require(section, "contrast", "widths")
    from .figures import read_columns

    columns = read_columns(tables_csv)
    names = list(columns)
    required = (
        "mean_transfer_efficiency",
        "mean_arm_phase_difference",
        "std_arm_phase_difference",
    )
    for column in required:
        if column not in columns:
            raise ConfigError(f"{tables_csv}: missing column {column!r}")
    spec = ContrastSpec(
        channel=names[0],
        widths=tuple(float(w) for w in widths),
        x=columns[names[0]],
        transfer=columns["mean_transfer_efficiency"],
        phase_mean=columns["mean_arm_phase_difference"],
        phase_std=columns["std_arm_phase_difference"],
        n_samples=int(section.get("n_samples", 50000)),
    )
    rows = contrast(spec, seed=substream(args.seed, "contrast"))
    out = _out_dir(args, "contrast")
    contrast_path = out / "contrast.csv"
    _write_rows(
        contrast_path,
        ["channel", "width", "contrast"],
        [(spec.channel, _fmt(w), _fmt(c)) for w, c in rows],
    )
    outputs = [contrast_path.name]
    if not args.no_figure:
        from . import figures

        outputs.append(
            figures.render("contrast", [contrast_path], out / "contrast.svg").name
        )
    _write_manifest(out, "contrast", args, cfg, constants, outputs)
    print(f"{len(rows)} widths -> {contrast_path}")
    return 0


def cmd_plot_export(args) -> int:
    cfg = _load_config(args.config)
    section = cfg.get("figure")
    if not section:
        raise ConfigError("missing required field figure (table)")
    from . import figures

    path = figures.render(
        _require(section, "figure", "kind"),
        _require(section, "figure", "inputs"),
        _require(section, "figure", "output"),
        labels=section.get("labels"),
        title=section.get("title", ""),
    )
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "sweep1d": cmd_sweep1d,
    "sweep2d": cmd_sweep2d,
    "area": cmd_area,
    "interferometer": cmd_interferometer,
    "contrast": cmd_contrast,
    "plot-export": cmd_plot_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srpulse",
        description="Robust clock-transition pulse simulation and optimization.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="global seed")
    common.add_argument("--workers", type=int, default=1,
                        help="max parallel workers (results independent of it)")
    common.add_argument("--mini", type=int, default=0,
                        help="shrink the interferometer staging by this factor")
    common.add_argument("--no-figure", action="store_true",
                        help="skip rendering the default figure")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub = subparsers.add_parser(name, parents=[common])
        if name == "evaluate":
            sub.add_argument("pulse", nargs="?",
                             help="pulse file, 'primitive', or 'composite:<name>'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
