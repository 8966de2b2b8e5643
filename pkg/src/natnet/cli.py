"""Command-line interface.

Exit codes: 0 on success, 1 for configuration errors, 2 for solver errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import fock, moments
from .moments import NonDissipativeError
from .network import FourSiteConfig, NetworkSpecError, network_from_dict
from .optics import (
    FourSiteOpticalConfig,
    OpticsError,
    SingularNetworkError,
    dephased_transmission,
    parse_netlist,
    solve_fields,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

#: Keys accepted in a config file besides the model's own parameters.
RUN_KEYS = ("n_max", "n_samples", "max_dim")


class ConfigError(ValueError):
    pass


def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """``a:b:n`` -> n points from a to b inclusive (log-spaced with ``log``)."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise ConfigError(f"grid must look like a:b:n, got {text!r}") from exc
    if n < 1:
        raise ConfigError("grid needs at least one point")
    if log:
        if a <= 0 or b <= 0:
            raise ConfigError("log grid bounds must be positive")
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_settings(path, overrides) -> dict:
    settings = {}
    if path:
        try:
            settings = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(settings, dict):
            raise ConfigError("config file must hold a JSON object")
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        settings[key.strip()] = _parse_value(value)
    return settings


def build_config(model: str, settings: dict):
    """Split settings into a model config and run options."""
    run = {k: settings[k] for k in RUN_KEYS if k in settings}
    params = {k: v for k, v in settings.items() if k not in RUN_KEYS}
    if model in ex.QUANTUM:
        known = {f.name for f in fields(FourSiteConfig)}
        unknown = set(params) - known
        if unknown:
            raise ConfigError(f"unknown quantum config keys: {', '.join(sorted(unknown))}")
        cfg = FourSiteConfig(**params)
    else:
        known = {f.name for f in fields(FourSiteOpticalConfig)}
        unknown = set(params) - known
        if unknown:
            raise ConfigError(f"unknown optical config keys: {', '.join(sorted(unknown))}")
        cfg = FourSiteOpticalConfig.from_dict(params)
    return cfg, run


def _emit(sweep, out, svg):
    text = ex.format_csv(sweep)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if svg:
        ex.render_plot(sweep, svg)


def cmd_simulate(args) -> int:
    model = ex.canonical_model(args.model)
    if args.network:
        try:
            spec = network_from_dict(json.loads(Path(args.network).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load network {args.network}: {exc}") from exc
        if model == "moment":
            value = moments.solve_transmission(spec)
        elif model == "fock":
            value = fock.solve_transmission(spec, n_max=args.n_max)
        else:
            raise ConfigError("--network needs a quantum model (fock or moment)")
        print(json.dumps({"model": model, "label": spec.label, "transmission": value}))
        return EXIT_OK
    if args.netlist:
        try:
            net = parse_netlist(Path(args.netlist).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot load netlist {args.netlist}: {exc}") from exc
        detunings = {k: float(v) for k, v in load_settings(None, args.detune).items()}
        sol = solve_fields(net, detunings)
        power = {name: sol.detector_power(name) / net.source_power() for name in sorted(net.detectors)}
        print(json.dumps({"detectors": power, "escaped": sol.escaped_power() / net.source_power()}))
        return EXIT_OK

    cfg, run = build_config(model, load_settings(args.config, args.set))
    if model in ex.QUANTUM:
        n_max = int(run.get("n_max", args.n_max))
        raw = ex.quantum_transmission(model, cfg, n_max, int(run.get("max_dim", fock.MAX_LIOUVILLE_DIM)))
        ref = ex.reference_transmission(model, cfg, n_max)
    else:
        ocfg = cfg.without_mirrors() if model == "classical-mz" else cfg
        raw = dephased_transmission(ocfg, args.dx, args.delta_x, int(run.get("n_samples", 51)))
        ref = ex.reference_transmission(model, cfg)
    print(json.dumps({"model": model, "transmission": raw, "reference": ref, "normalized": raw / ref}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = ex.canonical_model(args.model)
    cfg, run = build_config(model, load_settings(args.config, args.set))
    grid = parse_grid(args.grid, args.log)
    opts = {"n_max": int(run.get("n_max", args.n_max)), "n_samples": int(run.get("n_samples", 51))}
    if args.param == "dx":
        sweep = ex.sweep_static_disorder(model, cfg, grid, **opts)
    else:
        sweep = ex.sweep_dephasing(model, cfg, args.disorder, grid, **opts)
    _emit(sweep, args.out, args.svg)
    return EXIT_OK


def reproduce(figure: str, side: str):
    """Sweeps behind one figure; returns a list of SweepResult."""
    if side == "classical":
        mz, full = FourSiteOpticalConfig().without_mirrors(), FourSiteOpticalConfig()
        if figure == "fig2":
            grid = np.linspace(0.0, 10.0, 41)
            return [ex.sweep_static_disorder("classical-mz", mz, grid),
                    ex.sweep_static_disorder("classical-full", full, grid)]
        grid = np.arange(0.0, 6.0 + 1e-9, 0.25)
        return [ex.sweep_dephasing("classical-mz", mz, ex.CLASSICAL_DISORDER, grid),
                ex.sweep_dephasing("classical-full", full, ex.CLASSICAL_DISORDER, grid)]
    cfg = FourSiteConfig()
    if figure == "fig2":
        return [ex.sweep_static_disorder("moment", cfg, np.linspace(0.0, 10.0, 41))]
    return [ex.sweep_dephasing("moment", cfg, ex.QUANTUM_DISORDER, np.geomspace(0.01, 100.0, 25))]


def cmd_reproduce(args) -> int:
    side = "quantum" if args.quantum else "classical"
    sweeps = reproduce(args.figure, side)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for s in sweeps:
        path = out_dir / f"{args.figure}_{s.model}.csv"
        ex.export_csv(s, path)
        print(path)
    svg = out_dir / f"{args.figure}_{side}.svg"
    ex.render_plot(sweeps, svg, title=f"{args.figure} ({side})")
    print(svg)
    for s in sweeps:
        if len(s) >= 3:
            peak = ex.find_peak(s)
            print(f"{s.model}: peak {s.parameter} = {peak.x:g}, T = {peak.value:.4f}, interior = {peak.interior}",
                  file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    worst = 0.0
    for cfg, t_fock, t_mom, rel in ex.compare_backends(n_max=args.n_max):
        worst = max(worst, rel)
        print(f"{cfg.interference:12s} dw/g01={cfg.detuning:5.2f} gamma2={cfg.gamma2:4.2f} "
              f"fock={t_fock:.6e} moment={t_mom:.6e} rel={rel:.2e}")
    ok = worst <= args.tol
    print(f"max relative deviation {worst:.3e} ({'PASS' if ok else 'FAIL'} at {args.tol:g})")
    return EXIT_OK if ok else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="natnet", description="Noise-assisted transport in cavity networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with model parameters")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
        p.add_argument("--n-max", type=int, default=2, help="Fock cutoff (total photons)")

    p = sub.add_parser("simulate", help="one configuration -> one transmission")
    p.add_argument("--model", default="moment", choices=ex.MODELS)
    common(p)
    p.add_argument("--dx", type=float, default=0.0, help="classical static disorder (linewidths)")
    p.add_argument("--delta-x", type=float, default=0.0, help="classical dephasing window (linewidths)")
    p.add_argument("--network", help="JSON network description (quantum models)")
    p.add_argument("--netlist", help="JSON optical netlist")
    p.add_argument("--detune", action="append", metavar="CAVITY=X", help="cavity detuning for --netlist")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    p.add_argument("--model", required=True, choices=ex.MODELS)
    p.add_argument("--param", required=True, choices=("dx", "dephasing"))
    p.add_argument("--grid", required=True, help="a:b:n")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--disorder", type=float, help="fixed disorder for dephasing sweeps")
    common(p)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--svg", help="also write an SVG plot")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="regenerate a figure's curves")
    p.add_argument("figure", choices=("fig2", "fig3"))
    side = p.add_mutually_exclusive_group()
    side.add_argument("--classical", action="store_true", help="fiber-optic model (default)")
    side.add_argument("--quantum", action="store_true", help="master-equation model")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate-backends", help="cross-check Fock and moment backends")
    p.add_argument("--n-max", type=int, default=2)
    p.add_argument("--tol", type=float, default=2e-3)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, NetworkSpecError, OpticsError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonDissipativeError, fock.NonErgodicError, SingularNetworkError, ex.SweepError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
