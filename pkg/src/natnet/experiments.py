"""Parameter sweeps, peak finding and export for the transport models."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import fock, moments
from .network import FourSiteConfig, four_site_preset
from .optics import (
    FourSiteOpticalConfig,
    dephased_transmission,
    four_site_network,
    interferometer_transmission,
)

MODELS = ("fock", "moment", "classical-mz", "classical-full")
QUANTUM = ("fock", "moment")

#: Default (w2 - w1)/g01 for quantum dephasing sweeps.
QUANTUM_DISORDER = 5.0
#: Default static disorder (linewidths) for classical dephasing sweeps.
CLASSICAL_DISORDER = 2.0


class SweepError(RuntimeError):
    """A solver failed at one grid point."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


@dataclass(frozen=True)
class SweepResult:
    model: str
    parameter: str
    grid: tuple
    raw: tuple
    reference: float
    config_hash: str = ""
    timestamp: float = field(default_factory=time.time, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        object.__setattr__(self, "raw", tuple(float(x) for x in self.raw))
        if len(self.grid) != len(self.raw):
            raise ValueError("grid and transmissions differ in length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.reference <= 0:
            raise ValueError("normalization reference must be positive")

    @property
    def normalized(self) -> tuple:
        return tuple(r / self.reference for r in self.raw)

    def __len__(self):
        return len(self.grid)


def canonical_model(model: str) -> str:
    m = model.strip().lower()
    if m not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    return m


def default_config(model: str):
    return FourSiteConfig() if canonical_model(model) in QUANTUM else FourSiteOpticalConfig()


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def quantum_transmission(model: str, cfg: FourSiteConfig, n_max: int = 2,
                         max_dim: int = fock.MAX_LIOUVILLE_DIM) -> float:
    spec = four_site_preset(cfg)
    if model == "moment":
        return moments.solve_transmission(spec)
    return fock.solve_transmission(spec, n_max=n_max, max_dim=max_dim)


def _optical(model, cfg):
    return cfg.without_mirrors() if model == "classical-mz" else cfg


def reference_transmission(model: str, cfg, n_max: int = 2, max_dim: int = fock.MAX_LIOUVILLE_DIM) -> float:
    """Constructive interference, no disorder, no dephasing."""
    model = canonical_model(model)
    if model in QUANTUM:
        ref = replace(cfg, interference="constructive", detuning=0.0, gamma1=0.0, gamma2=0.0)
        return quantum_transmission(model, ref, n_max, max_dim)
    return interferometer_transmission(replace(_optical(model, cfg), interference="constructive"), 0.0)


def _check_config(model, cfg):
    want = FourSiteConfig if model in QUANTUM else FourSiteOpticalConfig
    if not isinstance(cfg, want):
        raise TypeError(f"model {model} needs a {want.__name__}, got {type(cfg).__name__}")


def _run(model, cfg, parameter, grid, evaluate, extra, n_max, max_dim):
    values = []
    for x in grid:
        try:
            values.append(evaluate(float(x)))
        except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise SweepError(f"{model} solve failed at {parameter} = {x:g}: {exc}", x) from exc
    ref = reference_transmission(model, cfg, n_max, max_dim)
    if not ref > 0:
        raise SweepError(f"{model}: constructive reference transmission is {ref:g}; cannot normalize")
    meta = dict(extra)
    if model == "fock":
        meta["n_max"] = n_max
    payload = {"model": model, "parameter": parameter, "config": asdict(cfg),
               "grid": [float(x) for x in grid], "meta": meta}
    return SweepResult(model, parameter, tuple(grid), tuple(values), ref, config_hash(payload), metadata=meta)


def sweep_static_disorder(model: str, cfg=None, grid: Sequence[float] = (), *, n_samples: int = 51,
                          n_max: int = 2, max_dim: int = fock.MAX_LIOUVILLE_DIM) -> SweepResult:
    """Transmission versus static disorder without dephasing.

    Quantum grids are (w2 - w1)/g01; classical grids are dx in linewidths.
    """
    model = canonical_model(model)
    cfg = cfg if cfg is not None else default_config(model)
    _check_config(model, cfg)
    grid = np.asarray(grid, dtype=float)
    if model in QUANTUM:
        if cfg.gamma1 != 0 or cfg.gamma2 != 0:
            raise ValueError("static-disorder sweep requires zero dephasing")
        parameter = "(w2-w1)/g01"

        def evaluate(x):
            return quantum_transmission(model, replace(cfg, detuning=x * cfg.g01), n_max, max_dim)
    else:
        parameter = "dx"
        ocfg = _optical(model, cfg)
        net = four_site_network(ocfg)

        def evaluate(x):
            return interferometer_transmission(ocfg, x, net)

    return _run(model, cfg, parameter, grid, evaluate, {}, n_max, max_dim)


def sweep_dephasing(model: str, cfg=None, disorder: float | None = None, grid: Sequence[float] = (), *,
                    n_samples: int = 51, n_max: int = 2,
                    max_dim: int = fock.MAX_LIOUVILLE_DIM) -> SweepResult:
    """Transmission versus dephasing at fixed static disorder.

    Quantum: ``disorder`` is (w2 - w1)/g01 and the grid is gamma2/(w2 - w1).
    Classical: ``disorder`` is dx0 and the grid is the averaging window delta_x.
    """
    model = canonical_model(model)
    cfg = cfg if cfg is not None else default_config(model)
    _check_config(model, cfg)
    grid = np.asarray(grid, dtype=float)
    if model in QUANTUM:
        disorder = QUANTUM_DISORDER if disorder is None else float(disorder)
        detuning = disorder * cfg.g01
        if detuning == 0:
            raise ValueError("dephasing axis gamma2/(w2-w1) needs nonzero disorder")
        base = replace(cfg, detuning=detuning)
        parameter = "gamma2/(w2-w1)"

        def evaluate(y):
            return quantum_transmission(model, replace(base, gamma2=y * abs(detuning)), n_max, max_dim)
    else:
        disorder = CLASSICAL_DISORDER if disorder is None else float(disorder)
        parameter = "delta_x"
        ocfg = _optical(model, cfg)
        net = four_site_network(ocfg)

        def evaluate(d):
            return dephased_transmission(ocfg, disorder, d, n_samples, net)

    extra = {"disorder": disorder}
    if model not in QUANTUM:
        extra["n_samples"] = n_samples
    return _run(model, cfg, parameter, grid, evaluate, extra, n_max, max_dim)


class Peak(NamedTuple):
    x: float
    value: float
    interior: bool


def find_peak(sweep: SweepResult) -> Peak:
    """Grid argmax of the normalized curve; ties go to the smallest x."""
    if len(sweep) == 0:
        raise ValueError("empty sweep")
    if len(sweep) < 3:
        raise ValueError("peak finding needs at least 3 grid points")
    y = np.asarray(sweep.normalized)
    k = int(np.argmax(y))
    return Peak(sweep.grid[k], float(y[k]), 0 < k < len(y) - 1)


def bell_shape_test(sweep: SweepResult, rise_margin: float = 0.1, fall_margin: float = 0.1) -> bool:
    if len(sweep) < 3:
        raise ValueError("bell-shape test needs at least 3 grid points")
    y = np.asarray(sweep.normalized)
    top = y.max()
    return bool(top >= (1 + rise_margin) * y[0] and top >= (1 + fall_margin) * y[-1])


def _metadata_lines(sweep):
    lines = [
        f"model: {sweep.model}",
        f"parameter: {sweep.parameter}",
        f"reference: {sweep.reference!r}",
        f"config_hash: {sweep.config_hash}",
    ]
    lines += [f"{k}: {sweep.metadata[k]!r}" for k in sorted(sweep.metadata)]
    return lines


def format_csv(sweep: SweepResult) -> str:
    if len(sweep) == 0:
        raise ValueError("nothing to export")
    buf = io.StringIO()
    for line in _metadata_lines(sweep):
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["parameter", "raw", "normalized"])
    for x, r, n in zip(sweep.grid, sweep.raw, sweep.normalized):
        writer.writerow([repr(x), repr(r), repr(n)])
    return buf.getvalue()


def export_csv(sweep: SweepResult, path) -> None:
    text = format_csv(sweep)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def render_plot(sweeps, path, title: str | None = None, log_x: bool | None = None) -> None:
    """Write an SVG line plot of normalized transmission for one or more sweeps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(sweeps, SweepResult):
        sweeps = [sweeps]
    if not sweeps or any(len(s) == 0 for s in sweeps):
        raise ValueError("nothing to export")
    if log_x is None:
        log_x = all(s.grid[0] > 0 and s.grid[-1] / s.grid[0] >= 100 for s in sweeps)

    with matplotlib.rc_context({"svg.hashsalt": "natnet", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in sweeps:
            ax.plot(s.grid, s.normalized, marker="o", markersize=3, label=s.model)
        if log_x:
            ax.set_xscale("log")
        ax.set_xlabel(sweeps[0].parameter)
        ax.set_ylabel("normalized transmission")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def backend_grid():
    """20 four-site configurations spanning disorder, dephasing and interference."""
    points = []
    for flag in ("constructive", "destructive"):
        for ratio in (0.5, 1.0, 2.0, 5.0, 10.0):
            for gamma2 in (0.0, 1.0):
                points.append(FourSiteConfig(detuning=ratio, gamma2=gamma2, interference=flag))
    return points


def compare_backends(configs=None, n_max: int = 2):
    """Relative Fock/moment discrepancy for each configuration."""
    rows = []
    for cfg in configs or backend_grid():
        spec = four_site_preset(cfg)
        t_mom = moments.solve_transmission(spec)
        t_fock = fock.solve_transmission(spec, n_max=n_max)
        rows.append((cfg, t_fock, t_mom, abs(t_fock - t_mom) / t_mom))
    return rows
