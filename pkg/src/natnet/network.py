"""Network specifications for coupled-cavity transport models.

Frequencies and rates are angular, in rad/us, measured in the rotating frame
of the injection site. A JSON document describing a network looks like::

    {
      "label": "two-site",
      "modes": [{"index": 0, "detuning": 0.0}, {"index": 1, "detuning": 0.5}],
      "couplings": [{"i": 0, "j": 1, "g": 1.0}],
      "dephasing": [{"site": 1, "rate": 0.2}],
      "injection": {"site": 0, "rate": 0.1, "n_th": 0.01},
      "sink": {"site": 1, "rate": 0.5}
    }

A negative coupling ``g`` encodes a pi coupling phase.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi
#: Default cavity linewidth, 2*pi*10 MHz expressed in rad/us.
FWHM_CAV = TWO_PI * 10.0


class NetworkSpecError(ValueError):
    """Raised when a network description violates the schema.

    ``field`` names the offending entry, e.g. ``"dephasing[0]"``.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class Mode:
    index: int
    detuning: float = 0.0


@dataclass(frozen=True)
class Coupling:
    i: int
    j: int
    g: float


@dataclass(frozen=True)
class Dephasing:
    site: int
    rate: float


@dataclass(frozen=True)
class Injection:
    site: int
    rate: float
    n_th: float


@dataclass(frozen=True)
class Sink:
    site: int
    rate: float


@dataclass(frozen=True)
class NetworkSpec:
    modes: tuple[Mode, ...]
    couplings: tuple[Coupling, ...]
    dephasing: tuple[Dephasing, ...]
    injection: Injection
    sink: Sink
    label: str = ""

    def __post_init__(self):
        _validate(self)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def detunings(self) -> np.ndarray:
        w = np.zeros(self.n_modes)
        for m in self.modes:
            w[m.index] = m.detuning
        return w

    def dephasing_rates(self) -> np.ndarray:
        gam = np.zeros(self.n_modes)
        for d in self.dephasing:
            gam[d.site] += d.rate
        return gam

    def single_particle_matrix(self) -> np.ndarray:
        """Real symmetric hopping matrix h with h_ii = w_i and h_ij = g_ij."""
        h = np.diag(self.detunings())
        for c in self.couplings:
            h[c.i, c.j] += c.g
            h[c.j, c.i] += c.g
        return h

    def with_detuning(self, site: int, value: float) -> NetworkSpec:
        modes = tuple(Mode(m.index, value) if m.index == site else m for m in self.modes)
        return replace(self, modes=modes)

    def with_dephasing(self, site: int, rate: float) -> NetworkSpec:
        kept = tuple(d for d in self.dephasing if d.site != site)
        return replace(self, dephasing=kept + (Dephasing(site, rate),))

    def scaled(self, s: float) -> NetworkSpec:
        """Multiply every frequency and rate by ``s`` (n_th is dimensionless)."""
        if s <= 0:
            raise ValueError("scale factor must be positive")
        return NetworkSpec(
            modes=tuple(Mode(m.index, s * m.detuning) for m in self.modes),
            couplings=tuple(Coupling(c.i, c.j, s * c.g) for c in self.couplings),
            dephasing=tuple(Dephasing(d.site, s * d.rate) for d in self.dephasing),
            injection=Injection(self.injection.site, s * self.injection.rate, self.injection.n_th),
            sink=Sink(self.sink.site, s * self.sink.rate),
            label=self.label,
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "modes": [{"index": m.index, "detuning": m.detuning} for m in self.modes],
            "couplings": [{"i": c.i, "j": c.j, "g": c.g} for c in self.couplings],
            "dephasing": [{"site": d.site, "rate": d.rate} for d in self.dephasing],
            "injection": {
                "site": self.injection.site,
                "rate": self.injection.rate,
                "n_th": self.injection.n_th,
            },
            "sink": {"site": self.sink.site, "rate": self.sink.rate},
        }


def _validate(spec: NetworkSpec) -> None:
    indices = sorted(m.index for m in spec.modes)
    if not indices:
        raise NetworkSpecError("at least one mode required", "modes")
    if indices != list(range(len(indices))):
        raise NetworkSpecError("modes must be indexed 0..N-1 without gaps or repeats", "modes")
    known = set(indices)
    for k, m in enumerate(spec.modes):
        if not math.isfinite(m.detuning):
            raise NetworkSpecError(f"non-finite detuning at modes[{k}]", f"modes[{k}]")

    pairs = set()
    for k, c in enumerate(spec.couplings):
        where = f"couplings[{k}]"
        if c.i not in known or c.j not in known:
            raise NetworkSpecError(f"unknown mode index at {where}", where)
        if c.i == c.j:
            raise NetworkSpecError(f"self-coupling at {where}", where)
        pair = frozenset((c.i, c.j))
        if pair in pairs:
            raise NetworkSpecError(f"duplicate coupling pair at {where}", where)
        if not math.isfinite(c.g):
            raise NetworkSpecError(f"non-finite coupling at {where}", where)
        pairs.add(pair)

    for k, d in enumerate(spec.dephasing):
        where = f"dephasing[{k}]"
        if d.site not in known:
            raise NetworkSpecError(f"unknown mode index at {where}", where)
        _check_rate(d.rate, where)

    if spec.injection.site not in known:
        raise NetworkSpecError("unknown mode index at injection", "injection")
    _check_rate(spec.injection.rate, "injection")
    if not spec.injection.n_th >= 0:
        raise NetworkSpecError("negative n_th at injection", "injection")
    if spec.sink.site not in known:
        raise NetworkSpecError("unknown mode index at sink", "sink")
    _check_rate(spec.sink.rate, "sink")


def _check_rate(rate, where):
    if not (isinstance(rate, (int, float)) and math.isfinite(rate)):
        raise NetworkSpecError(f"invalid rate at {where}", where)
    if rate < 0:
        raise NetworkSpecError(f"negative rate at {where}", where)


def _single(doc, key):
    if key not in doc:
        raise NetworkSpecError(f"exactly one {key} required", key)
    value = doc[key]
    if isinstance(value, list):
        if len(value) != 1:
            raise NetworkSpecError(f"exactly one {key} required", key)
        value = value[0]
    if not isinstance(value, dict):
        raise NetworkSpecError(f"{key} must be an object", key)
    return value


def _get(entry, name, where, kind=float):
    if not isinstance(entry, dict) or name not in entry:
        raise NetworkSpecError(f"missing '{name}' at {where}", where)
    value = entry[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkSpecError(f"'{name}' must be a number at {where}", where)
    if kind is int:
        if float(value) != int(value):
            raise NetworkSpecError(f"'{name}' must be an integer at {where}", where)
        return int(value)
    return float(value)


def network_from_dict(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise NetworkSpecError("network document must be a JSON object")
    for key in ("modes", "couplings"):
        if key not in doc:
            raise NetworkSpecError(f"missing '{key}'", key)
    inj = _single(doc, "injection")
    snk = _single(doc, "sink")

    modes = tuple(
        Mode(_get(m, "index", f"modes[{k}]", int), _get(m, "detuning", f"modes[{k}]"))
        for k, m in enumerate(doc["modes"])
    )
    couplings = tuple(
        Coupling(
            _get(c, "i", f"couplings[{k}]", int),
            _get(c, "j", f"couplings[{k}]", int),
            _get(c, "g", f"couplings[{k}]"),
        )
        for k, c in enumerate(doc["couplings"])
    )
    dephasing = tuple(
        Dephasing(_get(d, "site", f"dephasing[{k}]", int), _get(d, "rate", f"dephasing[{k}]"))
        for k, d in enumerate(doc.get("dephasing", []))
    )
    injection = Injection(
        _get(inj, "site", "injection", int),
        _get(inj, "rate", "injection"),
        _get(inj, "n_th", "injection"),
    )
    sink = Sink(_get(snk, "site", "sink", int), _get(snk, "rate", "sink"))
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise NetworkSpecError("label must be a string", "label")
    return NetworkSpec(modes, couplings, dephasing, injection, sink, label)


def parse_network_spec(text: str) -> NetworkSpec:
    """Parse and validate a JSON network document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkSpecError(f"malformed JSON: {exc}") from exc
    return network_from_dict(doc)


def serialize_network_spec(spec: NetworkSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2)


@dataclass(frozen=True)
class FourSiteConfig:
    """Parameters of the 4-site diamond 0-(1,2)-3.

    ``detuning`` is w2 - w1 in rad/us; ``interference`` picks the sign of g23.
    """

    g01: float = 1.0
    g02: float = 0.95
    g13: float = 0.95
    g23: float = 1.0
    detuning: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma0: float = 0.1
    n_th: float = 0.01
    gamma_det: float = 20.0
    interference: str = "destructive"

    def __post_init__(self):
        if self.interference not in ("constructive", "destructive"):
            raise NetworkSpecError(
                f"interference must be 'constructive' or 'destructive', got {self.interference!r}",
                "interference",
            )
        for name in ("g01", "g02", "g13", "g23", "gamma1", "gamma2", "gamma0", "n_th", "gamma_det"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise NetworkSpecError(f"negative or invalid value for {name}", name)
        if not math.isfinite(self.detuning):
            raise NetworkSpecError("non-finite detuning", "detuning")

    def scaled(self, s: float) -> FourSiteConfig:
        """Multiply all frequencies and rates by ``s``."""
        names = ("g01", "g02", "g13", "g23", "detuning", "gamma1", "gamma2", "gamma0", "gamma_det")
        return replace(self, **{n: s * getattr(self, n) for n in names})


def four_site_preset(cfg: FourSiteConfig) -> NetworkSpec:
    sign = 1.0 if cfg.interference == "constructive" else -1.0
    return NetworkSpec(
        modes=(Mode(0, 0.0), Mode(1, 0.0), Mode(2, cfg.detuning), Mode(3, 0.0)),
        couplings=(
            Coupling(0, 1, cfg.g01),
            Coupling(0, 2, cfg.g02),
            Coupling(1, 3, cfg.g13),
            Coupling(2, 3, sign * cfg.g23),
        ),
        dephasing=(Dephasing(1, cfg.gamma1), Dephasing(2, cfg.gamma2)),
        injection=Injection(0, cfg.gamma0, cfg.n_th),
        sink=Sink(3, cfg.gamma_det),
        label=f"four-site {cfg.interference}",
    )


@dataclass(frozen=True)
class DisorderSpec:
    """Static disorder ``dx`` and dephasing window ``delta_x``, both in linewidth units."""

    dx: float = 0.0
    delta_x: float = 0.0
    fwhm_cav: float = field(default=FWHM_CAV)

    def __post_init__(self):
        if not self.delta_x >= 0:
            raise NetworkSpecError("dephasing window must be non-negative", "delta_x")
        if not self.fwhm_cav > 0:
            raise NetworkSpecError("FWHM_cav must be positive", "fwhm_cav")


def apply_disorder(spec: NetworkSpec, d: DisorderSpec, site: int = 2, reference: int = 1) -> NetworkSpec:
    """Detune ``site`` from ``reference`` by ``d.dx`` linewidths."""
    known = {m.index for m in spec.modes}
    if site not in known or reference not in known:
        raise NetworkSpecError(f"disordered site {site} or reference {reference} not present", "modes")
    w = spec.detunings()
    return spec.with_detuning(site, float(w[reference] + d.dx * d.fwhm_cav))
