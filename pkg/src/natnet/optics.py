"""Classical scattering-matrix model of the fiber interferometer network.

Every component owns a set of named ports and a scattering matrix mapping
incoming to outgoing field amplitudes. Connections join two ports (with an
optional power transmission factor). With ``b`` the outgoing and ``a`` the
incoming amplitudes on all ports, ``a = P b`` and ``b = S a + e`` where ``e``
is the source emission, so the steady fields satisfy ``(I - S P) b = e``.

Detunings are expressed in units of the cavity linewidth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .network import FWHM_CAV

PORTS = {
    "coupler": ("in1", "in2", "out1", "out2"),
    "cavity": ("a", "b"),
    "mirror": ("p",),
    "loss": ("a", "b"),
    "phase": ("a", "b"),
    "source": ("out",),
    "detector": ("in",),
}

_PASSIVITY_SLACK = 1e-12


class OpticsError(ValueError):
    pass


class SingularNetworkError(RuntimeError):
    """The field equations have no unique solution (lossless resonant loop)."""


@dataclass(frozen=True)
class CavityParams:
    """Lorentzian FBG resonator.

    ``t0`` is the peak power transmission, ``rho0`` the on-resonance amplitude
    reflection and ``r_inf`` the off-resonance power reflectance.
    """

    fwhm: float = FWHM_CAV
    t0: float = 1.0
    rho0: float = 0.0
    r_inf: float = 1.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise OpticsError("cavity FWHM must be positive")
        for name in ("t0", "r_inf"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise OpticsError(f"cavity {name} must lie in [0, 1], got {v}")
        # singular values of [[r, t], [t, r]] are |r + t| and |r - t|; their
        # maxima over detuning are max(|sqrt(R)rho0| + sqrt(T0), sqrt(R))
        if math.sqrt(self.r_inf) * abs(self.rho0) + math.sqrt(self.t0) > 1.0 + _PASSIVITY_SLACK:
            raise OpticsError("cavity parameters violate passivity near resonance")


def fbg_cavity_response(x, cav: CavityParams):
    """Field transmission and reflection at detuning ``x`` (linewidth units)."""
    x = np.asarray(x, dtype=float)
    denom = 1.0 - 2j * x
    t = math.sqrt(cav.t0) / denom
    r = math.sqrt(cav.r_inf) * (cav.rho0 - 2j * x) / denom
    if t.ndim == 0:
        return complex(t), complex(r)
    return t, r


@dataclass(frozen=True)
class ComponentSpec:
    """One network element.

    ``params`` per kind: coupler ``T``; cavity ``CavityParams`` fields;
    mirror ``r``, ``phi``; loss ``alpha``; phase ``phi``; source ``amplitude``.
    """

    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PORTS:
            raise OpticsError(f"unknown component kind {self.kind!r} for {self.name!r}")
        if "." in self.name:
            raise OpticsError(f"component name {self.name!r} may not contain '.'")
        p = self.params
        if self.kind == "coupler" and not 0.0 <= p.get("T", 0.5) <= 1.0:
            raise OpticsError(f"coupler {self.name}: T must lie in [0, 1]")
        if self.kind == "mirror" and not 0.0 <= p.get("r", 0.0) <= 1.0:
            raise OpticsError(f"mirror {self.name}: r must lie in [0, 1]")
        if self.kind == "loss" and not 0.0 <= p.get("alpha", 1.0) <= 1.0:
            raise OpticsError(f"loss {self.name}: alpha must lie in [0, 1]")
        if self.kind == "cavity":
            object.__setattr__(self, "_cavity", CavityParams(**p))

    @property
    def ports(self):
        return PORTS[self.kind]

    def smatrix(self, x: float = 0.0) -> np.ndarray:
        p = self.params
        if self.kind == "coupler":
            T = p.get("T", 0.5)
            s, c = math.sqrt(T), 1j * math.sqrt(1.0 - T)
            K = np.array([[s, c], [c, s]])
            S = np.zeros((4, 4), dtype=complex)
            S[2:, :2] = K
            S[:2, 2:] = K.T
            return S
        if self.kind == "cavity":
            t, r = fbg_cavity_response(x, self._cavity)
            return np.array([[r, t], [t, r]], dtype=complex)
        if self.kind == "mirror":
            return np.array([[p.get("r", 0.0) * np.exp(1j * p.get("phi", 0.0))]], dtype=complex)
        if self.kind == "loss":
            v = math.sqrt(p.get("alpha", 1.0))
            return np.array([[0.0, v], [v, 0.0]], dtype=complex)
        if self.kind == "phase":
            v = np.exp(1j * p.get("phi", 0.0))
            return np.array([[0.0, v], [v, 0.0]], dtype=complex)
        return np.zeros((1, 1), dtype=complex)


class ScatteringNetwork:
    """Directed-port network of components joined by (possibly lossy) connections."""

    def __init__(self, components, connections):
        self.components = tuple(components)
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise OpticsError("component names must be unique")
        self.port_names = [f"{c.name}.{p}" for c in self.components for p in c.ports]
        self.port_index = {name: k for k, name in enumerate(self.port_names)}
        n = len(self.port_names)

        self.P = np.zeros((n, n))
        partner = {}
        for conn in connections:
            if len(conn) == 2:
                (u, v), alpha = conn, 1.0
            else:
                u, v, alpha = conn
            for port in (u, v):
                if port not in self.port_index:
                    raise OpticsError(f"unknown port {port!r}")
                if port in partner:
                    raise OpticsError(f"port {port!r} connected twice")
            if u == v:
                raise OpticsError(f"port {u!r} connected to itself")
            if not 0.0 <= alpha <= 1.0:
                raise OpticsError(f"connection {u}-{v}: loss factor must lie in [0, 1]")
            partner[u], partner[v] = v, u
            i, j = self.port_index[u], self.port_index[v]
            self.P[i, j] = self.P[j, i] = math.sqrt(alpha)
        self.connections = tuple(sorted({(min(u, v), max(u, v)) for u, v in partner.items()}))
        self.open_ports = [k for k, name in enumerate(self.port_names) if name not in partner]

        self._blocks = []
        self.emission = np.zeros(n, dtype=complex)
        self.sinks = []
        self.detectors = {}
        start = 0
        for c in self.components:
            idx = np.arange(start, start + len(c.ports))
            self._blocks.append((c, idx))
            if c.kind == "source":
                self.emission[idx[0]] = c.params.get("amplitude", 1.0)
                self.sinks.append(idx[0])
            elif c.kind == "detector":
                self.detectors[c.name] = idx[0]
                self.sinks.append(idx[0])
            start += len(c.ports)

    @property
    def cavities(self):
        return [c.name for c in self.components if c.kind == "cavity"]

    def smatrix(self, detunings=None) -> np.ndarray:
        detunings = detunings or {}
        unknown = set(detunings) - set(self.cavities)
        if unknown:
            raise OpticsError(f"detuning given for non-cavity components {sorted(unknown)}")
        n = len(self.port_names)
        S = np.zeros((n, n), dtype=complex)
        for c, idx in self._blocks:
            S[np.ix_(idx, idx)] = c.smatrix(detunings.get(c.name, 0.0))
        return S

    def loop_spectral_radius(self, detunings=None) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.smatrix(detunings) @ self.P))))

    def source_power(self) -> float:
        return float(np.sum(np.abs(self.emission) ** 2))

    @classmethod
    def from_dict(cls, doc: dict) -> ScatteringNetwork:
        try:
            comps = [ComponentSpec(c["name"], c["kind"], dict(c.get("params", {}))) for c in doc["components"]]
            conns = []
            for c in doc["connections"]:
                if isinstance(c, dict):
                    conns.append((c["from"], c["to"], float(c.get("alpha", 1.0))))
                else:
                    conns.append(tuple(c))
        except (KeyError, TypeError) as exc:
            raise OpticsError(f"malformed netlist: {exc}") from exc
        return cls(comps, conns)

    def to_dict(self) -> dict:
        conns = []
        for u, v in self.connections:
            alpha = self.P[self.port_index[u], self.port_index[v]] ** 2
            conns.append({"from": u, "to": v, "alpha": float(alpha)})
        return {
            "components": [{"name": c.name, "kind": c.kind, "params": dict(c.params)} for c in self.components],
            "connections": conns,
        }


def parse_netlist(text: str) -> ScatteringNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OpticsError(f"malformed JSON: {exc}") from exc
    return ScatteringNetwork.from_dict(doc)


@dataclass(frozen=True)
class FieldSolution:
    outgoing: np.ndarray
    incoming: np.ndarray
    network: ScatteringNetwork

    def detector_power(self, name: str) -> float:
        return float(abs(self.incoming[self.network.detectors[name]]) ** 2)

    def absorbed_power(self) -> float:
        """Power taken up by sources and detectors."""
        return float(np.sum(np.abs(self.incoming[self.network.sinks]) ** 2))

    def escaped_power(self) -> float:
        """Power leaving through unconnected ports."""
        return float(np.sum(np.abs(self.outgoing[self.network.open_ports]) ** 2))


def solve_fields(net: ScatteringNetwork, detunings=None, cond_limit: float = 1e12) -> FieldSolution:
    """Self-consistent steady fields by a direct solve of (I - S P) b = e."""
    S = net.smatrix(detunings)
    M = np.eye(len(net.port_names)) - S @ net.P
    if np.linalg.cond(M) > cond_limit:
        raise SingularNetworkError("field equations are singular; a lossless loop is on resonance")
    b = np.linalg.solve(M, net.emission)
    return FieldSolution(b, net.P @ b, net)


@dataclass(frozen=True)
class FourSiteOpticalConfig:
    """Mach-Zehnder with FBG cavities in both arms and recycling mirrors.

    A mirror reflectivity of 0 removes that mirror. The arm phase acts on
    arm 2; ``interference`` adds 0 (destructive) or pi (constructive) to it.
    """

    coupler_in: float = 0.5
    coupler_out: float = 0.5
    cavity1: CavityParams = CavityParams(t0=0.9, rho0=0.05, r_inf=0.95)
    cavity2: CavityParams = CavityParams(t0=0.8, rho0=0.05, r_inf=0.95)
    mirror1_r: float = 0.9
    mirror1_phi: float = 0.8
    mirror2_r: float = 0.9
    mirror2_phi: float = 0.8
    tap_alpha: float = 0.9
    arm_phase: float = 0.0
    interference: str = "destructive"

    def __post_init__(self):
        if self.interference not in ("constructive", "destructive"):
            raise OpticsError(f"interference must be 'constructive' or 'destructive', got {self.interference!r}")
        for name in ("coupler_in", "coupler_out", "mirror1_r", "mirror2_r", "tap_alpha"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise OpticsError(f"{name} must lie in [0, 1], got {v}")

    def without_mirrors(self) -> FourSiteOpticalConfig:
        return replace(self, mirror1_r=0.0, mirror2_r=0.0)

    @classmethod
    def lossless(cls, **kw) -> FourSiteOpticalConfig:
        ideal = CavityParams(t0=1.0, rho0=0.0, r_inf=1.0)
        base = dict(cavity1=ideal, cavity2=ideal, tap_alpha=1.0, mirror1_r=0.0, mirror2_r=0.0)
        base.update(kw)
        return cls(**base)

    @classmethod
    def from_dict(cls, doc: dict) -> FourSiteOpticalConfig:
        doc = dict(doc)
        for key in ("cavity1", "cavity2"):
            if key in doc and isinstance(doc[key], dict):
                doc[key] = CavityParams(**doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise OpticsError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, CavityParams):
                v = {"fwhm": v.fwhm, "t0": v.t0, "rho0": v.rho0, "r_inf": v.r_inf}
            out[name] = v
        return out

    def scaled(self, s: float) -> FourSiteOpticalConfig:
        """Scale both linewidths by ``s``; detunings stay in linewidth units."""
        return replace(
            self,
            cavity1=replace(self.cavity1, fwhm=s * self.cavity1.fwhm),
            cavity2=replace(self.cavity2, fwhm=s * self.cavity2.fwhm),
        )


def four_site_network(cfg: FourSiteOpticalConfig) -> ScatteringNetwork:
    phi = cfg.arm_phase + (math.pi if cfg.interference == "constructive" else 0.0)
    cav = lambda p: {"fwhm": p.fwhm, "t0": p.t0, "rho0": p.rho0, "r_inf": p.r_inf}  # noqa: E731
    comps = [
        ComponentSpec("laser", "source", {"amplitude": 1.0}),
        ComponentSpec("c_in", "coupler", {"T": cfg.coupler_in}),
        ComponentSpec("c_out", "coupler", {"T": cfg.coupler_out}),
        ComponentSpec("tap1", "loss", {"alpha": cfg.tap_alpha}),
        ComponentSpec("tap2", "loss", {"alpha": cfg.tap_alpha}),
        ComponentSpec("arm", "phase", {"phi": phi}),
        ComponentSpec("fbg1", "cavity", cav(cfg.cavity1)),
        ComponentSpec("fbg2", "cavity", cav(cfg.cavity2)),
        ComponentSpec("m1", "mirror", {"r": cfg.mirror1_r, "phi": cfg.mirror1_phi}),
        ComponentSpec("m2", "mirror", {"r": cfg.mirror2_r, "phi": cfg.mirror2_phi}),
        ComponentSpec("d3", "detector"),
    ]
    conns = [
        ("laser.out", "c_in.in1"),
        ("m1.p", "c_in.in2"),
        ("c_in.out1", "tap1.a"),
        ("tap1.b", "fbg1.a"),
        ("fbg1.b", "c_out.in1"),
        ("c_in.out2", "tap2.a"),
        ("tap2.b", "arm.a"),
        ("arm.b", "fbg2.a"),
        ("fbg2.b", "c_out.in2"),
        ("c_out.out1", "d3.in"),
        ("c_out.out2", "m2.p"),
    ]
    return ScatteringNetwork(comps, conns)


def interferometer_transmission(cfg: FourSiteOpticalConfig, dx: float, net: ScatteringNetwork | None = None) -> float:
    """Power at D3 per unit source power, laser on the FBG1 resonance and FBG2 detuned by ``dx``."""
    net = net or four_site_network(cfg)
    sol = solve_fields(net, {"fbg1": 0.0, "fbg2": float(dx)})
    return sol.detector_power("d3") / net.source_power()


def window_grid(center: float, width: float, n_samples: int) -> np.ndarray:
    if n_samples < 1 or n_samples % 2 == 0:
        raise ValueError("n_samples must be a positive odd integer")
    if width < 0:
        raise ValueError("window width must be non-negative")
    if width == 0 or n_samples == 1:
        return np.array([float(center)])
    return np.linspace(center - width / 2, center + width / 2, n_samples)


def dephased_transmission(cfg: FourSiteOpticalConfig, dx0: float, delta_x: float, n_samples: int = 51,
                          net: ScatteringNetwork | None = None) -> float:
    """Mean transmission over a uniform window of width ``delta_x`` centred on ``dx0``."""
    net = net or four_site_network(cfg)
    xs = window_grid(dx0, delta_x, n_samples)
    return float(np.mean([interferometer_transmission(cfg, x, net) for x in xs]))


def normalize(raw: float, reference: float) -> float:
    if reference == 0:
        raise ZeroDivisionError("normalization reference is zero")
    if reference < 0:
        raise ValueError("normalization reference must be positive")
    return raw / reference
