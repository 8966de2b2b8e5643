"""Noise-assisted transport in coupled optical-cavity networks.

Quantum side: :mod:`natnet.fock` (truncated Fock-space master equation) and
:mod:`natnet.moments` (exact second-moment closure). Classical side:
:mod:`natnet.optics` (scattering-matrix model of the fiber interferometer).
Sweeps and export live in :mod:`natnet.experiments`.
"""

from .experiments import (
    SweepResult,
    bell_shape_test,
    export_csv,
    find_peak,
    render_plot,
    sweep_dephasing,
    sweep_static_disorder,
)
from .network import (
    DisorderSpec,
    FourSiteConfig,
    NetworkSpec,
    NetworkSpecError,
    apply_disorder,
    four_site_preset,
    parse_network_spec,
    serialize_network_spec,
)
from .optics import FourSiteOpticalConfig, dephased_transmission, interferometer_transmission

__version__ = "0.1.0"

__all__ = [
    "DisorderSpec",
    "FourSiteConfig",
    "FourSiteOpticalConfig",
    "NetworkSpec",
    "NetworkSpecError",
    "SweepResult",
    "apply_disorder",
    "bell_shape_test",
    "dephased_transmission",
    "export_csv",
    "find_peak",
    "four_site_preset",
    "interferometer_transmission",
    "parse_network_spec",
    "render_plot",
    "serialize_network_spec",
    "sweep_dephasing",
    "sweep_static_disorder",
]
