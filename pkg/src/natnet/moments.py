"""Second-moment backend.

All generators of the model are quadratic in the mode operators or
number-conserving dephasing, so the correlation matrix C_ij = <a_i^+ a_j>
obeys a closed linear equation

    dC/dt = i[h, C] - M * C + Q

with h the single-particle matrix, M an elementwise damping mask and Q the
pump term Gamma0 n_th on entry (0, 0). Vectorization is column stacking,
as in :mod:`natnet.fock`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import NetworkSpec


class NonDissipativeError(RuntimeError):
    """The moment dynamics has no unique fixed point."""


@dataclass(frozen=True)
class MomentSystem:
    n_modes: int
    A: np.ndarray
    b: np.ndarray

    def rhs(self, C: np.ndarray) -> np.ndarray:
        n = self.n_modes
        return (self.A @ C.reshape(-1, order="F") + self.b).reshape((n, n), order="F")


def damping_mask(spec: NetworkSpec) -> np.ndarray:
    n = spec.n_modes
    gam = spec.dephasing_rates()
    M = gam[:, None] + gam[None, :]
    np.fill_diagonal(M, 0.0)
    inj, snk = spec.injection, spec.sink
    e0 = np.zeros(n)
    e0[inj.site] = 1.0
    ek = np.zeros(n)
    ek[snk.site] = 1.0
    M += 0.5 * inj.rate * (e0[:, None] + e0[None, :])
    M += snk.rate * (ek[:, None] + ek[None, :])
    return M


def build_moment_system(spec: NetworkSpec) -> MomentSystem:
    n = spec.n_modes
    h = spec.single_particle_matrix()
    eye = np.eye(n)
    # vec(hC - Ch) = (I kron h - h^T kron I) vec(C)
    A = 1j * (np.kron(eye, h) - np.kron(h.T, eye)) - np.diag(damping_mask(spec).reshape(-1, order="F"))
    Q = np.zeros((n, n), dtype=complex)
    Q[spec.injection.site, spec.injection.site] = spec.injection.rate * spec.injection.n_th
    return MomentSystem(n, A.astype(complex), Q.reshape(-1, order="F"))


def steady_moments(system: MomentSystem, rcond: float = 1e-13) -> np.ndarray:
    """Fixed point C = -A^{-1} b by dense LU."""
    n = system.n_modes
    try:
        with warnings.catch_warnings():
            # singularity is reported below via the pivot check
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(system.A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NonDissipativeError("moment generator is singular") from exc
    diag = np.abs(np.diag(lu))
    if diag.min() <= rcond * max(diag.max(), 1e-300):
        raise NonDissipativeError("moment generator is singular; the network has an undamped mode")
    x = scipy.linalg.lu_solve((lu, piv), -system.b)
    C = x.reshape((n, n), order="F")
    return 0.5 * (C + C.conj().T)


def transmission_from_moments(C: np.ndarray, spec: NetworkSpec) -> float:
    k = spec.sink.site
    return max(2.0 * spec.sink.rate * float(np.real(C[k, k])), 0.0)


def injection_flux_from_moments(C: np.ndarray, spec: NetworkSpec) -> float:
    inj = spec.injection
    return inj.rate * (inj.n_th - float(np.real(C[inj.site, inj.site])))


def evolve_moments(system: MomentSystem, C0: np.ndarray, t_grid) -> list[np.ndarray]:
    """Exact propagation of the affine system through an augmented matrix exponential."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    n = system.n_modes
    m = n * n
    G = np.zeros((m + 1, m + 1), dtype=complex)
    G[:m, :m] = system.A
    G[:m, m] = system.b
    y = np.append(np.asarray(C0, dtype=complex).reshape(-1, order="F"), 1.0)
    out = []
    prev = 0.0
    for tk in t:
        dt = tk - prev
        if dt != 0.0:
            y = scipy.linalg.expm(G * dt) @ y
        if not np.all(np.isfinite(y)):
            raise FloatingPointError("moment integration diverged")
        out.append(y[:m].reshape((n, n), order="F").copy())
        prev = tk
    return out


def solve_transmission(spec: NetworkSpec) -> float:
    return transmission_from_moments(steady_moments(build_moment_system(spec)), spec)
