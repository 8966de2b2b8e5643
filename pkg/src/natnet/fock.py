"""Master-equation backend on a truncated multimode Fock space.

Density matrices are vectorized by column stacking, so that
``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply, splu

from .network import NetworkSpec

#: Default guard on the Liouville-space dimension d**2.
MAX_LIOUVILLE_DIM = 250_000
# below this d**2, evolve() exponentiates the dense generator
DENSE_PROPAGATOR_DIM = 4096


class NonErgodicError(RuntimeError):
    """The Liouvillian has no unique stationary state."""


class DimensionError(ValueError):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def _compositions(total, n):
    # all n-tuples of non-negative ints summing to total, in lexicographic order
    for cuts in itertools.combinations(range(total + n - 1), n - 1):
        parts, prev = [], -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(total + n - 2 - prev)
        yield tuple(parts)


@dataclass(frozen=True)
class FockBasis:
    """Occupation states of ``n_modes`` bosonic modes with at most ``n_max`` photons in total.

    States are ordered by total photon number, then lexicographically.
    """

    n_modes: int
    n_max: int = 2

    def __post_init__(self):
        if self.n_modes < 1 or self.n_max < 0:
            raise ValueError("need n_modes >= 1 and n_max >= 0")
        states = []
        for total in range(self.n_max + 1):
            states.extend(sorted(_compositions(total, self.n_modes)))
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(states)})

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, occupation) -> int:
        return self._index[tuple(occupation)]

    def annihilation(self, mode: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for k, s in enumerate(self.states):
            n = s[mode]
            if n == 0:
                continue
            lowered = s[:mode] + (n - 1,) + s[mode + 1:]
            rows.append(self._index[lowered])
            cols.append(k)
            vals.append(np.sqrt(n))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)

    def number(self, mode: int) -> sp.csr_matrix:
        occ = [s[mode] for s in self.states]
        return sp.diags(np.asarray(occ, dtype=complex), format="csr")

    def total_number(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])


def expected_dimension(n_modes: int, n_max: int) -> int:
    return comb(n_modes + n_max, n_modes)


def build_hamiltonian(spec: NetworkSpec, basis: FockBasis) -> sp.csr_matrix:
    """H = sum_i w_i n_i + sum_(i,j) g_ij (a_i^+ a_j + a_i a_j^+), hbar = 1."""
    if spec.n_modes != basis.n_modes:
        raise ValueError(f"spec has {spec.n_modes} modes, basis has {basis.n_modes}")
    a = [basis.annihilation(i) for i in range(basis.n_modes)]
    H = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for m in spec.modes:
        if m.detuning != 0.0:
            H = H + m.detuning * (a[m.index].conj().T @ a[m.index])
    for c in spec.couplings:
        hop = a[c.i].conj().T @ a[c.j]
        H = H + c.g * (hop + hop.conj().T)
    return H.tocsr()


def _spre(A, eye):
    return sp.kron(eye, A, format="csr")


def _spost(A, eye):
    return sp.kron(A.T, eye, format="csr")


def _dissipator(L, rate, eye):
    """rate * (L rho L^+ - {L^+ L, rho} / 2) as a superoperator."""
    LdL = (L.conj().T @ L).tocsr()
    return rate * (
        sp.kron(L.conj(), L, format="csr") - 0.5 * _spre(LdL, eye) - 0.5 * _spost(LdL, eye)
    )


@dataclass(frozen=True)
class Liouvillian:
    matrix: sp.csr_matrix
    basis: FockBasis

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)


def build_liouvillian(spec: NetworkSpec, basis: FockBasis, max_dim: int = MAX_LIOUVILLE_DIM) -> Liouvillian:
    """Assemble L with  dvec(rho)/dt = L vec(rho).

    Generators: coherent part from :func:`build_hamiltonian`; dephasing
    gamma_i (2 n_i rho n_i - {n_i^2, rho}); thermal pump on the injection site;
    absorbing decay Gamma_Det (2 a_k rho a_k^+ - {n_k, rho}) on the sink site.
    """
    d = basis.dim
    if d * d > max_dim:
        raise DimensionError(f"Liouville dimension {d * d} exceeds limit {max_dim}")
    eye = sp.identity(d, dtype=complex, format="csr")
    H = build_hamiltonian(spec, basis)
    L = -1j * (_spre(H, eye) - _spost(H, eye))

    for d_ in spec.dephasing:
        if d_.rate > 0:
            L = L + _dissipator(basis.number(d_.site), 2.0 * d_.rate, eye)

    inj = spec.injection
    if inj.rate > 0:
        a0 = basis.annihilation(inj.site)
        L = L + _dissipator(a0, (inj.n_th + 1.0) * inj.rate, eye)
        if inj.n_th > 0:
            L = L + _dissipator(a0.conj().T.tocsr(), inj.n_th * inj.rate, eye)

    if spec.sink.rate > 0:
        L = L + _dissipator(basis.annihilation(spec.sink.site), 2.0 * spec.sink.rate, eye)

    L = L.tocsr()
    L.eliminate_zeros()
    return Liouvillian(L, basis)


def vacuum(basis: FockBasis) -> np.ndarray:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def fock_state(basis: FockBasis, occupation) -> np.ndarray:
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    k = basis.index(occupation)
    rho[k, k] = 1.0
    return rho


def evolve(L: Liouvillian, rho0: np.ndarray, t_grid) -> list[np.ndarray]:
    """Propagate ``rho0`` with exp(L t) and return the state at every time in ``t_grid``."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    d = L.dim
    v = vec(np.asarray(rho0, dtype=complex))
    out = [unvec(v, d).copy()]
    dense = d * d <= DENSE_PROPAGATOR_DIM
    A = L.matrix.toarray() if dense else L.matrix.tocsc()
    propagators = {}
    for dt in np.diff(t):
        if dense:
            if dt not in propagators:
                propagators[dt] = scipy.linalg.expm(A * dt)
            v = propagators[dt] @ v
        else:
            v = expm_multiply(A * dt, v)
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("integration diverged; the generator may be unstable or too stiff")
        out.append(unvec(v, d).copy())
    return out


def steady_state(L: Liouvillian, residual_tol: float = 1e-10) -> np.ndarray:
    """Kernel of L normalized to unit trace.

    The equation for rho_00 (redundant because L is trace-annihilating) is
    replaced by the trace condition before a sparse LU solve.
    """
    d = L.dim
    M = L.matrix.tolil(copy=True)
    trace_row = vec(np.eye(d))
    M[0, :] = trace_row
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = splu(M.tocsc())
    except RuntimeError as exc:
        raise NonErgodicError("stationary state is not unique (singular Liouvillian)") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise NonErgodicError("stationary state is not unique (singular Liouvillian)")
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    res = np.linalg.norm(L.matrix @ vec(rho))
    if res > residual_tol * max(1.0, np.abs(L.matrix).max()):
        raise NonErgodicError(f"stationary solve residual {res:.3e} too large; network may be non-ergodic")
    return rho


def expectation(rho: np.ndarray, op) -> complex:
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.trace(rho @ op))


def moments(rho: np.ndarray, basis: FockBasis) -> np.ndarray:
    """C_ij = <a_i^+ a_j> evaluated on a density matrix."""
    a = [basis.annihilation(i) for i in range(basis.n_modes)]
    C = np.empty((basis.n_modes, basis.n_modes), dtype=complex)
    for i in range(basis.n_modes):
        for j in range(basis.n_modes):
            C[i, j] = expectation(rho, a[i].conj().T @ a[j])
    return C


def transmission(rho_ss: np.ndarray, spec: NetworkSpec, basis: FockBasis | None = None) -> float:
    """Photon absorption rate into the sink, 2 Gamma_Det <n_k>."""
    if spec.sink.rate == 0:
        return 0.0
    basis = basis or _basis_for(rho_ss, spec)
    nk = expectation(rho_ss, basis.number(spec.sink.site)).real
    return max(2.0 * spec.sink.rate * nk, 0.0)


def injection_flux(rho: np.ndarray, spec: NetworkSpec, basis: FockBasis) -> float:
    """Net photon rate delivered by the pump, evaluated with truncated operators.

    Equals Gamma0 (n_th <a a^+> - (n_th + 1) <n_0>); on the untruncated space
    <a a^+> = <n_0> + 1 and this reduces to Gamma0 (n_th - <n_0>).
    """
    inj = spec.injection
    a0 = basis.annihilation(inj.site)
    aad = expectation(rho, a0 @ a0.conj().T).real
    n0 = expectation(rho, a0.conj().T @ a0).real
    return inj.rate * (inj.n_th * aad - (inj.n_th + 1.0) * n0)


def _basis_for(rho, spec):
    for n_max in range(0, 64):
        dim = expected_dimension(spec.n_modes, n_max)
        if dim == rho.shape[0]:
            return FockBasis(spec.n_modes, n_max)
        if dim > rho.shape[0]:
            break
    raise ValueError("density matrix size does not match any Fock basis for this spec")


def solve_transmission(spec: NetworkSpec, n_max: int = 2, max_dim: int = MAX_LIOUVILLE_DIM) -> float:
    basis = FockBasis(spec.n_modes, n_max)
    rho = steady_state(build_liouvillian(spec, basis, max_dim))
    return transmission(rho, spec, basis)
