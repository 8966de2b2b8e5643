import math

import numpy as np
import pytest

from conftest import random_density_matrix, random_spec, spec_of
from natnet import fock
from natnet.network import (
    FourSiteConfig,
    Injection,
    NetworkSpec,
    Sink,
    four_site_preset,
)


def dense_rhs(spec, basis, rho):
    """Master-equation right-hand side from operator products (no vectorization)."""
    a = [basis.annihilation(i).toarray() for i in range(basis.n_modes)]
    ad = [x.conj().T for x in a]
    H = fock.build_hamiltonian(spec, basis).toarray()
    out = -1j * (H @ rho - rho @ H)

    def D(L, c):
        LdL = L.conj().T @ L
        return c * (2 * L @ rho @ L.conj().T - LdL @ rho - rho @ LdL)

    for d in spec.dephasing:
        n = ad[d.site] @ a[d.site]
        out += d.rate * (2 * n @ rho @ n - n @ n @ rho - rho @ n @ n)
    inj = spec.injection
    k = inj.site
    out += inj.n_th * inj.rate / 2 * (-(a[k] @ ad[k] @ rho + rho @ a[k] @ ad[k]) + 2 * ad[k] @ rho @ a[k])
    out += (inj.n_th + 1) * inj.rate / 2 * (-(ad[k] @ a[k] @ rho + rho @ ad[k] @ a[k]) + 2 * a[k] @ rho @ ad[k])
    out += D(a[spec.sink.site], spec.sink.rate)
    return out


# ---- basis -------------------------------------------------------------------


@pytest.mark.parametrize("n_modes, n_max", [(1, 1), (2, 2), (4, 2), (3, 4), (5, 1)])
def test_basis_dimension(n_modes, n_max):
    b = fock.FockBasis(n_modes, n_max)
    assert b.dim == math.comb(n_modes + n_max, n_modes)
    assert len(set(b.states)) == b.dim


def test_basis_order_is_stable():
    b = fock.FockBasis(2, 2)
    assert b.states == ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))
    assert fock.FockBasis(2, 2).states == b.states


def test_ladder_operators():
    b = fock.FockBasis(2, 3)
    a0 = b.annihilation(0).toarray()
    n0 = b.number(0).toarray()
    assert np.allclose(a0.conj().T @ a0, n0)
    # [a, a^+] = 1 away from the cutoff shell
    comm = a0 @ a0.conj().T - a0.conj().T @ a0
    below = b.total_number() < b.n_max
    assert np.allclose(np.diag(comm)[below], 1.0)


# ---- Hamiltonian -------------------------------------------------------------


def test_single_mode_number_operator():
    H = fock.build_hamiltonian(spec_of(1, w=[1.0], sink=(0, 0.0)), fock.FockBasis(1, 1)).toarray()
    assert np.array_equal(H, np.diag([0.0, 1.0]))


def test_single_excitation_hopping():
    b = fock.FockBasis(2, 1)
    H = fock.build_hamiltonian(spec_of(2, [(0, 1, 0.5)]), b).toarray()
    expected = np.zeros((3, 3))
    i, j = b.index((1, 0)), b.index((0, 1))
    expected[i, j] = expected[j, i] = 0.5
    assert np.array_equal(H, expected)


def test_hamiltonian_hermitian_and_number_conserving(rng):
    spec = random_spec(rng, 4)
    b = fock.FockBasis(4, 3)
    H = fock.build_hamiltonian(spec, b).toarray()
    assert np.abs(H - H.conj().T).max() == 0
    tot = b.total_number()
    assert np.all(H[tot[:, None] != tot[None, :]] == 0)


def test_mode_count_mismatch():
    with pytest.raises(ValueError):
        fock.build_hamiltonian(spec_of(2), fock.FockBasis(3, 1))


# ---- Liouvillian -------------------------------------------------------------


def test_liouvillian_matches_operator_form(rng):
    for _ in range(5):
        spec = random_spec(rng)
        b = fock.FockBasis(spec.n_modes, 2)
        L = fock.build_liouvillian(spec, b)
        rho = random_density_matrix(rng, b.dim)
        assert np.allclose(L.apply(rho), dense_rhs(spec, b, rho), atol=1e-12)


def test_closed_system_limit():
    spec = spec_of(3, [(0, 1, 1.0), (1, 2, 0.7)], w=[0, 0.4, -0.2])
    b = fock.FockBasis(3, 2)
    L = fock.build_liouvillian(spec, b).matrix.toarray()
    eye = np.eye(b.dim)
    H = fock.build_hamiltonian(spec, b).toarray()
    assert np.allclose(L, -1j * (np.kron(eye, H) - np.kron(H.T, eye)))
    assert np.abs(np.linalg.eigvals(L).real).max() < 1e-10


def test_trace_annihilation_and_hermiticity(rng):
    for _ in range(10):
        spec = random_spec(rng)
        b = fock.FockBasis(spec.n_modes, 2)
        L = fock.build_liouvillian(spec, b)
        assert np.abs(fock.vec(np.eye(b.dim)) @ L.matrix).max() <= 1e-12
        X = random_density_matrix(rng, b.dim, hermitian_only=True)
        out = L.apply(X)
        assert abs(np.trace(out)) <= 1e-12 * max(1, np.abs(X).max())
        assert np.abs(out - out.conj().T).max() <= 1e-12 * max(1, np.abs(out).max())


def test_coherent_and_dephasing_keep_number_blocks(rng):
    spec = random_spec(rng, 3)
    spec = NetworkSpec(spec.modes, spec.couplings, spec.dephasing,
                       Injection(0, 0.0, 0.0), Sink(spec.sink.site, 0.0))
    b = fock.FockBasis(3, 3)
    tot = b.total_number()
    mask = tot[:, None] == tot[None, :]
    X = random_density_matrix(rng, b.dim) * mask
    out = fock.build_liouvillian(spec, b).apply(X)
    assert np.abs(out[~mask]).max() < 1e-12


def test_literal_dephasing_agrees_on_single_excitations(rng):
    # gamma (2 n rho n - {n, rho}) coincides with the standard form when n^2 = n
    spec = spec_of(3, deph=[(0, 0.3), (1, 1.1), (2, 0.6)])
    b = fock.FockBasis(3, 1)
    rho = random_density_matrix(rng, b.dim)
    literal = np.zeros_like(rho)
    for d in spec.dephasing:
        n = b.number(d.site).toarray()
        literal += d.rate * (-(n @ rho + rho @ n) + 2 * n @ rho @ n)
    assert np.allclose(fock.build_liouvillian(spec, b).apply(rho), literal, atol=1e-14)


def test_dimension_guard():
    spec = spec_of(4)
    with pytest.raises(fock.DimensionError):
        fock.build_liouvillian(spec, fock.FockBasis(4, 3), max_dim=1000)


# ---- dynamics ----------------------------------------------------------------


def test_zero_generator_is_identity(rng):
    b = fock.FockBasis(2, 1)
    L = fock.build_liouvillian(spec_of(2), b)
    rho0 = random_density_matrix(rng, b.dim)
    for rho in fock.evolve(L, rho0, [0, 1, 5, 50]):
        assert np.allclose(rho, rho0, atol=1e-14)


@pytest.mark.parametrize("g", [0.5, 1.3])
def test_rabi_flopping(g):
    # two resonant modes, one photon: <n_1>(t) = cos^2(g t)
    b = fock.FockBasis(2, 1)
    L = fock.build_liouvillian(spec_of(2, [(0, 1, g)]), b)
    t = np.linspace(0, 4, 41)
    n0 = b.number(0)
    states = fock.evolve(L, fock.fock_state(b, (1, 0)), t)
    got = np.array([fock.expectation(r, n0).real for r in states])
    assert np.allclose(got, np.cos(g * t) ** 2, atol=1e-9)


def test_evolution_preserves_density_matrix(rng):
    spec = random_spec(rng, 3)
    b = fock.FockBasis(3, 2)
    L = fock.build_liouvillian(spec, b)
    for rho in fock.evolve(L, fock.vacuum(b), np.linspace(0, 20, 11)):
        assert abs(np.trace(rho) - 1) <= 1e-8
        assert np.abs(rho - rho.conj().T).max() <= 1e-10
        assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_evolve_rejects_bad_grid():
    L = fock.build_liouvillian(spec_of(1, sink=(0, 0.0)), fock.FockBasis(1, 1))
    with pytest.raises(ValueError):
        fock.evolve(L, fock.vacuum(L.basis), [0, 2, 1])
    with pytest.raises(ValueError):
        fock.evolve(L, fock.vacuum(L.basis), [1, 2])


# ---- steady state ------------------------------------------------------------


@pytest.mark.parametrize("n_th", [0.01, 0.3, 2.0])
def test_thermal_two_level_detailed_balance(n_th):
    # up rate n_th*G0, down rate (n_th+1)*G0 on the {0,1} ladder
    spec = spec_of(1, inj=(0, 0.7, n_th), sink=(0, 0.0))
    b = fock.FockBasis(1, 1)
    rho = fock.steady_state(fock.build_liouvillian(spec, b))
    assert rho[1, 1].real / rho[0, 0].real == pytest.approx(n_th / (n_th + 1), rel=1e-12)
    assert fock.expectation(rho, b.number(0)).real == pytest.approx(n_th / (2 * n_th + 1), rel=1e-12)


def test_disconnected_sink_stays_empty():
    spec = spec_of(4, [(0, 1, 1.0), (2, 3, 1.0)], inj=(0, 0.5, 0.1), sink=(3, 1.0))
    b = fock.FockBasis(4, 2)
    rho = fock.steady_state(fock.build_liouvillian(spec, b))
    for site in (2, 3):
        assert abs(fock.expectation(rho, b.number(site))) < 1e-14
    assert fock.transmission(rho, spec, b) < 1e-13


def test_non_ergodic_network_reported():
    # mode 2 is isolated and undamped: its occupation is never fixed
    spec = spec_of(3, [(0, 1, 1.0)], inj=(0, 0.5, 0.1), sink=(1, 1.0))
    with pytest.raises(fock.NonErgodicError):
        fock.steady_state(fock.build_liouvillian(spec, fock.FockBasis(3, 1)))


def test_steady_state_matches_long_time_evolution():
    spec = four_site_preset(FourSiteConfig(detuning=5.0, gamma2=2.0))
    b = fock.FockBasis(4, 2)
    L = fock.build_liouvillian(spec, b)
    rho_ss = fock.steady_state(L)
    assert np.linalg.norm(L.matrix @ fock.vec(rho_ss)) <= 1e-10
    # slowest decay rate is ~0.064/us; 800 us leaves < 1e-17 of the transient
    late = fock.evolve(L, fock.vacuum(b), [0, 400, 800])[-1]
    assert np.abs(late - rho_ss).max() <= 1e-8


def test_steady_state_is_density_matrix(rng):
    for _ in range(5):
        spec = random_spec(rng)
        b = fock.FockBasis(spec.n_modes, 2)
        rho = fock.steady_state(fock.build_liouvillian(spec, b))
        assert np.trace(rho).real == pytest.approx(1, abs=1e-10)
        assert np.abs(rho - rho.conj().T).max() <= 1e-12
        assert np.linalg.eigvalsh(rho).min() >= -1e-9


# ---- transmission ------------------------------------------------------------


def test_transmission_zero_cases(rng):
    spec = spec_of(2, [(0, 1, 1.0)], inj=(0, 0.5, 0.1), sink=(1, 0.0))
    b = fock.FockBasis(2, 2)
    rho = random_density_matrix(rng, b.dim)
    assert fock.transmission(rho, spec, b) == 0.0
    spec = spec_of(2, [(0, 1, 1.0)], inj=(0, 0.5, 0.1), sink=(1, 1.0))
    assert fock.transmission(fock.vacuum(b), spec, b) == 0.0


def test_flux_balance_with_truncated_pump(rng):
    for _ in range(10):
        spec = random_spec(rng)
        b = fock.FockBasis(spec.n_modes, 2)
        rho = fock.steady_state(fock.build_liouvillian(spec, b))
        out = fock.transmission(rho, spec, b)
        assert fock.injection_flux(rho, spec, b) == pytest.approx(out, rel=1e-10)


@pytest.mark.parametrize("n_max, tol", [(1, 5e-2), (2, 1e-3), (3, 2e-5)])
def test_untruncated_flux_balance_converges_with_cutoff(n_max, tol):
    # Gamma0 (n_th - <n_0>) is only exact without truncation; the defect is O(n_th^n_max)
    spec = four_site_preset(FourSiteConfig(detuning=5.0, gamma2=2.0))
    b = fock.FockBasis(4, n_max)
    rho = fock.steady_state(fock.build_liouvillian(spec, b))
    n0 = fock.expectation(rho, b.number(0)).real
    inj = spec.injection
    assert inj.rate * (inj.n_th - n0) == pytest.approx(fock.transmission(rho, spec, b), rel=tol)


def test_scale_covariance():
    spec = four_site_preset(FourSiteConfig(detuning=3.0, gamma2=1.5))
    b = fock.FockBasis(4, 2)
    rho = fock.steady_state(fock.build_liouvillian(spec, b))
    t = fock.transmission(rho, spec, b)
    for s in (0.1, 10.0):
        scaled = spec.scaled(s)
        rho_s = fock.steady_state(fock.build_liouvillian(scaled, b))
        assert np.abs(rho_s - rho).max() < 1e-12
        assert fock.transmission(rho_s, scaled, b) == pytest.approx(s * t, rel=1e-9)
