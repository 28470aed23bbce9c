import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from upbdimer import analytic, fock, lindblad
from upbdimer.exceptions import CutoffError, DegenerateSteadyStateError, IntegrationError
from upbdimer.params import DimerParams, DriveSpec


def _dense_lindblad(H, gammas, rho, n_cut):
    out = -1j * (H @ rho - rho @ H)
    for site, g in zip((1, 2), gammas):
        a = fock.destroy(n_cut, site).toarray()
        ad = a.conj().T
        out += g * (a @ rho @ ad - 0.5 * (ad @ a @ rho + rho @ ad @ a))
    return out


def _random_state(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


# ---------------------------------------------------------------- Hamiltonian

def test_kerr_energy_of_two_photons():
    H = lindblad.build_hamiltonian(DimerParams(0.0, 0.3, 0.0), DriveSpec(0.0), 3)
    i = 2 * 4 + 0
    assert H[i, i] == pytest.approx(0.6)


def test_hopping_matrix_element():
    H = lindblad.build_hamiltonian(DimerParams(0.1, 0.2, 0.37), DriveSpec(0.0), 3)
    assert H[1 * 4 + 0, 0 * 4 + 1] == pytest.approx(0.37)


def test_drive_matrix_elements():
    drive = DriveSpec(0.05, phi=0.3, ratio=0.5)
    H = lindblad.build_hamiltonian(DimerParams(0.0, 0.0, 0.0), drive, 2, envelope_value=0.8)
    assert H[3, 0] == pytest.approx(0.05)  # <1,0|H|0,0>
    assert H[1, 0] == pytest.approx(0.8 * drive.F2)  # <0,1|H|0,0>


def test_cross_kerr_term():
    H = lindblad.build_hamiltonian(DimerParams(0.0, 0.0, 0.0, Ux=0.07), DriveSpec(0.0), 3)
    assert H[2 * 4 + 3, 2 * 4 + 3] == pytest.approx(0.07 * 6)


def test_mismatched_detunings():
    p = DimerParams(0.1, 0.0, 0.0, delta_Delta=0.04)
    H = lindblad.build_hamiltonian(p, DriveSpec(0.0), 2)
    assert H[3, 3] == pytest.approx(0.12) and H[1, 1] == pytest.approx(0.08)


def test_hamiltonian_cutoff_guard():
    with pytest.raises(CutoffError):
        lindblad.build_hamiltonian(DimerParams(0, 0, 0.4), DriveSpec(0.01), 1)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0, 0.5),
       st.floats(-4, 4), st.floats(0, 2), st.floats(-0.5, 0.5))
def test_hamiltonian_hermitian(delta, u, J, F1, phi, r, ux):
    H = lindblad.build_hamiltonian(DimerParams(delta, u, J, Ux=ux), DriveSpec(F1, phi, r), 4)
    assert abs(H - H.conj().T).max() < 1e-14


# ---------------------------------------------------------------- Liouvillian

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_liouvillian_matches_dense_master_equation(seed):
    rng = np.random.default_rng(seed)
    n_cut = 3
    params = DimerParams(rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 1),
                         delta_gamma=rng.uniform(-0.5, 0.5))
    drive = DriveSpec(rng.uniform(0, 0.3), rng.uniform(0, 6), rng.uniform(0, 2))
    H = lindblad.build_hamiltonian(params, drive, n_cut)
    L = lindblad.liouvillian(params, drive, n_cut)
    rho = _random_state(rng, 16)
    got = lindblad._unvec(L @ lindblad._vec(rho))
    want = _dense_lindblad(H.toarray(), params.site_gammas(), rho, n_cut)
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert abs(np.trace(got)) < 1e-12


def test_trace_preserved_for_mixed_state():
    L = lindblad.build_liouvillian(sp.csr_matrix((16, 16), dtype=complex), 1.0, 1.0)
    out = L @ lindblad._vec(np.eye(16) / 16)
    assert abs(np.trace(lindblad._unvec(out))) < 1e-15


def test_pure_decay_rate():
    L = lindblad.build_liouvillian(sp.csr_matrix((9, 9), dtype=complex), 1.0, 1.0)
    drho = lindblad._unvec(L @ lindblad._vec(fock.projector(2, 1, 0)))
    assert fock.expect(fock.number(2, 1), drho).real == pytest.approx(-1.0)


def test_vacuum_is_steady_without_drive():
    L = lindblad.liouvillian(DimerParams(0.1, 0.2, 0.4), DriveSpec(0.0), 3)
    assert np.max(np.abs(L @ lindblad._vec(fock.projector(3, 0, 0)))) == 0


def test_liouvillian_rejects_bad_rates():
    with pytest.raises(ValueError):
        lindblad.build_liouvillian(sp.identity(9, dtype=complex), 1.0, 0.0)


# ---------------------------------------------------------------- steady state

def test_undriven_steady_state_is_vacuum():
    rho = lindblad.steady_state(lindblad.liouvillian(DimerParams(0.1, 0.2, 0.4),
                                                     DriveSpec(0.0), 4))
    np.testing.assert_allclose(rho, fock.projector(4, 0, 0), atol=1e-14)


def test_locus_steady_state(locus04, weak_drive):
    rho = lindblad.steady_state(lindblad.liouvillian(locus04, weak_drive))
    fock.check_density_matrix(rho)
    c = lindblad.correlators_equal_time(rho)
    assert c.g2_22 <= 0.01
    assert c.g2_11 == pytest.approx(0.98, abs=0.02)
    ref = analytic.g2_from_amplitudes(analytic.amplitude_steady_state(locus04, weak_drive))
    for a, b in zip(c, ref):
        assert a == pytest.approx(b, abs=0.01)


def test_strong_drive_landscape_point():
    # near the minimum over Delta at F1 = 0.25
    p = DimerParams(0.0543, 0.052, 0.4)
    c = lindblad.correlators_equal_time(lindblad.steady_state(
        lindblad.liouvillian(p, DriveSpec(0.25))))
    assert c.g2_22 == pytest.approx(0.46, abs=0.05)
    assert c.n1 == pytest.approx(0.30, abs=0.03)
    assert c.n2 == pytest.approx(7e-3, abs=1e-3)


def test_steady_state_independent_of_replaced_row(locus04):
    L = lindblad.liouvillian(locus04, DriveSpec(0.1), 7)
    a = lindblad.steady_state(L, replace_row=0)
    b = lindblad.steady_state(L, replace_row=5 * 65)
    assert np.max(np.abs(a - b)) < 1e-9


def test_replace_row_must_be_diagonal(locus04, weak_drive):
    with pytest.raises(ValueError):
        lindblad.steady_state(lindblad.liouvillian(locus04, weak_drive, 3), replace_row=1)


def test_iterative_matches_direct(locus04):
    L = lindblad.liouvillian(locus04, DriveSpec(0.15), 5)
    a = lindblad.steady_state(L, method="direct")
    b = lindblad.steady_state(L, method="iterative")
    assert np.max(np.abs(a - b)) < 1e-10
    with pytest.raises(ValueError):
        lindblad.steady_state(L, method="magic")


def test_degenerate_steady_state():
    with pytest.raises(DegenerateSteadyStateError):
        lindblad.steady_state(sp.csr_matrix((16, 16), dtype=complex))


def test_cutoff_convergence_strong_drive(locus04):
    g = []
    for n_cut in (7, 15):
        rho = lindblad.steady_state(lindblad.liouvillian(locus04, DriveSpec(0.25), n_cut))
        fock.check_density_matrix(rho)
        g.append(lindblad.correlators_equal_time(rho, n_cut).g2_22)
    assert abs(g[0] - g[1]) < 1e-3


# ---------------------------------------------------------------- correlators

def test_linear_cavity_is_poissonian():
    rho = lindblad.steady_state(lindblad.liouvillian(DimerParams(0.2, 0.0, 0.0),
                                                     DriveSpec(0.01), 5))
    c = lindblad.correlators_equal_time(rho)
    assert c.g2_11 == pytest.approx(1.0, abs=1e-3)


def test_vacuum_correlators_undefined():
    c = lindblad.correlators_equal_time(fock.projector(3, 0, 0))
    assert c.g2_11 is None and c.g2_22 is None and c.g2_12 is None
    assert c.n1 == 0 and c.n2 == 0


def test_fock_state_correlators():
    c = lindblad.correlators_equal_time(fock.projector(4, 2, 1))
    assert c.g2_11 == pytest.approx(0.5) and c.g2_12 == pytest.approx(1.0)
    assert c.g2_22 == pytest.approx(0.0)


def test_numeric_qrt_against_closed_form(locus04, weak_drive):
    tau = lindblad.DEFAULT_TAU
    num = lindblad.g2_tau_numeric(locus04, weak_drive, (2, 2), tau)
    ana = analytic.qrt_g2_tau(locus04, weak_drive, 2, tau)
    assert np.max(np.abs(num.values - ana.values)) < 0.01
    assert num.method == "numeric" and np.all(num.values >= 0)
    rho = lindblad.steady_state(lindblad.liouvillian(locus04, weak_drive))
    g0 = lindblad.correlators_equal_time(rho).g2_22
    assert num.values[0] == pytest.approx(g0, abs=1e-8)


def test_numeric_qrt_site1_near_unity(locus04, weak_drive):
    s = lindblad.g2_tau_numeric(locus04, weak_drive, (1, 1), np.linspace(0, 30, 301))
    assert np.all((s.values > 0.9) & (s.values < 1.1))


def test_numeric_cross_correlator_start(locus04, weak_drive):
    rho = lindblad.steady_state(lindblad.liouvillian(locus04, weak_drive, 5))
    g12 = lindblad.correlators_equal_time(rho).g2_12
    s = lindblad.g2_tau_numeric(locus04, weak_drive, (1, 2), [0.0, 1.0], n_cut=5)
    assert s.values[0] == pytest.approx(g12, rel=1e-8)


def test_numeric_qrt_rejects_pulse(locus04, weak_drive):
    with pytest.raises(ValueError):
        lindblad.g2_tau_numeric(locus04, weak_drive.with_(pulse_sigma=5.0))


def test_integration_error_reports_time():
    with pytest.raises(IntegrationError) as info:
        lindblad._propagate(lambda t, y: y ** 2, np.ones((1, 1)), (0.0, 2.0), None)
    assert info.value.t_reached == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------- pulsed

def test_pulsed_vanishing_drive(locus04):
    drive = DriveSpec(1e-9, pulse_sigma=2.0)
    run = lindblad.time_evolve_pulsed(locus04, drive, np.linspace(-10, 10, 101), n_cut=3,
                                      tau_grid=np.linspace(0, 2, 5))
    assert np.max(run.n1) < 1e-12 and np.max(run.n2) < 1e-12


def test_pulsed_run_shape_and_bound(locus04):
    drive = DriveSpec(0.05, pulse_sigma=10.0)
    t = np.linspace(-60, 60, 241)
    run = lindblad.time_evolve_pulsed(locus04, drive, t, tau_grid=np.linspace(0, 20, 41))
    assert run.n1.shape == t.shape and run.n2.shape == t.shape
    assert run.g2_22_peak < 0.05
    assert np.all(run.n2 >= -1e-12)
    # the delayed series starts from the equal-time value at the peak
    assert run.g2_22_tau[0] == pytest.approx(run.g2_22_peak, rel=1e-6)


def test_pulsed_matches_cw_when_pulse_is_flat(locus04):
    # a very wide pulse looks like CW near its peak
    drive = DriveSpec(0.01, pulse_sigma=400.0)
    t = np.linspace(-2000, 2000, 11)
    run = lindblad.time_evolve_pulsed(locus04, drive, t, n_cut=4,
                                      tau_grid=np.linspace(0, 1, 3))
    cw = lindblad.correlators_equal_time(lindblad.steady_state(
        lindblad.liouvillian(locus04, DriveSpec(0.01), 4)))
    assert run.n2[5] == pytest.approx(cw.n2, rel=1e-3)


def test_pulsed_input_validation(locus04, weak_drive):
    with pytest.raises(ValueError):
        lindblad.time_evolve_pulsed(locus04, weak_drive, np.linspace(-50, 50, 11))
    with pytest.raises(ValueError):
        lindblad.time_evolve_pulsed(locus04, weak_drive.with_(pulse_sigma=10.0),
                                    np.linspace(-20, 20, 11))
