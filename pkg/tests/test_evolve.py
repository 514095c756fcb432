import numpy as np
import pytest

from gatespeed.errors import ScheduleViolationError
from gatespeed.evolve import (PropagatorResult, dark_evolution, propagate,
                              propagate_with_gradient)
from gatespeed.matcore import ID2, SIGMA_X, expm_hermitian, kron
from gatespeed.model import (DeviceSpec, PulseSchedule, mhz_to_rad_ns,
                             segment_hamiltonian)

G = mhz_to_rad_ns(1.75)
ISING = DeviceSpec(interaction="ising", g=G, omega_max=3 * G)

# the entangling gate H0 realizes natively at pi/(4g): a |0>-controlled Z,
# locally equivalent to CZ (same interaction coefficients)
NATIVE_CZ = np.diag([-1, 1, 1, 1]).astype(complex)


def random_schedule(rng, spec, segments, t_ns):
    amps = rng.uniform(-spec.omega_max, spec.omega_max, size=(segments, 4))
    return PulseSchedule(t_ns, amps)


def phase_aligned_error(actual, target):
    z = np.trace(target.conj().T @ actual)
    phase = z / abs(z) if abs(z) > 1e-12 else 1.0
    return np.max(np.abs(actual - phase * target))


def test_zero_drive_gives_native_cz():
    sched = PulseSchedule(np.pi / (4 * G), np.zeros((4, 4)))
    u = propagate(ISING, sched).u
    assert phase_aligned_error(u, NATIVE_CZ) < 1e-12


def test_rabi_pi_pulse():
    # g -> 0, constant X drive on qubit 1 for T = pi/(2a) flips qubit 1
    a = 0.02
    spec = DeviceSpec(g=1e-300, r1=1.0, r2=1.0, omega_max=1.0)
    amps = np.zeros((1, 4))
    amps[0, 0] = a
    u = propagate(spec, PulseSchedule(np.pi / (2 * a), amps)).u
    assert np.max(np.abs(u - kron(-1j * SIGMA_X, ID2))) < 1e-12


def test_matches_fine_slicing_oracle(rng):
    # subdividing each segment 128-fold leaves the product unchanged
    sched = random_schedule(rng, ISING, 8, 100.0)
    u = propagate(ISING, sched).u
    fine = np.repeat(sched.amplitudes, 128, axis=0)
    u_fine = propagate(ISING, PulseSchedule(100.0, fine)).u
    assert np.max(np.abs(u - u_fine)) < 1e-10


def test_propagator_unitary(rng):
    for _ in range(10):
        sched = random_schedule(rng, ISING, 6, rng.uniform(10, 300))
        u = propagate(ISING, sched).u
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-10


def test_segment_doubling_invariance(rng):
    sched = random_schedule(rng, ISING, 5, 80.0)
    doubled = PulseSchedule(80.0, np.repeat(sched.amplitudes, 2, axis=0))
    assert np.max(np.abs(propagate(ISING, sched).u
                         - propagate(ISING, doubled).u)) < 1e-12


def test_composition_over_split_schedule(rng):
    sched = random_schedule(rng, ISING, 6, 120.0)
    first = PulseSchedule(60.0, sched.amplitudes[:3])
    second = PulseSchedule(60.0, sched.amplitudes[3:])
    u_whole = propagate(ISING, sched).u
    u_split = propagate(ISING, second).u @ propagate(ISING, first).u
    assert np.max(np.abs(u_whole - u_split)) < 1e-11


def test_bounds_enforced(rng):
    amps = np.full((2, 4), 1.5 * ISING.omega_max)
    with pytest.raises(ScheduleViolationError):
        propagate(ISING, PulseSchedule(50.0, amps))
    # the escape hatch for the noise study skips the check
    res = propagate(ISING, PulseSchedule(50.0, amps), enforce_bounds=False)
    assert isinstance(res, PropagatorResult)


def test_gradients_match_finite_differences(rng):
    sched = random_schedule(rng, ISING, 5, 90.0)
    res = propagate_with_gradient(ISING, sched)
    assert len(res.grads) == 20
    eps = 1e-7 * ISING.omega_max
    exact = np.stack(res.grads)
    fd = np.empty_like(exact)
    for m in range(5):
        for c in range(4):
            up = np.array(sched.amplitudes)
            up[m, c] += eps
            dn = np.array(sched.amplitudes)
            dn[m, c] -= eps
            du = (propagate(ISING, sched.with_amplitudes(up)).u
                  - propagate(ISING, sched.with_amplitudes(dn)).u) / (2 * eps)
            fd[4 * m + c] = du
    rel = np.linalg.norm(exact - fd) / np.linalg.norm(fd)
    assert rel < 1e-6


def test_zero_time_schedule_has_zero_gradients():
    sched = PulseSchedule(0.0, np.full((3, 4), 0.1 * ISING.omega_max))
    res = propagate_with_gradient(ISING, sched)
    assert np.allclose(res.u, np.eye(4), atol=1e-14)
    for g in res.grads:
        assert np.max(np.abs(g)) == 0.0


def test_single_segment_weak_drive_gradient():
    # M=1, g -> 0: dU/dOmega1x at small Omega approaches -i T (sx (x) I) U
    spec = DeviceSpec(g=1e-300, r1=1.0, r2=1.0, omega_max=1.0)
    t = 50.0
    omega = 1e-5
    amps = np.zeros((1, 4))
    amps[0, 0] = omega
    res = propagate_with_gradient(spec, PulseSchedule(t, amps))
    expected = -1j * t * kron(SIGMA_X, ID2) @ res.u
    assert np.max(np.abs(res.grads[0] - expected)) < 1e-6


def test_gradient_ordering_segment_major(rng):
    # entry 4(m-1)+c must differentiate segment m, channel c: perturb one
    # segment only and check the matching block responds
    sched = random_schedule(rng, ISING, 3, 60.0)
    res = propagate_with_gradient(ISING, sched)
    eps = 1e-6
    up = np.array(sched.amplitudes)
    up[2, 3] += eps
    dn = np.array(sched.amplitudes)
    dn[2, 3] -= eps
    fd = (propagate(ISING, sched.with_amplitudes(up)).u
          - propagate(ISING, sched.with_amplitudes(dn)).u) / (2 * eps)
    assert np.linalg.norm(res.grads[4 * 2 + 3] - fd) / np.linalg.norm(fd) < 1e-6


def test_dark_evolution_basics():
    assert np.allclose(dark_evolution(ISING, 0.0), np.eye(4), atol=1e-15)
    u = dark_evolution(ISING, np.pi / (4 * G))
    assert phase_aligned_error(u, NATIVE_CZ) < 1e-12


def test_dark_evolution_matches_zero_amplitude_propagation():
    t = 3 * np.pi / (4 * G)
    for m in (1, 7):
        sched = PulseSchedule(t, np.zeros((m, 4)))
        assert np.max(np.abs(dark_evolution(ISING, t)
                             - propagate(ISING, sched).u)) < 1e-12


def test_dark_evolution_consistent_with_expm():
    from gatespeed.model import static_hamiltonian
    t = 55.0
    assert np.allclose(dark_evolution(ISING, t),
                       expm_hermitian(static_hamiltonian(ISING), t), atol=1e-14)
