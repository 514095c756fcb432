import numpy as np
import pytest

from gatespeed.gates import CNOT
from gatespeed.gatefid import (avg_fidelity_from_ptm, chi_of_ptm, ptm_of_kraus,
                               ptm_of_unitary, random_cptp_kraus)
from gatespeed.matcore import ID2, SIGMA_X, kron
from gatespeed.tomo import (CountsTensor, cptp_residuals, estimate_statistical_error,
                            expected_counts, ideal_confusion, load_counts,
                            mle_reconstruct, predict_all_probabilities,
                            predict_probabilities, project_cptp, rotation_sets,
                            save_counts, simulate_qpt, spam_correct,
                            spam_transfer_matrix, symmetric_confusion)

ID4 = np.eye(4, dtype=complex)
R_ID = np.eye(16)

# pre-rotation index of I (x) I: singles list has I at position 4
PRE_II = 4 * 6 + 4
POST_II = 0


def born_probabilities(kraus, k, l, confusion):
    """Independent oracle: explicit density-matrix simulation of one setting."""
    rots = rotation_sets()
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    rho = rots.pre[l] @ rho @ rots.pre[l].conj().T
    rho = sum(kk @ rho @ kk.conj().T for kk in kraus)
    rho = rots.post[k] @ rho @ rots.post[k].conj().T
    return confusion @ np.real(np.diag(rho))


def test_rotation_set_sizes_and_unitarity():
    rots = rotation_sets()
    assert len(rots.pre) == 36 and len(rots.post) == 9
    for u in rots.pre + rots.post:
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-14


def test_confusion_validation():
    with pytest.raises(ValueError):
        symmetric_confusion(0.6)
    conf = symmetric_confusion(0.03)
    assert np.allclose(conf.sum(axis=0), 1.0, atol=1e-14)
    bad = np.eye(4) * 0.9
    with pytest.raises(ValueError):
        predict_probabilities(R_ID, 0, 0, bad)


def test_identity_channel_identity_rotations():
    p = predict_probabilities(R_ID, POST_II, PRE_II, ideal_confusion())
    assert np.allclose(p, [1, 0, 0, 0], atol=1e-12)


def test_bit_flip_channel():
    r = ptm_of_unitary(kron(SIGMA_X, ID2))
    p = predict_probabilities(r, POST_II, PRE_II, ideal_confusion())
    assert np.allclose(p, [0, 0, 1, 0], atol=1e-12)


def test_predict_matches_born_rule_oracle(rng):
    conf = symmetric_confusion(0.03)
    for _ in range(8):
        kraus = random_cptp_kraus(rng, int(rng.integers(2, 5)))
        r = ptm_of_kraus(kraus)
        for k in range(0, 9, 2):
            for l in range(0, 36, 7):
                expected = born_probabilities(kraus, k, l, conf)
                got = predict_probabilities(r, k, l, conf)
                assert np.max(np.abs(got - expected)) < 1e-10


def test_probabilities_normalized(rng):
    kraus = random_cptp_kraus(rng, 3)
    probs = predict_all_probabilities(ptm_of_kraus(kraus), symmetric_confusion(0.05))
    assert np.all(probs > -1e-10)
    assert np.allclose(probs.sum(axis=0), 1.0, atol=1e-10)


def test_simulate_counts_invariants():
    counts = simulate_qpt(ptm_of_unitary(CNOT), ideal_confusion(), shots=500, seed=9)
    assert counts.n.shape == (4, 9, 36)
    assert np.all(counts.n.sum(axis=0) == 500)


def test_simulate_deterministic():
    a = simulate_qpt(R_ID, symmetric_confusion(0.03), shots=200, seed=5)
    b = simulate_qpt(R_ID, symmetric_confusion(0.03), shots=200, seed=5)
    assert np.array_equal(a.n, b.n)


def test_simulate_large_shots_match_probabilities():
    shots = 10 ** 6
    counts = simulate_qpt(R_ID, ideal_confusion(), shots=shots, seed=2)
    probs = predict_all_probabilities(R_ID, ideal_confusion())
    sigma = np.sqrt(np.clip(probs * (1 - probs), 1e-12, None) / shots)
    dev = np.abs(counts.n / shots - probs)
    assert np.all(dev <= 4 * sigma + 1e-9)


def test_counts_validation():
    with pytest.raises(ValueError):
        CountsTensor(shots=10, n=np.zeros((4, 9, 35)))
    with pytest.raises(ValueError):
        CountsTensor(shots=10, n=-np.ones((4, 9, 36)))


def test_counts_file_round_trip(tmp_path):
    counts = simulate_qpt(R_ID, ideal_confusion(), shots=50, seed=1)
    save_counts(counts, tmp_path / "counts.json")
    loaded = load_counts(tmp_path / "counts.json")
    assert loaded.shots == 50
    assert np.array_equal(loaded.n, counts.n)


def test_cptp_projection_restores_constraints(rng):
    noisy = chi_to_choi_like_noise(rng)
    fixed = project_cptp(noisy)
    cp, tp = cptp_residuals(fixed)
    assert cp > -1e-9
    assert tp < 1e-8


def chi_to_choi_like_noise(rng):
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    herm = (a + a.conj().T) / 2
    return np.eye(16) / 4 + 0.3 * herm / np.linalg.norm(herm)


def test_mle_recovers_exact_cnot_counts():
    counts = expected_counts(ptm_of_unitary(CNOT), ideal_confusion(), shots=500)
    res = mle_reconstruct(counts, ideal_confusion())
    assert avg_fidelity_from_ptm(res.ptm, CNOT) > 0.999
    assert res.cp_residual > -1e-9
    assert res.tp_residual < 1e-8


def test_mle_recovers_random_channel(rng):
    kraus = random_cptp_kraus(rng, 3)
    r_true = ptm_of_kraus(kraus)
    counts = expected_counts(r_true, symmetric_confusion(0.03), shots=500)
    res = mle_reconstruct(counts, symmetric_confusion(0.03))
    assert np.linalg.norm(res.ptm - r_true) < 1e-3
    assert res.converged


def test_mle_sampled_cnot():
    counts = simulate_qpt(ptm_of_unitary(CNOT), ideal_confusion(), shots=500, seed=3)
    res = mle_reconstruct(counts, ideal_confusion())
    assert avg_fidelity_from_ptm(res.ptm, CNOT) > 0.99


def test_spam_transfer_matrix_unitarity():
    t = spam_transfer_matrix(CNOT)
    assert np.max(np.abs(t.conj().T @ t - np.eye(16))) < 1e-12


def test_spam_identity_reference_collapses():
    # with an ideal identity reference the correction returns chi_u unchanged
    # (V is exactly the identity under this Pauli convention)
    chi_u = chi_of_ptm(ptm_of_unitary(CNOT))
    chi_i = chi_of_ptm(R_ID)
    out = spam_correct(chi_u, chi_i, CNOT, reproject=False)
    assert np.max(np.abs(out - chi_u)) < 1e-9


def test_spam_zero_error_end_to_end():
    counts = expected_counts(ptm_of_unitary(CNOT), ideal_confusion(), shots=500)
    res_u = mle_reconstruct(counts, ideal_confusion())
    counts_i = expected_counts(R_ID, ideal_confusion(), shots=500)
    res_i = mle_reconstruct(counts_i, ideal_confusion())
    chi_u = chi_of_ptm(res_u.ptm)
    corrected = spam_correct(chi_u, chi_of_ptm(res_i.ptm), CNOT)
    from gatespeed.gatefid import ptm_of_chi
    f_corr = avg_fidelity_from_ptm(ptm_of_chi(corrected), CNOT)
    f_raw = avg_fidelity_from_ptm(res_u.ptm, CNOT)
    assert abs(f_corr - f_raw) < 1e-6


def test_spam_synthetic_recovery(rng):
    # true channel = CNOT sandwiched between weak SPAM channels; the measured
    # identity sees the same SPAM; correction must not hurt
    from gatespeed.gatefid import ptm_of_chi
    spam_kraus = [np.sqrt(0.98) * np.eye(4), np.sqrt(0.02) * np.diag([1, 1, 1, -1.0])]
    r_spam = ptm_of_kraus(spam_kraus)
    r_u_meas = r_spam @ ptm_of_unitary(CNOT) @ r_spam
    r_i_meas = r_spam @ R_ID @ r_spam
    corrected = spam_correct(chi_of_ptm(r_u_meas), chi_of_ptm(r_i_meas), CNOT)
    f_corr = avg_fidelity_from_ptm(ptm_of_chi(corrected), CNOT)
    f_raw = avg_fidelity_from_ptm(r_u_meas, CNOT)
    assert f_corr >= f_raw - 1e-9


def test_statistical_error_zero_noise():
    counts = expected_counts(ptm_of_unitary(CNOT), ideal_confusion(), shots=500)
    std = estimate_statistical_error(counts, CNOT, ideal_confusion(), trials=3,
                                     seed=1, noise_std=0.0, max_iterations=300)
    assert std < 1e-9


def test_statistical_error_scales_with_noise():
    counts = expected_counts(ptm_of_unitary(CNOT), ideal_confusion(), shots=500)
    stds = [estimate_statistical_error(counts, CNOT, ideal_confusion(), trials=6,
                                       seed=7, noise_std=s, max_iterations=600)
            for s in (0.01, 0.02, 0.04)]
    assert stds[0] < stds[1] < stds[2]
    # roughly linear response: doubling the noise should not grow the spread
    # by more than ~4x nor shrink it
    assert 1.0 < stds[1] / stds[0] < 4.0
    assert 1.0 < stds[2] / stds[1] < 4.0
