"""Simulated two-qubit quantum process tomography.

Experiment design: the two qubits start in |00>, receive one of 36 product
pre-rotations, pass through the channel, receive one of 9 product
post-rotations and are measured in the computational basis through a 4x4
readout confusion matrix.  Outcome counts land in a 4 x 9 x 36 tensor.

The outcome probabilities are linear in the channel's PTM R:

    p(j | k, l) = sum_j' P_conf[j, j'] * (1/4) d_j'^T R_k R R_l s,

where d_j' collects the diagonal elements <j'|P_m|j'>, R_k / R_l are the
rotation PTMs and s is the Pauli vector of |00><00|.  As a function of the
channel's Choi matrix C the same probability is Tr[C G_jkl] with

    G_jkl = (1/16) sum_j' P_conf[j, j'] A_kj' (x) B_l^T,
    A_kj' = sum_m (R_k^T d_j')_m P_m,   B_l = sum_n (R_l s)_n P_n,

which is what the maximum-likelihood reconstruction differentiates.

Reconstruction maximizes sum n_jkl log p_jkl over CPTP maps by projected
gradient ascent on the Choi matrix: a backtracking ascent step followed by a
Dykstra projection alternating the PSD eigenvalue clip with the affine
trace-preservation projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import SingularTransferError
from .gatefid import (avg_fidelity_from_ptm, check_chi, chi_of_ptm, choi_of_ptm,
                      ptm_of_chi, ptm_of_choi, ptm_of_unitary)
from .kak import check_unitary
from .matcore import ID2, SIGMA_X, SIGMA_Y, kron, pauli_basis

SHOTS_DEFAULT = 500
_PROB_FLOOR = 1e-12


def _rot(axis: np.ndarray, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * ID2 - 1j * np.sin(angle / 2) * axis


# single-qubit rotation sets; X_theta = exp(-i theta sx / 2)
_PRE_SINGLES = (
    ("Y+90", _rot(SIGMA_Y, np.pi / 2)),
    ("Y-90", _rot(SIGMA_Y, -np.pi / 2)),
    ("X-90", _rot(SIGMA_X, -np.pi / 2)),
    ("X+90", _rot(SIGMA_X, np.pi / 2)),
    ("I", ID2.copy()),
    ("X180", _rot(SIGMA_X, np.pi)),
)
_POST_SINGLES = (
    ("I", ID2.copy()),
    ("X-90", _rot(SIGMA_X, -np.pi / 2)),
    ("Y+90", _rot(SIGMA_Y, np.pi / 2)),
)


@dataclass(frozen=True)
class RotationSets:
    """The 36 pre- and 9 post-rotation unitaries, left factor major."""

    pre: tuple[np.ndarray, ...]
    post: tuple[np.ndarray, ...]
    pre_labels: tuple[str, ...]
    post_labels: tuple[str, ...]


@lru_cache(maxsize=1)
def rotation_sets() -> RotationSets:
    pre, pre_labels = [], []
    for la, ua in _PRE_SINGLES:
        for lb, ub in _PRE_SINGLES:
            pre.append(kron(ua, ub))
            pre_labels.append(f"{la}*{lb}")
    post, post_labels = [], []
    for la, ua in _POST_SINGLES:
        for lb, ub in _POST_SINGLES:
            post.append(kron(ua, ub))
            post_labels.append(f"{la}*{lb}")
    return RotationSets(tuple(pre), tuple(post), tuple(pre_labels), tuple(post_labels))


def ideal_confusion() -> np.ndarray:
    return np.eye(4)


def symmetric_confusion(error: float = 0.03) -> np.ndarray:
    """Column-stochastic readout model: independent symmetric single-qubit flips."""
    if not 0.0 <= error < 0.5:
        raise ValueError("readout error must lie in [0, 0.5)")
    c1 = np.array([[1 - error, error], [error, 1 - error]])
    return np.kron(c1, c1)


def check_confusion(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (4, 4):
        raise ValueError(f"confusion matrix must be 4x4, got {p.shape}")
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise ValueError("confusion entries must lie in [0, 1]")
    if np.max(np.abs(p.sum(axis=0) - 1.0)) > 1e-12:
        raise ValueError("confusion columns must sum to 1")
    return p


@lru_cache(maxsize=1)
def _design() -> dict:
    """Precomputed, channel-independent pieces of the measurement design."""
    rots = rotation_sets()
    paulis = np.stack(pauli_basis(2))
    # Pauli vector of rho0 = |00><00| and diagonals <j'|P_m|j'>
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1.0
    s = np.real(np.einsum("mab,ba->m", paulis, rho0))
    d = np.real(np.stack([np.diagonal(p) for p in paulis], axis=1))  # (4 j', 16 m)
    r_post = np.stack([ptm_of_unitary(u) for u in rots.post])        # (9, 16, 16)
    r_pre = np.stack([ptm_of_unitary(u) for u in rots.pre])          # (36, 16, 16)
    a = np.einsum("kmn,jm->kjn", r_post, d)                          # R_k^T d_j'
    b = np.einsum("lmn,n->lm", r_pre, s)                             # R_l s
    a_ops = np.einsum("kjm,mab->kjab", a, paulis, optimize=True)     # (9, 4, 4, 4)
    b_ops = np.einsum("lm,mab->lab", b, paulis, optimize=True)       # (36, 4, 4)
    return {"a": a, "b": b, "a_ops": a_ops, "b_ops": b_ops, "s": s, "d": d,
            "r_post": r_post, "r_pre": r_pre}


def predict_probabilities(r: np.ndarray, k: int, l: int,
                          confusion: np.ndarray) -> np.ndarray:
    """Outcome distribution for post-rotation k, pre-rotation l, channel PTM r."""
    rots = rotation_sets()
    if not 0 <= k < len(rots.post):
        raise IndexError(f"post-rotation index {k} out of range")
    if not 0 <= l < len(rots.pre):
        raise IndexError(f"pre-rotation index {l} out of range")
    confusion = check_confusion(confusion)
    des = _design()
    q = des["a"][k] @ np.asarray(r, dtype=float) @ des["b"][l] / 4.0
    return confusion @ q


def predict_all_probabilities(r: np.ndarray, confusion: np.ndarray) -> np.ndarray:
    """All outcome distributions at once, shape (4, 9, 36)."""
    confusion = check_confusion(confusion)
    des = _design()
    q = np.einsum("kjm,mn,ln->jkl", des["a"], np.asarray(r, dtype=float), des["b"],
                  optimize=True) / 4.0
    return np.einsum("ij,jkl->ikl", confusion, q)


@dataclass(frozen=True)
class CountsTensor:
    """Outcome counts n[j, k, l] with constant shots per (k, l) setting."""

    shots: int
    n: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if n.shape != (4, 9, 36):
            raise ValueError(f"counts must have shape (4, 9, 36), got {n.shape}")
        if np.any(n < 0):
            raise ValueError("counts must be nonnegative")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)


def simulate_qpt(channel_ptm: np.ndarray, confusion: np.ndarray,
                 shots: int = SHOTS_DEFAULT, seed: int = 0) -> CountsTensor:
    """Multinomial-sample the full 9 x 36 experiment; deterministic per seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = predict_all_probabilities(channel_ptm, confusion)
    probs = np.clip(probs, 0.0, None)
    rng = np.random.default_rng(seed)
    n = np.zeros((4, 9, 36), dtype=float)
    for k in range(9):
        for l in range(36):
            p = probs[:, k, l]
            n[:, k, l] = rng.multinomial(shots, p / p.sum())
    return CountsTensor(shots=shots, n=n)


def expected_counts(channel_ptm: np.ndarray, confusion: np.ndarray,
                    shots: int = SHOTS_DEFAULT) -> CountsTensor:
    """Noise-free expected counts shots * p (not integers in general)."""
    probs = predict_all_probabilities(channel_ptm, confusion)
    return CountsTensor(shots=shots, n=shots * np.clip(probs, 0.0, None))


# ---------------------------------------------------------------------------
# CPTP projection in the Choi representation
# ---------------------------------------------------------------------------

def _project_cp(choi: np.ndarray) -> np.ndarray:
    herm = (choi + choi.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def _project_tp(choi: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the affine subspace Tr_out(C) = I.

    The output space is the left tensor factor; the violation is spread back
    as C - (I_out / 4) (x) (Tr_out(C) - I).
    """
    pt = np.einsum("abad->bd", choi.reshape(4, 4, 4, 4))
    diff = (pt - np.eye(4)) / 4.0
    lifted = np.einsum("ab,cd->acbd", np.eye(4), diff).reshape(16, 16)
    return choi - lifted


def project_cptp(choi: np.ndarray, max_rounds: int = 200,
                 tol: float = 1e-10) -> np.ndarray:
    """Dykstra alternation between the CP cone and the TP affine subspace."""
    x = choi.copy()
    p_corr = np.zeros_like(x)
    q_corr = np.zeros_like(x)
    for _ in range(max_rounds):
        y = _project_cp(x + p_corr)
        p_corr = x + p_corr - y
        x_new = _project_tp(y + q_corr)
        q_corr = y + q_corr - x_new
        if np.linalg.norm(x_new - x) < tol * max(1.0, np.linalg.norm(x)):
            x = x_new
            break
        x = x_new
    return x


def cptp_residuals(choi: np.ndarray) -> tuple[float, float]:
    """(most negative eigenvalue, trace-preservation deviation)."""
    w = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
    pt = np.einsum("abad->bd", choi.reshape(4, 4, 4, 4))
    return float(min(w.min(), 0.0)), float(np.max(np.abs(pt - np.eye(4))))


@dataclass(frozen=True)
class MleResult:
    ptm: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    cp_residual: float
    tp_residual: float


def mle_reconstruct(counts: CountsTensor, confusion: np.ndarray,
                    max_iterations: int = 5000, step_tol: float = 1e-9) -> MleResult:
    """Maximum-likelihood CPTP reconstruction of the channel PTM.

    Projected gradient ascent with backtracking on the Choi matrix; the
    log-likelihood is concave in the Choi matrix, so the CPTP-constrained
    maximum is unique.  On hitting ``max_iterations`` the best iterate is
    returned with ``converged=False``.
    """
    confusion = check_confusion(confusion)
    des = _design()
    n = counts.n

    a_ops = des["a_ops"]
    b_ops = des["b_ops"]

    def probs_of(choi: np.ndarray) -> np.ndarray:
        c4 = choi.reshape(4, 4, 4, 4)
        # Tr[C (A x B^T)] = sum C[a,c,b,d] A[b,a] B[c,d]
        q = np.real(np.einsum("acbd,kjba,lcd->jkl", c4, a_ops, b_ops,
                              optimize=True)) / 16.0
        return np.einsum("ij,jkl->ikl", confusion, q)

    def loglike(choi: np.ndarray) -> float:
        p = np.clip(probs_of(choi), _PROB_FLOOR, None)
        return float(np.sum(n * np.log(p)))

    def gradient(choi: np.ndarray) -> np.ndarray:
        # dL/dC = sum_jkl (n/p) K_jkl with K = (1/16) A (x) B^T, i.e.
        # K[(a,c),(b,d)] = A[a,b] B[d,c]
        p = np.clip(probs_of(choi), _PROB_FLOOR, None)
        w = n / p
        w_back = np.einsum("ij,ikl->jkl", confusion, w)
        g4 = np.einsum("jkl,kjab,ldc->acbd", w_back, a_ops, b_ops,
                       optimize=True) / 16.0
        g = g4.reshape(16, 16)
        return (g + g.conj().T) / 2

    choi = np.eye(16, dtype=complex) / 4.0  # fully depolarizing start
    ll = loglike(choi)
    step = 1.0 / max(float(counts.shots) * 324.0, 1.0)
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        g = gradient(choi)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            converged = True
            break
        accepted = False
        for _ in range(30):
            cand = project_cptp(choi + step * g)
            ll_cand = loglike(cand)
            if ll_cand > ll - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        move = np.linalg.norm(cand - choi)
        gain = ll_cand - ll
        choi, ll = cand, ll_cand
        step *= 1.25
        if move < step_tol * max(1.0, np.linalg.norm(choi)) and gain < 1e-10:
            converged = True
            break

    # tight final projection so the returned map satisfies the CP/TP
    # residual guarantees even at rank-deficient optima
    choi = project_cptp(choi, max_rounds=5000, tol=1e-14)
    cp_res, tp_res = cptp_residuals(choi)
    return MleResult(
        ptm=ptm_of_choi(choi),
        converged=converged,
        iterations=it,
        log_likelihood=loglike(choi),
        cp_residual=cp_res,
        tp_residual=tp_res,
    )


# ---------------------------------------------------------------------------
# SPAM correction
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def _pauli_products() -> np.ndarray:
    p = np.stack(pauli_basis(2))
    return np.einsum("mab,nbc->mnac", p, p)


def spam_transfer_matrix(u_target: np.ndarray) -> np.ndarray:
    """T_mn = Tr(P_m P_n U+) / 4; unitary for unitary targets."""
    u = check_unitary(u_target)
    pp = _pauli_products()
    return np.einsum("mnab,ba->mn", pp, u.conj().T) / 4.0


def spam_correct(chi_u_exp: np.ndarray, chi_i_exp: np.ndarray,
                 u_target: np.ndarray, *, reproject: bool = True) -> np.ndarray:
    """State-preparation/measurement correction of a measured chi matrix.

    Applies
        chi_corr = T^-1 (T chi_U T+ - V chi_I V+ + chi_I) (T+)^-1,
        T_mn = Tr(P_m P_n U+)/4,  V_mn = Tr(P_m P_n)/4.

    Under this Pauli convention V is exactly the identity, so the two middle
    terms cancel for any measured identity process; the correction's reach is
    therefore limited to the T-conjugation.  The result is re-projected to
    the nearest CPTP map before fidelity evaluation unless ``reproject`` is
    disabled.
    """
    chi_u = check_chi(chi_u_exp)
    chi_i = check_chi(chi_i_exp)
    t = spam_transfer_matrix(u_target)
    pp = _pauli_products()
    v = np.einsum("mnaa->mn", pp) / 4.0
    cond = np.linalg.cond(t)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularTransferError(f"transfer matrix condition number {cond:.2e}")
    t_inv = np.linalg.inv(t)
    middle = t @ chi_u @ t.conj().T - v @ chi_i @ v.conj().T + chi_i
    corrected = t_inv @ middle @ t_inv.conj().T
    corrected = (corrected + corrected.conj().T) / 2
    if reproject:
        choi = choi_of_ptm(ptm_of_chi(corrected))
        corrected = chi_of_ptm(ptm_of_choi(project_cptp(choi)))
    return corrected


# ---------------------------------------------------------------------------
# statistical-error bounding
# ---------------------------------------------------------------------------

_POPULATION_TO_EXPECTATION = np.array([
    [1, 1, 1, 1],      # identity component
    [1, 1, -1, -1],    # <Z x I>
    [1, -1, 1, -1],    # <I x Z>
    [1, -1, -1, 1],    # <Z x Z>
], dtype=float)


def estimate_statistical_error(counts: CountsTensor, channel_target: np.ndarray,
                               confusion: np.ndarray, trials: int = 10, seed: int = 0,
                               noise_std: float | None = None,
                               max_iterations: int = 2000) -> float:
    """Std of the reconstructed fidelity under per-setting expectation noise.

    Each measured setting determines three two-qubit Pauli expectation
    values; every trial perturbs each of them with Gaussian noise (default
    standard deviation 1/sqrt(shots), the shot-noise scale; pass
    ``noise_std=1.0`` for unit-variance noise), rebuilds the populations,
    re-runs the reconstruction, and evaluates the fidelity against
    ``channel_target``.  Returns the standard deviation over trials.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    std = (1.0 / np.sqrt(counts.shots)) if noise_std is None else float(noise_std)
    rng = np.random.default_rng(seed)
    probs = counts.n / counts.shots
    expect = np.einsum("ej,jkl->ekl", _POPULATION_TO_EXPECTATION, probs)
    fids = []
    for _ in range(trials):
        noisy = expect.copy()
        noisy[1:] += rng.normal(0.0, std, size=noisy[1:].shape)
        p = np.einsum("je,ekl->jkl", _POPULATION_TO_EXPECTATION.T / 4.0, noisy)
        p = np.clip(p, 0.0, None)
        p /= p.sum(axis=0, keepdims=True)
        trial_counts = CountsTensor(counts.shots, counts.shots * p)
        res = mle_reconstruct(trial_counts, confusion, max_iterations=max_iterations)
        fids.append(avg_fidelity_from_ptm(res.ptm, channel_target))
    return float(np.std(fids))


# ---------------------------------------------------------------------------
# counts file format
# ---------------------------------------------------------------------------

def counts_to_dict(counts: CountsTensor) -> dict:
    rots = rotation_sets()
    return {
        "shots": counts.shots,
        "pre_labels": list(rots.pre_labels),
        "post_labels": list(rots.post_labels),
        "n": counts.n.tolist(),
    }


def counts_from_dict(d: dict) -> CountsTensor:
    return CountsTensor(shots=int(d["shots"]), n=np.asarray(d["n"], dtype=float))


def save_counts(counts: CountsTensor, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(counts_to_dict(counts), f)


def load_counts(path: str | Path) -> CountsTensor:
    with open(path) as f:
        return counts_from_dict(json.load(f))


__all__ = [
    "CountsTensor", "MleResult", "RotationSets", "check_confusion",
    "counts_from_dict", "counts_to_dict", "cptp_residuals",
    "estimate_statistical_error", "expected_counts", "ideal_confusion",
    "load_counts", "mle_reconstruct", "predict_all_probabilities",
    "predict_probabilities", "project_cptp", "rotation_sets", "save_counts",
    "simulate_qpt", "spam_correct", "spam_transfer_matrix",
    "symmetric_confusion",
]
