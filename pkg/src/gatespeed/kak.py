"""Cartan (KAK) decomposition of two-qubit unitaries and analytical speed limits.

Any U in U(4) factors as

    U = e^{i phi} (U1 (x) U2) exp(-i sum_g lam_g sigma^g (x) sigma^g) (V1 (x) V2)

with the interaction coefficients canonicalized to the Weyl chamber
``pi/4 >= lam_x >= lam_y >= |lam_z|`` (lam_x, lam_y >= 0).  The algorithm
works in the magic (Bell) basis, where the inner exponential is diagonal and
local unitaries become real orthogonal matrices:

1. normalize U into SU(4), move to the magic basis: ``mp = M+ U M``;
2. diagonalize the complex symmetric unitary ``m2 = mp^T mp`` with a real
   orthogonal eigenbasis P (joint diagonalization of Re/Im, handling
   degenerate eigenphases);
3. halve the eigenphases to split ``mp = O1 Delta P^T`` with O1 in SO(4);
4. read the interaction coefficients off Delta's phases, convert
   ``M O M+`` factors back to tensor products of single-qubit unitaries;
5. canonicalize the coefficient vector with local flip/swap/shift moves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotUnitaryError, UnsupportedGateForInteraction
from .matcore import ID2, PAULIS_1Q, SIGMA_X, SIGMA_Y, SIGMA_Z, kron
from .model import DeviceSpec

MAGIC = np.array([[1, 0, 0, 1j],
                  [0, 1j, 1, 0],
                  [0, 1j, -1, 0],
                  [1, 0, 0, -1j]], dtype=complex) / np.sqrt(2)
_MAGIC_DAG = MAGIC.conj().T

_XX = kron(SIGMA_X, SIGMA_X)
_YY = kron(SIGMA_Y, SIGMA_Y)
_ZZ = kron(SIGMA_Z, SIGMA_Z)

# magic-basis columns are Bell states; the diagonal phases of
# exp(-i sum lam_g sigma^g sigma^g) on them are -phi with
# phi = (lx-ly+lz, lx+ly-lz, -lx-ly-lz, -lx+ly+lz).
_UNITARITY_ATOL = 1e-10


@dataclass(frozen=True)
class InteractionContent:
    """Canonical Cartan coefficients (lam_x, lam_y, lam_z), radians."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.shape != (3,):
            raise ValueError("lam must have exactly three components")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def weight(self) -> float:
        """Sum of |lam_g|; a local invariant proportional to the Ising T_min."""
        return float(np.sum(np.abs(self.lam)))


@dataclass(frozen=True)
class LocalGates:
    """Single-qubit factors and global phase of a Cartan decomposition.

    The input unitary is recovered as
    ``exp(1j*global_phase) * (u1 (x) u2) @ U_d @ (v1 (x) v2)``.
    """

    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    global_phase: float


def canonical_gate(lam: np.ndarray) -> np.ndarray:
    """exp(-i (lx XX + ly YY + lz ZZ)); closed form, all terms commute."""
    lx, ly, lz = np.asarray(lam, dtype=float)
    h = lx * _XX + ly * _YY + lz * _ZZ
    theta, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * theta)) @ v.conj().T


def check_unitary(u: np.ndarray, atol: float = _UNITARITY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitaryError(f"expected a square matrix, got {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > atol:
        raise NotUnitaryError(f"matrix deviates from unitary by {dev:.3e}")
    return u


def _joint_diagonalize_symmetric(m2: np.ndarray, group_tol: float = 1e-7) -> np.ndarray:
    """Real orthogonal P with P^T m2 P diagonal, for complex symmetric unitary m2.

    Re(m2) and Im(m2) commute; diagonalize the real part, then re-diagonalize
    the imaginary part inside each (near-)degenerate eigenspace.
    """
    w, p = np.linalg.eigh(m2.real)
    b = m2.imag
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] < group_tol:
            stop += 1
        if stop - start > 1:
            block = p[:, start:stop]
            sub = block.T @ b @ block
            _, q = np.linalg.eigh((sub + sub.T) / 2)
            p[:, start:stop] = block @ q
        start = stop
    return p


def _offdiag_norm(p: np.ndarray, m2: np.ndarray) -> float:
    d = p.T @ m2 @ p
    return float(np.max(np.abs(d - np.diag(np.diag(d)))))


def _orthogonal_eigenbasis(m2: np.ndarray) -> np.ndarray:
    """Joint diagonalization with a deterministic randomized fallback."""
    p = _joint_diagonalize_symmetric(m2)
    if _offdiag_norm(p, m2) <= 1e-10:
        return p
    rng = np.random.default_rng(2 ** 31 - 1)
    best, best_err = p, _offdiag_norm(p, m2)
    for _ in range(32):
        c = rng.normal(size=2)
        comb = c[0] * m2.real + c[1] * m2.imag
        _, cand = np.linalg.eigh((comb + comb.T) / 2)
        err = _offdiag_norm(cand, m2)
        if err < best_err:
            best, best_err = cand, err
        if best_err <= 1e-10:
            return best
    if best_err > 1e-8:
        raise NotUnitaryError(f"failed to diagonalize magic-basis square (residual {best_err:.2e})")
    return best


def _kron_factor(mat: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split a 4x4 tensor product into (phase, A, B) with det A = det B = 1."""
    a, b = max(((i, j) for i in range(4) for j in range(4)), key=lambda t: abs(mat[t]))
    f1 = np.zeros((2, 2), dtype=complex)
    f2 = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            f1[(a >> 1) ^ i, (b >> 1) ^ j] = mat[a ^ (i << 1), b ^ (j << 1)]
            f2[(a & 1) ^ i, (b & 1) ^ j] = mat[a ^ i, b ^ j]
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 /= np.sqrt(np.linalg.det(f1)) or 1
        f2 /= np.sqrt(np.linalg.det(f2)) or 1
    g = mat[a, b] / (f1[a >> 1, b >> 1] * f2[a & 1, b & 1])
    if np.real(g) < 0:
        f1 *= -1
        g = -g
    if not np.allclose(mat, g * kron(f1, f2), atol=1e-8):
        raise NotUnitaryError("matrix is not a tensor product of single-qubit unitaries")
    return g, f1, f2


def _canonicalize(lam_raw: np.ndarray, atol: float = 1e-9):
    """Move a coefficient vector into the Weyl chamber.

    Maintains the invariant
        exp(-i sum lam_raw s s)
            = phase * (L1 (x) L2) exp(-i sum lam s s) (R1 (x) R2)
    under three kinds of moves: pi/2 shifts (absorbing i * sigma (x) sigma),
    pairwise sign flips (conjugation by sigma_k (x) I), and pairwise swaps
    (conjugation by a pi/2 rotation about the remaining axis on both qubits).
    """
    lam = [float(x) for x in lam_raw]
    phase = complex(1.0)
    left = [ID2.copy(), ID2.copy()]
    right = [ID2.copy(), ID2.copy()]
    paulis = [p.copy() for p in PAULIS_1Q[1:]]  # X, Y, Z

    def shift(k: int, step: int):
        nonlocal phase
        lam[k] += step * np.pi / 2
        phase *= 1j * step
        left[0] = left[0] @ paulis[k]
        left[1] = left[1] @ paulis[k]

    def negate(k1: int, k2: int):
        k3 = 3 - k1 - k2
        lam[k1] *= -1
        lam[k2] *= -1
        left[0] = left[0] @ paulis[k3]
        right[0] = paulis[k3] @ right[0]

    def swap(k1: int, k2: int):
        k3 = 3 - k1 - k2
        q = np.cos(np.pi / 4) * ID2 - 1j * np.sin(np.pi / 4) * paulis[k3]
        qd = q.conj().T
        lam[k1], lam[k2] = lam[k2], lam[k1]
        left[0] = left[0] @ qd
        left[1] = left[1] @ qd
        right[0] = q @ right[0]
        right[1] = q @ right[1]

    def canonical_shift(k: int):
        while lam[k] <= -np.pi / 4:
            shift(k, +1)
        while lam[k] > np.pi / 4:
            shift(k, -1)

    for k in range(3):
        canonical_shift(k)
    if abs(lam[0]) < abs(lam[1]):
        swap(0, 1)
    if abs(lam[1]) < abs(lam[2]):
        swap(1, 2)
    if abs(lam[0]) < abs(lam[1]):
        swap(0, 1)
    if lam[0] < 0:
        negate(0, 2)
    if lam[1] < 0:
        negate(1, 2)
    canonical_shift(2)
    if lam[0] > np.pi / 4 - atol and lam[2] < 0:
        shift(0, -1)
        negate(0, 2)
    return np.array(lam), phase, left, right


def kak_decompose(u: np.ndarray) -> tuple[InteractionContent, LocalGates]:
    """Cartan-decompose a 4x4 unitary into canonical coefficients and locals."""
    u = check_unitary(u)
    if u.shape != (4, 4):
        raise NotUnitaryError(f"expected a 4x4 matrix, got {u.shape}")

    phase0 = np.angle(np.linalg.det(u)) / 4
    u_su = u * np.exp(-1j * phase0)
    mp = _MAGIC_DAG @ u_su @ MAGIC
    m2 = mp.T @ mp

    p = _orthogonal_eigenbasis(m2)
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    d = np.diag(p.T @ m2 @ p)
    delta = np.angle(d) / 2
    # det(mp) = 1, so sum(delta) is 0 mod pi; force det(Delta) = +1 so the
    # left factor lands in SO(4)
    if np.cos(np.sum(delta)) < 0:
        delta[0] += np.pi

    o1 = mp @ p @ np.diag(np.exp(-1j * delta))
    imag_dev = np.max(np.abs(o1.imag))
    if imag_dev > 1e-7:
        raise NotUnitaryError(f"magic-basis left factor not real (dev {imag_dev:.2e})")
    o1 = o1.real

    k1 = MAGIC @ o1 @ _MAGIC_DAG
    k2 = MAGIC @ p.T @ _MAGIC_DAG
    phi = -delta
    lam_raw = np.array([
        (phi[0] + phi[1]) / 2,
        (phi[1] + phi[3]) / 2,
        (phi[0] + phi[3]) / 2,
    ])

    g1, a1, a2 = _kron_factor(k1)
    g2, b1, b2 = _kron_factor(k2)
    lam, pc, lefts, rights = _canonicalize(lam_raw)

    content = InteractionContent(lam)
    total = np.exp(1j * phase0) * g1 * g2 * pc
    locals_ = LocalGates(
        u1=a1 @ lefts[0], u2=a2 @ lefts[1],
        v1=rights[0] @ b1, v2=rights[1] @ b2,
        global_phase=float(np.angle(total)),
    )
    return content, locals_


def reconstruct(content: InteractionContent, locals_: LocalGates) -> np.ndarray:
    """(U1 (x) U2) U_d (V1 (x) V2); the input unitary up to global phase."""
    return (kron(locals_.u1, locals_.u2)
            @ canonical_gate(content.lam)
            @ kron(locals_.v1, locals_.v2))


# ---------------------------------------------------------------------------
# analytical speed limits
# ---------------------------------------------------------------------------

# gates with tabulated limits for the xy / xxz interactions; the xxz SWAP
# constant holds for eta = 1/2 only
_XY_TMIN = {"CNOT": np.pi / 4, "CZ": np.pi / 4, "SWAP": 3 * np.pi / 8}
_XXZ_TMIN = {"CNOT": np.pi / 4, "CZ": np.pi / 4, "SWAP": 3 * np.pi / 10}


def t_min(content: InteractionContent, spec: DeviceSpec,
          gate_tag: str | None = None) -> float:
    """Analytical minimum gate time in ns.

    Ising interaction: (|lx| + |ly| + |lz|) / g for any target.  For xy/xxz
    only the tabulated named gates are supported; the general minimization is
    deliberately not implemented.
    """
    if spec.interaction == "ising":
        return content.weight / spec.g
    tag = (gate_tag or "").strip().upper().replace("-", "_")
    if spec.interaction == "xy":
        table = _XY_TMIN
    else:
        table = dict(_XXZ_TMIN)
        if abs(spec.eta - 0.5) > 1e-12:
            # the SWAP constant is specific to eta = 1/2
            table.pop("SWAP")
    if tag not in table:
        raise UnsupportedGateForInteraction(
            f"no tabulated speed limit for gate {gate_tag!r} with "
            f"{spec.interaction} interaction (eta={spec.eta})")
    return table[tag] / spec.g


__all__ = [
    "InteractionContent", "LocalGates", "MAGIC", "canonical_gate",
    "check_unitary", "kak_decompose", "reconstruct", "t_min",
]
