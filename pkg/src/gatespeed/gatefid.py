"""Average gate fidelity and channel-representation conversions.

Conventions (applied package-wide, no per-module overrides):

* Pauli transfer matrix (PTM): ``R_ij = Tr[P_i E(P_j)] / 4`` with the
  unnormalized two-qubit Paulis, so the identity channel maps to the identity
  matrix ("quarter-trace" normalization).
* chi matrix: ``E(rho) = sum_mn chi_mn P_m rho P_n`` with unnormalized Paulis.
* Choi matrix: ``C = sum_ij E(E_ij) (x) E_ij`` (output factor left).  With
  the PTM convention above the pair of linear maps

      R_ij = Tr[C (P_i (x) P_j^T)] / 4,   C = (1/4) sum_ij R_ij P_i (x) P_j^T

  are mutual inverses; complete positivity is C >= 0 and trace preservation
  is Tr_out(C) = I.

The average gate fidelity against a unitary target is evaluated with
Frobenius-normalized Pauli basis elements U_j,

    F = 1/5 + (1/20) sum_j Tr(U U_j U+ E(U_j)),

which for unitary channels equals the closed form (|Tr(U+ V)|^2 + 4)/20.
The closed form serves as an independent oracle in the tests; the
normalization is the unique reading under which F(U, U) = 1.
"""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NonHermitianChiError, NotTracePreservingError
from .kak import check_unitary
from .matcore import pauli_basis

_TP_ATOL = 1e-6


@lru_cache(maxsize=1)
def _paulis() -> np.ndarray:
    return np.stack(pauli_basis(2))


@lru_cache(maxsize=1)
def _chi_to_ptm_tensor() -> np.ndarray:
    """A[(i,j),(m,n)] = Tr(P_i P_m P_j P_n)/4 flattened to 256 x 256."""
    p = _paulis()
    pp = np.einsum("iab,mbc->imac", p, p)
    a = np.einsum("imab,jnba->ijmn", pp, pp, optimize=True) / 4.0
    return a.reshape(256, 256)


@lru_cache(maxsize=1)
def _ptm_to_chi_tensor() -> np.ndarray:
    return np.linalg.inv(_chi_to_ptm_tensor())


def avg_gate_fidelity(u_target: np.ndarray, u_actual: np.ndarray) -> float:
    """Average gate fidelity between two two-qubit unitaries.

    Evaluated as the Pauli-twirl sum over the Frobenius-normalized basis; the
    result is phase invariant and equals (|Tr(U+ V)|^2 + 4)/20.
    """
    u = check_unitary(u_target)
    v = check_unitary(u_actual)
    basis = _paulis() / 2.0  # Frobenius-normalized
    uj_rot = np.einsum("ab,jbc,dc->jad", u, basis, u.conj())
    ej = np.einsum("ab,jbc,dc->jad", v, basis, v.conj())
    total = np.einsum("jab,jba->", uj_rot, ej)
    return float(np.real(1.0 / 5.0 + total / 20.0))


def ptm_of_unitary(u: np.ndarray) -> np.ndarray:
    """PTM of a unitary channel; real orthogonal with first row (1, 0, ..., 0)."""
    u = check_unitary(u)
    p = _paulis()
    rotated = np.einsum("ab,jbc,dc->jad", u, p, u.conj())
    return np.real(np.einsum("iab,jba->ij", p, rotated)) / 4.0


def ptm_of_kraus(kraus: list[np.ndarray]) -> np.ndarray:
    """PTM of a channel given by Kraus operators."""
    p = _paulis()
    out = np.zeros((16, 16))
    for k in kraus:
        rotated = np.einsum("ab,jbc,dc->jad", k, p, np.conj(k))
        out += np.real(np.einsum("iab,jba->ij", p, rotated)) / 4.0
    return out


def check_chi(chi: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (16, 16):
        raise NonHermitianChiError(f"chi must be 16x16, got {chi.shape}")
    dev = np.max(np.abs(chi - chi.conj().T))
    if dev > atol:
        raise NonHermitianChiError(f"chi deviates from Hermitian by {dev:.3e}")
    return chi


def ptm_of_chi(chi: np.ndarray) -> np.ndarray:
    """R_ij = sum_mn chi_mn Tr(P_i P_m P_j P_n) / 4."""
    chi = check_chi(chi)
    r = (_chi_to_ptm_tensor() @ chi.reshape(256)).reshape(16, 16)
    return np.real(r)


def chi_of_ptm(ptm: np.ndarray) -> np.ndarray:
    """Exact linear inverse of ``ptm_of_chi``."""
    ptm = np.asarray(ptm, dtype=float)
    chi = (_ptm_to_chi_tensor() @ ptm.reshape(256).astype(complex)).reshape(16, 16)
    return (chi + chi.conj().T) / 2.0


def ptm_of_choi(choi: np.ndarray) -> np.ndarray:
    """R_ij = Tr[C (P_i (x) P_j^T)] / 4."""
    p = _paulis()
    c4 = np.asarray(choi, dtype=complex).reshape(4, 4, 4, 4)
    # Tr[C (P_i x P_j^T)] = sum C[a,c,b,d] P_i[b,a] P_j[c,d]
    r = np.einsum("acbd,iba,jcd->ij", c4, p, p, optimize=True) / 4.0
    return np.real(r)


def choi_of_ptm(ptm: np.ndarray) -> np.ndarray:
    """C = (1/4) sum_ij R_ij P_i (x) P_j^T."""
    p = _paulis()
    ptm = np.asarray(ptm, dtype=float)
    # C[(a,c),(b,d)] = (1/4) sum_ij R_ij P_i[a,b] P_j[d,c]
    c = np.einsum("ij,iab,jdc->acbd", ptm, p, p, optimize=True) / 4.0
    return c.reshape(16, 16)


def is_trace_preserving(ptm: np.ndarray, atol: float = _TP_ATOL) -> bool:
    first = np.zeros(16)
    first[0] = 1.0
    return bool(np.max(np.abs(np.asarray(ptm)[0] - first)) <= atol)


def avg_fidelity_from_ptm(r_actual: np.ndarray, u_target: np.ndarray) -> float:
    """Average gate fidelity of a measured channel against a unitary target.

    F = (Tr(R_target^T R_actual)/4 + 1) / 5 under the quarter-trace PTM
    normalization; for unitary channels this equals ``avg_gate_fidelity``.
    """
    r_actual = np.asarray(r_actual, dtype=float)
    if r_actual.shape != (16, 16):
        raise ValueError(f"PTM must be 16x16, got {r_actual.shape}")
    if not is_trace_preserving(r_actual):
        raise NotTracePreservingError(
            f"first PTM row deviates from (1, 0, ..., 0) by more than {_TP_ATOL:g}")
    r_target = ptm_of_unitary(u_target)
    return float((np.trace(r_target.T @ r_actual) / 4.0 + 1.0) / 5.0)


def random_cptp_kraus(rng: np.random.Generator, n_kraus: int = 3) -> list[np.ndarray]:
    """Random CPTP channel by Stinespring dilation of a Haar isometry.

    A 4k x 4 isometry (orthonormal columns of a complex Ginibre matrix)
    sliced into k stacked 4x4 blocks gives Kraus operators with
    sum K+ K = I exactly.
    """
    z = (rng.normal(size=(4 * n_kraus, 4)) + 1j * rng.normal(size=(4 * n_kraus, 4)))
    q, _ = np.linalg.qr(z)
    return [q[4 * i:4 * (i + 1), :].copy() for i in range(n_kraus)]


# ---------------------------------------------------------------------------
# serialization (PTM real 16x16; chi as [re, im] pairs)
# ---------------------------------------------------------------------------

_NORMALIZATION = "quarter-trace"


def save_ptm(ptm: np.ndarray, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump({"normalization": _NORMALIZATION,
                   "ptm": np.asarray(ptm, dtype=float).tolist()}, f)


def load_ptm(path: str | Path) -> np.ndarray:
    with open(path) as f:
        d = json.load(f)
    if d.get("normalization") != _NORMALIZATION:
        raise ValueError(f"unsupported PTM normalization {d.get('normalization')!r}")
    return np.asarray(d["ptm"], dtype=float)


def save_chi(chi: np.ndarray, path: str | Path) -> None:
    chi = np.asarray(chi, dtype=complex)
    pairs = np.stack([chi.real, chi.imag], axis=-1).tolist()
    with open(path, "w") as f:
        json.dump({"normalization": _NORMALIZATION, "chi": pairs}, f)


def load_chi(path: str | Path) -> np.ndarray:
    with open(path) as f:
        d = json.load(f)
    if d.get("normalization") != _NORMALIZATION:
        raise ValueError(f"unsupported chi normalization {d.get('normalization')!r}")
    arr = np.asarray(d["chi"], dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


__all__ = [
    "avg_fidelity_from_ptm", "avg_gate_fidelity", "check_chi", "chi_of_ptm",
    "choi_of_ptm", "is_trace_preserving", "load_chi", "load_ptm",
    "ptm_of_chi", "ptm_of_choi", "ptm_of_kraus", "ptm_of_unitary",
    "random_cptp_kraus", "save_chi", "save_ptm",
]
