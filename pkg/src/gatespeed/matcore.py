"""Dense complex linear algebra for small matrices.

Everything downstream works with matrices of dimension 2, 3, 4, 9 or 16, so
the routines here stay deliberately simple: spectral decompositions via
``numpy.linalg.eigh`` and explicit formulas.  Conventions pinned here and used
package-wide:

* ``sigma_z = diag(+1, -1)``, basis order ``|0>, |1>``;
* two-qubit basis order ``|00>, |01>, |10>, |11>`` with qubit 1 as the left
  Kronecker factor;
* the two-qubit Pauli basis is ordered left-factor-major:
  ``P[4*a + b] = single[a] (x) single[b]`` with singles ``(I, X, Y, Z)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NonHermitianError

HERMITICITY_ATOL = 1e-12
# Eigenvalue-gap threshold (rad/ns units) below which the divided-difference
# formula switches to its degenerate limit.  Well above float64 eigensolver
# noise, well below physical gaps.
DEGENERACY_ATOL = 1e-9

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS_1Q = (ID2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor's indices major."""
    return np.kron(np.asarray(a), np.asarray(b))


def check_hermitian(h: np.ndarray, atol: float = HERMITICITY_ATOL) -> np.ndarray:
    """Return ``h`` as a complex array, raising if it is not Hermitian."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitianError(f"expected a square matrix, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T))
    if dev > atol:
        raise NonHermitianError(f"matrix deviates from Hermitian by {dev:.3e} (atol {atol:.1e})")
    return h


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via spectral decomposition.

    The result is unitary to machine precision since the eigenbasis returned
    by ``eigh`` is orthonormal.
    """
    h = check_hermitian(h)
    theta, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * theta * t)) @ v.conj().T


def dexpm_hermitian(h: np.ndarray, dh: np.ndarray, t: float) -> np.ndarray:
    """Exact directional derivative of exp(-i h t) along a Hermitian ``dh``.

    Uses the spectral divided-difference (Daleckii-Krein) formula: with
    ``h = V diag(theta) V+`` the derivative in the eigenbasis is

        (V+ dU V)_ab = (V+ dh V)_ab * phi_ab,
        phi_ab = (e^{-i theta_a t} - e^{-i theta_b t}) / (theta_a - theta_b),

    with the limit ``phi = -i t e^{-i theta t}`` on (near-)degenerate pairs.
    """
    h = check_hermitian(h)
    dh = check_hermitian(dh)
    theta, v = np.linalg.eigh(h)
    phi = _phase_divided_difference(theta, t)
    inner = v.conj().T @ dh @ v
    return v @ (phi * inner) @ v.conj().T


def _phase_divided_difference(theta: np.ndarray, t: float) -> np.ndarray:
    """Divided differences of e^{-i theta t} over all eigenvalue pairs.

    ``theta`` may carry leading batch dimensions; the last axis indexes
    eigenvalues.  Near-degenerate pairs (gap < DEGENERACY_ATOL) use the limit
    formula evaluated at the midpoint eigenvalue.
    """
    th_a = theta[..., :, None]
    th_b = theta[..., None, :]
    gap = th_a - th_b
    ph_a = np.exp(-1j * th_a * t)
    ph_b = np.exp(-1j * th_b * t)
    degenerate = np.abs(gap) < DEGENERACY_ATOL
    safe_gap = np.where(degenerate, 1.0, gap)
    phi = (ph_a - ph_b) / safe_gap
    limit = -1j * t * np.exp(-1j * (th_a + th_b) / 2 * t)
    return np.where(degenerate, limit, phi)


def pauli_basis(n_qubits: int, normalized: bool = False) -> list[np.ndarray]:
    """Ordered Pauli basis for 1 or 2 qubits.

    Two-qubit ordering is left-factor-major: ``P0 = I(x)I, P1 = I(x)X, ...,
    P15 = Z(x)Z``.  With ``normalized`` each element is divided by sqrt(d) so
    its Frobenius norm is 1.
    """
    if n_qubits == 1:
        basis = [p.copy() for p in PAULIS_1Q]
    elif n_qubits == 2:
        basis = [kron(a, b) for a in PAULIS_1Q for b in PAULIS_1Q]
    else:
        raise ValueError(f"pauli_basis supports 1 or 2 qubits, got {n_qubits}")
    if normalized:
        dim = 2 ** n_qubits
        basis = [p / np.sqrt(dim) for p in basis]
    return basis


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
