"""Named two-qubit gate constants (qubit 1 = left tensor factor, control)."""

from __future__ import annotations

import numpy as np

CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)

CZ = np.diag([1, 1, 1, -1]).astype(complex)

SWAP = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)

SQRT_SWAP = np.array([[1, 0, 0, 0],
                      [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
                      [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
                      [0, 0, 0, 1]], dtype=complex)

ISWAP = np.array([[1, 0, 0, 0],
                  [0, 0, 1j, 0],
                  [0, 1j, 0, 0],
                  [0, 0, 0, 1]], dtype=complex)

NAMED_GATES: dict[str, np.ndarray] = {
    "CNOT": CNOT,
    "CZ": CZ,
    "SWAP": SWAP,
    "SQRT_SWAP": SQRT_SWAP,
    "ISWAP": ISWAP,
}


def named_gate(name: str) -> np.ndarray:
    key = name.strip().upper().replace("-", "_")
    if key in ("SQRTSWAP", "SQRT-SWAP"):
        key = "SQRT_SWAP"
    if key not in NAMED_GATES:
        raise KeyError(f"unknown gate {name!r}; known: {', '.join(sorted(NAMED_GATES))}")
    return NAMED_GATES[key].copy()
