"""Speed-limited two-qubit gate synthesis and verification.

Computes analytical two-qubit gate speed limits from the Cartan decomposition,
synthesizes speed-optimal piecewise-constant drive pulses under bounded
amplitudes, and verifies the results with simulated process tomography,
transmon leakage modeling, and pulse-noise robustness studies.
"""

from .model import (DeviceSpec, PulseSchedule, QutritParams, default_device,
                    load_device, load_schedule, save_device, save_schedule)
from .kak import InteractionContent, LocalGates, kak_decompose, reconstruct, t_min
from .evolve import dark_evolution, propagate, propagate_with_gradient
from .gatefid import avg_fidelity_from_ptm, avg_gate_fidelity, ptm_of_unitary
from .optctrl import (OptimizerConfig, OptimResult, find_speed_limit, optimize_pulse,
                      robustness_study, sweep_fidelity_vs_time)
from .tomo import mle_reconstruct, simulate_qpt, spam_correct
from .leakage3 import build_device, integrate_qutrit, leakage_fidelity
from .gates import CNOT, CZ, ISWAP, SQRT_SWAP, SWAP, named_gate

__version__ = "0.1.0"

__all__ = [
    "CNOT", "CZ", "DeviceSpec", "ISWAP", "InteractionContent", "LocalGates",
    "OptimResult", "OptimizerConfig", "PulseSchedule", "QutritParams",
    "SQRT_SWAP", "SWAP", "avg_fidelity_from_ptm", "avg_gate_fidelity",
    "build_device", "dark_evolution", "default_device", "find_speed_limit",
    "integrate_qutrit", "kak_decompose", "leakage_fidelity", "load_device",
    "load_schedule", "mle_reconstruct", "named_gate", "optimize_pulse",
    "propagate", "propagate_with_gradient", "ptm_of_unitary", "reconstruct",
    "robustness_study", "save_device", "save_schedule", "simulate_qpt",
    "spam_correct", "sweep_fidelity_vs_time", "t_min",
]
