"""Device and pulse data model.

Internal unit system: angular frequency in rad/ns, time in ns.  File-facing
values are linear MHz (value = omega / 2pi), matching how drive amplitudes
and couplings are usually quoted.  A coupling of 2pi x 1.75 MHz is therefore
``g = 2*pi*1.75e-3`` rad/ns and ``pi/(4g) = 71.43`` ns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ScheduleViolationError
from .matcore import ID2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron

TWO_PI = 2.0 * np.pi

INTERACTION_KINDS = ("ising", "xy", "xxz")

# channel order for all 4-channel amplitude arrays
CHANNELS = ("omega1x", "omega1y", "omega2x", "omega2y")


def mhz_to_rad_ns(f_mhz: float) -> float:
    """Linear MHz -> angular rad/ns."""
    return TWO_PI * f_mhz * 1e-3


def rad_ns_to_mhz(w: float) -> float:
    """Angular rad/ns -> linear MHz."""
    return w * 1e3 / TWO_PI


def ghz_to_rad_ns(f_ghz: float) -> float:
    """Linear GHz -> angular rad/ns."""
    return TWO_PI * f_ghz


@dataclass(frozen=True)
class QutritParams:
    """Lab-frame transmon parameters for the two-qutrit leakage model.

    Frequencies/anharmonicities are file-facing linear units; ``edge_ns`` is
    the linear ramp duration between pulse segments and ``dt_ps`` the
    integrator step.
    """

    f1_ghz: float = 5.10
    f2_ghz: float = 5.26
    alpha1_mhz: float = -270.0
    alpha2_mhz: float = -320.0
    edge_ns: float = 1.0
    dt_ps: float = 2.0

    def __post_init__(self):
        if self.f1_ghz <= 0 or self.f2_ghz <= 0:
            raise ValueError("transmon frequencies must be positive")
        if self.alpha1_mhz >= 0 or self.alpha2_mhz >= 0:
            raise ValueError("anharmonicities must be negative")
        if self.edge_ns < 0 or self.dt_ps <= 0:
            raise ValueError("edge_ns must be >= 0 and dt_ps > 0")
        # the step must resolve the fastest carrier
        fmax_ghz = max(self.f1_ghz, self.f2_ghz)
        if self.dt_ps * 1e-3 > 1.0 / (40.0 * fmax_ghz):
            raise ValueError(
                f"dt_ps={self.dt_ps} does not resolve the {fmax_ghz} GHz carrier "
                f"(need <= {1e3 / (40 * fmax_ghz):.2f} ps)")

    @property
    def omega1(self) -> float:
        return ghz_to_rad_ns(self.f1_ghz)

    @property
    def omega2(self) -> float:
        return ghz_to_rad_ns(self.f2_ghz)

    @property
    def alpha1(self) -> float:
        return mhz_to_rad_ns(self.alpha1_mhz)

    @property
    def alpha2(self) -> float:
        return mhz_to_rad_ns(self.alpha2_mhz)

    @property
    def dt_ns(self) -> float:
        return self.dt_ps * 1e-3


@dataclass(frozen=True)
class DeviceSpec:
    """Physical parameters of the coupled two-qubit device.

    ``g`` and ``omega_max`` are angular (rad/ns).  ``r1``/``r2`` are the
    dimensionless drive distortions: the drive on qubit 1 is scaled by ``r2``
    when qubit 2 is excited, and vice versa.
    """

    interaction: str = "ising"
    g: float = mhz_to_rad_ns(1.75)
    r1: float = 1.0
    r2: float = 1.0
    omega_max: float = mhz_to_rad_ns(6.0)
    eta: float | None = None
    qutrit: QutritParams | None = None

    def __post_init__(self):
        if self.interaction not in INTERACTION_KINDS:
            raise ValueError(f"unknown interaction {self.interaction!r}")
        if not (self.g > 0):
            raise ValueError("g must be positive")
        if self.omega_max < 0:
            raise ValueError("omega_max must be nonnegative")
        if not (self.r1 > 0 and self.r2 > 0):
            raise ValueError("r1 and r2 must be positive")
        if self.interaction == "xxz":
            if self.eta is None or not np.isfinite(self.eta):
                raise ValueError("xxz interaction requires finite eta")

    @property
    def g_mhz(self) -> float:
        return rad_ns_to_mhz(self.g)

    @property
    def omega_max_mhz(self) -> float:
        return rad_ns_to_mhz(self.omega_max)

    def with_omega_max_mhz(self, omega_max_mhz: float) -> "DeviceSpec":
        return replace(self, omega_max=mhz_to_rad_ns(omega_max_mhz))


def default_device() -> DeviceSpec:
    """The chip this package models by default: Ising coupling at
    2pi x 1.75 MHz with drive distortions r1=1.1, r2=0.7 and a 6 MHz
    amplitude budget."""
    return DeviceSpec(
        interaction="ising",
        g=mhz_to_rad_ns(1.75),
        r1=1.1,
        r2=0.7,
        omega_max=mhz_to_rad_ns(6.0),
        qutrit=QutritParams(),
    )


@dataclass(frozen=True)
class PulseSchedule:
    """An M-segment, 4-channel piecewise-constant waveform over [0, T].

    ``amplitudes`` has shape (M, 4) in rad/ns, channel order
    (Omega1x, Omega1y, Omega2x, Omega2y).  Segment m (1-based) spans
    [(m-1)/M * T, m/M * T].  T = 0 is permitted (degenerate zero-time
    schedule); validation flags negative T only.
    """

    t_ns: float
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim != 2 or amps.shape[1] != 4 or amps.shape[0] < 1:
            raise ValueError(f"amplitudes must have shape (M>=1, 4), got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def segments(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def dt(self) -> float:
        return self.t_ns / self.segments

    def with_amplitudes(self, amplitudes: np.ndarray) -> "PulseSchedule":
        return PulseSchedule(self.t_ns, amplitudes)


@dataclass(frozen=True)
class ScheduleViolation:
    segment: int          # 1-based; 0 marks a structural violation
    channel: int          # index into CHANNELS; -1 for structural
    excess: float         # rad/ns beyond the bound
    message: str


def static_hamiltonian(spec: DeviceSpec) -> np.ndarray:
    """Rotating-frame static Hamiltonian for the device's interaction kind."""
    zz = kron(SIGMA_Z, SIGMA_Z)
    if spec.interaction == "ising":
        h = spec.g * (kron(SIGMA_Z, ID2) + kron(ID2, SIGMA_Z) + zz)
    elif spec.interaction == "xy":
        h = spec.g * (kron(SIGMA_X, SIGMA_X) + kron(SIGMA_Y, SIGMA_Y))
    else:  # xxz
        h = spec.g * (kron(SIGMA_X, SIGMA_X) + kron(SIGMA_Y, SIGMA_Y) + spec.eta * zz)
    return h


def drive_operators(spec: DeviceSpec) -> np.ndarray:
    """The four distorted drive operators, stacked (4, 4, 4) in channel order.

    sigma~_1^g = sigma^g (x) (|0><0| + r2 |1><1|) and
    sigma~_2^g = (|0><0| + r1 |1><1|) (x) sigma^g.
    """
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    w1 = p0 + spec.r2 * p1
    w2 = p0 + spec.r1 * p1
    return np.stack([
        kron(SIGMA_X, w1),
        kron(SIGMA_Y, w1),
        kron(w2, SIGMA_X),
        kron(w2, SIGMA_Y),
    ])


def segment_hamiltonian(spec: DeviceSpec, schedule: PulseSchedule, m: int) -> np.ndarray:
    """Hamiltonian on segment m (1-based): H0 + sum of amplitude * operator."""
    if not 1 <= m <= schedule.segments:
        raise IndexError(f"segment {m} out of range 1..{schedule.segments}")
    h = static_hamiltonian(spec).astype(complex)
    ops = drive_operators(spec)
    amps = schedule.amplitudes[m - 1]
    return h + np.einsum("c,cab->ab", amps, ops)


def validate_schedule(spec: DeviceSpec, schedule: PulseSchedule) -> list[ScheduleViolation]:
    """Check a schedule against its device; empty list means OK.

    The amplitude bound is inclusive: |amplitude| <= omega_max passes.
    Reports every offending (segment, channel) with its excess.
    """
    violations: list[ScheduleViolation] = []
    if schedule.t_ns < 0:
        violations.append(ScheduleViolation(0, -1, 0.0, f"negative total time {schedule.t_ns}"))
    bound = spec.omega_max
    over = np.abs(schedule.amplitudes) > bound
    for m, c in zip(*np.nonzero(over)):
        excess = abs(schedule.amplitudes[m, c]) - bound
        violations.append(ScheduleViolation(
            int(m) + 1, int(c), float(excess),
            f"segment {m + 1} channel {CHANNELS[c]} exceeds omega_max by "
            f"{rad_ns_to_mhz(excess):.4g} MHz"))
    return violations


def require_valid_schedule(spec: DeviceSpec, schedule: PulseSchedule) -> None:
    violations = validate_schedule(spec, schedule)
    if violations:
        raise ScheduleViolationError("; ".join(v.message for v in violations))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def device_to_dict(spec: DeviceSpec) -> dict:
    d = {
        "interaction": spec.interaction,
        "g_mhz": spec.g_mhz,
        "r1": spec.r1,
        "r2": spec.r2,
        "omega_max_mhz": spec.omega_max_mhz,
    }
    if spec.eta is not None:
        d["eta"] = spec.eta
    if spec.qutrit is not None:
        q = spec.qutrit
        d["qutrit"] = {
            "f1_ghz": q.f1_ghz, "f2_ghz": q.f2_ghz,
            "alpha1_mhz": q.alpha1_mhz, "alpha2_mhz": q.alpha2_mhz,
            "edge_ns": q.edge_ns, "dt_ps": q.dt_ps,
        }
    return d


def device_from_dict(d: dict) -> DeviceSpec:
    """Build a DeviceSpec from the JSON schema.

    ``r1``/``r2`` default to 1.0 when omitted (relevant for the xy/xxz
    studies, where no distortion measurement exists).
    """
    qutrit = None
    if "qutrit" in d and d["qutrit"] is not None:
        qutrit = QutritParams(**d["qutrit"])
    return DeviceSpec(
        interaction=d.get("interaction", "ising"),
        g=mhz_to_rad_ns(float(d["g_mhz"])),
        r1=float(d.get("r1", 1.0)),
        r2=float(d.get("r2", 1.0)),
        omega_max=mhz_to_rad_ns(float(d.get("omega_max_mhz", 6.0))),
        eta=d.get("eta"),
        qutrit=qutrit,
    )


def load_device(path: str | Path) -> DeviceSpec:
    with open(path) as f:
        return device_from_dict(json.load(f))


def save_device(spec: DeviceSpec, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(device_to_dict(spec), f, indent=2)


def schedule_to_dict(schedule: PulseSchedule) -> dict:
    """Pulse file schema: channels are stored channel-major in linear MHz."""
    channels_mhz = (schedule.amplitudes.T * 1e3 / TWO_PI).tolist()
    return {
        "t_ns": schedule.t_ns,
        "segments": schedule.segments,
        "channels": channels_mhz,
    }


def schedule_from_dict(d: dict) -> PulseSchedule:
    channels = np.asarray(d["channels"], dtype=float)
    if channels.shape[0] != 4:
        raise ValueError(f"pulse file must have 4 channels, got {channels.shape[0]}")
    if "segments" in d and channels.shape[1] != int(d["segments"]):
        raise ValueError("channel length disagrees with declared segment count")
    amplitudes = channels.T * TWO_PI * 1e-3
    return PulseSchedule(float(d["t_ns"]), amplitudes)


def load_schedule(path: str | Path) -> PulseSchedule:
    with open(path) as f:
        return schedule_from_dict(json.load(f))


def save_schedule(schedule: PulseSchedule, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(schedule_to_dict(schedule), f, indent=2)


__all__ = [
    "CHANNELS", "DeviceSpec", "PulseSchedule", "QutritParams", "ScheduleViolation",
    "default_device", "device_from_dict", "device_to_dict", "drive_operators",
    "ghz_to_rad_ns", "load_device", "load_schedule", "mhz_to_rad_ns",
    "rad_ns_to_mhz", "require_valid_schedule", "save_device", "save_schedule",
    "schedule_from_dict", "schedule_to_dict", "segment_hamiltonian",
    "static_hamiltonian", "validate_schedule",
]
