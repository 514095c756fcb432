"""Command-line front end.

Every command that writes files also writes a run manifest
(``<output>.manifest.json``) recording the command line, device, seed, tool
version and wall time.  Exit codes: 0 success, 2 validation error,
3 non-convergence (partial outputs still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GatespeedError
from .gates import named_gate
from .gatefid import avg_fidelity_from_ptm, chi_of_ptm, ptm_of_chi, ptm_of_unitary
from .kak import kak_decompose, reconstruct, t_min
from .model import (DeviceSpec, PulseSchedule, default_device, load_device,
                    load_schedule, mhz_to_rad_ns, rad_ns_to_mhz, save_schedule,
                    schedule_to_dict)
from .optctrl import (OptimizerConfig, find_speed_limit, optimize_pulse,
                      robustness_study, sweep_fidelity_vs_time)
from .evolve import propagate
from .leakage3 import build_device, leakage_fidelity
from .tomo import (estimate_statistical_error, ideal_confusion, load_counts,
                   mle_reconstruct, save_counts, simulate_qpt, spam_correct,
                   symmetric_confusion)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3


def _load_target(args) -> np.ndarray:
    if getattr(args, "matrix", None):
        with open(args.matrix) as f:
            data = json.load(f)
        arr = np.asarray(data, dtype=float)
        if arr.shape != (4, 4, 2):
            raise ValueError("matrix file must be a 4x4 array of [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    if getattr(args, "gate", None):
        return named_gate(args.gate)
    raise ValueError("specify a gate name or --matrix FILE")


def _load_device_arg(args) -> DeviceSpec:
    spec = load_device(args.device) if args.device else default_device()
    if getattr(args, "omega_max_mhz", None) is not None:
        spec = spec.with_omega_max_mhz(args.omega_max_mhz)
    return spec


def _write_manifest(out_path: Path, args, t0: float, extra: dict | None = None) -> None:
    manifest = {
        "command": " ".join(sys.argv[1:]) if sys.argv[1:] else args.command,
        "device": args.device or "<default>",
        "seed": getattr(args, "seed", None),
        "outputs": [str(out_path)],
        "version": __version__,
        "wall_s": round(time.perf_counter() - t0, 3),
    }
    if extra:
        manifest.update(extra)
    with open(str(out_path) + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)


def _config_from_args(args, segments_default=16) -> OptimizerConfig:
    return OptimizerConfig(
        segments=getattr(args, "segments", None) or segments_default,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        tolerance=args.epsilon,
        seed=args.seed,
    )


def _gate_label(args) -> str:
    if getattr(args, "gate", None):
        return args.gate.upper()
    return "matrix"


def cmd_kak(args) -> int:
    spec = _load_device_arg(args)
    target = _load_target(args)
    content, locals_ = kak_decompose(target)
    gate_tag = args.gate if getattr(args, "gate", None) else None
    tmin = t_min(content, spec, gate_tag)
    err = np.max(np.abs(np.exp(1j * locals_.global_phase) * reconstruct(content, locals_)
                        - target))
    report = {
        "gate": _gate_label(args),
        "lambda": content.lam.tolist(),
        "lambda_over_pi": (content.lam / np.pi).tolist(),
        "t_min_ns": tmin,
        "global_phase": locals_.global_phase,
        "reconstruction_error": float(err),
        "locals": {
            name: np.stack([m.real, m.imag], axis=-1).tolist()
            for name, m in (("u1", locals_.u1), ("u2", locals_.u2),
                            ("v1", locals_.v1), ("v2", locals_.v2))
        },
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"gate: {report['gate']}")
        print(f"lambda / pi: ({content.lam[0] / np.pi:+.6f}, {content.lam[1] / np.pi:+.6f}, "
              f"{content.lam[2] / np.pi:+.6f})")
        print(f"t_min: {tmin:.2f} ns")
        print(f"reconstruction error: {err:.2e}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    t0 = time.perf_counter()
    spec = _load_device_arg(args)
    target = _load_target(args)
    config = _config_from_args(args)
    result = optimize_pulse(spec, target, args.t_ns, config)
    print(f"best fidelity: {result.best_fidelity:.6f} "
          f"(converged: {result.converged}, restarts: {len(result.per_restart)})")
    if args.out:
        out = Path(args.out)
        save_schedule(result.best_schedule, out)
        _write_manifest(out, args, t0, {
            "gate": _gate_label(args), "t_ns": args.t_ns,
            "best_fidelity": result.best_fidelity, "converged": result.converged,
        })
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_speedlimit(args) -> int:
    t0 = time.perf_counter()
    spec = _load_device_arg(args)
    target = _load_target(args)
    config = _config_from_args(args)
    result = find_speed_limit(spec, target, config)
    report = {
        "target": _gate_label(args),
        "omega_max_mhz": spec.omega_max_mhz,
        "t_min_ns": result.t_min_ns,
        "t_f_ns": result.t_f_ns,
        "ratio": result.ratio,
        "epsilon": config.tolerance,
    }
    print(json.dumps(report, indent=2))
    if args.out:
        out = Path(args.out)
        with open(out, "w") as f:
            json.dump(report, f, indent=2)
        _write_manifest(out, args, t0, {"probes": len(result.probes)})
    return EXIT_OK


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    spec = _load_device_arg(args)
    target = _load_target(args)
    config = _config_from_args(args, segments_default=4)
    grid = np.linspace(0.0, args.t_max_ns, args.points + 1)[1:]
    points = sweep_fidelity_vs_time(spec, target, config, grid)
    out = Path(args.out)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t_ns", "best_fidelity", "converged", "best_seed", "wall_ms"])
        for p in points:
            writer.writerow([f"{p.t_ns:.6f}", f"{p.best_fidelity:.10f}",
                             int(p.converged), p.best_seed, f"{p.wall_ms:.1f}"])
    if args.pulse_dir:
        pulse_dir = Path(args.pulse_dir)
        pulse_dir.mkdir(parents=True, exist_ok=True)
        for i, p in enumerate(points):
            save_schedule(p.schedule, pulse_dir / f"pulse_{i:03d}_{p.t_ns:.1f}ns.json")
    _write_manifest(out, args, t0, {"gate": _gate_label(args), "points": len(points)})
    print(f"wrote {len(points)} sweep points to {out}")
    return EXIT_OK


def _confusion_from_args(args) -> np.ndarray:
    if getattr(args, "ideal_readout", False):
        return ideal_confusion()
    return symmetric_confusion(args.readout_error)


def cmd_qpt_simulate(args) -> int:
    t0 = time.perf_counter()
    target = _load_target(args)
    if args.pulse:
        spec = _load_device_arg(args)
        schedule = load_schedule(args.pulse)
        channel = ptm_of_unitary(propagate(spec, schedule).u)
    else:
        channel = ptm_of_unitary(target)
    confusion = _confusion_from_args(args)
    counts = simulate_qpt(channel, confusion, shots=args.shots, seed=args.seed)
    out = Path(args.out)
    save_counts(counts, out)
    _write_manifest(out, args, t0, {"gate": _gate_label(args), "shots": args.shots})
    print(f"wrote counts ({args.shots} shots x 324 settings) to {out}")
    return EXIT_OK


def cmd_qpt_reconstruct(args) -> int:
    t0 = time.perf_counter()
    target = _load_target(args)
    counts = load_counts(args.counts)
    confusion = _confusion_from_args(args)
    result = mle_reconstruct(counts, confusion)
    ptm = result.ptm
    spam_applied = False
    if args.identity_counts:
        identity_result = mle_reconstruct(load_counts(args.identity_counts), confusion)
        chi_u = chi_of_ptm(ptm)
        chi_i = chi_of_ptm(identity_result.ptm)
        ptm = ptm_of_chi(spam_correct(chi_u, chi_i, target))
        spam_applied = True
    fidelity = avg_fidelity_from_ptm(ptm, target)
    stat_err = None
    if args.statistical_trials:
        stat_err = estimate_statistical_error(counts, target, confusion,
                                              trials=args.statistical_trials,
                                              seed=args.seed)
    report = {
        "target": _gate_label(args),
        "fidelity": fidelity,
        "spam_corrected": spam_applied,
        "converged": result.converged,
        "iterations": result.iterations,
        "log_likelihood": result.log_likelihood,
        "cp_residual": result.cp_residual,
        "tp_residual": result.tp_residual,
        "statistical_error": stat_err,
        "normalization": "quarter-trace",
        "ptm": ptm.tolist(),
    }
    out = Path(args.out)
    with open(out, "w") as f:
        json.dump(report, f)
    _write_manifest(out, args, t0, {"fidelity": fidelity})
    print(f"reconstructed fidelity vs {report['target']}: {fidelity:.4f}"
          + (f" (stat err {stat_err:.4f})" if stat_err is not None else ""))
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_leakage(args) -> int:
    t0 = time.perf_counter()
    spec = _load_device_arg(args)
    if spec.qutrit is None:
        raise ValueError("device config has no qutrit section")
    schedule = load_schedule(args.pulse)
    model = build_device(spec.qutrit, spec.g, dipole_mode=args.dipole_mode)
    report = leakage_fidelity(spec, schedule, model)
    payload = {
        "pulse": args.pulse,
        "dipole_mode": args.dipole_mode,
        "j_coupling_mhz": rad_ns_to_mhz(model.j_coupling),
        "r1_eff": model.r1_eff,
        "r2_eff": model.r2_eff,
        "fidelity_raw": report.fidelity_raw,
        "fidelity_phase_optimized": report.fidelity_phase_optimized,
        "infidelity": 1.0 - report.fidelity,
        "leakage_probability": report.leakage_probability,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        out = Path(args.out)
        with open(out, "w") as f:
            json.dump(payload, f, indent=2)
        _write_manifest(out, args, t0)
    return EXIT_OK


def cmd_robustness(args) -> int:
    t0 = time.perf_counter()
    spec = _load_device_arg(args)
    target = _load_target(args)
    schedule = load_schedule(args.pulse)
    result = robustness_study(spec, schedule, target, args.sigma, args.trials, args.seed)
    payload = {
        "pulse": args.pulse,
        "gate": _gate_label(args),
        "sigma_fraction": args.sigma,
        "trials": args.trials,
        "mean_infidelity": result.mean_infidelity,
        "std_infidelity": result.std_infidelity,
        "mean_fidelity": 1.0 - result.mean_infidelity,
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        out = Path(args.out)
        with open(out, "w") as f:
            json.dump(payload, f, indent=2)
        _write_manifest(out, args, t0)
    return EXIT_OK


def _add_common(p, *, seed=True, device=True):
    if device:
        p.add_argument("--device", help="device config JSON (default: built-in chip values)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_optimizer_flags(p, segments_default=16):
    p.add_argument("--omega-max-mhz", type=float, default=None,
                   help="override the device amplitude bound (linear MHz)")
    p.add_argument("--segments", type=int, default=segments_default)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=0.01,
                   help="target infidelity for convergence")
    p.add_argument("--max-iterations", type=int, default=5000)
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; restarts run vectorized")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatespeed",
        description="Two-qubit gate speed limits, pulse optimization and verification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kak", help="Cartan coefficients, local gates and T_min")
    p.add_argument("gate", nargs="?", help="named gate (CNOT, CZ, SWAP, SQRT_SWAP, ISWAP)")
    p.add_argument("--matrix", help="JSON 4x4 matrix of [re, im] pairs")
    p.add_argument("--json", action="store_true")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_kak)

    p = sub.add_parser("optimize", help="optimize a pulse at fixed gate time")
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--t-ns", type=float, required=True)
    p.add_argument("--out", help="pulse schedule JSON output")
    _add_optimizer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("speedlimit", help="bisect for the numerical speed limit T_F")
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--out")
    _add_optimizer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_speedlimit)

    p = sub.add_parser("sweep", help="fidelity-vs-time sweep (CSV)")
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--t-max-ns", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pulse-dir", help="also save the optimized pulse per grid point")
    _add_optimizer_flags(p, segments_default=4)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    qpt = sub.add_parser("qpt", help="simulated process tomography")
    qsub = qpt.add_subparsers(dest="qpt_command", required=True)

    p = qsub.add_parser("simulate", help="sample a counts tensor for a channel")
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--pulse", help="simulate the propagator of this pulse instead")
    p.add_argument("--shots", type=int, default=500)
    p.add_argument("--readout-error", type=float, default=0.03)
    p.add_argument("--ideal-readout", action="store_true")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_qpt_simulate)

    p = qsub.add_parser("reconstruct", help="maximum-likelihood CPTP reconstruction")
    p.add_argument("--counts", required=True)
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--identity-counts", help="zero-time counts for SPAM correction")
    p.add_argument("--readout-error", type=float, default=0.03)
    p.add_argument("--ideal-readout", action="store_true")
    p.add_argument("--statistical-trials", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_qpt_reconstruct)

    p = sub.add_parser("leakage", help="two-qutrit lab-frame leakage check for a pulse")
    p.add_argument("--pulse", required=True)
    p.add_argument("--dipole-mode", choices=("per_drive", "shared"), default="per_drive")
    p.add_argument("--out")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("robustness", help="pulse-noise robustness study")
    p.add_argument("--pulse", required=True)
    p.add_argument("--gate")
    p.add_argument("--matrix")
    p.add_argument("--sigma", type=float, default=0.01,
                   help="noise std as a fraction of omega_max")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_robustness)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GatespeedError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
