"""Command line: ``eventeraser {run,oracle,mzi,compare}``.

Exit codes: 0 pass, 1 comparison failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import filecmp
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import harness
from .harness import ConfigError, SweepSpec
from .network import WiringError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_grid(text: str) -> list[float]:
    """``"0:90:5"`` (inclusive start:stop:step) or a comma list ``"0,22.5,45"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad grid range {text!r}; expected start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(n)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


def _add_sweep_args(p: argparse.ArgumentParser, mzi: bool = False):
    p.add_argument("--config", help="flat YAML/JSON file with SweepSpec fields (a run manifest also works)")
    if not mzi:
        p.add_argument("--preset", help=f"one of: {', '.join(harness.ALL_PRESETS)}")
        p.add_argument("--two-theta1-grid", help="2*theta_HWP1 values in degrees, e.g. 0:90:5")
        p.add_argument("--theta-hwp0", type=float)
        p.add_argument("--theta-qwp", type=float, help="QWP axis in degrees (custom preset); omit to remove")
        p.add_argument("--analyzed-port", type=int, choices=(0, 1))
    p.add_argument("--phi-points", type=int, help="number of equally spaced phases on [0, 360)")
    p.add_argument("--phi-grid", help="explicit phases in degrees")
    p.add_argument("--events", type=int, help="events per curve point (split over the phases)")
    p.add_argument("--events-per-phi", type=int, help="events per (point, phase) cell")
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--xi", type=float, help="pure source polarization in degrees (custom preset)")
    p.add_argument("--p-v", type=float, help="V weight of a mixed source (custom preset)")
    p.add_argument("--group-size", type=int, help="N_V = N_H group length of a mixed source")
    p.add_argument("--policy", choices=("random", "round-robin"), help="output-stage channel selection")
    p.add_argument("--warmup", type=int, help="events discarded at the start of every cell")
    p.add_argument("--tolerance", type=float)


def spec_from_args(args, preset_default: str) -> SweepSpec:
    d = harness.load_config(args.config) if args.config else {}
    preset = getattr(args, "preset", None) or d.pop("preset", preset_default)
    d.pop("preset", None)
    if getattr(args, "two_theta1_grid", None):
        d["two_theta1_grid"] = parse_grid(args.two_theta1_grid)
    if args.phi_grid:
        d["phi_grid"] = parse_grid(args.phi_grid)
    elif args.phi_points:
        d["phi_grid"] = [360.0 * k / args.phi_points for k in range(args.phi_points)]
    for name in ("theta_hwp0", "analyzed_port", "gamma", "seed", "policy", "warmup", "tolerance"):
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    if getattr(args, "theta_qwp", None) is not None:
        d["theta_qwp"] = args.theta_qwp
    if args.xi is not None or args.p_v is not None or args.group_size is not None:
        src = dict(d.get("source") or {})
        if args.xi is not None:
            src = {"kind": "pure", "xi_deg": args.xi}
        if args.p_v is not None:
            src = {"kind": "mixed", "p_v": args.p_v, "p_h": 1.0 - args.p_v}
        if args.group_size is not None:
            src.setdefault("kind", "mixed")
            src["n_v"] = src["n_h"] = args.group_size
        d["source"] = src
    nphi = len(d.get("phi_grid") or harness.default_phi_grid())
    if args.events_per_phi is not None:
        d["events_per_point"] = args.events_per_phi * (1 if preset == "bare-mzi" else nphi)
    elif args.events is not None:
        d["events_per_point"] = args.events
    return harness.spec_from_dict({"preset": preset, **d})


def cmd_run(args) -> int:
    spec = spec_from_args(args, "fig3a-pureV-45")
    if spec.preset == "bare-mzi":
        raise ConfigError("use the 'mzi' subcommand for the bare interferometer")
    points = harness.run_sweep(spec, keep_events=args.gamma_format != "none", workers=args.workers)
    paths = harness.write_outputs(points, args.out, spec, gamma_format=args.gamma_format)
    report = harness.compare_report(points, spec.tolerance)
    for p in points:
        print(f"2theta1={p.two_theta1:7.3f}  v_sim={p.v_sim:.6f}  v_oracle={p.v_oracle:.6f}  |dev|={p.abs_dev:.6f}")
    print(report.summary())
    print(f"wrote {', '.join(str(v) for v in paths.values())}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_oracle(args) -> int:
    spec = spec_from_args(args, "fig3a-pureV-45")
    if spec.preset == "bare-mzi":
        lines = ["phi_deg,p0,p1"]
        for phi in spec.phi_grid:
            p0, p1 = harness.oracle.mzi_probs(phi, 0.0)
            lines.append(f"{harness._num(phi)},{harness._num(p0)},{harness._num(p1)}")
    else:
        harness.verify_wiring(spec.analyzed_port, spec.theta_qwp)
        lines = ["two_theta1_deg,v_oracle"]
        for t in spec.two_theta1_grid:
            v = harness.oracle_visibility(spec.source, spec.theta_hwp0, t / 2.0, spec.theta_qwp,
                                          spec.analyzed_port)
            lines.append(f"{harness._num(t)},{harness._num(v)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_mzi(args) -> int:
    args.preset = "bare-mzi"
    spec = spec_from_args(args, "bare-mzi")
    tol = args.tolerance if args.tolerance is not None else harness.MZI_TOLERANCE
    points = harness.run_mzi_sweep(spec)
    for p in points:
        print(f"phi={p.phi:8.3f}  N0={p.n0:8d}  N1={p.n1:8d}  P0_sim={p.p0_sim:.6f}  "
              f"P0_oracle={p.p0_oracle:.6f}  |dev|={p.abs_dev:.6f}")
    report = harness.compare_report(points, tol)
    print(report.summary())
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_compare(args) -> int:
    """Re-check a saved curve against theory, optionally rerunning it bit for bit."""
    mpath = Path(args.manifest)
    try:
        man = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read manifest {mpath}: {e}") from e
    spec = harness.spec_from_dict(man["spec"])
    tol = args.tolerance if args.tolerance is not None else spec.tolerance
    curve_path = mpath.parent / man["files"]["curve"]
    rows = harness.read_curve(curve_path)
    if len(rows) != len(spec.two_theta1_grid):
        print(f"FAIL: {curve_path} has {len(rows)} rows, manifest grid has {len(spec.two_theta1_grid)}")
        return EXIT_FAIL
    points = []
    ok = True
    for row in rows:
        v_or = harness.oracle_visibility(spec.source, spec.theta_hwp0, row["two_theta1_deg"] / 2.0,
                                         spec.theta_qwp, spec.analyzed_port)
        if abs(v_or - row["v_oracle"]) > 1e-9:
            print(f"FAIL: saved theory value at 2theta1={row['two_theta1_deg']:g} is {row['v_oracle']}, "
                  f"recomputed {v_or}")
            ok = False
        points.append(harness.CurvePoint(row["two_theta1_deg"], row["v_sim"], v_or,
                                         abs(row["v_sim"] - v_or), []))
    report = harness.compare_report(points, tol)
    print(report.summary())
    ok = ok and report.passed
    if args.rerun:
        with tempfile.TemporaryDirectory() as tmp:
            fresh = harness.run_sweep(spec)
            new = harness.write_curve(fresh, Path(tmp) / "curve.csv")
            same = filecmp.cmp(new, curve_path, shallow=False)
        print("rerun: curve file is byte-identical" if same else "rerun: curve file DIFFERS")
        ok = ok and same
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eventeraser", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a visibility curve and compare it with theory")
    _add_sweep_args(p)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--gamma-format", choices=("none", "csv", "binary"), default="none",
                   help="also write the per-event dataset")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="print the theory curve for a preset")
    _add_sweep_args(p)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mzi", help="bare interferometer regression")
    _add_sweep_args(p, mzi=True)
    p.set_defaults(func=cmd_mzi)

    p = sub.add_parser("compare", help="re-verify saved outputs from their manifest")
    p.add_argument("manifest")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--rerun", action="store_true", help="rerun the sweep and require a byte-identical curve")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_PASS
    try:
        return args.func(args)
    except (ConfigError, WiringError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
