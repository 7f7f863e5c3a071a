"""Parameter sweeps, visibility estimation and simulation-vs-theory reports."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import oracle
from .messages import Mixed, PureLinear, SourceSpec
from .network import (EraserSettings, EventDataset, MziSettings, RunConfig,
                      WiringError, build_bare_mzi, build_eraser, detector_fraction,
                      run_events)
from .oracle import Visibility

CURVE_HEADER = ["two_theta1_deg", "v_sim", "v_oracle", "abs_dev"]
COUNTS_HEADER = ["two_theta1_deg", "phi_deg", "n0", "n1", "n_discard"]
GAMMA_HEADER = ["l", "x", "phi_deg", "theta_hwp0_deg", "theta_hwp1_deg", "theta_qwp_deg"]
GAMMA_MAGIC = b"EVERASER_GAMMA\x00\x01"
GAMMA_DTYPE = np.dtype([("l", "<u4"), ("x", "u1"), ("phi", "<f8"), ("theta_hwp0", "<f8"),
                        ("theta_hwp1", "<f8"), ("theta_qwp", "<f8")])
DEFAULT_TOLERANCE = 0.03
MZI_TOLERANCE = 0.01


class ConfigError(ValueError):
    pass


def default_two_theta1_grid() -> list[float]:
    return [5.0 * k for k in range(19)]


def default_phi_grid() -> list[float]:
    return [float(x) for x in oracle.default_phi_grid(32)]


@dataclass(frozen=True)
class PresetDef:
    source: SourceSpec
    theta_hwp0: float
    theta_qwp: Optional[float]


PRESETS: dict[str, PresetDef] = {
    "fig3a-pureV-45": PresetDef(SourceSpec(PureLinear(90.0)), 45.0, None),
    "fig3a-pureV-10": PresetDef(SourceSpec(PureLinear(90.0)), 10.0, None),
    "fig3b-mixed": PresetDef(SourceSpec(Mixed(0.5, 0.5)), 45.0, None),
    "fig3c-partial": PresetDef(SourceSpec(Mixed(2.0 / 3.0, 1.0 / 3.0)), 22.5, None),
    "fig4a-qwp": PresetDef(SourceSpec(PureLinear(90.0)), 45.0, 0.0),
    "fig4a-qwp-10": PresetDef(SourceSpec(PureLinear(90.0)), 10.0, 0.0),
    "fig4b-qwp-xi45": PresetDef(SourceSpec(PureLinear(45.0)), 22.5, 0.0),
}
ALL_PRESETS = tuple(PRESETS) + ("bare-mzi", "custom")


@dataclass
class SweepSpec:
    preset: str = "custom"
    two_theta1_grid: list[float] = field(default_factory=default_two_theta1_grid)
    phi_grid: list[float] = field(default_factory=default_phi_grid)
    events_per_point: int = 1_000_000
    gamma: float = 0.99
    seed: int = 12345
    source: SourceSpec = field(default_factory=lambda: SourceSpec(PureLinear(90.0)))
    theta_hwp0: float = 45.0
    theta_qwp: Optional[float] = None
    analyzed_port: int = 1
    policy: str = "random"
    warmup: int = 0
    tolerance: float = DEFAULT_TOLERANCE

    def validate(self) -> None:
        if self.preset not in ALL_PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {', '.join(ALL_PRESETS)}")
        if not self.phi_grid:
            raise ConfigError("phi grid is empty")
        if self.preset != "bare-mzi" and not self.two_theta1_grid:
            raise ConfigError("theta1 grid is empty")
        if self.events_per_point < len(self.phi_grid):
            raise ConfigError("events_per_point must be at least one event per phase")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.policy not in ("random", "round-robin"):
            raise ConfigError(f"unknown output-stage policy {self.policy!r}")
        if self.analyzed_port not in (0, 1):
            raise ConfigError("analyzed_port must be 0 or 1")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        if self.preset in PRESETS:
            p = PRESETS[self.preset]
            if (type(self.source.kind) is not type(p.source.kind)
                    or (self.theta_qwp is None) != (p.theta_qwp is None)):
                raise ConfigError(f"preset {self.preset!r} does not allow a different source kind or QWP presence; "
                                  "use preset 'custom'")


def spec_for_preset(preset: str, **overrides) -> SweepSpec:
    """A SweepSpec filled in from a named preset, with field overrides."""
    base = {}
    if preset in PRESETS:
        p = PRESETS[preset]
        base = dict(source=p.source, theta_hwp0=p.theta_hwp0, theta_qwp=p.theta_qwp)
    base.update(overrides)
    spec = SweepSpec(preset=preset, **base)
    spec.validate()
    return spec


@dataclass
class CurvePoint:
    two_theta1: float
    v_sim: float
    v_oracle: float
    abs_dev: float
    counts_per_phi: list[tuple[float, int, int, int]]
    degenerate: bool = False
    datasets: Optional[list[EventDataset]] = field(default=None, repr=False)


def estimate_visibility(counts: Sequence) -> Visibility:
    """Fringe visibility ``(Nmax - Nmin) / (Nmax + Nmin)`` of D0 counts.

    ``counts`` is either a list of D0 counts or a list of ``(phi, n0)`` pairs.
    """
    if len(counts) == 0:
        raise ValueError("no counts")
    n0 = [c[1] if isinstance(c, (tuple, list)) else c for c in counts]
    hi, lo = max(n0), min(n0)
    if hi + lo == 0:
        return Visibility(0.0, True)
    return Visibility((hi - lo) / (hi + lo), False)


def split_events(total: int, n_cells: int) -> list[int]:
    base, extra = divmod(total, n_cells)
    return [base + (1 if j < extra else 0) for j in range(n_cells)]


def oracle_visibility(source: SourceSpec, theta0: float, theta1: float,
                      theta_qwp: Optional[float], analyzed_port: int = 1) -> float:
    """The closed form matching this configuration, else the exact pipeline."""
    kind = source.kind
    if theta_qwp is None:
        if isinstance(kind, PureLinear):
            return oracle.visibility_pure_no_qwp(kind.xi, theta0, theta1)
        if kind.p_h == 0.0:
            return oracle.visibility_pure_no_qwp(90.0, theta0, theta1)
        if kind.p_v == 0.0:
            return oracle.visibility_pure_no_qwp(0.0, theta0, theta1)
        return oracle.visibility_mixed(kind.beta, theta0, theta1)
    if isinstance(kind, PureLinear) and math.fmod(theta_qwp, 180.0) == 0.0:
        return oracle.visibility_pure_qwp0(kind.xi, theta0, theta1)
    return oracle.sweep_visibility(oracle.mixture_from_source(source), theta0, theta1,
                                   theta_qwp, analyzed_port=analyzed_port).value


def verify_wiring(analyzed_port: int, theta_qwp: Optional[float], tol: float = 1e-9) -> None:
    """Check the matrix pipeline for this wiring against the closed forms."""
    triples = [(90.0, 45.0, 22.5), (90.0, 10.0, 7.0), (45.0, 22.5, 11.0), (30.0, 17.0, 40.0)]
    for xi, t0, t1 in triples:
        if theta_qwp is None:
            want = oracle.visibility_pure_no_qwp(xi, t0, t1)
            got = oracle.sweep_visibility([(xi, 1.0)], t0, t1, None, analyzed_port=analyzed_port).value
        else:
            want = oracle.visibility_pure_qwp0(xi, t0, t1)
            got = oracle.sweep_visibility([(xi, 1.0)], t0, t1, 0.0, analyzed_port=analyzed_port).value
        if abs(got - want) > tol:
            raise WiringError(f"analyzed port {analyzed_port} does not reproduce the closed-form "
                              f"visibility at xi={xi}, theta0={t0}, theta1={t1}: {got} vs {want}")


def _cell_config(spec: SweepSpec, i: int, j: int, n_events: int) -> RunConfig:
    settings = EraserSettings(phi=spec.phi_grid[j], theta_hwp0=spec.theta_hwp0,
                              theta_hwp1=spec.two_theta1_grid[i] / 2.0,
                              theta_qwp=spec.theta_qwp, analyzed_port=spec.analyzed_port)
    warm = min(spec.warmup, n_events - 1)
    return RunConfig(n_events, spec.gamma, spec.seed, spec.source, settings,
                     spec.policy, warm, stream=(i, j))


def _run_cell(args) -> EventDataset:
    cfg, engine = args
    return run_events(build_eraser(cfg), cfg, engine=engine)


def run_sweep(spec: SweepSpec, keep_events: bool = False, workers: int = 1,
              engine: str = "fast") -> list[CurvePoint]:
    """Simulate every (theta1, phi) cell on a fresh network and build the curve.

    Each cell draws from its own substream keyed by (seed, theta1 index, phi
    index), so the result does not depend on ``workers``.
    """
    spec.validate()
    if spec.preset == "bare-mzi":
        raise ConfigError("bare-mzi is a phase sweep; use run_mzi_sweep")
    verify_wiring(spec.analyzed_port, spec.theta_qwp)
    per_cell = split_events(spec.events_per_point, len(spec.phi_grid))
    jobs = [(_cell_config(spec, i, j, per_cell[j]), engine)
            for i in range(len(spec.two_theta1_grid)) for j in range(len(spec.phi_grid))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_cell(job) for job in jobs]

    points = []
    nphi = len(spec.phi_grid)
    for i, two_t1 in enumerate(spec.two_theta1_grid):
        cells = results[i * nphi:(i + 1) * nphi]
        counts = [(spec.phi_grid[j], ds.n0, ds.n1, ds.n_discard) for j, ds in enumerate(cells)]
        vis = estimate_visibility([(phi, n0) for phi, n0, _, _ in counts])
        v_or = oracle_visibility(spec.source, spec.theta_hwp0, two_t1 / 2.0, spec.theta_qwp,
                                 spec.analyzed_port)
        points.append(CurvePoint(two_t1, vis.value, v_or, abs(vis.value - v_or), counts,
                                 vis.degenerate, cells if keep_events else None))
    return points


@dataclass
class MziPoint:
    phi: float
    n0: int
    n1: int
    p0_sim: float
    p0_oracle: float
    abs_dev: float


def run_mzi_sweep(spec: SweepSpec, engine: str = "fast") -> list[MziPoint]:
    """Bare interferometer: one fresh network per phase, ``events_per_point`` each.

    The grid phase is applied in path 0 (path 1 at zero), so D0 fires with
    probability ``sin^2(phi / 2)``.
    """
    points = []
    for j, phi in enumerate(spec.phi_grid):
        cfg = RunConfig(spec.events_per_point, spec.gamma, spec.seed, spec.source,
                        MziSettings(phi, 0.0), spec.policy,
                        min(spec.warmup, spec.events_per_point - 1), stream=(j,))
        ds = run_events(build_bare_mzi(cfg), cfg, engine=engine)
        p_sim = detector_fraction(ds)
        p_or = oracle.mzi_probs(phi, 0.0)[0]
        points.append(MziPoint(phi, ds.n0, ds.n1, p_sim, p_or, abs(p_sim - p_or)))
    return points


@dataclass
class Report:
    max_abs_dev: float
    mean_abs_dev: float
    tolerance: float
    passed: bool
    offenders: list[tuple[float, float]]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status}: max |dev| = {self.max_abs_dev:.4g}, mean |dev| = {self.mean_abs_dev:.4g}, "
                 f"tolerance = {self.tolerance:g}"]
        for x, dev in self.offenders:
            lines.append(f"  offender at {x:g} deg: |dev| = {dev:.4g}")
        return "\n".join(lines)


def compare_report(points, tolerance: float = DEFAULT_TOLERANCE) -> Report:
    """Pass iff every point deviates from theory by at most ``tolerance``.

    Accepts CurvePoints or MziPoints.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    devs = [(getattr(p, "two_theta1", getattr(p, "phi", float("nan"))), p.abs_dev) for p in points]
    if not devs:
        return Report(0.0, 0.0, tolerance, True, [])
    vals = [d for _, d in devs]
    offenders = [(x, d) for x, d in devs if d > tolerance]
    return Report(max(vals), sum(vals) / len(vals), tolerance, not offenders, offenders)


# output files ---------------------------------------------------------------

def _num(x: float) -> str:
    return format(float(x), ".12g")


def write_curve(points, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for p in points:
            w.writerow([_num(p.two_theta1), _num(p.v_sim), _num(p.v_oracle), _num(p.abs_dev)])
    return path


def read_curve(path) -> list[dict[str, float]]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [{k: float(v) for k, v in r.items()} for r in rows]


def write_counts(points, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COUNTS_HEADER)
        for p in points:
            for phi, n0, n1, nd in p.counts_per_phi:
                w.writerow([_num(p.two_theta1), _num(phi), n0, n1, nd])
    return path


def _gamma_records(points) -> np.ndarray:
    blocks = []
    for p in points:
        if p.datasets is None:
            raise ValueError("curve points carry no event datasets; rerun with keep_events=True")
        for ds in p.datasets:
            s = ds.settings
            rec = np.empty(len(ds.outcomes), dtype=GAMMA_DTYPE)
            rec["l"] = np.arange(1, len(ds.outcomes) + 1)
            rec["x"] = ds.outcomes
            rec["phi"] = s["phi"]
            rec["theta_hwp0"] = s["theta_hwp0"]
            rec["theta_hwp1"] = s["theta_hwp1"]
            rec["theta_qwp"] = np.nan if s["theta_qwp"] is None else s["theta_qwp"]
            blocks.append(rec)
    return np.concatenate(blocks) if blocks else np.empty(0, dtype=GAMMA_DTYPE)


def write_gamma_csv(points, path) -> Path:
    """One row per event; ``x`` is 0 (D0), 1 (D1) or 2 (discard port)."""
    path = Path(path)
    rec = _gamma_records(points)
    with open(path, "w", newline="") as f:
        f.write(",".join(GAMMA_HEADER) + "\n")
        for r in rec:
            qwp = "" if math.isnan(r["theta_qwp"]) else _num(r["theta_qwp"])
            f.write(f"{r['l']},{r['x']},{_num(r['phi'])},{_num(r['theta_hwp0'])},"
                    f"{_num(r['theta_hwp1'])},{qwp}\n")
    return path


def write_gamma_binary(points, path) -> Path:
    path = Path(path)
    rec = _gamma_records(points)
    with open(path, "wb") as f:
        f.write(GAMMA_MAGIC)
        f.write(rec.tobytes())
    return path


def read_gamma_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:16] != GAMMA_MAGIC:
        raise ValueError(f"{path}: not an event dataset file (bad magic)")
    return np.frombuffer(data[16:], dtype=GAMMA_DTYPE)


def source_to_dict(source: SourceSpec) -> dict:
    kind = source.kind
    if isinstance(kind, PureLinear):
        return {"kind": "pure", "xi_deg": kind.xi, "psi0_deg": source.psi0}
    return {"kind": "mixed", "p_v": kind.p_v, "p_h": kind.p_h, "n_v": kind.n_v, "n_h": kind.n_h,
            "psi0_deg": source.psi0}


def source_from_dict(d: dict) -> SourceSpec:
    d = dict(d)
    psi0 = float(d.pop("psi0_deg", 0.0))
    kind = d.pop("kind", "pure")
    if kind == "pure":
        return SourceSpec(PureLinear(float(d.get("xi_deg", 90.0))), psi0)
    if kind == "mixed":
        p_v = float(d["p_v"])
        p_h = float(d.get("p_h", 1.0 - p_v))
        return SourceSpec(Mixed(p_v, p_h, int(d.get("n_v", 200)), int(d.get("n_h", 200))), psi0)
    raise ConfigError(f"unknown source kind {kind!r}")


def spec_to_dict(spec: SweepSpec) -> dict:
    d = dataclasses.asdict(spec)
    d["source"] = source_to_dict(spec.source)
    return d


def spec_from_dict(d: dict) -> SweepSpec:
    d = dict(d)
    known = {f.name for f in dataclasses.fields(SweepSpec)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    preset = d.pop("preset", "custom")
    if "source" in d:
        d["source"] = source_from_dict(d["source"]) if isinstance(d["source"], dict) else d["source"]
    try:
        return spec_for_preset(preset, **d)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


def manifest(spec: SweepSpec, files: dict[str, str]) -> dict:
    from . import __version__
    return {"code_version": __version__, "spec": spec_to_dict(spec), "files": files}


def write_outputs(points, outdir, spec: SweepSpec, gamma_format: str = "none",
                  stem: Optional[str] = None) -> dict[str, Path]:
    """Write the curve, per-phase counts, optional event dataset and the manifest."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {outdir}: {e}") from e
    stem = stem or spec.preset
    paths = {"curve": outdir / f"{stem}_curve.csv", "counts": outdir / f"{stem}_counts.csv"}
    if gamma_format == "csv":
        paths["gamma"] = outdir / f"{stem}_gamma.csv"
    elif gamma_format == "binary":
        paths["gamma"] = outdir / f"{stem}_gamma.bin"
    elif gamma_format != "none":
        raise ValueError(f"unknown dataset format {gamma_format!r}")
    paths["manifest"] = outdir / f"{stem}_manifest.json"
    try:
        write_curve(points, paths["curve"])
        write_counts(points, paths["counts"])
        if gamma_format == "csv":
            write_gamma_csv(points, paths["gamma"])
        elif gamma_format == "binary":
            write_gamma_binary(points, paths["gamma"])
        files = {k: v.name for k, v in paths.items() if k != "manifest"}
        with open(paths["manifest"], "w") as f:
            json.dump(manifest(spec, files), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise OSError(f"writing outputs under {outdir} failed: {e}") from e
    return paths


def load_config(path) -> dict:
    """Read a flat YAML (or JSON) sweep configuration; a run manifest also works."""
    import yaml
    try:
        with open(path) as f:
            d = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping")
    if "spec" in d and "code_version" in d:
        d = d["spec"]
    return d
