"""Experiment topologies and the one-messenger-at-a-time event loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import optics
from ._kernel import (DISCARD, KIND_BS, KIND_PBS, KIND_PHASE, KIND_WAVEPLATE,
                      run_kernel)
from .dlm import DlmState
from .messages import (LABEL_XI, Mixed, PureLinear, SourceSpec, emit_pure,
                       max_groups, source_events)

DLM_KINDS = ("bs", "pbs")
TERMINALS = {"D0": 0, "D1": 1, "discard": DISCARD}


class WiringError(ValueError):
    pass


@dataclass(frozen=True)
class Unit:
    uid: str
    kind: str  # bs | pbs | hwp | qwp | phase
    angle: float = 0.0  # waveplate axis or phase shift, degrees


@dataclass
class Topology:
    units: list[Unit]
    edges: dict[tuple[str, int], tuple[str, int]]
    source: tuple[str, int]
    detectors: tuple[str, ...] = ("D0", "D1")
    discard: Optional[str] = None

    def unit(self, uid: str) -> Unit:
        for u in self.units:
            if u.uid == uid:
                return u
        raise KeyError(uid)

    @property
    def dlm_units(self) -> list[str]:
        return [u.uid for u in self.units if u.kind in DLM_KINDS]

    def validate(self) -> None:
        ids = [u.uid for u in self.units]
        if len(set(ids)) != len(ids):
            raise WiringError("duplicate unit ids")
        terminals = set(self.detectors) | ({self.discard} if self.discard else set())
        for (src, port), (dst, _) in self.edges.items():
            if src not in ids:
                raise WiringError(f"edge from unknown unit {src!r}")
            if dst not in ids and dst not in terminals:
                raise WiringError(f"edge into unknown node {dst!r}")
            nports = 2 if self.unit(src).kind in DLM_KINDS else 1
            if not 0 <= port < nports:
                raise WiringError(f"{src!r} has no output port {port}")
        for u in self.units:
            nports = 2 if u.kind in DLM_KINDS else 1
            for p in range(nports):
                if (u.uid, p) not in self.edges:
                    raise WiringError(f"output port {u.uid}:{p} is not connected")
        # acyclic + detector reachable
        seen: set[str] = set()
        reached: set[str] = set()

        def walk(uid, stack):
            if uid in terminals:
                reached.add(uid)
                return
            if uid in stack:
                raise WiringError(f"cycle through {uid!r}")
            if uid in seen:
                return
            seen.add(uid)
            nports = 2 if self.unit(uid).kind in DLM_KINDS else 1
            for p in range(nports):
                walk(self.edges[(uid, p)][0], stack | {uid})

        if self.source[0] not in ids:
            raise WiringError("source is not wired to a unit")
        walk(self.source[0], frozenset())
        if not reached & set(self.detectors):
            raise WiringError("no detector is reachable from the source")


@dataclass(frozen=True)
class EraserSettings:
    phi: float = 0.0
    theta_hwp0: float = 45.0
    theta_hwp1: float = 22.5
    theta_qwp: Optional[float] = None  # None: QWP removed
    analyzed_port: int = 1


@dataclass(frozen=True)
class MziSettings:
    phi0: float = 0.0
    phi1: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    total_events: int
    gamma: float = 0.99
    seed: int = 0
    source: SourceSpec = field(default_factory=lambda: SourceSpec(PureLinear(90.0)))
    settings: EraserSettings | MziSettings = field(default_factory=EraserSettings)
    policy: str = "random"
    warmup: int = 0
    stream: tuple[int, ...] = ()  # RNG substream key

    def __post_init__(self):
        if self.total_events < 1:
            raise ValueError("total_events must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 <= self.warmup < self.total_events:
            raise ValueError("warmup must be in [0, total_events)")
        if self.policy not in ("random", "round-robin"):
            raise ValueError(f"unknown output-stage policy {self.policy!r}")


@dataclass
class EventDataset:
    """Per-event outcomes (0: D0, 1: D1, 2: discard port) with the settings."""
    outcomes: np.ndarray
    settings: dict
    warmup: int = 0

    @property
    def counted(self) -> np.ndarray:
        return self.outcomes[self.warmup:]

    @property
    def n0(self) -> int:
        return int(np.count_nonzero(self.counted == 0))

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.counted == 1))

    @property
    def n_discard(self) -> int:
        return int(np.count_nonzero(self.counted == DISCARD))

    @property
    def n_detected(self) -> int:
        return self.n0 + self.n1


def build_eraser(cfg: RunConfig) -> Topology:
    s = cfg.settings
    if not isinstance(s, EraserSettings):
        raise WiringError("eraser topology needs EraserSettings")
    if s.analyzed_port not in (0, 1):
        raise WiringError("analyzed_port must be 0 or 1")
    for name in ("phi", "theta_hwp0", "theta_hwp1"):
        if not math.isfinite(getattr(s, name)):
            raise WiringError(f"{name} must be finite")
    if s.theta_qwp is not None and not math.isfinite(s.theta_qwp):
        raise WiringError("theta_qwp must be finite or absent")
    units = [Unit("BS1", "bs"), Unit("HWP0", "hwp", s.theta_hwp0),
             Unit("phase", "phase", s.phi), Unit("BS2", "bs")]
    edges = {("BS1", 0): ("HWP0", 0), ("BS1", 1): ("phase", 0),
             ("HWP0", 0): ("BS2", 0), ("phase", 0): ("BS2", 1)}
    first = "HWP1"
    if s.theta_qwp is not None:
        units.append(Unit("QWP", "qwp", s.theta_qwp))
        edges[("QWP", 0)] = ("HWP1", 0)
        first = "QWP"
    units += [Unit("HWP1", "hwp", s.theta_hwp1), Unit("PBS", "pbs")]
    edges[("BS2", s.analyzed_port)] = (first, 0)
    edges[("BS2", 1 - s.analyzed_port)] = ("discard", 0)
    edges[("HWP1", 0)] = ("PBS", 1)
    edges[("PBS", 0)] = ("D0", 0)
    edges[("PBS", 1)] = ("D1", 0)
    topo = Topology(units, edges, ("BS1", 0), discard="discard")
    topo.validate()
    return topo


def build_bare_mzi(cfg: RunConfig) -> Topology:
    s = cfg.settings
    if not isinstance(s, MziSettings):
        raise WiringError("bare MZI topology needs MziSettings")
    units = [Unit("BS1", "bs"), Unit("phase0", "phase", s.phi0),
             Unit("phase1", "phase", s.phi1), Unit("BS2", "bs")]
    edges = {("BS1", 0): ("phase0", 0), ("BS1", 1): ("phase1", 0),
             ("phase0", 0): ("BS2", 0), ("phase1", 0): ("BS2", 1),
             ("BS2", 0): ("D0", 0), ("BS2", 1): ("D1", 0)}
    topo = Topology(units, edges, ("BS1", 0))
    topo.validate()
    return topo


PRESETS = {"eraser": build_eraser, "bare-mzi": build_bare_mzi}


def build(name: str, cfg: RunConfig) -> Topology:
    try:
        return PRESETS[name](cfg)
    except KeyError:
        raise WiringError(f"unknown topology preset {name!r}") from None


def make_rng(seed: int, stream=()) -> np.random.Generator:
    """Counter-based generator for one run, keyed by (seed, stream)."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in stream))
    return np.random.Generator(np.random.Philox(ss))


def draw_inputs(topo: Topology, cfg: RunConfig):
    """All random input of a run: the emission schedule and output-stage uniforms."""
    rng = make_rng(cfg.seed, cfg.stream)
    kind = cfg.source.kind
    group_u = rng.random(max_groups(kind, cfg.total_events)) if isinstance(kind, Mixed) else None
    emitted = source_events(cfg.source, cfg.total_events, group_u)
    n_dlm = len(topo.dlm_units) if cfg.policy == "random" else 0
    uniforms = rng.random((cfg.total_events, n_dlm))
    return emitted, uniforms


def _settings_snapshot(topo: Topology, cfg: RunConfig) -> dict:
    s = cfg.settings
    snap = {k: getattr(s, k) for k in s.__dataclass_fields__}
    snap["units"] = [(u.uid, u.kind, u.angle) for u in topo.units]
    return snap


def run_events(topo: Topology, cfg: RunConfig, engine: str = "fast") -> EventDataset:
    """Route ``cfg.total_events`` messengers through ``topo`` one at a time.

    ``engine="fast"`` runs the compiled kernel, ``"reference"`` the plain
    Python loop over the optics functions.  Both consume identical random
    input.
    """
    topo.validate()
    emitted, uniforms = draw_inputs(topo, cfg)
    if engine == "fast":
        outcomes = _run_fast(topo, cfg, emitted, uniforms)
    elif engine == "reference":
        outcomes = _run_reference(topo, cfg, emitted, uniforms)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return EventDataset(outcomes, _settings_snapshot(topo, cfg), cfg.warmup)


def _run_reference(topo, cfg, emitted, uniforms) -> np.ndarray:
    dlm_index = {uid: i for i, uid in enumerate(topo.dlm_units)}
    states = {uid: DlmState(cfg.gamma) for uid in topo.dlm_units}
    selectors = {uid: optics.make_selector(cfg.policy) for uid in topo.dlm_units}
    units = {u.uid: u for u in topo.units}
    terminals = {d: TERMINALS[d] for d in topo.detectors}
    if topo.discard:
        terminals[topo.discard] = DISCARD
    angles, index = emitted
    msgs = [emit_pure(x, cfg.source.psi0) for x in angles]
    out = np.empty(cfg.total_events, dtype=np.int8)
    for l in range(cfg.total_events):
        msg = msgs[index[l]]
        uid, port = topo.source
        while uid not in terminals:
            u = units[uid]
            if u.kind in DLM_KINDS:
                r = uniforms[l, dlm_index[uid]] if uniforms.shape[1] else 0.0
                fn = optics.bs_process if u.kind == "bs" else optics.pbs_process
                res = fn(states[uid], port, msg, r, selectors[uid])
                k, msg = res.out_channel, res.out_message
            else:
                if u.kind == "hwp":
                    msg = optics.hwp_apply(msg, u.angle)
                elif u.kind == "qwp":
                    msg = optics.qwp_apply(msg, u.angle)
                else:
                    msg = optics.phase_apply(msg, u.angle)
                k = 0
            uid, port = topo.edges[(uid, k)]
        out[l] = terminals[uid]
    return out


def compile_topology(topo: Topology):
    """Flatten a topology into the arrays consumed by the compiled kernel."""
    index = {u.uid: i for i, u in enumerate(topo.units)}
    code = {d: -1 - TERMINALS[d] for d in topo.detectors}
    if topo.discard:
        code[topo.discard] = -1 - DISCARD
    n = len(topo.units)
    kinds = np.zeros(n, dtype=np.int64)
    params = np.zeros((n, 8))
    nxt_unit = np.zeros((n, 2), dtype=np.int64)
    nxt_port = np.zeros((n, 2), dtype=np.int64)
    slot = np.full(n, -1, dtype=np.int64)
    dlm_ids = topo.dlm_units
    for i, u in enumerate(topo.units):
        if u.kind == "bs":
            kinds[i] = KIND_BS
        elif u.kind == "pbs":
            kinds[i] = KIND_PBS
        elif u.kind in ("hwp", "qwp"):
            kinds[i] = KIND_WAVEPLATE
            m = optics.hwp_matrix(u.angle) if u.kind == "hwp" else optics.qwp_matrix(u.angle)
            params[i] = [m[0, 0].real, m[0, 0].imag, m[0, 1].real, m[0, 1].imag,
                         m[1, 0].real, m[1, 0].imag, m[1, 1].real, m[1, 1].imag]
        elif u.kind == "phase":
            kinds[i] = KIND_PHASE
            t = math.radians(u.angle)
            params[i, 0], params[i, 1] = math.cos(t), math.sin(t)
        else:
            raise WiringError(f"unknown unit kind {u.kind!r}")
        if u.uid in dlm_ids:
            slot[i] = dlm_ids.index(u.uid)
        for p in range(2 if u.kind in DLM_KINDS else 1):
            dst, dport = topo.edges[(u.uid, p)]
            nxt_unit[i, p] = index[dst] if dst in index else code[dst]
            nxt_port[i, p] = dport
    return kinds, params, nxt_unit, nxt_port, slot, index[topo.source[0]], topo.source[1]


def _run_fast(topo, cfg, emitted, uniforms) -> np.ndarray:
    kinds, params, nxt_unit, nxt_port, slot, su, sp = compile_topology(topo)
    angles, index = emitted
    table = np.array([emit_pure(x, cfg.source.psi0).as_vector() for x in angles])
    out = np.empty(cfg.total_events, dtype=np.int8)
    run_kernel(kinds, params, nxt_unit, nxt_port, slot, su, sp,
               table, index, uniforms, cfg.gamma, cfg.policy == "random", out)
    return out


def detector_fraction(ds: EventDataset) -> float:
    """N0 / (N0 + N1)."""
    n = ds.n_detected
    return ds.n0 / n if n else float("nan")


__all__ = [
    "Unit", "Topology", "EraserSettings", "MziSettings", "RunConfig", "EventDataset",
    "WiringError", "build_eraser", "build_bare_mzi", "build", "run_events",
    "make_rng", "LABEL_XI",
]
