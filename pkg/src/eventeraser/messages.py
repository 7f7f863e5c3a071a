"""Messengers, sources and the mixed-state group scheduler.

A message is three unit 2-vectors: the H clock ``(cos psiH, sin psiH)``, the
V clock ``(cos psiV, sin psiV)`` and the polarization vector
``(cos xi, sin xi)``.  Clock pairs whose polarization weight is zero are
stored as ``(1, 0)`` so every pair stays on the unit circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

Pair = tuple[float, float]
Label = Literal["V", "H"]

UNIT_TOL = 1e-12
# below this squared norm the sum of squares loses precision to underflow
TINY_SQ = 1e-280
TINY_NORM = 1e-140


def cosd(deg: float) -> float:
    """Cosine of an angle in degrees, exact at multiples of 90."""
    r = math.fmod(deg, 360.0)
    if r < 0:
        r += 360.0
    exact = {0.0: 1.0, 90.0: 0.0, 180.0: -1.0, 270.0: 0.0}
    if r in exact:
        return exact[r]
    return math.cos(math.radians(deg))


def sind(deg: float) -> float:
    """Sine of an angle in degrees, exact at multiples of 90."""
    return cosd(deg - 90.0)


def _normalized(a: float, b: float, norm: float) -> Pair:
    """``(a, b) / norm``, or ``(1, 0)`` for a zero-weight pair."""
    if norm == 0.0:
        return (1.0, 0.0)
    if norm < TINY_NORM:
        return (a / norm, b / norm)
    inv = 1.0 / norm
    return (a * inv, b * inv)


def norm2(a: float, b: float) -> float:
    """Length of ``(a, b)``; falls back to ``hypot`` near underflow."""
    q = a * a + b * b
    if q < TINY_SQ:
        return math.hypot(a, b)
    return math.sqrt(q)


def unit_pair(angle_rad: float) -> Pair:
    return (math.cos(angle_rad), math.sin(angle_rad))


@dataclass(frozen=True)
class Message:
    h_clock: Pair = (1.0, 0.0)
    v_clock: Pair = (1.0, 0.0)
    pol: Pair = (1.0, 0.0)

    def as_vector(self) -> np.ndarray:
        """The six-component message vector (H clock, V clock, polarization)."""
        return np.array([*self.h_clock, *self.v_clock, *self.pol])

    @classmethod
    def from_vector(cls, y) -> "Message":
        y = [float(v) for v in y]
        return cls((y[0], y[1]), (y[2], y[3]), (y[4], y[5]))

    def amplitudes(self) -> tuple[complex, complex]:
        """Equivalent complex polarization amplitudes ``(aH, aV)``."""
        c, s = self.pol
        return (c * complex(*self.h_clock), s * complex(*self.v_clock))

    @classmethod
    def from_amplitudes(cls, a_h: complex, a_v: complex) -> "Message":
        """Re-encode a complex pair; zero-modulus components get clock (1, 0)."""
        mh = norm2(a_h.real, a_h.imag)
        mv = norm2(a_v.real, a_v.imag)
        norm = norm2(mh, mv)
        if norm == 0.0:
            raise ValueError("cannot encode a zero amplitude pair")
        return cls(_normalized(a_h.real, a_h.imag, mh), _normalized(a_v.real, a_v.imag, mv),
                   _normalized(mh, mv, norm))

    def is_valid(self, tol: float = UNIT_TOL) -> bool:
        return all(abs(math.hypot(*p) - 1.0) <= tol
                   for p in (self.h_clock, self.v_clock, self.pol))


@dataclass(frozen=True)
class PureLinear:
    """Linearly polarized pure source; ``xi`` in degrees (0 = H, 90 = V)."""
    xi: float


@dataclass(frozen=True)
class Mixed:
    """Incoherent V/H mixture emitted in groups of ``n_v`` or ``n_h`` messages."""
    p_v: float
    p_h: float
    n_v: int = 200
    n_h: int = 200

    def __post_init__(self):
        if self.p_v < 0 or self.p_h < 0 or abs(self.p_v + self.p_h - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must be >= 0 and sum to 1, got {self.p_v}, {self.p_h}")
        if self.n_v < 1 or self.n_h < 1:
            raise ValueError("group lengths must be >= 1")

    @property
    def beta(self) -> float:
        """Mixing angle in degrees, ``tan^2(beta) = p_v / p_h``."""
        return math.degrees(math.atan2(math.sqrt(self.p_v), math.sqrt(self.p_h)))


@dataclass(frozen=True)
class SourceSpec:
    kind: PureLinear | Mixed
    psi0: float = 0.0  # initial clock phase, degrees


def emit_pure(xi: float, psi0: float = 0.0) -> Message:
    """Message of a linearly polarized photon at ``xi`` degrees."""
    clock = (cosd(psi0), sind(psi0))
    c, s = cosd(xi), sind(xi)
    h = clock if c != 0.0 else (1.0, 0.0)
    v = clock if s != 0.0 else (1.0, 0.0)
    return Message(h, v, (c, s))


LABEL_XI = {"V": 90.0, "H": 0.0}


def next_group_label(mix: Mixed, u: float) -> Label:
    """Pick the next group's state from a uniform draw ``u`` in [0, 1)."""
    return "V" if u < mix.p_v else "H"


def draw_group_label(mix: Mixed, rng: np.random.Generator) -> Label:
    return next_group_label(mix, rng.random())


def group_schedule(mix: Mixed, n_events: int, uniforms) -> list[tuple[Label, int]]:
    """Split ``n_events`` into (label, length) groups.

    One uniform is consumed per group; the last group is cut short when the
    budget runs out.
    """
    out = []
    left = n_events
    for u in uniforms:
        if left <= 0:
            break
        label = next_group_label(mix, u)
        n = mix.n_v if label == "V" else mix.n_h
        out.append((label, min(n, left)))
        left -= n
    if left > 0:
        raise RuntimeError("ran out of group draws before the event budget was filled")
    return out


def max_groups(mix: Mixed, n_events: int) -> int:
    """Upper bound on the number of groups needed for ``n_events``."""
    return -(-n_events // min(mix.n_v, mix.n_h))


def source_events(source: SourceSpec, n_events: int, group_uniforms=None) -> tuple[list[float], np.ndarray]:
    """Per-event emission as ``(angles, index)``: event ``l`` has angle ``angles[index[l]]``."""
    if isinstance(source.kind, PureLinear):
        return [float(source.kind.xi)], np.zeros(n_events, dtype=np.int8)
    sched = group_schedule(source.kind, n_events, group_uniforms)
    labels = np.array([0 if lab == "V" else 1 for lab, _ in sched], dtype=np.int8)
    lengths = np.array([n for _, n in sched], dtype=np.int64)
    return [LABEL_XI["V"], LABEL_XI["H"]], np.repeat(labels, lengths)


def source_xi(source: SourceSpec, n_events: int, group_uniforms=None) -> np.ndarray:
    """Per-event polarization angle (degrees) emitted by ``source``."""
    angles, index = source_events(source, n_events, group_uniforms)
    return np.asarray(angles)[index]


def iter_messages(source: SourceSpec, n_events: int, group_uniforms=None) -> Iterator[Message]:
    cache: dict[float, Message] = {}
    for xi in source_xi(source, n_events, group_uniforms):
        m = cache.get(xi)
        if m is None:
            m = cache[xi] = emit_pure(xi, source.psi0)
        yield m
