"""Event-based optical components.

BS and PBS units are three-stage processors: the DLM input stage, a
transformation stage producing two candidate 4-vectors ``w`` (channel 0) and
``z`` (channel 1), and an output stage that picks a channel.  Waveplates,
phase shifters and detectors are passive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dlm import DlmState
from .messages import Message, norm2, _normalized as _pair

SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class UnitOutcome:
    out_channel: int
    out_message: Message


def _terms(state: DlmState):
    (ch0, sh0), (ch1, sh1) = state.reg_h
    (cv0, sv0), (cv1, sv1) = state.reg_v
    (cp0, sp0), (cp1, sp1) = state.reg_p
    r0, r1 = math.sqrt(state.x[0]), math.sqrt(state.x[1])
    # polarization-weighted amplitude of each clock on each channel
    h0, h1 = cp0 * r0, cp1 * r1
    v0, v1 = sp0 * r0, sp1 * r1
    return ch0, sh0, ch1, sh1, cv0, sv0, cv1, sv1, h0, h1, v0, v1


def bs_transform(state: DlmState) -> tuple[tuple, tuple]:
    """The BS transformation stage; returns ``(w, z)``, both unnormalized.

    ``w`` and ``z`` are the first and second halves of the eight-vector
    without the overall 1/sqrt(2).
    """
    ch0, sh0, ch1, sh1, cv0, sv0, cv1, sv1, h0, h1, v0, v1 = _terms(state)
    w = (
        ch0 * h0 - sh1 * h1,
        ch1 * h1 + sh0 * h0,
        cv0 * v0 - sv1 * v1,
        cv1 * v1 + sv0 * v0,
    )
    z = (
        ch1 * h1 - sh0 * h0,
        ch0 * h0 + sh1 * h1,
        cv1 * v1 - sv0 * v0,
        cv0 * v0 + sv1 * v1,
    )
    return w, z


def pbs_transform(state: DlmState) -> tuple[tuple, tuple]:
    ch0, sh0, ch1, sh1, cv0, sv0, cv1, sv1, h0, h1, v0, v1 = _terms(state)
    w = (ch0 * h0, sh0 * h0, -sv1 * v1, cv1 * v1)
    z = (ch1 * h1, sh1 * h1, -sv0 * v0, cv0 * v0)
    return w, z


def _sq(w) -> float:
    return w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]


def assemble(w) -> Message:
    """Normalize a transformation 4-vector into an outgoing message."""
    s0 = norm2(w[0], w[1])
    s1 = norm2(w[2], w[3])
    s2 = norm2(s0, s1)
    return Message(_pair(w[0], w[1], s0), _pair(w[2], w[3], s1), _pair(s0, s1, s2))


def sq_norms(w, z) -> tuple[float, float]:
    return float(_sq(w)), float(_sq(z))


class RandomSelector:
    """Output stage driven by uniform pseudo-random numbers."""

    name = "random"

    def choose(self, s2sq: float, total: float, r: float) -> int:
        return 0 if s2sq > total * r else 1


class RoundRobinSelector:
    """Deterministic output stage.

    Accumulates the channel-0 probability and emits on channel 0 whenever the
    running sum crosses one half, so the long-run channel frequencies follow
    the probabilities without using random numbers.
    """

    name = "round-robin"

    def __init__(self):
        self.acc = 0.0

    def choose(self, s2sq: float, total: float, r: float = 0.0) -> int:
        self.acc += s2sq / total
        if self.acc >= 0.5:
            self.acc -= 1.0
            return 0
        return 1


def make_selector(policy: str):
    if policy == "random":
        return RandomSelector()
    if policy == "round-robin":
        return RoundRobinSelector()
    raise ValueError(f"unknown output-stage policy {policy!r}")


def _uniform(rng) -> float:
    if isinstance(rng, np.random.Generator):
        return float(rng.random())
    return float(rng)


def _process(state, channel, msg, rng, transform, total, selector):
    state.update(channel, msg)
    w, z = transform(state)
    s2sq, t2sq = sq_norms(w, z)
    if selector is None:
        selector = RandomSelector()
    r = _uniform(rng) if isinstance(selector, RandomSelector) else 0.0
    if total is None:
        total = s2sq + t2sq
    k = selector.choose(s2sq, total, r)
    return UnitOutcome(k, assemble(w if k == 0 else z))


def bs_process(state: DlmState, channel: int, msg: Message, rng, selector=None) -> UnitOutcome:
    """Beam splitter: channel 0 iff ``s2^2 > 2r``.

    ``rng`` is a numpy Generator or an already drawn uniform in [0, 1).
    """
    return _process(state, channel, msg, rng, bs_transform, 2.0, selector)


def pbs_process(state: DlmState, channel: int, msg: Message, rng, selector=None) -> UnitOutcome:
    """Polarizing beam splitter: channel 0 iff ``s2^2 > (s2^2 + t2^2) r``."""
    return _process(state, channel, msg, rng, pbs_transform, None, selector)


def hwp_matrix(theta: float) -> np.ndarray:
    """2x2 half-wave plate matrix, optical axis at ``theta`` degrees."""
    t = math.radians(2.0 * theta)
    c, s = math.cos(t), math.sin(t)
    return -1j * np.array([[c, s], [s, -c]])


def qwp_matrix(theta: float) -> np.ndarray:
    t = math.radians(2.0 * theta)
    c, s = math.cos(t), math.sin(t)
    return SQRT_HALF * np.array([[1 - 1j * c, -1j * s], [-1j * s, 1 + 1j * c]])


def _apply2(msg: Message, m: np.ndarray) -> Message:
    a_h, a_v = msg.amplitudes()
    b_h = m[0, 0] * a_h + m[0, 1] * a_v
    b_v = m[1, 0] * a_h + m[1, 1] * a_v
    return Message.from_amplitudes(complex(b_h), complex(b_v))


def hwp_apply(msg: Message, theta: float) -> Message:
    return _apply2(msg, hwp_matrix(theta))


def qwp_apply(msg: Message, theta: float) -> Message:
    return _apply2(msg, qwp_matrix(theta))


def _rotate(p, c, s):
    return (c * p[0] - s * p[1], s * p[0] + c * p[1])


def phase_apply(msg: Message, phi: float) -> Message:
    """Advance both clocks by ``phi`` degrees."""
    t = math.radians(phi)
    c, s = math.cos(t), math.sin(t)
    return Message(_rotate(msg.h_clock, c, s), _rotate(msg.v_clock, c, s), msg.pol)


class Detector:
    """Ideal counter: registers every arriving messenger."""

    def __init__(self, name: str = "D"):
        self.name = name
        self.count = 0

    def detect(self, msg: Message | None = None) -> "Detector":
        self.count += 1
        return self


def detect(detector: Detector, msg: Message | None = None) -> Detector:
    return detector.detect(msg)
