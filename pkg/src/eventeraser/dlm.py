"""Deterministic learning machine: the adaptive input stage of BS and PBS units."""
from __future__ import annotations

from .messages import Message, Pair


class DlmState:
    """Six message registers plus the channel-frequency vector ``x``.

    The registers for channel ``k`` hold the H clock, V clock and polarization
    of the last message that arrived on ``k``.  ``x`` is updated by
    exponential smoothing, ``x <- gamma*x + (1-gamma)*v`` with ``v`` the unit
    vector of the arrival channel.
    """

    __slots__ = ("reg_h", "reg_v", "reg_p", "x", "gamma")

    def __init__(self, gamma: float):
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        self.gamma = float(gamma)
        self.reg_h: list[Pair] = [(1.0, 0.0), (1.0, 0.0)]
        self.reg_v: list[Pair] = [(1.0, 0.0), (1.0, 0.0)]
        self.reg_p: list[Pair] = [(1.0, 0.0), (1.0, 0.0)]
        self.x: tuple[float, float] = (0.5, 0.5)

    def update(self, channel: int, msg: Message) -> "DlmState":
        if channel not in (0, 1):
            raise ValueError(f"channel must be 0 or 1, got {channel}")
        self.reg_h[channel] = msg.h_clock
        self.reg_v[channel] = msg.v_clock
        self.reg_p[channel] = msg.pol
        g = self.gamma
        x0, x1 = self.x
        if channel == 0:
            self.x = (g * x0 + (1.0 - g), g * x1)
        else:
            self.x = (g * x0, g * x1 + (1.0 - g))
        return self

    def numbers(self) -> list[float]:
        """The complete stored state, fourteen numbers."""
        out: list[float] = []
        for reg in (self.reg_h, self.reg_v, self.reg_p):
            for pair in reg:
                out.extend(pair)
        out.extend(self.x)
        return out

    def __repr__(self):
        return f"DlmState(x=({self.x[0]:.6g}, {self.x[1]:.6g}), gamma={self.gamma})"


def dlm_init(gamma: float) -> DlmState:
    return DlmState(gamma)


def dlm_update(state: DlmState, channel: int, msg: Message) -> DlmState:
    return state.update(channel, msg)


def periodic_limit(pattern, gamma: float) -> tuple[float, float]:
    """Stationary ``x`` reached at the end of each period of a repeated channel pattern."""
    k = len(pattern)
    f0 = sum(gamma ** (k - j - 1) for j, c in enumerate(pattern) if c == 0)
    f1 = sum(gamma ** (k - j - 1) for j, c in enumerate(pattern) if c == 1)
    scale = (1.0 - gamma) / (1.0 - gamma ** k)
    return (scale * f0, scale * f1)
