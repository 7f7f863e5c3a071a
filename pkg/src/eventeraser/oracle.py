"""Quantum-theory reference for the eraser and the bare interferometer.

States are 4-vectors ``(a0H, a0V, a1H, a1V)``: H/V amplitudes on path 0 and
path 1.  All public angles are in degrees.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

SQRT_HALF = math.sqrt(0.5)


class Visibility(NamedTuple):
    value: float
    degenerate: bool = False

    def __float__(self):
        return self.value


def _cs(theta: float) -> tuple[float, float]:
    t = math.radians(2.0 * theta)
    return math.cos(t), math.sin(t)


def bs_matrix() -> np.ndarray:
    return SQRT_HALF * np.array([[1, 0, 1j, 0],
                                 [0, 1, 0, 1j],
                                 [1j, 0, 1, 0],
                                 [0, 1j, 0, 1]])


def pbs_matrix() -> np.ndarray:
    return np.array([[1, 0, 0, 0],
                     [0, 0, 0, 1j],
                     [0, 0, 1, 0],
                     [0, 1j, 0, 0]], dtype=complex)


def hwp0_matrix(theta: float) -> np.ndarray:
    """Half-wave plate in path 0."""
    c, s = _cs(theta)
    return -1j * np.array([[c, s, 0, 0], [s, -c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def hwp1_matrix(theta: float) -> np.ndarray:
    """Half-wave plate in path 1."""
    c, s = _cs(theta)
    return -1j * np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, s], [0, 0, s, -c]])


def qwp_matrix(theta: float) -> np.ndarray:
    """Quarter-wave plate in path 1; path 0 passes unchanged."""
    c, s = _cs(theta)
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = SQRT_HALF * np.array([[1 - 1j * c, -1j * s], [-1j * s, 1 + 1j * c]])
    return m


def phase1_matrix(phi: float) -> np.ndarray:
    e = np.exp(1j * math.radians(phi))
    return np.diag([1, 1, e, e])


def path_swap_matrix() -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 2] = m[1, 3] = m[2, 0] = m[3, 1] = 1
    return m


_COMPONENTS = {
    "BS": lambda a: bs_matrix(),
    "PBS": lambda a: pbs_matrix(),
    "HWP0": hwp0_matrix,
    "HWP1": hwp1_matrix,
    "QWP": qwp_matrix,
    "Phase1": phase1_matrix,
    "Swap": lambda a: path_swap_matrix(),
}


def component_matrix(name: str, angle: Optional[float] = None) -> np.ndarray:
    try:
        make = _COMPONENTS[name]
    except KeyError:
        raise ValueError(f"unknown component {name!r}") from None
    return make(angle)


def apply_component(state, name: str, angle: Optional[float] = None) -> np.ndarray:
    return component_matrix(name, angle) @ np.asarray(state, dtype=complex)


def input_state(xi: float) -> np.ndarray:
    """Photon entering BS1 on path 0, linearly polarized at ``xi`` degrees."""
    t = math.radians(xi)
    return np.array([math.cos(t), math.sin(t), 0, 0], dtype=complex)


def eraser_pipeline(state, phi: float, theta0: float, theta1: float,
                    theta_qwp: Optional[float] = None, analyzed_port: int = 1) -> np.ndarray:
    """Propagate ``state`` through the full eraser up to and including the PBS.

    The analyzed interferometer output always enters the PBS on its input 1;
    when the analyzed output is port 0 the paths are swapped first.
    """
    a = apply_component(state, "BS")
    a = apply_component(a, "HWP0", theta0)
    a = apply_component(a, "Phase1", phi)
    a = apply_component(a, "BS")
    if analyzed_port == 0:
        a = apply_component(a, "Swap")
    elif analyzed_port != 1:
        raise ValueError("analyzed_port must be 0 or 1")
    if theta_qwp is not None:
        a = apply_component(a, "QWP", theta_qwp)
    a = apply_component(a, "HWP1", theta1)
    return apply_component(a, "PBS")


def detector_probs(state, analyzed_port: int = 1) -> tuple[float, float, float]:
    """(P_D0, P_D1, P_discard) for a PBS output state.

    ``analyzed_port`` is the PBS input carrying the analyzed beam.  D0 sits on
    PBS output 0 and D1 on output 1; amplitudes belonging to the other input
    are discarded.
    """
    p = np.abs(np.asarray(state)) ** 2
    total = float(p.sum())
    if analyzed_port == 1:
        p0, p1 = float(p[1]), float(p[2])
    elif analyzed_port == 0:
        p0, p1 = float(p[0]), float(p[3])
    else:
        raise ValueError("analyzed_port must be 0 or 1")
    return p0, p1, total - p0 - p1


def mzi_probs(phi0: float, phi1: float) -> tuple[float, float]:
    """Detector probabilities of the bare interferometer fed on path 0."""
    a = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2.0)
    b = np.diag([np.exp(1j * math.radians(phi0)), np.exp(1j * math.radians(phi1))])
    amp = a @ b @ a @ np.array([1.0, 0.0])
    p = np.abs(amp) ** 2
    return float(p[0]), float(p[1])


def _ratio(num: float, den: float) -> Visibility:
    if den == 0.0 or (abs(den) < 1e-300 and abs(num) < 1e-300):
        return Visibility(0.0, True)
    return Visibility(min(abs(num / den), 1.0), False)


def visibility_pure_no_qwp(xi: float, theta0: float, theta1: float) -> float:
    """Closed-form visibility, QWP removed, pure linear polarization ``xi``."""
    a = math.sin(math.radians(xi - 2 * theta0 + 2 * theta1))
    b = math.sin(math.radians(xi - 2 * theta1))
    return _ratio(2 * a * b, a * a + b * b).value


def visibility_mixed(beta: float, theta0: float, theta1: float) -> float:
    """Closed-form visibility, QWP removed, V/H mixture with ``p_V/p_H = tan^2(beta)``."""
    if not 0.0 < beta < 90.0:
        raise ValueError("beta must lie in (0, 90) degrees; use the pure-state formula at the ends")
    t2 = math.tan(math.radians(beta)) ** 2
    d = math.radians(2 * theta0 - 2 * theta1)
    e = math.radians(2 * theta1)
    num = 2 * math.sin(d) * math.sin(e) + 2 * t2 * math.cos(d) * math.cos(e)
    den = math.sin(d) ** 2 + math.sin(e) ** 2 + t2 * (math.cos(d) ** 2 + math.cos(e) ** 2)
    return _ratio(num, den).value


def visibility_pure_qwp0(xi: float, theta0: float, theta1: float) -> float:
    """Closed-form visibility with the QWP at 0 degrees, pure polarization ``xi``."""
    x = math.radians(xi)
    t0 = math.radians(theta0)
    t1 = math.radians(theta1)
    c1, s1 = math.cos(2 * t1) ** 2, math.sin(2 * t1) ** 2
    inner = c1 * math.sin(x - 2 * t0) * math.sin(x) - s1 * math.cos(x - 2 * t0) * math.cos(x)
    num = math.sqrt(math.sin(4 * t1) ** 2 * math.sin(2 * x - 2 * t0) ** 2 + 4 * inner ** 2)
    den = (c1 * math.sin(x - 2 * t0) ** 2 + s1 * math.cos(x - 2 * t0) ** 2
           + s1 * math.cos(x) ** 2 + c1 * math.sin(x) ** 2)
    return _ratio(num, den).value


def default_phi_grid(n: int = 32) -> np.ndarray:
    """``n`` equally spaced phases on [0, 360) degrees."""
    return 360.0 * np.arange(n) / n


def p_d0_curve(mixture: Sequence[tuple[float, float]], phi_grid, theta0: float, theta1: float,
               theta_qwp: Optional[float] = None, analyzed_port: int = 1) -> np.ndarray:
    """Mixture-weighted P_D0 at each phase; ``mixture`` is ``[(xi_deg, weight), ...]``."""
    weights = [w for _, w in mixture]
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("mixture weights must be >= 0 and sum to 1")
    out = np.zeros(len(phi_grid))
    for xi, w in mixture:
        if w == 0:
            continue
        a = input_state(xi)
        for j, phi in enumerate(phi_grid):
            out[j] += w * detector_probs(eraser_pipeline(a, phi, theta0, theta1, theta_qwp, analyzed_port))[0]
    return out


def fringe_extrema(phi_grid, values) -> tuple[float, float]:
    """Exact extrema of ``A + B cos(phi) + C sin(phi)`` fitted through the samples.

    Detector probabilities depend on the phase only through its first
    harmonic, so the fit is exact for any three or more distinct phases.
    """
    t = np.radians(np.asarray(phi_grid, dtype=float))
    design = np.column_stack([np.ones_like(t), np.cos(t), np.sin(t)])
    (a, b, c), *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    amp = math.hypot(b, c)
    return a + amp, a - amp


def visibility_from_extrema(hi: float, lo: float) -> Visibility:
    if hi + lo <= 0.0:
        return Visibility(0.0, True)
    return Visibility(min(max((hi - lo) / (hi + lo), 0.0), 1.0), False)


def sweep_visibility(mixture: Sequence[tuple[float, float]], theta0: float, theta1: float,
                     theta_qwp: Optional[float] = None, phi_grid=None,
                     analyzed_port: int = 1, method: str = "harmonic") -> Visibility:
    """Visibility of the mixture-weighted P_D0 fringe over ``phi_grid``.

    ``method="grid"`` uses the raw grid extrema, as the simulator does;
    ``"harmonic"`` uses the exact fringe extrema.
    """
    if phi_grid is None:
        phi_grid = default_phi_grid()
    phi_grid = np.asarray(phi_grid, dtype=float)
    if len(np.unique(np.mod(phi_grid, 360.0))) < 8:
        raise ValueError("phi grid needs at least 8 distinct phases")
    p = p_d0_curve(mixture, phi_grid, theta0, theta1, theta_qwp, analyzed_port)
    if method == "grid":
        hi, lo = float(p.max()), float(p.min())
    elif method == "harmonic":
        hi, lo = fringe_extrema(phi_grid, p)
        # exact zeros come back as tiny negatives
        lo = max(lo, 0.0)
        if hi < 1e-15:
            hi = lo = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return visibility_from_extrema(hi, lo)


def mixture_from_source(source) -> list[tuple[float, float]]:
    """Oracle mixture equivalent of a ``messages.SourceSpec``."""
    from .messages import Mixed, PureLinear
    kind = source.kind
    if isinstance(kind, PureLinear):
        return [(kind.xi, 1.0)]
    if isinstance(kind, Mixed):
        return [(90.0, kind.p_v), (0.0, kind.p_h)]
    raise TypeError(f"unsupported source {kind!r}")


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))
