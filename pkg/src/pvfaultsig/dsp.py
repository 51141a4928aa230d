"""Butterworth low-pass design and zero-phase filtering.

The analog magnitude target is |H(jf)| = 1/sqrt(1 + eps*(f/f_p)^(2n)).
With eps != 1 this is an ordinary Butterworth whose half-power point sits
at f_p * eps^(-1/(2n)), so the digital realization is: prewarp the cutoff,
scale it by eps^(-1/(2n)), place the n analog prototype poles, bilinear-
transform them, and pair into unity-DC-gain second-order sections. The
digital response then equals the analog target evaluated at the warped
frequency, exactly, which the tests exploit as an oracle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import sosfilt

from .errors import InvalidSpec, SeriesTooShort

DEFAULT_ORDER = 4
DEFAULT_CUTOFF_HZ = 500.0
DEFAULT_EPSILON = 1.0
DEFAULT_SAMPLE_RATE_HZ = 10_000.0


@dataclass(frozen=True)
class FilterSpec:
    order_n: int = DEFAULT_ORDER
    cutoff_hz: float = DEFAULT_CUTOFF_HZ
    epsilon: float = DEFAULT_EPSILON
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        if self.order_n < 1:
            raise InvalidSpec(f"filter order must be >= 1, got {self.order_n}")
        if self.epsilon <= 0:
            raise InvalidSpec(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise InvalidSpec(
                f"cutoff {self.cutoff_hz} Hz must lie in (0, Nyquist={self.sample_rate_hz / 2} Hz)")


@dataclass(frozen=True)
class FilterCoeffs:
    """Cascade of second-order sections (b0, b1, b2, a1, a2), a0 = 1."""

    sections: tuple[tuple[float, float, float, float, float], ...]
    overall_gain: float

    def __post_init__(self):
        for b0, b1, b2, a1, a2 in self.sections:
            # stability: roots of z^2 + a1 z + a2 inside the unit circle
            roots = np.roots([1.0, a1, a2])
            if np.any(np.abs(roots) >= 1.0):
                raise InvalidSpec(f"unstable section (a1={a1}, a2={a2})")

    @property
    def order(self) -> int:
        return sum(1 if a2 == 0.0 and b2 == 0.0 else 2
                   for b0, b1, b2, a1, a2 in self.sections)


def magnitude_response(spec: FilterSpec, f: float) -> float:
    """Analog prototype target gain at frequency f (Hz)."""
    return 1.0 / math.sqrt(1.0 + spec.epsilon * (f / spec.cutoff_hz) ** (2 * spec.order_n))


def design_butterworth(spec: FilterSpec) -> FilterCoeffs:
    """Digital SOS cascade matching the analog target after prewarping.

    DC gain is exactly 1 (each section normalized); the single-pass gain at
    cutoff_hz is 1/sqrt(1 + eps) up to float rounding.
    """
    n = spec.order_n
    fs = spec.sample_rate_hz
    # prewarp so the digital response at cutoff_hz hits the analog target there
    warped = 2.0 * fs * math.tan(math.pi * spec.cutoff_hz / fs)
    omega_c = warped * spec.epsilon ** (-1.0 / (2.0 * n))

    # analog prototype poles, left half-plane, conjugate-symmetric
    poles = [omega_c * cmath.exp(1j * math.pi * (2.0 * k + n - 1.0) / (2.0 * n))
             for k in range(1, n + 1)]

    def bilinear(p: complex) -> complex:
        return (2.0 * fs + p) / (2.0 * fs - p)

    sections: list[tuple[float, float, float, float, float]] = []
    # conjugate pairs -> biquads with both zeros at z = -1
    for k in range(n // 2):
        pd = bilinear(poles[k])
        a1 = -2.0 * pd.real
        a2 = abs(pd) ** 2
        g = (1.0 + a1 + a2) / 4.0
        sections.append((g, 2.0 * g, g, a1, a2))
    if n % 2:
        pd = bilinear(poles[n // 2])  # the real pole
        a1 = -pd.real
        g = (1.0 + a1) / 2.0
        sections.append((g, g, 0.0, a1, 0.0))

    return FilterCoeffs(tuple(sections), overall_gain=1.0)


def digital_magnitude(coeffs: FilterCoeffs, f: float, sample_rate_hz: float) -> float:
    """Single-pass magnitude of the realized digital filter at f (Hz)."""
    z1 = cmath.exp(-2j * math.pi * f / sample_rate_hz)
    z2 = z1 * z1
    h = complex(coeffs.overall_gain)
    for b0, b1, b2, a1, a2 in coeffs.sections:
        h *= (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    return abs(h)


def _sos_array(coeffs: FilterCoeffs) -> np.ndarray:
    sos = np.zeros((len(coeffs.sections), 6))
    for i, (b0, b1, b2, a1, a2) in enumerate(coeffs.sections):
        sos[i] = (b0, b1, b2, 1.0, a1, a2)
    return sos


def _steady_state_zi(coeffs: FilterCoeffs) -> np.ndarray:
    """Per-section direct-form-II-transposed state for a unit-step input.

    Starting from zi * x[0] makes any constant series an exact fixed point
    (no startup transient). Valid because every designed section has unit DC
    gain, so each stage of the cascade sees a unit-amplitude step.
    """
    zi = np.zeros((len(coeffs.sections), 2))
    for i, (b0, b1, b2, a1, a2) in enumerate(coeffs.sections):
        g = (b0 + b1 + b2) / (1.0 + a1 + a2)  # section DC gain (== 1 by design)
        zi[i, 0] = g - b0
        zi[i, 1] = b2 - a2 * g
    return zi


def filter_zero_phase(coeffs: FilterCoeffs, series) -> np.ndarray:
    """Forward-backward filtering: zero net phase, magnitude squared.

    Edges are mirror-padded (edge sample not repeated) by 3*(2*order)
    samples; padding is stripped from the output.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    pad = 3 * (2 * coeffs.order)
    if len(x) <= pad:
        raise SeriesTooShort(f"series length {len(x)} must exceed {pad}")

    xp = np.concatenate([x[pad:0:-1], x, x[-2:-pad - 2:-1]])
    sos = _sos_array(coeffs)
    zi = _steady_state_zi(coeffs)

    y, _ = sosfilt(sos, xp, zi=zi * xp[0])
    y = y[::-1]
    y, _ = sosfilt(sos, y, zi=zi * y[0])
    y = y[::-1]

    out = y[pad:pad + len(x)]
    gain = coeffs.overall_gain ** 2  # one factor per pass
    if gain != 1.0:
        out = out * gain
    return np.ascontiguousarray(out)


def filter_table_matrix(coeffs: FilterCoeffs, matrix: np.ndarray) -> np.ndarray:
    """Zero-phase filter every row of a (signals, samples) matrix."""
    return np.stack([filter_zero_phase(coeffs, row) for row in matrix])
