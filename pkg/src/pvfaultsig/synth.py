"""Deterministic GPVS-like waveform generator for desk-scale testing.

The recipes are simple transforms keyed to each operating state's
qualitative behavior (IGBT half-cycle loss, sensor offset, grid dips,
irradiance loss, converter-control wobble and settle); they are a test
scaffold, not a physical PV model. Severities default to levels well above
the noise floor so the eight classes stay separable by construction, and
every cycle of a faulty state is affected (grid dips are injected once per
cycle) so any 200-sample window carries the fault.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .ingest import N_STATES, SIGNAL_NAMES, RawRecordTable, from_matrix
from .util import STREAM_SYNTH, derive_rng

V_PHASE_AMP = 1.0
I_PHASE_AMP = 0.8
VDC_LEVEL = 400.0
VPV_LEVEL = 300.0
IPV_LEVEL = 8.0

STATE_NAMES = (
    "normal",
    "inverter_fault",
    "feedback_sensor_fault",
    "grid_disturbance",
    "partial_shading",
    "open_circuit",
    "controller_gain_fault",
    "converter_time_constant_fault",
)

DEFAULT_NOISE_STD: dict[str, float] = {
    "Vpv": 0.5, "Ipv": 0.02, "Vdc": 0.5,
    "ia": 0.01, "ib": 0.01, "ic": 0.01,
    "va": 0.01, "vb": 0.01, "vc": 0.01,
    "Iabc_mag": 0.01, "Vabc_mag": 0.01,
    "f_i": 0.02, "f_v": 0.02,
}


@dataclass(frozen=True)
class Severity:
    """Per-fault perturbation strengths; defaults dominate the noise floor."""

    f2_voltage_offset: float = 0.3
    f3_dip_scale: float = 0.6
    f3_dip_min_samples: int = 10
    f3_dip_max_samples: int = 30
    f4_ipv_scale: float = 0.75
    f5_ipv_scale: float = 0.85
    f6_osc_amp: float = 10.0
    f6_osc_hz: float = 5.0
    f7_settle_amp: float = 100.0
    f7_tau_fraction: float = 0.5  # of the capture duration


@dataclass(frozen=True)
class SynthConfig:
    n_cycles: int = 300
    sample_rate_hz: float = 10_000.0
    fundamental_hz: float = 50.0
    batch_len: int = 200
    noise_std: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_NOISE_STD))
    seed: int = 0
    severity: Severity = Severity()

    def __post_init__(self):
        if self.n_cycles < 1:
            raise InvalidConfig("n_cycles must be >= 1")
        if self.sample_rate_hz <= 0 or self.fundamental_hz <= 0:
            raise InvalidConfig("rates must be positive")
        samples_per_cycle = self.sample_rate_hz / self.fundamental_hz
        if abs(samples_per_cycle - self.batch_len) > 1e-9:
            raise InvalidConfig(
                f"sample_rate/fundamental = {samples_per_cycle} must equal batch_len {self.batch_len}")
        for name, sd in self.noise_std.items():
            if name not in SIGNAL_NAMES:
                raise InvalidConfig(f"unknown signal {name!r} in noise_std")
            if sd < 0:
                raise InvalidConfig(f"noise_std[{name!r}] must be >= 0")


def generate(config: SynthConfig, state: int) -> RawRecordTable:
    """One labeled waveform table; identical for identical (config, state)."""
    if not 0 <= state < N_STATES:
        raise InvalidConfig(f"state must lie in 0..{N_STATES - 1}, got {state}")
    L = config.batch_len
    n = config.n_cycles * L
    fs = config.sample_rate_hz
    sev = config.severity
    rng = derive_rng(config.seed, STREAM_SYNTH, state)

    # one exact cycle, tiled: cycles are bit-identical before fault/noise
    phase = 2.0 * np.pi * np.arange(L) / L
    va = V_PHASE_AMP * np.tile(np.sin(phase), config.n_cycles)
    vb = V_PHASE_AMP * np.tile(np.sin(phase - 2.0 * np.pi / 3.0), config.n_cycles)
    vc = V_PHASE_AMP * np.tile(np.sin(phase + 2.0 * np.pi / 3.0), config.n_cycles)
    ia = (I_PHASE_AMP / V_PHASE_AMP) * va.copy()
    ib = (I_PHASE_AMP / V_PHASE_AMP) * vb.copy()
    ic = (I_PHASE_AMP / V_PHASE_AMP) * vc.copy()
    vdc = np.full(n, VDC_LEVEL)
    vpv = np.full(n, VPV_LEVEL)
    ipv = np.full(n, IPV_LEVEL)
    t = np.arange(n) / fs

    if state == 1:
        # IGBT failure: the negative half-cycle of one phase current is lost
        ia = np.where(ia < 0.0, 0.0, ia)
    elif state == 2:
        # feedback sensor offset on one reported phase voltage
        va = va + sev.f2_voltage_offset
    elif state == 3:
        # one short grid dip per cycle, random offset and length
        for c in range(config.n_cycles):
            dip_len = int(rng.integers(sev.f3_dip_min_samples, sev.f3_dip_max_samples + 1))
            start = c * L + int(rng.integers(0, L - dip_len + 1))
            sl = slice(start, start + dip_len)
            va[sl] *= sev.f3_dip_scale
            vb[sl] *= sev.f3_dip_scale
            vc[sl] *= sev.f3_dip_scale
    elif state == 4:
        ipv = ipv * sev.f4_ipv_scale
    elif state == 5:
        ipv = ipv * sev.f5_ipv_scale
    elif state == 6:
        # PI gain fault: low-frequency wobble on the DC link
        vdc = vdc + sev.f6_osc_amp * np.sin(2.0 * np.pi * sev.f6_osc_hz * t)
    elif state == 7:
        # PI time-constant fault: slow exponential settle on the DC link
        tau = (n / fs) * sev.f7_tau_fraction
        vdc = vdc + sev.f7_settle_amp * np.exp(-t / tau)

    iabc_mag = np.sqrt((ia * ia + ib * ib + ic * ic) * (2.0 / 3.0))
    vabc_mag = np.sqrt((va * va + vb * vb + vc * vc) * (2.0 / 3.0))
    f_i = np.full(n, config.fundamental_hz)
    f_v = np.full(n, config.fundamental_hz)

    signals = {
        "Vpv": vpv, "Ipv": ipv, "Vdc": vdc,
        "ia": ia, "ib": ib, "ic": ic,
        "va": va, "vb": vb, "vc": vc,
        "Iabc_mag": iabc_mag, "Vabc_mag": vabc_mag,
        "f_i": f_i, "f_v": f_v,
    }
    for name in SIGNAL_NAMES:  # fixed draw order keeps output seed-stable
        sd = config.noise_std.get(name, 0.0)
        if sd > 0.0:
            signals[name] = signals[name] + rng.normal(0.0, sd, n)

    matrix = np.stack([signals[name] for name in SIGNAL_NAMES])
    return from_matrix(matrix, label=state, sample_period_s=1.0 / fs,
                       source_name=f"synthetic:{STATE_NAMES[state]}")


def generate_all(config: SynthConfig) -> list[RawRecordTable]:
    return [generate(config, state) for state in range(N_STATES)]
