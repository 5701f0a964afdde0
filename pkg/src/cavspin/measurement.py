"""Dispersive cavity probing of the collective spin.

A composite measurement is two probe pulses around an ideal pi pulse (spin
echo). Each transmitted photon advances an atom's clock phase by
Omega_i / kappa_t; the echo cancels the common part, leaving a relative
imprint proportional to the measured population difference:

    phi_i = (4 Omega_bar n_p / (kappa_t kappa)) Omega_i S_z

Transmission is linearized around the probe detuning of half a linewidth,
n = n_p (1 + 2 dw / kappa); an exact-Lorentzian mode exists for validation.
Photon counting is Poisson on transmission and binomially thinned by the
detection efficiency.

Sign bookkeeping: S_z always refers to the state after the first composite
measurement. The labels of the two shifts swap between the first and second
measurement, so both return +Omega_bar S_z in the noiseless limit. The state
returned by a second-measurement call stays in that same bookkeeping basis
(its trailing pi pulse is folded in), which is what the population formula
P_up = 1/2 - s_z of the readout expects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import CavityConfig, ConfigurationError, EnsembleState, TrapConfig


@dataclass
class ProbeConfig:
    """Probe pulse parameters.

    `photons_per_pulse` is the mean transmitted number n_p per probe pulse;
    the mean detected count per composite measurement is 2 * eta * n_p.
    `detuning` defaults to +kappa/2 (None). Disabling `shot_noise` makes
    counts deterministic, for noiseless-limit checks.
    """

    pulse_duration: float               # s
    photons_per_pulse: float            # mean transmitted per pulse, n_p
    detection_efficiency: float         # eta in (0, 1]
    detuning: float | None = None       # rad/s; None -> kappa/2
    shot_noise: bool = True
    lineshape: str = "linear"           # "linear" | "lorentzian"

    def validate(self):
        if not (0.0 < self.detection_efficiency <= 1.0):
            raise ConfigurationError("probe.detection_efficiency must be in (0, 1]")
        if self.photons_per_pulse <= 0:
            raise ConfigurationError("probe.photons_per_pulse must be positive")
        if self.pulse_duration <= 0:
            raise ConfigurationError("probe.pulse_duration must be positive")
        if self.lineshape not in ("linear", "lorentzian"):
            raise ConfigurationError(f"unknown lineshape {self.lineshape!r}")
        return self

    def detuning_value(self, cav: CavityConfig) -> float:
        return 0.5 * cav.linewidth_fwhm if self.detuning is None else self.detuning

    def mean_detected_per_measurement(self) -> float:
        return 2.0 * self.detection_efficiency * self.photons_per_pulse


@dataclass
class PulseResult:
    expected_transmitted: float
    transmitted: float
    detected: float
    shift_true: float            # rad/s, sum_i Omega_i s_z,i during the pulse
    shift_estimate: float        # rad/s, inferred from the detected count
    linearization_warning: bool


@dataclass
class MeasurementRecord:
    """One composite cavity measurement."""

    delta_omega_plus: float      # rad/s
    delta_omega_minus: float     # rad/s
    detected_plus: float
    detected_minus: float
    m_value: float               # rad/s, (delta_omega_plus - delta_omega_minus) / 2
    psn_variance: float          # (rad/s)^2, kappa^2 / (4 n_detected)
    timestamp: float = 0.0       # s
    linearization_warning: bool = False

    @property
    def detected_total(self):
        return self.detected_plus + self.detected_minus


def prepare_css(state: EnsembleState, direction=(1.0, 0.0, 0.0)) -> EnsembleState:
    """Point every alive spin along `direction` with length 1/2 (coherent state)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    state.spin[:] = 0.0
    state.spin[state.alive] = 0.5 * d
    return state


def draw_sz(n_atoms: int, rng, method: str = "auto") -> float:
    """Projection-noise draw of the collective S_z: mean 0, variance N/4.

    Rounded Gaussian above 100 atoms, exact symmetric binomial below.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if method == "auto":
        method = "binomial" if n_atoms < 100 else "gaussian"
    if method == "binomial":
        n_up = rng.binomial(n_atoms, 0.5)
    elif method == "gaussian":
        n_up = int(np.clip(round(n_atoms / 2 + rng.normal() * math.sqrt(n_atoms) / 2),
                           0, n_atoms))
    else:
        raise ValueError(f"unknown draw method {method!r}")
    return n_up - n_atoms / 2.0


def set_common_sz(state: EnsembleState, sz_total: float) -> EnsembleState:
    """Give every alive atom the same s_z = S_z/N, in phase on the equator."""
    n = state.n_alive
    if n == 0:
        return state
    sz = sz_total / n
    if abs(sz) > 0.5 + 1e-12:
        raise ValueError("requested S_z exceeds N/2")
    sz = min(max(sz, -0.5), 0.5)
    sx = 0.5 * math.sqrt(max(0.0, 1.0 - (2.0 * sz) ** 2))
    state.spin[state.alive] = (sx, 0.0, sz)
    return state


def project_sz(state: EnsembleState, rng, forced: float | None = None,
               method: str = "auto") -> float:
    """Semiclassical surrogate of the projective S_z measurement.

    Draws (or takes) an outcome and collapses all alive atoms onto the common
    s_z = S_z/N, phases aligned. Returns the outcome.
    """
    n = state.n_alive
    if n < 1:
        raise ValueError("cannot project an empty ensemble")
    sz_total = draw_sz(n, rng, method=method) if forced is None else float(forced)
    set_common_sz(state, sz_total)
    return sz_total


def cavity_shift(state: EnsembleState, cav: CavityConfig, trap: TrapConfig,
                 tau_p: float | None = None) -> float:
    """Dispersive shift sum_i Omega_i s_z,i over alive atoms (0 for none).

    Uses cached effective couplings when present.
    """
    if state.n_total == 0 or state.n_alive == 0:
        return 0.0
    if state.coupling is None:
        from .ensemble import attach_couplings
        if tau_p is None:
            raise ValueError("tau_p required to compute couplings on the fly")
        attach_couplings(state, cav, trap, tau_p)
    a = state.alive
    return float(np.dot(state.coupling[a], state.spin[a, 2]))


def _transmission_expected(shift, probe: ProbeConfig, cav: CavityConfig):
    kappa = cav.linewidth_fwhm
    delta = probe.detuning_value(cav)
    n_p = probe.photons_per_pulse
    if probe.lineshape == "linear":
        slope = (8.0 * delta / kappa ** 2) / (1.0 + (2.0 * delta / kappa) ** 2)
        return n_p * (1.0 + slope * shift)
    lorentz = lambda x: 1.0 / (1.0 + (2.0 * x / kappa) ** 2)
    return n_p * lorentz(delta - shift) / lorentz(delta)


def _invert_transmission(n_detected, probe: ProbeConfig, cav: CavityConfig):
    kappa = cav.linewidth_fwhm
    delta = probe.detuning_value(cav)
    n_t_est = n_detected / probe.detection_efficiency
    n_p = probe.photons_per_pulse
    if probe.lineshape == "linear":
        slope = (8.0 * delta / kappa ** 2) / (1.0 + (2.0 * delta / kappa) ** 2)
        return (n_t_est / n_p - 1.0) / slope
    # exact inversion on the near-resonant branch; transmission above the
    # cavity peak clamps to the peak
    peak = n_p * (1.0 + (2.0 * delta / kappa) ** 2)
    arg = max(peak / max(n_t_est, 1e-300) - 1.0, 0.0)
    return delta - 0.5 * kappa * math.sqrt(arg)


def probe_pulse(state: EnsembleState, probe: ProbeConfig, cav: CavityConfig,
                trap: TrapConfig, rng, sign: float = 1.0,
                imprint: bool = True) -> PulseResult:
    """One probe transmission: count photons, imprint the AC-Stark phase.

    The phase advance per atom is sign * (Omega_i / kappa_t) * n_t with n_t
    the realized transmitted count; the estimate of the shift comes from the
    detected count alone.
    """
    probe.validate()
    shift = cavity_shift(state, cav, trap, probe.pulse_duration)
    expected = _transmission_expected(shift, probe, cav)
    warn = abs(2.0 * shift / cav.linewidth_fwhm) > 0.5
    if probe.shot_noise:
        transmitted = float(rng.poisson(max(expected, 0.0)))
        detected = float(rng.binomial(int(transmitted), probe.detection_efficiency))
    else:
        transmitted = expected
        detected = probe.detection_efficiency * expected
    estimate = _invert_transmission(detected, probe, cav)
    if imprint and state.n_alive > 0:
        phi = sign * (state.coupling / cav.transmission_rate) * transmitted
        _rotate_z(state, phi)
    return PulseResult(expected_transmitted=expected, transmitted=transmitted,
                       detected=detected, shift_true=shift,
                       shift_estimate=estimate, linearization_warning=warn)


def _rotate_z(state: EnsembleState, phi: np.ndarray):
    """Advance equatorial phases by per-atom angles phi (alive atoms only)."""
    a = state.alive
    c, s = np.cos(phi[a]), np.sin(phi[a])
    sx = state.spin[a, 0]
    sy = state.spin[a, 1]
    state.spin[a, 0] = c * sx - s * sy
    state.spin[a, 1] = s * sx + c * sy
    return state


def _pi_flip(state: EnsembleState):
    # ideal pi pulse about the mean-spin (x) axis: phase negated, s_z negated
    state.spin[:, 1] *= -1.0
    state.spin[:, 2] *= -1.0
    return state


def composite_measurement(state: EnsembleState, probe: ProbeConfig,
                          cav: CavityConfig, trap: TrapConfig, which: str,
                          rng, timestamp: float = 0.0) -> MeasurementRecord:
    """Probe, ideal pi pulse, probe; M = (dw_plus - dw_minus) / 2.

    For the first measurement ("M1") dw_plus is the second pulse, for the
    verification measurement ("M2") it is the first, so that both M values
    refer to the post-M1 state. "M2" returns the ensemble in the post-M1
    bookkeeping basis (the trailing pi fold), ready for the population
    readout convention P_up = 1/2 - s_z.
    """
    if which not in ("M1", "M2"):
        raise ValueError("which must be 'M1' or 'M2'")
    first = probe_pulse(state, probe, cav, trap, rng)
    _pi_flip(state)
    second = probe_pulse(state, probe, cav, trap, rng)
    if which == "M2":
        _pi_flip(state)
    if which == "M1":
        plus, minus = second, first
    else:
        plus, minus = first, second
    detected_total = plus.detected + minus.detected
    psn = psn_variance(detected_total, cav) if detected_total > 0 else math.inf
    return MeasurementRecord(
        delta_omega_plus=plus.shift_estimate,
        delta_omega_minus=minus.shift_estimate,
        detected_plus=plus.detected,
        detected_minus=minus.detected,
        m_value=0.5 * (plus.shift_estimate - minus.shift_estimate),
        psn_variance=psn,
        timestamp=timestamp,
        linearization_warning=first.linearization_warning or second.linearization_warning,
    )


def psn_variance(detected: float, cav: CavityConfig) -> float:
    """Photon-shot-noise variance of a composite measurement, kappa^2/(4 n)."""
    if detected <= 0:
        raise ValueError("detected count must be positive")
    return cav.linewidth_fwhm ** 2 / (4.0 * detected)


def phase_per_detected_photon(omega_bar: float, cav: CavityConfig,
                              eta: float) -> float:
    """Calibration output: mean clock phase per detected probe photon.

    Equals (Omega_bar / kappa_t) / eta; the per-transmitted-photon value is
    Omega_bar / kappa_t.
    """
    return omega_bar / (cav.transmission_rate * eta)


def apply_rotation(state: EnsembleState, axis, angle: float) -> EnsembleState:
    """Rigid rotation of every alive Bloch vector about `axis` by `angle`."""
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if not math.isclose(norm, 1.0, rel_tol=1e-9):
        if norm == 0:
            raise ValueError("rotation axis must be non-zero")
        n = n / norm
    a = state.alive
    s = state.spin[a]
    c, sn = math.cos(angle), math.sin(angle)
    state.spin[a] = (s * c + np.cross(n, s) * sn
                     + np.outer(s @ n, n) * (1.0 - c))
    return state


def imaging_readout(state: EnsembleState, trap: TrapConfig, rng,
                    noise_sigma: float = 100.0) -> dict:
    """State-selective population and temperature readout.

    Each alive atom lands in the up state with probability 1/2 - s_z (the
    trailing pi pulse of the verification measurement is folded into the
    tracked state; see module docstring). Gaussian imaging noise of width
    `noise_sigma` atoms is added to the population difference. Branch
    temperatures are the population-weighted mean vertical energies.
    """
    from .dynamics import state_selected_temperature
    if state.n_alive == 0:
        raise ValueError("cannot image an empty ensemble")
    a = state.alive
    p_up = 0.5 - state.spin[a, 2]
    p_up = np.clip(p_up, 0.0, 1.0)
    up = rng.random(p_up.size) < p_up
    n_alive = p_up.size
    diff = 2.0 * np.count_nonzero(up) - n_alive + rng.normal() * noise_sigma
    t_up = state_selected_temperature(state, trap, "up")
    t_down = state_selected_temperature(state, trap, "down")
    return {
        "n_up": 0.5 * (n_alive + diff),
        "n_down": 0.5 * (n_alive - diff),
        "t_z_up": t_up,
        "t_z_down": t_down,
    }
