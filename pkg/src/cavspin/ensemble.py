"""Thermal ensemble in a harmonic trap and its cavity coupling.

Atoms are classical point particles in an ideal 3-D harmonic trap, sampled
from a Boltzmann distribution with independent longitudinal (x) and
transverse (y, z) temperatures. Motion is integrated analytically, so
per-axis energies are conserved exactly. The dispersive cavity coupling of
an atom follows the local mode intensity,

    Omega(r) = Omega0 cos^2(k x) (w0 / w(x))^2 exp[-2 (y^2 + z^2) / w(x)^2]

with w(x) = w0 sqrt(1 + x^2 / L_R^2). Because axial motion is fast, the
standing-wave factor averages out; the calibrated peak shift Omega0 already
absorbs that average, and the effective (pulse-averaged) coupling drops the
cos^2 factor in both of its modes. The closed-form energy representation of
the pulse average expands (w0/w)^2 into the 1 - <x^2>/L_R^2 prefactor, so
both modes agree on ensemble statistics to a few 1e-3 at the reference
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e

from .constants import C_LIGHT, HBAR, K_B, TWO_PI


class ConfigurationError(ValueError):
    """A physical configuration value is missing, non-physical or inconsistent."""


@dataclass
class TrapConfig:
    """Harmonic trap, cloud and collision parameters.

    Frequencies are angular (rad/s); temperatures in kelvin. The mean
    density is an independent measured input, not derived from the sampled
    atom number (`mean_density_estimate` provides the cross-check).
    """

    omega_x: float
    omega_y: float
    omega_z: float
    temp_longitudinal: float      # K, along the cavity axis x
    temp_transverse: float        # K, along y and z
    atom_number: int
    mass: float                   # kg
    scattering_length: float      # m, |a| for the up-down channel
    mean_density: float           # m^-3
    loss_rate: float = 0.0        # s^-1, one-body background loss

    def validate(self):
        for name in ("omega_x", "omega_y", "omega_z", "atom_number", "mass",
                     "scattering_length", "mean_density"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"trap.{name} must be strictly positive")
        if self.temp_longitudinal <= 0 or self.temp_transverse <= 0:
            raise ConfigurationError("trap temperatures must be strictly positive")
        if self.loss_rate < 0:
            raise ConfigurationError("trap.loss_rate must be non-negative")
        return self

    @property
    def omegas(self):
        return np.array([self.omega_x, self.omega_y, self.omega_z])

    @property
    def temperatures(self):
        return np.array([self.temp_longitudinal, self.temp_transverse,
                         self.temp_transverse])


@dataclass
class CavityConfig:
    """Cavity geometry and probe-mode parameters.

    `peak_shift` is the calibrated shift of an atom at rest at the mode
    center, with the axial standing wave already averaged (see module
    docstring); `calibrate_peak_shift` back-solves it from a target
    ensemble-mean shift.
    """

    waist: float                  # m, 1/e^2 intensity radius w0
    length: float                 # m
    linewidth_fwhm: float         # rad/s, kappa
    peak_shift: float             # rad/s, Omega0
    probe_wavevector: float       # m^-1, k of the probe light
    mirror_transmission: float    # dimensionless
    finesse: float

    def validate(self):
        for name in ("waist", "length", "linewidth_fwhm", "peak_shift",
                     "probe_wavevector", "mirror_transmission", "finesse"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"cavity.{name} must be strictly positive")
        if self.transmission_rate > 0.5 * self.linewidth_fwhm * (1 + 1e-12):
            raise ConfigurationError(
                "cavity transmission rate exceeds kappa/2; check mirror_transmission, "
                "length and linewidth_fwhm")
        return self

    @property
    def rayleigh_length(self):
        """L_R = k w0^2 / 2."""
        return 0.5 * self.probe_wavevector * self.waist ** 2

    @property
    def transmission_rate(self):
        """kappa_t = T c / (2 L), the output-coupling rate of one mirror."""
        return self.mirror_transmission * C_LIGHT / (2.0 * self.length)


@dataclass
class EnsembleState:
    """Mutable per-atom state: motion, Bloch spin, survival, cached coupling.

    All arrays have one row (or entry) per atom. Spins are Bloch vectors
    with |s| <= 1/2; relaxation legitimately shrinks them below 1/2.
    """

    pos: np.ndarray               # (n, 3) m
    vel: np.ndarray               # (n, 3) m/s
    spin: np.ndarray              # (n, 3) dimensionless
    alive: np.ndarray             # (n,) bool
    coupling: np.ndarray | None = field(default=None)   # (n,) rad/s, cached

    @property
    def n_total(self):
        return self.pos.shape[0]

    @property
    def n_alive(self):
        return int(np.count_nonzero(self.alive))

    def energies(self, trap: TrapConfig) -> np.ndarray:
        """Per-axis motional energies E_a = m v_a^2 / 2 + m w_a^2 r_a^2 / 2."""
        w2 = trap.omegas ** 2
        return 0.5 * trap.mass * (self.vel ** 2 + w2 * self.pos ** 2)

    def mean_spin(self) -> np.ndarray:
        """Mean Bloch vector over alive atoms (zero vector if none)."""
        if self.n_alive == 0:
            return np.zeros(3)
        return self.spin[self.alive].mean(axis=0)

    def total_spin(self) -> np.ndarray:
        if self.n_alive == 0:
            return np.zeros(3)
        return self.spin[self.alive].sum(axis=0)

    def contrast(self) -> float:
        """C = 2 |mean spin|: 1 for a fully coherent ensemble of length-1/2 spins."""
        return 2.0 * float(np.linalg.norm(self.mean_spin()))

    def copy(self) -> "EnsembleState":
        return EnsembleState(
            pos=self.pos.copy(), vel=self.vel.copy(), spin=self.spin.copy(),
            alive=self.alive.copy(),
            coupling=None if self.coupling is None else self.coupling.copy())


def sample_thermal_ensemble(trap: TrapConfig, n_atoms: int, rng) -> EnsembleState:
    """Draw atoms from the Boltzmann distribution of the harmonic trap.

    Positions and velocities are independent Gaussians per axis with
    <r_a^2> = kT_a / (m w_a^2) and <v_a^2> = kT_a / m. Spins start at zero;
    state preparation lives in the measurement layer.
    """
    trap.validate()
    if n_atoms < 1:
        raise ConfigurationError("sample count must be >= 1")
    sigma_v = np.sqrt(K_B * trap.temperatures / trap.mass)
    sigma_r = sigma_v / trap.omegas
    pos = rng.normal(size=(n_atoms, 3)) * sigma_r
    vel = rng.normal(size=(n_atoms, 3)) * sigma_v
    return EnsembleState(pos=pos, vel=vel,
                         spin=np.zeros((n_atoms, 3)),
                         alive=np.ones(n_atoms, dtype=bool))


def propagate(state: EnsembleState, dt: float, trap: TrapConfig) -> EnsembleState:
    """Advance trap motion by dt with the exact harmonic-oscillator map.

    Returns a new state; spins, survival flags and cached couplings carry
    over unchanged. Per-axis energies are conserved to rounding.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    out = state.copy()
    _propagate_inplace(out.pos, out.vel, dt, trap.omegas)
    return out


def _propagate_inplace(pos, vel, dt, omegas):
    c = np.cos(omegas * dt)
    s = np.sin(omegas * dt)
    x = pos * c + (vel / omegas) * s
    v = vel * c - pos * omegas * s
    pos[:] = x
    vel[:] = v


def coupling_at(pos: np.ndarray, cav: CavityConfig) -> np.ndarray:
    """Instantaneous coupling from the mode geometry, standing wave included.

    Accepts a single position (3,) or an array (n, 3); returns matching shape.
    """
    r = np.atleast_2d(np.asarray(pos, dtype=float))
    x, y, z = r[:, 0], r[:, 1], r[:, 2]
    w0 = cav.waist
    w2 = w0 ** 2 * (1.0 + (x / cav.rayleigh_length) ** 2)
    out = (cav.peak_shift * np.cos(cav.probe_wavevector * x) ** 2
           * (w0 ** 2 / w2) * np.exp(-2.0 * (y ** 2 + z ** 2) / w2))
    return out[0] if np.asarray(pos).ndim == 1 else out


def _transverse_axial_coupling(pos, cav):
    # coupling_at with the standing-wave factor replaced by its mean,
    # which the calibrated peak shift already absorbs
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    w0 = cav.waist
    w2 = w0 ** 2 * (1.0 + (x / cav.rayleigh_length) ** 2)
    return cav.peak_shift * (w0 ** 2 / w2) * np.exp(-2.0 * (y ** 2 + z ** 2) / w2)


def effective_coupling(state: EnsembleState, cav: CavityConfig, trap: TrapConfig,
                       tau_p: float, mode: str = "closed-form",
                       n_samples: int = 512) -> np.ndarray:
    """Pulse-averaged coupling per atom, (n,) rad/s.

    mode="trajectory-average" integrates the instantaneous coupling along the
    analytic trajectory over the pulse (the oracle). mode="closed-form" uses
    the energy representation

        Omega_i = Omega0 (1 - <x^2>_i / L_R^2)
                  * e^(-Ey/ey) I0(Ey/ey) * e^(-Ez/ez) I0(Ez/ez)

    with e_a = m w_a^2 w0^2 / 2 and <x^2>_i = E_x,i / (m w_x^2) the
    orbit-averaged square excursion. Both modes agree on the ensemble mean to
    a few 1e-3 when tau_p covers the transverse period.
    """
    if tau_p <= 0:
        raise ValueError("tau_p must be positive")
    if mode == "closed-form":
        energies = state.energies(trap)
        eps = 0.5 * trap.mass * trap.omegas[1:] ** 2 * cav.waist ** 2
        ey = energies[:, 1] / eps[0]
        ez = energies[:, 2] / eps[1]
        x2_mean = energies[:, 0] / (trap.mass * trap.omega_x ** 2)
        axial = np.clip(1.0 - x2_mean / cav.rayleigh_length ** 2, 0.0, None)
        return cav.peak_shift * axial * i0e(ey) * i0e(ez)
    if mode == "trajectory-average":
        # midpoint rule; exact-period sampling of the transverse oscillation
        # converges spectrally
        acc = np.zeros(state.n_total)
        pos = state.pos.copy()
        vel = state.vel.copy()
        dt = tau_p / n_samples
        _propagate_inplace(pos, vel, 0.5 * dt, trap.omegas)
        for _ in range(n_samples):
            acc += _transverse_axial_coupling(pos, cav)
            _propagate_inplace(pos, vel, dt, trap.omegas)
        return acc / n_samples
    raise ValueError(f"unknown coupling mode {mode!r}")


def attach_couplings(state: EnsembleState, cav: CavityConfig, trap: TrapConfig,
                     tau_p: float, mode: str = "closed-form") -> EnsembleState:
    """Compute and cache per-atom couplings (constant while energies are)."""
    state.coupling = effective_coupling(state, cav, trap, tau_p, mode=mode)
    return state


def ensemble_coupling_stats(couplings) -> dict:
    """Mean, spread and effective homogeneous-equivalent numbers.

    Returns {omega_bar, delta_omega, n_eff, omega_eff}; the identity
    n_eff * omega_eff = n * omega_bar holds exactly.
    """
    c = np.asarray(couplings, dtype=float)
    if c.size == 0:
        raise ValueError("coupling list must be non-empty")
    total = c.sum()
    total_sq = (c ** 2).sum()
    return {
        "omega_bar": c.mean(),
        "delta_omega": c.std(),
        "n_eff": total ** 2 / total_sq,
        "omega_eff": total_sq / total,
    }


def exchange_rate(trap: TrapConfig) -> float:
    """Forward-collision spin-exchange rate, angular (rad/s).

    The underlying frequency 2 hbar |a| n / m is about 1 Hz at the reference
    parameters; the returned value is 2 pi times that.
    """
    return TWO_PI * (2.0 * HBAR * abs(trap.scattering_length)
                     * trap.mean_density / trap.mass)


def lateral_rate(trap: TrapConfig) -> float:
    """Energy-redistributing lateral collision rate gamma_c (s^-1)."""
    v_t = math.sqrt(K_B * trap.temp_transverse / trap.mass)
    return (32.0 * math.sqrt(math.pi) / 3.0) * trap.scattering_length ** 2 \
        * trap.mean_density * v_t


def cooperativity(cav: CavityConfig) -> float:
    """Peak single-atom cooperativity C0 = 24 F / (pi k^2 w0^2)."""
    return 24.0 * cav.finesse / (math.pi * (cav.probe_wavevector * cav.waist) ** 2)


def knudsen_ordering(trap: TrapConfig) -> bool:
    """True when omega_{y,z} > omega_x > omega_ex > gamma_c.

    Motional energies are then conserved over many trap oscillations between
    rare lateral collisions. The last comparison pits an angular frequency
    against a rate; it holds in either convention at the reference values.
    """
    w_ex = exchange_rate(trap)
    return (min(trap.omega_y, trap.omega_z) > trap.omega_x > w_ex
            > lateral_rate(trap))


def mean_density_estimate(trap: TrapConfig) -> float:
    """Gaussian-cloud density averaged over the density distribution.

    <n> = N / (8 pi^(3/2) sx sy sz) with sa the per-axis position std;
    cross-checks the measured `mean_density` input.
    """
    sigma = np.sqrt(K_B * trap.temperatures / trap.mass) / trap.omegas
    return trap.atom_number / (8.0 * math.pi ** 1.5 * float(np.prod(sigma)))


def calibrate_peak_shift(trap: TrapConfig, cav: CavityConfig, tau_p: float,
                         target_omega_bar: float, n_samples: int = 50000,
                         rng=None) -> float:
    """Back-solve Omega0 so the thermal-ensemble mean coupling hits the target.

    The reference experiments calibrate the mean shift per atom; the peak
    value is not directly measurable there.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    probe_cav = CavityConfig(
        waist=cav.waist, length=cav.length, linewidth_fwhm=cav.linewidth_fwhm,
        peak_shift=1.0, probe_wavevector=cav.probe_wavevector,
        mirror_transmission=cav.mirror_transmission, finesse=cav.finesse)
    ens = sample_thermal_ensemble(trap, n_samples, rng)
    factor = effective_coupling(ens, probe_cav, trap, tau_p).mean()
    return target_omega_bar / factor
