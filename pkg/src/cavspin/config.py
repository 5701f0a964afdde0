"""Experiment configuration: strict, unit-annotated key-value files.

Physics parameters are error-prone without units, so every key carries its
unit in the name and frequencies are plain (non-angular) hertz. Unknown keys
are hard errors; nothing physical is silently defaulted. `emit` writes a
canonical form such that emit(load(f)) reproduces f byte for byte.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, fields, replace
from importlib import resources

from .constants import TWO_PI
from .dynamics import DynamicsParams
from .ensemble import CavityConfig, ConfigurationError, TrapConfig
from .measurement import ProbeConfig


class ConfigError(ConfigurationError):
    """Configuration file is missing, malformed or inconsistent."""


_BOOLS = {"true": True, "false": False}

# section -> key -> (type, help)
SCHEMA = {
    "meta": {
        "schema_version": (int, "config schema version; must be 1"),
    },
    "trap": {
        "omega_x_hz": (float, "axial trap frequency / 2pi"),
        "omega_y_hz": (float, "transverse trap frequency / 2pi"),
        "omega_z_hz": (float, "vertical trap frequency / 2pi"),
        "temp_longitudinal_k": (float, "cloud temperature along x"),
        "temp_transverse_k": (float, "cloud temperature along y, z"),
        "atom_number": (int, "physical ensemble size"),
        "mass_kg": (float, "atomic mass"),
        "scattering_length_m": (float, "|a| of the up-down collision channel"),
        "mean_density_m3": (float, "measured mean density"),
        "loss_rate_hz": (float, "one-body loss rate, 1/lifetime"),
    },
    "cavity": {
        "waist_m": (float, "mode waist w0"),
        "length_m": (float, "cavity length"),
        "kappa_fwhm_hz": (float, "linewidth (FWHM) / 2pi"),
        "probe_wavelength_m": (float, "probe wavelength"),
        "mirror_transmission": (float, "designed per-mirror transmission"),
        "finesse": (float, "cavity finesse"),
        "peak_shift_hz": (float, "calibrated peak shift Omega0 / 2pi "
                                 "(axial average absorbed)"),
        "mean_shift_per_atom_hz": (float, "target thermal-mean shift / 2pi"),
    },
    "probe": {
        "pulse_duration_s": (float, "probe pulse length"),
        "detected_photons_per_measurement": (float,
                                             "mean detected count per composite "
                                             "measurement, 2 eta n_p"),
        "detection_efficiency": (float, "overall photon detection efficiency"),
        "detuning_over_kappa": (float, "probe detuning in units of kappa"),
        "shot_noise": (bool, "Poisson transmission statistics"),
        "lineshape": (str, "linear | lorentzian"),
    },
    "dynamics": {
        "dt_s": (float, "integrator step"),
        "dephasing_model": (str, "none | probe-acstark | quadratic-position"),
        "kernel": (str, "exchange kernel; constant-one"),
    },
    "imaging": {
        "noise_atoms": (float, "imaging noise on the population difference"),
    },
}

_SECTION_ORDER = ["meta", "trap", "cavity", "probe", "dynamics", "imaging"]


@dataclass
class ExperimentConfig:
    """Flat view of one validated configuration file."""

    values: dict   # (section, key) -> typed value

    def get(self, section, key):
        return self.values[(section, key)]

    def replace(self, section, key, value):
        if (section, key) not in self.values:
            raise ConfigError(f"unknown config field {section}.{key}")
        out = dict(self.values)
        out[(section, key)] = value
        return ExperimentConfig(out)

    # builders ---------------------------------------------------------
    def trap(self, atom_number: int | None = None) -> TrapConfig:
        g = lambda k: self.get("trap", k)
        return TrapConfig(
            omega_x=TWO_PI * g("omega_x_hz"),
            omega_y=TWO_PI * g("omega_y_hz"),
            omega_z=TWO_PI * g("omega_z_hz"),
            temp_longitudinal=g("temp_longitudinal_k"),
            temp_transverse=g("temp_transverse_k"),
            atom_number=atom_number if atom_number is not None else g("atom_number"),
            mass=g("mass_kg"),
            scattering_length=g("scattering_length_m"),
            mean_density=g("mean_density_m3"),
            loss_rate=g("loss_rate_hz"),
        ).validate()

    def cavity(self) -> CavityConfig:
        g = lambda k: self.get("cavity", k)
        return CavityConfig(
            waist=g("waist_m"),
            length=g("length_m"),
            linewidth_fwhm=TWO_PI * g("kappa_fwhm_hz"),
            peak_shift=TWO_PI * g("peak_shift_hz"),
            probe_wavevector=TWO_PI / g("probe_wavelength_m"),
            mirror_transmission=g("mirror_transmission"),
            finesse=g("finesse"),
        ).validate()

    def probe(self, detected_per_measurement: float | None = None,
              shot_noise: bool | None = None) -> ProbeConfig:
        g = lambda k: self.get("probe", k)
        detected = (detected_per_measurement if detected_per_measurement is not None
                    else g("detected_photons_per_measurement"))
        eta = g("detection_efficiency")
        cav_kappa = TWO_PI * self.get("cavity", "kappa_fwhm_hz")
        return ProbeConfig(
            pulse_duration=g("pulse_duration_s"),
            photons_per_pulse=detected / (2.0 * eta),
            detection_efficiency=eta,
            detuning=g("detuning_over_kappa") * cav_kappa,
            shot_noise=g("shot_noise") if shot_noise is None else shot_noise,
            lineshape=g("lineshape"),
        ).validate()

    def dynamics(self, omega_ex: float, gamma_c: float,
                 loss_rate: float | None = None) -> DynamicsParams:
        g = lambda k: self.get("dynamics", k)
        return DynamicsParams(
            omega_ex=omega_ex, gamma_c=gamma_c,
            loss_rate=self.get("trap", "loss_rate_hz") if loss_rate is None else loss_rate,
            dt=g("dt_s"), dephasing_model=g("dephasing_model"),
            kernel=g("kernel"),
        ).validate()

    def omega_bar(self) -> float:
        return TWO_PI * self.get("cavity", "mean_shift_per_atom_hz")

    def digest(self) -> str:
        return hashlib.sha256(emit_config(self).encode()).hexdigest()[:16]


def _parse_value(section, key, raw):
    typ, _ = SCHEMA[section][key]
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() not in _BOOLS:
                raise ValueError(raw)
            return _BOOLS[raw.lower()]
        if typ is int:
            val = int(float(raw))
            if float(raw) != val:
                raise ValueError(raw)
            return val
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(
            f"field {section}.{key}: cannot parse {raw!r} as {typ.__name__}") from exc


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config field {section}.{key}")
            values[(section, key)] = _parse_value(section, key, parser[section][key])

    missing = [f"{s}.{k}" for s in SCHEMA for k in SCHEMA[s]
               if (s, k) not in values]
    if missing:
        raise ConfigError("missing config fields: " + ", ".join(missing))
    if values[("meta", "schema_version")] != 1:
        raise ConfigError("unsupported schema_version "
                          f"{values[('meta', 'schema_version')]}; expected 1")
    cfg = ExperimentConfig(values)
    # fail early on physics inconsistencies, naming the offending section
    cfg.trap()
    cfg.cavity()
    cfg.probe()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    for section in _SECTION_ORDER:
        out.write(f"[{section}]\n")
        for key in sorted(SCHEMA[section]):
            out.write(f"{key} = {_format_value(cfg.get(section, key))}\n")
        out.write("\n")
    return out.getvalue()


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_config(cfg))


def builtin_config(name: str) -> ExperimentConfig:
    """Configurations shipped with the package ('paper')."""
    try:
        text = resources.files("cavspin").joinpath(f"data/{name}.cfg").read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"no builtin config named {name!r}") from exc
    return parse_config(text)


def resolve_config(spec: str) -> ExperimentConfig:
    """A path, or the name of a builtin configuration."""
    import os
    if os.path.exists(spec):
        return load_config(spec)
    return builtin_config(spec)
