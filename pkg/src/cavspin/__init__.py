"""cavspin: semiclassical simulator and estimation toolkit for cavity-based
collective-spin measurement in a trapped thermal ensemble."""

from .ensemble import (CavityConfig, ConfigurationError, EnsembleState,
                       TrapConfig, calibrate_peak_shift, cooperativity,
                       coupling_at, effective_coupling, ensemble_coupling_stats,
                       exchange_rate, knudsen_ordering, lateral_rate,
                       mean_density_estimate, propagate, sample_thermal_ensemble)
from .measurement import (MeasurementRecord, ProbeConfig, apply_rotation,
                          cavity_shift, composite_measurement, draw_sz,
                          imaging_readout, phase_per_detected_photon,
                          prepare_css, probe_pulse, project_sz, psn_variance,
                          set_common_sz)
from .dynamics import (DynamicsParams, EvolutionTrace, IntegrationError,
                       evolve, state_selected_temperature, step_kinetic)
from .model import (AnalyticParams, amplification_amplitude,
                    amplification_factor, chi_from_config, chi_from_detected,
                    contrast_model, delta_i, loss_decay, sz_i_of_t,
                    temperature_coefficient, temperature_of_t)
from .estimators import (BootstrapResult, EstimationError, FitError,
                         InsufficientDataError, ShotDataset, SqueezingReport,
                         bootstrap_ci, build_report, conditional_spin_noise,
                         deming_alpha, deming_alpha_closed_form, fit_contrast,
                         psn_from_counts, psn_limit_pair, sql,
                         squeezing_metrics, tomography_variance)
from .config import (ConfigError, ExperimentConfig, builtin_config,
                     emit_config, load_config, resolve_config, save_config)

__version__ = "0.1.0"
