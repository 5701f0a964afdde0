"""Statistical pipeline: amplification regression, conditional spin noise,
squeezing metrics, tomography, contrast fitting, bootstrap intervals.

The central estimator is the errors-in-both-variables slope between the two
composite measurements. It minimizes the conditional variance normalized to
photon shot noise,

    J(alpha) = Var(M1 - M2/alpha) / [p1 + p2/alpha^2],

whose minimizer coincides with the classic known-variance-ratio
errors-in-variables slope (lambda = p2/p1). Both routes are computed and
cross-checked; the closed form is returned for exact scale covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import minimize_scalar

from .rng import STAGE_BOOTSTRAP, stream


class EstimationError(RuntimeError):
    """Estimator input is degenerate or internally inconsistent."""


class InsufficientDataError(EstimationError):
    """Too few shots survive selection for a meaningful estimate."""


class FitError(RuntimeError):
    """A model fit failed to converge or is singular."""


ALPHA_BOUNDS = (1e-3, 1e3)


@dataclass
class ShotDataset:
    """Arrays over repeated shots of one configuration.

    m1, m2 in rad/s; n1, n2 detected photon counts; n_atoms the imaged atom
    number; optional per-shot branch temperatures (K), tomography angle
    (rad), post-measurement contrast and true S_z (simulation-only column).
    """

    m1: np.ndarray
    m2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n_atoms: np.ndarray
    t_delay: np.ndarray
    t_z_up: np.ndarray | None = None
    t_z_down: np.ndarray | None = None
    theta: np.ndarray | None = None
    contrast: np.ndarray | None = None
    sz_true: np.ndarray | None = None

    def __post_init__(self):
        lengths = {np.asarray(v).shape[0] for v in self._present().values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: {sorted(lengths)}")
        for name, v in self._present().items():
            setattr(self, name, np.asarray(v, dtype=float))

    def _present(self):
        return {f.name: getattr(self, f.name) for f in fields(self)
                if getattr(self, f.name) is not None}

    def __len__(self):
        return self.m1.shape[0]

    def take(self, idx) -> "ShotDataset":
        cols = {name: np.asarray(v)[idx] for name, v in self._present().items()}
        return ShotDataset(**cols)


def psn_from_counts(counts, kappa: float, mode: str = "per-shot") -> float:
    """PSN variance (rad/s)^2 from detected counts.

    "per-shot" averages each shot's kappa^2/(4 n); "dataset-mean" evaluates
    the formula at the mean count.
    """
    c = np.asarray(counts, dtype=float)
    if np.any(c <= 0):
        raise ValueError("all counts must be positive for PSN normalization")
    if mode == "per-shot":
        return float(np.mean(kappa ** 2 / (4.0 * c)))
    if mode == "dataset-mean":
        return kappa ** 2 / (4.0 * float(np.mean(c)))
    raise ValueError(f"unknown PSN mode {mode!r}")


def _normalized_objective(alpha, m1, m2, psn1, psn2):
    return np.var(m1 - m2 / alpha) / (psn1 + psn2 / alpha ** 2)


def deming_alpha_closed_form(m1, m2, psn1: float, psn2: float) -> float:
    """Errors-in-variables slope with variance ratio lambda = psn2/psn1.

    alpha = [Syy - lam Sxx + sqrt((Syy - lam Sxx)^2 + 4 lam Sxy^2)] / (2 Sxy)
    regressing m2 on m1.
    """
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    lam = psn2 / psn1
    sxx = np.var(m1)
    syy = np.var(m2)
    sxy = np.mean((m1 - m1.mean()) * (m2 - m2.mean()))
    if sxy == 0.0:
        raise EstimationError("zero covariance between measurements; "
                              "slope is unidentifiable")
    term = syy - lam * sxx
    return (term + math.sqrt(term ** 2 + 4.0 * lam * sxy ** 2)) / (2.0 * sxy)


def deming_alpha(data, psn1: float, psn2: float, method: str = "checked") -> float:
    """Amplification factor minimizing the PSN-normalized conditional variance.

    Parameters
    ----------
    data : ShotDataset or (m1, m2) pair of arrays
    psn1, psn2 : photon-shot-noise variances of the two measurements
    method : "checked" (default) runs the bounded scalar search and the
        closed form, asserts they agree to 1e-4 relative, and returns the
        closed form; "search" / "closed" force one route.
    """
    if isinstance(data, ShotDataset):
        m1, m2 = data.m1, data.m2
    else:
        m1, m2 = (np.asarray(x, dtype=float) for x in data)
    if m1.size < 3:
        raise EstimationError("need at least 3 shots")
    if psn1 <= 0 or psn2 <= 0:
        raise EstimationError("PSN variances must be positive")
    if not np.isfinite(m1).all() or not np.isfinite(m2).all():
        raise EstimationError("non-finite measurement values")
    if np.var(m2) == 0.0:
        raise EstimationError("Var(M2) = 0; slope is unidentifiable")

    closed = None
    if method in ("checked", "closed"):
        closed = deming_alpha_closed_form(m1, m2, psn1, psn2)
        if method == "closed":
            return closed
    lo, hi = ALPHA_BOUNDS
    res = minimize_scalar(
        lambda x: _normalized_objective(math.exp(x), m1, m2, psn1, psn2),
        bounds=(math.log(lo), math.log(hi)), method="bounded",
        options={"xatol": 1e-7})
    searched = math.exp(res.x)
    if method == "search":
        return searched
    if not (lo <= closed <= hi):
        # interior optimum outside the physical window: fall back on the search
        return searched
    if abs(searched / closed - 1.0) > 1e-4:
        raise EstimationError(
            f"slope cross-check failed: search {searched:.6g} vs "
            f"closed form {closed:.6g}")
    return closed


def conditional_spin_noise(data, alpha: float, psn2: float,
                           omega_bar: float) -> float:
    """Conditional spin variance (atoms^2) given the first measurement:

        [Var(M1 - M2/alpha) - psn2/alpha^2] / Omega_bar^2

    May be negative on finite samples; reported as-is.
    """
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    if isinstance(data, ShotDataset):
        m1, m2 = data.m1, data.m2
    else:
        m1, m2 = (np.asarray(x, dtype=float) for x in data)
    return float((np.var(m1 - m2 / alpha) - psn2 / alpha ** 2) / omega_bar ** 2)


@dataclass
class SqueezingMetrics:
    xi_n2: float
    xi2: float
    xi_n2_db: float      # nan when the linear value is non-positive
    xi2_db: float
    db_valid: bool


def to_db(linear: float) -> float:
    """10 log10(x); nan flags a non-positive variance estimate."""
    return 10.0 * math.log10(linear) if linear > 0 else math.nan


def squeezing_metrics(cond_spin_variance: float, n_atoms: float,
                      contrast: float) -> SqueezingMetrics:
    """Number squeezing 4 V / N and metrological squeezing 4 V / (N C^2)."""
    if n_atoms <= 0:
        raise ValueError("atom number must be positive")
    if not (0.0 < contrast <= 1.0):
        raise ValueError("contrast must be in (0, 1]")
    xi_n2 = 4.0 * cond_spin_variance / n_atoms
    xi2 = xi_n2 / contrast ** 2
    return SqueezingMetrics(xi_n2=xi_n2, xi2=xi2, xi_n2_db=to_db(xi_n2),
                            xi2_db=to_db(xi2), db_valid=xi_n2 > 0)


def tomography_variance(data: ShotDataset, theta: float, psn2: float,
                        omega_bar: float, post_select: float | None = None,
                        min_shots: int = 20) -> float:
    """Spin variance at angle theta from the rotated verification measurement:

        [Var(M1 cos theta - M2) - psn2] / Omega_bar^2

    With `post_select`, only shots with |M1| <= post_select enter (emulating
    feedback that nulls the measured value); fewer than `min_shots` survivors
    raise InsufficientDataError.
    """
    if data.theta is not None:
        vals = np.unique(data.theta)
        if vals.size > 1:
            raise EstimationError("shots mix different tomography angles")
    m1, m2 = data.m1, data.m2
    if post_select is not None:
        keep = np.abs(m1) <= post_select
        if np.count_nonzero(keep) < min_shots:
            raise InsufficientDataError(
                f"{np.count_nonzero(keep)} shots pass |M1| <= {post_select:.3g}; "
                f"need {min_shots}")
        m1, m2 = m1[keep], m2[keep]
    return float((np.var(m1 * math.cos(theta) - m2) - psn2) / omega_bar ** 2)


def default_post_selection(omega_bar: float, n_atoms: float) -> float:
    """|M1| window used when emulating measurement feedback: 0.25 Omega_bar sqrt(N)."""
    return 0.25 * omega_bar * math.sqrt(n_atoms)


def fit_contrast(n_photons, contrast) -> dict:
    """Fit C = exp[-n/g1 - (n/g2)^2] by linear least squares in log space.

    ln C is linear in (1/g1, 1/g2^2), so the fit is a 2-parameter linear
    solve; covariance comes from the residual variance. Returns
    {gamma1, gamma2, cov} with cov the 2x2 covariance of (1/g1, 1/g2^2).
    A non-positive quadratic coefficient raises FitError (the model cannot
    represent growing contrast); a non-positive linear coefficient maps to
    gamma1 = inf, covering the pure-Gaussian limit.
    """
    n = np.asarray(n_photons, dtype=float)
    c = np.asarray(contrast, dtype=float)
    if n.size < 4:
        raise FitError("need at least 4 points")
    if np.any(c <= 0) or np.any(c > 1.0 + 1e-9):
        raise FitError("contrast values must lie in (0, 1]")
    y = -np.log(c)
    basis = np.column_stack([n, n ** 2])
    coef, residual, rank, _ = np.linalg.lstsq(basis, y, rcond=None)
    if rank < 2:
        raise FitError("design matrix is singular; need distinct photon numbers")
    q1, q2 = coef
    dof = max(n.size - 2, 1)
    resid = y - basis @ coef
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(basis.T @ basis)
    if q2 <= 0:
        raise FitError("quadratic decay coefficient is non-positive")
    gamma1 = math.inf if q1 <= 0 else 1.0 / q1
    return {"gamma1": gamma1, "gamma2": 1.0 / math.sqrt(q2), "cov": cov,
            "coefficients": (q1, q2)}


@dataclass
class BootstrapResult:
    point: float
    ci_low: float
    ci_high: float
    n_resamples: int


def bootstrap_ci(statistic, data: ShotDataset, n_resamples: int, seed,
                 level: float = 0.683) -> BootstrapResult:
    """Percentile bootstrap over shots; 68.3% (1-sigma-equivalent) by default.

    Deterministic for a fixed seed; resamples draw from one dedicated stream.
    """
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples")
    rng = stream(seed, STAGE_BOOTSTRAP)
    n = len(data)
    point = float(statistic(data))
    stats = np.empty(n_resamples)
    for k in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        stats[k] = statistic(data.take(idx))
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(stats, [tail, 100.0 - tail])
    return BootstrapResult(point=point, ci_low=float(lo), ci_high=float(hi),
                           n_resamples=n_resamples)


def sql(n_atoms: float) -> float:
    """Projection-noise variance N/4 of an uncorrelated ensemble."""
    if n_atoms <= 0:
        raise ValueError("atom number must be positive")
    return n_atoms / 4.0


def psn_limit_pair(n1: float, n2: float, alpha: float, kappa: float) -> float:
    """Shot-noise floor of the conditional variance:

        kappa^2/(4 n1) + kappa^2/(4 n2 alpha^2)
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("counts must be positive")
    return kappa ** 2 / (4.0 * n1) + kappa ** 2 / (4.0 * n2 * alpha ** 2)


@dataclass
class SqueezingReport:
    """Aggregate of one dataset: slope, conditional noise, squeezing, CIs."""

    alpha: float
    cond_variance: float            # (rad/s)^2
    cond_spin_variance: float       # atoms^2
    xi_n2: float
    xi2: float
    xi_n2_db: float
    xi2_db: float
    contrast: float
    n_atoms: float
    n_shots: int
    n_bootstrap: int
    t_delay: float
    ci: dict = field(default_factory=dict)   # statistic -> (low, high)
    meta: dict = field(default_factory=dict)


def build_report(data: ShotDataset, omega_bar: float, kappa: float,
                 contrast: float, seed, n_bootstrap: int = 400,
                 psn_mode: str = "per-shot") -> SqueezingReport:
    """Full pipeline on one dataset: slope, Eq.-style conditional noise,
    squeezing metrics, bootstrap intervals for each."""
    psn1 = psn_from_counts(data.n1, kappa, psn_mode)
    psn2 = psn_from_counts(data.n2, kappa, psn_mode)
    n_atoms = float(np.mean(data.n_atoms))

    def stat_alpha(ds):
        return deming_alpha(ds, psn_from_counts(ds.n1, kappa, psn_mode),
                            psn_from_counts(ds.n2, kappa, psn_mode),
                            method="closed")

    def stat_cond_var(ds):
        a = stat_alpha(ds)
        return np.var(ds.m1 - ds.m2 / a)

    def stat_spin_var(ds):
        a = stat_alpha(ds)
        p2 = psn_from_counts(ds.n2, kappa, psn_mode)
        return conditional_spin_noise(ds, a, p2, omega_bar)

    def stat_xi_n2(ds):
        return 4.0 * stat_spin_var(ds) / float(np.mean(ds.n_atoms))

    alpha = deming_alpha(data, psn1, psn2)
    spin_var = conditional_spin_noise(data, alpha, psn2, omega_bar)
    metrics = squeezing_metrics(spin_var, n_atoms, contrast)

    ci = {}
    for name, fn in [("alpha", stat_alpha), ("cond_variance", stat_cond_var),
                     ("cond_spin_variance", stat_spin_var), ("xi_n2", stat_xi_n2)]:
        b = bootstrap_ci(fn, data, n_bootstrap, seed)
        ci[name] = (b.ci_low, b.ci_high)

    return SqueezingReport(
        alpha=alpha,
        cond_variance=float(np.var(data.m1 - data.m2 / alpha)),
        cond_spin_variance=spin_var,
        xi_n2=metrics.xi_n2, xi2=metrics.xi2,
        xi_n2_db=metrics.xi_n2_db, xi2_db=metrics.xi2_db,
        contrast=contrast, n_atoms=n_atoms, n_shots=len(data),
        n_bootstrap=n_bootstrap, t_delay=float(np.mean(data.t_delay)), ci=ci)
