"""Mean-field spin kinetics: exchange rotation, relaxation, loss.

Each alive spin obeys

    ds_i/dt = [ dw_a(r_i, t) e_z + 2 w_ex s_mean ] x s_i - gamma_c (s_i - s_mean)

where s_mean is the mean Bloch vector over alive atoms (long-ranged
exchange, energy kernel taken constant). The exchange prefactor is chosen
so a fully coherent ensemble rotates a dephased spin at exactly w_ex; with
contrast C the rate is C * w_ex. Lateral collisions enter as relaxation
toward the mean at gamma_c; one-body loss is Bernoulli thinning per step.

Integration is fixed-step classical RK4 on the full coupled system (the
mean spin is re-reduced at every stage). Norms are not renormalized:
relaxation legitimately shrinks them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import K_B
from .ensemble import (CavityConfig, ConfigurationError, EnsembleState,
                       TrapConfig, _propagate_inplace, attach_couplings)


class IntegrationError(RuntimeError):
    """The spin integrator produced a non-finite state."""


DEPHASING_MODELS = ("none", "probe-acstark", "quadratic-position")


@dataclass
class DynamicsParams:
    """Knobs of the kinetic integrator.

    dephasing_coefficients, by model:
      probe-acstark:      {"rate": rad/s at the mean coupling}
      quadratic-position: {"cx", "cy", "cz": rad/(s m^2)}
    """

    omega_ex: float                  # rad/s
    gamma_c: float                   # s^-1
    loss_rate: float = 0.0           # s^-1
    dt: float = 1e-3                 # s
    dephasing_model: str = "none"
    dephasing_coefficients: dict = field(default_factory=dict)
    kernel: str = "constant-one"

    def validate(self):
        if self.dt <= 0:
            raise ConfigurationError("dynamics.dt must be positive")
        if self.dt * self.omega_ex > 0.05 + 1e-12:
            raise ConfigurationError(
                f"dt*omega_ex = {self.dt * self.omega_ex:.3g} exceeds the 0.05 "
                "resolution guard")
        if self.omega_ex < 0 or self.gamma_c < 0 or self.loss_rate < 0:
            raise ConfigurationError("dynamics rates must be non-negative")
        if self.dephasing_model not in DEPHASING_MODELS:
            raise ConfigurationError(
                f"unknown dephasing model {self.dephasing_model!r}")
        if self.kernel != "constant-one":
            raise ConfigurationError("only the constant-one exchange kernel "
                                     "is implemented")
        return self


@dataclass
class EvolutionTrace:
    """Observables sampled along an evolution."""

    t: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    contrast: np.ndarray
    cavity_shift: np.ndarray
    t_z_up: np.ndarray
    t_z_down: np.ndarray
    alive: np.ndarray


def _dephasing_rates(state, params, pos):
    if params.dephasing_model == "quadratic-position":
        c = params.dephasing_coefficients
        return (c.get("cx", 0.0) * pos[:, 0] ** 2
                + c.get("cy", 0.0) * pos[:, 1] ** 2
                + c.get("cz", 0.0) * pos[:, 2] ** 2)
    if params.dephasing_model == "probe-acstark":
        rate = params.dephasing_coefficients.get("rate", 0.0)
        if state.coupling is None:
            raise ConfigurationError("probe-acstark dephasing needs cached couplings")
        mean = state.coupling[state.alive].mean() if state.n_alive else 1.0
        return rate * state.coupling / mean
    return None


def _rhs(spin, mask, n_alive, omega_ex, gamma_c, dw_a, out):
    """Time derivative into `out`.

    Dead rows of `spin` must be zero; `mask` is a float column zeroing their
    derivative (None when everyone is alive).
    """
    if n_alive == 0:
        out[:] = 0.0
        return out
    inv = 1.0 / n_alive
    sx, sy, sz = spin[:, 0], spin[:, 1], spin[:, 2]
    mx = sx.sum() * inv
    my = sy.sum() * inv
    mz = sz.sum() * inv
    wx, wy, wz = 2.0 * omega_ex * mx, 2.0 * omega_ex * my, 2.0 * omega_ex * mz
    ox, oy, oz = out[:, 0], out[:, 1], out[:, 2]
    np.multiply(sz, wy, out=ox)
    ox -= wz * sy
    np.multiply(sx, wz, out=oy)
    oy -= wx * sz
    np.multiply(sy, wx, out=oz)
    oz -= wy * sx
    if gamma_c != 0.0:
        ox -= gamma_c * (sx - mx)
        oy -= gamma_c * (sy - my)
        oz -= gamma_c * (sz - mz)
    if dw_a is not None:
        ox -= dw_a * sy
        oy += dw_a * sx
    if mask is not None:
        out *= mask
    return out


def step_kinetic(state: EnsembleState, params: DynamicsParams, dt: float,
                 trap: TrapConfig | None = None, t: float = 0.0,
                 _ws: tuple | None = None) -> EnsembleState:
    """One RK4 step of the kinetic equation (spins only; motion is separate).

    The mean spin is re-reduced at every stage, so the step is a genuine RK4
    on the coupled system. Spins of dead atoms are zeroed. Position-dependent
    dephasing evaluates the trajectory analytically at the stage times when a
    trap is given.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * params.omega_ex > 0.05 + 1e-12:
        raise ConfigurationError("dt exceeds the omega_ex resolution guard")
    spin = state.spin
    n_alive = state.n_alive
    mask = None
    if n_alive != state.n_total:
        mask = state.alive.astype(float)[:, None]
        spin *= mask

    needs_pos = params.dephasing_model == "quadratic-position"
    if needs_pos and trap is None:
        raise ConfigurationError("quadratic-position dephasing needs the trap")

    def dw_at(tau):
        if params.dephasing_model == "none":
            return None
        if needs_pos:
            pos = state.pos.copy()
            vel = state.vel.copy()
            if tau > 0:
                _propagate_inplace(pos, vel, tau, trap.omegas)
            return _dephasing_rates(state, params, pos)
        return _dephasing_rates(state, params, state.pos)

    dw_0 = dw_at(0.0)
    dw_h = dw_at(0.5 * dt)
    dw_1 = dw_at(dt)
    if _ws is None:
        _ws = tuple(np.empty_like(spin) for _ in range(5))
    k1, k2, k3, k4, tmp = _ws
    rate = (params.omega_ex, params.gamma_c)

    _rhs(spin, mask, n_alive, *rate, dw_0, k1)
    np.multiply(k1, 0.5 * dt, out=tmp)
    tmp += spin
    _rhs(tmp, mask, n_alive, *rate, dw_h, k2)
    np.multiply(k2, 0.5 * dt, out=tmp)
    tmp += spin
    _rhs(tmp, mask, n_alive, *rate, dw_h, k3)
    np.multiply(k3, dt, out=tmp)
    tmp += spin
    _rhs(tmp, mask, n_alive, *rate, dw_1, k4)
    # spin += dt/6 (k1 + 2 k2 + 2 k3 + k4), accumulated in k2
    k2 += k3
    k2 *= 2.0
    k2 += k1
    k2 += k4
    k2 *= dt / 6.0
    spin += k2
    if not np.isfinite(spin).all():
        raise IntegrationError(
            f"non-finite spin at t={t:.6g}s (dt={dt:.3g}, "
            f"omega_ex={params.omega_ex:.3g}, gamma_c={params.gamma_c:.3g})")
    return state


def state_selected_temperature(state: EnsembleState, trap: TrapConfig,
                               branch: str, axis: int = 2) -> float:
    """Population-weighted motional temperature of one spin branch (kelvin).

    T_branch = sum_i P_i E_i / (k_B sum_i P_i) with P_up = 1/2 - s_z and
    P_down = 1/2 + s_z over alive atoms; default axis is vertical (z).
    """
    if state.n_alive == 0:
        raise ValueError("empty ensemble")
    a = state.alive
    if branch == "up":
        p = 0.5 - state.spin[a, 2]
    elif branch == "down":
        p = 0.5 + state.spin[a, 2]
    else:
        raise ValueError("branch must be 'up' or 'down'")
    p = np.clip(p, 0.0, 1.0)
    weight = p.sum()
    if weight < 1e-9 * max(state.n_alive, 1):
        raise ValueError(f"branch {branch!r} population is degenerate")
    energy = state.energies(trap)[a, axis]
    return float((p * energy).sum() / (weight * K_B))


def evolve(state: EnsembleState, duration: float, params: DynamicsParams,
           trap: TrapConfig, cav: CavityConfig | None, rng,
           record_times=None, tau_p: float | None = None) -> EvolutionTrace:
    """Free evolution for `duration`: motion, spin kinetics, one-body loss.

    Mutates `state` in place and returns the recorded trace. Cavity-shift
    entries need couplings (cached, or computed from `cav` and `tau_p`);
    without them the shift records as zero for an empty ensemble only.
    """
    params.validate()
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if state.n_total > 0 and state.coupling is None and cav is not None:
        attach_couplings(state, cav, trap, tau_p if tau_p is not None
                         else params.dt)

    n_steps = int(round(duration / params.dt)) if duration > 0 else 0
    dt = duration / n_steps if n_steps else params.dt

    if record_times is None:
        record_times = [0.0, duration] if duration > 0 else [0.0]
    record_times = sorted(set(float(t) for t in record_times))
    record_steps = {int(round(t / dt)) if duration > 0 else 0
                    for t in record_times}

    rows = []

    def record(step):
        t = step * dt if duration > 0 else 0.0
        if state.n_alive > 0:
            s = state.total_spin()
            shift = (float(np.dot(state.coupling[state.alive],
                                  state.spin[state.alive, 2]))
                     if state.coupling is not None else 0.0)
            t_up = state_selected_temperature(state, trap, "up")
            t_dn = state_selected_temperature(state, trap, "down")
            rows.append((t, s[0], s[1], s[2], state.contrast(), shift,
                         t_up, t_dn, state.n_alive))
        else:
            rows.append((t, 0.0, 0.0, 0.0, 0.0, 0.0, np.nan, np.nan, 0))

    record(0)
    p_loss = params.loss_rate * dt
    ws = tuple(np.empty_like(state.spin) for _ in range(5))
    # observables depend on positions only through conserved energies, so
    # without position-dependent dephasing the motion can be applied once
    stepwise_motion = params.dephasing_model == "quadratic-position"
    for step in range(1, n_steps + 1):
        if state.n_total > 0:
            # spins first (stage positions reference the step start), then motion
            step_kinetic(state, params, dt, trap=trap, t=(step - 1) * dt, _ws=ws)
            if stepwise_motion:
                _propagate_inplace(state.pos, state.vel, dt, trap.omegas)
            if p_loss > 0.0:
                survive = rng.random(state.n_total) >= p_loss
                died = state.alive & ~survive
                if died.any():
                    state.spin[died] = 0.0
                    state.alive &= survive
        if step in record_steps:
            record(step)
    if not stepwise_motion and state.n_total > 0 and n_steps > 0:
        _propagate_inplace(state.pos, state.vel, n_steps * dt, trap.omegas)

    cols = list(zip(*rows))
    return EvolutionTrace(
        t=np.array(cols[0]), s_x=np.array(cols[1]), s_y=np.array(cols[2]),
        s_z=np.array(cols[3]), contrast=np.array(cols[4]),
        cavity_shift=np.array(cols[5]), t_z_up=np.array(cols[6]),
        t_z_down=np.array(cols[7]), alive=np.array(cols[8]))
