"""Monotone hybrid optimizer: imaginary-time covariance flow + flux-coupling descent.

Each step computes the coupling gradient, turns it into a coupling velocity
(either through the pseudo-inverse of the flow tensor, which cancels the
coupling term in the energy derivative exactly, or through plain gradient
descent), assembles the two mean-field matrices and integrates the covariance
flow by one forward-Euler step.  A backtracking guard halves the step until
the energy does not increase, so accepted steps are monotone by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, StagnationError, ValidationError
from .gaussian import (
    CovarianceMatrix,
    _as_gamma,
    mean_field_covariance,
    purify,
    random_pure_covariance,
    upsilon,
)
from .hamiltonian import (
    ManyBodyHamiltonian,
    NonGaussianParams,
    energy,
    energy_gradient_omega,
    mean_field_h,
    mean_field_o,
)
from .linalg import pseudo_inverse
from .wick import wrap_angles

ENERGY_INCREASE_TOL = 1e-12


@dataclass(frozen=True)
class BTensor:
    """Quadratic form of the coupling velocity in the energy derivative.

    ``entries`` is the N^4 tensor with the pair symmetries and zeroed
    diagonals; ``g`` is twice the mode-occupation vector it was built from.
    The matricized form on symmetric zero-diagonal pairs is PSD.
    """

    entries: np.ndarray
    g: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.g.shape[0]


def b_tensor(gamma) -> BTensor:
    """Flow tensor of the covariance matrix; depends on gamma only."""
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    g0 = g + upsilon(n)
    gvec = np.diag(g[:n, n:]) + 1.0
    gg = np.outer(gvec, gvec)
    delta = np.eye(n)
    blocks_sq = (
        g0[:n, :n] ** 2 + g0[:n, n:] ** 2 + g0[n:, :n] ** 2 + g0[n:, n:] ** 2
    )
    entries = (
        np.einsum("lm,kn->klmn", gg, delta)
        + np.einsum("ln,km->klmn", gg, delta)
        + np.einsum("km,ln->klmn", gg, delta)
        + np.einsum("kn,lm->klmn", gg, delta)
        + np.einsum("kl,km,ln->klmn", blocks_sq, delta, delta)
        + np.einsum("kl,kn,lm->klmn", blocks_sq, delta, delta)
    ) / 8.0
    idx = np.arange(n)
    entries[idx, idx, :, :] = 0.0
    entries[:, :, idx, idx] = 0.0
    return BTensor(entries, gvec)


def _pair_index(n: int) -> list[tuple[int, int]]:
    return [(k, l) for k in range(n) for l in range(k + 1, n)]


def matricize_b(tensor: BTensor) -> np.ndarray:
    """Reduced matrix over k<l pairs (row-major): B[(kl),(mn)] = B_klmn."""
    n = tensor.n_modes
    pairs = _pair_index(n)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    return tensor.entries[rows[:, None], cols[:, None], rows[None, :], cols[None, :]]


def quadratic_form(tensor: BTensor, domega: np.ndarray) -> float:
    """sum_klmn domega_kl B_klmn domega_mn for a symmetric zero-diagonal domega."""
    dw = np.asarray(domega, dtype=float)
    return float(np.einsum("kl,klmn,mn->", dw, tensor.entries, dw))


def simple_step_bound(tensor: BTensor) -> float:
    """Smallest descent coefficient guaranteeing a non-increasing coupling term.

    Equals the largest eigenvalue of the flow quadratic form on symmetric
    zero-diagonal couplings divided by 8, i.e. lambda_max(reduced matrix)/4.
    """
    reduced = matricize_b(tensor)
    if reduced.size == 0:
        return 0.0
    return float(np.max(np.linalg.eigvalsh(reduced))) / 4.0


def dtau_omega_hitgd(tensor: BTensor, grad: np.ndarray, rcond: float = 1e-8) -> np.ndarray:
    """Coupling velocity from the pseudo-inverse of the reduced flow matrix.

    Solves (1/8) sum_mn B_klmn domega_mn = -grad_kl in the k<l pair basis,
    which makes (1/8) tr(O_m^2) + sum_kl grad_kl domega_kl vanish identically;
    the identity survives any spectral cutoff because P B P = P for the
    truncated pseudo-inverse.  The default cutoff is deliberately loose:
    symmetric states carry exact zero modes of the flow tensor that state
    noise lifts to ~1e-12, and retaining them turns noise-level gradients
    into enormous velocities that stall the time stepper.
    """
    n = tensor.n_modes
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (n, n):
        raise ValidationError(f"gradient must be {n}x{n}, got {grad.shape}")
    pairs = _pair_index(n)
    if not pairs:
        return np.zeros((n, n))
    reduced = matricize_b(tensor)
    y = np.array([grad[k, l] for k, l in pairs])
    x = -4.0 * (pseudo_inverse(reduced, rcond=rcond) @ y)
    out = np.zeros((n, n))
    for val, (k, l) in zip(x, pairs):
        out[k, l] = val
        out[l, k] = val
    return out


def dtau_omega_simple(grad: np.ndarray, c: float) -> np.ndarray:
    """Plain gradient descent velocity -grad / c."""
    if not (c > 0.0):
        raise ValidationError(f"descent coefficient must be positive, got {c}")
    return -np.asarray(grad, dtype=float) / c


def dtau_gamma(gamma, h_fa_m: np.ndarray, o_m: np.ndarray) -> np.ndarray:
    """Covariance velocity -H - gamma H gamma + i [gamma, O]; real skew, and
    tangent to the purity manifold ({gamma, dgamma} = 0 when gamma^2 = -1)."""
    g = _as_gamma(gamma)
    h = np.asarray(h_fa_m, dtype=float)
    o = np.asarray(o_m, dtype=complex)
    out = -h - g @ h @ g + 1j * (g @ o - o @ g)
    imag_dev = float(np.max(np.abs(out.imag), initial=0.0))
    if imag_dev > 1e-9 * max(1.0, float(np.max(np.abs(out.real)))):
        raise ValidationError(f"covariance velocity has imaginary residue {imag_dev:.3e}")
    real = out.real
    return 0.5 * (real - real.T)


@dataclass(frozen=True)
class OptimizerState:
    """Live optimizer state: covariance, couplings, time, energy, step size."""

    gamma: CovarianceMatrix
    omega: NonGaussianParams
    tau: float
    energy: float
    step_size: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-step telemetry emitted by :func:`run`."""

    step: int
    tau: float
    energy: float
    grad_norm: float
    dtau: float
    purity_err: float
    wall_ms: float

    def as_dict(self) -> dict:
        grad = None if np.isnan(self.grad_norm) else self.grad_norm
        return {
            "step": self.step,
            "tau": self.tau,
            "energy": self.energy,
            "grad_norm": grad,
            "dtau": self.dtau,
            "purity_err": self.purity_err,
            "wall_ms": self.wall_ms,
        }


@dataclass(frozen=True)
class RunOptions:
    """Optimizer knobs: update variant, step-size policy, stopping rules.

    Setting ``tol_g`` or ``tol_e`` to exactly 0 disables that stopping rule
    (the comparisons are strict, and a gradient can vanish identically at
    symmetric points).
    """

    omega_update: str = "hitgd"  # "hitgd" | "simple"
    simple_c: float | None = None
    freeze_omega: bool = False
    dtau0: float = 0.1
    dtau_max: float = 1.0
    dtau_min: float = 1e-8
    growth: float = 1.2
    tol_g: float = 1e-7
    tol_e: float = 1e-11
    patience: int = 10
    max_steps: int = 5000

    def __post_init__(self):
        if self.omega_update not in ("hitgd", "simple"):
            raise ValidationError(f"unknown omega update {self.omega_update!r}")
        if self.omega_update == "simple" and not self.freeze_omega:
            if self.simple_c is None or not (self.simple_c > 0.0):
                raise ValidationError("simple update needs a positive coefficient c")
        for name in ("dtau0", "dtau_max", "dtau_min"):
            if not (getattr(self, name) > 0.0):
                raise ValidationError(f"{name} must be positive")
        for name in ("tol_g", "tol_e"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be non-negative")
        if self.max_steps < 1 or self.patience < 1:
            raise ValidationError("max_steps and patience must be at least 1")


@dataclass(frozen=True)
class StepInfo:
    """Diagnostics of one accepted step."""

    grad_norm: float
    dtau: float
    backtracks: int
    wall_ms: float


def _coupling_velocity(state: OptimizerState, grad: np.ndarray, options: RunOptions) -> np.ndarray:
    n = state.omega.n_modes
    if options.freeze_omega:
        return np.zeros((n, n))
    if options.omega_update == "hitgd":
        return dtau_omega_hitgd(b_tensor(state.gamma), grad)
    return dtau_omega_simple(grad, options.simple_c)


def step(
    state: OptimizerState,
    hamil: ManyBodyHamiltonian,
    options: RunOptions | None = None,
    grad: np.ndarray | None = None,
) -> tuple[OptimizerState, StepInfo]:
    """One accepted forward-Euler step with backtracking on energy increase.

    The coupling velocity is computed first because the covariance flow
    depends on it through the flux mean-field matrix.  The trial step is
    accepted only if the energy after purification does not rise by more
    than 1e-12; otherwise the step size is halved, down to ``dtau_min``
    (then :class:`StagnationError`).
    """
    options = options or RunOptions()
    t0 = time.perf_counter()
    if grad is None:
        grad = (
            np.zeros((state.omega.n_modes,) * 2)
            if options.freeze_omega
            else energy_gradient_omega(state.gamma, state.omega, hamil)
        )
    domega = _coupling_velocity(state, grad, options)
    o_m = mean_field_o(state.gamma, domega)
    h_m = mean_field_h(state.gamma, state.omega, hamil)
    dgamma = dtau_gamma(state.gamma, h_m, o_m)

    dtau = state.step_size
    backtracks = 0
    while True:
        if dtau < options.dtau_min:
            raise StagnationError(
                f"step size {dtau:.3e} below {options.dtau_min:.0e} without energy decrease"
            )
        try:
            new_omega = NonGaussianParams(
                _wrap_symmetric(state.omega.omega + dtau * domega)
            )
            new_gamma = purify(state.gamma.gamma + dtau * dgamma)
            new_energy = energy(new_gamma, new_omega, hamil)[2]
        except DegeneracyError:
            dtau *= 0.5
            backtracks += 1
            continue
        if new_energy <= state.energy + ENERGY_INCREASE_TOL:
            break
        dtau *= 0.5
        backtracks += 1

    next_size = min(dtau * options.growth, options.dtau_max)
    new_state = OptimizerState(
        gamma=new_gamma,
        omega=new_omega,
        tau=state.tau + dtau,
        energy=new_energy,
        step_size=next_size,
    )
    wall_ms = (time.perf_counter() - t0) * 1e3
    info = StepInfo(
        grad_norm=float(np.max(np.abs(grad), initial=0.0)),
        dtau=dtau,
        backtracks=backtracks,
        wall_ms=wall_ms,
    )
    return new_state, info


def _wrap_symmetric(omega: np.ndarray) -> np.ndarray:
    out = wrap_angles(omega)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return out


def initial_state(
    hamil: ManyBodyHamiltonian,
    options: RunOptions | None = None,
    gamma: CovarianceMatrix | None = None,
    omega: NonGaussianParams | None = None,
    filling: float = 0.5,
    seed: int | None = None,
) -> OptimizerState:
    """Starting point: mean-field covariance (default), random, or explicit.

    ``seed`` draws a random pure covariance instead of the mean-field one;
    the couplings start at zero unless given.
    """
    options = options or RunOptions()
    n = hamil.n_modes
    if gamma is None:
        if seed is not None:
            gamma = random_pure_covariance(n, np.random.default_rng(seed))
        else:
            gamma = mean_field_covariance(hamil.f, round(filling * n))
    if omega is None:
        omega = NonGaussianParams(np.zeros((n, n)))
    e = energy(gamma, omega, hamil)[2]
    return OptimizerState(gamma=gamma, omega=omega, tau=0.0, energy=e, step_size=options.dtau0)


def run(
    hamil: ManyBodyHamiltonian,
    options: RunOptions | None = None,
    state: OptimizerState | None = None,
) -> tuple[OptimizerState, list[TrajectoryRecord], str]:
    """Drive :func:`step` until a stopping rule fires.

    Stops when the gradient max-norm falls below ``tol_g``, when the energy
    change stays below ``tol_e`` for ``patience`` consecutive accepted steps,
    or after ``max_steps`` steps.  Returns the final state, one record per
    accepted step (plus the step-0 baseline), and the stop reason
    ("gradient", "energy", "max_steps").
    """
    options = options or RunOptions()
    if state is None:
        state = initial_state(hamil, options)
    records = [
        TrajectoryRecord(
            step=0,
            tau=state.tau,
            energy=state.energy,
            grad_norm=float("nan"),
            dtau=0.0,
            purity_err=state.gamma.purity_error,
            wall_ms=0.0,
        )
    ]
    flat_count = 0
    reason = "max_steps"
    for k in range(1, options.max_steps + 1):
        grad = (
            np.zeros((state.omega.n_modes,) * 2)
            if options.freeze_omega
            else energy_gradient_omega(state.gamma, state.omega, hamil)
        )
        grad_norm = float(np.max(np.abs(grad), initial=0.0))
        if not options.freeze_omega and grad_norm < options.tol_g:
            reason = "gradient"
            break
        prev_energy = state.energy
        state, info = step(state, hamil, options, grad=grad)
        records.append(
            TrajectoryRecord(
                step=k,
                tau=state.tau,
                energy=state.energy,
                grad_norm=grad_norm,
                dtau=info.dtau,
                purity_err=state.gamma.purity_error,
                wall_ms=info.wall_ms,
            )
        )
        if abs(prev_energy - state.energy) < options.tol_e:
            flat_count += 1
            if flat_count >= options.patience:
                reason = "energy"
                break
        else:
            flat_count = 0
    return state, records, reason
