"""Single-excitation dynamics by four mutually validating methods.

All solvers work in the subspace spanned by
{|0>_A|0>_C, |1>_A|0>_C, |0>_A|1>_C} (plus, for the brute-force oracle, the
explicit reservoir modes) and use fixed-step deterministic integrators:

* :func:`solve_volterra`     -- exact memory-kernel equation for c1(t),
  quadrature of the full history convolution, delta part applied
  analytically.
* :func:`solve_amplitudes`   -- coupled (c1, b1) pseudomode amplitudes,
  classical RK4 on the 2x2 non-Hermitian system.
* :func:`solve_qme`          -- full 3x3 master equation, classical RK4.
* :func:`solve_discretized`  -- Schroedinger evolution against an explicit
  frequency comb sampling J(omega); the brute-force oracle.

Fast phases at omega_A are removed internally (rotating frame) and restored
on output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any
import warnings

import numpy as np

from .embedding import EmbeddedQME, kossakowski
from .errors import ParameterError, RecurrenceError, SpectralError, StepSizeError
from .spectral import TWO_PI, PoleSpectral, evaluate_J

# Basis ordering of the truncated atom + pseudomode space.
GROUND, ATOM_EXCITED, CAVITY_EXCITED = 0, 1, 2

SIGMA = np.zeros((3, 3), dtype=complex)
SIGMA[GROUND, ATOM_EXCITED] = 1.0

A_OP = np.zeros((3, 3), dtype=complex)
A_OP[GROUND, CAVITY_EXCITED] = 1.0


@dataclass(frozen=True)
class AmplitudeState:
    """Wavefunction data of one trajectory sample.

    Pi_j is the accumulated quantum-jump (ground-state gain) probability;
    |c0|^2 + |c1|^2 + |b1|^2 + Pi_j = 1 up to integrator tolerance.
    """

    t: float
    c0: complex
    c1: complex
    b1: complex
    pi_j: float

    @property
    def norm_sum(self) -> float:
        return abs(self.c0) ** 2 + abs(self.c1) ** 2 + abs(self.b1) ** 2 + self.pi_j


class DensityMatrix3:
    """3x3 density matrix over {|00>, |10>, |01>} (atom excitation second).

    Validates hermiticity, unit trace (1e-10) and positivity (eigenvalues
    >= -1e-10) on construction.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.array(matrix, dtype=complex)
        if m.shape != (3, 3):
            raise ParameterError(f"density matrix must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ParameterError("density matrix must be finite")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ParameterError("density matrix must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ParameterError(f"density matrix trace must be 1, got {np.trace(m)}")
        if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -1e-10:
            raise ParameterError("density matrix must be positive semidefinite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def ground(cls) -> "DensityMatrix3":
        m = np.zeros((3, 3), dtype=complex)
        m[GROUND, GROUND] = 1.0
        return cls(m)

    @classmethod
    def excited_atom(cls) -> "DensityMatrix3":
        m = np.zeros((3, 3), dtype=complex)
        m[ATOM_EXCITED, ATOM_EXCITED] = 1.0
        return cls(m)

    @classmethod
    def from_amplitudes(
        cls, c0: complex, c1: complex, b1: complex, pi_j: float = 0.0
    ) -> "DensityMatrix3":
        """|psi><psi| of (c0, c1, b1) plus the jump weight on the ground state."""
        psi = np.array([c0, c1, b1], dtype=complex)
        m = np.outer(psi, psi.conj())
        m[GROUND, GROUND] += pi_j
        return cls(m)


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid solver output.

    Amplitude-type methods fill ``c1`` (and, when defined, ``b1``/``pi_j``);
    the master-equation method fills ``rho`` with shape (n+1, 3, 3).
    ``metadata`` snapshots every input needed to reproduce the run.
    """

    times: np.ndarray
    method: str
    c0: complex | None = None
    c1: np.ndarray | None = None
    b1: np.ndarray | None = None
    pi_j: np.ndarray | None = None
    rho: np.ndarray | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def c1_abs2(self) -> np.ndarray:
        if self.c1 is None:
            raise ParameterError(f"method {self.method!r} stores no c1 amplitude")
        return np.abs(self.c1) ** 2

    def state_at(self, index: int) -> AmplitudeState:
        if self.c1 is None or self.b1 is None or self.pi_j is None:
            raise ParameterError(
                f"method {self.method!r} does not record full amplitude states"
            )
        return AmplitudeState(
            t=float(self.times[index]),
            c0=complex(self.c0),
            c1=complex(self.c1[index]),
            b1=complex(self.b1[index]),
            pi_j=float(self.pi_j[index]),
        )


@dataclass(frozen=True)
class DiscretizedReservoir:
    """Frequency comb standing in for the continuum.

    Real couplings g_k = sqrt(J(omega_k) d_omega); the phase of g_k is pure
    gauge (only |g_k|^2 enters J) and is fixed to zero.
    """

    omegas: np.ndarray
    couplings: np.ndarray
    delta_omega: float

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    @property
    def recurrence_time(self) -> float:
        """Poincare recurrence scale 2 pi / d_omega of the comb."""
        return TWO_PI / self.delta_omega


def _time_grid(t_max: float, h: float) -> np.ndarray:
    if h <= 0 or not np.isfinite(h):
        raise ParameterError(f"h must be > 0, got {h}")
    if not np.isfinite(t_max) or t_max < h:
        raise ParameterError(f"t_max must be >= h, got t_max={t_max}, h={h}")
    n = max(1, round(t_max / h))
    return h * np.arange(n + 1)


def _c0_from_c1(c1_0: complex) -> float:
    p = abs(c1_0) ** 2
    if p > 1.0 + 1e-12:
        raise ParameterError(f"|c1(0)| must be <= 1, got |c1(0)|^2 = {p}")
    return math.sqrt(max(0.0, 1.0 - p))


def _jump_rate(gamma: float, kappa: float, gamma_F: complex,
               c1: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Ground-state gain rate gamma|c1|^2 + kappa|b1|^2 + 2 Re(gamma_F b1 c1*).

    This is the Kossakowski quadratic form sum_{mn} G_mn amp_m conj(amp_n)
    with amp = (c1, b1); it is invariant under the common rotating frame.
    """
    return (
        gamma * np.abs(c1) ** 2
        + kappa * np.abs(b1) ** 2
        + 2.0 * (gamma_F * b1 * np.conj(c1)).real
    )


def solve_amplitudes(
    qme: EmbeddedQME, c1_0: complex, t_max: float, h: float
) -> Trajectory:
    """Integrate the coupled pseudomode amplitude equations

        dc1/dt = -(i omega_A + gamma/2) c1 - i g_minus b1,
        db1/dt = -i z1 b1 - i conj(g_plus) c1,

    with b1(0) = 0 (reservoir vacuum), by classical RK4 in the omega_A
    rotating frame.  The jump probability Pi_j is accumulated alongside by
    integrating its rate with the same RK4 stages, so the norm identity
    holds to the integrator order.
    """
    times = _time_grid(t_max, h)
    c0 = _c0_from_c1(c1_0)
    n = len(times) - 1

    a_mat = np.array(
        [
            [-0.5 * qme.gamma, -1j * qme.g_tilde_minus],
            [-1j * np.conj(qme.g_tilde_plus), -1j * (qme.z1 - qme.omega_A)],
        ],
        dtype=complex,
    )
    eye = np.eye(2, dtype=complex)
    stage2 = eye + 0.5 * h * a_mat
    stage3 = eye + 0.5 * h * (a_mat @ stage2)
    stage4 = eye + h * (a_mat @ stage3)
    step = eye + (h / 6.0) * (a_mat @ (eye + 2.0 * stage2 + 2.0 * stage3 + stage4))

    states = np.empty((n + 1, 2), dtype=complex)
    states[0] = (c1_0, 0.0)
    for i in range(n):
        states[i + 1] = step @ states[i]

    def rates(mat: np.ndarray) -> np.ndarray:
        s = states[:-1] @ mat.T
        return _jump_rate(qme.gamma, qme.kappa, qme.gamma_F, s[:, 0], s[:, 1])

    k1 = rates(eye)
    k2 = rates(stage2)
    k3 = rates(stage3)
    k4 = rates(stage4)
    increments = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    pi_j = np.concatenate(([0.0], np.cumsum(increments)))

    phase = np.exp(-1j * qme.omega_A * times)
    return Trajectory(
        times=times,
        method="amplitudes",
        c0=complex(c0),
        c1=states[:, 0] * phase,
        b1=states[:, 1] * phase,
        pi_j=pi_j,
        metadata={"qme": qme, "c1_0": complex(c1_0), "t_max": t_max, "h": h},
    )


# Composite quadrature weights for the history integral over j = 0..m.
# m >= 5 uses the order-4 Gregory rule (trapezoid + third-order endpoint
# corrections); shorter histories use Simpson / 3-8 stencils of the same
# order.  Histories shorter than 3 steps never hit the quadrature: those
# points come from the startup Taylor expansion.
_GREGORY_EDGE = (3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0)
_SHORT_WEIGHTS = {
    3: (3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0),
    4: (1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0),
    5: (3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0, 23.0 / 24.0, 7.0 / 6.0, 3.0 / 8.0),
}


def _dot(a: np.ndarray, b: np.ndarray) -> complex:
    """Pairwise-summed dot product.

    numpy's pairwise reduction depends only on length, not on buffer
    alignment, so results are bit-for-bit reproducible across allocations
    (BLAS dots are not).
    """
    return complex(np.add.reduce(a * b))


def _history_quadrature(kt, kt_rev, u, n_total, m):
    """sum_j W_j kt[m - j] u[j] over j = 0..m-1 for the integral up to t_m.

    The j = m endpoint term (weight times kt[0] u[m]) is left out so the
    caller can fold it into an implicit step; the endpoint weight is
    returned alongside.
    """
    if m < 6:
        w = _SHORT_WEIGHTS[m]
        total = sum(w[j] * kt[m - j] * u[j] for j in range(m))
        return total, w[m]
    # Interior weight 1 over j = 0..m-1, then edge corrections.
    total = _dot(kt_rev[n_total - m : n_total], u[:m])
    e0, e1, e2 = _GREGORY_EDGE
    total += (e0 - 1.0) * kt[m] * u[0] + (e1 - 1.0) * kt[m - 1] * u[1]
    total += (e2 - 1.0) * kt[m - 2] * u[2]
    total += (e2 - 1.0) * kt[2] * u[m - 2] + (e1 - 1.0) * kt[1] * u[m - 1]
    return total, e0


def _volterra_taylor_start(u0, damping, k0, delta, times):
    """Values and derivatives of the memory-kernel solution at small t.

    Differentiating the rotated equation u' = -damping u - I(t) with
    I(t) = int_0^t k0 e^{-i delta (t-s)} u(s) ds gives the closed recursion
    u^(k+1) = -damping u^(k) - I^(k), I^(k+1) = k0 u^(k) - i delta I^(k),
    whose Taylor series converges like an exponential; terms are summed
    until they fall below roundoff.
    """
    values, derivs = [], []
    for t in times:
        u_k, i_k = complex(u0), 0.0j
        u_sum, du_sum = u_k, 0.0j
        factorial_term = 1.0
        for k in range(1, 60):
            u_k, i_k = -damping * u_k - i_k, k0 * u_k - 1j * delta * i_k
            factorial_term *= t / k
            du_sum += u_k * factorial_term * (k / t) if t != 0 else 0.0
            term = u_k * factorial_term
            u_sum += term
            if abs(term) < 1e-18 * max(1.0, abs(u_sum)) and k > 6:
                break
        values.append(u_sum)
        derivs.append(du_sum)
    return values, derivs


def solve_volterra(
    spec: PoleSpectral, omega_A: float, c1_0: complex, t_max: float, h: float
) -> Trajectory:
    """Integrate the exact memory-kernel equation

        dc1/dt = -i omega_A c1 - int_0^t F(t - t') c1(t') dt'

    directly, keeping the full amplitude history.  The delta part of F
    contributes half its weight at the endpoint of the one-sided integral,
    i.e. a local -pi J0 c1(t) damping, applied analytically and never
    smeared onto the grid.  The regular part is convolved against the
    stored history with fourth-order Gregory weights, and the step is the
    implicit fourth-order Adams-Moulton rule (started from the equation's
    own Taylor expansion).  Global error O(h^4).
    """
    times = _time_grid(t_max, h)
    c0 = _c0_from_c1(c1_0)
    n = len(times) - 1

    damping = math.pi * spec.J0
    kernel_scale = max(abs(TWO_PI * spec.r1), damping)
    if h * kernel_scale > 0.1:
        raise StepSizeError(
            f"h * max|kernel| = {h * kernel_scale:.3g} > 0.1; reduce h"
        )

    # Regular kernel in the omega_A rotating frame, on the time grid.
    delta = spec.z1 - omega_A
    k0 = -1j * TWO_PI * spec.r1
    kt = k0 * np.exp(-1j * delta * times)
    kt_rev = kt[::-1].copy()  # kt_rev[n - m] = kt[m]; keeps history dots contiguous

    u = np.zeros(n + 1, dtype=complex)
    f = np.zeros(n + 1, dtype=complex)  # du/dt samples for the multistep rule
    u[0] = c1_0
    f[0] = -damping * c1_0
    starts = min(n, 2)
    if starts:
        values, derivs = _volterra_taylor_start(
            c1_0, damping, k0, delta, [(i + 1) * h for i in range(starts)]
        )
        u[1 : starts + 1] = values
        f[1 : starts + 1] = derivs

    for m in range(3, n + 1):
        partial, w_end = _history_quadrature(kt, kt_rev, u, n, m)
        denom = 1.0 + (9.0 * h / 24.0) * damping + (9.0 * h * h / 24.0) * w_end * kt[0]
        explicit = u[m - 1] + (h / 24.0) * (
            19.0 * f[m - 1] - 5.0 * f[m - 2] + f[m - 3]
        ) - (9.0 * h * h / 24.0) * partial
        u[m] = explicit / denom
        f[m] = -damping * u[m] - h * (partial + w_end * kt[0] * u[m])

    phase = np.exp(-1j * omega_A * times)
    return Trajectory(
        times=times,
        method="volterra",
        c0=complex(c0),
        c1=u * phase,
        metadata={
            "spec": spec, "omega_A": omega_A, "c1_0": complex(c1_0),
            "t_max": t_max, "h": h,
        },
    )


def _qme_rhs_operators(qme: EmbeddedQME):
    h_ac = np.zeros((3, 3), dtype=complex)
    h_ac[ATOM_EXCITED, ATOM_EXCITED] = qme.omega_A
    h_ac[CAVITY_EXCITED, CAVITY_EXCITED] = qme.omega_C
    h_ac[ATOM_EXCITED, CAVITY_EXCITED] = qme.mu
    h_ac[CAVITY_EXCITED, ATOM_EXCITED] = np.conj(qme.mu)

    gm = kossakowski(qme).matrix
    ops = (SIGMA, A_OP)
    return h_ac, gm, ops


def solve_qme(
    qme: EmbeddedQME, rho_0: "DensityMatrix3 | np.ndarray", t_max: float, h: float
) -> Trajectory:
    """Integrate the full master equation

        drho/dt = -i [H_AC, rho]
                  + sum_{mn} G_mn (X_m rho X_n^dag - {X_n^dag X_m, rho} / 2)

    with X_1 the atom lowering operator and X_2 the pseudomode annihilation
    operator, by classical RK4.  The generator is traceless in range, so the
    trace is preserved to roundoff.
    """
    if not isinstance(rho_0, DensityMatrix3):
        rho_0 = DensityMatrix3(rho_0)
    times = _time_grid(t_max, h)
    n = len(times) - 1
    h_ac, gm, ops = _qme_rhs_operators(qme)

    pairs = []
    for m_idx in range(2):
        for n_idx in range(2):
            coeff = gm[m_idx, n_idx]
            if coeff == 0:
                continue
            x_m = ops[m_idx]
            xnd = ops[n_idx].conj().T
            pairs.append((coeff, x_m, xnd, xnd @ x_m))

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -1j * (h_ac @ rho - rho @ h_ac)
        for coeff, x_m, xnd, xndxm in pairs:
            out += coeff * (x_m @ rho @ xnd - 0.5 * (xndxm @ rho + rho @ xndxm))
        return out

    rhos = np.empty((n + 1, 3, 3), dtype=complex)
    rhos[0] = rho_0.matrix
    rho = rhos[0]
    for i in range(n):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rhos[i + 1] = rho

    return Trajectory(
        times=times,
        method="qme",
        rho=rhos,
        metadata={"qme": qme, "rho_0": rho_0.matrix, "t_max": t_max, "h": h},
    )


def build_discretized(
    spec: PoleSpectral, window: float, n_modes: int
) -> DiscretizedReservoir:
    """Sample J on a uniform comb of ``n_modes`` frequencies over
    [Re z1 - window, Re z1 + window].

    Requires n_modes >= 100 and window >= 20 pole widths so that the comb
    can stand in for the continuum.  A genuinely negative J sample raises
    :class:`SpectralError`; roundoff-level negatives at a spectral zero are
    clamped to 0.
    """
    if n_modes < 100:
        raise ParameterError(f"n_modes must be >= 100, got {n_modes}")
    if window < 20.0 * spec.kappa:
        raise ParameterError(
            f"window must cover >= 20 pole widths ({20 * spec.kappa:.3g}), got {window}"
        )
    omegas = np.linspace(spec.z1.real - window, spec.z1.real + window, n_modes)
    j_vals = evaluate_J(spec, omegas)
    scale = spec.J0 + abs(spec.r1) / spec.kappa
    if np.min(j_vals) < -1e-12 * max(scale, 1e-300):
        raise SpectralError(
            f"spectral function is negative on the grid (min {np.min(j_vals):.3g})"
        )
    j_vals = np.maximum(j_vals, 0.0)
    delta_omega = omegas[1] - omegas[0]
    return DiscretizedReservoir(
        omegas=omegas,
        couplings=np.sqrt(j_vals * delta_omega),
        delta_omega=float(delta_omega),
    )


def solve_discretized(
    res: DiscretizedReservoir, omega_A: float, c1_0: complex, t_max: float, h: float
) -> Trajectory:
    """Exact Schroedinger evolution of the atom + comb system

        dc1/dt = -i omega_A c1 - i sum_k g_k c_k,
        dc_k/dt = -i omega_k c_k - i g_k c1,

    by classical RK4 in the omega_A rotating frame.  Refuses t_max past half
    the comb's recurrence time, where the finite comb stops mimicking the
    continuum.  The per-step reservoir population is recorded in
    ``extras["reservoir_population"]``.
    """
    if t_max >= 0.5 * res.recurrence_time:
        raise RecurrenceError(
            f"t_max = {t_max} exceeds half the recurrence time "
            f"{res.recurrence_time:.3g} of the comb; increase n_modes"
        )
    times = _time_grid(t_max, h)
    c0 = _c0_from_c1(c1_0)
    n = len(times) - 1

    detunings = res.omegas - omega_A
    max_rate = float(np.max(np.abs(detunings)))
    if h * max_rate > 2.5:
        raise StepSizeError(
            f"h * max|detuning| = {h * max_rate:.3g} > 2.5 (RK4 unstable); reduce h"
        )
    g = res.couplings.astype(complex)

    def rhs(y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        out[0] = -1j * np.add.reduce(g * y[1:])
        out[1:] = -1j * (detunings * y[1:] + g * y[0])
        return out

    y = np.zeros(res.n_modes + 1, dtype=complex)
    y[0] = c1_0
    c1 = np.empty(n + 1, dtype=complex)
    reservoir_pop = np.empty(n + 1, dtype=float)
    c1[0] = y[0]
    reservoir_pop[0] = 0.0
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c1[i + 1] = y[0]
        reservoir_pop[i + 1] = float(np.sum(np.abs(y[1:]) ** 2))

    phase = np.exp(-1j * omega_A * times)
    return Trajectory(
        times=times,
        method="discretized",
        c0=complex(c0),
        c1=c1 * phase,
        extras={"reservoir_population": reservoir_pop},
        metadata={
            "n_modes": res.n_modes, "delta_omega": res.delta_omega,
            "omega_A": omega_A, "c1_0": complex(c1_0), "t_max": t_max, "h": h,
        },
    )


def decay_rate(traj: Trajectory, fit_window: tuple[float, float]) -> float:
    """Least-squares decay rate of |c1|^2 over ``fit_window``.

    Fits -log|c1(t)|^2 with a straight line and returns the slope.  The
    population must be strictly positive on the window; a non-monotone
    population triggers a fit-quality warning (the fit still runs).
    """
    t_a, t_b = fit_window
    if not t_b > t_a:
        raise ParameterError(f"fit window must have t_b > t_a, got {fit_window}")
    mask = (traj.times >= t_a) & (traj.times <= t_b)
    if np.count_nonzero(mask) < 2:
        raise ParameterError(f"fit window {fit_window} selects fewer than 2 samples")
    population = traj.c1_abs2[mask]
    if np.min(population) <= 0.0:
        raise ParameterError("|c1|^2 must be strictly positive on the fit window")
    if np.any(np.diff(population) > 0.0):
        warnings.warn(
            "population is not monotone on the fit window; decay-rate fit "
            "quality is degraded",
            UserWarning,
            stacklevel=2,
        )
    slope, _ = np.polyfit(traj.times[mask], -np.log(population), 1)
    return float(slope)
