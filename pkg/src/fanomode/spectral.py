"""Spectral function of a lossy atom-cavity system with Fano interference.

The reservoir coupling density has the form

    J(omega) = J0 + f(omega)

with a constant background J0 and a single conjugate pole pair

    f(omega) = r1/(omega - z1) + r1*/(omega - z1*),   Im z1 < 0,

which is real on the real axis by construction.  For a physical model the
background is J0 = gamma/(2 pi), the pole sits at z1 = omega_C - i kappa/2,
and the residue r1 carries the Fano interference between the direct atom
decay channel and the cavity-mediated one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError

TWO_PI = 2.0 * math.pi


def _check_finite(**values) -> None:
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class FanoModel:
    """Parameter bundle of the dissipative atom-cavity system.

    All frequencies and rates share one unit; kappa = 1 is the conventional
    choice.  ``eta`` in [0, 1] sets the interference strength (0: independent
    decay channels, 1: maximal Fano interference); values above 1 are
    accepted but yield a non-Lindblad generator (see
    :func:`fanomode.embedding.is_lindblad`).

    Attributes:
        gamma: atom loss rate (>= 0).
        kappa: cavity loss rate (> 0).
        g_abs: magnitude of the atom-cavity coupling (>= 0).
        eta: Fano interference strength (>= 0).
        omega_A: atom transition frequency.
        omega_C: cavity frequency.
        phi: phase of the atom-cavity coupling g = g_abs * exp(i phi).
        theta_A: phase of the atom-reservoir coupling.
        theta_C: phase of the cavity-reservoir coupling.
    """

    gamma: float
    kappa: float
    g_abs: float
    eta: float
    omega_A: float = 0.0
    omega_C: float = 0.0
    phi: float = 0.0
    theta_A: float = 0.0
    theta_C: float = 0.0

    def __post_init__(self):
        _check_finite(
            gamma=self.gamma, kappa=self.kappa, g_abs=self.g_abs, eta=self.eta,
            omega_A=self.omega_A, omega_C=self.omega_C, phi=self.phi,
            theta_A=self.theta_A, theta_C=self.theta_C,
        )
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.g_abs < 0:
            raise ParameterError(f"g_abs must be >= 0, got {self.g_abs}")
        if self.eta < 0:
            # eta > 1 is allowed (non-Lindblad regime); eta < 0 would make the
            # cross rate sqrt(eta*gamma*kappa) imaginary and is rejected.
            raise ParameterError(f"eta must be >= 0, got {self.eta}")

    @property
    def g(self) -> complex:
        """Complex atom-cavity coupling g = |g| e^{i phi}."""
        return self.g_abs * cmath.exp(1j * self.phi)

    @property
    def delta_phi(self) -> float:
        """Relative phase phi - theta_A + theta_C entering the Fano parameter."""
        return self.phi - self.theta_A + self.theta_C

    @property
    def gamma_F(self) -> complex:
        """Complex cross-damping rate sqrt(eta gamma kappa) e^{i(theta_A - theta_C)}."""
        return math.sqrt(self.eta * self.gamma * self.kappa) * cmath.exp(
            1j * (self.theta_A - self.theta_C)
        )

    @property
    def q(self) -> complex:
        """Complex Fano parameter q = 2 |g| e^{i delta_phi} / sqrt(gamma kappa)."""
        if self.gamma == 0:
            raise ParameterError("q is undefined for gamma = 0")
        return (
            2.0 * self.g_abs * cmath.exp(1j * self.delta_phi)
            / math.sqrt(self.gamma * self.kappa)
        )


@dataclass(frozen=True)
class PoleSpectral:
    """Pole/residue representation of J(omega) = J0 + f(omega).

    ``J0 >= 0`` and ``Im z1 < 0`` are enforced; ``r1`` is unconstrained, so a
    hand-built instance may describe a spectral function that goes negative
    (consumers that require J >= 0 check for themselves).
    """

    J0: float
    z1: complex
    r1: complex

    def __post_init__(self):
        _check_finite(J0=self.J0, z1=self.z1, r1=self.r1)
        if self.J0 < 0:
            raise ParameterError(f"J0 must be >= 0, got {self.J0}")
        if not self.z1.imag < 0:
            raise ParameterError(f"z1 must lie in the lower half plane, got {self.z1}")

    @property
    def kappa(self) -> float:
        """Width -2 Im z1 of the pole."""
        return -2.0 * self.z1.imag


@dataclass(frozen=True)
class ReducedForm:
    """Reduced parameterization of J over the detuning epsilon = 2(omega - omega_C)/kappa.

    2 pi J(epsilon) = gamma / (epsilon^2 + 1) * [ |epsilon + sqrt(eta) q|^2
                      + (1 - eta)(1 + |q|^2) ].
    """

    gamma: float
    q: complex
    eta: float

    def __post_init__(self):
        _check_finite(gamma=self.gamma, q=self.q, eta=self.eta)
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.eta < 0:
            raise ParameterError(f"eta must be >= 0, got {self.eta}")


class MemoryKernel(NamedTuple):
    """Memory kernel F(tau) split into its delta part and regular part.

    F(tau) = delta_weight * delta(tau) + regular(tau); the delta weight is
    reported symbolically and must never be smeared onto a time grid.
    """

    delta_weight: float
    regular: complex | np.ndarray


class QuadratureResult(NamedTuple):
    """Value of a numerical quadrature together with a rough error estimate.

    ``error_estimate`` combines a grid-halving (discretization) and a
    window-halving (truncation) difference; it is an order-of-magnitude
    indicator, not a strict bound.
    """

    value: complex
    error_estimate: float


def pole_residue_from_model(model: FanoModel) -> PoleSpectral:
    """Pole/residue data of the spectral function of ``model``.

    J0 = gamma / 2 pi,  z1 = omega_C - i kappa / 2, and

        r1 = (i / 2 pi) [ |g|^2 - eta gamma kappa / 4
                          - i |g| sqrt(eta gamma kappa) cos(delta_phi) ].
    """
    cross = math.sqrt(model.eta * model.gamma * model.kappa)
    r1 = (1j / TWO_PI) * (
        model.g_abs**2
        - model.eta * model.gamma * model.kappa / 4.0
        - 1j * model.g_abs * cross * math.cos(model.delta_phi)
    )
    return PoleSpectral(
        J0=model.gamma / TWO_PI,
        z1=complex(model.omega_C, -model.kappa / 2.0),
        r1=r1,
    )


def evaluate_J(spec: PoleSpectral, omega: float | np.ndarray) -> float | np.ndarray:
    """Spectral function J(omega) from its pole/residue form.

    J = J0 + 2 [Re r1 (omega - Re z1) - Im z1 Im r1]
            / [(omega - Re z1)^2 + (Im z1)^2]
    """
    w = np.asarray(omega, dtype=float)
    x = w - spec.z1.real
    out = spec.J0 + 2.0 * (spec.r1.real * x - spec.z1.imag * spec.r1.imag) / (
        x * x + spec.z1.imag**2
    )
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return float(out)
    return out


def reduced_form_from_model(model: FanoModel) -> ReducedForm:
    """Reduced (gamma, q, eta) parameterization of ``model``; needs gamma > 0."""
    return ReducedForm(gamma=model.gamma, q=model.q, eta=model.eta)


def evaluate_reduced_J(rf: ReducedForm, epsilon: float | np.ndarray) -> float | np.ndarray:
    """J as a function of the reduced detuning epsilon = 2(omega - omega_C)/kappa."""
    eps = np.asarray(epsilon, dtype=float)
    shifted = eps + math.sqrt(rf.eta) * rf.q
    bracket = np.abs(shifted) ** 2 + (1.0 - rf.eta) * (1.0 + abs(rf.q) ** 2)
    out = rf.gamma / TWO_PI * bracket / (eps * eps + 1.0)
    if np.isscalar(epsilon) or np.ndim(epsilon) == 0:
        return float(out)
    return out


def memory_kernel(spec: PoleSpectral, tau: float | np.ndarray) -> MemoryKernel:
    """Memory kernel F(tau) = 2 pi J0 delta(tau) - 2 pi i r1 e^{-i z1 tau}.

    The delta term is returned as a separate weight 2 pi J0; the regular part
    decays like exp(Im z1 * tau) = exp(-kappa tau / 2).  Requires tau >= 0.
    """
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    regular = -1j * TWO_PI * spec.r1 * np.exp(-1j * spec.z1 * t)
    if np.isscalar(tau) or np.ndim(tau) == 0:
        regular = complex(regular)
    return MemoryKernel(delta_weight=TWO_PI * spec.J0, regular=regular)


def kernel_by_quadrature(
    spec: PoleSpectral, tau: float, window: float, n_points: int
) -> QuadratureResult:
    """Composite-trapezoid evaluation of the regular kernel part.

    Integrates f(omega) e^{-i omega tau} over [Re z1 - window, Re z1 + window]
    on a uniform grid; the delta part of F is excluded analytically.  For
    tau > 0 this converges to ``memory_kernel(spec, tau).regular`` as window
    and n_points grow; the slowly decaying 1/omega tail of f makes the
    truncation error fall off only like 1/(window * tau), which dominates the
    reported estimate at practical settings.
    """
    _check_finite(tau=tau, window=window)
    if window <= 0:
        raise ParameterError(f"window must be > 0, got {window}")
    if n_points < 2:
        raise ParameterError(f"n_points must be >= 2, got {n_points}")

    def integrate(grid: np.ndarray) -> complex:
        f = evaluate_J(spec, grid) - spec.J0
        integrand = f * np.exp(-1j * grid * tau)
        h = grid[1] - grid[0]
        return complex(h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1])))

    grid = np.linspace(spec.z1.real - window, spec.z1.real + window, n_points)
    value = integrate(grid)

    # Discretization estimate: compare with the half-resolution subgrid.
    est_disc = abs(value - integrate(grid[::2])) if n_points >= 5 else abs(value)
    # Truncation estimate: compare with the central half-window slice.
    quarter = (n_points - 1) // 4
    if quarter >= 1:
        est_trunc = abs(value - integrate(grid[quarter : n_points - quarter]))
    else:
        est_trunc = abs(value)
    return QuadratureResult(value=value, error_estimate=est_disc + est_trunc)
