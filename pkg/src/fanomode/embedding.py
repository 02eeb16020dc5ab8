"""Markovian embedding of the single-pole spectral function.

A pole/residue spectral representation maps onto a Lindblad-type generator
for the atom plus one auxiliary damped mode (pseudomode).  The residue is
factorized as

    2 pi i r1 = - g_minus * conj(g_plus),    g_(-/+) = mu -/+ i nu,

which fixes the coherent atom-pseudomode coupling mu together with a complex
cross-damping rate gamma_F = 2 nu.  The generator is of Lindblad form iff
the 2x2 Kossakowski matrix of the dissipative block is positive
semidefinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError, ParameterError
from .spectral import TWO_PI, FanoModel, PoleSpectral, _check_finite


@dataclass(frozen=True)
class EmbeddedQME:
    """Generator data of the atom + pseudomode quantum master equation.

    Coherent part: omega_A, omega_C (= Re z1) and the coupling mu.
    Dissipative part: rates gamma (atom), kappa (pseudomode, = -2 Im z1) and
    the complex cross rate gamma_F (= 2 nu).
    """

    omega_A: float
    omega_C: float
    mu: complex
    gamma: float
    kappa: float
    gamma_F: complex

    def __post_init__(self):
        _check_finite(
            omega_A=self.omega_A, omega_C=self.omega_C, mu=self.mu,
            gamma=self.gamma, kappa=self.kappa, gamma_F=self.gamma_F,
        )
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")

    @property
    def nu(self) -> complex:
        return self.gamma_F / 2.0

    @property
    def g_tilde_minus(self) -> complex:
        return self.mu - 1j * self.nu

    @property
    def g_tilde_plus(self) -> complex:
        return self.mu + 1j * self.nu

    @property
    def z1(self) -> complex:
        return complex(self.omega_C, -self.kappa / 2.0)

    @property
    def J0(self) -> float:
        return self.gamma / TWO_PI


@dataclass(frozen=True)
class KossakowskiMatrix:
    """2x2 Hermitian coefficient matrix of the dissipative block.

    Entries: [[gamma, conj(gamma_F)], [gamma_F, kappa]] in the jump-operator
    ordering (atom lowering, pseudomode annihilation).
    """

    gamma: float
    gamma_F: complex
    kappa: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.gamma, np.conj(self.gamma_F)], [self.gamma_F, self.kappa]],
            dtype=complex,
        )

    @property
    def det(self) -> float:
        return self.gamma * self.kappa - abs(self.gamma_F) ** 2

    @property
    def trace(self) -> float:
        return self.gamma + self.kappa

    def eigenvalues(self) -> np.ndarray:
        """Real eigenvalues in ascending order."""
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class LindbladReport:
    """Positivity verdict for a generator, with the quantities behind it.

    ``scalar_condition`` is (-Im z1) pi J0 - |nu|^2 (= det/4 for these
    generators); ``j0_repair_threshold`` is the background level
    |nu|^2 / (pi (-Im z1)) at which the verdict flips for fixed kappa, nu.
    """

    passed: bool
    eigenvalues: tuple[float, float]
    det: float
    trace: float
    scalar_condition: float
    j0_repair_threshold: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.passed


def embed(
    spec: PoleSpectral, mu: complex, nu: complex, omega_A: float = 0.0
) -> EmbeddedQME:
    """Build the generator from a spectral representation and a factorization.

    The caller supplies (mu, nu) with -(mu - i nu) conj(mu + i nu) = 2 pi i r1;
    the factorization is checked to relative 1e-10 and a mismatch raises
    :class:`FactorizationError` carrying the residual.  ``omega_A`` is not
    part of the spectral data and must be given separately.
    """
    mu = complex(mu)
    nu = complex(nu)
    _check_finite(mu=mu, nu=nu, omega_A=omega_A)
    target = 2j * math.pi * spec.r1
    product = -(mu - 1j * nu) * np.conj(mu + 1j * nu)
    residual = complex(product - target)
    scale = max(abs(target), abs(mu) ** 2 + abs(nu) ** 2, 1e-300)
    if abs(residual) > 1e-10 * scale:
        raise FactorizationError(
            f"(mu, nu) do not factorize 2 pi i r1: residual {residual!r}",
            residual=residual,
        )
    return EmbeddedQME(
        omega_A=omega_A,
        omega_C=spec.z1.real,
        mu=mu,
        gamma=TWO_PI * spec.J0,
        kappa=-2.0 * spec.z1.imag,
        gamma_F=2.0 * nu,
    )


def embed_from_model(model: FanoModel) -> EmbeddedQME:
    """Generator of a physical model, with mu = g and nu = gamma_F / 2.

    The residue factorization admits a one-parameter family; this pins the
    member whose coherent coupling is the physical g.
    """
    return EmbeddedQME(
        omega_A=model.omega_A,
        omega_C=model.omega_C,
        mu=model.g,
        gamma=model.gamma,
        kappa=model.kappa,
        gamma_F=model.gamma_F,
    )


def spectral_from_qme(qme: EmbeddedQME) -> PoleSpectral:
    """Invert the embedding: J0 = gamma/2pi, z1 = omega_C - i kappa/2,
    r1 = -g_minus conj(g_plus) / (2 pi i)."""
    r1 = -qme.g_tilde_minus * np.conj(qme.g_tilde_plus) / (2j * math.pi)
    return PoleSpectral(J0=qme.gamma / TWO_PI, z1=qme.z1, r1=complex(r1))


def kossakowski(qme: EmbeddedQME) -> KossakowskiMatrix:
    """Kossakowski matrix of the generator's dissipative block."""
    return KossakowskiMatrix(gamma=qme.gamma, gamma_F=qme.gamma_F, kappa=qme.kappa)


def is_lindblad(qme: EmbeddedQME) -> LindbladReport:
    """Check positive semidefiniteness of the Kossakowski matrix.

    The PSD test uses a relative tolerance of 1e-12 * trace so that the
    maximal-interference boundary (det = 0) classifies as Lindblad despite
    roundoff.
    """
    gm = kossakowski(qme)
    eigs = gm.eigenvalues()
    tol = 1e-12 * gm.trace
    nu_sq = abs(qme.nu) ** 2
    return LindbladReport(
        passed=bool(eigs[0] >= -tol),
        eigenvalues=(float(eigs[0]), float(eigs[1])),
        det=gm.det,
        trace=gm.trace,
        scalar_condition=(qme.kappa / 2.0) * math.pi * qme.J0 - nu_sq,
        j0_repair_threshold=nu_sq / (math.pi * (qme.kappa / 2.0)),
        tolerance=tol,
    )
