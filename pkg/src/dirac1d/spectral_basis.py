"""Periodic box, momentum lattice and free massless Dirac plane waves.

Spinors are stored as length-2 complex arrays ``(upper, lower)``. The upper
component is right-moving (sigma_3 = +1), the lower one left-moving.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SimulationDomain:
    """Periodic interval [-L/2, L/2) sampled on ``n_z`` uniform points.

    Admissible mode integers are ``0 < |r| <= r_max``; the zero mode is
    excluded because the plane-wave spinor is undefined at p = 0.
    """

    L: float = 2 * np.pi
    n_z: int = 256
    r_max: int = 16

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError(f"box length must be positive, got {self.L}")
        if int(self.n_z) != self.n_z or self.n_z < 2:
            raise DomainError(f"n_z must be an integer >= 2, got {self.n_z}")
        if int(self.r_max) != self.r_max or self.r_max < 1:
            raise DomainError(f"r_max must be an integer >= 1, got {self.r_max}")

    @property
    def dz(self) -> float:
        return self.L / self.n_z

    @cached_property
    def z(self) -> np.ndarray:
        return -self.L / 2 + self.dz * np.arange(self.n_z)

    @cached_property
    def mode_integers(self) -> np.ndarray:
        r = np.arange(-self.r_max, self.r_max + 1)
        return r[r != 0]

    @property
    def max_resolved_harmonic(self) -> int:
        """Largest mode-integer difference the grid carries without aliasing."""
        return (self.n_z - 1) // 2

    def check_r(self, r: int) -> None:
        if int(r) != r or abs(r) > self.r_max:
            raise DomainError(f"mode integer {r} outside cutoff |r| <= {self.r_max}")

    def with_nz(self, n_z: int) -> "SimulationDomain":
        return SimulationDomain(self.L, n_z, self.r_max)


@dataclass(frozen=True)
class Mode:
    """Plane-wave eigenstate of the free Hamiltonian: energy sign and integer."""

    lam: int
    r: int

    def __post_init__(self):
        if self.lam not in (1, -1):
            raise DomainError(f"energy sign must be +1 or -1, got {self.lam}")
        if int(self.r) != self.r:
            raise DomainError(f"mode integer must be integral, got {self.r}")

    def momentum(self, domain: SimulationDomain) -> float:
        return momentum_of(self.r, domain)

    def energy(self, domain: SimulationDomain) -> float:
        return self.lam * abs(self.momentum(domain))

    @property
    def chirality(self) -> int:
        """+1 if the spinor lives in the upper component, -1 for the lower."""
        if self.r == 0:
            raise DomainError("the zero mode has no defined spinor")
        return 1 if self.lam * self.r > 0 else -1


def momentum_of(r: int, domain: SimulationDomain) -> float:
    domain.check_r(r)
    return 2 * np.pi * r / domain.L


def _spinor(mode: Mode, domain: SimulationDomain) -> np.ndarray:
    domain.check_r(mode.r)
    if mode.r == 0:
        raise DomainError("eigenfunction undefined for r = 0")
    s = np.zeros(2, dtype=complex)
    s[0 if mode.chirality > 0 else 1] = 1 / np.sqrt(domain.L)
    return s


def eigenfunction(mode: Mode, z, domain: SimulationDomain) -> np.ndarray:
    """Free eigenspinor ``(1/2sqrt(L)) (1 + lam p/|p|, 1 - lam p/|p|) e^{ipz}``.

    ``z`` may be a scalar or an array; the result has shape ``(2,) + z.shape``.
    """
    s = _spinor(mode, domain)
    wave = np.exp(1j * mode.momentum(domain) * np.asarray(z, dtype=float))
    return np.multiply.outer(s, wave)


def evolved_eigenfunction(mode: Mode, z, t: float, domain: SimulationDomain) -> np.ndarray:
    phase = np.exp(-1j * mode.energy(domain) * t)
    return eigenfunction(mode, z, domain) * phase


def inner_product(a: Mode, b: Mode, domain: SimulationDomain) -> complex:
    """Closed-form overlap over one period: spinor contraction times plane-wave orthogonality."""
    sa, sb = _spinor(a, domain), _spinor(b, domain)
    if a.r != b.r:
        return 0j
    return complex(np.vdot(sa, sb) * domain.L)


def apply_free_hamiltonian(mode: Mode, z, domain: SimulationDomain) -> np.ndarray:
    """``-i sigma_3 d/dz`` applied analytically to the eigenfunction."""
    psi = eigenfunction(mode, z, domain)
    p = mode.momentum(domain)
    sigma3 = np.array([1.0, -1.0]).reshape((2,) + (1,) * (psi.ndim - 1))
    return -1j * sigma3 * (1j * p) * psi


def periodic_trapezoid(values: np.ndarray, domain: SimulationDomain, axis: int = -1):
    """Trapezoid rule on the periodic grid (a plain Riemann sum times dz)."""
    return np.sum(values, axis=axis) * domain.dz


def spectral_derivative(values: np.ndarray, L: float, axis: int = -1) -> np.ndarray:
    """Fourier derivative of real periodic samples along ``axis``.

    The Nyquist coefficient is dropped since its derivative is not
    representable on the grid.
    """
    n = values.shape[axis]
    coeffs = np.fft.rfft(values, axis=axis)
    k = 2 * np.pi * np.fft.rfftfreq(n, d=L / n)
    if n % 2 == 0:
        k[-1] = 0.0
    shape = [1] * values.ndim
    shape[axis] = k.size
    return np.fft.irfft(1j * k.reshape(shape) * coeffs, n=n, axis=axis)


_FD_STENCILS = {
    2: ((1, 1 / 2),),
    4: ((1, 2 / 3), (2, -1 / 12)),
    6: ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60)),
}


def centered_difference(values: np.ndarray, dz: float, order: int = 4, axis: int = -1) -> np.ndarray:
    """Periodic centered finite-difference derivative of the given accuracy order."""
    try:
        stencil = _FD_STENCILS[order]
    except KeyError:
        raise ValueError(f"unsupported stencil order {order}; choose from {sorted(_FD_STENCILS)}") from None
    out = np.zeros_like(values, dtype=float)
    for shift, w in stencil:
        out += w * (np.roll(values, -shift, axis=axis) - np.roll(values, shift, axis=axis))
    return out / dz
