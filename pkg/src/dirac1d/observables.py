"""Normal-ordered free-field observables built from the exact bilinears.

Write the free field as ``psi_0 = sum_k O_k phi_k`` where ``O_k`` runs over
the electron annihilators ``b_r`` and the positron creators ``d†_r``. Every
quadratic observable is then ``sum_kl G_kl phi_k^† M phi_l`` with the
vacuum-subtracted density matrix ``G_kl = <O_k^† O_l> - <0|O_k^† O_l|0>``.
The subtraction only touches the ``d d†`` block, which becomes ``-Nh^T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError
from .fock import BilinearMatrices, FockState, bilinear_matrices
from .spectral_basis import Mode, SimulationDomain, periodic_trapezoid

REALITY_TOL = 1e-10


@dataclass(frozen=True)
class CurrentProfile:
    z: np.ndarray
    values: np.ndarray
    gradient: np.ndarray | None
    t: float
    q_charge: float = 1.0


@dataclass(frozen=True)
class EnergyReport:
    xi0_initial: float
    xi0_final: float
    delta: float
    method: str  # "quadrature" | "direct" | "closed_form"

    @classmethod
    def from_delta(cls, xi0_initial: float, delta: float, method: str) -> "EnergyReport":
        return cls(xi0_initial, xi0_initial + delta, delta, method)

    @classmethod
    def from_final(cls, xi0_initial: float, xi0_final: float, method: str) -> "EnergyReport":
        return cls(xi0_initial, xi0_final, xi0_final - xi0_initial, method)


def density_matrix(bil: BilinearMatrices) -> np.ndarray:
    """Normal-ordered generalized density matrix over [electron slots, positron slots]."""
    return np.block([[bil.Ne, bil.Pa.conj().T], [bil.Pa, -bil.Nh.T]])


class FreeField:
    """Free-field mode sums for one state on one domain.

    Only the expansion modes touched by the state enter the sums; the rest
    have vanishing rows in the normal-ordered density matrix.
    """

    def __init__(self, state: FockState, domain: SimulationDomain):
        self.domain = domain
        self.bilinears = bilinear_matrices(state, domain.r_max)
        G = density_matrix(self.bilinears)
        r = np.concatenate([self.bilinears.r, self.bilinears.r])
        lam = np.concatenate([np.ones_like(self.bilinears.r), -np.ones_like(self.bilinears.r)])
        active = np.flatnonzero(np.any(G != 0, axis=0) | np.any(G != 0, axis=1))
        self.G = G[np.ix_(active, active)]
        self.r = r[active]
        self.lam = lam[active]
        self.p = 2 * np.pi * self.r / domain.L
        self.omega = self.lam * np.abs(self.p)  # phi_k ~ exp(i (p z - omega t))
        self.chirality = np.sign(self.lam * self.r)

    @property
    def max_harmonic(self) -> int:
        """Largest mode-integer difference appearing in any density."""
        same = self.chirality[:, None] == self.chirality[None, :]
        mask = same & (self.G != 0)
        if not mask.any():
            return 0
        return int(np.max(np.abs(self.r[None, :] - self.r[:, None])[mask]))

    def require_resolved(self, factor: int = 2) -> None:
        """Refuse grids with ``n_z <= factor * max_harmonic``."""
        h = self.max_harmonic
        if self.domain.n_z <= factor * h:
            raise ResolutionError(
                f"n_z={self.domain.n_z} cannot resolve harmonic products up to "
                f"{factor}*{h}; need n_z > {factor * h}"
            )

    def _waves(self, t, z):
        t = np.atleast_1d(np.asarray(t, float))
        z = self.domain.z if z is None else np.atleast_1d(np.asarray(z, float))
        phase = self.p[:, None, None] * z[None, None, :] - self.omega[:, None, None] * t[None, :, None]
        return np.exp(1j * phase)

    def _sum(self, waves, weights_l, chirality=None, deriv=False):
        if chirality is None:
            G = self.G * self.chirality[None, :] * (self.chirality[:, None] == self.chirality[None, :])
        else:
            sel = self.chirality == chirality
            G = self.G * np.outer(sel, sel)
        G = G * weights_l[None, :]
        out = np.einsum("ktz,kl,ltz->tz", waves.conj(), G, waves)
        if deriv:
            # d/dz brings down i (p_l - p_k)
            out = 1j * (np.einsum("ktz,kl,ltz->tz", waves.conj(), G * self.p[None, :], waves)
                        - np.einsum("ktz,kl,ltz->tz", (self.p[:, None, None] * waves).conj(), G, waves))
        residue = np.max(np.abs(out.imag), initial=0.0)
        scale = max(1.0, np.max(np.abs(out.real), initial=0.0))
        if residue > REALITY_TOL * scale:
            raise RuntimeError(f"mode sum has imaginary residue {residue:.3e}")
        return out.real / self.domain.L

    def current(self, t, z=None, deriv=False) -> np.ndarray:
        """Normal-ordered ``<psi_0^† sigma_3 psi_0>`` on a ``(t, z)`` grid (no charge factor)."""
        w = self._waves(t, z)
        return self._sum(w, np.ones(self.r.size), deriv=deriv)

    def density(self, chirality: int, t, z=None) -> np.ndarray:
        w = self._waves(t, z)
        return self._sum(w, np.ones(self.r.size), chirality=chirality)

    def energy_density(self, t, z=None) -> np.ndarray:
        """Normal-ordered ``<psi_0^† H_0 psi_0>``; H_0 acts on mode l as its energy ``omega_l``."""
        w = self._waves(t, z)
        G = self.G * (self.chirality[:, None] == self.chirality[None, :]) * self.omega[None, :]
        out = np.einsum("ktz,kl,ltz->tz", w.conj(), G, w)
        return out.real / self.domain.L


def current_density(state: FockState, t: float, domain: SimulationDomain, q_charge: float = 1.0) -> CurrentProfile:
    field = FreeField(state, domain)
    J = q_charge * field.current(t)[0]
    return CurrentProfile(domain.z, J, None, float(t), q_charge)


def current_gradient(state: FockState, t: float, domain: SimulationDomain, q_charge: float = 1.0) -> CurrentProfile:
    field = FreeField(state, domain)
    J = q_charge * field.current(t)[0]
    dJ = q_charge * field.current(t, deriv=True)[0]
    return CurrentProfile(domain.z, J, dJ, float(t), q_charge)


def component_densities(state: FockState, t: float, domain: SimulationDomain):
    """Right- and left-moving number densities on the grid at time ``t``."""
    field = FreeField(state, domain)
    return field.density(1, t)[0], field.density(-1, t)[0]


def free_energy(state: FockState, domain: SimulationDomain) -> float:
    """``sum_p |p| (Ne_pp + Nh_pp)``: the vacuum-subtracted free Hamiltonian expectation."""
    bil = bilinear_matrices(state, domain.r_max)
    p_abs = np.abs(2 * np.pi * bil.r / domain.L)
    return float(np.sum(p_abs * (np.diag(bil.Ne).real + np.diag(bil.Nh).real)))


def grid_energy(state: FockState, t: float, domain: SimulationDomain) -> float:
    """Free energy from the spatial integral of the energy density at time ``t``."""
    field = FreeField(state, domain)
    return float(periodic_trapezoid(field.energy_density(t)[0], domain))


def _momentum(x, domain):
    if isinstance(x, Mode):
        if domain is None:
            raise ValueError("a domain is required to turn a Mode into a momentum")
        return x.momentum(domain)
    return float(x)


def closed_form_current(p, q, z, t, amplitude: float, domain: SimulationDomain | None = None):
    """Current of the two-electron superposition: ``A (1 + cos((p - q)(z - t)))``."""
    k = _momentum(p, domain) - _momentum(q, domain)
    return amplitude * (1 + np.cos(k * (np.asarray(z) - np.asarray(t))))


def fit_current_amplitude(state: FockState, p, q, domain: SimulationDomain, q_charge: float = 1.0,
                          times=None) -> tuple[float, float]:
    """Least-squares amplitude of the mode-sum current against the two-mode cosine form.

    Returns ``(amplitude, max_abs_residual)`` over the grid and ``times``.
    """
    times = np.linspace(0.0, domain.L, 64, endpoint=False) if times is None else np.asarray(times, float)
    field = FreeField(state, domain)
    J = q_charge * field.current(times)
    shape = closed_form_current(p, q, domain.z[None, :], times[:, None], 1.0, domain)
    A = float(np.sum(J * shape) / np.sum(shape * shape))
    return A, float(np.max(np.abs(J - A * shape)))
