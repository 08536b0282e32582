"""Classical potentials and the exact phase fields of the interacting field.

The interacting field is ``psi = W psi_0`` with ``W = diag(exp(-i c1), exp(-i c2))``
and

    dc1/dt + dc1/dz = q V,      dc2/dt - dc2/dz = q V,      c1 = c2 = 0 at t = 0.

Along the characteristics ``z -/+ t = const`` these collapse to

    c1(z, t) = q int_0^t V(z - t + s, s) ds
    c2(z, t) = q int_0^t V(z + t - s, s) ds.

The solver samples V on the shared (t, z) grid and reaches the off-grid
points on each characteristic by Fourier interpolation in z, which is exact
for potentials band-limited below the grid Nyquist frequency. The remaining
time integrals are cumulative Simpson (or trapezoid) sums on the time nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigError
from .fock import FockState
from .observables import FreeField
from .spectral_basis import SimulationDomain


def cumulative_simpson(y: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    """Running integral from node 0 to every node.

    Even nodes get plain composite Simpson; odd nodes append a 3/8 panel to
    the preceding even node (node 1 uses the three-point partial rule), so
    the value at the last node is the standard composite rule used by
    ``quad_last``.
    """
    y = np.moveaxis(np.asarray(y), axis, 0)
    n = y.shape[0] - 1
    if n < 2:
        raise ConfigError("Simpson integration needs at least two panels")
    out = np.zeros_like(y, dtype=np.result_type(y, float))
    pairs = dx / 3 * (y[0:-2:2] + 4 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pairs, axis=0)
    out[1] = dx / 12 * (5 * y[0] + 8 * y[1] - y[2])
    ks = np.arange(3, n + 1, 2)
    if ks.size:
        out[ks] = out[ks - 3] + 3 * dx / 8 * (y[ks - 3] + 3 * y[ks - 2] + 3 * y[ks - 1] + y[ks])
    return np.moveaxis(out, 0, axis)


def cumulative_integral(y: np.ndarray, dx: float, rule: str, axis: int = 0) -> np.ndarray:
    if rule == "simpson":
        return cumulative_simpson(y, dx, axis=axis)
    if rule == "trapezoid":
        return cumulative_trapezoid(y, dx=dx, axis=axis, initial=0)
    raise ConfigError(f"unknown quadrature rule {rule!r}")


def smooth_ramp(t: np.ndarray, t_f: float, width: float) -> np.ndarray:
    """sin^2 switch-on/off over ``width`` at both window edges; 1 in between."""
    t = np.asarray(t, float)
    w = min(width, t_f / 2)
    up = np.sin(np.pi / 2 * np.clip(t / w, 0, 1)) ** 2
    down = np.sin(np.pi / 2 * np.clip((t_f - t) / w, 0, 1)) ** 2
    return up * down


@dataclass
class PotentialField:
    """Base class: a potential switched on only for ``0 < t < t_f``.

    Subclasses implement ``_interior(times, z)``, the in-window expression
    continued to the closed interval. Quadratures over the window use those
    one-sided limits at ``t = 0`` and ``t = t_f``; calling the field itself
    applies the hard window.
    """

    t_f: float
    ramp: float | None = field(default=None, kw_only=True)

    kind = "abstract"
    default_rule = "simpson"

    def __post_init__(self):
        if not self.t_f > 0:
            raise ConfigError(f"t_f must be positive, got {self.t_f}")

    def _interior(self, times: np.ndarray, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def samples(self, times, z) -> np.ndarray:
        """In-window values on the ``(times, z)`` product grid, shape ``(nt, nz)``."""
        times = np.atleast_1d(np.asarray(times, float))
        z = np.atleast_1d(np.asarray(z, float))
        V = self._interior(times, z)
        if self.ramp:
            V = V * smooth_ramp(times, self.t_f, self.ramp)[:, None]
        return V

    def __call__(self, z, t: float) -> np.ndarray:
        z = np.asarray(z, float)
        if t <= 0 or t >= self.t_f:
            return np.zeros_like(z)
        return self.samples([t], z.ravel())[0].reshape(z.shape)


@dataclass
class AnalyticPotential(PotentialField):
    """Potential given by a vectorized callable ``func(z, t)``."""

    func: Callable = None

    kind = "analytic"

    def _interior(self, times, z):
        return np.asarray(self.func(z[None, :], times[:, None]), float) * np.ones((times.size, z.size))


@dataclass
class TabulatedPotential(PotentialField):
    """Samples ``values[t_index, z_index]`` on ``n_t + 1`` time nodes spanning [0, t_f].

    Off-grid z is reached by Fourier interpolation; time must hit the nodes.
    """

    values: np.ndarray = None
    L: float = 2 * np.pi

    kind = "tabulated"
    default_rule = "trapezoid"

    def __post_init__(self):
        super().__post_init__()
        self.values = np.asarray(self.values, float)
        if self.values.ndim != 2 or self.values.shape[0] < 3 or self.values.shape[1] < 2:
            raise ConfigError("tabulated potential needs a (n_t + 1, n_z) table with n_t >= 2")

    @property
    def n_t(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_f, self.n_t + 1)

    def _interior(self, times, z):
        idx = np.rint(times / self.t_f * self.n_t).astype(int)
        if np.any(np.abs(idx * self.t_f / self.n_t - times) > 1e-12 * max(1.0, self.t_f)):
            raise ConfigError("tabulated potential can only be evaluated on its time nodes")
        rows = self.values[idx]
        n_z = rows.shape[1]
        grid = -self.L / 2 + self.L / n_z * np.arange(n_z)
        if z.size == n_z and np.allclose(z, grid, atol=1e-12):
            return rows.copy()
        return fourier_interpolate(rows, self.L, z - grid[0])


@dataclass
class FeedbackPotential(PotentialField):
    """``V(z, t) = -f dJ0/dz`` with J0 the free current of ``state`` (charge included)."""

    state: FockState = None
    f: float = 1.0
    domain: SimulationDomain = None
    q_charge: float = 1.0

    kind = "feedback"

    def __post_init__(self):
        super().__post_init__()
        self._field = FreeField(self.state, self.domain)

    @property
    def free_field(self) -> FreeField:
        return self._field

    def _interior(self, times, z):
        if self.f == 0:
            return np.zeros((times.size, z.size))
        return -self.f * self.q_charge * self._field.current(times, z, deriv=True)


def feedback_potential(state: FockState, f: float, t_f: float, domain: SimulationDomain,
                       q_charge: float = 1.0, ramp: float | None = None) -> FeedbackPotential:
    return FeedbackPotential(t_f, ramp=ramp, state=state, f=f, domain=domain, q_charge=q_charge)


def fourier_interpolate(rows: np.ndarray, L: float, x: np.ndarray) -> np.ndarray:
    """Evaluate real periodic samples (last axis, origin at x = 0) at arbitrary ``x``.

    The Nyquist coefficient is interpreted as a cosine so the result is real.
    """
    n = rows.shape[-1]
    a = np.fft.rfft(rows, axis=-1) / n
    w = np.full(a.shape[-1], 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    k = 2 * np.pi * np.arange(a.shape[-1]) / L
    return np.real(np.einsum("...h,hx->...x", a * w, np.exp(1j * np.outer(k, x))))


@dataclass(frozen=True)
class PhaseFields:
    """c1, c2 sampled at ``times`` (rows) and the domain grid (columns)."""

    c1: np.ndarray
    c2: np.ndarray
    times: np.ndarray
    domain: SimulationDomain

    @property
    def n_t(self) -> int:
        return self.times.size - 1

    @property
    def t_f(self) -> float:
        return float(self.times[-1])

    def index_of(self, t: float) -> int:
        dt = self.times[1] - self.times[0]
        k = int(round(t / dt))
        if k < 0 or k > self.n_t or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a node of the phase grid; off-grid interpolation is not supported")
        return k


def solve_phases(potential: PotentialField, domain: SimulationDomain, n_t: int, q_charge: float = 1.0,
                 rule: str | None = None, _c2_direction: int = -1) -> PhaseFields:
    """Integrate both transport equations along their characteristics from zero data."""
    if int(n_t) != n_t or n_t < 2:
        raise ConfigError(f"n_t must be an integer >= 2, got {n_t}")
    rule = rule or potential.default_rule
    times = np.linspace(0.0, potential.t_f, n_t + 1)
    dt = times[1] - times[0]
    V = potential.samples(times, domain.z)
    n_z = domain.n_z
    a = np.fft.rfft(V, axis=1) / n_z
    k = 2 * np.pi * np.arange(a.shape[1]) / domain.L
    # c1: V(z - t + s, s) -> mode h picks up exp(i k (s - t)); c2: exp(i k (t - s))
    s_phase = np.exp(1j * np.outer(times, k))
    S1 = cumulative_integral(a * s_phase, dt, rule)
    S2 = cumulative_integral(a * s_phase ** _c2_direction, dt, rule)
    C1 = q_charge * S1 / s_phase
    C2 = q_charge * S2 * s_phase ** (-_c2_direction)
    c1 = np.fft.irfft(C1 * n_z, n=n_z, axis=1)
    c2 = np.fft.irfft(C2 * n_z, n=n_z, axis=1)
    return PhaseFields(c1, c2, times, domain)


def build_W(phases: PhaseFields, t: float) -> np.ndarray:
    """Diagonal unitaries ``diag(exp(-i c1), exp(-i c2))`` at every grid point, shape ``(n_z, 2, 2)``."""
    k = phases.index_of(t)
    W = np.zeros((phases.domain.n_z, 2, 2), complex)
    W[:, 0, 0] = np.exp(-1j * phases.c1[k])
    W[:, 1, 1] = np.exp(-1j * phases.c2[k])
    return W


def pde_residual(phases: PhaseFields, potential: PotentialField, q_charge: float = 1.0) -> tuple[float, float]:
    """Max-norm centered-difference residuals of both transport equations at interior times."""
    dt = phases.times[1] - phases.times[0]
    dz = phases.domain.dz
    inner = phases.times[1:-1]
    qV = q_charge * potential.samples(inner, phases.domain.z)

    def residual(c, sign):
        ct = (c[2:] - c[:-2]) / (2 * dt)
        cz = (np.roll(c, -1, axis=1) - np.roll(c, 1, axis=1))[1:-1] / (2 * dz)
        return float(np.max(np.abs(ct + sign * cz - qV)))

    return residual(phases.c1, 1), residual(phases.c2, -1)
