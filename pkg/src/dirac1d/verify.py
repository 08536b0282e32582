"""Invariant suite behind the ``verify`` subcommand.

Each check reports a measured deviation against a fixed tolerance. Gating
checks decide the exit code; advisory ones (the closed-form current
amplitude) are printed but never fail the run.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .extraction import ExperimentConfig, delta_energy_quadrature, run_extraction, sweep_f
from .fock import FockState, apply_string, bilinear_matrices, expectation, two_electron_superposition, vacuum
from .observables import fit_current_amplitude, free_energy
from .potential_dynamics import (
    AnalyticPotential,
    TabulatedPotential,
    build_W,
    feedback_potential,
    pde_residual,
    solve_phases,
)
from .spectral_basis import (
    Mode,
    SimulationDomain,
    apply_free_hamiltonian,
    eigenfunction,
    inner_product,
    periodic_trapezoid,
    spectral_derivative,
)

FAULTS = ("c2-sign", "amplitude")


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    gating: bool = True
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else ("FAIL" if self.gating else "FLAG")
        kind = "" if self.gating else " [advisory]"
        note = f"  ({self.note})" if self.note else ""
        return f"{tag}  {self.name}{kind}: measured {self.measured:.3e} vs tol {self.tolerance:.1e}{note}"


def observed_order(errors, ratio: float = 2.0) -> float:
    """Smallest order seen between successive refinements."""
    e = np.asarray(errors, float)
    return float(np.min(np.log(e[:-1] / e[1:]) / np.log(ratio)))


def random_state(rng: np.random.Generator, r_max: int = 3, n_terms: int = 4) -> FockState:
    modes = [r for r in range(-r_max, r_max + 1) if r != 0]
    terms = []
    for _ in range(n_terms):
        e = rng.choice(modes, size=rng.integers(0, 3), replace=False)
        h = rng.choice(modes, size=rng.integers(0, 3), replace=False)
        terms.append((complex(rng.normal(), rng.normal()), list(e), list(h)))
    try:
        return FockState.from_terms(terms)
    except ValueError:
        return vacuum()


def _static_cosine(n_z, n_t, c2_dir, k=3, V0=0.7, t_f=2.0, L=2 * np.pi):
    domain = SimulationDomain(L, n_z, 4)
    pot = AnalyticPotential(t_f, func=lambda z, t: V0 * np.cos(k * z))
    ph = solve_phases(pot, domain, n_t, _c2_direction=c2_dir)
    z, t = domain.z[None, :], ph.times[:, None]
    ex1 = V0 / k * (np.sin(k * z) - np.sin(k * (z - t)))
    ex2 = V0 / k * (np.sin(k * (z + t)) - np.sin(k * z))
    return ph, pot, max(np.max(np.abs(ph.c1 - ex1)), np.max(np.abs(ph.c2 - ex2)))


def check_orthonormality(r_max=16) -> list[Check]:
    domain = SimulationDomain(2 * np.pi, 4 * r_max + 2, r_max)
    modes = [Mode(lam, r) for lam in (1, -1) for r in domain.mode_integers]
    closed = np.array([[inner_product(a, b, domain) for b in modes] for a in modes])
    dev = np.max(np.abs(closed - np.eye(len(modes))))
    phis = np.array([eigenfunction(m, domain.z, domain) for m in modes])
    quad = periodic_trapezoid(np.einsum("acz,bcz->abz", phis.conj(), phis), domain)
    dev_q = np.max(np.abs(quad - np.eye(len(modes))))
    eig = 0.0
    for m in modes:
        phi = eigenfunction(m, domain.z, domain)
        h_spec = -1j * np.array([1, -1])[:, None] * np.array(
            [spectral_derivative(phi[c].real, domain.L) + 1j * spectral_derivative(phi[c].imag, domain.L)
             for c in range(2)])
        h_an = apply_free_hamiltonian(m, domain.z, domain)
        target = m.energy(domain) * phi
        eig = max(eig, np.max(np.abs(h_spec - target)) / np.max(np.abs(target)),
                  np.max(np.abs(h_an - target)) / np.max(np.abs(target)))
    return [
        Check("orthonormality (closed form, r_max=16)", dev, 1e-12, dev <= 1e-12),
        Check("orthonormality (grid quadrature)", dev_q, 1e-12, dev_q <= 1e-12),
        Check("eigenrelation H0 phi = eps phi (spectral)", eig, 1e-10, eig <= 1e-10),
    ]


def check_car(seed=7, n_states=20) -> list[Check]:
    rng = np.random.default_rng(seed)
    dev = 0.0
    herm = 0.0
    lo, hi = 0.0, 0.0
    for _ in range(n_states):
        st = random_state(rng)
        modes = [r for r in range(-3, 4) if r != 0]
        for p in modes:
            for q in modes:
                for a, adag in (("b", "bdag"), ("d", "ddag")):
                    anti = (expectation([(a, p), (adag, q)], st) + expectation([(adag, q), (a, p)], st))
                    dev = max(dev, abs(anti - (p == q)))
                    dev = max(dev, abs(expectation([(a, p), (a, q)], st) + expectation([(a, q), (a, p)], st)))
                # mixed species anticommute
                dev = max(dev, abs(expectation([("b", p), ("ddag", q)], st) + expectation([("ddag", q), ("b", p)], st)))
        bil = bilinear_matrices(st, 3)
        for M in (bil.Ne, bil.Nh):
            herm = max(herm, np.max(np.abs(M - M.conj().T)))
            w = np.linalg.eigvalsh((M + M.conj().T) / 2)
            lo, hi = min(lo, w.min()), max(hi, w.max() - 1)
    bound = max(-lo, hi, 0.0)
    return [
        Check("CAR anticommutators on random states", dev, 1e-14, dev <= 1e-14),
        Check("bilinear Hermiticity", herm, 1e-14, herm <= 1e-14),
        Check("occupation eigenvalues within [0, 1]", bound, 1e-12, bound <= 1e-12),
    ]


def check_current_form(fault: str | None) -> list[Check]:
    domain = SimulationDomain()
    state = two_electron_superposition(2, 1)
    p, q = Mode(1, 2), Mode(1, 1)
    A, resid = fit_current_amplitude(state, p, q, domain)
    half = 1 / (2 * domain.L)
    used = half if fault == "amplitude" else A
    cfg = ExperimentConfig(domain=domain, state=state, f=1.0)
    res = run_extraction(cfg, amplitude_override=used)
    gap = abs(res.delta("closed_form") - res.delta("quadrature")) / abs(res.delta("quadrature"))
    return [
        Check("two-mode current matches A(1 + cos((p-q)(z-t)))", resid, 1e-12, resid <= 1e-12),
        Check("current amplitude vs 1/(2L) form", abs(A - half) / half, 1e-12,
              abs(A - half) / half <= 1e-12, gating=False,
              note=f"oracle A = {A:.15g} (q/L = {1 / domain.L:.15g}), 1/(2L) = {half:.15g}"),
        Check("closed-form estimator vs quadrature", gap, 1e-9, gap <= 1e-9, gating=False,
              note=f"closed form uses A = {used:.15g}"),
    ]


def check_phases(fault: str | None) -> list[Check]:
    c2_dir = 1 if fault == "c2-sign" else -1
    errs, res1, res2 = [], [], []
    for n_z, n_t in ((32, 16), (64, 32), (128, 64)):
        ph, pot, err = _static_cosine(n_z, n_t, c2_dir)
        r1, r2 = pde_residual(ph, pot)
        errs.append(err)
        res1.append(r1)
        res2.append(r2)
    _, _, err_fine = _static_cosine(64, 2048, c2_dir)
    order_c = observed_order(errs)
    order_r = min(observed_order(res1), observed_order(res2))

    # smooth tabulated potential, trapezoid in time
    tab_res = []
    for n_z, n_t in ((64, 32), (128, 64), (256, 128)):
        domain = SimulationDomain(2 * np.pi, n_z, 4)
        t = np.linspace(0, 1.5, n_t + 1)[:, None]
        values = np.sin(domain.z)[None, :] * np.cos(2 * t) + 0.3 * np.cos(2 * domain.z)[None, :] * t
        pot = TabulatedPotential(1.5, values=values, L=domain.L)
        tab_res.append(max(pde_residual(solve_phases(pot, domain, n_t, _c2_direction=c2_dir), pot)))
    order_tab = observed_order(tab_res)

    # unitarity of W on a feedback solve
    domain = SimulationDomain()
    state = two_electron_superposition(2, 1)
    pot = feedback_potential(state, 50.0, 1.0, domain)
    ph = solve_phases(pot, domain, 64, _c2_direction=c2_dir)
    s3 = np.diag([1.0, -1.0])
    dev = 0.0
    for t in ph.times:
        W = build_W(ph, t)
        dev = max(dev, np.max(np.abs(np.conj(np.swapaxes(W, 1, 2)) @ s3 @ W - s3)),
                  np.max(np.abs(np.abs(np.diagonal(W, axis1=1, axis2=2)) - 1)))
    init = float(np.max(np.abs(np.concatenate([ph.c1[0], ph.c2[0]]))))
    return [
        Check("static-cosine phases vs closed form (n_t=2048)", err_fine, 1e-8, err_fine <= 1e-8),
        Check("static-cosine phase convergence order", order_c, 1.9, order_c >= 1.9, note="measured order >= tol"),
        Check("PDE residual convergence order (static cosine)", order_r, 1.9, order_r >= 1.9,
              note="measured order >= tol"),
        Check("PDE residual convergence order (tabulated, trapezoid)", order_tab, 1.9, order_tab >= 1.9,
              note="measured order >= tol"),
        Check("W^dag sigma3 W = sigma3 and |W_ii| = 1", dev, 1e-14, dev <= 1e-14),
        Check("zero initial phases", init, 0.0, init == 0.0),
    ]


def check_estimators() -> list[Check]:
    state = two_electron_superposition(2, 1)
    cfg = ExperimentConfig(domain=SimulationDomain(), state=state, f=1.0)
    rel = run_extraction(cfg).rel_disagreement
    gaps = []
    for n_z, n_t in ((16, 4), (32, 8), (64, 16)):
        c = ExperimentConfig(domain=SimulationDomain(n_z=n_z), state=state, f=1.0, n_t=n_t)
        gaps.append(run_extraction(c).rel_disagreement)
    order = observed_order(gaps)
    return [
        Check("quadrature vs direct oracle (n_z=256, n_t=1024)", rel, 1e-6, rel <= 1e-6),
        Check("estimator gap convergence order", order, 1.9, order >= 1.9, note="measured order >= tol"),
    ]


def null_potentials(t_f: float = 1.0) -> list[AnalyticPotential]:
    funcs = [
        lambda z, t: np.cos(z) * np.sin(3 * t),
        lambda z, t: 2.5 * np.sin(2 * z - t),
        lambda z, t: np.exp(np.cos(z)) * (1 + t),
        lambda z, t: 10 * np.sin(5 * z) * np.cos(z + 2 * t),
        lambda z, t: 0.3 + np.cos(3 * z) ** 2 * t ** 2,
    ]
    return [AnalyticPotential(t_f, func=fn) for fn in funcs]


def check_null_results() -> list[Check]:
    domain = SimulationDomain()
    cfg = ExperimentConfig(domain=domain, state=vacuum(), f=1.0)
    vac = max(abs(delta_energy_quadrature(V, vacuum(), cfg)) for V in null_potentials())
    state = two_electron_superposition(2, 1)
    cfg2 = ExperimentConfig(domain=domain, state=state, f=1.0)
    uniform = AnalyticPotential(1.0, func=lambda z, t: 3.0 * np.cos(2 * t) + 0 * z)
    uni = abs(delta_energy_quadrature(uniform, state, cfg2))
    return [
        Check("vacuum: zero energy change for 5 potentials", vac, 1e-12, vac <= 1e-12),
        Check("uniform V: zero energy change", uni, 1e-12, uni <= 1e-12),
    ]


def check_unboundedness() -> list[Check]:
    state = two_electron_superposition(2, 1)
    fs = [1.0, 10.0, 100.0, 1000.0, 10000.0]
    cfg = ExperimentConfig(domain=SimulationDomain(), state=state, f=fs)
    rows = sweep_f(cfg)
    deltas = np.array([r.delta("quadrature") for r in rows])
    ratios = deltas / np.array(fs)
    lin = float(np.max(np.abs(ratios / ratios[0] - 1)))
    xi0 = free_energy(state, cfg.domain)
    lowest = float(min(r.xi0_final for r in rows))
    ok = bool(np.all(deltas < 0)) and lowest < -10 * xi0
    return [
        Check("linearity of energy change in f", lin, 1e-9, lin <= 1e-9),
        Check("min xi0(t_f) / xi0(0) below -10", lowest / xi0 if xi0 else 0.0, -10.0, ok,
              note=f"min xi0(t_f) = {lowest:.6g}, xi0(0) = {xi0:.6g}, all deltas negative"),
    ]


SUITE: list[Callable] = [
    check_orthonormality,
    check_car,
    check_current_form,
    check_phases,
    check_estimators,
    check_null_results,
    check_unboundedness,
]


def run_suite(fault: str | None = None, echo: Callable[[str], None] | None = print) -> list[Check]:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    checks: list[Check] = []
    start = time.perf_counter()
    for fn in SUITE:
        kwargs = {"fault": fault} if fn in (check_current_form, check_phases) else {}
        for chk in fn(**kwargs):
            checks.append(chk)
            if echo:
                echo(chk.line())
    if echo:
        failed = sum(1 for c in checks if c.gating and not c.passed)
        echo(f"{len(checks)} checks, {failed} gating failures, {time.perf_counter() - start:.1f} s")
    return checks
