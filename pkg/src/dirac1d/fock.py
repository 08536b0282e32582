"""Exact Fock-space algebra for a handful of electron and positron modes.

A basis configuration ``(electrons, positrons)`` stands for the ket

    b†_{e1} b†_{e2} ... d†_{h1} d†_{h2} ... |0>

with both tuples ascending in the mode integer r. Electrons precede
positrons in this canonical order, and every fermionic sign below is
measured against it: moving an operator into position past ``n`` occupied
modes contributes ``(-1)**n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .spectral_basis import Mode

PRUNE = 1e-15
MAX_OCCUPIED = 8
MAX_CONFIGS = 64

OP_KINDS = ("b", "bdag", "d", "ddag")


class OccupationConfig(NamedTuple):
    electrons: tuple[int, ...] = ()
    positrons: tuple[int, ...] = ()

    @classmethod
    def make(cls, electrons: Iterable[int] = (), positrons: Iterable[int] = ()):
        """Build a canonical config, returning ``(sign, config)`` for the given creation order.

        ``electrons`` and ``positrons`` list the creators in the order they
        appear left to right; the sign reorders them canonically. A repeated
        mode returns sign 0.
        """
        e, h = [int(r) for r in electrons], [int(r) for r in positrons]
        if len(set(e)) != len(e) or len(set(h)) != len(h):
            return 0, cls()
        return _perm_sign(e) * _perm_sign(h), cls(tuple(sorted(e)), tuple(sorted(h)))

    @property
    def n_occupied(self) -> int:
        return len(self.electrons) + len(self.positrons)


def _perm_sign(seq: list[int]) -> int:
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class FockState:
    """Finite superposition of occupation configurations (immutable).

    Intermediate vectors produced by operator algebra may be large; states
    built for experiments pass through ``check_limits``.
    """

    terms: dict = field(default_factory=dict)

    def check_limits(self) -> "FockState":
        """Enforce the size limits that keep every expectation a brute-force sum."""
        if len(self.terms) > MAX_CONFIGS:
            raise ValueError(f"state has {len(self.terms)} configurations (limit {MAX_CONFIGS})")
        for cfg in self.terms:
            if cfg.n_occupied > MAX_OCCUPIED:
                raise ValueError(f"configuration {cfg} exceeds {MAX_OCCUPIED} occupied modes")
        return self

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, Iterable[int], Iterable[int]]], normalize=True):
        """Build from ``(amplitude, electrons, positrons)`` triples.

        Each triple means ``amplitude * b†_{e...} d†_{h...} |0>`` with the
        creators applied in the listed order.
        """
        acc: dict[OccupationConfig, complex] = {}
        for amp, e, h in terms:
            sign, cfg = OccupationConfig.make(e, h)
            if sign:
                acc[cfg] = acc.get(cfg, 0j) + sign * complex(amp)
        state = cls(_pruned(acc)).check_limits()
        return state.normalized() if normalize else state

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.terms.values())))

    def normalized(self) -> "FockState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return FockState({c: a / n for c, a in self.terms.items()})

    def inner(self, other: "FockState") -> complex:
        """<self|other>."""
        return sum((np.conj(a) * other.terms[c] for c, a in self.terms.items() if c in other.terms), 0j)

    def __add__(self, other: "FockState") -> "FockState":
        acc = dict(self.terms)
        for c, a in other.terms.items():
            acc[c] = acc.get(c, 0j) + a
        return FockState(_pruned(acc))

    def __sub__(self, other: "FockState") -> "FockState":
        return self + other.scaled(-1)

    def scaled(self, s: complex) -> "FockState":
        return FockState(_pruned({c: s * a for c, a in self.terms.items()}))

    def is_zero(self) -> bool:
        return not self.terms

    def modes(self) -> tuple[set[int], set[int]]:
        """Electron and positron mode integers appearing anywhere in the state."""
        e, h = set(), set()
        for cfg in self.terms:
            e.update(cfg.electrons)
            h.update(cfg.positrons)
        return e, h


def _pruned(terms: dict) -> dict:
    return {c: a for c, a in terms.items() if abs(a) > PRUNE}


def vacuum() -> FockState:
    return FockState({OccupationConfig(): 1 + 0j})


def _act(kind: str, r: int, cfg: OccupationConfig):
    """Apply one operator to a basis config; returns ``(sign, cfg)`` or ``None``."""
    e, h = cfg.electrons, cfg.positrons
    if kind in ("b", "bdag"):
        n_before = sum(1 for x in e if x < r)
        if kind == "bdag":
            if r in e:
                return None
            return (-1) ** n_before, OccupationConfig(tuple(sorted(e + (r,))), h)
        if r not in e:
            return None
        return (-1) ** n_before, OccupationConfig(tuple(x for x in e if x != r), h)
    if kind in ("d", "ddag"):
        n_before = len(e) + sum(1 for x in h if x < r)
        if kind == "ddag":
            if r in h:
                return None
            return (-1) ** n_before, OccupationConfig(e, tuple(sorted(h + (r,))))
        if r not in h:
            return None
        return (-1) ** n_before, OccupationConfig(e, tuple(x for x in h if x != r))
    raise ValueError(f"unknown operator kind {kind!r}; expected one of {OP_KINDS}")


def _mode_int(kind: str, mode) -> int:
    if isinstance(mode, Mode):
        want = 1 if kind.startswith("b") else -1
        if mode.lam != want:
            raise ValueError(f"operator {kind} acts on lam={want} modes, got {mode}")
        return mode.r
    return int(mode)


def apply_operator(kind: str, mode, state: FockState) -> FockState:
    """Apply ``b``, ``bdag``, ``d`` or ``ddag`` at ``mode`` (a Mode or mode integer)."""
    r = _mode_int(kind, mode)
    acc: dict[OccupationConfig, complex] = {}
    for cfg, amp in state.terms.items():
        res = _act(kind, r, cfg)
        if res is not None:
            sign, new = res
            acc[new] = acc.get(new, 0j) + sign * amp
    return FockState(_pruned(acc))


def apply_creator(kind: str, mode, state: FockState) -> FockState:
    if kind not in ("bdag", "ddag"):
        raise ValueError(f"{kind!r} is not a creation operator")
    return apply_operator(kind, mode, state)


def apply_annihilator(kind: str, mode, state: FockState) -> FockState:
    if kind not in ("b", "d"):
        raise ValueError(f"{kind!r} is not an annihilation operator")
    return apply_operator(kind, mode, state)


def apply_string(ops: Iterable[tuple[str, int]], state: FockState) -> FockState:
    """Apply an operator product written left to right (rightmost acts first)."""
    for kind, r in reversed(list(ops)):
        state = apply_operator(kind, r, state)
    return state


def expectation(ops: Iterable[tuple[str, int]], state: FockState) -> complex:
    return state.inner(apply_string(ops, state))


def two_electron_superposition(p, q) -> FockState:
    """``(b†_p + b†_q)|0> / sqrt(2)`` for two distinct positive-momentum electron modes."""
    rp, rq = _mode_int("bdag", p), _mode_int("bdag", q)
    if rp == rq:
        raise ValueError("p and q must differ")
    if rp <= 0 or rq <= 0:
        raise ValueError("both momenta must be positive")
    return FockState.from_terms([(1, [rp], []), (1, [rq], [])])


@dataclass(frozen=True)
class BilinearMatrices:
    """All quadratic expectation values over the mode list ``r``.

    ``Ne[i, j] = <b†_{r_i} b_{r_j}>``, ``Nh[i, j] = <d†_{r_i} d_{r_j}>`` and
    ``Pa[i, j] = <d_{r_i} b_{r_j}>``; the conjugate pair block follows as
    ``<b†_{r_j} d†_{r_i}> = conj(Pa[i, j])``.
    """

    r: np.ndarray
    Ne: np.ndarray
    Nh: np.ndarray
    Pa: np.ndarray

    @property
    def electron_number(self) -> float:
        return float(np.trace(self.Ne).real)

    @property
    def positron_number(self) -> float:
        return float(np.trace(self.Nh).real)

    def index(self, r: int) -> int:
        return int(np.searchsorted(self.r, r))


def bilinear_matrices(state: FockState, r_max: int) -> BilinearMatrices:
    """Brute-force every bilinear by applying the operator pair to the state.

    Entries between modes absent from every configuration vanish identically,
    so only the modes present in ``state`` are enumerated.
    """
    r_all = np.array([r for r in range(-r_max, r_max + 1) if r != 0])
    n = r_all.size
    Ne = np.zeros((n, n), complex)
    Nh = np.zeros((n, n), complex)
    Pa = np.zeros((n, n), complex)
    e_modes, h_modes = state.modes()
    for rs in (e_modes, h_modes):
        bad = [r for r in rs if abs(r) > r_max or r == 0]
        if bad:
            raise ValueError(f"state uses modes {bad} outside cutoff r_max={r_max}")
    idx = {int(r): i for i, r in enumerate(r_all)}

    b_kets = {r: apply_operator("b", r, state) for r in e_modes}
    d_kets = {r: apply_operator("d", r, state) for r in h_modes}
    # <b†_p b_q> = <b_p Ω | b_q Ω>
    for p, bp in b_kets.items():
        for q, bq in b_kets.items():
            Ne[idx[p], idx[q]] = bp.inner(bq)
    for p, dp in d_kets.items():
        for q, dq in d_kets.items():
            Nh[idx[p], idx[q]] = dp.inner(dq)
    for p in h_modes:
        for q, bq in b_kets.items():
            Pa[idx[p], idx[q]] = state.inner(apply_operator("d", p, bq))
    return BilinearMatrices(r_all, Ne, Nh, Pa)
