"""Transition matrices of VAR, periodic VAR and VHAR models.

A :class:`TransitionSet` stores its coefficients season by season:
``matrices[m][h]`` multiplies ``Y_{t-h-1}`` when ``t`` falls in season ``m``.
A plain VAR(p) has a single season with ``p`` lags; a VHAR is stored as three
one-lag "seasons" (daily, weekly, monthly) and is never simulated directly,
only through its VAR(22) expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .blockmodel import SeasonalGraphSequence
from .errors import (
    DegenerateDegreeError,
    NumericalError,
    StabilizationError,
)

KINDS = ("var", "pvar", "vhar")
VHAR_HORIZONS = ("d", "w", "m")


@dataclass
class TransitionSet:
    kind: str
    matrices: List[List[np.ndarray]]
    scale: Optional[List[List[float]]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        self.matrices = [[np.asarray(P, dtype=float) for P in season] for season in self.matrices]
        if not self.matrices or any(len(season) == 0 for season in self.matrices):
            raise ValueError("every season needs at least one lag matrix")
        q = self.matrices[0][0].shape[0]
        for season in self.matrices:
            for P in season:
                if P.shape != (q, q):
                    raise ValueError(f"expected {q}x{q} matrices, got {P.shape}")
                if not np.all(np.isfinite(P)):
                    raise ValueError("transition matrices must be finite")
        if self.kind == "var" and len(self.matrices) != 1:
            raise ValueError("a VAR has exactly one season")
        if self.kind == "vhar" and (len(self.matrices) != 3 or any(len(x) != 1 for x in self.matrices)):
            raise ValueError("a VHAR has exactly three one-lag components")

    @classmethod
    def var(cls, lags: Sequence[np.ndarray], scale=None) -> "TransitionSet":
        return cls("var", [list(lags)], None if scale is None else [list(scale)])

    @classmethod
    def pvar(cls, table: Sequence[Sequence[np.ndarray]], scale=None) -> "TransitionSet":
        return cls("pvar", [list(x) for x in table], scale)

    @classmethod
    def vhar(cls, daily, weekly, monthly, scale=None) -> "TransitionSet":
        return cls("vhar", [[daily], [weekly], [monthly]], scale)

    @property
    def q(self) -> int:
        return self.matrices[0][0].shape[0]

    @property
    def s(self) -> int:
        return len(self.matrices)

    @property
    def lags(self) -> List[int]:
        return [len(season) for season in self.matrices]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.q,
            "seasons": self.s,
            "lags": self.lags,
            "matrices": [[P.tolist() for P in season] for season in self.matrices],
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionSet":
        t = cls(d["kind"], d["matrices"], d.get("scale"))
        if "lags" in d and list(d["lags"]) != t.lags:
            raise ValueError("lag metadata disagrees with the matrices")
        return t


def build_transition(A: np.ndarray, phi: float) -> np.ndarray:
    """Degree-regularized transition matrix ``phi * P^-1/2 A' O^-1/2``.

    ``P`` holds the column sums of ``A'`` and ``O`` its row sums, both shifted
    by ``tau``, the average out-degree of ``A``.
    """
    A = np.asarray(A, dtype=float)
    q = A.shape[0]
    At = A.T
    tau = At.sum() / q
    P = At.sum(axis=0) + tau
    O = At.sum(axis=1) + tau
    if P.min() <= 0 or O.min() <= 0:
        if phi == 0:
            return np.zeros_like(At)
        raise DegenerateDegreeError("regularized degree is not positive (empty graph?)")
    return phi * At / np.sqrt(np.outer(P, O))


def vhar_to_var22(t: TransitionSet) -> TransitionSet:
    if t.kind != "vhar":
        raise ValueError("expected a VHAR transition set")
    d, w, m = (season[0] for season in t.matrices)
    lags = [d + w / 5 + m / 22]
    lags += [w / 5 + m / 22 for _ in range(4)]
    lags += [m / 22 for _ in range(17)]
    return TransitionSet.var(lags)


@dataclass
class CompanionMatrix:
    """First-order (companion) form of a transition set.

    For a periodic model the state is one full cycle stacked in reverse
    season order, so the matrix advances time by ``s`` steps.
    """

    matrix: np.ndarray
    kind: str
    q: int
    s: int
    p_star: int

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.matrix)


def _cycle_blocks(t: TransitionSet):
    """Build ``Phi_0^*`` and ``Phi_1^*..Phi_p*^*`` for the cycle-stacked system."""
    q, s = t.q, t.s
    p_star = max(1, max(math.ceil((p - m) / s) for m, p in enumerate(t.lags)))
    Phi0 = np.eye(q * s)
    Phis = [np.zeros((q * s, q * s)) for _ in range(p_star)]
    for m0, season in enumerate(t.matrices):
        m = m0 + 1
        r = s - m
        for h, P in enumerate(season, start=1):
            k = m - h
            if k >= 1:
                Phi0[r * q:(r + 1) * q, (r + h) * q:(r + h + 1) * q] -= P
            else:
                j = -((k - 1) // s)
                c = s - (k + j * s)
                Phis[j - 1][r * q:(r + 1) * q, c * q:(c + 1) * q] += P
    return Phi0, Phis


def pvar_companion(t: TransitionSet) -> CompanionMatrix:
    """Companion matrix of a periodic (or plain) VAR.

    ``Phi_0^*`` is unit upper triangular, so ``Psi_h = Phi_0^{*-1} Phi_h^*`` is
    a triangular solve.
    """
    if t.kind == "vhar":
        raise ValueError("expand a VHAR with vhar_to_var22 first")
    q, s = t.q, t.s
    Phi0, Phis = _cycle_blocks(t)
    Psis = []
    for Ph in Phis:
        Psi = solve_triangular(Phi0, Ph, lower=False, unit_diagonal=True)
        if not np.all(np.isfinite(Psi)):
            raise NumericalError("triangular solve for the companion form failed")
        Psis.append(Psi)
    p_star = len(Psis)
    n = q * s
    F = np.zeros((n * p_star, n * p_star))
    F[:n] = np.hstack(Psis)
    if p_star > 1:
        F[n:, :-n] = np.eye(n * (p_star - 1))
    return CompanionMatrix(F, t.kind, q, s, p_star)


def companion(t: TransitionSet) -> CompanionMatrix:
    if t.kind == "vhar":
        c = pvar_companion(vhar_to_var22(t))
        c.kind = "vhar"
        return c
    return pvar_companion(t)


def spectral_radius(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def transitions_from_graphs(
    graphs: SeasonalGraphSequence, phi: float, kind: Optional[str] = None
) -> TransitionSet:
    """One transition matrix per season, all scaled by the same ``phi``."""
    kind = kind or ("pvar" if graphs.cyclic else "vhar")
    mats = [[build_transition(A, phi)] for A in graphs.adjacency]
    scale = [[phi] for _ in mats]
    if kind == "var":
        return TransitionSet("var", [[m[0] for m in mats]], [[phi] * len(mats)])
    return TransitionSet(kind, mats, scale)


@dataclass
class StabilizeResult:
    transitions: TransitionSet
    graphs: SeasonalGraphSequence
    phi: float
    resamples: int
    radius: float


def stabilize(
    graphs: SeasonalGraphSequence,
    phi0: float,
    rho_target: float = 0.95,
    shrink: float = 0.9,
    rng: Optional[np.random.Generator] = None,
    kind: Optional[str] = None,
    max_iter: int = 200,
) -> StabilizeResult:
    """Shrink ``phi`` and resample edges until the companion radius is small enough.

    ``graphs.adjacency`` must already hold one draw.  An empty graph (which
    makes the degree regularization degenerate) counts as a failed attempt.
    """
    if not phi0 > 0:
        raise ValueError("phi0 must be positive")
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    if not 0 < rho_target < 1:
        raise ValueError("rho_target must lie in (0, 1)")
    if rng is None:
        rng = np.random.default_rng()
    if not graphs.adjacency:
        graphs.resample(rng)
    phi = phi0
    for attempt in range(max_iter + 1):
        try:
            t = transitions_from_graphs(graphs, phi, kind)
            rho = companion(t).spectral_radius
        except DegenerateDegreeError:
            rho = math.inf
        if rho <= rho_target:
            return StabilizeResult(t, graphs, phi, attempt, rho)
        if attempt == max_iter:
            break
        phi *= shrink
        graphs.resample(rng)
    raise StabilizationError(f"no stable draw after {max_iter} resamples (phi={phi:.3g})")


@dataclass
class StabilityReport:
    companion_radius: float
    condition_i: bool
    phi_sum: float
    condition_ii: bool
    scale_sum: Optional[float] = None
    notes: List[str] = field(default_factory=list)


def check_stability_assumptions(t: TransitionSet) -> StabilityReport:
    """Numerical check of the two stability conditions.

    Condition (i) is ``rho(F) < 1`` for the companion matrix.  For condition
    (ii) the scale constants are replaced by spectral norms: the sum of
    ``||Phi_h^*||`` over the cycle-stacked lag blocks for VAR/PVAR, and
    ``||Phi_d|| + ||Phi_w|| + ||Phi_m||`` for a VHAR.  When the set carries
    its construction constants their sum is reported as ``scale_sum`` too.
    """
    rho = companion(t).spectral_radius
    if t.kind == "vhar":
        phi_sum = float(sum(np.linalg.norm(season[0], 2) for season in t.matrices))
    else:
        _, Phis = _cycle_blocks(t)
        phi_sum = float(sum(np.linalg.norm(P, 2) for P in Phis))
    scale_sum = None
    notes = []
    if t.scale is not None:
        if t.kind == "vhar":
            scale_sum = float(sum(x[0] for x in t.scale))
        else:
            scale_sum = float(sum(max(col) for col in _lag_major(t.scale)))
        notes.append("scale_sum uses the construction constants")
    return StabilityReport(rho, rho < 1, phi_sum, phi_sum < 1, scale_sum, notes)


def _lag_major(scale: List[List[float]]) -> List[List[float]]:
    p = max(len(x) for x in scale)
    return [[x[h] for x in scale if h < len(x)] for h in range(p)]
