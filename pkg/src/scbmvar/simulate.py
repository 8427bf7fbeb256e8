"""Gaussian simulation of VAR, periodic VAR and VHAR panels."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import DivergenceError
from .transition import TransitionSet, companion, vhar_to_var22

DEFAULT_BURN_IN = 500
DIVERGENCE_RADIUS = 1.05


@dataclass
class TimeSeriesPanel:
    """A T x q panel.  Row ``t`` (0-based) belongs to season ``(first_season - 1 + t) % s``."""

    data: np.ndarray
    season_count: int = 1
    labels: Optional[List[str]] = None
    first_season: int = 1

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.shape[0] < 1:
            raise ValueError("a panel needs at least one row")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("panel contains non-finite values")
        if self.labels is None:
            self.labels = [f"y{i + 1}" for i in range(self.q)]
        if len(self.labels) != self.q:
            raise ValueError("one label per column is required")
        if not 1 <= self.first_season <= self.season_count:
            raise ValueError("first_season must lie in 1..season_count")

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def q(self) -> int:
        return self.data.shape[1]

    def season_of(self, t) -> np.ndarray:
        """0-based season index of (0-based) row ``t``."""
        return (np.asarray(t) + self.first_season - 1) % self.season_count

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.labels)
        for row in self.data:
            writer.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, season_count: int = 1, first_season: int = 1) -> "TimeSeriesPanel":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path} is empty")
        header, body = rows[0], [r for r in rows[1:] if r]
        data = np.empty((len(body), len(header)))
        for i, row in enumerate(body):
            if len(row) != len(header):
                raise ValueError(f"row {i + 2} has {len(row)} cells, expected {len(header)}")
            for j, cell in enumerate(row):
                try:
                    data[i, j] = float(cell)
                except ValueError:
                    raise ValueError(f"non-numeric cell {cell!r} in column {header[j]!r}, row {i + 2}") from None
        return cls(data, season_count, header, first_season)


def _lag_stacks(t: TransitionSet) -> List[np.ndarray]:
    """Per season, the q x (q*p) matrix ``[Phi_1 ... Phi_p]`` with trailing zero lags dropped."""
    stacks = []
    for season in t.matrices:
        mats = list(season)
        while len(mats) > 1 and not np.any(mats[-1]):
            mats.pop()
        stacks.append(np.hstack(mats))
    return stacks


def _check_radius(t: TransitionSet) -> None:
    rho = companion(t).spectral_radius
    if rho > DIVERGENCE_RADIUS:
        raise DivergenceError(f"companion spectral radius {rho:.3f} > {DIVERGENCE_RADIUS}; refusing to simulate")
    if rho >= 1:
        warnings.warn(f"companion spectral radius {rho:.3f} >= 1; the panel is not stationary", RuntimeWarning)


def _run(
    stacks: Sequence[np.ndarray],
    n: int,
    eps: np.ndarray,
    init: Optional[np.ndarray],
) -> np.ndarray:
    s = len(stacks)
    q = stacks[0].shape[0]
    p = max(S.shape[1] // q for S in stacks)
    Y = np.zeros((p + n, q))
    if init is not None:
        init = np.atleast_2d(np.asarray(init, dtype=float))
        if init.shape[1] != q or init.shape[0] > p:
            raise ValueError(f"init must have shape (<= {p}, {q})")
        Y[p - init.shape[0]:p] = init
    # lagged state in "most recent first" order, flattened
    for i in range(n):
        t = p + i
        S = stacks[i % s]
        k = S.shape[1] // q
        state = Y[t - k:t][::-1].ravel()
        Y[t] = S @ state + eps[i]
    return Y[p:]


def _innovations(rng, n, q, cov, innovations):
    if innovations is not None:
        eps = np.asarray(innovations, dtype=float)
        if eps.shape != (n, q):
            raise ValueError(f"innovations must have shape {(n, q)}")
        return eps
    eps = rng.standard_normal((n, q))
    if cov is not None:
        eps = eps @ np.linalg.cholesky(np.asarray(cov, dtype=float)).T
    return eps


def simulate_pvar(
    t: TransitionSet,
    T: int,
    burn_in: int = DEFAULT_BURN_IN,
    rng: Optional[np.random.Generator] = None,
    cov: Optional[np.ndarray] = None,
    innovations: Optional[np.ndarray] = None,
    init: Optional[np.ndarray] = None,
) -> TimeSeriesPanel:
    """Simulate ``Y_t = sum_h Phi_{h,m(t)} Y_{t-h} + eps_t`` with N(0, cov) innovations.

    ``burn_in`` is rounded up to a whole number of cycles so the first kept
    row is season 1.  ``innovations`` (shape ``(burn_in' + T, q)``) and
    ``init`` (pre-sample rows, oldest first) are test hooks.
    """
    if t.kind == "vhar":
        raise ValueError("use simulate_vhar for VHAR sets")
    if rng is None:
        rng = np.random.default_rng()
    s = t.s
    _check_radius(t)
    if T % s:
        warnings.warn(f"T={T} is not a multiple of s={s}; the last cycle is incomplete", RuntimeWarning)
    burn = s * math.ceil(burn_in / s)
    n = burn + T
    eps = _innovations(rng, n, t.q, cov, innovations)
    Y = _run(_lag_stacks(t), n, eps, init)
    return TimeSeriesPanel(Y[burn:], season_count=s)


def simulate_var(t: TransitionSet, T: int, burn_in: int = DEFAULT_BURN_IN, rng=None, **kw) -> TimeSeriesPanel:
    if t.kind != "var":
        raise ValueError("expected a VAR transition set")
    return simulate_pvar(t, T, burn_in, rng, **kw)


def simulate_vhar(
    t: TransitionSet,
    T: int,
    burn_in: int = DEFAULT_BURN_IN,
    rng: Optional[np.random.Generator] = None,
    **kw,
) -> TimeSeriesPanel:
    """Simulate a VHAR through its VAR(22) expansion, starting from 22 zero states."""
    if t.kind != "vhar":
        raise ValueError("expected a VHAR transition set")
    return simulate_pvar(vhar_to_var22(t), T, burn_in, rng, **kw)


def simulate(t: TransitionSet, T: int, burn_in: int = DEFAULT_BURN_IN, rng=None, **kw) -> TimeSeriesPanel:
    if t.kind == "vhar":
        return simulate_vhar(t, T, burn_in, rng, **kw)
    return simulate_pvar(t, T, burn_in, rng, **kw)
