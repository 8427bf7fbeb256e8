"""Least-squares estimation of VAR(p), PVAR(s) and VHAR coefficients.

No intercepts are fitted; center the panel first if needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import SingularDesignError
from .simulate import TimeSeriesPanel
from .transition import TransitionSet

MAX_CONDITION = 1e12


@dataclass
class EstimationResult:
    transitions: TransitionSet
    residual_covariance: List[np.ndarray]
    design_condition: List[float]
    nobs: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.transitions.to_dict()
        d["residual_covariance"] = [S.tolist() for S in self.residual_covariance]
        d["design_condition"] = list(self.design_condition)
        d["nobs"] = list(self.nobs)
        return d


def ols(X: np.ndarray, Y: np.ndarray, name: str = "regression", columns: Optional[Sequence[str]] = None):
    """Solve ``min ||Y - X B'||`` through an SVD of ``X``.

    Returns ``(B, residuals, condition)`` where ``B`` is ``Y.shape[1] x X.shape[1]``.
    Raises :class:`SingularDesignError` when the design is rank deficient or
    its condition number exceeds ``MAX_CONDITION``.
    """
    n, k = X.shape
    if n <= k:
        raise SingularDesignError(f"{name}: {n} rows for {k} regressors", regression=name)
    U, sv, Vt = np.linalg.svd(X, full_matrices=False)
    cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        # the right singular vector of the smallest singular value names the culprit
        worst = int(np.argmax(np.abs(Vt[-1])))
        var = columns[worst] if columns is not None else f"column {worst}"
        raise SingularDesignError(
            f"{name}: singular design (condition {cond:.3g}); most implicated regressor: {var}",
            regression=name,
            variable=var,
        )
    coef = Vt.T @ ((U.T @ Y) / sv[:, None])
    resid = Y - X @ coef
    return coef.T, resid, float(cond)


def _lag_design(data: np.ndarray, rows: np.ndarray, p: int) -> np.ndarray:
    return np.hstack([data[rows - h] for h in range(1, p + 1)])


def _lag_names(labels, p):
    return [f"{name}(t-{h})" for h in range(1, p + 1) for name in labels]


def estimate_pvar(panel: TimeSeriesPanel, s: int, lags) -> EstimationResult:
    """Season-by-season OLS.

    Rows of season ``m`` are regressed on their ``p_m`` immediate predecessors,
    which may belong to earlier seasons.  ``lags`` is an int or one int per
    season.
    """
    if isinstance(lags, (int, np.integer)):
        lags = [int(lags)] * s
    lags = list(lags)
    if len(lags) != s:
        raise ValueError("need one lag order per season")
    if s != panel.season_count:
        panel = TimeSeriesPanel(panel.data, s, panel.labels)
    data = panel.data
    q = panel.q
    idx = np.arange(panel.T)
    season = panel.season_of(idx)
    table, covs, conds, nobs = [], [], [], []
    for m in range(s):
        p = lags[m]
        rows = idx[(season == m) & (idx >= p)]
        name = f"season {m + 1}" if s > 1 else "VAR"
        X = _lag_design(data, rows, p)
        if X.shape[0] <= q * p:
            raise SingularDesignError(
                f"{name}: {X.shape[0]} usable rows for {q * p} regressors", regression=name
            )
        coef, resid, cond = ols(X, data[rows], name, _lag_names(panel.labels, p))
        table.append([coef[:, h * q:(h + 1) * q] for h in range(p)])
        covs.append(resid.T @ resid / len(rows))
        conds.append(cond)
        nobs.append(len(rows))
    kind = "var" if s == 1 else "pvar"
    return EstimationResult(TransitionSet(kind, table), covs, conds, nobs)


def estimate_var(panel: TimeSeriesPanel, p: int) -> EstimationResult:
    flat = TimeSeriesPanel(panel.data, 1, panel.labels)
    return estimate_pvar(flat, 1, [p])


def vhar_design(data: np.ndarray):
    """Regressors ``(Y_{t-1}, mean of 5 lags, mean of 22 lags)`` for ``t = 22..T-1``."""
    T = data.shape[0]
    rows = np.arange(22, T)
    c = np.vstack([np.zeros((1, data.shape[1])), np.cumsum(data, axis=0)])
    daily = data[rows - 1]
    weekly = (c[rows] - c[rows - 5]) / 5
    monthly = (c[rows] - c[rows - 22]) / 22
    return rows, np.hstack([daily, weekly, monthly])


def estimate_vhar(panel: TimeSeriesPanel) -> EstimationResult:
    data = panel.data
    q = panel.q
    if panel.T <= 22 + 3 * q:
        raise SingularDesignError(f"VHAR: T={panel.T} too short for q={q}", regression="VHAR")
    rows, X = vhar_design(data)
    names = [f"{n}({h})" for h in ("d", "w", "m") for n in panel.labels]
    coef, resid, cond = ols(X, data[rows], "VHAR", names)
    d, w, m = (coef[:, i * q:(i + 1) * q] for i in range(3))
    t = TransitionSet.vhar(d, w, m)
    return EstimationResult(t, [resid.T @ resid / len(rows)], [cond], [len(rows)])
