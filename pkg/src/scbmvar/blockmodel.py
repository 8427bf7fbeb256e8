"""Directed degree-corrected stochastic co-blockmodels.

Each season of a dynamic network is one co-blockmodel: nodes carry a sending
label ``y`` and a receiving label ``z``, node propensities ``theta_y`` and
``theta_z`` (summing to one inside every community) and a community link
matrix ``B``.  Labels are 0-based inside Python; the JSON form is 1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, InvalidSpecError

_SUM_TOL = 1e-10


def _check_labels(labels: np.ndarray, K: int, name: str) -> None:
    if labels.ndim != 1:
        raise InvalidSpecError(f"{name} must be a 1-d label vector")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise InvalidSpecError(f"{name} labels must lie in 0..{K - 1}")
    missing = np.setdiff1d(np.arange(K), labels)
    if missing.size:
        raise InvalidSpecError(f"{name} leaves communities {missing.tolist()} empty")


@dataclass
class BlockModelSpec:
    """One season's co-blockmodel.

    ``block_scaled`` selects how ``B`` is read when sampling edges.  With the
    default (False) the edge probability is ``theta_y[i] * theta_z[j] * B[y_i, z_j]``
    so ``B[k, r]`` is the expected number of links between communities k and r.
    With True each propensity is first multiplied by its community size, which
    makes ``B[k, r]`` the average edge probability inside block (k, r).
    """

    y: np.ndarray
    z: np.ndarray
    B: np.ndarray
    theta_y: np.ndarray
    theta_z: np.ndarray
    w_lower: float = 0.3
    w_upper: float = 1.0
    block_scaled: bool = False

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=int)
        self.z = np.asarray(self.z, dtype=int)
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.theta_y = np.asarray(self.theta_y, dtype=float)
        self.theta_z = np.asarray(self.theta_z, dtype=float)
        self.validate()

    @property
    def q(self) -> int:
        return self.y.size

    @property
    def K_y(self) -> int:
        return self.B.shape[0]

    @property
    def K_z(self) -> int:
        return self.B.shape[1]

    @property
    def mu(self) -> float:
        """Mean edge weight under the uniform weight law."""
        return 0.5 * (self.w_lower + self.w_upper)

    def validate(self) -> None:
        q = self.y.size
        for name, arr in (("z", self.z), ("theta_y", self.theta_y), ("theta_z", self.theta_z)):
            if arr.shape != (q,):
                raise InvalidSpecError(f"{name} has shape {arr.shape}, expected ({q},)")
        _check_labels(self.y, self.K_y, "y")
        _check_labels(self.z, self.K_z, "z")
        if not np.all(np.isfinite(self.B)) or self.B.min() < 0 or self.B.max() > 1:
            raise InvalidSpecError("B entries must lie in [0, 1]")
        if np.any(self.theta_y < 0) or np.any(self.theta_z < 0):
            raise InvalidSpecError("propensities must be nonnegative")
        for name, theta, labels, K in (
            ("theta_y", self.theta_y, self.y, self.K_y),
            ("theta_z", self.theta_z, self.z, self.K_z),
        ):
            sums = np.bincount(labels, weights=theta, minlength=K)
            if np.max(np.abs(sums - 1.0)) > _SUM_TOL:
                raise InvalidSpecError(f"{name} must sum to 1 within each community, got {sums}")
        if not 0 < self.w_lower < self.w_upper:
            raise InvalidSpecError("weight bounds need 0 < w_lower < w_upper")
        P = self.edge_probabilities(check=False)
        if P.max(initial=0.0) > 1.0 + 1e-12:
            i, j = np.unravel_index(np.argmax(P), P.shape)
            raise InvalidSpecError(f"edge probability {P[i, j]:.4g} at ({i}, {j}) exceeds 1")

    def edge_probabilities(self, check: bool = True) -> np.ndarray:
        ty, tz = self.theta_y, self.theta_z
        if self.block_scaled:
            ty = ty * np.bincount(self.y, minlength=self.K_y)[self.y]
            tz = tz * np.bincount(self.z, minlength=self.K_z)[self.z]
        P = ty[:, None] * self.B[np.ix_(self.y, self.z)] * tz[None, :]
        if check and P.max(initial=0.0) > 1.0 + 1e-12:
            raise InvalidSpecError("edge probabilities exceed 1")
        return P

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "K_y": self.K_y,
            "K_z": self.K_z,
            "y": (self.y + 1).tolist(),
            "z": (self.z + 1).tolist(),
            "B": self.B.tolist(),
            "theta_y": self.theta_y.tolist(),
            "theta_z": self.theta_z.tolist(),
            "w_lower": self.w_lower,
            "w_upper": self.w_upper,
            "block_scaled": self.block_scaled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BlockModelSpec":
        spec = cls(
            y=np.asarray(d["y"], dtype=int) - 1,
            z=np.asarray(d["z"], dtype=int) - 1,
            B=d["B"],
            theta_y=d["theta_y"],
            theta_z=d["theta_z"],
            w_lower=d.get("w_lower", 0.3),
            w_upper=d.get("w_upper", 1.0),
            block_scaled=d.get("block_scaled", False),
        )
        for key, value in (("q", spec.q), ("K_y", spec.K_y), ("K_z", spec.K_z)):
            if key in d and d[key] != value:
                raise InvalidSpecError(f"{key}={d[key]} disagrees with the arrays ({value})")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BlockModelSpec":
        return cls.from_dict(json.loads(text))


def population_adjacency(spec: BlockModelSpec, mu: Optional[float] = None) -> np.ndarray:
    """Expected adjacency ``mu * Theta_y Y B Z' Theta_z`` (entrywise mu times the edge probability)."""
    if mu is None:
        mu = spec.mu
    if not mu > 0:
        raise InvalidSpecError("mu must be positive")
    return mu * spec.edge_probabilities()


def sample_adjacency(spec: BlockModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a weighted directed adjacency matrix.

    Edges are independent Bernoulli draws; present edges get a weight uniform
    on ``[w_lower, w_upper]``.
    """
    P = spec.edge_probabilities()
    q = spec.q
    present = rng.random((q, q)) < P
    weights = rng.uniform(spec.w_lower, spec.w_upper, size=(q, q))
    return np.where(present, weights, 0.0)


def make_equal_memberships(q: int, K: int) -> np.ndarray:
    """Contiguous equal-sized communities, e.g. ``(4, 2) -> [0, 0, 1, 1]``."""
    if K < 1 or K > q:
        raise ConfigError(f"need 1 <= K <= q, got K={K}, q={q}")
    if q % K:
        raise ConfigError(f"K={K} does not divide q={q}")
    return np.repeat(np.arange(K), q // K)


def sample_propensities(
    labels: np.ndarray,
    rng: np.random.Generator,
    log_mean: float = 2.0,
    log_sd: float = 1.0,
) -> np.ndarray:
    """Log-normal node propensities rescaled to sum to one within each community."""
    labels = np.asarray(labels, dtype=int)
    raw = np.exp(rng.normal(log_mean, log_sd, size=labels.size))
    totals = np.bincount(labels, weights=raw)
    return raw / totals[labels]


def uniform_propensities(labels: np.ndarray) -> np.ndarray:
    """Equal propensities ``1 / |community|``."""
    labels = np.asarray(labels, dtype=int)
    sizes = np.bincount(labels)
    return 1.0 / sizes[labels]


@dataclass
class SeasonalGraphSequence:
    """Per-season block models and their sampled adjacency matrices.

    ``cyclic`` is True for periodic models, where the receiving partition of
    the last season must equal the sending partition of the first.
    """

    specs: List[BlockModelSpec]
    adjacency: List[np.ndarray] = field(default_factory=list)
    cyclic: bool = True

    def __post_init__(self):
        if not self.specs:
            raise InvalidSpecError("a sequence needs at least one season")
        q = self.specs[0].q
        if any(s.q != q for s in self.specs):
            raise InvalidSpecError("all seasons must share the node count")
        self.check_chain()

    @property
    def s(self) -> int:
        return len(self.specs)

    @property
    def q(self) -> int:
        return self.specs[0].q

    def check_chain(self) -> None:
        for m in range(1, self.s):
            if not np.array_equal(self.specs[m - 1].z, self.specs[m].y):
                raise InvalidSpecError(
                    f"receiving labels of season {m} differ from sending labels of season {m + 1}"
                )
        if self.cyclic and self.s > 1 and not np.array_equal(self.specs[-1].z, self.specs[0].y):
            raise InvalidSpecError("cyclic sequence: last receiving labels differ from first sending labels")

    def resample(self, rng: np.random.Generator) -> "SeasonalGraphSequence":
        self.adjacency = [sample_adjacency(spec, rng) for spec in self.specs]
        return self
