"""Simulated semi-supervised datasets with decaying overlap.

Data-generating process, for ``i = 1..n+N``::

    X_i ~ N(0, I_p),   eps_i ~ N(0, I_k),   Y_i = beta^T X_i + eps_i
    R_i | X_i ~ Bernoulli(pi(X_i))

with either ``pi(x) = n / (n + N)`` (``decaying_mcar``) or
``pi(x) = expit(log(n / (n + N)) + x^T gamma)`` (``decaying_offset``).
Columns of ``beta`` and ``gamma`` are standard normal and redrawn for every
seed.

Reproducibility contract
------------------------
All randomness comes from one ``numpy.random.Generator(PCG64(seed))``
producing uniforms on [0, 1).  Normals are ``ndtri(u)`` (inverse CDF) with
``u == 0`` mapped to ``2**-54``; Bernoulli draws are ``u < pi``.  Draw order:
beta (p*k, row-major), gamma (p, drawn in both scenarios), X (m*p,
row-major), eps (m*k, row-major), then one uniform per row for R.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .data import ObservedDataset
from .errors import ConfigError
from .nuisance import expit
from .targets import TargetKind

__all__ = [
    "ScenarioConfig",
    "TrueParams",
    "generate",
    "true_propensity",
    "true_theta",
    "replication_seed",
]

SCENARIOS = ("decaying_mcar", "decaying_offset")


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    N: int
    p: int = 10
    k: int = 2
    propensity_scenario: str = "decaying_offset"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.N < 0 or self.p < 1 or self.k < 1:
            raise ConfigError(f"invalid scenario sizes: n={self.n}, N={self.N}, p={self.p}, k={self.k}")
        if self.propensity_scenario not in SCENARIOS:
            raise ConfigError(f"unknown propensity scenario {self.propensity_scenario!r}")

    @property
    def m(self) -> int:
        return self.n + self.N

    @property
    def design_fraction(self) -> float:
        return self.n / (self.n + self.N)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class TrueParams:
    beta: np.ndarray
    gamma: np.ndarray | None
    theta_star_mean: np.ndarray
    theta_star_ols: np.ndarray | None


def _normals(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    u[u == 0.0] = 2.0 ** -54
    return special.ndtri(u)


def true_propensity(x, scenario: ScenarioConfig, params: TrueParams):
    """Labeling probability at ``x`` (one row or a matrix of rows)."""
    x = np.asarray(x, dtype=float)
    frac = scenario.design_fraction
    if scenario.propensity_scenario == "decaying_mcar":
        out = np.full(x.shape[:-1], frac) if x.ndim > 1 else frac
        return out
    return expit(np.log(frac) + x @ params.gamma)


def generate(scenario: ScenarioConfig, gamma_override=None) -> tuple[ObservedDataset, TrueParams]:
    """Draw one dataset and its ground truth; deterministic given ``scenario.seed``.

    ``gamma_override`` replaces the drawn propensity coefficients (the draw
    still happens, so the rest of the stream is unchanged).
    """
    rng = np.random.default_rng(scenario.seed)
    p, k, m = scenario.p, scenario.k, scenario.m
    beta = _normals(rng, (p, k))
    gamma = _normals(rng, p)
    if gamma_override is not None:
        gamma = np.asarray(gamma_override, dtype=float).reshape(p)
    x = _normals(rng, (m, p))
    eps = _normals(rng, (m, k))
    y = x @ beta + eps
    params = TrueParams(
        beta=beta,
        gamma=gamma if scenario.propensity_scenario == "decaying_offset" else None,
        theta_star_mean=np.zeros(k),
        theta_star_ols=beta[:, 0].copy() if k == 1 else None,
    )
    pi = np.broadcast_to(true_propensity(x, scenario, params), (m,))
    r = (rng.random(m) < pi).astype(np.int8)
    return ObservedDataset(x, r, y), params


def true_theta(params: TrueParams, target) -> np.ndarray:
    target = TargetKind(target)
    if target is TargetKind.MEAN:
        return params.theta_star_mean.copy()
    if params.theta_star_ols is None:
        raise ConfigError("ols_coef target needs a scalar outcome (k = 1)")
    return params.theta_star_ols.copy()


def replication_seed(base_seed: int, scenario_id: str, replication: int) -> int:
    """Seed for one replication: the first 32-bit word of ``SeedSequence([base, crc32(id), rep])``.

    The estimator kind is deliberately not an input, so all estimators in a
    replication see the same dataset.
    """
    if base_seed < 0:
        raise ConfigError("base seed must be nonnegative")
    ss = np.random.SeedSequence([int(base_seed),
                                 zlib.crc32(scenario_id.encode("utf-8")),
                                 int(replication)])
    return int(ss.generate_state(1)[0])
