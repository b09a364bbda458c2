"""
Finite joint distributions of (X, Z), the channel X -> Y and the check that
E_W ⊆ E_(X,Z) exactly when H(X|Y,Z) = 0.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, List, Optional

import numpy as np
from pydantic import BaseModel
from scipy.stats import entropy

from config.settings import DEFAULT_CONFIG
from graphs.graph import characteristic_graph_pair, confusion_graph, is_edge_subset
from markov.chain import ChainLike, as_chain, stationary
from utils.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Distribusi bersama Q[x, z] = Pr(X = x, Z = z)"""
    q: np.ndarray
    tolerance: float = DEFAULT_CONFIG.stochastic_tolerance

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or 0 in q.shape:
            raise ValidationError(f"joint distribution must be a non-empty matrix, got shape {q.shape}")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise ValidationError("joint distribution has negative or non-finite entries")
        if abs(q.sum() - 1.0) > self.tolerance:
            raise ValidationError(f"joint distribution sums to {q.sum():.12g}, not 1")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def nx(self) -> int:
        return self.q.shape[0]

    @property
    def nz(self) -> int:
        return self.q.shape[1]

    def support(self, positivity: float = DEFAULT_CONFIG.positivity_threshold) -> np.ndarray:
        return self.q > positivity

    @classmethod
    def from_chain(cls, P: ChainLike, **kwargs) -> 'JointDistribution':
        """X = X_2 with side information Z = X_1: Q[x, z] = μ_z P[z, x]"""
        P = as_chain(P)
        mu = stationary(P, **kwargs).mu
        return cls((mu[:, None] * P.rows).T)

    def iid_power(self, K: int) -> 'JointDistribution':
        """K independent copies, tuples in mixed radix"""
        if K < 1:
            raise ValidationError(f"K must be ≥ 1, got {K}")
        return JointDistribution(reduce(np.kron, [self.q] * K))


def _check_channel(Q: JointDistribution, W: np.ndarray, tolerance: float) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != Q.nx:
        raise ValidationError(f"channel needs {Q.nx} rows, got shape {W.shape}")
    if np.any(W < 0) or np.any(np.abs(W.sum(axis=1) - 1.0) > tolerance):
        raise ValidationError("channel matrix must be row-stochastic")
    return W


def conditional_entropy_xyz(Q: JointDistribution, W: np.ndarray,
                            tolerance: float = DEFAULT_CONFIG.stochastic_tolerance) -> float:
    """H(X | Y, Z) in nats for P(x, y, z) = Q[x, z] W[x, y]"""
    W = _check_channel(Q, W, tolerance)
    joint = Q.q[:, None, :] * W[:, :, None]
    h = entropy(joint.ravel()) - entropy(joint.sum(axis=0).ravel())
    return max(float(h), 0.0)


def conditional_entropy_xz(Q: JointDistribution) -> float:
    return max(float(entropy(Q.q.ravel()) - entropy(Q.q.sum(axis=0))), 0.0)


def entropy_x(Q: JointDistribution) -> float:
    return float(entropy(Q.q.sum(axis=1)))


class Prop1Check(BaseModel):
    subset: bool
    entropy_nats: float
    consistent: bool
    units: str = "nats"


def check_prop1(Q: JointDistribution, W: np.ndarray,
                positivity: float = DEFAULT_CONFIG.positivity_threshold,
                lossless_tolerance: float = DEFAULT_CONFIG.lossless_tolerance) -> Prop1Check:
    """Compare edge-set inclusion of confusion in characteristic graph with H(X|Y,Z) = 0"""
    h = conditional_entropy_xyz(Q, W)
    subset = is_edge_subset(confusion_graph(W, positivity=positivity),
                            characteristic_graph_pair(Q, positivity=positivity))
    consistent = subset == (h <= lossless_tolerance)
    if not consistent:
        logger.error(f"Inclusion test says {subset} but H(X|Y,Z) = {h:.3e}")
    return Prop1Check(subset=subset, entropy_nats=h, consistent=consistent)


def random_joint(rng: np.random.Generator, nx: int, nz: int,
                 support: Optional[np.ndarray] = None) -> JointDistribution:
    """Uniform support pattern, then normalised uniform masses on it"""
    if support is None:
        support = rng.random((nx, nz)) < 0.5
        if not support.any():
            support[rng.integers(nx), rng.integers(nz)] = True
    support = np.asarray(support, dtype=bool)
    if not support.any():
        raise ValidationError("support pattern is empty")
    weights = rng.uniform(0.05, 1.0, size=support.shape) * support
    return JointDistribution(weights / weights.sum())


def support_patterns(nx: int, nz: int) -> Iterator[np.ndarray]:
    """Every non-empty 0/1 pattern on nx × nz"""
    for cells in itertools.product((False, True), repeat=nx * nz):
        if any(cells):
            yield np.array(cells, dtype=bool).reshape(nx, nz)


def deterministic_channels(nx: int, ny: int) -> Iterator[np.ndarray]:
    """Every map X -> Y as a 0/1 channel matrix"""
    for mapping in itertools.product(range(ny), repeat=nx):
        W = np.zeros((nx, ny))
        W[np.arange(nx), mapping] = 1.0
        yield W


class Prop1SweepReport(BaseModel):
    cases: int
    subset_cases: int
    consistent: bool
    failures: List[int] = []


def prop1_sweep(nx: int = 3, nz: int = 2, ny: int = 2, draws: int = 5,
                seed: int = DEFAULT_CONFIG.default_seed, **kwargs) -> Prop1SweepReport:
    """check_prop1 over every support pattern × draw × deterministic channel"""
    rng = np.random.default_rng(seed)
    channels = list(deterministic_channels(nx, ny))
    cases = subset_cases = 0
    failures = []
    for pattern in support_patterns(nx, nz):
        for _ in range(draws):
            Q = random_joint(rng, nx, nz, support=pattern)
            for W in channels:
                result = check_prop1(Q, W, **kwargs)
                subset_cases += result.subset
                if not result.consistent:
                    failures.append(cases)
                cases += 1
    logger.info(f"Inclusion/entropy sweep: {cases} cases, {len(failures)} inconsistent")
    return Prop1SweepReport(cases=cases, subset_cases=subset_cases,
                            consistent=not failures, failures=failures)
