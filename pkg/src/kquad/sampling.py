"""Node selection: uniform subsampling and ridge-leverage-score sampling.

Exact ridge leverage scores are the diagonal of K (K + lambda n I)^(-1).
The approximate variant draws a uniform pilot subset of size p, whitens the
data through the pilot's Cholesky factor, and evaluates the scores in that
p-dimensional feature space; with p = n it reproduces the exact scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import InputError, NumericalError
from .kernels import KernelSpec, gram, sup_norm_bound
from .numerics import eig_sym
from .spectral import lambda_rule


@dataclass(frozen=True)
class LeverageScores:
    """Per-point scores at regularization lam, with provenance."""

    lam: float
    values: np.ndarray
    mode: str  # "exact" | "pilot"
    pilot_size: int | None = None


@dataclass(frozen=True)
class SamplerConfig:
    """Node-sampling strategy and its parameters.

    ``lam=None`` and ``pilot_size=None`` select the built-in defaults for the
    arls strategy: lam = 19 K^2 log(32 n / delta) / n and p = ceil(4 sqrt(n)).
    ``z_claim``/``lambda0`` record the claimed multiplicative accuracy and the
    smallest regularization the scores are trusted at; they are diagnostic.
    """

    strategy: str = "uniform"  # uniform | uniform-wr | arls
    m: int = 1
    lam: float | None = None
    pilot_size: int | None = None
    z_claim: float = 1.0
    lambda0: float = 0.0
    delta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("uniform", "uniform-wr", "arls"):
            raise InputError(f"unknown sampling strategy {self.strategy!r}")
        if self.m < 1:
            raise InputError("m must be >= 1")
        if self.z_claim < 1.0:
            raise InputError("z must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise InputError("delta must lie in (0, 1)")


def uniform_subsample(
    n: int, m: int, with_replacement: bool = False, rng: np.random.Generator | None = None
) -> np.ndarray:
    """m indices drawn uniformly from [0, n); without replacement uses a
    partial Fisher-Yates shuffle."""
    if m < 1 or n < 1:
        raise InputError("need n >= 1 and m >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    if with_replacement:
        return rng.integers(0, n, size=m)
    if m > n:
        raise InputError(f"cannot draw {m} of {n} indices without replacement")
    pool = np.arange(n)
    for i in range(m):
        j = i + int(rng.integers(n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:m].copy()


def exact_rls(K, lam: float) -> LeverageScores:
    """Exact ridge leverage scores of a PSD Gram matrix at regularization lam."""
    if lam <= 0:
        raise InputError("lambda must be positive")
    M = np.asarray(K, dtype=np.float64)
    n = M.shape[0]
    eig = eig_sym(M)
    floor = -1e-8 * max(1.0, float(eig.values[0]))
    if float(eig.values[-1]) < floor:
        raise NumericalError(
            f"Gram matrix is not PSD within tolerance: eigenvalue {float(eig.values[-1]):.6g}"
        )
    sig = np.clip(eig.values, 0.0, None)
    weights = sig / (sig + lam * n)
    values = (eig.vectors**2) @ weights
    return LeverageScores(lam=lam, values=values, mode="exact")


def _cholesky_with_jitter(Kp: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating a trace-scaled diagonal jitter on
    failure: 1e-12 tr(Kp)/p, x10 per retry, at most 6 retries."""
    try:
        return np.linalg.cholesky(Kp)
    except np.linalg.LinAlgError:
        pass
    p = Kp.shape[0]
    base = 1e-12 * float(np.trace(Kp)) / p
    if base <= 0:
        base = 1e-12
    for k in range(6):
        try:
            return np.linalg.cholesky(Kp + (base * 10.0**k) * np.eye(p))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        "pilot Gram matrix is numerically singular even with jitter; "
        "use a larger pilot or a larger lambda"
    )


def approx_rls_pilot(
    X,
    kernel: KernelSpec,
    lam: float,
    pilot_size: int,
    rng: np.random.Generator | None = None,
    pilot_indices=None,
) -> LeverageScores:
    """Pilot-based approximate ridge leverage scores.

    Draws ``pilot_size`` indices uniformly without replacement (or uses
    ``pilot_indices`` when given), maps every point to the whitened pilot
    feature b_i = L^(-1) k_p(x_i) with K_p = L L^T, and scores
    b_i^T (B^T B + lambda n I)^(-1) b_i.  Cost O(n p^2 + p^3).
    """
    P = np.asarray(X, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n = P.shape[0]
    if lam <= 0:
        raise InputError("lambda must be positive")
    if not 1 <= pilot_size <= n:
        raise InputError(f"pilot size must lie in [1, {n}]")
    if pilot_indices is None:
        pilot_indices = uniform_subsample(n, pilot_size, with_replacement=False, rng=rng)
    pilot_indices = np.asarray(pilot_indices, dtype=np.intp)
    L = _cholesky_with_jitter(gram(kernel, P[pilot_indices]))
    Kpn = gram(kernel, P[pilot_indices], P)
    B = solve_triangular(L, Kpn, lower=True)  # columns are the b_i
    G = B @ B.T
    G[np.diag_indices_from(G)] += lam * n
    factor = cho_factor(G, lower=True)
    values = np.einsum("ij,ij->j", B, cho_solve(factor, B))
    return LeverageScores(lam=lam, values=values, mode="pilot", pilot_size=len(pilot_indices))


def sample_proportional(
    scores: LeverageScores, m: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """m i.i.d. draws (with replacement) proportional to the scores."""
    if m < 1:
        raise InputError("m must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    v = np.clip(np.asarray(scores.values, dtype=np.float64), 0.0, None)
    total = float(v.sum())
    if total <= 0.0:
        raise InputError("all leverage scores are zero")
    return rng.choice(v.size, size=m, replace=True, p=v / total)


def default_pilot_size(n: int) -> int:
    return min(n, int(math.ceil(4.0 * math.sqrt(n))))


def sample_nodes(
    X, kernel: KernelSpec, config: SamplerConfig, rng: np.random.Generator
) -> np.ndarray:
    """Indices of the quadrature nodes for the configured strategy."""
    P = np.asarray(X, dtype=np.float64)
    n = P.shape[0]
    if config.strategy == "uniform":
        return uniform_subsample(n, config.m, with_replacement=False, rng=rng)
    if config.strategy == "uniform-wr":
        return uniform_subsample(n, config.m, with_replacement=True, rng=rng)
    lam = config.lam
    if lam is None:
        lam = lambda_rule("arls", n, K=sup_norm_bound(kernel), delta=config.delta)
    if lam < config.lambda0:
        raise InputError(f"lambda {lam:.3g} is below the trusted floor lambda0 {config.lambda0:.3g}")
    pilot = config.pilot_size if config.pilot_size is not None else default_pilot_size(n)
    scores = approx_rls_pilot(P, kernel, lam, pilot, rng=rng)
    return sample_proportional(scores, config.m, rng=rng)


def parse_sampler(text: str, m: int, seed: int = 0) -> SamplerConfig:
    """Build a SamplerConfig from a strategy string.

    Grammar: ``uniform``, ``uniform-wr``, ``arls:lambda=<float|auto>,pilot=<int|auto>``.
    """
    head, _, tail = text.strip().partition(":")
    strategy = head.strip().lower()
    if strategy in ("uniform", "uniform-wr"):
        if tail:
            raise InputError(f"strategy {strategy!r} takes no parameters")
        return SamplerConfig(strategy=strategy, m=m, seed=seed)
    if strategy != "arls":
        raise InputError(f"unknown sampling strategy {strategy!r}")
    lam = None
    pilot = None
    if tail:
        for item in tail.split(","):
            key, eq, value = item.partition("=")
            key, value = key.strip().lower(), value.strip().lower()
            if not eq:
                raise InputError(f"malformed sampler parameter {item!r}")
            if key == "lambda":
                lam = None if value == "auto" else float(value)
            elif key == "pilot":
                pilot = None if value == "auto" else int(value)
            else:
                raise InputError(f"unknown sampler parameter {key!r}")
    return SamplerConfig(strategy="arls", m=m, lam=lam, pilot_size=pilot, seed=seed)
