"""Quadrature rules: optimal weights, exact worst-case error, MMD, compression.

A rule (nodes X~, weights w) approximates integration against a target
measure.  The optimal weights solve the least-squares problem of projecting
the target's kernel mean embedding onto span{k(X~_j, .)}, i.e. w = K_m^+ v
with v_j the target moment of k(X~_j, .).  The worst-case error over the
unit ball of the RKHS is the embedding distance

    E^2 = int int k d(rho x rho) - 2 sum_j w_j int k(., X~_j) drho + w^T K_m w

which is computable exactly for discrete targets (in Theta(n^2) kernel
evaluations) and in closed form for the uniform unit cube under the periodic
Sobolev kernel, whose moments are identically one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .kernels import KernelSpec, gram
from .numerics import pinv_apply
from .sampling import SamplerConfig, sample_nodes

# Row block for the Theta(n^2) double sums; partial sums are combined with
# exact (fsum) accumulation.
_CHUNK_ROWS = 1024


@dataclass
class QuadratureRule:
    """m weighted nodes; weights are unconstrained in sign and sum."""

    nodes: np.ndarray
    weights: np.ndarray
    indices: np.ndarray | None = None  # source indices when subsampled
    sample_time_s: float | None = None
    weight_time_s: float | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise InputError("node and weight counts differ")
        if not np.all(np.isfinite(self.weights)):
            raise InputError("weights must be finite")

    def __len__(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class TargetMeasure:
    """Integration target: discrete (points + masses) or uniform unit cube.

    The unit-cube variant is usable only with periodic Sobolev kernels, whose
    uniform-measure moments are available analytically.
    """

    points: np.ndarray | None = None
    masses: np.ndarray | None = None
    cube_dim: int | None = None

    @staticmethod
    def discrete(points, masses=None) -> "TargetMeasure":
        P = np.asarray(points, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None]
        if P.shape[0] == 0:
            raise InputError("discrete target must be nonempty")
        if masses is None:
            w = np.full(P.shape[0], 1.0 / P.shape[0])
        else:
            w = np.asarray(masses, dtype=np.float64).ravel()
            if w.shape[0] != P.shape[0]:
                raise InputError("points and masses counts differ")
            if np.any(w < 0):
                raise InputError("masses must be nonnegative")
            if abs(float(w.sum()) - 1.0) > 1e-12:
                raise InputError("masses must sum to 1 within 1e-12")
        return TargetMeasure(points=P, masses=w)

    @staticmethod
    def unit_cube(dim: int) -> "TargetMeasure":
        if dim < 1:
            raise InputError("cube dimension must be >= 1")
        return TargetMeasure(cube_dim=int(dim))

    @property
    def is_discrete(self) -> bool:
        return self.points is not None


def _check_analytic(kernel: KernelSpec, target: TargetMeasure, dim: int | None = None):
    if kernel.family != "sobolev":
        raise InputError("the unit-cube target has analytic moments only for sobolev kernels")
    if dim is not None and dim != target.cube_dim:
        raise InputError(
            f"node dimension {dim} does not match cube dimension {target.cube_dim}"
        )
    if kernel.dim != target.cube_dim:
        raise InputError("kernel and cube dimensions differ")


def target_moments(kernel: KernelSpec, nodes, target: TargetMeasure) -> np.ndarray:
    """v_j = E_{x ~ target} k(nodes_j, x).

    Discrete targets are streamed in row chunks so the m x n cross matrix is
    never materialized; the unit-cube target gives the constant vector 1.
    """
    N = np.asarray(nodes, dtype=np.float64)
    if N.ndim == 1:
        N = N[:, None]
    if not target.is_discrete:
        _check_analytic(kernel, target, dim=N.shape[1])
        return np.ones(N.shape[0])
    v = np.zeros(N.shape[0])
    pts, masses = target.points, target.masses
    for j0 in range(0, pts.shape[0], _CHUNK_ROWS):
        j1 = min(j0 + _CHUNK_ROWS, pts.shape[0])
        v += gram(kernel, N, pts[j0:j1]) @ masses[j0:j1]
    return v


def target_self_product(kernel: KernelSpec, target: TargetMeasure) -> float:
    """Double integral of the kernel against the target: int int k d(rho x rho)."""
    if not target.is_discrete:
        _check_analytic(kernel, target)
        return 1.0
    pts, masses = target.points, target.masses
    parts = []
    for i0 in range(0, pts.shape[0], _CHUNK_ROWS):
        i1 = min(i0 + _CHUNK_ROWS, pts.shape[0])
        parts.append(float(masses[i0:i1] @ (gram(kernel, pts[i0:i1], pts) @ masses)))
    return math.fsum(parts)


def optimal_weights(kernel: KernelSpec, nodes, target: TargetMeasure) -> QuadratureRule:
    """Least-squares optimal rule on the given nodes: w = K_m^+ v.

    The pseudo-inverse keeps w in the row space of K_m (minimum-norm
    solution); duplicate nodes are handled by the truncated spectrum rather
    than deduplication.
    """
    N = np.asarray(nodes, dtype=np.float64)
    if N.ndim == 1:
        N = N[:, None]
    if N.shape[0] < 1:
        raise InputError("need at least one node")
    v = target_moments(kernel, N, target)
    Km = gram(kernel, N)
    return QuadratureRule(nodes=N, weights=pinv_apply(Km, v))


def integrate(rule: QuadratureRule, f_at_nodes) -> float:
    """Apply the rule to function values at its nodes: sum_j w_j f(X~_j)."""
    f = np.asarray(f_at_nodes, dtype=np.float64).ravel()
    if f.shape[0] != len(rule):
        raise InputError(f"expected {len(rule)} values, got {f.shape[0]}")
    return float(rule.weights @ f)


def worst_case_error(
    rule: QuadratureRule,
    target: TargetMeasure,
    kernel: KernelSpec,
    self_product: float | None = None,
) -> float:
    """Exact worst-case integration error over the RKHS unit ball.

    ``self_product`` lets callers reuse the target's double integral, which
    is the only Theta(n^2) piece.  Small negative squared errors (above
    -1e-8) from cancellation are clamped to zero; anything lower raises.
    """
    T = target_self_product(kernel, target) if self_product is None else float(self_product)
    v = target_moments(kernel, rule.nodes, target)
    Km = gram(kernel, rule.nodes)
    w = rule.weights
    e2 = math.fsum([T, -2.0 * float(w @ v), float(w @ (Km @ w))])
    if e2 < -1e-8:
        raise NumericalError(f"squared worst-case error {e2:.3e} is negative beyond tolerance")
    return math.sqrt(max(e2, 0.0))


def worst_case_witness(
    rule: QuadratureRule, target: TargetMeasure, kernel: KernelSpec
) -> tuple[np.ndarray, float]:
    """Unit-norm witness function achieving the worst-case error.

    The witness is the normalized difference of the target and rule
    embeddings, expanded over the union of the target support and the nodes.
    Returns its expansion coefficients and the achieved integration gap,
    which must equal ``worst_case_error``.  A zero embedding gap yields zero
    coefficients and gap 0.
    """
    if not target.is_discrete:
        raise InputError("the witness construction needs a discrete target")
    pts, masses = target.points, target.masses
    if pts.shape[1] != rule.nodes.shape[1]:
        raise InputError("target and rule dimensions differ")
    union = np.vstack([pts, rule.nodes])
    coeffs = np.concatenate([masses, -rule.weights])
    G = gram(kernel, union)
    norm2 = float(coeffs @ (G @ coeffs))
    scale = float(np.abs(coeffs) @ (np.abs(G) @ np.abs(coeffs)))
    if norm2 <= 1e-13 * scale:
        return np.zeros_like(coeffs), 0.0
    unit = coeffs / math.sqrt(norm2)
    n_t = pts.shape[0]
    target_integral = float(masses @ (G[:n_t] @ unit))
    rule_integral = float(rule.weights @ (G[n_t:] @ unit))
    return unit, abs(target_integral - rule_integral)


def mmd(kernel: KernelSpec, points_a, weights_a, points_b, weights_b) -> float:
    """Embedding distance between two weighted point sets."""

    def quad(X, wx, Y, wy):
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        wx = np.asarray(wx, dtype=np.float64).ravel()
        wy = np.asarray(wy, dtype=np.float64).ravel()
        parts = []
        for i0 in range(0, X.shape[0], _CHUNK_ROWS):
            i1 = min(i0 + _CHUNK_ROWS, X.shape[0])
            parts.append(float(wx[i0:i1] @ (gram(kernel, X[i0:i1], Y) @ wy)))
        return math.fsum(parts)

    m2 = math.fsum(
        [
            quad(points_a, weights_a, points_a, weights_a),
            -2.0 * quad(points_a, weights_a, points_b, weights_b),
            quad(points_b, weights_b, points_b, weights_b),
        ]
    )
    return math.sqrt(max(m2, 0.0))


def compress(X, kernel: KernelSpec, sampler: SamplerConfig) -> QuadratureRule:
    """End-to-end compression of the empirical measure on X into an m-node rule.

    Samples nodes per the configured strategy, then solves for the optimal
    weights against the uniform discrete target on X.  Wall time of the two
    phases is recorded on the returned rule.
    """
    P = np.asarray(X, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    rng = np.random.default_rng(np.random.SeedSequence(sampler.seed))
    t0 = time.perf_counter()
    indices = sample_nodes(P, kernel, sampler, rng)
    t1 = time.perf_counter()
    rule = optimal_weights(kernel, P[indices], TargetMeasure.discrete(P))
    t2 = time.perf_counter()
    rule.indices = indices
    rule.sample_time_s = t1 - t0
    rule.weight_time_s = t2 - t1
    return rule


def save_rule(rule: QuadratureRule, path) -> None:
    """Write the rule as CSV with header index,x_1,...,x_d,weight.

    Floats use shortest round-trip formatting, so load_rule restores the
    nodes and weights bit-exactly.  Missing source indices are written as -1.
    """
    d = rule.nodes.shape[1]
    idx = rule.indices if rule.indices is not None else np.full(len(rule), -1, dtype=int)
    header = "index," + ",".join(f"x_{k + 1}" for k in range(d)) + ",weight"
    lines = [header]
    for i in range(len(rule)):
        coords = ",".join(repr(float(c)) for c in rule.nodes[i])
        lines.append(f"{int(idx[i])},{coords},{repr(float(rule.weights[i]))}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_rule(path) -> QuadratureRule:
    """Read a rule written by save_rule."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or not lines[0].startswith("index,"):
        raise InputError(f"{path}: not a quadrature-rule CSV")
    ncols = len(lines[0].split(","))
    idx, nodes, weights = [], [], []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != ncols:
            raise InputError(f"{path}: ragged row {line!r}")
        idx.append(int(cells[0]))
        nodes.append([float(c) for c in cells[1:-1]])
        weights.append(float(cells[-1]))
    indices = np.asarray(idx, dtype=int)
    return QuadratureRule(
        nodes=np.asarray(nodes, dtype=np.float64),
        weights=np.asarray(weights, dtype=np.float64),
        indices=None if np.all(indices < 0) else indices,
    )
