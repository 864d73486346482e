"""Observable dictionaries, lifted data matrices, and the centralized solve.

A dictionary maps a state x in R^q to a feature vector Psi(x) in R^n.
Consecutive states of a snapshot sequence are lifted into the paired data
matrices X, Y (one column per transition), and the best linear operator
K with Y ~ K X is the minimizer of 0.5 * ||Y - K X||_F^2, computed in
closed form as Y @ pinv(X).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from .linalg import DimensionError, pseudoinverse


@dataclass(frozen=True, eq=False)
class Dictionary:
    """A fixed set of observables evaluated entrywise on states.

    Variants: ``vectorization`` (identity lift, n = q), ``monomial``
    (all monomials of total degree <= max_degree, n = C(q + d, d)),
    ``radial`` (Gaussian bumps at fixed centers, n = number of centers).
    """

    kind: str
    input_dim: int
    output_dim: int
    exponents: np.ndarray | None = None
    centers: np.ndarray | None = None
    width: float | None = None

    def lift_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.input_dim:
            raise DimensionError(
                f"state has dim {x.size}, dictionary expects {self.input_dim}")
        if self.kind == "vectorization":
            return x.copy()
        if self.kind == "monomial":
            return np.prod(x[None, :] ** self.exponents, axis=1)
        if self.kind == "radial":
            d2 = np.sum((self.centers - x[None, :]) ** 2, axis=1)
            return np.exp(-d2 / (2.0 * self.width**2))
        raise ValueError(f"unknown dictionary kind {self.kind!r}")


def vectorization_dictionary(q: int) -> Dictionary:
    if q < 1:
        raise ValueError("input dimension must be positive")
    return Dictionary("vectorization", q, q)


def monomial_dictionary(q: int, max_degree: int) -> Dictionary:
    """All monomials x^a with |a| <= max_degree, ordered by degree then index."""
    if q < 1 or max_degree < 0:
        raise ValueError("need q >= 1 and max_degree >= 0")
    rows = []
    for deg in range(max_degree + 1):
        for combo in combinations_with_replacement(range(q), deg):
            e = np.zeros(q, dtype=int)
            for idx in combo:
                e[idx] += 1
            rows.append(e)
    exponents = np.array(rows, dtype=int)
    assert exponents.shape[0] == comb(q + max_degree, max_degree)
    return Dictionary("monomial", q, exponents.shape[0], exponents=exponents)


def radial_dictionary(centers, width: float) -> Dictionary:
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if width <= 0:
        raise ValueError("radial width must be positive")
    return Dictionary("radial", centers.shape[1], centers.shape[0],
                      centers=centers, width=float(width))


def parse_dictionary(spec: str, q: int, seed: int = 0) -> Dictionary:
    """Dictionary from a config string.

    ``"vectorization"``, ``"monomial:<max_degree>"``, or
    ``"radial:<num_centers>:<width>"`` (centers drawn uniformly from
    [0, 1]^q with the given seed).
    """
    parts = spec.split(":")
    if parts[0] == "vectorization" and len(parts) == 1:
        return vectorization_dictionary(q)
    if parts[0] == "monomial" and len(parts) == 2:
        return monomial_dictionary(q, int(parts[1]))
    if parts[0] == "radial" and len(parts) == 3:
        rng = np.random.default_rng(seed)
        centers = rng.uniform(0.0, 1.0, size=(int(parts[1]), q))
        return radial_dictionary(centers, float(parts[2]))
    raise ValueError(f"cannot parse dictionary spec {spec!r}")


@dataclass(frozen=True, eq=False)
class SnapshotSequence:
    """Ordered states x_1, ..., x_{N+1} as a (count, q) array, count >= 2."""

    states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise DimensionError(
                f"need a (count>=2, q) state array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("snapshot states contain non-finite entries")
        object.__setattr__(self, "states", arr)

    @property
    def count(self) -> int:
        return int(self.states.shape[0])

    @property
    def state_dim(self) -> int:
        return int(self.states.shape[1])


@dataclass(frozen=True, eq=False)
class LiftedData:
    """Paired n x N data matrices; column k of Y lifts the successor of column k of X."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape != Y.shape:
            raise DimensionError(
                f"X and Y must be 2-D with identical shape, got {X.shape} / {Y.shape}")
        if X.shape[1] < 1:
            raise DimensionError("need at least one data column")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("lifted data contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def feature_dim(self) -> int:
        return int(self.X.shape[0])

    @property
    def num_samples(self) -> int:
        return int(self.X.shape[1])


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Square operator K advancing lifted states one step."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise DimensionError(f"operator must be square, got shape {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError("operator contains non-finite entries")
        object.__setattr__(self, "K", K)

    @property
    def dim(self) -> int:
        return int(self.K.shape[0])


def lift(seq: SnapshotSequence, dictionary: Dictionary) -> LiftedData:
    """Evaluate the dictionary on consecutive states: X[:,k]=Psi(x_k), Y[:,k]=Psi(x_{k+1})."""
    if dictionary.input_dim != seq.state_dim:
        raise DimensionError(
            f"dictionary input dim {dictionary.input_dim} != state dim {seq.state_dim}")
    if dictionary.kind == "vectorization":
        lifted = seq.states.T.copy()
    else:
        lifted = np.column_stack([dictionary.lift_state(x) for x in seq.states])
    return LiftedData(X=lifted[:, :-1], Y=lifted[:, 1:])


def centralized_solve(data: LiftedData, rank_tol: float | None = None) -> KoopmanModel:
    """Closed-form minimizer K* = Y @ pinv(X).

    Among all minimizers of the squared-residual objective this is the one
    whose rows have no component on the orthogonal complement of range(X).
    Rank-deficient X is handled by the pseudoinverse cutoff.
    """
    return KoopmanModel(data.Y @ pseudoinverse(data.X, rank_tol))


def objective(model: KoopmanModel, data: LiftedData) -> float:
    """0.5 * ||Y - K X||_F^2."""
    if model.dim != data.feature_dim:
        raise DimensionError(
            f"operator dim {model.dim} != data feature dim {data.feature_dim}")
    return 0.5 * float(np.linalg.norm(data.Y - model.K @ data.X, "fro")) ** 2


def rollout(model: KoopmanModel, z0, steps: int) -> np.ndarray:
    """Iterate the operator: returns (steps+1, n) array [z0, Kz0, ..., K^steps z0]."""
    z = np.asarray(z0, dtype=float).ravel()
    if z.size != model.dim:
        raise DimensionError(f"initial state dim {z.size} != operator dim {model.dim}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    out = np.empty((steps + 1, model.dim))
    out[0] = z
    for k in range(steps):
        out[k + 1] = model.K @ out[k]
    return out


def fit_metric(models, data: LiftedData) -> float:
    """Mean full-dataset residual (1/p) * sum_i ||Y - K_i X||_F."""
    models = list(models)
    if not models:
        raise ValueError("need at least one model")
    total = 0.0
    for m in models:
        if m.dim != data.feature_dim:
            raise DimensionError(
                f"operator dim {m.dim} != data feature dim {data.feature_dim}")
        total += float(np.linalg.norm(data.Y - m.K @ data.X, "fro"))
    return total / len(models)
