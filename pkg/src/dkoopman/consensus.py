"""Distributed PI-consensus solver for the partitioned least-squares problem.

The p agents hold contiguous column blocks (X_i, Y_i) of the lifted data
and evolve an operator guess K_i plus an integral state R_i through the
synchronous round

    K_i+ = K_i - alpha * ( (K_i X_i - Y_i) X_i^T
                           + k_P * sum_{j in N(i)} (K_i - K_j)
                           + k_I * R_i )
    R_i+ = R_i + alpha  *  sum_{j in N(i)} (K_i - K_j)

where every neighbor read uses the pre-round states.  For a connected
graph and any positive gains, convergence is governed by the spectrum of
the 2np x 2np block matrix

    M  = [[ -bX bX^T - k_P bL,  bL ],
          [ -k_I I,             0  ]]

with bX = diag(X_1, ..., X_p) and bL = L kron I_n: the iteration is stable
for step sizes below alpha_max = -max 2 re(lambda) / |lambda|^2 over the
nonzero spectrum, and contracts at least as fast as
rho_max = max sqrt(1 + 2 alpha re(lambda) + alpha^2 |lambda|^2).

An isospectral variant M~ (the mixed off-diagonal blocks replaced by
+/- sqrt(k_I) bL^{1/2}) shares the characteristic polynomial of M but has
a numerically benign kernel, so the spectral report evaluates the step
bounds on M~'s eigenvalues; M itself is kept for diagnostics and the
spectrum-equality tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .edmd import LiftedData
from .graphs import DisconnectedGraphError, Graph, Laplacian, is_connected, laplacian
from .linalg import Spectrum, eigenvalues, frobenius_norm, psd_sqrt

ZERO_TOL_FACTOR = 1e-9
DIVERGENCE_GUARD = 1e12


class NotSemiHurwitzError(RuntimeError):
    """A nonzero eigenvalue has nonnegative real part: bad instance or numerics."""


class StepSizeError(ValueError):
    """Step size outside the range where the requested quantity is defined."""


@dataclass(frozen=True)
class Partition:
    """Contiguous column blocks of widths m_1..m_p covering the N data columns."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if not widths or any(w < 1 for w in widths):
            raise ValueError(f"widths must be positive, got {self.widths!r}")
        object.__setattr__(self, "widths", widths)

    @property
    def p(self) -> int:
        return len(self.widths)

    @property
    def total(self) -> int:
        return sum(self.widths)

    def column_ranges(self) -> list[tuple[int, int]]:
        ranges, lo = [], 0
        for w in self.widths:
            ranges.append((lo, lo + w))
            lo += w
        return ranges

    def blocks(self, data: LiftedData) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-agent (X_i, Y_i) views into the shared data matrices."""
        if self.total != data.num_samples:
            raise ValueError(
                f"partition covers {self.total} columns, data has {data.num_samples}")
        return [(data.X[:, lo:hi], data.Y[:, lo:hi]) for lo, hi in self.column_ranges()]


def partition_data(data: LiftedData, widths) -> Partition:
    """Contiguous temporal partition; the widths must sum to N."""
    part = Partition(tuple(widths))
    if part.total != data.num_samples:
        raise ValueError(
            f"widths sum to {part.total} but data has {data.num_samples} columns")
    return part


@dataclass(frozen=True, eq=False)
class AgentState:
    """Local operator guess K and integral state R of one agent."""

    K: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        R = np.asarray(self.R, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or R.shape != K.shape:
            raise ValueError(
                f"K must be square and R must match, got {K.shape} / {R.shape}")
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(R))):
            raise ValueError("agent state contains non-finite entries")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)


def initial_states(p: int, n: int, mode: str = "zeros", seed: int = 0) -> list[AgentState]:
    """Fresh agent states: K_i(0) all-zero or seeded uniform(-1, 1); R_i(0) = 0 always."""
    if mode == "zeros":
        return [AgentState(np.zeros((n, n)), np.zeros((n, n))) for _ in range(p)]
    if mode == "random":
        rng = np.random.default_rng(seed)
        return [AgentState(rng.uniform(-1.0, 1.0, (n, n)), np.zeros((n, n)))
                for _ in range(p)]
    raise ValueError(f"unknown init mode {mode!r}; use 'zeros' or 'random'")


@dataclass(frozen=True)
class SolverGains:
    """Update gains, step size, and stopping policy.

    Exactly one of ``alpha`` (explicit step size, any positive value, used
    for divergence studies too) and ``alpha_fraction`` (theta in (0, 1),
    resolved against alpha_max from a fresh spectral report) must be set.
    """

    k_P: float
    k_I: float
    alpha: float | None = None
    alpha_fraction: float | None = None
    t_max: int = 10000
    stop_tol: float = 1e-10

    def __post_init__(self):
        if not (self.k_P > 0 and self.k_I > 0):
            raise ValueError("gains k_P and k_I must be positive")
        if (self.alpha is None) == (self.alpha_fraction is None):
            raise ValueError("set exactly one of alpha and alpha_fraction")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.alpha_fraction is not None and not 0 < self.alpha_fraction < 1:
            raise ValueError("alpha_fraction must lie in (0, 1); "
                             "use an explicit alpha for step sizes at or above the bound")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectra of the convergence matrices and the derived step-size bound.

    ``alpha_max``, ``n_zero`` and ``semi_hurwitz`` are evaluated on the
    spectrum of M~; ``spectrum_M`` is None when the caller skipped the
    second dense eigensolve.
    """

    spectrum_M_tilde: Spectrum
    spectrum_M: Spectrum | None
    alpha_max: float
    n_zero: int
    semi_hurwitz: bool

    def rho_max(self, alpha: float) -> float:
        """Contraction factor bound for a step size alpha in (0, alpha_max)."""
        return compute_rho_max(self.spectrum_M_tilde, alpha)


def assemble_block_X(part: Partition, data: LiftedData) -> np.ndarray:
    """Block-diagonal np x N stack diag(X_1, ..., X_p)."""
    blocks = part.blocks(data)
    n = data.feature_dim
    out = np.zeros((n * part.p, data.num_samples))
    for i, ((lo, hi), (Xi, _)) in enumerate(zip(part.column_ranges(), blocks)):
        out[i * n:(i + 1) * n, lo:hi] = Xi
    return out


def _laplacian_connected(L: np.ndarray) -> bool:
    p = L.shape[0]
    if p == 1:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in range(p):
            if w != v and L[v, w] != 0 and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == p


def _check_assembly_inputs(lap: Laplacian, k_P: float, k_I: float):
    if not (k_P > 0 and k_I > 0):
        raise ValueError("gains k_P and k_I must be positive")
    if not _laplacian_connected(lap.matrix):
        raise DisconnectedGraphError("communication graph must be connected")


def assemble_M(part: Partition, data: LiftedData, lap: Laplacian,
               k_P: float, k_I: float) -> np.ndarray:
    """Convergence matrix [[-bX bX^T - k_P bL, bL], [-k_I I, 0]], size 2np x 2np."""
    _check_assembly_inputs(lap, k_P, k_I)
    n = data.feature_dim
    bX = assemble_block_X(part, data)
    bL = np.kron(lap.matrix, np.eye(n))
    d = n * part.p
    top = np.hstack([-bX @ bX.T - k_P * bL, bL])
    bottom = np.hstack([-k_I * np.eye(d), np.zeros((d, d))])
    return np.vstack([top, bottom])


def assemble_M_tilde(part: Partition, data: LiftedData, lap: Laplacian,
                     k_P: float, k_I: float) -> np.ndarray:
    """Isospectral variant with +/- sqrt(k_I) bL^{1/2} off-diagonal blocks.

    Shares the characteristic polynomial of :func:`assemble_M` but its zero
    eigenvalue is non-defective, which keeps the numerically computed
    near-zero eigenvalues orders of magnitude below the classification
    threshold even when X is rank deficient.
    """
    _check_assembly_inputs(lap, k_P, k_I)
    n = data.feature_dim
    bX = assemble_block_X(part, data)
    bL = np.kron(lap.matrix, np.eye(n))
    root = np.sqrt(k_I) * psd_sqrt(bL)
    d = n * part.p
    top = np.hstack([-bX @ bX.T - k_P * bL, root])
    bottom = np.hstack([-root, np.zeros((d, d))])
    return np.vstack([top, bottom])


def compute_alpha_max(spec: Spectrum) -> float:
    """Largest stable step size: -max 2 re(lambda) / |lambda|^2 over nonzero eigenvalues.

    Raises :class:`NotSemiHurwitzError` if any nonzero-classified eigenvalue
    has re(lambda) >= zero_tol, or if no nonzero eigenvalue exists.
    """
    nz = spec.nonzero
    if nz.size == 0:
        raise NotSemiHurwitzError("spectrum has no nonzero eigenvalues")
    if np.any(nz.real >= spec.zero_tol):
        worst = nz[np.argmax(nz.real)]
        raise NotSemiHurwitzError(
            f"nonzero eigenvalue {worst} has nonnegative real part")
    bound = -float(np.max(2.0 * nz.real / np.abs(nz) ** 2))
    if not bound > 0:
        raise NotSemiHurwitzError(f"step-size bound {bound:g} is not positive")
    return bound


def compute_rho_max(spec: Spectrum, alpha: float) -> float:
    """Contraction factor max sqrt(1 + 2 alpha re + alpha^2 |lambda|^2), nonzero lambda.

    Defined for alpha in (0, alpha_max), where it lies in (0, 1).
    """
    if not alpha > 0:
        raise StepSizeError("alpha must be positive")
    alpha_max = compute_alpha_max(spec)
    if alpha >= alpha_max:
        raise StepSizeError(f"alpha {alpha:g} is not below alpha_max {alpha_max:g}")
    nz = spec.nonzero
    radii = 1.0 + 2.0 * alpha * nz.real + alpha**2 * np.abs(nz) ** 2
    return float(np.sqrt(np.max(np.clip(radii, 0.0, None))))


def semi_hurwitz_check(spec: Spectrum) -> bool:
    """True iff every eigenvalue is classified zero or has strictly negative real part."""
    return bool(np.all(spec.nonzero.real < 0.0))


def spectral_report(part: Partition, data: LiftedData, lap: Laplacian,
                    k_P: float, k_I: float, zero_tol_factor: float = ZERO_TOL_FACTOR,
                    include_spectrum_M: bool = True) -> SpectralReport:
    """Assemble the convergence matrices and evaluate the step-size analysis.

    ``include_spectrum_M=False`` skips the dense eigensolve of M itself
    (the bounds only need M~); use it on large instances where the report
    is consumed internally.
    """
    Mt = assemble_M_tilde(part, data, lap, k_P, k_I)
    spec_t = eigenvalues(Mt, zero_tol=zero_tol_factor * frobenius_norm(Mt))
    spec_m = None
    if include_spectrum_M:
        M = assemble_M(part, data, lap, k_P, k_I)
        spec_m = eigenvalues(M, zero_tol=zero_tol_factor * frobenius_norm(M))
    return SpectralReport(
        spectrum_M_tilde=spec_t,
        spectrum_M=spec_m,
        alpha_max=compute_alpha_max(spec_t),
        n_zero=spec_t.n_zero,
        semi_hurwitz=semi_hurwitz_check(spec_t),
    )


def resolve_alpha(gains: SolverGains, part: Partition, data: LiftedData,
                  lap: Laplacian) -> float:
    """Concrete step size: explicit alpha, or alpha_fraction * alpha_max."""
    if gains.alpha is not None:
        return gains.alpha
    report = spectral_report(part, data, lap, gains.k_P, gains.k_I,
                             include_spectrum_M=False)
    return gains.alpha_fraction * report.alpha_max


def _step_arrays(K, R, L, blocks, k_P, k_I, alpha):
    """One synchronous round on stacked (p, n, n) state arrays."""
    grad = np.empty_like(K)
    for i, (Xi, Yi) in enumerate(blocks):
        grad[i] = (K[i] @ Xi - Yi) @ Xi.T
    diff = np.tensordot(L, K, axes=(1, 0))
    K_next = K - alpha * (grad + k_P * diff + k_I * R)
    R_next = R + alpha * diff
    return K_next, R_next


def _stack_states(states, part, data, graph):
    if len(states) != graph.p or part.p != graph.p:
        raise ValueError(
            f"got {len(states)} states, partition p={part.p}, graph p={graph.p}")
    n = data.feature_dim
    for s in states:
        if s.K.shape != (n, n):
            raise ValueError(f"state shape {s.K.shape} != ({n}, {n})")
    K = np.stack([s.K for s in states]).astype(float)
    R = np.stack([s.R for s in states]).astype(float)
    return K, R


def step(states, graph: Graph, gains: SolverGains, part: Partition,
         data: LiftedData, alpha: float | None = None) -> list[AgentState]:
    """One synchronous round of the update law; neighbor reads are pre-round."""
    if alpha is None:
        alpha = gains.alpha
    if alpha is None:
        raise StepSizeError(
            "gains use alpha_fraction; resolve the step size first (see resolve_alpha)")
    K, R = _stack_states(states, part, data, graph)
    blocks = part.blocks(data)
    L = laplacian(graph).matrix
    K_next, R_next = _step_arrays(K, R, L, blocks, gains.k_P, gains.k_I, alpha)
    return [AgentState(K_next[i], R_next[i]) for i in range(graph.p)]


@dataclass(eq=False)
class RunTrace:
    """Per-iteration diagnostics of a solver run.

    ``consensus_error`` is the max over edges of ||K_i - K_j||_F,
    ``objective_mean`` the squared-residual objective of the mean operator,
    ``kkt_residual`` the stationarity norm of the mean operator plus the
    consensus error, and ``integral_sum_norm`` is ||sum_i R_i||_F.
    ``mean_history`` (iterations, n, n) is stored only when requested.
    """

    consensus_error: np.ndarray
    objective_mean: np.ndarray
    fit_metric: np.ndarray
    kkt_residual: np.ndarray
    integral_sum_norm: np.ndarray
    alpha: float
    converged: bool
    diverged: bool
    mean_history: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return int(self.consensus_error.size)


def _edge_disagreement(K, edges) -> float:
    if not edges:
        return 0.0
    return max(float(np.linalg.norm(K[i] - K[j], "fro")) for i, j in edges)


def kkt_residual(states, part: Partition, data: LiftedData, graph: Graph) -> float:
    """Optimality diagnostic: ||(Kbar X - Y) X^T||_F + max_(i,j) ||K_i - K_j||_F.

    Zero (within tolerance) exactly when the mean operator is stationary for
    the aggregate least-squares cost and all local operators coincide, i.e.
    the first-order optimality conditions of the consensus-constrained
    problem hold.
    """
    K, _ = _stack_states(states, part, data, graph)
    Kbar = K.mean(axis=0)
    stationarity = float(np.linalg.norm((Kbar @ data.X - data.Y) @ data.X.T, "fro"))
    return stationarity + _edge_disagreement(K, graph.edges)


def run(init, graph: Graph, gains: SolverGains, part: Partition, data: LiftedData,
        record_mean: bool = False) -> tuple[list[AgentState], RunTrace]:
    """Iterate the update law until both stopping residuals drop below stop_tol.

    Requires a connected graph and all-zero integral states R_i(0).  Stops
    early on convergence (consensus error and KKT residual both below
    ``gains.stop_tol``) or on divergence (any state norm exceeding 1e12
    times the initial data scale; reported through ``trace.diverged``, not
    an exception).  The run is a pure function of its inputs: repeated
    calls give bit-identical traces.
    """
    if not is_connected(graph):
        raise DisconnectedGraphError("solver requires a connected communication graph")
    K, R = _stack_states(init, part, data, graph)
    if float(np.abs(R).max(initial=0.0)) != 0.0:
        raise ValueError("integral states must start at zero")
    lap = laplacian(graph)
    alpha = resolve_alpha(gains, part, data, lap)
    blocks = part.blocks(data)
    L = lap.matrix
    edges = graph.edges

    data_scale = float(np.linalg.norm(data.Y, "fro") * np.linalg.norm(data.X, "fro"))
    guard = DIVERGENCE_GUARD * (1.0 + data_scale
                                + max(float(np.linalg.norm(Ki, "fro")) for Ki in K))

    cons, objm, fitm, kktm, intm = [], [], [], [], []
    mean_hist = [] if record_mean else None
    converged = diverged = False

    for _ in range(gains.t_max):
        K, R = _step_arrays(K, R, L, blocks, gains.k_P, gains.k_I, alpha)

        Kbar = K.mean(axis=0)
        residual_bar = Kbar @ data.X - data.Y
        stationarity = float(np.linalg.norm(residual_bar @ data.X.T, "fro"))
        edge_err = _edge_disagreement(K, edges)
        fit = float(np.mean([np.linalg.norm(data.Y - K[i] @ data.X, "fro")
                             for i in range(part.p)]))

        cons.append(edge_err)
        objm.append(0.5 * float(np.linalg.norm(residual_bar, "fro")) ** 2)
        fitm.append(fit)
        kktm.append(stationarity + edge_err)
        intm.append(float(np.linalg.norm(R.sum(axis=0), "fro")))
        if record_mean:
            mean_hist.append(Kbar)

        worst = max(float(np.linalg.norm(K[i], "fro")) for i in range(part.p))
        if not np.isfinite(worst) or worst > guard:
            diverged = True
            break
        if edge_err < gains.stop_tol and kktm[-1] < gains.stop_tol:
            converged = True
            break

    trace = RunTrace(
        consensus_error=np.array(cons),
        objective_mean=np.array(objm),
        fit_metric=np.array(fitm),
        kkt_residual=np.array(kktm),
        integral_sum_norm=np.array(intm),
        alpha=alpha,
        converged=converged,
        diverged=diverged,
        mean_history=np.array(mean_hist) if record_mean else None,
    )
    states = [AgentState(K[i].copy(), R[i].copy()) for i in range(part.p)]
    return states, trace


def iterate_rounds(states, graph: Graph, gains: SolverGains, part: Partition,
                   data: LiftedData, rounds: int,
                   alpha: float | None = None) -> list[AgentState]:
    """Run a fixed number of rounds without diagnostics or stopping checks.

    Same kernel as :func:`run`, so the iterates are bit-identical to the
    corresponding prefix of a run with the same inputs.
    """
    if alpha is None:
        alpha = gains.alpha
    if alpha is None:
        raise StepSizeError(
            "gains use alpha_fraction; resolve the step size first (see resolve_alpha)")
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    K, R = _stack_states(states, part, data, graph)
    blocks = part.blocks(data)
    L = laplacian(graph).matrix
    for _ in range(rounds):
        K, R = _step_arrays(K, R, L, blocks, gains.k_P, gains.k_I, alpha)
    return [AgentState(K[i], R[i]) for i in range(graph.p)]


def tail_contraction(mean_history, tail_fraction: float = 0.5) -> float:
    """Geometric-mean per-iteration contraction toward the final mean operator.

    Distances d(t) = ||Kbar(t) - Kbar(final)||_F are measured over the
    trailing ``tail_fraction`` window (the final point itself, where d = 0
    by construction, is excluded).  Returns NaN when the window is too
    short or the distances have already hit exact zero.
    """
    H = np.asarray(mean_history, dtype=float)
    if H.ndim != 3 or H.shape[0] < 4:
        return float("nan")
    d = np.linalg.norm(H - H[-1], axis=(1, 2))
    last = H.shape[0] - 2
    while last >= 0 and d[last] <= 0.0:
        last -= 1
    start = int(np.floor((H.shape[0] - 1) * (1.0 - tail_fraction)))
    if last <= start or d[start] <= 0.0:
        return float("nan")
    return float((d[last] / d[start]) ** (1.0 / (last - start)))


def manual_gains(gains: SolverGains, alpha: float) -> SolverGains:
    """Copy of ``gains`` pinned to an explicit step size (divergence studies)."""
    return replace(gains, alpha=float(alpha), alpha_fraction=None)
