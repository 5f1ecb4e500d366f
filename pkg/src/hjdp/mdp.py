"""Value iteration for MDPs on discretised continuous state and action spaces.

Successor states are continuous; each is snapped to its nearest grid node
before the backup. Transitions and rewards are tabulated once
(:func:`build_tables`), then the sweeps run over the tables.

The default sweep is in place (Gauss-Seidel) with traversal directions
cycling through the same eight orderings as the time-to-reach solver. A
Jacobi mode (fresh array every iteration) is available and is what the
contraction bound ``delta_{k+1} <= gamma * delta_k`` applies to.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numba
import numpy as np

from .dynamics import DynamicsModel
from .grid import GridAxes, nearest_indices
from .ttr_solver import ConvergenceWarning, sweep_orderings

logger = logging.getLogger(__name__)

# transition(states (n, dims), action (k,)) -> [(next_states (n, dims), prob (n,) or scalar), ...]
TransitionFn = Callable[[np.ndarray, np.ndarray], Sequence[tuple[np.ndarray, np.ndarray]]]
RewardFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class MdpProblem:
    """States on ``state_grid``; ``actions`` is an ``(A, k)`` array of action vectors.

    ``reward`` is either a callable ``(states, action) -> (n,)`` or a
    tabulated ``(S,)`` / ``(S, A)`` array in row-major state order.
    """

    state_grid: GridAxes
    actions: np.ndarray
    transition: TransitionFn
    reward: RewardFn | np.ndarray
    discount: float = 0.9
    threshold: float = 1e-6
    max_iterations: int = 1000
    mode: Literal["alternating", "fixed", "jacobi"] = "alternating"

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=float)
        if actions.ndim == 1:
            actions = actions[:, None]
        self.actions = actions
        if not 0 <= self.discount < 1:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mode not in ("alternating", "fixed", "jacobi"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.actions) == 0:
            raise ValueError("at least one action is required")


@dataclass
class TransitionTables:
    successors: np.ndarray  # (S, A, K) flat node indices
    probabilities: np.ndarray  # (S, A, K)
    rewards: np.ndarray  # (S, A)


@dataclass
class ValueIterationResult:
    values: np.ndarray  # grid-shaped
    iterations: int
    final_delta: float
    converged: bool
    deltas: list[float] = field(default_factory=list)


def dynamics_transition(
    model: DynamicsModel,
    timestep: float,
    offsets: Sequence[tuple[Sequence[float], float]] = (),
) -> TransitionFn:
    """Euler-step transitions ``next = x + timestep * f(x, u, 0) + offset``.

    ``offsets`` lists ``(offset, probability)`` pairs; an empty list means a
    single deterministic successor.
    """
    if not timestep > 0:
        raise ValueError("timestep must be positive")
    branches = [(np.asarray(o, dtype=float), float(p)) for o, p in offsets] or [
        (np.zeros(model.dims), 1.0)
    ]

    def transition(states: np.ndarray, action: np.ndarray):
        x = [states[:, d] for d in range(model.dims)]
        f = model.rate(x, tuple(action), model.zero_dstb())
        nxt = np.stack([x[d] + timestep * np.broadcast_to(f[d], x[d].shape) for d in range(model.dims)], axis=1)
        return [(nxt + off, p) for off, p in branches]

    return transition


def build_tables(problem: MdpProblem) -> TransitionTables:
    """Evaluate transitions and rewards for every (state, action) pair and snap successors."""
    grid = problem.state_grid
    states = grid.points()
    S, A = len(states), len(problem.actions)
    succ_cols, prob_cols = [], []
    for a, action in enumerate(problem.actions):
        branches = list(problem.transition(states, action))
        succ_cols.append([np.ravel_multi_index(nearest_indices(grid, nxt).T, grid.shape) for nxt, _ in branches])
        prob_cols.append([np.broadcast_to(np.asarray(p, dtype=float), (S,)) for _, p in branches])
    K = max(len(c) for c in succ_cols)
    successors = np.zeros((S, A, K), dtype=np.int64)
    probabilities = np.zeros((S, A, K))
    for a in range(A):
        for k, (s, p) in enumerate(zip(succ_cols[a], prob_cols[a])):
            successors[:, a, k] = s
            probabilities[:, a, k] = p
    if (probabilities < 0).any():
        raise ValueError("transition probabilities must be non-negative")
    total = probabilities.sum(axis=2)
    if np.abs(total - 1.0).max() > 1e-12:
        s, a = np.unravel_index(np.argmax(np.abs(total - 1.0)), total.shape)
        raise ValueError(f"probabilities for state {s}, action {a} sum to {total[s, a]!r}, not 1")

    if callable(problem.reward):
        rewards = np.stack(
            [np.broadcast_to(np.asarray(problem.reward(states, act), dtype=float), (S,)) for act in problem.actions],
            axis=1,
        )
    else:
        table = np.asarray(problem.reward, dtype=float)
        if table.shape == (S,):
            rewards = np.repeat(table[:, None], A, axis=1)
        elif table.shape == (S, A):
            rewards = table.copy()
        else:
            raise ValueError(f"reward table has shape {table.shape}, expected ({S},) or ({S}, {A})")
    if not np.isfinite(rewards).all():
        raise ValueError("rewards must be finite")
    return TransitionTables(successors, probabilities, np.ascontiguousarray(rewards))


def _q_values(V: np.ndarray, tables: TransitionTables, gamma: float) -> np.ndarray:
    # accumulate successors in order, matching the scalar backups
    expected = np.zeros(tables.rewards.shape)
    for k in range(tables.successors.shape[2]):
        expected += tables.probabilities[:, :, k] * V[tables.successors[:, :, k]]
    return tables.rewards + gamma * expected


def bellman_backup(
    V: np.ndarray, problem: MdpProblem, s: Sequence[int], tables: TransitionTables | None = None
) -> tuple[float, int]:
    """Best Q-value at state ``s`` and its action index (lowest index on ties)."""
    tables = tables or build_tables(problem)
    flat = int(np.ravel_multi_index(tuple(s), problem.state_grid.shape))
    v = V.reshape(-1)
    succ, prob = tables.successors[flat], tables.probabilities[flat]
    best, best_a = -np.inf, 0
    for a in range(len(problem.actions)):
        acc = 0.0
        for k in range(succ.shape[1]):
            acc += prob[a, k] * v[succ[a, k]]
        q = tables.rewards[flat, a] + problem.discount * acc
        if q > best:
            best, best_a = q, a
    return float(best), best_a


@numba.njit(cache=True)
def _gauss_seidel(V, order, successors, probabilities, rewards, gamma):
    delta = 0.0
    n_act = successors.shape[1]
    n_succ = successors.shape[2]
    for s in order:
        best = -np.inf
        for a in range(n_act):
            acc = 0.0
            for k in range(n_succ):
                acc += probabilities[s, a, k] * V[successors[s, a, k]]
            q = rewards[s, a] + gamma * acc
            if q > best:
                best = q
        change = abs(best - V[s])
        if change > delta:
            delta = change
        V[s] = best
    return delta


def _traversal(shape: tuple[int, ...], backward: tuple[bool, ...]) -> np.ndarray:
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    flips = tuple(slice(None, None, -1) if b else slice(None) for b in backward)
    return np.ascontiguousarray(idx[flips].ravel())


def value_iteration(problem: MdpProblem, tables: TransitionTables | None = None) -> ValueIterationResult:
    """Iterate from ``V = 0`` until a full sweep changes no value by ``threshold`` or more."""
    tables = tables or build_tables(problem)
    grid = problem.state_grid
    S = grid.size
    V = np.zeros(S)
    gamma = float(problem.discount)
    if problem.mode == "alternating":
        orders = [_traversal(grid.shape, b) for b in sweep_orderings(grid.dims)]
    else:
        orders = [np.arange(S)]
    deltas = []
    delta = np.inf
    for it in range(1, problem.max_iterations + 1):
        if problem.mode == "jacobi":
            new = _q_values(V, tables, gamma).max(axis=1)
            delta = float(np.max(np.abs(new - V)))
            V = new
        else:
            order = orders[(it - 1) % len(orders)]
            delta = _gauss_seidel(V, order, tables.successors, tables.probabilities, tables.rewards, gamma)
        deltas.append(delta)
        if delta < problem.threshold:
            return ValueIterationResult(V.reshape(grid.shape), it, delta, True, deltas)
    warnings.warn(
        f"value iteration did not converge in {problem.max_iterations} iterations (delta {delta:.3g})",
        ConvergenceWarning,
        stacklevel=2,
    )
    return ValueIterationResult(V.reshape(grid.shape), problem.max_iterations, delta, False, deltas)


def extract_policy(V: np.ndarray, problem: MdpProblem, tables: TransitionTables | None = None) -> np.ndarray:
    """Greedy action index per state node (grid-shaped, lowest index on ties)."""
    tables = tables or build_tables(problem)
    q = _q_values(V.reshape(-1), tables, float(problem.discount))
    return np.argmax(q, axis=1).reshape(problem.state_grid.shape)
