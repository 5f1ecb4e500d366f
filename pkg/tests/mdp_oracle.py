"""Independent dense reference for value iteration.

Builds the full transition matrix by brute-force nearest-node search and
iterates the Bellman operator Jacobi-style. Shares no code with
``hjdp.mdp`` beyond the grid coordinates.
"""

import numpy as np


def snap_brute_force(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    # nodes (S, dims), points (n, dims); Euclidean nearest, ties to the larger index
    d2 = ((points[:, None, :] - nodes[None, :, :]) ** 2).sum(axis=2)
    best = d2.min(axis=1, keepdims=True)
    tied = d2 <= best * (1 + 1e-12) + 1e-300
    return nodes.shape[0] - 1 - np.argmax(tied[:, ::-1], axis=1)


def dense_value_iteration(nodes, actions, transition, reward_table, gamma, iterations=10_000):
    S, A = nodes.shape[0], len(actions)
    P = np.zeros((A, S, S))
    for a, act in enumerate(actions):
        for nxt, prob in transition(nodes, act):
            cols = snap_brute_force(nodes, nxt)
            np.add.at(P[a], (np.arange(S), cols), np.broadcast_to(prob, (S,)))
    V = np.zeros(S)
    for _ in range(iterations):
        V_new = np.max(reward_table.T + gamma * P @ V, axis=0)
        if np.array_equal(V_new, V):
            break
        V = V_new
    return V
