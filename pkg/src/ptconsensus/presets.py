"""Fixtures for the eight-agent third-order study.

The two 8-follower graphs are best-effort transcriptions with unit weights;
only their structural properties (leader-rooted, leader talks to follower 1
only, G1 undirected with cycles, G2 directed acyclic) are relied upon.
Edges are 1-based ``(sender, receiver)`` pairs.
"""

import numpy as np

# Table of initial states: rows are followers 1..8, columns x1, x2, x3.
INITIAL_STATES = np.array(
    [
        [-1.66, -0.67, -1.81],
        [1.89, -1.39, -0.63],
        [0.60, -0.60, 0.94],
        [-1.07, -1.51, 1.17],
        [-0.38, 1.53, 0.17],
        [-1.51, -1.62, 0.74],
        [-0.92, 1.72, 1.57],
        [-0.96, -0.40, -1.78],
    ]
)

LEADER_STATE = (-1.0, 0.0, 0.0)

# undirected, connected
G1_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4), (4, 5), (5, 6), (5, 7), (6, 8), (7, 8)]
# directed, acyclic, spanning tree rooted at the leader through follower 1
G2_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6), (5, 7), (6, 8), (7, 8)]
LEADER_EDGES = [1]

# odd followers use the nonlinear model, even ones are pure chains
AGENT_MODELS = ["nonlinear3" if i % 2 == 1 else "chain" for i in range(1, 9)]

K_FR = (1.0, 2.0)
K1 = 2.5
DISTURBANCE_OMEGA = 5.0

CONTINUOUS = {
    "c": [80.0, 66.0, 15.0],
    "b": [80.0, 66.0, 15.0],
    "exp_alpha": ["7/16", "7/13", "7/10"],
    "exp_beta": ["21/18", "21/19", "21/20"],
    "K": 10.0,
}
