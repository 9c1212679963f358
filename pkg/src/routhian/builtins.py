"""Compiled-in example scenarios.

These are ordinary scenario documents (the same shape a user would put in a
JSON file) kept as Python dicts; the CLI feeds them through exactly the
same validation and build pipeline as external files.
"""

from __future__ import annotations

import copy

#: planar particle in a uniform magnetic field, written with the symmetric
#: vector potential.  Both translations act by quasi-symmetries, the
#: gyroscopic matrix is the constant magnetic 2-form, and the reduced
#: dynamics is a first-order flow on the plane.
_CHARGED_PARTICLE = {
    "name": "charged_particle",
    "n": 2,
    "lagrangian": "1/2*m*(qd1^2 + qd2^2) + e*B*(qd1*q2 - qd2*q1)",
    "parameters": {"m": 1.0, "e": 1.0, "B": 1.0},
    "symmetry": {
        "group_indices": [0, 1],
        "f": ["-e*B*q2", "e*B*q1"],
    },
    "momentum": [1.0, 0.0],
    "initial": {"q": [0.0, 0.0], "qd": [1.0, 0.0]},
    "integrator": {"dt": 0.001, "T": 10.0},
}

#: free particle with one plainly cyclic coordinate; the smallest possible
#: sanity case (zero gyroscopic force, flat Routhian).
_FREE_CYCLIC = {
    "name": "free_cyclic",
    "n": 2,
    "lagrangian": "1/2*(qd1^2 + qd2^2)",
    "symmetry": {"group_indices": [0]},
    "momentum": [1.0],
    "initial": {"q": [0.0, 0.0], "qd": [1.0, 0.5]},
    "integrator": {"dt": 0.001, "T": 10.0},
}

#: the Lagrangian changes by a total time derivative under translation of
#: q1, so the symmetry is quasi- but not strictly cyclic.  The finite shift
#: function F is declared, which lets the finite-cocycle check run; the
#: Routhian is exactly independent of q1.
_QUASI_CYCLIC_TOTALDERIV = {
    "name": "quasi_cyclic_totalderiv",
    "n": 2,
    "lagrangian": "1/2*(qd1^2 + qd2^2) + (qd1 - qd2)*exp(q1 - q2)",
    "symmetry": {
        "group_indices": [0],
        "f": ["exp(q1 - q2)"],
        "gamma": [["-1"]],
        "F": ["(exp(s) - 1)*exp(q1 - q2)"],
    },
    "momentum": [0.5],
    "initial": {"q": [0.0, 0.0], "qd": [0.5, 0.2]},
    "integrator": {"dt": 0.001, "T": 10.0},
}

#: strictly cyclic coordinate with kinetic coupling and a declared curved
#: connection: the gyroscopic matrix is the nonzero constant mu * dx1^dx2
#: even though f vanishes.  The sample box keeps the kinetic matrix
#: regular (its determinant is 1 - q2^2/4).
_CURVED_GAMMA = {
    "name": "curved_gamma",
    "n": 3,
    "lagrangian": (
        "1/2*(qd1^2 + qd2^2 + qd3^2) + 1/2*q2*qd1*qd3 - 1/2*(q2^2 + q3^2)"
    ),
    "symmetry": {
        "group_indices": [0],
        "gamma": [["0", "q2"]],
        "sample_box": [[-0.5, 0.5]] * 6,
    },
    "momentum": [1.0],
    "initial": {"q": [0.0, 0.2, 0.1], "qd": [0.985, 0.1, 0.15]},
    "integrator": {"dt": 0.001, "T": 10.0},
}

#: no translational symmetry at all: the distinguished coordinate enters
#: the Lagrangian itself, and elimination happens on the zero level of the
#: shifted momentum phid - lambda(phi).  The initial data sits exactly on
#: that level.
_FUNCTIONAL_TOY = {
    "name": "functional_toy",
    "n": 2,
    "lagrangian": "1/2*qd1^2 + 1/2*qd2^2 - 1/2*q1^2 + 1/2*q2^2",
    "functional": {
        "phi_index": 1,
        "lambda": "-q2",
        "mass": [["1", "0"], ["0", "1"]],
        "potential": "1/2*q1^2",
    },
    "momentum": [0.0],
    "initial": {"q": [1.0, 0.4], "qd": [0.0, -0.4]},
    "integrator": {"dt": 0.001, "T": 10.0},
}

_ALL = (
    _CHARGED_PARTICLE,
    _FREE_CYCLIC,
    _QUASI_CYCLIC_TOTALDERIV,
    _CURVED_GAMMA,
    _FUNCTIONAL_TOY,
)

BUILTIN_SCENARIOS = {doc["name"]: doc for doc in _ALL}


def builtin_names() -> tuple:
    return tuple(sorted(BUILTIN_SCENARIOS))


def builtin_document(name: str) -> dict:
    """Deep copy so callers can edit without corrupting the registry."""
    return copy.deepcopy(BUILTIN_SCENARIOS[name])
