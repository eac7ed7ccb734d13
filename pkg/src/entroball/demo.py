"""Fixed 8-atom demo measure on the unit square used by the sweep examples.

The atoms are clustered in the middle of the square, which puts the transport
cost of the uniform prior (about 0.214) between the two largest sweep radii.
"""

import numpy as np

from .domain import BoxDomain, EmpiricalMeasure

DEMO_POINTS = np.array([
    [0.35, 0.35],
    [0.45, 0.60],
    [0.55, 0.42],
    [0.65, 0.30],
    [0.70, 0.58],
    [0.30, 0.65],
    [0.55, 0.72],
    [0.75, 0.45],
])

SWEEP_DELTAS = (0.23, 0.2, 0.15, 0.1, 0.05, 0.02)


def demo_measure() -> EmpiricalMeasure:
    return EmpiricalMeasure(DEMO_POINTS, BoxDomain.unit(2))


SMALL_DEMO_POINTS = np.array([
    [0.25, 0.30],
    [0.70, 0.25],
    [0.60, 0.75],
    [0.30, 0.70],
])


def small_demo_measure() -> EmpiricalMeasure:
    """Four atoms near the corners, for quick runs."""
    return EmpiricalMeasure(SMALL_DEMO_POINTS, BoxDomain.unit(2))
