from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.domain.errors import DimensionMismatch, OutOfRange

STATE_DIM = 5
OUTPUT_DIM = 2
INPUT_DIM = 1


@dataclass(frozen=True, slots=True)
class PlantParams:
    """Physical constants of the base-driven double pendulum.

    Defaults are the published model values: masses in kg, lengths and
    centres of mass in m, inertias in kg m^2, damping in kg/s, motor gain in
    N m and motor time constant in s.
    """

    m1: float = 0.125
    m2: float = 0.05
    l1: float = 0.1
    l2: float = 0.1
    c1: float = -0.04
    c2: float = 0.06
    I1: float = 0.074  # noqa: N815
    I2: float = 0.00012  # noqa: N815
    b1: float = 4.8
    b2: float = 0.0002
    k_m: float = 50.0
    tau_e: float = 0.03
    grav: float = 9.81

    @property
    def P1(self) -> float:  # noqa: N802
        return self.m1 * self.c1**2 + self.m2 * self.l1**2 + self.I1

    @property
    def P2(self) -> float:  # noqa: N802
        return self.m2 * self.c2**2 + self.I2

    @property
    def P3(self) -> float:  # noqa: N802
        return self.m2 * self.l1 * self.c2

    @property
    def g1(self) -> float:
        return (self.m1 * self.c1 + self.m2 * self.l1) * self.grav

    @property
    def g2(self) -> float:
        return self.m2 * self.c2 * self.grav


@dataclass(frozen=True, slots=True)
class PlantState:
    """x = [theta1, dtheta1, theta2, dtheta2, T]."""

    theta1: float
    dtheta1: float
    theta2: float
    dtheta2: float
    T: float  # noqa: N815

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise OutOfRange("plant state must be finite", state=self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.theta1, self.dtheta1, self.theta2, self.dtheta2, self.T)

    def as_array(self) -> NDArray[np.float64]:
        return np.array(self.as_tuple(), dtype=np.float64)

    @classmethod
    def from_array(cls, x: NDArray[np.float64]) -> PlantState:
        if np.shape(x) != (STATE_DIM,):
            raise DimensionMismatch(f"plant state needs {STATE_DIM} entries, got {np.shape(x)}")
        return cls(*(float(v) for v in x))

    @classmethod
    def upright(cls) -> PlantState:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True, eq=False)
class LinearModel:
    """Zero-order-hold discretization (A_d, B_d, C_d) at sample period T_s."""

    A_d: NDArray[np.float64]  # noqa: N815
    B_d: NDArray[np.float64]  # noqa: N815
    C_d: NDArray[np.float64]  # noqa: N815
    T_s: float  # noqa: N815

    def __post_init__(self) -> None:
        shapes = (self.A_d.shape, self.B_d.shape, self.C_d.shape)
        expected = ((STATE_DIM, STATE_DIM), (STATE_DIM, INPUT_DIM), (OUTPUT_DIM, STATE_DIM))
        if shapes != expected:
            raise DimensionMismatch(f"linear model shapes {shapes} != {expected}")
