from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from app.domain.errors import DimensionMismatch, SingularMass
from app.domain.plant import INPUT_DIM, OUTPUT_DIM, STATE_DIM, LinearModel, PlantParams, PlantState

FD_STEP = 1e-6
SINGULAR_TOLERANCE = 1e-12

State = tuple[float, float, float, float, float]


class _Coefficients(NamedTuple):
    P1: float  # noqa: N815
    P2: float  # noqa: N815
    P3: float  # noqa: N815
    g1: float
    g2: float
    b1: float
    b2: float
    k_m: float
    tau_e: float


def _coefficients(params: PlantParams) -> _Coefficients:
    return _Coefficients(
        P1=params.P1,
        P2=params.P2,
        P3=params.P3,
        g1=params.g1,
        g2=params.g2,
        b1=params.b1,
        b2=params.b2,
        k_m=params.k_m,
        tau_e=params.tau_e,
    )


def mass_matrix(theta2: float, params: PlantParams) -> NDArray[np.float64]:
    k = _coefficients(params)
    off = k.P2 + k.P3 * math.cos(theta2)
    return np.array([[k.P1 + k.P2 + 2.0 * k.P3 * math.cos(theta2), off], [off, k.P2]])


def _derivative(x: State, u: float, k: _Coefficients, xi: tuple[float, float]) -> State:
    theta1, dtheta1, theta2, dtheta2, torque = x
    s2 = math.sin(theta2)
    c2 = math.cos(theta2)

    m11 = k.P1 + k.P2 + 2.0 * k.P3 * c2
    m12 = k.P2 + k.P3 * c2
    m22 = k.P2
    det = m11 * m22 - m12 * m12
    if abs(det) < SINGULAR_TOLERANCE:
        raise SingularMass(f"mass matrix determinant {det:.3e} is singular", theta2=theta2)

    coriolis1 = (k.b1 - k.P3 * dtheta2 * s2) * dtheta1 - k.P3 * (dtheta1 + dtheta2) * s2 * dtheta2
    coriolis2 = k.P3 * dtheta1 * s2 * dtheta1 + k.b2 * dtheta2
    s12 = math.sin(theta1 + theta2)
    gravity1 = -k.g1 * math.sin(theta1) - k.g2 * s12
    gravity2 = -k.g2 * s12

    # the motor torque drives the base joint only
    rhs1 = torque - coriolis1 - gravity1
    rhs2 = -coriolis2 - gravity2
    ddtheta1 = (m22 * rhs1 - m12 * rhs2) / det + xi[0]
    ddtheta2 = (m11 * rhs2 - m12 * rhs1) / det + xi[1]
    dtorque = (k.k_m * u - torque) / k.tau_e
    return (dtheta1, ddtheta1, dtheta2, ddtheta2, dtorque)


def _xi(xi: NDArray[np.float64] | tuple[float, float] | None) -> tuple[float, float]:
    if xi is None:
        return (0.0, 0.0)
    if np.shape(xi) != (2,):
        raise DimensionMismatch(f"disturbance needs 2 entries, got {np.shape(xi)}")
    return (float(xi[0]), float(xi[1]))


def dynamics(
    state: PlantState,
    u: float,
    params: PlantParams,
    xi: NDArray[np.float64] | tuple[float, float] | None = None,
) -> NDArray[np.float64]:
    """State derivative of the motor-driven double pendulum.

    M(theta) theta'' + C(theta, theta') theta' + G(theta) = [T, 0] and
    T + tau_e T' = k_m u. ``xi`` is added to the angular accelerations.
    """

    return np.array(_derivative(state.as_tuple(), float(u), _coefficients(params), _xi(xi)))


def _rk4(x: State, u: float, dt: float, k: _Coefficients, xi: tuple[float, float]) -> State:
    k1 = _derivative(x, u, k, xi)
    k2 = _derivative(tuple(a + 0.5 * dt * b for a, b in zip(x, k1)), u, k, xi)  # type: ignore[arg-type]
    k3 = _derivative(tuple(a + 0.5 * dt * b for a, b in zip(x, k2)), u, k, xi)  # type: ignore[arg-type]
    k4 = _derivative(tuple(a + dt * b for a, b in zip(x, k3)), u, k, xi)  # type: ignore[arg-type]
    return tuple(  # type: ignore[return-value]
        a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)
    )


def rk4_step(
    state: PlantState,
    u: float,
    dt: float,
    params: PlantParams,
    xi: NDArray[np.float64] | tuple[float, float] | None = None,
) -> PlantState:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return PlantState(*_rk4(state.as_tuple(), float(u), dt, _coefficients(params), _xi(xi)))


def advance_sample(
    state: PlantState,
    u: float,
    T_s: float,  # noqa: N803
    substeps: int,
    params: PlantParams,
    xi: NDArray[np.float64] | tuple[float, float] | None = None,
) -> PlantState:
    """Hold u for one sample period, integrating with ``substeps`` RK4 steps."""

    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    dt = T_s / substeps
    k = _coefficients(params)
    disturbance = _xi(xi)
    x = state.as_tuple()
    for _ in range(substeps):
        x = _rk4(x, float(u), dt, k, disturbance)
    return PlantState(*x)


def measure(state: PlantState, eta: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
    """y = [theta1, theta2] + eta."""

    y = np.array([state.theta1, state.theta2])
    if eta is not None:
        y = y + np.asarray(eta, dtype=np.float64)
    return y


def mechanical_energy(state: PlantState, params: PlantParams) -> float:
    """Kinetic plus potential energy; conserved when damping and torque vanish."""

    rates = np.array([state.dtheta1, state.dtheta2])
    kinetic = 0.5 * float(rates @ mass_matrix(state.theta2, params) @ rates)
    potential = params.g1 * math.cos(state.theta1) + params.g2 * math.cos(state.theta1 + state.theta2)
    return kinetic + potential


def continuous_jacobians(params: PlantParams) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """A_c and B_c at the upright origin by central differences."""

    k = _coefficients(params)
    zero = (0.0, 0.0)
    origin = np.zeros(STATE_DIM)

    A_c = np.zeros((STATE_DIM, STATE_DIM))  # noqa: N806
    for j in range(STATE_DIM):
        step = np.zeros(STATE_DIM)
        step[j] = FD_STEP
        plus = np.array(_derivative(tuple(origin + step), 0.0, k, zero))  # type: ignore[arg-type]
        minus = np.array(_derivative(tuple(origin - step), 0.0, k, zero))  # type: ignore[arg-type]
        A_c[:, j] = (plus - minus) / (2.0 * FD_STEP)

    plus = np.array(_derivative(tuple(origin), FD_STEP, k, zero))  # type: ignore[arg-type]
    minus = np.array(_derivative(tuple(origin), -FD_STEP, k, zero))  # type: ignore[arg-type]
    B_c = ((plus - minus) / (2.0 * FD_STEP)).reshape(STATE_DIM, INPUT_DIM)  # noqa: N806
    return A_c, B_c


def output_matrix() -> NDArray[np.float64]:
    C_d = np.zeros((OUTPUT_DIM, STATE_DIM))  # noqa: N806
    C_d[0, 0] = 1.0
    C_d[1, 2] = 1.0
    return C_d


def zero_order_hold(
    A_c: NDArray[np.float64],  # noqa: N803
    B_c: NDArray[np.float64],  # noqa: N803
    T_s: float,  # noqa: N803
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """exp([[A_c, B_c], [0, 0]] T_s) = [[A_d, B_d], [0, I]]."""

    n, m = B_c.shape
    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = A_c
    augmented[:n, n:] = B_c
    phi = expm(augmented * T_s)
    return phi[:n, :n], phi[:n, n:]


def linearize(params: PlantParams, T_s: float) -> LinearModel:  # noqa: N803
    """Discrete-time linearization around the upright equilibrium."""

    A_c, B_c = continuous_jacobians(params)  # noqa: N806
    A_d, B_d = zero_order_hold(A_c, B_c, T_s)  # noqa: N806
    return LinearModel(A_d=A_d, B_d=B_d, C_d=output_matrix(), T_s=T_s)
