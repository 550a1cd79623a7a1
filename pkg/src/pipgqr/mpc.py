"""Generators for the two MPC benchmark problems.

Both problems are stacked (states kept as decision variables) with the
per-timestep ordering z = (x_1, u_1, x_2, u_2, ..., u_{T-1}, x_T), which
keeps the equality matrix banded. Equality rows are the initial condition
x_1 = x_init followed by the dynamics x_{t+1} = A x_t + B u_t (+ c).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import projections as prj
from .linalg import matrix_exponential
from .problem import CanonicalProblem


@dataclass(frozen=True)
class StackedLayout:
    """Index map from per-timestep (x_t, u_t) to positions in z."""

    T: int
    n_x: int
    n_u: int

    @property
    def n(self):
        return self.T * self.n_x + (self.T - 1) * self.n_u

    @property
    def m_eq(self):
        return self.T * self.n_x  # initial condition + (T-1) dynamics rows

    def state_slice(self, t):
        """Slice of z for x_t, t in [1, T]."""
        start = (t - 1) * (self.n_x + self.n_u)
        return slice(start, start + self.n_x)

    def control_slice(self, t):
        """Slice of z for u_t, t in [1, T-1]."""
        start = (t - 1) * (self.n_x + self.n_u) + self.n_x
        return slice(start, start + self.n_u)


def _stack_equality(layout, A, B, x_init, c=None):
    """Dense H and g for x_1 = x_init and x_{t+1} = A x_t + B u_t + c."""
    n_x = layout.n_x
    H = np.zeros((layout.m_eq, layout.n))
    g = np.zeros(layout.m_eq)
    H[:n_x, layout.state_slice(1)] = np.eye(n_x)
    g[:n_x] = x_init
    for t in range(1, layout.T):
        rows = slice(t * n_x, (t + 1) * n_x)
        H[rows, layout.state_slice(t)] = -A
        H[rows, layout.control_slice(t)] = -B
        H[rows, layout.state_slice(t + 1)] = np.eye(n_x)
        if c is not None:
            g[rows] = c
    return H, g


@dataclass
class MassSpringParams:
    """Oscillating-mass regulation: N unit masses in a chain of unit
    springs with both ends attached to walls."""

    T: int = 30
    dt: float = 0.1
    N: int = 8
    r_max: float = 0.75
    v_max: float = 0.75
    u_max: float = 0.5
    q_pos: float = 1.0  # position weight in Q_t
    q_vel: float = 5.0  # velocity weight in Q_t
    r_ctrl: float = 1.0  # control weight R_t
    x_init: np.ndarray = None

    def __post_init__(self):
        if self.T < 2 or self.N < 1 or self.dt <= 0:
            raise ValueError("need T >= 2, N >= 1, dt > 0")
        if min(self.r_max, self.v_max, self.u_max) <= 0:
            raise ValueError("bounds must be positive")
        if min(self.q_pos, self.q_vel, self.r_ctrl) <= 0:
            raise ValueError("weights must be positive")
        if self.x_init is None:
            self.x_init = np.zeros(2 * self.N)
        else:
            self.x_init = np.asarray(self.x_init, dtype=float)
            if self.x_init.shape != (2 * self.N,):
                raise ValueError(f"x_init must have length {2 * self.N}")


def stiffness_matrix(N):
    """Tridiagonal chain-stiffness matrix: 2 on the diagonal, -1 off it."""
    K = 2.0 * np.eye(N)
    idx = np.arange(N - 1)
    K[idx, idx + 1] = -1.0
    K[idx + 1, idx] = -1.0
    return K


def mass_spring_zoh(N, dt):
    """Zero-order-hold discretization of the mass-spring dynamics.

    Continuous dynamics: d/dt (r, v) = [[0, I], [-K, 0]] (r, v) + [[0], [I]] u.
    """
    K = stiffness_matrix(N)
    Ac = np.block([[np.zeros((N, N)), np.eye(N)], [-K, np.zeros((N, N))]])
    Bc = np.vstack([np.zeros((N, N)), np.eye(N)])
    n_x = 2 * N
    M = np.zeros((n_x + N, n_x + N))
    M[:n_x, :n_x] = Ac
    M[:n_x, n_x:] = Bc
    E = matrix_exponential(M, dt)
    return E[:n_x, :n_x], E[:n_x, n_x:]


def sample_initial_state(seed, N):
    """Random initial state, each component uniform on [-0.5, 0.5]."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, size=2 * N)


def build_mass_spring(p=None):
    """Oscillating-mass regulation problem as a CanonicalProblem."""
    p = p or MassSpringParams()
    layout = StackedLayout(T=p.T, n_x=2 * p.N, n_u=p.N)
    A, B = mass_spring_zoh(p.N, p.dt)

    P = np.empty(layout.n)
    state_w = np.concatenate([np.full(p.N, p.q_pos), np.full(p.N, p.q_vel)])
    for t in range(1, p.T + 1):
        P[layout.state_slice(t)] = state_w
        if t < p.T:
            P[layout.control_slice(t)] = p.r_ctrl
    q = np.zeros(layout.n)

    H, g = _stack_equality(layout, A, B, p.x_init)

    sets = []
    state_box = prj.Box(
        lower=np.concatenate([np.full(p.N, -p.r_max), np.full(p.N, -p.v_max)]),
        upper=np.concatenate([np.full(p.N, p.r_max), np.full(p.N, p.v_max)]),
    )
    ctrl_box = prj.Box(lower=np.full(p.N, -p.u_max), upper=np.full(p.N, p.u_max))
    for t in range(1, p.T + 1):
        sets.append(state_box)
        if t < p.T:
            sets.append(ctrl_box)
    D = prj.ProductSet.from_sets(sets)

    return CanonicalProblem(P=P, q=q, H=scipy.sparse.csc_array(H), g=g, D=D)


@dataclass
class QuadrotorParams:
    """3-DoF quadrotor path planning with a rotating keep-out half-space."""

    T: int = 30
    dt: float = 0.2
    mass: float = 3.0
    psi: float = -0.5  # half-space rotation rate (rad per step)
    phi: float = -math.pi / 4  # half-space phase offset
    r_c: np.ndarray = field(default_factory=lambda: np.array([2.5, 2.5]))
    rho: float = 0.25
    v_max: float = 1.5
    u_max: float = 35.0
    theta_max: float = 0.1745
    grav: float = 9.8
    q_pos: float = 2.0
    q_vel: float = 1.0
    r_ctrl: float = 0.5
    x_init: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 5.0, 0.0, 0.0, 0.0]))
    x_target: np.ndarray = field(
        default_factory=lambda: np.array([5.0, 5.0, 5.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        if self.T < 2 or self.dt <= 0 or self.mass <= 0:
            raise ValueError("need T >= 2, dt > 0, mass > 0")
        if self.rho <= 0 or not (0 < self.theta_max < math.pi / 2):
            raise ValueError("need rho > 0 and 0 < theta_max < pi/2")
        self.r_c = np.asarray(self.r_c, dtype=float)
        self.x_init = np.asarray(self.x_init, dtype=float)
        self.x_target = np.asarray(self.x_target, dtype=float)


def quadrotor_dynamics(p):
    """Discrete double-integrator dynamics under gravity.

    A = [[I3, dt I3], [0, I3]], B = (1/m) [[dt^2/2 I3], [dt I3]],
    c = (0, 0, -g dt^2/2, 0, 0, -g dt).
    """
    I3 = np.eye(3)
    A = np.block([[I3, p.dt * I3], [np.zeros((3, 3)), I3]])
    B = np.vstack([0.5 * p.dt**2 * I3, p.dt * I3]) / p.mass
    c = np.array([0.0, 0.0, -0.5 * p.grav * p.dt**2,
                  0.0, 0.0, -p.grav * p.dt])
    return A, B, c


def keepout_halfspace(p, t):
    """Rotating half-space excluding the cylindrical obstacle at step t.

    Normal a_t = (cos(psi t dt + phi), -sin(psi t dt + phi)) rotates at
    rate psi in continuous time; the offset b_t = a_t' r_c - rho makes
    the half-space boundary tangent to the obstacle disk, so feasible
    points keep distance >= rho from the obstacle center along a_t. The
    sweep tracks the vehicle's transit around the obstacle.
    """
    theta = p.psi * t * p.dt + p.phi
    a = np.array([math.cos(theta), -math.sin(theta)])
    b = float(a @ p.r_c) - p.rho
    return a, b


def quadrotor_reference(p):
    """Reference states linearly interpolating x_init to x_target."""
    ts = np.arange(1, p.T + 1)
    frac = (ts - 1) / (p.T - 1)
    return p.x_init[None, :] + frac[:, None] * (p.x_target - p.x_init)[None, :]


def build_quadrotor(p=None):
    """Quadrotor path-planning problem as a CanonicalProblem."""
    p = p or QuadrotorParams()
    layout = StackedLayout(T=p.T, n_x=6, n_u=3)
    A, B, c = quadrotor_dynamics(p)
    x_hat = quadrotor_reference(p)

    state_w = np.array([p.q_pos] * 3 + [p.q_vel] * 3)
    P = np.empty(layout.n)
    q = np.zeros(layout.n)
    for t in range(1, p.T + 1):
        sl = layout.state_slice(t)
        P[sl] = state_w
        q[sl] = -state_w * x_hat[t - 1]
        if t < p.T:
            P[layout.control_slice(t)] = p.r_ctrl

    H, g = _stack_equality(layout, A, B, p.x_init, c=c)

    beta = math.tan(p.theta_max)
    sets = []
    for t in range(1, p.T + 1):
        a, b = keepout_halfspace(p, t)
        sets.append(prj.HalfSpace(normal=a, offset=b))  # horizontal position
        sets.append(prj.FullSpace(1))  # altitude unconstrained
        sets.append(prj.Ball(radius=p.v_max, center=np.zeros(3)))  # velocity
        if t < p.T:
            sets.append(prj.BallCapCone(radius=p.u_max, beta=beta, dim=3))
    D = prj.ProductSet.from_sets(sets)

    return CanonicalProblem(P=P, q=q, H=scipy.sparse.csc_array(H), g=g, D=D)


def csc_storage_bytes(H):
    """CSC storage: 8-byte values and row indices plus the column pointer."""
    H = scipy.sparse.csc_array(H)
    return 8 * H.nnz + 8 * H.nnz + 8 * (H.shape[1] + 1)


def dense_storage_bytes(shape):
    rows, cols = shape
    return 8 * rows * cols
