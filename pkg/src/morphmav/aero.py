"""Unsteady strip aerodynamics as a linear state-space model.

Each strip carries an indicial lift deficiency in two-pole exponential form
(phi(s) = 1 - a1 e^{-b1 s} - a2 e^{-b2 s}, s in semichords travelled), so
two lag states per strip capture the circulation build-up after angle of
attack changes.  The spanwise coupling between strips comes from a
truncated Fourier sine-series solve of the lifting-line downwash equation,
which makes the steady gain verifiable against the closed-form elliptic
wing result.

The assembled model is

    xi_dot = A_xi xi + B_xi y1
    y2     = C_xi xi + D_xi y1

with y1 the per-strip angle of attack (rad) and y2 the stacked output
[net wrench (6,); per-strip lift (n,)].  Shed-wake bookkeeping is exposed
through ``wake_circulation_history``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

# two-pole indicial lift deficiency coefficients (Jones form);
# phi(0) = 1 - a1 - a2 = 0.5, phi(inf) = 1
WAGNER_A = (0.165, 0.335)
WAGNER_B = (0.0455, 0.3)

N_LAG = 2

AIR_DENSITY = 1.225  # kg/m^3

# default section lift slope, 1/rad
SECTION_LIFT_SLOPE = 2.0 * np.pi


def wagner_deficiency(s: np.ndarray) -> np.ndarray:
    """Indicial circulatory lift fraction after s semichords of travel."""
    s = np.asarray(s, dtype=float)
    return 1.0 - WAGNER_A[0] * np.exp(-WAGNER_B[0] * s) - WAGNER_A[1] * np.exp(-WAGNER_B[1] * s)


@dataclass
class StationFrame:
    """Pose of one strip quarter-chord relative to the wing root frame."""

    position: np.ndarray  # (3,) m
    rotation: np.ndarray  # (3,3), columns = strip axes in root frame

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)


@dataclass
class StripGeometry:
    """Spanwise strip discretisation of the lifting surface.

    ``span_stations`` are strip-centre span coordinates (m, strictly
    increasing); ``chord`` and ``area`` size each strip.  ``station_frames``
    optionally place each quarter-chord in the root frame; identity frames
    on the span axis are assumed when omitted.  Model construction needs at
    least two stations.
    """

    span_stations: np.ndarray
    chord: np.ndarray
    area: np.ndarray
    station_frames: list[StationFrame] | None = None
    lift_slope: float = SECTION_LIFT_SLOPE

    def __post_init__(self):
        self.span_stations = np.asarray(self.span_stations, dtype=float).ravel()
        self.chord = np.asarray(self.chord, dtype=float).ravel()
        self.area = np.asarray(self.area, dtype=float).ravel()
        n = self.span_stations.size
        if self.chord.size != n or self.area.size != n:
            raise ValueError("span_stations, chord and area must have equal length")
        if n >= 2 and np.any(np.diff(self.span_stations) <= 0.0):
            raise ValueError("span_stations must be strictly increasing")
        if np.any(self.chord <= 0.0) or np.any(self.area <= 0.0):
            raise ValueError("chord and area must be positive at every station")
        if self.station_frames is not None and len(self.station_frames) != n:
            raise ValueError("need one station frame per span station")

    @property
    def n_strips(self) -> int:
        return self.span_stations.size

    @property
    def width(self) -> np.ndarray:
        return self.area / self.chord

    def frames(self) -> list[StationFrame]:
        if self.station_frames is not None:
            return self.station_frames
        return [
            StationFrame(np.array([0.0, y, 0.0]), np.eye(3))
            for y in self.span_stations
        ]


@dataclass
class KinematicSnapshot:
    """Instantaneous strip poses used when the wing has moved off reference."""

    positions: np.ndarray  # (n,3) m
    rotations: np.ndarray  # (n,3,3)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.rotations = np.asarray(self.rotations, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must be (n, 3)")
        if self.rotations.shape != (self.positions.shape[0], 3, 3):
            raise ValueError("rotations must be (n, 3, 3)")


@dataclass
class WakeState:
    """Aerodynamic hidden variables: n_lag circulation-lag states per strip."""

    lag_states: np.ndarray
    n_lag: int = N_LAG

    def __post_init__(self):
        self.lag_states = np.asarray(self.lag_states, dtype=float).ravel()
        if self.lag_states.size % self.n_lag != 0:
            raise ValueError("lag state length must be a multiple of n_lag")
        if not np.all(np.isfinite(self.lag_states)):
            raise ValueError("non-finite state: wake lag states")

    @property
    def n_strips(self) -> int:
        return self.lag_states.size // self.n_lag


@dataclass
class ForceOutput:
    """Aerodynamic output y2: net wrench at the root frame and strip lifts."""

    wrench: np.ndarray  # (6,) force N, moment N m
    per_strip_lift: np.ndarray  # (n,) N

    def __post_init__(self):
        self.wrench = np.asarray(self.wrench, dtype=float).reshape(6)
        self.per_strip_lift = np.asarray(self.per_strip_lift, dtype=float).ravel()


@dataclass
class AeroModel:
    """State-space unsteady aero model for a frozen wing configuration."""

    A_xi: np.ndarray
    B_xi: np.ndarray
    C_xi: np.ndarray
    D_xi: np.ndarray
    airspeed: float
    air_density: float
    n_strips: int
    n_lag: int = N_LAG
    # circulation read-out maps for wake bookkeeping, Gamma in m^2/s
    gamma_from_xi: np.ndarray | None = None
    gamma_from_y1: np.ndarray | None = None
    wrench_map: np.ndarray | None = None  # (6, n) lift to wrench
    _disc_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return self.A_xi.shape[0]

    def zero_state(self) -> WakeState:
        return WakeState(np.zeros(self.n_states), self.n_lag)

    def output(self, xi: np.ndarray, y1: np.ndarray) -> ForceOutput:
        y2 = self.C_xi @ xi + self.D_xi @ y1
        return ForceOutput(wrench=y2[:6], per_strip_lift=y2[6:])

    def bound_circulation(self, xi: np.ndarray, y1: np.ndarray) -> np.ndarray:
        return self.gamma_from_xi @ xi + self.gamma_from_y1 @ y1

    def steady_gain(self) -> np.ndarray:
        """Steady y2 per unit held y1: -C A^-1 B + D."""
        return -self.C_xi @ np.linalg.solve(self.A_xi, self.B_xi) + self.D_xi


def lifting_line_gain(span_stations: np.ndarray, chord: np.ndarray,
                      width: np.ndarray, lift_slope: float) -> np.ndarray:
    """Map per-strip effective angle of attack to bound circulation per unit speed.

    Solves the monoplane (lifting-line) equation with a Fourier sine series
    truncated at one mode per strip, collocated at the strip centres mapped
    onto the half circle.
    """
    y = np.asarray(span_stations, dtype=float)
    n = y.size
    y_lo = y[0] - 0.5 * width[0]
    y_hi = y[-1] + 0.5 * width[-1]
    span = y_hi - y_lo
    mid = 0.5 * (y_lo + y_hi)
    # theta in (0, pi), theta=pi at the first station side
    u = np.clip(2.0 * (y - mid) / span, -1.0, 1.0)
    theta = np.arccos(-u)
    orders = np.arange(1, n + 1)
    S = np.sin(np.outer(theta, orders))  # (n, n)
    M = S * (4.0 * span / (lift_slope * chord))[:, None] + S * (orders[None, :] / np.sin(theta)[:, None])
    # Gamma = 2 span U sum_n A_n sin(n theta); this returns Gamma/U per alpha
    return 2.0 * span * (S @ np.linalg.inv(M))


def build_aero_model(geometry: StripGeometry,
                     kinematic_snapshot: KinematicSnapshot | None = None,
                     airspeed: float = 1.0,
                     air_density: float = AIR_DENSITY) -> AeroModel:
    """Assemble the state-space matrices for a frozen wing configuration.

    The per-strip poses (snapshot if given, otherwise the geometry's station
    frames) orient the lift directions and moment arms in ``y2``.
    """
    if not np.isfinite(airspeed) or airspeed <= 0.0:
        raise ValueError("degenerate freestream: airspeed must be positive")
    n = geometry.n_strips
    if n < 2:
        raise ValueError("geometry underresolved: need at least 2 strips")

    if kinematic_snapshot is not None:
        positions = kinematic_snapshot.positions
        rotations = kinematic_snapshot.rotations
        if positions.shape[0] != n:
            raise ValueError("snapshot strip count does not match geometry")
    else:
        frames = geometry.frames()
        positions = np.array([f.position for f in frames])
        rotations = np.array([f.rotation for f in frames])

    U = float(airspeed)
    width = geometry.width
    semichord = 0.5 * geometry.chord

    n_states = N_LAG * n
    A = np.zeros((n_states, n_states))
    B = np.zeros((n_states, n))
    # effective angle of attack: phi(0) alpha + sum_i a_i b_i (U/b_k) xi_ki
    alpha_from_xi = np.zeros((n, n_states))
    phi0 = 1.0 - WAGNER_A[0] - WAGNER_A[1]
    for k in range(n):
        for i in range(N_LAG):
            idx = N_LAG * k + i
            rate = WAGNER_B[i] * U / semichord[k]
            A[idx, idx] = -rate
            B[idx, k] = 1.0
            alpha_from_xi[k, idx] = WAGNER_A[i] * WAGNER_B[i] * U / semichord[k]

    G = lifting_line_gain(geometry.span_stations, geometry.chord, width,
                          geometry.lift_slope)
    gamma_from_xi = U * (G @ alpha_from_xi)  # (n, n_states)
    gamma_from_y1 = U * phi0 * G  # (n, n)

    # sectional lift L_k = rho U Gamma_k w_k along the strip frame z axis
    lift_scale = air_density * U * width
    lift_from_xi = lift_scale[:, None] * gamma_from_xi
    lift_from_y1 = lift_scale[:, None] * gamma_from_y1

    W = np.zeros((6, n))
    for k in range(n):
        n_k = rotations[k] @ np.array([0.0, 0.0, 1.0])
        W[:3, k] = n_k
        W[3:, k] = np.cross(positions[k], n_k)

    C = np.vstack([W @ lift_from_xi, lift_from_xi])
    D = np.vstack([W @ lift_from_y1, lift_from_y1])

    return AeroModel(
        A_xi=A, B_xi=B, C_xi=C, D_xi=D,
        airspeed=U, air_density=air_density,
        n_strips=n, n_lag=N_LAG,
        gamma_from_xi=gamma_from_xi, gamma_from_y1=gamma_from_y1,
        wrench_map=W,
    )


def _discrete_pair(model: AeroModel, dt: float):
    key = round(dt, 15)
    hit = model._disc_cache.get(key)
    if hit is not None:
        return hit
    n, m = model.n_states, model.B_xi.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = model.A_xi * dt
    aug[:n, n:] = model.B_xi * dt
    E = expm(aug)
    pair = (E[:n, :n], E[:n, n:])
    model._disc_cache[key] = pair
    return pair


def aero_step(model: AeroModel, xi: WakeState, y1: np.ndarray,
              dt: float) -> tuple[WakeState, ForceOutput]:
    """Advance the wake state one exact zero-order-hold step.

    Returns the new state and the output evaluated at the end of the step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    y1 = np.asarray(y1, dtype=float).ravel()
    if y1.size != model.n_strips:
        raise ValueError("y1 must have one angle of attack per strip")
    x = xi.lag_states
    if x.size != model.n_states:
        raise ValueError("wake state size does not match the model")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y1))):
        raise ValueError("non-finite state")

    Ad, Bd = _discrete_pair(model, dt)
    x_new = Ad @ x + Bd @ y1
    out = model.output(x_new, y1)
    return WakeState(x_new, model.n_lag), out


def wake_circulation_history(model: AeroModel, y1_trajectory: np.ndarray,
                             dt: float, xi0: WakeState | None = None,
                             y1_initial: np.ndarray | None = None,
                             rebuild: Callable[[int], AeroModel] | None = None):
    """Per-step shed horseshoe strengths for a y1 trajectory.

    Every change of a strip's bound circulation sheds a horseshoe of the
    opposite strength, so the vorticity ledger telescopes: summed shed
    strength plus the final bound circulation equals the bound circulation
    before the first step.  ``y1_initial`` sets that pre-trajectory input
    (rest by default), which makes an impulsive start shed its full jump.
    ``rebuild``, if given, supplies the model to use at each step index.

    Returns (shed, bound): shed is (steps, n) per-step horseshoe strengths,
    bound is (steps + 1, n) bound circulation before and after each step.
    """
    y1_trajectory = np.atleast_2d(np.asarray(y1_trajectory, dtype=float))
    if y1_trajectory.size == 0:
        raise ValueError("trajectory must be non-empty")
    steps = y1_trajectory.shape[0]
    current = model if rebuild is None else rebuild(0)
    if y1_trajectory.shape[1] != current.n_strips:
        raise ValueError("trajectory width must equal the strip count")
    xi = current.zero_state() if xi0 is None else xi0
    y_prev = (np.zeros(current.n_strips) if y1_initial is None
              else np.asarray(y1_initial, dtype=float).ravel())

    bound = np.zeros((steps + 1, current.n_strips))
    shed = np.zeros((steps, current.n_strips))
    bound[0] = current.bound_circulation(xi.lag_states, y_prev)
    for t in range(steps):
        if rebuild is not None:
            current = rebuild(t)
        xi, _ = aero_step(current, xi, y1_trajectory[t], dt)
        bound[t + 1] = current.bound_circulation(xi.lag_states, y1_trajectory[t])
        shed[t] = -(bound[t + 1] - bound[t])
    return shed, bound


def elliptic_planform(n_strips: int, span: float, aspect_ratio: float,
                      lift_slope: float = SECTION_LIFT_SLOPE) -> StripGeometry:
    """Elliptic chord distribution with exact per-strip slice areas.

    Useful as a verification case: the closed-form lifting-line result for
    the elliptic wing is C_L = lift_slope * alpha / (1 + lift_slope/(pi AR)).
    """
    if n_strips < 2:
        raise ValueError("geometry underresolved: need at least 2 strips")
    root_chord = 4.0 * span / (np.pi * aspect_ratio)
    edges = np.linspace(-0.5 * span, 0.5 * span, n_strips + 1)
    centres = 0.5 * (edges[:-1] + edges[1:])
    chord = root_chord * np.sqrt(np.clip(1.0 - (2.0 * centres / span) ** 2, 0.0, None))

    def slice_area(a, b):
        # integral of c0 sqrt(1-(2y/B)^2) dy over [a, b]
        ua, ub = 2.0 * a / span, 2.0 * b / span
        anti = lambda u: 0.25 * span * (np.arcsin(np.clip(u, -1, 1))
                                        + u * np.sqrt(max(0.0, 1.0 - u * u)))
        return root_chord * (anti(ub) - anti(ua))

    area = np.array([slice_area(a, b) for a, b in zip(edges[:-1], edges[1:])])
    return StripGeometry(span_stations=centres, chord=chord, area=area,
                         lift_slope=lift_slope)


def total_lift_coefficient(model: AeroModel, geometry: StripGeometry,
                           per_strip_lift: np.ndarray) -> float:
    """Net lift over dynamic pressure and total area."""
    q = 0.5 * model.air_density * model.airspeed**2
    return float(np.sum(per_strip_lift) / (q * np.sum(geometry.area)))


def export_matrices_csv(model: AeroModel, path) -> None:
    """Write the model matrices row-major with per-matrix dimension headers."""
    with open(path, "w") as fh:
        fh.write("matrix,rows,cols,entries...\n")
        for name in ("A_xi", "B_xi", "C_xi", "D_xi"):
            m = getattr(model, name)
            for i in range(m.shape[0]):
                row = ",".join(repr(float(v)) for v in m[i])
                fh.write(f"{name},{m.shape[0]},{m.shape[1]},{row}\n")
