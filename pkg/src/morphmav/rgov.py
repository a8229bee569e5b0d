"""Pre-stabilized reference model and primer command governor.

The structural increments y1 are assumed to track a periodic gait under an
inner-loop controller, so the slow primer command omega enters the error
dynamics like a steerable disturbance:

    d/dt [y1; y1_dot] = A_Y [y1; y1_dot] + B_Y omega

``prestabilize`` builds (A_Y, B_Y) from an assembled structure and PD
acceleration gains and refuses non-Hurwitz results.  ``govern`` scales a
requested command back onto the constraint-admissible set by bisection on a
scalar lambda, checking the predicted aerodynamic output y2 over a forward
horizon.  ``equilibrium_locus`` exposes the line of steady states that the
governor slides along.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .aero import AeroModel, WakeState, aero_step
from .structure import discretize

BISECTION_TOL = 1e-6

# admissibility slack for points sitting exactly on a constraint boundary
_BOUNDARY_SLACK = 1e-9


@dataclass(frozen=True)
class AffineConstraint:
    """One half-space c . y2 <= d of the constraint-admissible set."""

    coeff: tuple[float, ...]
    bound: float
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=float)
        if not np.all(np.isfinite(c)) or not np.isfinite(self.bound):
            raise ValueError("constraint coefficients must be finite")
        object.__setattr__(self, "coeff", tuple(c))

    def margin(self, y2: np.ndarray) -> float:
        """bound - c . y2; admissible when non-negative."""
        return self.bound - float(np.dot(self.coeff, y2))


def lift_bound(limit: float, y2_dim: int) -> AffineConstraint:
    """Bound the net vertical force component of y2 from above (N)."""
    c = np.zeros(y2_dim)
    c[2] = 1.0
    return AffineConstraint(tuple(c), limit, label="lift")


def pitch_moment_bound(limit: float, y2_dim: int, sign: float = 1.0) -> AffineConstraint:
    """Bound the pitch moment component of y2 (N m)."""
    c = np.zeros(y2_dim)
    c[4] = sign
    return AffineConstraint(tuple(c), limit, label="pitch_moment")


@dataclass
class PDGains:
    """Acceleration-level PD gains of the inner tracking loop."""

    kp: np.ndarray | float
    kd: np.ndarray | float

    @classmethod
    def critical(cls, natural_frequency_hz: float, damping_ratio: float = 0.9):
        wn = 2.0 * np.pi * natural_frequency_hz
        return cls(kp=wn**2, kd=2.0 * damping_ratio * wn)


class GaitReference:
    """Periodic reference trajectory for the actively tracked coordinates.

    Built from per-channel control points over one period with a periodic
    cubic spline, so rates and accelerations are smooth and loop exactly.
    """

    def __init__(self, period: float, control_points: np.ndarray):
        if period <= 0.0:
            raise ValueError("gait period must be positive")
        points = np.atleast_2d(np.asarray(control_points, dtype=float))
        if points.shape[1] < 3:
            raise ValueError("need at least 3 control points per period")
        self.period = float(period)
        # close the loop: spline over [0, T] with matching endpoints
        closed = np.column_stack([points, points[:, :1]])
        t = np.linspace(0.0, self.period, closed.shape[1])
        self._spline = CubicSpline(t, closed, axis=1, bc_type="periodic")
        self.n_channels = points.shape[0]

    @classmethod
    def harmonic(cls, period: float, mean: Sequence[float],
                 amplitude: Sequence[float], phase: Sequence[float] | None = None,
                 n_points: int = 24) -> "GaitReference":
        """Sampled sinusoid per channel; a convenient spline gait."""
        mean = np.asarray(mean, dtype=float)
        amplitude = np.asarray(amplitude, dtype=float)
        phase = np.zeros_like(mean) if phase is None else np.asarray(phase, dtype=float)
        t = np.arange(n_points) / n_points
        pts = mean[:, None] + amplitude[:, None] * np.sin(
            2.0 * np.pi * t[None, :] + phase[:, None])
        return cls(period, pts)

    @property
    def frequency(self) -> float:
        return 1.0 / self.period

    def position(self, t) -> np.ndarray:
        return self._spline(np.mod(t, self.period))

    def rate(self, t) -> np.ndarray:
        return self._spline(np.mod(t, self.period), 1)

    def acceleration(self, t) -> np.ndarray:
        return self._spline(np.mod(t, self.period), 2)


@dataclass
class RGModel:
    """Pre-stabilized error dynamics with the primer command as input.

    ``aero_input_map`` translates the stacked [y1; y1_dot] state into the
    per-strip angle-of-attack vector the aero model consumes; it is scenario
    data, not something the governor can derive.
    """

    A_Y: np.ndarray
    B_Y: np.ndarray
    y2_constraints: list[AffineConstraint] = field(default_factory=list)
    aero_input_map: np.ndarray | None = None
    gait_reference: GaitReference | None = None

    @property
    def n_state(self) -> int:
        return self.A_Y.shape[0]

    @property
    def n_primers(self) -> int:
        return self.B_Y.shape[1]


@dataclass(frozen=True)
class GovernorState:
    """Result of one governor evaluation."""

    omega_applied: np.ndarray
    reference: np.ndarray
    scale: float  # the admissible lambda in [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "omega_applied",
                           np.asarray(self.omega_applied, dtype=float))
        object.__setattr__(self, "reference",
                           np.asarray(self.reference, dtype=float))


def _hurwitz_check(A: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvals(A)
    # marginal modes show real parts at the eigensolver noise floor
    # (|re|/|lambda| ~ 1e-13), so a per-eigenvalue relative margin separates
    # them from genuinely damped modes without penalising stiff spectra
    margin = 1e-9 * np.maximum(1.0, np.abs(eig))
    return eig[eig.real >= -margin]


def prestabilize(structure, gait_reference: GaitReference | None = None,
                 gains: PDGains | None = None,
                 y2_constraints: Sequence[AffineConstraint] = (),
                 aero_input_map: np.ndarray | None = None) -> RGModel:
    """Close an acceleration-level PD loop around the structure.

    ``structure`` needs ``mass``, ``stiffness``, ``damping`` and
    ``load_columns``; the assembled wing provides them.  Default gains place
    the tracking poles at damping ratio 0.9 and twice the gait frequency
    (10 Hz gait assumed when no reference is given).
    """
    M = np.atleast_2d(np.asarray(structure.mass, dtype=float))
    K = np.atleast_2d(np.asarray(structure.stiffness, dtype=float))
    C = np.atleast_2d(np.asarray(structure.damping, dtype=float))
    Bcols = np.atleast_2d(np.asarray(structure.load_columns, dtype=float))
    n = M.shape[0]
    if Bcols.shape[0] != n:
        Bcols = Bcols.reshape(n, -1)

    if gains is None:
        f_gait = gait_reference.frequency if gait_reference is not None else 10.0
        gains = PDGains.critical(2.0 * f_gait)
    kp = np.broadcast_to(np.asarray(gains.kp, dtype=float), (n,))
    kd = np.broadcast_to(np.asarray(gains.kd, dtype=float), (n,))

    Minv_K = np.linalg.solve(M, K)
    Minv_C = np.linalg.solve(M, C)
    Minv_B = np.linalg.solve(M, Bcols)

    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv_K - np.diag(kp)
    A[n:, n:] = -Minv_C - np.diag(kd)
    B = np.zeros((2 * n, Bcols.shape[1]))
    B[n:, :] = Minv_B

    bad = _hurwitz_check(A)
    if bad.size:
        worst = ", ".join(f"{v:.6g}" for v in sorted(bad, key=lambda z: -z.real)[:4])
        raise ValueError(
            f"pre-stabilization failed: closed loop not Hurwitz, eigenvalues [{worst}]"
        )
    return RGModel(A_Y=A, B_Y=B, y2_constraints=list(y2_constraints),
                   aero_input_map=aero_input_map, gait_reference=gait_reference)


def equilibrium_locus(model: RGModel, omega: np.ndarray) -> np.ndarray:
    """Steady state [y1; y1_dot] reached under a held command."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.shape != (model.n_primers,):
        raise ValueError("omega must have one entry per primer")
    try:
        return -np.linalg.solve(model.A_Y, model.B_Y @ omega)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"equilibrium locus undefined: A_Y is singular ({err})")


def _predict_feasible(model: RGModel, omega: np.ndarray, x0: np.ndarray,
                      aero: AeroModel | None, steps: int, dt: float,
                      xi0: np.ndarray | None,
                      constraints: Sequence[AffineConstraint]) -> bool:
    """Forward-simulate the held command and test every y2 sample."""
    Ad, Bd = discretize(model.A_Y, model.B_Y, dt)
    if aero is not None:
        Axi, Bxi = _aero_discrete(aero, dt)
        xi = np.zeros(aero.n_states) if xi0 is None else np.asarray(xi0, dtype=float)
        P = model.aero_input_map
    x = x0.copy()
    forced = Bd @ omega

    def admissible(y2) -> bool:
        return all(c.margin(y2) >= -_BOUNDARY_SLACK * max(1.0, abs(c.bound))
                   for c in constraints)

    if aero is not None:
        y2 = aero.C_xi @ xi + aero.D_xi @ (P @ x)
        if not admissible(y2):
            return False
    for _ in range(steps):
        y1_aero = P @ x if aero is not None else None
        x = Ad @ x + forced
        if aero is not None:
            xi = Axi @ xi + Bxi @ y1_aero
            y2 = aero.C_xi @ xi + aero.D_xi @ (P @ x)
            if not admissible(y2):
                return False
    return True


def _aero_discrete(aero: AeroModel, dt: float):
    key = ("rgov", round(dt, 15))
    hit = aero._disc_cache.get(key)
    if hit is None:
        hit = discretize(aero.A_xi, aero.B_xi, dt)
        aero._disc_cache[key] = hit
    return hit


def govern(model: RGModel, requested_omega: np.ndarray,
           current_state: np.ndarray | None = None,
           aero: AeroModel | None = None,
           horizon: float = 0.2, dt: float = 2e-3,
           xi0: np.ndarray | None = None) -> np.ndarray:
    """Largest admissible scaling of the requested primer command.

    Returns lambda * requested_omega with the maximal lambda in [0, 1] whose
    predicted y2 trajectory over the horizon satisfies every configured
    constraint; the request passes through unchanged when already
    admissible.  The prediction holds the command constant, starts the wake
    at rest unless ``xi0`` is given, and samples y2 at every step.
    """
    omega = np.atleast_1d(np.asarray(requested_omega, dtype=float))
    if omega.shape != (model.n_primers,):
        raise ValueError("requested omega must have one entry per primer")
    constraints = model.y2_constraints
    if not constraints:
        return omega

    # rest must be admissible, else no scaling can ever succeed
    for c in constraints:
        if c.bound < -_BOUNDARY_SLACK:
            raise ValueError(
                f"constraint set excludes rest: bound {c.bound} < 0 on"
                f" {'y2' if not c.label else c.label}"
            )
    if aero is not None and model.aero_input_map is None:
        raise ValueError("govern needs aero_input_map when an aero model is supplied")

    x0 = (np.zeros(model.n_state) if current_state is None
          else np.asarray(current_state, dtype=float).reshape(model.n_state))
    steps = max(1, int(round(horizon / dt)))

    def feasible(lam: float) -> bool:
        return _predict_feasible(model, lam * omega, x0, aero, steps, dt,
                                 xi0, constraints)

    if feasible(1.0):
        return omega
    if not feasible(0.0):
        raise ValueError(
            "no admissible command: the unforced prediction already violates"
            " the constraint set"
        )
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo * omega


def govern_detailed(model: RGModel, requested_omega: np.ndarray,
                    **kwargs) -> GovernorState:
    """``govern`` plus the applied scale, for logging."""
    omega = np.atleast_1d(np.asarray(requested_omega, dtype=float))
    applied = govern(model, omega, **kwargs)
    norm = float(np.linalg.norm(omega))
    scale = 1.0 if norm == 0.0 else float(np.linalg.norm(applied) / norm)
    return GovernorState(omega_applied=applied, reference=omega, scale=scale)


def zero_dynamics_residual(x, gait_reference: GaitReference,
                           t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Distance of a flight state from the gait-tracking manifold.

    Returns (position residual, rate residual) of the actively tracked
    coordinates against the reference at time ``t``; both vanish exactly on
    the manifold.  ``x`` may be a flight state exposing
    ``active_coordinates()``/``active_rates()`` or a plain (q, qd) pair.
    """
    if hasattr(x, "active_coordinates"):
        q = np.asarray(x.active_coordinates(), dtype=float)
        qd = np.asarray(x.active_rates(), dtype=float)
    else:
        q, qd = (np.asarray(v, dtype=float) for v in x)
    return q - gait_reference.position(t), qd - gait_reference.rate(t)
