"""SMA rhombic primer: static force/stroke law and first-order dynamics.

A primer is a rhombus of shape-memory wire loops that contracts across one
diagonal when driven.  Statics reduce to two published working points, so
the model is a linear compliance up to a saturated stroke; the
electro-thermal transient collapses into a single symmetric first-order lag.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class PrimerSpec:
    """Rhombic SMA actuator parameters.

    Defaults describe the reference build: 38 um wire at 20 gf per strand,
    11 loops of 2 strands on a 40 mm rhombus, 1.04 mm usable stroke, 0.25 s
    reaction time at 55 mA.
    """

    wire_diameter: float = 38.0  # um
    force_per_wire: float = 20.0  # gram-force per strand
    loop_count: int = 11
    strands_per_loop: int = 2
    rhombus_width: float = 40.0  # mm
    stroke_max: float = 1.04  # mm
    time_constant: float = 0.25  # s
    drive_current: float = 55.0  # mA
    sma_contraction_fraction: float = 0.045

    def __post_init__(self):
        positive = {
            "wire_diameter": self.wire_diameter,
            "loop_count": self.loop_count,
            "strands_per_loop": self.strands_per_loop,
            "rhombus_width": self.rhombus_width,
            "stroke_max": self.stroke_max,
            "time_constant": self.time_constant,
            "drive_current": self.drive_current,
            "sma_contraction_fraction": self.sma_contraction_fraction,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")
        if self.force_per_wire < 0:
            raise ValueError("force_per_wire must be non-negative")
        if self.stroke_max > 1.5:
            raise ValueError("stroke_max above the 1.5 mm sanity bound")

    @property
    def contraction_in_expected_band(self) -> bool:
        """SMA wire contraction fractions cluster in 3..6%; outside is suspect."""
        return 0.03 <= self.sma_contraction_fraction <= 0.06


@dataclass(frozen=True)
class PrimerState:
    """Actuation state of one primer channel."""

    displacement: float = 0.0  # mm, rhombus output
    command: float = 0.0  # mm, target displacement
    temperature_proxy: float = 0.0  # activation level in [0, 1]
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.displacement < 0.0:
            raise ValueError("displacement must be non-negative")


def total_compression_force(spec: PrimerSpec) -> float:
    """Rated pull across the actuated diagonal, gram-force."""
    return spec.force_per_wire * spec.loop_count * spec.strands_per_loop


def stroke(spec: PrimerSpec, applied_force: float) -> float:
    """Output displacement (mm) under an applied pull (gram-force).

    Linear compliance up to the rated force, saturated at ``stroke_max``.
    """
    if applied_force < 0.0:
        raise ValueError("applied_force must be non-negative")
    total = total_compression_force(spec)
    if total <= 0.0:
        return 0.0
    return spec.stroke_max * min(1.0, applied_force / total)


def step_dynamics(state: PrimerState, command: float, dt: float,
                  spec: PrimerSpec) -> PrimerState:
    """Advance the first-order actuation lag one step (exact update).

    Commands outside [0, stroke_max] are clamped and flagged rather than
    rejected, since the electronics saturate the same way.
    """
    import math

    if dt <= 0.0:
        raise ValueError("dt must be positive")
    flags = ()
    if command < 0.0 or command > spec.stroke_max:
        flags = ("command_clamped",)
        command = min(max(command, 0.0), spec.stroke_max)

    decay = math.exp(-dt / spec.time_constant)
    displacement = command + (state.displacement - command) * decay
    displacement = min(max(displacement, 0.0), spec.stroke_max)
    return PrimerState(
        displacement=displacement,
        command=command,
        temperature_proxy=displacement / spec.stroke_max,
        flags=flags,
    )


def elbow_angle_shift(displacement: float, sensitivity: float = -31.0) -> float:
    """Joint angle change (deg) produced by a primer displacement (mm)."""
    return sensitivity * displacement


def full_stroke_elbow_shift(spec: PrimerSpec | None = None,
                            sensitivity: float = -31.0) -> float:
    """Elbow shift at the rated operating point, deg."""
    spec = spec if spec is not None else PrimerSpec()
    return elbow_angle_shift(stroke(spec, total_compression_force(spec)),
                             sensitivity)
