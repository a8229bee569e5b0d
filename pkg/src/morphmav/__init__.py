"""morphmav: simulation and design tools for a dynamic-morphing flapping-wing MAV.

The package models a small flapping-wing vehicle whose wing skeleton is a
compliant structure retuned in flight by millimetre-stroke shape-memory
actuators ("primers").  Modules:

- ``structure``   geometrically exact rod elements, assembly, linear march
- ``aero``        unsteady strip aerodynamics (indicial lift + lifting line)
- ``primer``      SMA rhombic actuator statics and first-order dynamics
- ``rgov``        pre-stabilised reference model and command governor
- ``placement``   optimal primer placement from wingtip-trajectory principal axes
- ``flightsim``   longitudinal closed-loop flight simulation
- ``config``      structured text configs with unit-suffixed values
- ``cli``         scenario runner
"""

__version__ = "0.1.0"

__all__ = [
    "aero",
    "cli",
    "config",
    "flightsim",
    "placement",
    "primer",
    "rgov",
    "structure",
]
