"""Geometrically exact rod elements for the compliant wing skeleton.

The wing is modelled as a chain of two-node rod elements.  Each node carries
a world position and an exponential rotation vector; orientation inside an
element is interpolated geodesically (relative rotation vector scaled along
the element), which keeps the strain measures exactly invariant under rigid
body motion.  Strains are the material tangent vector ``Gamma = R^T x0'``
and the material curvature ``K = T(Psi) Psi'`` with ``T`` the right Jacobian
of the exponential map.

Element matrices are virtual-work integrands:

- ``kappa1``  tangent stiffness (quadratic form of the linearised strains)
- ``kappa2``  consistent inertia (translational + rotary)
- ``kappa3``  Rayleigh damping blend
- ``kappa4``  axial prestress (geometric) stiffness, zero at the reference
- ``kappa6``  self-equilibrated force pair injected by a primer slot

``assemble`` chains elements into first-order blocks
``d/dt [y, y.] = a_blocks [y, y.] + b_blocks omega`` and ``march`` integrates
them with an exact zero-order-hold discretisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import expm

# Below this rotation magnitude (rad) closed forms switch to series.
SMALL_ROTATION = 1e-8

# Rotation coordinates live on the open ball of radius pi.
_BRANCH_LIMIT = np.pi - 1e-9


def _hat(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def rotation_map(psi: np.ndarray) -> np.ndarray:
    """Exponential map from a rotation vector to a rotation matrix."""
    psi = np.asarray(psi, dtype=float)
    theta = float(np.linalg.norm(psi))
    if not np.isfinite(theta):
        raise ValueError("rotation branch: non-finite rotation vector")
    if theta >= _BRANCH_LIMIT:
        raise ValueError(
            f"rotation branch: |psi| = {theta:.6f} outside the open ball of radius pi"
        )
    P = _hat(psi)
    if theta < SMALL_ROTATION:
        c1 = 1.0 - theta**2 / 6.0
        c2 = 0.5 - theta**2 / 24.0
    else:
        c1 = np.sin(theta) / theta
        c2 = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + c1 * P + c2 * (P @ P)


def log_map(R: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix (principal branch)."""
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    if theta >= _BRANCH_LIMIT:
        raise ValueError("rotation branch: orientation jump reaches pi")
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < SMALL_ROTATION:
        # theta/sin(theta) ~ 1 + theta^2/6
        return w * (1.0 + theta**2 / 6.0)
    return w * (theta / np.sin(theta))


def tangent_map(psi: np.ndarray) -> np.ndarray:
    """Right Jacobian of the exponential map.

    Maps rates of the rotation vector to body-frame angular velocity,
    ``omega_body = T(psi) psi_dot``.  Closed form
    ``T = I - f1(theta) hat(psi) + f2(theta) hat(psi)^2`` with
    ``f1 = (1 - cos)/theta^2`` and ``f2 = (theta - sin)/theta^3``.
    """
    psi = np.asarray(psi, dtype=float)
    theta = float(np.linalg.norm(psi))
    if not np.isfinite(theta):
        raise ValueError("rotation branch: non-finite rotation vector")
    if theta >= _BRANCH_LIMIT:
        raise ValueError("rotation branch: tangent map outside the principal branch")
    P = _hat(psi)
    if theta < SMALL_ROTATION:
        f1 = 0.5 - theta**2 / 24.0
        f2 = 1.0 / 6.0 - theta**2 / 120.0
    else:
        f1 = (1.0 - np.cos(theta)) / theta**2
        f2 = (theta - np.sin(theta)) / theta**3
    return np.eye(3) - f1 * P + f2 * (P @ P)


def tangent_map_derivative(psi: np.ndarray, dpsi: np.ndarray) -> np.ndarray:
    """Directional derivative of the tangent map, d/de T(psi + e dpsi)."""
    psi = np.asarray(psi, dtype=float)
    dpsi = np.asarray(dpsi, dtype=float)
    theta = float(np.linalg.norm(psi))
    if theta >= _BRANCH_LIMIT:
        raise ValueError("rotation branch: tangent map outside the principal branch")
    P = _hat(psi)
    D = _hat(dpsi)
    dot = float(psi @ dpsi)
    if theta < SMALL_ROTATION:
        f1 = 0.5 - theta**2 / 24.0
        f2 = 1.0 / 6.0 - theta**2 / 120.0
        g1 = -1.0 / 12.0 + theta**2 / 180.0  # f1'(theta)/theta
        g2 = -1.0 / 60.0 + theta**2 / 1260.0  # f2'(theta)/theta
    else:
        s, c = np.sin(theta), np.cos(theta)
        f1 = (1.0 - c) / theta**2
        f2 = (theta - s) / theta**3
        g1 = (theta * s - 2.0 * (1.0 - c)) / theta**4
        g2 = (theta * (1.0 - c) - 3.0 * (theta - s)) / theta**5
    return -(g1 * dot) * P - f1 * D + (g2 * dot) * (P @ P) + f2 * (D @ P + P @ D)


def interpolation(sigma: float, length: float) -> tuple[float, float]:
    """Linear shape pair (N1, N2) at arclength ``sigma`` in [0, l].

    N1 weights end B (0 at A, 1 at B); N2 weights end A.  They always sum
    to one.
    """
    if length <= 0.0:
        raise ValueError("element length must be positive")
    if sigma < 0.0 or sigma > length:
        raise ValueError("sigma outside the element: 0 <= sigma <= length required")
    n1 = sigma / length
    return n1, 1.0 - n1


@dataclass
class MaterialMatrix:
    """Diagonal section stiffness and inertia of a rod.

    ``diag_entries`` pair with the strain vector
    (axial, shear_y, shear_z, torsion, bend_y, bend_z): axial and shear in
    N, torsion and bending in N m^2.  ``density`` (kg/m^3) and
    ``cross_section_area`` (m^2) set the translational inertia;
    ``rotary_inertia`` holds rho*(Ip, Iy, Iz) in kg m.
    """

    diag_entries: tuple[float, ...]
    density: float
    cross_section_area: float
    rotary_inertia: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        diag = tuple(float(v) for v in self.diag_entries)
        if len(diag) != 6:
            raise ValueError("diag_entries must have exactly 6 stiffness entries")
        if any(not np.isfinite(v) or v <= 0.0 for v in diag):
            raise ValueError("section stiffness entries must be positive and finite")
        object.__setattr__(self, "diag_entries", diag)
        if self.density <= 0.0 or self.cross_section_area <= 0.0:
            raise ValueError("density and cross-section area must be positive")
        if any(v < 0.0 for v in self.rotary_inertia):
            raise ValueError("rotary inertia entries must be non-negative")

    @property
    def axial(self) -> float:
        return self.diag_entries[0]

    @property
    def torsion(self) -> float:
        return self.diag_entries[3]

    @property
    def bending_y(self) -> float:
        return self.diag_entries[4]

    @property
    def bending_z(self) -> float:
        return self.diag_entries[5]

    @property
    def mass_per_length(self) -> float:
        return self.density * self.cross_section_area

    def elastic_diag(self) -> np.ndarray:
        return np.array(self.diag_entries)

    def rotary_diag(self) -> np.ndarray:
        return np.asarray(self.rotary_inertia, dtype=float)

    def scaled_stiffness(self, factor: float) -> "MaterialMatrix":
        """Same inertia, every stiffness entry multiplied by ``factor``."""
        return MaterialMatrix(
            diag_entries=tuple(factor * v for v in self.diag_entries),
            density=self.density,
            cross_section_area=self.cross_section_area,
            rotary_inertia=self.rotary_inertia,
        )


def strip_material(section_y: float, section_z: float, *,
                   youngs: float = 40e9, density: float = 1600.0,
                   shear_modulus: float | None = None,
                   shear_factor: float = 5.0 / 6.0) -> MaterialMatrix:
    """Section properties of a rectangular composite strip.

    ``section_y`` and ``section_z`` are the cross-section extents along the
    element-local y and z axes (m).  Defaults match a unidirectional carbon
    fibre layup (40 GPa, 1600 kg/m^3).
    """
    if section_y <= 0.0 or section_z <= 0.0:
        raise ValueError("section extents must be positive")
    G = youngs / 2.6 if shear_modulus is None else shear_modulus
    area = section_y * section_z
    i_y = section_y * section_z**3 / 12.0  # bending about local y
    i_z = section_z * section_y**3 / 12.0  # bending about local z
    long_side, short_side = max(section_y, section_z), min(section_y, section_z)
    j = long_side * short_side**3 / 3.0  # thin rectangle torsion constant
    return MaterialMatrix(
        diag_entries=(
            youngs * area,
            shear_factor * G * area,
            shear_factor * G * area,
            G * j,
            youngs * i_y,
            youngs * i_z,
        ),
        density=density,
        cross_section_area=area,
        rotary_inertia=(density * (i_y + i_z), density * i_y, density * i_z),
    )


@dataclass
class ElementState:
    """Reference state of one rod element: nodal positions and rotations."""

    x0_a: np.ndarray  # (3,) world position of end A, m
    psi_a: np.ndarray  # (3,) rotation vector of end A
    x0_b: np.ndarray  # (3,) world position of end B, m
    psi_b: np.ndarray  # (3,) rotation vector of end B
    reference_length: float | None = None  # arclength; chord distance if None

    def __post_init__(self):
        self.x0_a = np.asarray(self.x0_a, dtype=float).reshape(3)
        self.psi_a = np.asarray(self.psi_a, dtype=float).reshape(3)
        self.x0_b = np.asarray(self.x0_b, dtype=float).reshape(3)
        self.psi_b = np.asarray(self.psi_b, dtype=float).reshape(3)
        for arr in (self.x0_a, self.psi_a, self.x0_b, self.psi_b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("element state must be finite")
        if self.reference_length is None:
            self.reference_length = float(np.linalg.norm(self.x0_b - self.x0_a))
        if self.reference_length <= 0.0:
            raise ValueError("element length must be positive")

    @property
    def length(self) -> float:
        return float(self.reference_length)


@dataclass(frozen=True)
class PrimerSlot:
    """Attachment geometry of a primer on one element.

    The actuator pulls the element's end nodes together along ``direction``
    (unit vector, end-A frame) with an offset lever ``offset`` (m, end-A
    frame), so a command also injects a moment couple.  ``gain`` converts a
    primer command in mm to force in N.
    """

    element_index: int
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gain: float = 4.15  # N per mm of commanded stroke

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ValueError("slot direction must be a nonzero vector")
        object.__setattr__(self, "direction", tuple(d / n))
        if self.gain <= 0.0:
            raise ValueError("slot gain must be positive")


def _element_frames(element: ElementState):
    """Shared per-element quantities: end rotations and the relative rotation."""
    R_a = rotation_map(element.psi_a)
    R_b = rotation_map(element.psi_b)
    psi_rel = log_map(R_a.T @ R_b)
    return R_a, R_b, psi_rel


def _local_orientation(element: ElementState, sigma: float,
                       frames=None) -> np.ndarray:
    R_a, _, psi_rel = frames if frames is not None else _element_frames(element)
    w_b, _ = interpolation(sigma, element.length)
    return R_a @ rotation_map(w_b * psi_rel)


def axial_strain(element: ElementState, sigma: float, frames=None) -> np.ndarray:
    """Material tangent vector Gamma = R^T x0' at ``sigma``.

    Equals (1, 0, 0) for an undeformed element whose axis follows the local
    x direction.
    """
    R = _local_orientation(element, sigma, frames)
    dx = (element.x0_b - element.x0_a) / element.length
    return R.T @ dx


def curvature(element: ElementState, sigma: float, frames=None) -> np.ndarray:
    """Material curvature K = T(Psi) Psi' at ``sigma``."""
    frames = frames if frames is not None else _element_frames(element)
    _, _, psi_rel = frames
    w_b, _ = interpolation(sigma, element.length)
    return tangent_map(w_b * psi_rel) @ (psi_rel / element.length)


def _strain_operators(element: ElementState, sigma: float, frames=None):
    """Q1 (6x9) and Q2 (9x12): linearised strains from nodal increments.

    Q2 maps the stacked nodal increments (dx_a, dpsi_a, dx_b, dpsi_b) to the
    local fields (dx0', dpsi', dpsi); Q1 maps those to (dGamma, dK).
    """
    frames = frames if frames is not None else _element_frames(element)
    R_a, _, psi_rel = frames
    l = element.length
    w_b, w_a = interpolation(sigma, l)

    psi_t = w_b * psi_rel
    dpsi_t = psi_rel / l
    R = R_a @ rotation_map(psi_t)
    T = tangent_map(psi_t)
    T_prime = tangent_map_derivative(psi_t, dpsi_t)

    gamma = R.T @ ((element.x0_b - element.x0_a) / l)
    kappa = T @ dpsi_t

    I3 = np.eye(3)
    Q2 = np.zeros((9, 12))
    Q2[0:3, 0:3] = -I3 / l
    Q2[0:3, 6:9] = I3 / l
    Q2[3:6, 3:6] = -I3 / l
    Q2[3:6, 9:12] = I3 / l
    Q2[6:9, 3:6] = w_a * I3
    Q2[6:9, 9:12] = w_b * I3

    Q1 = np.zeros((6, 9))
    Q1[0:3, 0:3] = R.T
    Q1[0:3, 6:9] = _hat(gamma) @ T
    Q1[3:6, 3:6] = T
    Q1[3:6, 6:9] = _hat(kappa) @ T + T_prime
    return Q1, Q2


def kappa1(element: ElementState, material: MaterialMatrix, sigma: float,
           frames=None) -> np.ndarray:
    """Stiffness integrand Q2^T Q1^T E Q1 Q2 (12x12) at ``sigma``."""
    Q1, Q2 = _strain_operators(element, sigma, frames)
    B = Q1 @ Q2
    K = B.T @ (material.elastic_diag()[:, None] * B)
    return 0.5 * (K + K.T)


# 3-point Gauss-Legendre rule mapped to [0, 1]
_G3_OFFSET = np.sqrt(3.0 / 5.0) / 2.0
_GAUSS3 = (
    (0.5 - _G3_OFFSET, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + _G3_OFFSET, 5.0 / 18.0),
)
_GAUSS1 = ((0.5, 1.0),)

_SHEAR_ROWS = (1, 2)


def element_stiffness(element: ElementState, material: MaterialMatrix, *,
                      shear_integration: str = "reduced") -> np.ndarray:
    """Integrated elastic stiffness (12x12).

    With ``shear_integration="reduced"`` the transverse shear rows of the
    section stiffness are integrated with a single midpoint Gauss point and
    everything else with three points.  The split removes the spurious shear
    constraint that otherwise locks thin elements.  ``"full"`` integrates all
    rows with three points.
    """
    if shear_integration not in ("reduced", "full"):
        raise ValueError("shear_integration must be 'reduced' or 'full'")
    frames = _element_frames(element)
    l = element.length
    diag_full = material.elastic_diag().copy()
    diag_shear = np.zeros(6)
    if shear_integration == "reduced":
        for r in _SHEAR_ROWS:
            diag_shear[r] = diag_full[r]
            diag_full[r] = 0.0

    K = np.zeros((12, 12))
    for xi, w in _GAUSS3:
        Q1, Q2 = _strain_operators(element, xi * l, frames)
        B = Q1 @ Q2
        K += (w * l) * (B.T @ (diag_full[:, None] * B))
    if shear_integration == "reduced":
        for xi, w in _GAUSS1:
            Q1, Q2 = _strain_operators(element, xi * l, frames)
            B = Q1 @ Q2
            K += (w * l) * (B.T @ (diag_shear[:, None] * B))
    return 0.5 * (K + K.T)


def kappa2(element: ElementState, material: MaterialMatrix, sigma: float,
           frames=None) -> np.ndarray:
    """Consistent inertia integrand (12x12) at ``sigma``."""
    frames = frames if frames is not None else _element_frames(element)
    _, _, psi_rel = frames
    l = element.length
    w_b, w_a = interpolation(sigma, l)
    T = tangent_map(w_b * psi_rel)

    Nx = np.zeros((3, 12))
    Nx[:, 0:3] = w_a * np.eye(3)
    Nx[:, 6:9] = w_b * np.eye(3)
    Nw = np.zeros((3, 12))
    Nw[:, 3:6] = w_a * T
    Nw[:, 9:12] = w_b * T

    out = material.mass_per_length * (Nx.T @ Nx)
    rot = material.rotary_diag()
    if np.any(rot > 0.0):
        out = out + Nw.T @ (rot[:, None] * Nw)
    return out


def element_mass(element: ElementState, material: MaterialMatrix) -> np.ndarray:
    frames = _element_frames(element)
    l = element.length
    M = np.zeros((12, 12))
    for xi, w in _GAUSS3:
        M += (w * l) * kappa2(element, material, xi * l, frames)
    return 0.5 * (M + M.T)


def element_geometric(element: ElementState, material: MaterialMatrix) -> np.ndarray:
    """Axial prestress stiffness (12x12); exactly zero at the reference length."""
    frames = _element_frames(element)
    l = element.length
    Kg = np.zeros((12, 12))
    Dx = np.zeros((3, 12))
    Dx[:, 0:3] = -np.eye(3) / l
    Dx[:, 6:9] = np.eye(3) / l
    for xi, w in _GAUSS3:
        gamma = axial_strain(element, xi * l, frames)
        n_ax = material.axial * (gamma[0] - 1.0)  # axial force, N
        if n_ax == 0.0:
            continue
        R = _local_orientation(element, xi * l, frames)
        # transverse components of the local displacement gradient
        Bp = (R.T @ Dx)[1:3, :]
        Kg += (w * l * n_ax) * (Bp.T @ Bp)
    return Kg


def slot_load(element: ElementState, slot: PrimerSlot) -> np.ndarray:
    """Nodal load column (12,) of a unit primer command (1 mm) on this element.

    The pair of equal and opposite forces pulls the end nodes together; the
    lever offset turns part of the pull into a moment couple, so the column
    is self-equilibrated.
    """
    R_a, R_b, _ = _element_frames(element)
    d = np.asarray(slot.direction)
    r = np.asarray(slot.offset, dtype=float)
    f_world = slot.gain * (R_a @ d)
    m_local = slot.gain * np.cross(r, d)  # end-A frame moment
    m_world = R_a @ m_local

    col = np.zeros(12)
    col[0:3] = f_world
    col[3:6] = m_local  # conjugate to the body-frame rotation increment at A
    col[6:9] = -f_world
    col[9:12] = -(R_b.T @ m_world)
    return col


def element_increments(element: ElementState, material: MaterialMatrix,
                       dy: np.ndarray, dy_rate: np.ndarray | None = None,
                       dy_accel: np.ndarray | None = None,
                       primer_loads: Sequence[tuple[PrimerSlot, float]] = (),
                       *, damping: tuple[float, float] = (0.0, 0.002),
                       shear_integration: str = "reduced"):
    """Incremental virtual-work force triplet (dF1, dF2, dF3) of one element.

    dF1 is the elastic restoring force of the increment ``dy`` (12,), dF2
    collects inertia, damping and prestress forces from the rates, and dF3
    is the external channel: primer slot loads scaled by their commands.
    """
    dy = np.asarray(dy, dtype=float).reshape(12)
    K = element_stiffness(element, material, shear_integration=shear_integration)
    dF1 = K @ dy

    dF2 = np.zeros(12)
    dF2 += element_geometric(element, material) @ dy
    if dy_rate is not None or dy_accel is not None:
        M = element_mass(element, material)
        if dy_accel is not None:
            dF2 += M @ np.asarray(dy_accel, dtype=float).reshape(12)
        if dy_rate is not None:
            alpha, beta = damping
            C = alpha * M + beta * K
            dF2 += C @ np.asarray(dy_rate, dtype=float).reshape(12)

    dF3 = np.zeros(12)
    for slot, omega in primer_loads:
        dF3 += slot_load(element, slot) * float(omega)
    return dF1, dF2, dF3


@dataclass
class AssembledStructure:
    """First-order model of the chained wing elements.

    ``a_blocks`` is the square state matrix on the stacked free increment
    vector (displacements then rates); ``b_blocks`` maps primer commands in
    mm onto the rate half.  The quadratic-form matrices are kept for modal
    analysis and governor design.
    """

    a_blocks: np.ndarray
    b_blocks: np.ndarray
    mass: np.ndarray
    stiffness: np.ndarray
    damping: np.ndarray
    load_columns: np.ndarray  # (n_free, n_slots) forces of unit commands
    free_dofs: np.ndarray  # indices into the full 6*n_nodes vector
    node_positions: np.ndarray  # (n_nodes, 3) reference positions
    node_rotations: np.ndarray  # (n_nodes, 3) reference rotation vectors
    primer_slots: tuple[PrimerSlot, ...]
    clamped_nodes: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return self.node_positions.shape[0]

    @property
    def n_free(self) -> int:
        return self.free_dofs.size

    @property
    def n_slots(self) -> int:
        return len(self.primer_slots)

    @property
    def wingtip_node(self) -> int:
        return self.n_nodes - 1

    def dof_index(self, node: int, component: int) -> int:
        """Index of (node, component) in the free increment vector."""
        full = 6 * node + component
        hits = np.nonzero(self.free_dofs == full)[0]
        if hits.size == 0:
            raise ValueError(f"dof (node {node}, component {component}) is clamped")
        return int(hits[0])

    def full_increment(self, y_free: np.ndarray) -> np.ndarray:
        """Scatter a free increment vector back onto all 6*n_nodes slots."""
        y_free = np.asarray(y_free, dtype=float)
        out = np.zeros(y_free.shape[:-1] + (6 * self.n_nodes,))
        out[..., self.free_dofs] = y_free
        return out

    def static_response(self, omega: np.ndarray) -> np.ndarray:
        """Steady free increment under constant primer commands (mm)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if omega.shape != (self.n_slots,):
            raise ValueError("omega must have one entry per primer slot")
        return np.linalg.solve(self.stiffness, self.load_columns @ omega)

    def wingtip_positions(self, states: np.ndarray) -> np.ndarray:
        """World wingtip positions for stacked state vectors (..., 2 n_free)."""
        states = np.asarray(states, dtype=float)
        disp = self.full_increment(states[..., : self.n_free])
        tip = self.wingtip_node
        return self.node_positions[tip] + disp[..., 6 * tip : 6 * tip + 3]


def _chain_nodes(elements: Sequence[ElementState]):
    """Validate chain continuity and pool the shared nodes."""
    if len(elements) == 0:
        raise ValueError("at least one element is required")
    span = max(
        float(np.linalg.norm(e.x0_b - elements[0].x0_a)) for e in elements
    )
    tol = 1e-9 * max(1.0, span)
    positions = [elements[0].x0_a.copy()]
    rotations = [elements[0].psi_a.copy()]
    for i, e in enumerate(elements):
        if i > 0:
            prev = elements[i - 1]
            if (np.linalg.norm(e.x0_a - prev.x0_b) > tol
                    or np.linalg.norm(e.psi_a - prev.psi_b) > tol):
                raise ValueError(
                    f"elements {i - 1} and {i} do not share a node; the chain "
                    "must be continuous"
                )
        positions.append(e.x0_b.copy())
        rotations.append(e.psi_b.copy())
    return np.array(positions), np.array(rotations)


def assemble(elements: Sequence[ElementState], material, placement: Iterable[PrimerSlot] = (),
             *, clamped_nodes: Sequence[int] = (0,),
             damping: tuple[float, float] = (0.0, 0.002),
             shear_integration: str = "reduced") -> AssembledStructure:
    """Chain elements into the first-order block model.

    ``material`` is either one MaterialMatrix shared by every element or a
    sequence with one entry per element.  ``placement`` lists the primer
    slots whose unit-command load columns populate ``b_blocks``.
    ``damping`` are the Rayleigh blend coefficients (alpha on mass, beta on
    stiffness, beta in seconds).
    """
    elements = list(elements)
    if isinstance(material, MaterialMatrix):
        materials = [material] * len(elements)
    else:
        materials = list(material)
        if len(materials) != len(elements):
            raise ValueError("need one material per element")

    positions, rotations = _chain_nodes(elements)
    n_nodes = positions.shape[0]
    ndof = 6 * n_nodes

    placement = tuple(placement)
    for slot in placement:
        if not 0 <= slot.element_index < len(elements):
            raise ValueError(
                f"slot element index {slot.element_index} outside the chain"
            )

    M = np.zeros((ndof, ndof))
    K = np.zeros((ndof, ndof))
    B = np.zeros((ndof, len(placement)))
    for i, (e, mat) in enumerate(zip(elements, materials)):
        idx = np.r_[6 * i : 6 * i + 6, 6 * (i + 1) : 6 * (i + 1) + 6]
        Ke = element_stiffness(e, mat, shear_integration=shear_integration)
        Ke = Ke + element_geometric(e, mat)
        Me = element_mass(e, mat)
        K[np.ix_(idx, idx)] += Ke
        M[np.ix_(idx, idx)] += Me
    for j, slot in enumerate(placement):
        i = slot.element_index
        idx = np.r_[6 * i : 6 * i + 6, 6 * (i + 1) : 6 * (i + 1) + 6]
        B[idx, j] += slot_load(elements[i], slot)

    clamped_nodes = tuple(sorted(set(int(n) for n in clamped_nodes)))
    for n in clamped_nodes:
        if not 0 <= n < n_nodes:
            raise ValueError(f"clamped node {n} outside the chain")
    clamped_mask = np.zeros(ndof, dtype=bool)
    for n in clamped_nodes:
        clamped_mask[6 * n : 6 * n + 6] = True
    free = np.nonzero(~clamped_mask)[0]

    Mf = M[np.ix_(free, free)]
    Kf = K[np.ix_(free, free)]
    Bf = B[free, :]

    cond = np.linalg.cond(Mf)
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError("degenerate inertia: reduced mass matrix is singular")

    alpha, beta = damping
    Cf = alpha * Mf + beta * Kf

    n = free.size
    Minv_K = np.linalg.solve(Mf, Kf)
    Minv_C = np.linalg.solve(Mf, Cf)
    Minv_B = np.linalg.solve(Mf, Bf) if Bf.size else np.zeros((n, 0))

    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv_K
    A[n:, n:] = -Minv_C
    Bblk = np.zeros((2 * n, len(placement)))
    Bblk[n:, :] = Minv_B

    return AssembledStructure(
        a_blocks=A,
        b_blocks=Bblk,
        mass=Mf,
        stiffness=Kf,
        damping=Cf,
        load_columns=Bf,
        free_dofs=free,
        node_positions=positions,
        node_rotations=rotations,
        primer_slots=placement,
        clamped_nodes=clamped_nodes,
    )


def natural_frequencies(structure: AssembledStructure,
                        count: int | None = None) -> np.ndarray:
    """Undamped natural frequencies in Hz, ascending."""
    from scipy.linalg import eigh

    vals = eigh(structure.stiffness, structure.mass, eigvals_only=True)
    vals = np.clip(vals, 0.0, None)
    f = np.sqrt(vals) / (2.0 * np.pi)
    return f if count is None else f[:count]


@dataclass
class MarchResult:
    """Trajectory of a linear march: times, stacked states, applied commands."""

    times: np.ndarray  # (k+1,)
    states: np.ndarray  # (k+1, 2 n_free)
    omega: np.ndarray  # (k, n_slots) zero-order-hold commands per step


def discretize(A: np.ndarray, B: np.ndarray, dt: float):
    """Exact zero-order-hold discretisation of (A, B) over one step."""
    n, m = A.shape[0], B.shape[1]
    if m == 0:
        return expm(A * dt), np.zeros((n, 0))
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    E = expm(aug * dt)
    return E[:n, :n], E[:n, n:]


def march(structure: AssembledStructure,
          omega: np.ndarray | Callable[[float], np.ndarray] | None,
          t_final: float, dt: float, x0: np.ndarray | None = None) -> MarchResult:
    """March the assembled blocks with exact zero-order-hold steps.

    ``omega`` may be None (free response), a constant command vector, or a
    callable of time evaluated at each step start.  Raises on numerical
    blow-up rather than returning garbage.
    """
    if dt <= 0.0 or t_final < dt:
        raise ValueError("march needs 0 < dt <= t_final")
    n = structure.a_blocks.shape[0]
    n_slots = structure.n_slots
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.asarray(x0, dtype=float).reshape(n).copy()

    if omega is None:
        omega_of_t = lambda t: np.zeros(n_slots)
    elif callable(omega):
        omega_of_t = omega
    else:
        const = np.atleast_1d(np.asarray(omega, dtype=float))
        if const.shape != (n_slots,):
            raise ValueError("omega must have one entry per primer slot")
        omega_of_t = lambda t: const

    Ad, Bd = discretize(structure.a_blocks, structure.b_blocks, dt)
    steps = int(round(t_final / dt))
    times = np.arange(steps + 1) * dt
    states = np.zeros((steps + 1, n))
    states[0] = x
    commands = np.zeros((steps, n_slots))

    # blow-up guard relative to the initial and forcing scales
    scale = max(1.0, float(np.linalg.norm(x)))
    for k in range(steps):
        w = np.atleast_1d(np.asarray(omega_of_t(times[k]), dtype=float))
        if w.shape != (n_slots,):
            raise ValueError("omega must have one entry per primer slot")
        commands[k] = w
        x = Ad @ x + Bd @ w
        if not np.all(np.isfinite(x)):
            raise ValueError("non-physical divergence: state became non-finite")
        if w.size:
            scale = max(scale, 1.0 + float(np.max(np.abs(w))) * 1e3)
        if np.linalg.norm(x) > 1e9 * scale:
            raise ValueError("non-physical divergence: state norm exploded")
        states[k + 1] = x
    return MarchResult(times=times, states=states, omega=commands)


def straight_chain(n_elements: int, length: float, psi: np.ndarray | None = None,
                   origin: np.ndarray | None = None) -> list[ElementState]:
    """Straight chain of equal elements with uniform orientation ``psi``.

    The chain runs along the rotated local x axis starting at ``origin``.
    """
    if n_elements < 1:
        raise ValueError("need at least one element")
    psi = np.zeros(3) if psi is None else np.asarray(psi, dtype=float)
    origin = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    axis = rotation_map(psi) @ np.array([1.0, 0.0, 0.0])
    le = length / n_elements
    elements = []
    for i in range(n_elements):
        a = origin + axis * (i * le)
        b = origin + axis * ((i + 1) * le)
        elements.append(ElementState(a, psi, b, psi, reference_length=le))
    return elements


# --- default wing -----------------------------------------------------------

# Span direction of the default wing is world +y; elements keep their local
# x axis along the span, so the uniform node rotation is +90 deg about z.
DEFAULT_WING_PSI = np.array([0.0, 0.0, np.pi / 2.0])
DEFAULT_WING_SPAN = 0.2  # m, one wing
DEFAULT_WING_ELEMENTS = 5
DEFAULT_SLOT_LEVER = 0.011  # m, chordwise lever of the actuation couple


def default_wing_material() -> MaterialMatrix:
    """Thin carbon strip, compliant for in-plane (sweep) bending."""
    return strip_material(0.0005, 0.008)


def default_wing(n_elements: int = DEFAULT_WING_ELEMENTS,
                 slot_elements: Sequence[int] | None = None, *,
                 span: float = DEFAULT_WING_SPAN,
                 gain: float = 4.15) -> AssembledStructure:
    """Cantilevered single-wing chain with primer slots on ``slot_elements``.

    The wing root (node 0) is clamped at the shoulder; slots pull along the
    span with a chordwise lever, so a positive command sweeps the outboard
    nodes backwards (negative rotation about z).
    """
    if slot_elements is None:
        slot_elements = (min(2, n_elements - 1),)
    elements = straight_chain(n_elements, span, psi=DEFAULT_WING_PSI)
    slots = tuple(
        PrimerSlot(element_index=int(i),
                   direction=(1.0, 0.0, 0.0),
                   offset=(0.0, -DEFAULT_SLOT_LEVER, 0.0),
                   gain=gain)
        for i in slot_elements
    )
    return assemble(elements, default_wing_material(), slots)


def elbow_sensitivity(structure: AssembledStructure, slot: int = 0,
                      joint_node: int | None = None) -> float:
    """Static in-plane fold angle change per mm of primer command, deg/mm.

    The fold angle is the relative nodal rotation about world z across the
    slot's element, measured from the static response to a unit command.
    """
    if not 0 <= slot < structure.n_slots:
        raise ValueError("slot index outside the placement")
    omega = np.zeros(structure.n_slots)
    omega[slot] = 1.0
    y = structure.static_response(omega)
    e = structure.primer_slots[slot].element_index
    node_a, node_b = e, e + 1
    if joint_node is not None:
        node_a, node_b = joint_node, joint_node + 1
    rz_a = y[structure.dof_index(node_a, 5)] if node_a not in structure.clamped_nodes else 0.0
    rz_b = y[structure.dof_index(node_b, 5)]
    return float(np.degrees(rz_b - rz_a))
