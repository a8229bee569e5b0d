"""Tests for the geometrically exact rod element module."""

import numpy as np
import pytest

from morphmav import structure as st


def unit_material() -> st.MaterialMatrix:
    return st.MaterialMatrix(
        diag_entries=(1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
        density=1.0,
        cross_section_area=1.0,
        rotary_inertia=(0.1, 0.05, 0.05),
    )


def bounded_rotation(rng, scale):
    psi = rng.normal(size=3) * scale
    n = np.linalg.norm(psi)
    return psi if n < 2.8 else psi * (2.8 / n)


def random_element(rng, rot_scale=0.8):
    a = rng.normal(size=3)
    b = a + rng.normal(size=3) + np.array([1.5, 0.0, 0.0])
    return st.ElementState(a, bounded_rotation(rng, rot_scale),
                           b, bounded_rotation(rng, rot_scale))


# --- interpolation -----------------------------------------------------------

def test_interpolation_endpoints_and_midpoint():
    assert st.interpolation(0.0, 2.0) == (0.0, 1.0)
    assert st.interpolation(2.0, 2.0) == (1.0, 0.0)
    assert st.interpolation(1.0, 2.0) == (0.5, 0.5)


def test_interpolation_weights_sum_to_one():
    for sigma in np.linspace(0.0, 0.37, 11):
        n1, n2 = st.interpolation(sigma, 0.37)
        assert n1 + n2 == pytest.approx(1.0, abs=1e-15)


def test_interpolation_rejects_out_of_range():
    with pytest.raises(ValueError):
        st.interpolation(-0.1, 1.0)
    with pytest.raises(ValueError):
        st.interpolation(1.1, 1.0)


# --- rotation and tangent maps ----------------------------------------------

def test_rotation_map_identity():
    assert np.allclose(st.rotation_map(np.zeros(3)), np.eye(3))


def test_rotation_map_quarter_turn_about_first_axis():
    R = st.rotation_map(np.array([np.pi / 2.0, 0.0, 0.0]))
    expected = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    assert np.allclose(R, expected, atol=1e-14)


def test_rotation_map_orthogonality():
    rng = np.random.default_rng(3)
    for _ in range(50):
        psi = rng.normal(size=3)
        psi *= min(1.0, 3.0 / np.linalg.norm(psi))
        R = st.rotation_map(psi)
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rotation_map_branch_error():
    with pytest.raises(ValueError, match="rotation branch"):
        st.rotation_map(np.array([np.pi, 0.0, 0.0]))


def test_log_map_inverts_rotation_map():
    rng = np.random.default_rng(4)
    for _ in range(50):
        psi = rng.normal(size=3)
        psi *= min(1.0, 3.0 / np.linalg.norm(psi))
        back = st.log_map(st.rotation_map(psi))
        assert np.allclose(back, psi, atol=1e-12)


def test_tangent_map_identity_at_zero():
    assert np.allclose(st.tangent_map(np.zeros(3)), np.eye(3))


def _tangent_series(psi, order):
    # truncated alternating series sum_n (-1)^n/(n+1)! hat(psi)^n
    P = st._hat(np.asarray(psi, dtype=float))
    out = np.eye(3)
    term = np.eye(3)
    fact = 1.0
    for n in range(1, order + 1):
        term = term @ P
        fact *= n + 1
        out = out + ((-1.0) ** n / fact) * term
    return out


def test_tangent_map_matches_high_order_series():
    # the alternating series converges to machine precision well before
    # order 30 at |psi| = pi/2
    psi = np.array([np.pi / 2.0, 0.0, 0.0])
    assert np.max(np.abs(st.tangent_map(psi) - _tangent_series(psi, 30))) < 1e-10

    rng = np.random.default_rng(5)
    for _ in range(20):
        p = rng.normal(size=3)
        p *= min(1.0, 2.0 / np.linalg.norm(p))
        assert np.max(np.abs(st.tangent_map(p) - _tangent_series(p, 30))) < 1e-10


def test_tangent_map_finite_difference_consistency():
    # omega_body dt = log(R(psi)^T R(psi + dpsi dt)) to O(dt^2)
    rng = np.random.default_rng(6)
    h = 1e-6
    for _ in range(20):
        psi = rng.normal(size=3) * 0.6
        dpsi = rng.normal(size=3)
        R0 = st.rotation_map(psi)
        R1 = st.rotation_map(psi + h * dpsi)
        omega_fd = st.log_map(R0.T @ R1) / h
        omega_tm = st.tangent_map(psi) @ dpsi
        assert np.allclose(omega_fd, omega_tm, atol=1e-5 * max(1.0, np.linalg.norm(dpsi)))


def test_tangent_map_derivative_finite_difference():
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(20):
        psi = rng.normal(size=3) * 0.6
        d = rng.normal(size=3)
        fd = (st.tangent_map(psi + h * d) - st.tangent_map(psi - h * d)) / (2 * h)
        assert np.max(np.abs(fd - st.tangent_map_derivative(psi, d))) < 1e-8


def test_tangent_map_branch_error():
    with pytest.raises(ValueError, match="rotation branch"):
        st.tangent_map(np.array([0.0, np.pi, 0.0]))


# --- strain measures ---------------------------------------------------------

def test_axial_strain_reference_element():
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([0.5, 0.0, 0.0]), np.zeros(3))
    for sigma in (0.0, 0.2, 0.5):
        assert np.allclose(st.axial_strain(e, sigma), [1.0, 0.0, 0.0], atol=1e-14)


def test_axial_strain_uniform_stretch():
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([0.55, 0.0, 0.0]),
                        np.zeros(3), reference_length=0.5)
    assert np.allclose(st.axial_strain(e, 0.25), [1.1, 0.0, 0.0], atol=1e-14)


def test_axial_strain_invariant_under_rigid_transform():
    rng = np.random.default_rng(8)
    e = random_element(rng)
    R0 = st.rotation_map(rng.normal(size=3) * 0.5)
    t0 = rng.normal(size=3)
    e2 = st.ElementState(
        R0 @ e.x0_a + t0, st.log_map(R0 @ st.rotation_map(e.psi_a)),
        R0 @ e.x0_b + t0, st.log_map(R0 @ st.rotation_map(e.psi_b)),
        reference_length=e.length,
    )
    for sigma in (0.0, 0.3 * e.length, e.length):
        assert np.allclose(st.axial_strain(e, sigma), st.axial_strain(e2, sigma), atol=1e-12)


def test_curvature_zero_for_equal_orientations():
    psi = np.array([0.2, -0.1, 0.4])
    R = st.rotation_map(psi)
    e = st.ElementState(np.zeros(3), psi, R @ np.array([0.3, 0.0, 0.0]), psi)
    assert np.allclose(st.curvature(e, 0.15), np.zeros(3), atol=1e-14)


def test_curvature_small_twist():
    delta = 1e-4
    l = 0.25
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([l, 0.0, 0.0]),
                        np.array([delta, 0.0, 0.0]))
    k = st.curvature(e, 0.1)
    assert np.allclose(k, [delta / l, 0.0, 0.0], atol=1e-10)


def test_curvature_magnitude_invariant_under_rigid_rotation():
    rng = np.random.default_rng(9)
    e = random_element(rng)
    R0 = st.rotation_map(rng.normal(size=3) * 0.7)
    e2 = st.ElementState(
        R0 @ e.x0_a, st.log_map(R0 @ st.rotation_map(e.psi_a)),
        R0 @ e.x0_b, st.log_map(R0 @ st.rotation_map(e.psi_b)),
        reference_length=e.length,
    )
    s = 0.4 * e.length
    assert np.linalg.norm(st.curvature(e, s)) == pytest.approx(
        np.linalg.norm(st.curvature(e2, s)), abs=1e-12)


# --- stiffness integrand -----------------------------------------------------

def test_kappa1_zero_material_limit():
    # entries must be positive, so take the limit with tiny stiffness
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([1.0, 0.0, 0.0]), np.zeros(3))
    tiny = st.MaterialMatrix((1e-30,) * 6, 1.0, 1.0)
    assert np.max(np.abs(st.kappa1(e, tiny, 0.5))) < 1e-28


def test_kappa1_symmetric_and_psd_random_elements():
    rng = np.random.default_rng(10)
    for _ in range(100):
        e = random_element(rng)
        diag = tuple(rng.uniform(0.5, 20.0, size=6))
        mat = st.MaterialMatrix(diag, 1.0, 1.0)
        k = st.kappa1(e, mat, rng.uniform(0.0, 1.0) * e.length)
        assert np.max(np.abs(k - k.T)) < 1e-10
        assert np.linalg.eigvalsh(k).min() >= -1e-10


def test_kappa1_matches_classical_rod_integrand_at_reference():
    # straight untwisted element: the integrand must agree with the textbook
    # linear Timoshenko rod B^T E B with shear strains (v' - theta_z, w' + theta_y)
    l = 0.8
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([l, 0.0, 0.0]), np.zeros(3))
    diag = np.array([3.0, 1.5, 1.5, 0.7, 2.2, 0.9])
    mat = st.MaterialMatrix(tuple(diag), 1.0, 1.0)
    for sigma in (0.1, 0.5 * l, 0.73 * l):
        n1, n2 = st.interpolation(sigma, l)
        B = np.zeros((6, 12))
        for i in range(3):  # d(gamma) rows: translation gradients
            B[i, i] = -1.0 / l
            B[i, 6 + i] = 1.0 / l
        # gamma shear coupling: +theta x e1 -> (0, -theta_z, +theta_y)
        B[1, 5] = -n2
        B[1, 11] = -n1
        B[2, 4] = n2
        B[2, 10] = n1
        for i in range(3):  # curvature rows: rotation gradients
            B[3 + i, 3 + i] = -1.0 / l
            B[3 + i, 9 + i] = 1.0 / l
        expected = B.T @ np.diag(diag) @ B
        assert np.allclose(st.kappa1(e, mat, sigma), expected, atol=1e-12)


# --- element increments ------------------------------------------------------

def test_element_increments_zero_input():
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([1.0, 0.0, 0.0]), np.zeros(3))
    d1, d2, d3 = st.element_increments(e, unit_material(), np.zeros(12),
                                       np.zeros(12), np.zeros(12))
    assert np.allclose(d1, 0.0) and np.allclose(d2, 0.0) and np.allclose(d3, 0.0)


def test_rigid_translation_increment_gives_zero_elastic_force():
    rng = np.random.default_rng(11)
    mat = unit_material()
    for _ in range(50):
        e = random_element(rng)
        dx = rng.normal(size=3)
        dy = np.concatenate([dx, np.zeros(3), dx, np.zeros(3)])
        d1, _, _ = st.element_increments(e, mat, dy)
        scale = np.linalg.norm(st.element_stiffness(e, mat)) * np.linalg.norm(dy)
        assert np.linalg.norm(d1) < 1e-9 * scale


def test_rigid_rotation_increment_gives_zero_elastic_force():
    # exact for elements whose reference orientation is uniform
    rng = np.random.default_rng(12)
    mat = unit_material()
    for _ in range(50):
        psi = rng.normal(size=3) * 0.9
        R = st.rotation_map(psi)
        a = rng.normal(size=3)
        b = a + R @ np.array([0.6, 0.0, 0.0])
        e = st.ElementState(a, psi, b, psi)
        w = rng.normal(size=3)
        dy = np.concatenate([np.cross(w, a), R.T @ w, np.cross(w, b), R.T @ w])
        d1, _, _ = st.element_increments(e, mat, dy)
        scale = np.linalg.norm(st.element_stiffness(e, mat)) * np.linalg.norm(dy)
        assert np.linalg.norm(d1) < 1e-9 * scale


def test_elastic_force_covariant_under_rigid_transform():
    rng = np.random.default_rng(13)
    mat = unit_material()
    for _ in range(20):
        e = random_element(rng, rot_scale=0.6)
        dy = rng.normal(size=12) * 0.01
        d1, _, _ = st.element_increments(e, mat, dy)
        R0 = st.rotation_map(rng.normal(size=3) * 0.5)
        t0 = rng.normal(size=3)
        e2 = st.ElementState(
            R0 @ e.x0_a + t0, st.log_map(R0 @ st.rotation_map(e.psi_a)),
            R0 @ e.x0_b + t0, st.log_map(R0 @ st.rotation_map(e.psi_b)),
            reference_length=e.length,
        )
        D = np.eye(12)
        D[0:3, 0:3] = R0
        D[6:9, 6:9] = R0
        d1_rot, _, _ = st.element_increments(e2, mat, D @ dy)
        assert np.linalg.norm(d1_rot - D @ d1) < 1e-9 * max(np.linalg.norm(d1), 1e-12)


def test_slot_load_column_structure():
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([0.4, 0.0, 0.0]), np.zeros(3))
    slot = st.PrimerSlot(element_index=0, direction=(1.0, 0.0, 0.0),
                         offset=(0.0, 0.0, 0.0), gain=2.0)
    _, _, d3 = st.element_increments(e, unit_material(), np.zeros(12),
                                     primer_loads=[(slot, 1.0)])
    # pure axial pull, no lever: force rows only, equal and opposite
    assert d3[0] == pytest.approx(2.0)
    assert d3[6] == pytest.approx(-2.0)
    assert np.allclose(np.delete(d3, [0, 6]), 0.0)

    lever = st.PrimerSlot(element_index=0, direction=(1.0, 0.0, 0.0),
                          offset=(0.0, -0.01, 0.0), gain=2.0)
    _, _, d3l = st.element_increments(e, unit_material(), np.zeros(12),
                                      primer_loads=[(lever, 1.0)])
    # lever adds a self-equilibrated moment couple about z
    assert d3l[5] == pytest.approx(0.02)
    assert d3l[11] == pytest.approx(-0.02)
    assert np.sum(d3l[[0, 6]]) == pytest.approx(0.0, abs=1e-15)


def test_slot_load_scales_linearly_with_command():
    e = st.ElementState(np.zeros(3), np.zeros(3), np.array([0.4, 0.0, 0.0]), np.zeros(3))
    slot = st.PrimerSlot(element_index=0, offset=(0.0, -0.01, 0.0))
    _, _, one = st.element_increments(e, unit_material(), np.zeros(12),
                                      primer_loads=[(slot, 1.0)])
    _, _, haf = st.element_increments(e, unit_material(), np.zeros(12),
                                      primer_loads=[(slot, 0.5)])
    assert np.allclose(haf, 0.5 * one)


# --- assembly ----------------------------------------------------------------

def test_assemble_single_element_state_dimension():
    elems = st.straight_chain(1, 0.3)
    s = st.assemble(elems, unit_material())
    assert s.a_blocks.shape == (12, 12)
    assert s.n_nodes == 2
    assert s.n_free == 6


def test_assemble_rejects_discontinuous_chain():
    e1 = st.ElementState(np.zeros(3), np.zeros(3), np.array([0.3, 0, 0]), np.zeros(3))
    e2 = st.ElementState(np.array([0.31, 0, 0]), np.zeros(3), np.array([0.6, 0, 0]), np.zeros(3))
    with pytest.raises(ValueError, match="continuous"):
        st.assemble([e1, e2], unit_material())


def test_assemble_degenerate_inertia():
    elems = st.straight_chain(2, 0.3)
    no_rotary = st.MaterialMatrix((1.0,) * 6, 1.0, 1.0, rotary_inertia=(0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="degenerate inertia"):
        st.assemble(elems, no_rotary)


def test_placement_changes_b_blocks_only():
    sA = st.default_wing(slot_elements=(1,))
    sB = st.default_wing(slot_elements=(3,))
    assert np.array_equal(sA.a_blocks, sB.a_blocks)
    assert not np.allclose(sA.b_blocks, sB.b_blocks)


def test_stiffness_only_material_change_keeps_b_blocks():
    elems = st.straight_chain(3, st.DEFAULT_WING_SPAN, psi=st.DEFAULT_WING_PSI)
    mat = st.default_wing_material()
    slots = (st.PrimerSlot(element_index=1, offset=(0.0, -0.01, 0.0)),)
    s1 = st.assemble(elems, mat, slots)
    s2 = st.assemble(elems, mat.scaled_stiffness(4.0), slots)
    assert np.allclose(s1.b_blocks, s2.b_blocks)
    assert not np.allclose(s1.a_blocks, s2.a_blocks)


def test_stiffness_scaling_doubles_frequencies():
    elems = st.straight_chain(4, st.DEFAULT_WING_SPAN, psi=st.DEFAULT_WING_PSI)
    mat = st.default_wing_material()
    f1 = st.natural_frequencies(st.assemble(elems, mat, ()))
    f2 = st.natural_frequencies(st.assemble(elems, mat.scaled_stiffness(4.0), ()))
    assert np.allclose(f2, 2.0 * f1, rtol=1e-10)


def analytic_cantilever_f1(material: st.MaterialMatrix, span: float) -> float:
    # first clamped-free mode of a thin uniform rod, soft bending direction
    beta_l = 1.875104068711961
    ei = min(material.bending_y, material.bending_z)
    return (beta_l**2 / (2.0 * np.pi)) * np.sqrt(
        ei / (material.mass_per_length * span**4))


def test_cantilever_first_frequency_converges():
    mat = st.default_wing_material()
    f_ref = analytic_cantilever_f1(mat, st.DEFAULT_WING_SPAN)
    errs = []
    for n in (4, 8, 16):
        elems = st.straight_chain(n, st.DEFAULT_WING_SPAN, psi=st.DEFAULT_WING_PSI)
        s = st.assemble(elems, mat, ())
        f = st.natural_frequencies(s, 1)[0]
        errs.append(abs(f - f_ref) / f_ref)
    assert errs[0] < 0.05
    assert errs[1] <= 0.5 * errs[0]
    assert errs[2] <= 0.5 * errs[1]


def test_full_integration_locks_thin_elements():
    # with full shear quadrature the thin strip locks; the reduced rule is
    # what keeps the coarse mesh usable
    mat = st.default_wing_material()
    f_ref = analytic_cantilever_f1(mat, st.DEFAULT_WING_SPAN)
    elems = st.straight_chain(4, st.DEFAULT_WING_SPAN, psi=st.DEFAULT_WING_PSI)
    locked = st.assemble(elems, mat, (), shear_integration="full")
    f_locked = st.natural_frequencies(locked, 1)[0]
    assert f_locked > 3.0 * f_ref


# --- march -------------------------------------------------------------------

def test_march_stays_at_rest_without_input():
    s = st.default_wing(3)
    res = st.march(s, None, 0.2, 1e-3)
    assert np.allclose(res.states, 0.0)


def test_march_step_command_reaches_static_response():
    s = st.default_wing(3)
    omega = np.array([0.4])
    res = st.march(s, omega, 12.0, 2e-3)
    y_inf = s.static_response(omega)
    y_end = res.states[-1][: s.n_free]
    assert np.linalg.norm(y_end - y_inf) < 1e-4 * np.linalg.norm(y_inf)
    assert np.linalg.norm(res.states[-1][s.n_free:]) < 1e-4 * np.linalg.norm(y_inf)


def test_march_sinusoid_settles_to_closed_wingtip_loop():
    s = st.default_wing()
    freq = 2.5  # an exact number of steps per period
    omega = lambda t: np.array([0.5 * np.sin(2.0 * np.pi * freq * t)])
    dt = 1e-3
    period = int(round(1.0 / freq / dt))
    res = st.march(s, omega, 6.0, dt)
    tips = s.wingtip_positions(res.states)
    last = tips[-period:]
    prev = tips[-2 * period : -period]
    drift = np.max(np.linalg.norm(last - prev, axis=1))
    assert drift < 1e-4 * max(np.max(np.linalg.norm(tips, axis=1)), 1.0)


def test_march_detects_divergence():
    unstable = st.AssembledStructure(
        a_blocks=np.array([[0.0, 1.0], [400.0, 0.0]]),
        b_blocks=np.zeros((2, 0)),
        mass=np.eye(1), stiffness=-np.eye(1) * 400.0, damping=np.zeros((1, 1)),
        load_columns=np.zeros((1, 0)),
        free_dofs=np.array([6]),
        node_positions=np.zeros((2, 3)), node_rotations=np.zeros((2, 3)),
        primer_slots=(), clamped_nodes=(0,),
    )
    with pytest.raises(ValueError, match="non-physical divergence"):
        st.march(unstable, None, 120.0, 0.05, x0=np.array([1.0, 0.0]))


def test_march_matches_exact_discretization():
    s = st.default_wing(2)
    dt = 5e-4
    res = st.march(s, np.array([0.2]), 10 * dt, dt)
    Ad, Bd = st.discretize(s.a_blocks, s.b_blocks, dt)
    x = np.zeros(s.a_blocks.shape[0])
    for _ in range(10):
        x = Ad @ x + Bd @ np.array([0.2])
    assert np.allclose(res.states[-1], x, atol=1e-14)


# --- default wing ------------------------------------------------------------

def test_default_wing_elbow_sensitivity_sign_and_scale():
    sens = st.elbow_sensitivity(st.default_wing())
    assert sens < 0.0
    assert -45.0 < sens < -20.0


def test_static_response_matches_negative_a_inverse_b():
    s = st.default_wing()
    omega = np.array([0.7])
    # steady state of the first-order blocks; the solve through a_blocks is
    # worse conditioned than the stiffness solve, so compare at 1e-9 relative
    rhs = -np.linalg.solve(s.a_blocks, s.b_blocks @ omega)
    y = s.static_response(omega)
    tol = 1e-9 * np.linalg.norm(y)
    assert np.allclose(rhs[: s.n_free], y, atol=tol)
    assert np.allclose(rhs[s.n_free:], 0.0, atol=tol)
