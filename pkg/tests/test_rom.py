import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from oracles import trapezoid_linear
from tramor import fom, offline, rom
from tramor.integrators import IntegratorSpec
from tramor.numerics import IDENTITY, TransformFamily, gram, project


@pytest.fixture(scope="module")
def systems(ade):
    dec = ade["dec"]
    fast = rom.RomSystem(ade["model"], dec.frames)
    slow = rom.RomSystem(ade["model"], dec.frames, use_shortcuts=False)
    return fast, slow


@pytest.fixture(scope="module")
def burgers_systems():
    model = fom.burgers()
    truth = fom.integrate_fom(model, IntegratorSpec(), 0.5)
    path = offline.estimate_path(truth)
    fam = TransformFamily("periodic_shift", model.grid)
    dec = offline.compute_spod_single_frame(truth, path, fam, 3)
    return rom.RomSystem(model, dec.frames), rom.RomSystem(model, dec.frames, use_shortcuts=False)


def test_shortcuts_selected(systems):
    fast, slow = systems
    assert fast.shortcuts is not None and slow.shortcuts is None


def test_mass_blocks_symmetric(systems, rng):
    _, slow = systems
    for _ in range(5):
        b = rom.assemble_mass_blocks(slow, rng.uniform(-2, 2, 1))
        assert np.allclose(b.M_alpha, b.M_alpha.T, atol=1e-14)
        assert np.allclose(b.M_p, b.M_p.T, atol=1e-14)
        assert np.all(np.linalg.eigvalsh(b.full()) > -1e-10)


def _compare(fast, slow, s, atol):
    bf, bs = rom.assemble_mass_blocks(fast, s.p), rom.assemble_mass_blocks(slow, s.p)
    for name in ("M_alpha", "N", "M_p"):
        a, b = getattr(bf, name), getattr(bs, name)
        assert np.allclose(a, b, rtol=0, atol=atol * max(1.0, np.max(np.abs(b))))
    for a, b in zip(rom.assemble_rhs(fast, s), rom.assemble_rhs(slow, s)):
        assert np.allclose(a, b, rtol=0, atol=atol * max(1.0, np.max(np.abs(b))))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(-400, 400))
def test_shortcuts_match_direct_on_lattice(systems, seed, k):
    fast, slow = systems
    s = random_state(fast, np.random.default_rng(seed))
    s.p[:] = k * fast.model.grid.dxi
    _compare(fast, slow, s, 1e-8)
    va, vb = rom.rom_velocity(fast, s), rom.rom_velocity(slow, s)
    assert np.allclose(np.concatenate(va), np.concatenate(vb), atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_shortcuts_match_direct_off_lattice(systems, seed):
    # only the interpolation error of the off-lattice shift separates the two
    fast, slow = systems
    s = random_state(fast, np.random.default_rng(seed))
    _compare(fast, slow, s, 1e-4)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(-400, 400))
def test_burgers_shortcuts_match_direct_on_lattice(burgers_systems, seed, k):
    fast, slow = burgers_systems
    s = random_state(fast, np.random.default_rng(seed))
    s.p[:] = k * fast.model.grid.dxi
    _compare(fast, slow, s, 1e-8)


def test_shortcuts_rejected_for_wave():
    m = fom.linear_wave()
    fam = TransformFamily("periodic_shift", m.grid)
    fr = rom.RomFrame(fam, np.ones((1, 2, m.grid.n)))
    with pytest.raises(rom.UnsupportedConfigurationError):
        rom.RomSystem(m, [fr], use_shortcuts=True)


def test_separable_parameter_dependence(systems, rng):
    _, slow = systems
    s = random_state(slow, rng)
    f = lambda c, mu: np.concatenate(rom.assemble_rhs(slow.with_params(c=c, mu=mu), s))
    assert np.allclose(f(2.0, 0.003), 2.0 * f(1.0, 0.0) + 3.0 * f(0.0, 0.001) - 2.0 * f(0.0, 0.0), atol=1e-10)


def test_advection_forcing_is_transport_term(advection_exact, rng):
    sys = rom.RomSystem(advection_exact["model"].with_params(c=1.7), advection_exact["dec"].frames, use_shortcuts=False)
    s = random_state(sys, rng)
    b = rom.assemble_mass_blocks(sys, s.p)
    fa, _ = rom.assemble_rhs(sys, s)
    assert np.allclose(fa, 1.7 * b.N @ sys.D(s.alpha) @ np.ones(1), atol=1e-10)


def test_pure_advection_velocities(advection_exact):
    dec = advection_exact["dec"]
    for direct in (False, True):
        sys = rom.RomSystem(advection_exact["model"], dec.frames, use_shortcuts=not direct)
        st0 = rom.initial_state(sys, dec).state
        adot, pdot = rom.rom_velocity(sys, rom.RomState(0.0, st0.alpha, [0.37]))
        assert abs(pdot[0] - 1.0) < 1e-8
        assert np.max(np.abs(adot)) < 1e-8


def test_pure_advection_trajectory(advection_exact):
    dec = advection_exact["dec"]
    sys = rom.RomSystem(advection_exact["model"], dec.frames)
    st0 = rom.initial_state(sys, dec).state
    traj = rom.integrate_rom(sys, st0, IntegratorSpec(), 1.0)
    assert np.allclose(traj.paths[0], traj.times, atol=1e-10)
    assert np.max(traj.residual_norms) < 1e-8


def test_residual_velocity_is_minimal(systems, rng):
    _, slow = systems
    s = random_state(slow, rng)
    adot, pdot = rom.rom_velocity(slow, s)
    best = rom.residual_norm(slow, s, adot, pdot)
    for _ in range(100):
        da = 1e-3 * rng.standard_normal(slow.r)
        dp = 1e-3 * rng.standard_normal(slow.q)
        assert rom.residual_norm(slow, s, adot + da, pdot + dp) >= best - 1e-12


@pytest.mark.parametrize("phase,key", [("residual", "psi_res"), ("freeze", "psi_freeze"), ("freeze_reduced", "psi_freeze_reduced")])
def test_each_phase_condition_holds_for_its_velocity(ade, phase, key, rng):
    sys = rom.RomSystem(ade["model"], ade["dec"].frames, phase=phase)
    s = random_state(sys, rng)
    adot, pdot = rom.rom_velocity(sys, s)
    vals = rom.phase_condition_values(sys, s, p_dot=pdot)
    assert np.allclose(vals["alpha_dot"], adot, atol=1e-10)
    assert np.max(np.abs(vals[key])) < 1e-10 * max(1.0, np.max(np.abs(pdot)))


def test_phase_condition_identity(systems, rng):
    fast, _ = systems
    for _ in range(100):
        s = random_state(fast, rng)
        v = rom.phase_condition_values(fast, s, p_dot=rng.standard_normal(1))
        assert np.allclose(v["psi_res"], v["psi_freeze"] - v["psi_freeze_reduced"], atol=1e-10)


def test_freeze_reduced_minimizes_coefficient_velocity(ade, rng):
    sys = rom.RomSystem(ade["model"], ade["dec"].frames, phase="freeze_reduced")
    s = random_state(sys, rng)
    adot, pdot = rom.rom_velocity(sys, s)
    best = np.linalg.norm(adot)
    for dp in np.linspace(-0.5, 0.5, 41):
        other = rom.phase_condition_values(sys, s, p_dot=pdot + dp)["alpha_dot"]
        assert np.linalg.norm(other) >= best - 1e-12


def test_frozen_rom_equals_prescribed_path_rom(ade):
    dec = ade["dec"]
    sys = rom.RomSystem(ade["model"], dec.frames)
    st0 = rom.initial_state(sys, dec).state
    path = rom.AffinePath(0.0, 1.0)
    a = rom.integrate_frozen_rom(sys, st0, path, IntegratorSpec(), 1.0)
    b = rom.integrate_rom(sys, st0, IntegratorSpec(), 1.0, path=path)
    assert np.max(np.abs(a.alphas - b.alphas)) < 1e-10
    assert np.array_equal(a.paths, b.paths)


def test_identity_frame_is_galerkin_pod(ade):
    truth, model = ade["truth"], ade["model"]
    dec = offline.compute_pod(truth, 5)
    sys = rom.RomSystem(model, dec.frames)
    assert sys.q == 0
    phi = dec.frames[0].modes
    g = model.grid
    a0 = project(phi, model.initial_condition, g)
    st0 = rom.initial_state(sys, dec).state
    assert np.allclose(st0.alpha, a0, atol=1e-13)
    red = np.stack([project(phi, model.rhs(0, ph), g) for ph in phi], axis=1)
    traj = rom.integrate_rom(sys, st0, IntegratorSpec(), 1.0)
    ref = trapezoid_linear(red, a0, 5e-3, 200)
    assert np.max(np.abs(traj.alphas.T - ref)) < 1e-9


def test_initial_projection_of_exact_advection(advection_exact):
    dec = advection_exact["dec"]
    sys = rom.RomSystem(advection_exact["model"], dec.frames)
    proj = rom.initial_state(sys, dec)
    assert proj.j_iv < 1e-13
    assert np.allclose(proj.state.alpha, dec.frames[0].coefficients[:, 0], atol=1e-12)


def test_initial_coefficients_nonzero(ade):
    sys = rom.RomSystem(ade["model"], ade["dec"].frames)
    assert np.all(np.abs(rom.initial_state(sys, ade["dec"]).state.alpha) > 0)


def test_initial_path_refinement_recovers_offset(advection_exact):
    dec = advection_exact["dec"]
    sys = rom.RomSystem(advection_exact["model"], dec.frames)
    z0 = advection_exact["fam"].apply(0.013, advection_exact["model"].initial_condition)
    plain = rom.project_initial_condition(sys, z0, [0.0])
    refined = rom.project_initial_condition(sys, z0, [0.0], refine_path=True)
    assert refined.j_iv < 0.05 * plain.j_iv
    assert refined.state.p[0] == pytest.approx(0.013, abs=1e-4)


def test_zero_coefficient_is_degenerate(systems):
    fast, _ = systems
    s = rom.RomState(0.0, np.zeros(fast.r), [0.0])
    with pytest.raises(rom.DegenerateMassError, match="regularization"):
        rom.rom_velocity(fast, s)
    reg = rom.RomSystem(fast.model, fast.frames, regularization=1e-8)
    adot, pdot = rom.rom_velocity(reg, s)
    assert reg.degeneracy_flag and np.all(np.isfinite(pdot))


def test_path_count_checked(systems):
    with pytest.raises(Exception):
        systems[1].transformed_modes(np.zeros(2))


def test_reconstruct_trajectory_range(ade):
    sys = rom.RomSystem(ade["model"], ade["dec"].frames)
    st0 = rom.initial_state(sys, ade["dec"]).state
    traj = rom.integrate_rom(sys, st0, IntegratorSpec(), 0.1)
    with pytest.raises(ValueError):
        rom.reconstruct_trajectory(sys, traj, [0.2])
    rec = rom.reconstruct_trajectory(sys, traj)
    assert rec.m == traj.times.size
