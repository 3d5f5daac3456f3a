import numpy as np
import pytest

from tramor import fom, integrators, offline, rom
from tramor.numerics import PERIODIC_SHIFT, TransformFamily


@pytest.fixture(scope="session")
def ade():
    """Periodic advection-diffusion truth and its rank-2 shifted POD."""
    model = fom.advection_diffusion()
    spec = integrators.IntegratorSpec()
    truth = fom.integrate_fom(model, spec, 1.0)
    fam = TransformFamily(PERIODIC_SHIFT, model.grid)
    dec = offline.compute_spod_single_frame(truth, truth.times, fam, 2)
    return {"model": model, "spec": spec, "truth": truth, "fam": fam, "dec": dec}


@pytest.fixture(scope="session")
def advection_exact():
    """Pure advection with lattice-aligned samples and its exact one-mode decomposition."""
    model = fom.advection_diffusion(mu=0.0)
    g = model.grid
    fam = TransformFamily(PERIODIC_SHIFT, g)
    times = np.arange(41) * g.dxi
    states = np.stack([fam.apply(t, model.initial_condition) for t in times])
    snap = fom.SnapshotSet.from_states(g, times, states, "exact advection")
    dec = offline.compute_spod_single_frame(snap, times, fam, 1)
    return {"model": model, "fam": fam, "snap": snap, "dec": dec}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(sys, rng, scale=1.0):
    return rom.RomState(0.0, scale * rng.standard_normal(sys.r), 0.3 * rng.standard_normal(sys.q))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
