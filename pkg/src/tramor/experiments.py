"""Config-driven pipeline stages and the named reproduction recipes."""

import copy
import logging
import time

import numpy as np

from . import analysis, fom, offline, rom
from .config import parse_config
from .integrators import IntegratorSpec
from .io import read_path_csv
from .numerics import IDENTITY, VIRTUAL_SHIFT, TransformFamily, virtual_grid_for

logger = logging.getLogger(__name__)


def integrator_spec(ic):
    return IntegratorSpec(scheme=ic.scheme, tau=ic.tau, rel_tol=ic.rel_tol, abs_tol=ic.abs_tol)


def build_model(mc):
    ic = mc.ic
    if mc.kind in (fom.ADVECTION, fom.ADVECTION_DIFFUSION):
        m = fom.advection_diffusion(c=mc.c, mu=mc.mu, n=mc.n, center=ic.center, width=ic.width)
        return m if mc.kind == m.kind else fom.FomModel(mc.kind, m.grid, m.initial_condition, c=mc.c, mu=mc.mu)
    if mc.kind == fom.BURGERS:
        return fom.burgers(mu=mc.mu, n=mc.n, center=ic.center, width=ic.width, sign=ic.sign)
    if mc.kind == fom.LINEAR_WAVE:
        return fom.linear_wave(n=mc.n, center=ic.center, width=ic.width)
    return fom.advection_diffusion_dn(dxi=mc.dxi, c=mc.c, mu=mc.mu)


def _sample_times(cfg, model):
    t_end = cfg.model.t_end
    if cfg.fom.samples is not None:
        return np.linspace(0.0, t_end, cfg.fom.samples)
    if cfg.fom.source == "analytic":
        return np.linspace(0.0, t_end, int(round(t_end / model.grid.dxi)) + 1)
    spec = integrator_spec(cfg.fom.integrator)
    if spec.adaptive:
        return np.linspace(0.0, t_end, int(round(t_end / spec.tau)) + 1)
    return None


def simulate(cfg, model=None):
    """Snapshots of the configured model, simulated or from the closed form."""
    model = build_model(cfg.model) if model is None else model
    times = _sample_times(cfg, model)
    if cfg.fom.source == "analytic":
        if model.kind != fom.LINEAR_WAVE:
            raise ValueError("an analytic source is only available for the linear wave model")
        return fom.analytic_wave_snapshots(model.initial_condition[0], model.grid, times)
    return fom.integrate_fom(model, integrator_spec(cfg.fom.integrator), cfg.model.t_end, times=times)


def _frame_path(fc, snap):
    if fc.path == "analytic":
        return fc.velocity * snap.times
    if fc.path == "estimated":
        return offline.estimate_path(snap)
    t, p = read_path_csv(fc.file)
    return np.interp(snap.times, t, p[0])


def _family(fc, model, path):
    if fc.transform == VIRTUAL_SHIFT:
        vg = virtual_grid_for(model.grid, path)
        return TransformFamily(VIRTUAL_SHIFT, model.grid, vg, diff_order="D1_2nd")
    order = "D1_6th" if model.grid.periodic else "D1_2nd"
    return TransformFamily(fc.transform, model.grid, diff_order=order)


def decompose(cfg, snap, model):
    """POD or shifted POD according to the offline block."""
    oc = cfg.offline
    if oc.method == "pod":
        return offline.compute_pod(snap, sum(f.rank for f in oc.frames))
    specs = []
    for fc in oc.frames:
        path = _frame_path(fc, snap)
        specs.append((_family(fc, model, path), path, fc.rank))
    if len(specs) == 1:
        fam, path, r = specs[0]
        if fam.kind == IDENTITY:
            return offline.compute_pod(snap, r)
        return offline.compute_spod_single_frame(snap, path, fam, r, hidden_weight=oc.hidden_weight)
    return offline.compute_spod_multi_frame(snap, specs, sweeps=oc.sweeps)


def split_per_mode(dec):
    """One frame per mode, each with a copy of its frame's path."""
    frames = []
    for fr in dec.frames:
        for i in range(fr.rank):
            frames.append(offline.Frame(fr.transform, fr.path.copy(), fr.modes[i : i + 1], fr.coefficients[i : i + 1]))
    return offline.Decomposition(frames, dec.grid, dec.times, dec.offline_error, list(dec.error_history))


def run_rom(cfg, model, dec, truth):
    """Build, integrate and evaluate one ROM. Returns (system, trajectory, report)."""
    rc = cfg.rom
    sys = rom.RomSystem(model, dec.frames, phase=rc.phase, regularization=rc.regularization)
    start = time.perf_counter()
    ip = rom.initial_state(sys, dec)
    traj = rom.integrate_rom(sys, ip.state, integrator_spec(rc.integrator), truth.times[-1], times=truth.times)
    traj.meta["seconds"] = time.perf_counter() - start
    report = analysis.error_report(truth, dec, sys, traj, ip.j_iv, cfg.analysis.C_tilde, cfg.analysis.omega)
    return sys, traj, report


def pipeline(cfg):
    """FOM, offline and online stages for one configuration."""
    model = build_model(cfg.model)
    truth = simulate(cfg, model)
    dec = decompose(cfg, truth, model)
    if cfg.rom.per_mode_paths:
        dec = split_per_mode(dec)
    sys, traj, report = run_rom(cfg, model, dec, truth)
    out = {"model": model, "truth": truth, "dec": dec, "sys": sys, "traj": traj, "report": report, "pod": {}}
    for r in cfg.analysis.compare_pod_ranks:
        pdec = offline.compute_pod(truth, r)
        psys, ptraj, prep = run_rom(cfg, model, pdec, truth)
        out["pod"][r] = {"dec": pdec, "sys": psys, "traj": ptraj, "report": prep}
    return out


# studies ---------------------------------------------------------------------------


def sweep_values(sc):
    k = int(round((sc.c_stop - sc.c_start) / sc.c_step))
    return np.round(sc.c_start + sc.c_step * np.arange(k + 1), 12)


def run_sweep(cfg, jobs=1):
    """Velocity sweep of ROMs built once at the configured velocity."""
    sc = cfg.analysis.sweep
    model = build_model(cfg.model)
    truth = simulate(cfg, model)
    base = copy.deepcopy(cfg)
    base.offline.frames[0].rank = sc.spod_rank
    systems = {}
    sdec = decompose(base, truth, model)
    systems[f"spod_r{sc.spod_rank}"] = (rom.RomSystem(model, sdec.frames), sdec)
    for r in sc.pod_ranks:
        pdec = offline.compute_pod(truth, r)
        systems[f"pod_r{r}"] = (rom.RomSystem(model, pdec.frames), pdec)
    spec = integrator_spec(sc.integrator)
    return analysis.parameter_sweep(model, systems, sweep_values(sc), spec, cfg.model.t_end, truth.times, jobs)


def pod_rank_for(snap, target, r_max=None):
    """Smallest POD rank whose offline error is at most ``target``."""
    r_max = min(snap.m, snap.grid.n * snap.components) if r_max is None else r_max
    lo = None
    for r in range(1, r_max + 1):
        if offline.compute_pod(snap, r).offline_error <= target:
            lo = r
            break
    if lo is None:
        raise ValueError(f"no POD rank up to {r_max} reaches {target}")
    return lo


def run_steps(cfg):
    """Adaptive step counts of FOM, POD ROM and shifted POD ROM."""
    st = cfg.analysis.steps
    model = build_model(cfg.model)
    truth = simulate(cfg, model)
    dec = decompose(cfg, truth, model)
    r_pod = pod_rank_for(truth, st.pod_error_target)
    pdec = offline.compute_pod(truth, r_pod)
    roms = {}
    for label, d in (("pod", pdec), ("spod", dec)):
        sys = rom.RomSystem(model, d.frames)
        roms[label] = (sys, rom.initial_state(sys, d).state)
    rows = analysis.step_count_study(model, roms, st.schemes, st.rel_tol, st.abs_tol, cfg.model.t_end)
    for row in rows:
        row["pod_rank"] = r_pod
        row["spod_rank"] = dec.rank
    return rows


def run_grid_study(cfg):
    """Offline and online errors over mesh widths (with time step tied to the mesh)."""
    gs = cfg.analysis.grid_study
    rows = []
    for dxi in gs.dxi:
        for r in gs.ranks:
            c = copy.deepcopy(cfg)
            c.model.dxi = dxi
            c.fom.integrator.tau = dxi
            c.rom.integrator.tau = dxi
            c.offline.frames[0].rank = r
            start = time.perf_counter()
            res = pipeline(c)
            rep = res["report"]
            logger.info("dxi=%g r=%d offline=%.3e online=%.3e", dxi, r, rep.offline_error, rep.online_error)
            rows.append(
                {"dxi": dxi, "rank": r, "offline_error": rep.offline_error, "online_error": rep.online_error,
                 "_seconds": time.perf_counter() - start}
            )
    return rows


# recipes -----------------------------------------------------------------------------

RECIPES = {
    "ade": {
        "name": "ade",
        "model": {"kind": "advection_diffusion", "n": 200, "c": 1.0, "mu": 2e-3, "t_end": 1.0},
        "fom": {"integrator": {"scheme": "implicit_trapezoid", "tau": 5e-3}},
        "offline": {"method": "spod", "frames": [{"transform": "periodic_shift", "rank": 2, "path": "analytic", "velocity": 1.0}]},
        "rom": {"phase": "residual", "integrator": {"scheme": "implicit_trapezoid", "tau": 5e-3}},
        "analysis": {"C_tilde": 1.0, "omega": 0.0, "compare_pod_ranks": [3, 11], "sweep": {}},
    },
    "ade-nonperiodic": {
        "name": "ade-nonperiodic",
        "model": {"kind": "advection_diffusion_dirichlet_neumann", "c": 1.0, "mu": 1e-3, "dxi": 1.25e-3, "t_end": 1.0},
        "fom": {"integrator": {"scheme": "implicit_trapezoid", "tau": 1.25e-3}},
        "offline": {"method": "spod", "frames": [{"transform": "virtual_shift", "rank": 4, "path": "analytic", "velocity": 1.0}]},
        "rom": {"phase": "residual", "integrator": {"scheme": "implicit_trapezoid", "tau": 1.25e-3}},
        "analysis": {"grid_study": {"dxi": [5e-3, 2.5e-3, 1.25e-3, 6.25e-4], "ranks": [4]}},
    },
    "wave": {
        "name": "wave",
        "model": {"kind": "linear_wave", "n": 200, "t_end": 1.0},
        "fom": {"source": "analytic"},
        "offline": {
            "method": "spod",
            "sweeps": 50,
            "frames": [
                {"transform": "periodic_shift", "rank": 1, "path": "analytic", "velocity": 1.0},
                {"transform": "periodic_shift", "rank": 1, "path": "analytic", "velocity": -1.0},
            ],
        },
        "rom": {"phase": "residual", "integrator": {"scheme": "implicit_trapezoid", "tau": 5e-3}},
        "analysis": {"steps": {}},
    },
    "burgers": {
        "name": "burgers",
        "model": {"kind": "burgers", "n": 200, "mu": 2e-3, "t_end": 1.0, "ic": {"sign": -1.0}},
        "fom": {"integrator": {"scheme": "implicit_trapezoid", "tau": 5e-3}},
        "offline": {"method": "spod", "frames": [{"transform": "periodic_shift", "rank": 7, "path": "estimated"}]},
        "rom": {"phase": "residual", "integrator": {"scheme": "implicit_trapezoid", "tau": 5e-3}},
        "analysis": {"compare_pod_ranks": [7, 32]},
    },
}


def recipe_config(name):
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    return parse_config(copy.deepcopy(RECIPES[name]))


def path_nonlinearity(times, path):
    """Largest deviation of ``path`` from the chord through its end points."""
    t = np.asarray(times) - times[0]
    chord = path[0] + (path[-1] - path[0]) * t / t[-1]
    return float(np.max(np.abs(path - chord)))


def run_recipe(name, cfg=None, jobs=1):
    """Run a named reproduction; returns a dict of tables and pipeline results."""
    cfg = recipe_config(name) if cfg is None else cfg
    if name == "ade-nonperiodic":
        rows = run_grid_study(cfg)
        return {"config": cfg, "tables": {"grid_study": rows}}
    res = pipeline(cfg)
    rep = res["report"]
    row = {"variant": "spod", "rank": res["dec"].rank, "offline_error": rep.offline_error, "online_error": rep.online_error}
    summary = [row]
    tables = {}
    if name == "ade":
        c2 = copy.deepcopy(cfg)
        c2.rom.per_mode_paths = True
        pm = pipeline(c2.model_copy(update={"analysis": c2.analysis.model_copy(update={"compare_pod_ranks": []})}))
        summary.append(
            {"variant": "spod_per_mode_paths", "rank": pm["dec"].rank, "offline_error": pm["report"].offline_error,
             "online_error": pm["report"].online_error}
        )
        res["per_mode"] = pm
        if cfg.analysis.sweep is not None:
            tables["sweep"] = run_sweep(cfg, jobs)
    for r, p in res["pod"].items():
        summary.append({"variant": "pod", "rank": r, "offline_error": p["report"].offline_error, "online_error": p["report"].online_error})
    if name == "burgers":
        traj = res["traj"]
        tables["path"] = [
            {"t": float(t), "p_estimated": float(pe), "p_rom": float(pr)}
            for t, pe, pr in zip(res["truth"].times, res["dec"].frames[0].path, traj.paths[0])
        ]
        res["path_nonlinearity"] = path_nonlinearity(traj.times, traj.paths[0])
    if name == "wave" and cfg.analysis.steps is not None:
        tables["steps"] = run_steps(cfg)
    tables["summary"] = summary
    res["config"] = cfg
    res["tables"] = tables
    return res
