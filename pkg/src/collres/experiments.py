"""Experiment drivers behind the CLI subcommands. Each returns a ResultTable."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .collision_map import build_map, transition_probs_energy
from .dynamics import (
    coherence_estimate,
    dephased,
    ensemble,
    liouvillian,
    sample_trajectory,
    steady_state,
)
from .errors import CollresError
from .results import ResultTable
from .scattering import (
    energy_grid,
    get_backend,
    microrev_defect,
    phase_microrev_defect,
    unitarity_defect,
)

DB_THRESHOLD = 1e-6

STATE_COLUMNS = ["rho00", "rho11", "re_rho01", "im_rho01", "abs_rho01"]
TRAJECTORY_COLUMNS = ["t", "gamma_t", *STATE_COLUMNS, "collisions_so_far"]
SWEEP_COLUMNS = ["gamma", "delta", "dx", *STATE_COLUMNS, "residual", "trace_defect", "status"]


def _state_values(rho):
    return (
        float(rho[0, 0].real),
        float(rho[1, 1].real),
        float(rho[0, 1].real),
        float(rho[0, 1].imag),
        float(abs(rho[0, 1])),
    )


def _metadata(cfg, command, **extra):
    meta = {"command": command, "version": __version__, "seed": cfg.run.seed, "config": cfg.to_dict()}
    meta.update(extra)
    return meta


def _diag_dict(diag):
    return {k: float(v) for k, v in vars(diag).items()}


def _build(cfg, delta=None, dx=None):
    model = cfg.scattering_model(delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cmap = build_map(model, cfg.particle_density(dx), cfg.map.backend, cfg.quadrature())
    return model, cmap


def cmd_map_check(cfg):
    """Map diagnostics; ``metadata['exit_status']`` is 3 if detailed balance fails."""
    model, cmap = _build(cfg)
    beta = cfg.particle.beta
    d = cmap.diagnostics
    table = ResultTable(["metric", "value"])
    for name, value in vars(d).items():
        table.add(name, float(value))

    oracle = transition_probs_energy(model, beta, cfg.map.backend, cfg.map.p_cut_tolerance)
    table.add("oracle_population_defect", float(np.max(np.abs(cmap.populations - oracle))))
    amps = get_backend(cfg.map.backend)(model, energy_grid(model, beta))
    table.add("grid_unitarity_defect", unitarity_defect(amps))
    table.add("grid_microrev_defect", microrev_defect(amps))
    table.add("grid_phase_microrev_defect", phase_microrev_defect(amps))
    pops = cmap.populations
    for j in range(model.dim):
        for jp in range(model.dim):
            table.add(f"P_{j}_to_{jp}", float(pops[j, jp]))

    status = 3 if d.detailed_balance_defect > DB_THRESHOLD else 0
    table.metadata = _metadata(
        cfg, "map-check", diagnostics=_diag_dict(d), warnings=list(cmap.warnings), map_builds=1, exit_status=status
    )
    return table


def cmd_trajectory(cfg):
    """Single Poissonian realization, or the ensemble mean when ``run.ensemble`` is set."""
    model, cmap = _build(cfg)
    run = cfg.run
    s = dephased(cmap) if run.dephase else cmap.superop
    gamma = run.gamma
    table = ResultTable(list(TRAJECTORY_COLUMNS))
    if run.ensemble:
        res = ensemble(
            s, model, gamma, run.t_max, run.sample_dt, run.seed, run.trajectories,
            renormalize=run.renormalize, workers=run.threads,
        )
        for t, rho, n in zip(res.times, res.mean, res.mean_collisions):
            table.add(float(t), float(gamma * t), *_state_values(rho), float(n))
    else:
        rec = sample_trajectory(s, model, gamma, run.t_max, run.sample_dt, run.seed, renormalize=run.renormalize)
        counts = rec.collisions_before(rec.sample_times)
        for t, rho, n in zip(rec.sample_times, rec.states, counts):
            table.add(float(t), float(gamma * t), *_state_values(rho), int(n))
    table.metadata = _metadata(cfg, "trajectory", diagnostics=_diag_dict(cmap.diagnostics), map_builds=1)
    return table


def _sweep_group(args):
    cfg, delta, dx, gammas = args
    rows = []
    try:
        model, cmap = _build(cfg, delta, dx)
    except CollresError as exc:
        nan = float("nan")
        return [(g, delta, dx, *([nan] * 7), f"error: {exc}") for g in gammas], 0
    trace = cmap.diagnostics.trace_defect
    for g in gammas:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sol = steady_state(liouvillian(cmap, model, g), cfg.run.tol)
            status = "ok" if sol.residual <= cfg.run.tol else "residual"
            rows.append((g, delta, dx, *_state_values(sol.state), sol.residual, trace, status))
        except (CollresError, np.linalg.LinAlgError) as exc:
            nan = float("nan")
            rows.append((g, delta, dx, *([nan] * 6), trace, f"error: {exc}"))
    return rows, 1


def _groups(cfg):
    gammas = [float(g) for g in cfg.axis("gamma")]
    for delta in cfg.axis("delta"):
        for dx in cfg.axis("dx"):
            yield cfg, float(delta), float(dx), gammas


def cmd_sweep(cfg, command="sweep"):
    """Steady states on the (delta, dx, gamma) grid; one map build per (delta, dx)."""
    jobs = list(_groups(cfg))
    if cfg.run.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.run.threads) as pool:
            results = list(pool.map(_sweep_group, jobs))
    else:
        results = [_sweep_group(job) for job in jobs]
    table = ResultTable(list(SWEEP_COLUMNS))
    builds = 0
    for rows, n in results:
        builds += n
        for row in rows:
            table.add(*row)
    table.metadata = _metadata(cfg, command, map_builds=builds)
    return table


def cmd_steady(cfg):
    """Steady state at the configured (gamma, delta, dx): a one-point sweep."""
    single = type(cfg)(cfg.model, cfg.particle, cfg.map, cfg.run, {})
    table = cmd_sweep(single, command="steady")
    table.metadata["config"] = cfg.to_dict()
    return table


def cmd_estimate(cfg):
    """Order-of-magnitude coherence estimate over the sweep grid.

    With ``run.compare`` the steady-state |rho01| from the full map is added
    as a column for side-by-side comparison.
    """
    hbar, m, beta = cfg.model.hbar, cfg.model.mass, cfg.particle.beta
    columns = ["gamma", "delta", "dx", "omega", "estimate"]
    exact = None
    if cfg.run.compare:
        columns.append("abs_rho01")
        sweep = cmd_sweep(cfg)
        exact = sweep.column("abs_rho01")
    table = ResultTable(columns)
    i = 0
    for _, delta, dx, gammas in _groups(cfg):
        omega = delta / hbar
        for g in gammas:
            est = float(coherence_estimate(g, omega, beta, m, dx, cfg.run.s_const)) if g > 0 else 0.0
            row = [g, delta, dx, omega, est]
            if exact is not None:
                row.append(exact[i])
            table.add(*row)
            i += 1
    builds = sweep.metadata["map_builds"] if exact is not None else 0
    table.metadata = _metadata(cfg, "estimate", map_builds=builds)
    return table


COMMANDS = {
    "map-check": cmd_map_check,
    "trajectory": cmd_trajectory,
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "estimate": cmd_estimate,
}
