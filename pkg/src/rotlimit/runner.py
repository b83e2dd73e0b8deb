"""Single runs, epsilon sweeps and the acoustic decay experiment."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fieldio
from .acoustic import (AcousticState, acoustic_energy, acoustic_propagate,
                       central_unit_subdomain, local_decay_profile)
from .config import ConfigError, RunConfig
from .euler import PositivityError, integrate
from .initdata import (IllPreparedSpec, WellPreparedSpec, decompose_ill_prepared,
                       default_delta, ill_prepared_fields, make_ill_prepared,
                       make_well_prepared, well_prepared_q0)
from .relenergy import (build_ill_prepared_test, build_well_prepared_test,
                        coercivity_components)
from .target import TargetState, target_integrate

log = logging.getLogger(__name__)


def write_csv(path, columns: dict):
    """Comma-separated, header row, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names]) if names else []
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_csv(path) -> dict:
    path = Path(path)
    lines = path.read_text().splitlines()
    names = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    rows = rows.reshape(-1, len(names))
    return {n: rows[:, i] for i, n in enumerate(names)}


def eps_tag(eps: float) -> str:
    return f"eps_{eps:.6g}"


@dataclass
class InitialData:
    state: object
    target: TargetState
    acoustic: AcousticState | None = None
    decomposition: object = None


def build_initial_data(config: RunConfig, epsilon: float, data: dict | None = None) -> InitialData:
    """Initial flow, target and (ill only) acoustic states for one epsilon.

    ``data`` may override the family with explicit fields: ``q0`` (well) or
    ``rho1_0`` and ``u0`` (ill).
    """
    grid, params = config.grid, config.params(epsilon)
    gh = grid.horizontal()
    data = data or {}
    if config.family == "well":
        q0 = data.get("q0")
        if q0 is None:
            q0 = well_prepared_q0(grid, config.data, config.amplitude, config.seed)
        state = make_well_prepared(WellPreparedSpec(q0, params), grid)
        return InitialData(state, TargetState.from_q(gh, q0, params))
    if "rho1_0" in data:
        rho1, u0 = data["rho1_0"], data["u0"]
    else:
        rho1, u0 = ill_prepared_fields(grid, config.data, config.amplitude, config.seed)
    delta = config.delta or default_delta(grid)
    spec = IllPreparedSpec(rho1, u0, delta, params)
    dec = decompose_ill_prepared(spec, grid, config.convention)
    state = make_ill_prepared(spec, grid)
    target = TargetState.from_q(gh, dec.q0_delta, params)
    return InitialData(state, target, AcousticState(grid, dec.s0_delta, dec.V0_delta), dec)


@dataclass
class RunResult:
    epsilon: float
    family: str
    series: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    ok: bool = True
    error: str | None = None

    @property
    def final_E(self) -> float:
        return float(self.series["E"][-1]) if self.ok else float("nan")

    @property
    def final_E_uncorrected(self):
        s = self.series.get("E_uncorrected")
        return float(s[-1]) if (self.ok and s is not None) else None


def run_single(config: RunConfig, epsilon: float | None = None, out_dir=None,
               data: dict | None = None, snapshots: bool = True) -> RunResult:
    """Euler trajectory + co-integrated target (+ exact acoustic part) and E_eps(t)."""
    epsilon = config.epsilons[0] if epsilon is None else epsilon
    params = config.params(epsilon)
    grid = config.grid
    t0 = time.perf_counter()
    init = build_initial_data(config, epsilon, data)
    result = RunResult(epsilon, config.family)
    try:
        traj = integrate(init.state, config.t_end, params, cfl=config.cfl,
                         sample_interval=config.sample_interval, symmetry=config.symmetry,
                         hyperviscosity=config.hyperviscosity)
    except PositivityError as exc:
        result.ok, result.error = False, str(exc)
        if out_dir is not None and exc.snapshot is not None:
            s = exc.snapshot
            fieldio.save_fields(Path(out_dir) / "abort_snapshot", grid,
                                {"rho": s.rho, "mom": s.mom}, s.time, {"error": str(exc)})
        return result
    ttraj = target_integrate(init.target, config.t_end, params, cfl=config.cfl,
                             sample_interval=config.sample_interval)

    rows = []
    for k, (st, tg) in enumerate(zip(traj.snapshots, ttraj.snapshots)):
        defect = float(traj.monitors["defect"][k])
        if init.acoustic is None:
            test = build_well_prepared_test(tg, params, grid)
            rep = coercivity_components(st, test, params, energy_defect=defect)
            extra = {}
        else:
            ac = acoustic_propagate(init.acoustic, st.time, params)
            ac_energy = acoustic_energy(ac, params)
            corrected = build_ill_prepared_test(tg, ac, params, grid)
            plain = build_ill_prepared_test(tg, None, params, grid)
            rep = coercivity_components(st, corrected, params, energy_defect=defect)
            extra = {"E_uncorrected": coercivity_components(st, plain, params).value,
                     "acoustic_energy": ac_energy}
        row = {"t": st.time, "E": rep.value, "ess_velocity": rep.ess_velocity,
               "res_kinetic": rep.res_kinetic, "ess_density": rep.ess_density,
               "res_mass_pressure": rep.res_mass_pressure, "energy_defect": rep.energy_defect,
               "coercivity_constant": rep.coercivity_constant, **extra,
               # uniform-bound norms, reported only
               "kinetic_l2": float(np.sqrt(grid.integrate(np.sum(st.mom ** 2, 0) / st.rho))),
               "rho1_l2": float(np.sqrt(grid.integrate(((st.rho - params.rho_bar) / epsilon) ** 2)))}
        rows.append(row)
    result.series = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    mon = traj.monitors
    result.diagnostics = {
        "steps": traj.steps,
        "target_steps": ttraj.steps,
        "mass_drift": float(np.max(np.abs(mon["mass"] - mon["mass"][0]))),
        "energy_initial": float(mon["energy"][0]),
        "energy_max_increase": float(np.max(-mon["defect"])),
        "max_res_cont": float(np.max(mon["res_cont"])),
        "max_res_mom": float(np.max(mon["res_mom"])),
        "target_energy_drift": float(np.max(np.abs(ttraj.monitors["energy"] / ttraj.monitors["energy"][0] - 1))
                                     if ttraj.monitors["energy"][0] else 0.0),
        "wallclock": time.perf_counter() - t0,
    }
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "monitors.csv", mon)
        write_csv(out / "relative_energy.csv", result.series)
        write_csv(out / "target.csv", ttraj.monitors)
        (out / "run.json").write_text(json.dumps(
            {"epsilon": epsilon, "family": config.family, "final_E": result.final_E,
             "final_E_uncorrected": result.final_E_uncorrected,
             "diagnostics": result.diagnostics}, indent=2))
        if snapshots:
            for name, st in (("initial", traj.snapshots[0]), ("final", traj.final)):
                fieldio.save_fields(out / f"euler_{name}", grid, {"rho": st.rho, "mom": st.mom},
                                    st.time, {"epsilon": epsilon})
            fieldio.save_fields(out / "target_final", grid.horizontal(),
                                {"q": ttraj.final.q, "omega": ttraj.final.omega}, ttraj.final.time)
    return result


def _member(args):
    config, eps, out_dir = args
    return run_single(config, eps, out_dir)


@dataclass
class SweepSummary:
    family: str
    epsilons: list
    final_E: list
    rate: float | None = None
    constant: float | None = None
    monotone: bool = False
    exact_zero: bool = False
    failed: bool = False
    final_E_uncorrected: list | None = None
    ratios: list | None = None
    diagnostics: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def fitted_line(self):
        if self.rate is None:
            return [float("nan")] * len(self.epsilons)
        return [self.constant * e ** self.rate for e in self.epsilons]

    def to_json(self):
        return json.dumps(asdict(self), indent=2, default=float)


def fit_rate(epsilons, values):
    """Least squares of log E = log C + p log eps; returns (p, C)."""
    epsilons, values = np.asarray(epsilons, float), np.asarray(values, float)
    if len(epsilons) < 3:
        raise ValueError("rate fit needs at least 3 epsilon values")
    p, logc = np.polyfit(np.log(epsilons), np.log(values), 1)
    return float(p), float(np.exp(logc))


def run_sweep(config: RunConfig, jobs: int = 1, out=None) -> SweepSummary:
    """Run every epsilon of the config (in parallel when ``jobs > 1``) and fit E ~ C eps^p."""
    if len(config.epsilons) < 3:
        raise ConfigError("a sweep needs at least 3 epsilon values")
    out = Path(out) if out is not None else None
    args = [(config, e, None if out is None else out / eps_tag(e)) for e in config.epsilons]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_member, args))
    else:
        results = [_member(a) for a in args]
    return summarize(config, results, out)


def summarize(config: RunConfig, results, out=None) -> SweepSummary:
    eps = [r.epsilon for r in results]
    summ = SweepSummary(config.family, eps, [r.final_E for r in results])
    summ.diagnostics = {eps_tag(r.epsilon): r.diagnostics for r in results}
    summ.errors = {eps_tag(r.epsilon): r.error for r in results if not r.ok}
    summ.failed = bool(summ.errors)
    if not summ.failed:
        vals = np.array(summ.final_E)
        if np.all(vals == 0):
            summ.exact_zero = True
            summ.monotone = True
        else:
            summ.monotone = bool(np.all(np.diff(vals) < 0))
            if np.all(vals > 0):
                summ.rate, summ.constant = fit_rate(eps, vals)
        if config.family == "ill":
            unc = [r.final_E_uncorrected for r in results]
            summ.final_E_uncorrected = unc
            summ.ratios = [c / u if u > 0 else float("nan") for c, u in zip(summ.final_E, unc)]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(config.to_text())
        (out / "summary.json").write_text(summ.to_json())
        cols = {"epsilon": eps, "final_E": summ.final_E, "fitted_line": summ.fitted_line()}
        if summ.ratios is not None:
            cols["final_E_uncorrected"] = summ.final_E_uncorrected
            cols["ratio"] = summ.ratios
        write_csv(out / "sweep.csv", cols)
    return summ


def sweep_checks(summary: SweepSummary) -> dict:
    """Pass/fail of the convergence criteria for a finished sweep."""
    if summary.failed:
        return {"completed": False}
    if summary.exact_zero:
        return {"completed": True, "exact_zero": True}
    checks = {"completed": True, "monotone": summary.monotone}
    if summary.family == "well":
        checks["rate_at_least_1"] = summary.rate is not None and summary.rate >= 1.0
    else:
        checks["corrected_smaller"] = bool(summary.ratios) and all(
            r < 1 for r in summary.ratios)
        checks.pop("monotone")
    return checks


# --- dispersive decay ------------------------------------------------------------

def decay_window(config: RunConfig, epsilon: float) -> float:
    """Pre-recurrence window L / (4 sqrt(p'(rho_bar)) / eps), L the shorter box side."""
    if config.decay_window:
        return config.decay_window
    c = np.sqrt(config.params(epsilon).sound_speed_sq)
    return min(config.lx, config.ly) / (4 * c / epsilon)


def run_decay(config: RunConfig, epsilon: float | None = None, out_dir=None, nsamples: int = 41):
    """Propagate the acoustic part of the configured ill-prepared data exactly.

    Returns the local decay profile on the central unit square and the decay
    factor: initial local sup of s over its maximum in the last tenth of the
    window.
    """
    epsilon = config.epsilons[0] if epsilon is None else epsilon
    params = config.params(epsilon)
    cfg = config if config.family == "ill" else config.with_(family="ill")
    init = build_initial_data(cfg, epsilon)
    tw = decay_window(config, epsilon)
    times = np.linspace(0.0, tw, nsamples)
    traj = [acoustic_propagate(init.acoustic, t, params) for t in times]
    prof = local_decay_profile(traj, central_unit_subdomain(config.grid), params)
    tail = prof["t"] >= 0.9 * tw - 1e-12
    late = float(np.max(prof["local_sup_s"][tail]))
    factor = float(prof["local_sup_s"][0] / late) if late > 0 else float("inf")
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "acoustic_decay.csv", prof)
        (out / "decay.json").write_text(json.dumps(
            {"epsilon": epsilon, "window": tw, "decay_factor": factor,
             "box": [config.lx, config.ly]}, indent=2))
    return {"profile": prof, "factor": factor, "window": tw}
