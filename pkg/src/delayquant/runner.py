"""Scenario execution: builds tables and constants, drives the stepping
core through the schedule phases, and emits the trajectory as CSV.

The stepping core advances in per-phase blocks (one zoom-out interval or
one dwell period at a time); all schedule branching happens here, between
block calls, so the hot loop stays branch-light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .config import ScenarioConfig, initial_conditions
from .controller import (EXACT, INPUT_QUANT, STATE_QUANT, BoundReport, ZoomSchedule,
                         predictor_weights, theorem_bound_check, trajectory_bound)
from .gains import (BudgetCertificate, DesignConstants, QuantizerBudget,
                    design_constants, validate_budget)
from .kernels import ParameterError, SeriesTruncation, build_tables
from .plant import PlantState, SpatialGrid
from .quantizers import QuantizerSpec
from .transforms import build_operators

__all__ = ["InfeasibleBudgetError", "Trajectory", "build_problem", "run_scenario",
           "write_csv", "format_ledger", "write_ledger_flat"]

CSV_HEADER = "t,l2_u,sup_v,mu,U,phase,bound"


class InfeasibleBudgetError(RuntimeError):
    """The quantizer budget fails the theorem ratio condition."""

    def __init__(self, certificate: BudgetCertificate):
        super().__init__(certificate.describe())
        self.certificate = certificate


@dataclass
class Trajectory:
    times: np.ndarray
    l2_u: np.ndarray
    sup_v: np.ndarray
    mu: np.ndarray
    ctrl: np.ndarray
    phase: list
    bound: np.ndarray
    t0: float | None
    dwell_starts: list
    snapshots: list
    constants: DesignConstants
    certificate: BudgetCertificate | None
    bound_report: BoundReport | None
    config: ScenarioConfig

    def joint(self) -> np.ndarray:
        return self.l2_u + self.sup_v


@dataclass
class _Problem:
    tables: object
    ops: object
    constants: DesignConstants
    budget: QuantizerBudget
    qspec: QuantizerSpec
    certificate: BudgetCertificate | None


def build_problem(cfg: ScenarioConfig) -> _Problem:
    """Tables, operators, the constant ledger, and the budget certificate."""
    tables = build_tables(cfg.nx, cfg.lam, cfg.delay,
                          SeriesTruncation(cfg.modes, cfg.resolved_quad_points()))
    ops = build_operators(tables)
    budget = QuantizerBudget(cfg.range, cfg.delta, cfg.resolved_deadzone())
    constants = design_constants(tables, ops, budget, cfg.margin,
                                 lambda1=cfg.lambda1, eps=cfg.eps, nu=cfg.nu,
                                 decay=cfg.decay)
    qspec = QuantizerSpec(cfg.range, cfg.delta, cfg.resolved_deadzone(),
                          cfg.saturation)
    cert = None
    if cfg.mode in (STATE_QUANT, INPUT_QUANT):
        cert = validate_budget(budget, constants,
                               "state" if cfg.mode == STATE_QUANT else "input")
    return _Problem(tables, ops, constants, budget, qspec, cert)


class _Recorder:
    def __init__(self, capacity: int):
        self.m = np.empty(capacity, dtype=np.int64)
        self.l2u = np.empty(capacity)
        self.supv = np.empty(capacity)
        self.ctrl = np.empty(capacity)
        self.mu = np.empty(capacity)
        self.phase = []
        self.count = 0

    def annotate(self, start: int, mu: float, phase: str):
        n = self.count - start
        self.mu[start:self.count] = mu
        self.phase.extend([phase] * n)

    def ensure(self, extra: int):
        need = self.count + extra
        if need <= self.m.size:
            return
        grow = max(need, 2 * self.m.size)
        for name in ("m", "l2u", "supv", "ctrl", "mu"):
            old = getattr(self, name)
            new = np.empty(grow, dtype=old.dtype)
            new[:self.count] = old[:self.count]
            setattr(self, name, new)

    def append(self, m, l2u, supv, ctrl, mu, phase):
        i = self.count
        self.m[i] = m
        self.l2u[i] = l2u
        self.supv[i] = supv
        self.ctrl[i] = ctrl
        self.mu[i] = mu
        self.phase.append(phase)
        self.count = i + 1


def run_scenario(cfg: ScenarioConfig, capture_stride: int = 0) -> Trajectory:
    """Execute one scenario; raises InfeasibleBudgetError on a failing
    certificate before any stepping."""
    prob = build_problem(cfg)
    if prob.certificate is not None and not prob.certificate.passed:
        raise InfeasibleBudgetError(prob.certificate)

    u0_fn, v0_fn = initial_conditions(cfg)
    grid = SpatialGrid(cfg.nx)
    gamma_w, g_w = predictor_weights(prob.ops)
    plant = PlantState(grid, cfg.lam, cfg.delay, cfg.dt, u0_fn(grid.nodes), v0_fn,
                       gamma_w, g_w)
    total = int(round(cfg.horizon / cfg.dt))
    tau_steps = int(round(cfg.tau / cfg.dt))
    rec = _Recorder(total // cfg.stride + 64)
    snapshots = []
    dwell_starts = []
    t0 = None
    c = prob.constants

    def snap(label):
        snapshots.append((label, plant.t, plant.u_samples(), plant.v_samples()))

    def run_block(nsteps, mode, mu, detect, thresh):
        rec.ensure(nsteps // cfg.stride + 2)
        start = rec.count
        steps, fired, rec.count = plant.core.run(
            nsteps, mode, mu, detect, thresh,
            cfg.delta, prob.qspec.levels, cfg.resolved_deadzone(),
            cfg.stride, rec.m, rec.l2u, rec.supv, rec.ctrl,
            rec.count, -1, 0.0)
        return start, steps, fired

    mode = cfg.mode
    if mode in ("open-loop", EXACT):
        core_mode = backend.MODE_ZERO if mode == "open-loop" else backend.MODE_EXACT
        phase_name = "open" if mode == "open-loop" else "exact"
        chunk = capture_stride if capture_stride else total
        done = 0
        if capture_stride:
            snap(phase_name)
        while done < total:
            n = min(chunk, total - done)
            start, steps, _ = run_block(n, core_mode, 1.0, backend.DETECT_NONE, 0.0)
            rec.annotate(start, 0.0, phase_name)
            done += steps
            if capture_stride:
                snap(phase_name)
        final_mu = 0.0
        final_phase = phase_name
    else:
        schedule = ZoomSchedule(c, cfg.tau, cfg.mu0)
        detect_kind = backend.DETECT_QUANTIZED if mode == STATE_QUANT \
            else backend.DETECT_EXACT
        dwell_mode = backend.MODE_STATE_QUANT if mode == STATE_QUANT \
            else backend.MODE_INPUT_QUANT
        k_margin = 2.0 if cfg.detect_margin == "double" else 1.0
        m_mbar = cfg.range * c.mbar
        if mode == STATE_QUANT and m_mbar <= k_margin * cfg.delta:
            raise ParameterError("M*Mbar <= Delta: the detection set is empty")
        fired = False
        while plant.step_index < total and not fired:
            m = plant.step_index
            j = m // tau_steps + 1
            mu_j = c.mbar1 * math.exp(2.0 * c.sigma1 * (j + 1) * cfg.tau) * cfg.mu0
            interval_end = min(j * tau_steps, total)
            if mode == STATE_QUANT:
                thresh = (m_mbar - k_margin * cfg.delta) * mu_j
            else:
                thresh = m_mbar / c.m3 * mu_j
            start, steps, fired = run_block(interval_end - m, backend.MODE_ZERO,
                                            mu_j, detect_kind, thresh)
            rec.annotate(start, mu_j, "zoomout")
        if fired:
            t0 = plant.t
            schedule.mark_detection(t0)
            mu_i = schedule.mu_t0
            m0 = plant.step_index
            snap("t0")
            dwell_starts.append(t0)
            i = 1
            while plant.step_index < total:
                end = m0 + max(i, math.ceil(i * c.dwell / cfg.dt - 1e-9))
                end = min(end, total)
                start, steps, _ = run_block(end - plant.step_index, dwell_mode,
                                            mu_i, backend.DETECT_NONE, 0.0)
                rec.annotate(start, mu_i, "dwell")
                if plant.step_index < total:
                    mu_i *= c.omega
                    i += 1
                    dwell_starts.append(plant.t)
                    snap(f"dwell{i}")
            final_mu = mu_i
            final_phase = "dwell"
        else:
            final_mu = rec.mu[rec.count - 1] if rec.count else cfg.mu0
            final_phase = "zoomout"

    # final record at the horizon (post-run state; x = 1 carries the last input)
    rec.ensure(1)
    rec.append(plant.step_index, plant.l2_u(), plant.sup_v(),
               plant.core.last_input(), final_mu, final_phase)

    times = rec.m[:rec.count] * cfg.dt
    joints0 = rec.l2u[0] + rec.supv[0]
    if mode in (STATE_QUANT, INPUT_QUANT):
        bound = trajectory_bound(times, joints0, c, prob.budget, cfg.tau, cfg.mu0, mode)
        report = theorem_bound_check(times, rec.l2u[:rec.count] + rec.supv[:rec.count],
                                     c, prob.budget, cfg.tau, cfg.mu0, mode)
    elif mode == "open-loop":
        bound = c.mbar1 * np.exp(c.sigma1 * times) * joints0
        report = None
    else:
        bound = np.zeros_like(times)
        report = None

    return Trajectory(
        times=times, l2_u=rec.l2u[:rec.count].copy(),
        sup_v=rec.supv[:rec.count].copy(), mu=rec.mu[:rec.count].copy(),
        ctrl=rec.ctrl[:rec.count].copy(), phase=list(rec.phase), bound=bound,
        t0=t0, dwell_starts=dwell_starts, snapshots=snapshots,
        constants=c, certificate=prob.certificate, bound_report=report,
        config=cfg,
    )


def write_csv(traj: Trajectory, path):
    """Emit the trajectory with 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(traj.times.size):
            fh.write(f"{traj.times[i]:.17g},{traj.l2_u[i]:.17g},"
                     f"{traj.sup_v[i]:.17g},{traj.mu[i]:.17g},"
                     f"{traj.ctrl[i]:.17g},{traj.phase[i]},"
                     f"{traj.bound[i]:.17g}\n")


def format_ledger(constants: DesignConstants,
                  certificate: BudgetCertificate | None = None) -> str:
    d = constants.as_dict()
    width = max(len(k) for k in d)
    lines = [f"{k:<{width}} = {v:.12g}" for k, v in d.items()]
    if certificate is not None:
        lines.append("")
        lines.append(certificate.describe())
    return "\n".join(lines)


def write_ledger_flat(constants: DesignConstants, path,
                      certificate: BudgetCertificate | None = None):
    """Machine-readable flat file: one name=value per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in constants.as_dict().items():
            fh.write(f"{k}={v:.17g}\n")
        if certificate is not None:
            fh.write(f"budget_ratio={certificate.ratio:.17g}\n")
            fh.write(f"budget_bound={certificate.bound:.17g}\n")
            fh.write(f"budget_passed={int(certificate.passed)}\n")
