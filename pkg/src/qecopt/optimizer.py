"""Sequential per-angle optimization with pruning, quantization and annealing.

Each sweep visits the pulses left to right. For pulse ``k`` the exact local
model gives the maximizing angle ``a_max`` (parabola vertex, or a short line
search when the parabola is not trustworthy). The new angle is

    a_new = a_max - d0 + dq + da

where ``d0`` pushes towards zero by an amount the objective may lose
(larger for unimportant pulses; the pulse is deleted when ``|d0| >= |a_max|``),
``dq`` pulls towards the nearest grid angle ``m/2**n pi`` and ``da`` is a
random annealing kick. Each displacement is found by inverting the local
parabola: losing ``D`` costs ``sqrt(2 D / |phi''|)`` in angle.

A restart runs four phases:

A. ``gamma0`` tiny, free ascent until ``Phi > trigger * max``.
B. ``gamma0`` grows geometrically (pruning).
C. quantization pressure switched on as well.
D. last part of the budget: all couplings zero, polish.

Coordinate ascent creeps along narrow ridges once the sequence is long and
redundant, so phases A and D hand off to a quasi-Newton polish over all
free angles at once (exact gradient, L-BFGS from scipy) when the per-sweep
gain becomes small.

The phase switching is a heuristic stand-in with config-exposed defaults.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import minimize

from .codes import Objective
from .gateset import Kind, Pulse, PulseSequence
from .layout import segment_of, segment_register
from .objective import EvalContext, evaluate, gradient

PHASES = ("A", "B", "C", "D")


class ConfigInvalidError(ValueError):
    pass


class FixedSlotError(ValueError):
    pass


class InputNotOptimalError(ValueError):
    pass


@dataclass
class OptimizerConfig:
    initial_length: int = 20
    ms_count: int = 0
    ms_kind: str = "X2"
    ms_angle: float = math.pi / 4
    kinds: tuple[str, ...] = ("X", "Y", "z")
    segments: int = 1
    n_code: int | None = None
    gamma0_start: float = 1e-8
    gamma0_growth: float = 1.15
    gamma0_cap: float = 1e-2
    gamma0_trigger: float = 0.8
    gamma_quant_start: float = 1e-5
    gamma_quant_growth: float = 1.15
    gamma_quant_cap: float = 1e-3
    quant_start: float = 0.6
    temperature: float = 0.0
    temperature_decay: float = 0.95
    n_max: int = 3
    restarts: int = 1
    max_sweeps: int = 300
    polish_fraction: float = 0.1
    stall_sweeps: int = 40
    eps_conv: float = 1e-8
    seed: int = 0
    stop_on_success: bool = False
    threads: int = 0
    disturb_rounds: int = 10
    fill_count: int = 10
    refills: int = 0
    fix_ms: bool = True
    polish_iters: int = 300
    creep_sweeps: int = 10
    creep_gain: float = 1e-3
    prune_slack: float = 0.02

    def __post_init__(self):
        self.kinds = tuple(self.kinds)
        self.validate()

    def validate(self) -> None:
        def bad(msg):
            raise ConfigInvalidError(msg)

        if self.initial_length < 0:
            bad("initial_length must be >= 0")
        if self.ms_count < 0 or self.initial_length < self.ms_count:
            bad("initial_length must be at least ms_count")
        if self.ms_kind not in ("X2", "Y2"):
            bad("ms_kind must be X2 or Y2")
        if not self.kinds or set(self.kinds) - {"X", "Y", "z", "X2", "Y2"}:
            bad(f"kinds must be drawn from X, Y, z, X2, Y2; got {self.kinds}")
        if not self.eps_conv > 0:
            bad("eps_conv must be > 0")
        if not 0 <= self.n_max <= 6:
            bad("n_max must lie in 0..6")
        if self.segments < 1 or (self.segments > 1 and not self.n_code):
            bad("segments > 1 needs n_code")
        if self.ms_count % self.segments:
            bad("ms_count must split evenly over segments")
        if self.restarts < 1 or self.max_sweeps < 0:
            bad("restarts >= 1 and max_sweeps >= 0 required")
        if self.gamma0_growth < 1 or self.gamma_quant_growth < 1:
            bad("growth factors must be >= 1")
        if min(self.gamma0_start, self.gamma0_cap, self.gamma_quant_start, self.gamma_quant_cap, self.temperature) < 0:
            bad("couplings and temperature must be >= 0")
        if not 0 < self.prune_slack < 1:
            bad("prune_slack must lie in (0, 1)")
        if self.polish_iters < 0 or self.creep_sweeps < 1:
            bad("polish_iters >= 0 and creep_sweeps >= 1 required")
        if not 0 <= self.polish_fraction <= 1 or not 0 <= self.quant_start <= 1:
            bad("fractions must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> OptimizerConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigInvalidError(f"unknown optimizer keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# layout helpers


def _segment_qubits(cfg: OptimizerConfig, n: int, s: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(register for collective pulses, qubits available to z) of segment ``s``."""
    if cfg.segments == 1:
        return (), tuple(range(1, n + 1))
    reg = segment_register(cfg.n_code, s)
    return reg, reg


def _check_layout(cfg: OptimizerConfig, objective: Objective) -> None:
    if cfg.segments > 1 and objective.n_qubits != cfg.n_code + cfg.segments:
        raise ConfigInvalidError(f"{cfg.segments} segments on {cfg.n_code} code qubits need {cfg.n_code + cfg.segments} qubits, objective has {objective.n_qubits}")


def _random_pulse(kind: str, theta: float, rng: np.random.Generator, reg: tuple[int, ...], zq: tuple[int, ...]) -> Pulse:
    if kind == "z":
        return Pulse(Kind.Z, theta, (int(rng.choice(zq)),))
    return Pulse(Kind(kind), theta, reg)


def init_sequence(cfg: OptimizerConfig, objective: Objective, rng: np.random.Generator | None = None) -> PulseSequence:
    """Random start: fixed MS slots spread evenly, other kinds and angles uniform."""
    cfg.validate()
    _check_layout(cfg, objective)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    n = objective.n_qubits
    pulses: list[Pulse] = []
    lengths = [cfg.initial_length // cfg.segments + (1 if s < cfg.initial_length % cfg.segments else 0) for s in range(cfg.segments)]
    ms_per = cfg.ms_count // cfg.segments
    for s, length in enumerate(lengths):
        reg, zq = _segment_qubits(cfg, n, s)
        ms_pos = {int((i + 0.5) * length / ms_per) for i in range(ms_per)} if ms_per else set()
        while len(ms_pos) < ms_per:  # only when slots outnumber the segment length rounding
            ms_pos.add(min(set(range(length)) - ms_pos))
        for t in range(length):
            if t in ms_pos:
                pulses.append(Pulse(Kind(cfg.ms_kind), cfg.ms_angle, reg, fixed=True))
            else:
                kind = cfg.kinds[int(rng.integers(len(cfg.kinds)))]
                pulses.append(_random_pulse(kind, float(rng.uniform(-math.pi, math.pi)), rng, reg, zq))
    return PulseSequence(n, pulses)


def mark_ms_fixed(seq: PulseSequence) -> PulseSequence:
    return PulseSequence(seq.n_qubits, [Pulse(p.kind, p.theta, p.qubits, fixed=True) if p.kind.is_ms else p for p in seq])


def _segment_at(cfg: OptimizerConfig, pulses: list[Pulse], pos: int) -> int:
    if cfg.segments == 1:
        return 0
    for p in reversed(pulses[:pos]):
        s = segment_of(p, cfg.n_code)
        if s is not None:
            return s
    for p in pulses[pos:]:
        s = segment_of(p, cfg.n_code)
        if s is not None:
            return s
    return 0


def pad(seq: PulseSequence, count: int, rng: np.random.Generator, cfg: OptimizerConfig | None = None, max_angle: float = 1e-3) -> PulseSequence:
    """Insert ``count`` random-kind pulses with ``|angle| <= max_angle`` at random positions."""
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = OptimizerConfig() if cfg is None else cfg
    pulses = list(seq)
    for _ in range(count):
        pos = int(rng.integers(len(pulses) + 1))
        reg, zq = _segment_qubits(cfg, seq.n_qubits, _segment_at(cfg, pulses, pos))
        kind = cfg.kinds[int(rng.integers(len(cfg.kinds)))]
        pulses.insert(pos, _random_pulse(kind, float(rng.uniform(-max_angle, max_angle)), rng, reg, zq))
    return PulseSequence(seq.n_qubits, pulses)


# ---------------------------------------------------------------------------
# single updates


def wrap_angle(theta: float) -> float:
    """Map to ``(-pi, pi]``; every generator has period ``2 pi`` up to a global phase."""
    w = math.remainder(theta, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass
class UpdateResult:
    deleted: bool
    theta_old: float
    theta_max: float
    theta_new: float
    importance: float


@dataclass
class TraceRecord:
    restart: int
    sweep: int
    phase: str
    value: float
    pulses: int
    gamma0: float
    gamma_quant: float
    temperature: float

    def line(self) -> str:
        return (
            f"restart={self.restart} sweep={self.sweep} phase={self.phase} phi={self.value:.15g} "
            f"pulses={self.pulses} gamma0={self.gamma0:.6g} gamma_quant={self.gamma_quant:.6g} temperature={self.temperature:.6g}"
        )


@dataclass
class OptimizerState:
    ctx: EvalContext
    cfg: OptimizerConfig
    rng: np.random.Generator
    gamma0: float = 0.0
    gamma_quant: float = 0.0
    temperature: float = 0.0
    sweep_count: int = 0
    phase: str = "A"
    value: float = float("-inf")
    best_value: float = float("-inf")
    best_sequence: PulseSequence | None = None
    trace: list[TraceRecord] = field(default_factory=list)
    restart: int = 0

    @classmethod
    def start(cls, seq: PulseSequence, objective: Objective, cfg: OptimizerConfig, rng: np.random.Generator, restart: int = 0) -> OptimizerState:
        st = cls(EvalContext(objective, seq), cfg, rng, restart=restart)
        st.value = st.ctx.value()
        st.best_value, st.best_sequence = st.value, st.ctx.sequence
        return st

    @property
    def objective(self) -> Objective:
        return self.ctx.objective


def _maximize_local(lm, trust: float = 0.1) -> tuple[float, float]:
    """Angle and value maximizing the local model near the current angle."""
    th = lm.theta
    v0, d1, d2 = lm.derivatives(th)
    if d2 < 0:
        step = -d1 / d2
        if abs(step) <= math.pi / 2:
            cand = th + step
            vc = lm.value(cand)
            gain = -d1 * d1 / (2 * d2)
            if vc >= v0 - 1e-12 and abs(vc - (v0 + gain)) <= trust * abs(gain) + 1e-13:
                return cand, vc
    # fallback: bounded line search on 8 trial angles, then one guarded vertex step
    trials = th + np.array([-4, -3, -2, -1, 1, 2, 3, 4]) * (math.pi / 8)
    vals = lm.values(trials)
    j = int(np.argmax(vals))
    best, vbest = (float(trials[j]), float(vals[j])) if vals[j] > v0 else (th, v0)
    _, e1, e2 = lm.derivatives(best)
    if e2 < 0 and abs(e1 / e2) <= math.pi / 8:
        cand = best - e1 / e2
        vc = lm.value(cand)
        if vc > vbest:
            best, vbest = cand, vc
    return best, vbest


def _inverse_parabola(loss: float, curvature: float) -> float:
    """Angle offset whose parabola loss equals ``loss``."""
    if loss <= 0:
        return 0.0
    c = abs(curvature)
    if not math.isfinite(loss) or c < 1e-300:
        return math.inf
    return math.sqrt(2 * loss / c)


def tolerated_loss(gamma0: float, imp: float) -> float:
    """``gamma0 * ((0.25 / I)**5 + 1)``; unbounded for non-positive importance."""
    if gamma0 <= 0:
        return 0.0
    if imp <= 0:
        return math.inf
    ratio = 0.25 / imp
    return math.inf if ratio > 1e60 else gamma0 * (ratio**5 + 1)


def quant_displacement(theta: float, gamma_quant: float, curvature: float, n_max: int) -> float:
    """Signed pull towards the nearest grid angle, zero midway between grid points."""
    if gamma_quant <= 0:
        return 0.0
    step = math.pi / 2**n_max
    target = round(theta / step) * step
    dist = abs(theta - target)
    loss = gamma_quant * max(0.0, 1 - 2 * dist / step)
    return math.copysign(min(_inverse_parabola(loss, curvature), dist), target - theta)


def displaced_update(state: OptimizerState, k: int) -> UpdateResult:
    """Move pulse ``k`` to its displaced optimum, or delete it."""
    ctx, cfg = state.ctx, state.cfg
    p = ctx.pulses[k]
    if p.fixed:
        raise FixedSlotError(f"pulse {k} ({p.kind.value}) is a fixed slot")
    lm = ctx.local_model(k)
    amax, vmax = _maximize_local(lm)
    if not state.objective.phase_sensitive:
        amax = wrap_angle(amax)
    imp = vmax - lm.value(0.0)
    curv = lm.derivatives(amax)[2]
    d0 = math.copysign(_inverse_parabola(tolerated_loss(state.gamma0, imp), curv), amax)
    if state.gamma0 > 0 and abs(d0) >= abs(amax):
        ctx.delete(k)
        return UpdateResult(True, p.theta, amax, 0.0, imp)
    new = amax - d0
    new += quant_displacement(amax, state.gamma_quant, curv, cfg.n_max)
    if state.temperature > 0:
        da = _inverse_parabola(float(state.rng.exponential(state.temperature)), curv)
        if math.isfinite(da):
            new += da if state.rng.random() < 0.5 else -da
    if not state.objective.phase_sensitive:
        new = wrap_angle(new)
    ctx.set_angle(k, new)
    return UpdateResult(False, p.theta, amax, new, imp)


def sweep(state: OptimizerState) -> OptimizerState:
    """One left-to-right pass over all non-fixed pulses."""
    ctx = state.ctx
    ctx.refresh()
    k = 0
    while k < len(ctx):
        if ctx.pulses[k].fixed:
            k += 1
            continue
        if not displaced_update(state, k).deleted:
            k += 1
    state.value = ctx.value()
    state.sweep_count += 1
    _offer_best(state)
    state.trace.append(
        TraceRecord(state.restart, state.sweep_count, state.phase, state.value, len(ctx), state.gamma0, state.gamma_quant, state.temperature)
    )
    return state


def gradient_polish(state: OptimizerState, maxiter: int | None = None) -> OptimizerState:
    """Joint L-BFGS ascent over all free angles; never lowers the value."""
    maxiter = state.cfg.polish_iters if maxiter is None else maxiter
    ctx = state.ctx
    free = [k for k, p in enumerate(ctx.pulses) if not p.fixed]
    if not free or maxiter <= 0:
        return state
    start = np.array([ctx.pulses[k].theta for k in free])

    def neg(x):
        for j, k in enumerate(free):
            ctx.set_angle(k, float(x[j]))
        ctx.refresh()
        return -ctx.value(), -gradient(ctx)[free]

    res = minimize(neg, start, jac=True, method="L-BFGS-B", options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-16})
    x = res.x if -res.fun >= state.value else start
    phase_free = not state.objective.phase_sensitive
    for j, k in enumerate(free):
        ctx.set_angle(k, wrap_angle(float(x[j])) if phase_free else float(x[j]))
    ctx.refresh()
    state.value = ctx.value()
    _offer_best(state)
    return state


# ---------------------------------------------------------------------------
# ranking


def _abs_angle_sum(seq: PulseSequence) -> float:
    return float(sum(abs(p.theta) for p in seq if p.kind.is_unitary and not p.kind.is_ms))


def rank_key(value: float, seq: PulseSequence) -> tuple:
    """Total order: higher value, then fewer unitaries, smaller non-MS angle sum, kind order."""
    from .gateset import KIND_ORDER

    return (-round(value, 9), seq.unitary_count, round(_abs_angle_sum(seq), 12), tuple(KIND_ORDER[p.kind] for p in seq))


def _offer_best(state: OptimizerState) -> None:
    seq = state.ctx.sequence
    if rank_key(state.value, seq) < rank_key(state.best_value, state.best_sequence):
        state.best_value, state.best_sequence = state.value, seq


# ---------------------------------------------------------------------------
# schedule


def run_phases(state: OptimizerState, start: str = "A", max_sweeps: int | None = None) -> OptimizerState:
    """Run the phase schedule from ``start`` for at most ``max_sweeps`` sweeps."""
    cfg = state.cfg
    obj = state.objective
    total = cfg.max_sweeps if max_sweeps is None else max_sweeps
    polish_at = total - max(1, math.ceil(cfg.polish_fraction * total)) if total else 0
    quant_at = int(cfg.quant_start * total)
    state.phase = start
    state.gamma0 = cfg.gamma0_start
    state.gamma_quant = cfg.gamma_quant_start if start == "C" else 0.0
    state.temperature = cfg.temperature
    last_change, last_len, last_val = 0, len(state.ctx), state.value
    refills = 0
    history = [state.value]
    polished_at = -math.inf
    last_polish, polished_len = 0, len(state.ctx)
    for i in range(total):
        if state.phase != "D" and i >= polish_at:
            state.phase = "D"
            state.gamma0 = state.gamma_quant = state.temperature = 0.0
            gradient_polish(state)
        if state.phase == "D":
            state.gamma0 = state.gamma_quant = state.temperature = 0.0
        prev = state.value
        sweep(state)
        history.append(state.value)
        plateau = False
        if state.phase == "A" and i >= cfg.creep_sweeps and state.value - history[-1 - cfg.creep_sweeps] < cfg.creep_gain:
            if state.value > polished_at + cfg.creep_gain:
                polished_at = state.value
                gradient_polish(state)
                history.append(state.value)
            else:
                plateau = True  # polished already and still creeping
        if state.phase == "D":
            if abs(state.value - prev) < 1e-14 or obj.max_value - state.value < cfg.eps_conv * 1e-3:
                break
            continue
        # stall detection: no deletion and no real improvement for a while
        if len(state.ctx) != last_len or state.value > last_val + 1e-9:
            last_change, last_len, last_val = i, len(state.ctx), max(state.value, last_val)
        stalled = plateau or i - last_change >= cfg.stall_sweeps
        if state.phase == "A":
            if state.value > cfg.gamma0_trigger * obj.max_value:
                gradient_polish(state)
                state.phase = "B"
            elif stalled and refills < cfg.refills:
                # complement the sequence with fresh near-identity pulses
                refills += 1
                seq = pad(state.ctx.sequence, cfg.fill_count, state.rng, cfg)
                state.ctx = EvalContext(obj, seq)
                last_change, last_len = i, len(state.ctx)
            elif stalled:
                break
        elif state.phase in ("B", "C"):
            if state.value < (1 - cfg.prune_slack) * obj.max_value:
                # pressure costs too much: back off so the ascent can repair
                state.gamma0 = max(state.gamma0 / cfg.gamma0_growth**3, 1e-8)
                state.gamma_quant /= cfg.gamma_quant_growth**3
            else:
                state.gamma0 = min(cfg.gamma0_cap, max(state.gamma0, 1e-8) * cfg.gamma0_growth)
                if state.phase == "C":
                    state.gamma_quant = min(cfg.gamma_quant_cap, max(state.gamma_quant, cfg.gamma_quant_start) * cfg.gamma_quant_growth)
            if state.phase == "B" and (i >= quant_at or state.gamma0 >= cfg.gamma0_cap):
                state.phase = "C"
                state.gamma_quant = cfg.gamma_quant_start
            if i - last_polish >= cfg.creep_sweeps and len(state.ctx) < polished_len:
                # realize the converged value of the shorter sequence
                gradient_polish(state)
                last_polish, polished_len = i, len(state.ctx)
            state.temperature *= cfg.temperature_decay
            if stalled and state.gamma0 >= cfg.gamma0_cap:
                polish_at = i + 1
    return state


def snap_to_grid(seq: PulseSequence, objective: Objective, eps: float, n_max: int = 6, tol: float = 1e-4) -> PulseSequence:
    """Round angles within ``tol`` of ``m/2**n_max pi`` if the result stays converged."""
    step = math.pi / 2**n_max
    out = []
    for p in seq:
        if p.kind.is_unitary and not p.fixed:
            g = round(p.theta / step) * step
            out.append(p.with_theta(g) if abs(g - p.theta) <= tol else p)
        else:
            out.append(p)
    snapped = PulseSequence(seq.n_qubits, out)
    return snapped if objective.max_value - evaluate(objective, snapped) < eps else seq


# ---------------------------------------------------------------------------
# driver


@dataclass
class RestartResult:
    index: int
    value: float
    unitary_count: int
    converged: bool
    sweeps: int
    sequence: PulseSequence


@dataclass
class OptimizationReport:
    best_sequence: PulseSequence
    best_value: float
    max_value: float
    converged: bool
    restarts: list[RestartResult] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)

    @property
    def unitary_count(self) -> int:
        return self.best_sequence.unitary_count

    def records(self) -> str:
        lines = [
            f"converged={'true' if self.converged else 'false'}",
            f"phi={self.best_value:.15g}",
            f"max={self.max_value:.15g}",
            f"unitaries={self.unitary_count}",
            f"ms={self.best_sequence.ms_count}",
            f"restarts={len(self.restarts)}",
            f"successes={sum(r.converged for r in self.restarts)}",
        ]
        return "\n".join(lines) + "\n"


def _finish(state: OptimizerState, eps: float) -> tuple[PulseSequence, float, bool]:
    seq, val = state.best_sequence, state.best_value
    ok = state.objective.max_value - val < eps
    if ok:
        seq = snap_to_grid(seq, state.objective, eps)
        val = evaluate(state.objective, seq)
    return seq, val, ok


def _run_restart(cfg: OptimizerConfig, objective: Objective, index: int, seed: np.random.SeedSequence):
    rng = np.random.default_rng(seed)
    seq = init_sequence(cfg, objective, rng)
    state = OptimizerState.start(seq, objective, cfg, rng, restart=index)
    run_phases(state, "A")
    seq, val, ok = _finish(state, cfg.eps_conv)
    return RestartResult(index, val, seq.unitary_count, ok, state.sweep_count, seq), state.trace


def _threads(cfg: OptimizerConfig) -> int:
    if cfg.threads:
        return cfg.threads
    env = os.environ.get("QECOPT_THREADS", "")
    return max(1, int(env)) if env.strip().isdigit() else 1


def optimize(cfg: OptimizerConfig, objective: Objective) -> OptimizationReport:
    """Seeded multi-restart optimization; the result does not depend on thread scheduling."""
    cfg.validate()
    _check_layout(cfg, objective)
    empty = PulseSequence(objective.n_qubits, [])
    v_empty = evaluate(objective, empty)
    if objective.max_value - v_empty < cfg.eps_conv:
        return OptimizationReport(empty, v_empty, objective.max_value, True)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    n_threads = _threads(cfg)
    results: list[tuple[RestartResult, list[TraceRecord]]] = []
    if n_threads == 1:
        for i, s in enumerate(seeds):
            results.append(_run_restart(cfg, objective, i, s))
            if cfg.stop_on_success and results[-1][0].converged:
                break
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            for start in range(0, len(seeds), n_threads):
                batch = list(pool.map(lambda a: _run_restart(cfg, objective, *a), [(i, seeds[i]) for i in range(start, min(start + n_threads, len(seeds)))]))
                results += batch
                if cfg.stop_on_success and any(r.converged for r, _ in batch):
                    break
        if cfg.stop_on_success:
            first = next((i for i, (r, _) in enumerate(results) if r.converged), None)
            if first is not None:
                results = results[: first + 1]
    restarts = [r for r, _ in results]
    trace = [t for _, tr in results for t in tr]
    best = min(restarts, key=lambda r: rank_key(r.value, r.sequence))
    return OptimizationReport(best.sequence, best.value, objective.max_value, best.converged, restarts, trace)


def reoptimize(seq: PulseSequence, objective: Objective, cfg: OptimizerConfig, rng: np.random.Generator, start: str = "B", restart: int = 0):
    """Run the schedule from phase ``start`` on a given sequence."""
    state = OptimizerState.start(seq, objective, cfg, rng, restart=restart)
    run_phases(state, start)
    return _finish(state, cfg.eps_conv) + (state,)


@dataclass
class DisturbRecord:
    round: int
    disturbed: int
    mode: str
    candidate_value: float
    candidate_unitaries: int
    best_value: float
    best_unitaries: int

    def line(self) -> str:
        return (
            f"round={self.round} disturbed={self.disturbed} mode={self.mode} candidate_phi={self.candidate_value:.15g} "
            f"candidate_unitaries={self.candidate_unitaries} best_phi={self.best_value:.15g} best_unitaries={self.best_unitaries}"
        )


@dataclass
class DisturbReport:
    best_sequence: PulseSequence
    best_value: float
    max_value: float
    input_unitaries: int
    records: list[DisturbRecord] = field(default_factory=list)

    @property
    def unitary_count(self) -> int:
        return self.best_sequence.unitary_count

    @property
    def converged(self) -> bool:
        return True


def disturb_and_reoptimize(seq: PulseSequence, objective: Objective, cfg: OptimizerConfig) -> DisturbReport:
    """Try to shorten a perfect sequence by disturbing pulses and re-optimizing.

    A disturbance flips (``theta -> -theta``) or zeroes one randomly chosen
    pulse of the best sequence. While re-optimization repairs the damage,
    the same disturbances are kept and one more is added. When the repair
    fails, the disturbed sequence is filled with fresh near-identity pulses
    and re-optimized once more, then the disturbances are cleared. Any
    strictly shorter converged sequence becomes the new best.
    """
    cfg.validate()
    _check_layout(cfg, objective)
    v = evaluate(objective, seq)
    if objective.max_value - v >= cfg.eps_conv:
        raise InputNotOptimalError(f"input reaches {v:.12g} of {objective.max_value}")
    if cfg.fix_ms:
        seq = mark_ms_fixed(seq)
    rng = np.random.default_rng(cfg.seed)
    best, best_v = seq, v
    report = DisturbReport(seq, v, objective.max_value, seq.unitary_count)
    disturbances: dict[int, str] = {}
    for rnd in range(cfg.disturb_rounds):
        free = [i for i, p in enumerate(best) if p.kind.is_unitary and not p.fixed and i not in disturbances]
        if not free:
            disturbances = {}
            continue
        disturbances[int(rng.choice(free))] = "flip" if rng.random() < 0.5 else "zero"
        pulses = list(best)
        for i, mode in disturbances.items():
            pulses[i] = pulses[i].with_theta(-pulses[i].theta if mode == "flip" else 0.0)
        disturbed = PulseSequence(best.n_qubits, pulses)
        cand, cv, ok, _ = reoptimize(disturbed, objective, cfg, rng, restart=rnd)
        n_dist = len(disturbances)
        modes = ",".join(disturbances[i] for i in sorted(disturbances))
        if not ok:
            filled = pad(disturbed, cfg.fill_count, rng, cfg)
            cand, cv, ok, _ = reoptimize(filled, objective, cfg, rng, restart=rnd)
        shorter = ok and cand.unitary_count < best.unitary_count
        if shorter:
            best, best_v = cand, cv
        if shorter or not ok:
            disturbances = {}
        report.records.append(DisturbRecord(rnd, n_dist, modes, cv, cand.unitary_count, best_v, best.unitary_count))
    report.best_sequence, report.best_value = best, best_v
    return report
