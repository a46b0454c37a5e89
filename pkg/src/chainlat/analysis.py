"""Full, relaxed and decomposed latency analyses."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .encoding import ConstraintSystem, encode
from .engine import Infeasible, SolveConfig, SolveResult, Witness, check_witness, solve_max
from .horizon import Horizon, compute_horizon, relevant_tasks
from .model import Bounded, Chain, SystemModel, Sporadic, validate_chain


class BoundKind(str, Enum):
    EXACT = "exact"
    UPPER = "upper"
    LOWER = "lower"


class Mode(str, Enum):
    FULL = "full"
    RELAXED = "relaxed"
    DECOMPOSED = "decomposed"


class BadSliceConfig(ValueError):
    pass


@dataclass
class AnalysisResult:
    latency: Optional[int]
    bound_kind: BoundKind
    mode: Mode
    horizon: Horizon
    witness: Optional[Witness]
    system: ConstraintSystem
    relevant: set
    timed_out: bool = False
    stats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def witness_ok(self) -> bool:
        return self.witness is not None and check_witness(self.system, self.witness)

    def witness_scenario(self):
        """Concrete activations and demands realizing the witness schedule."""
        from .oracle import ConcreteScenario
        w = self.witness.values
        cs = self.system
        acts, dem = {}, {}
        for (tid, j), (a, s, i, e) in sorted(cs.inst.items(), key=lambda kv: kv[0][1]):
            dem.setdefault(tid, []).append(w[e] - w[s] - w[i])
            if isinstance(cs.system[tid].activation, (Bounded, Sporadic)):
                acts.setdefault(tid, []).append(w[a])
        return ConcreteScenario(acts, dem)

    def chain_trace(self) -> list[dict]:
        """Per chain link: task, n_k, alpha, sigma, iota, epsilon, x_k."""
        if self.witness is None:
            return []
        w = self.witness.values
        cs = self.system
        rows = []
        for k, tid in enumerate(cs.chain.tasks):
            n = w[cs.chain_n[k]]
            a, s, i, e = cs.inst[(tid, n)]
            rows.append(dict(k=k + 1, task=tid, n=n, alpha=w[a], sigma=w[s], iota=w[i],
                             epsilon=w[e], x=w[cs.chain_x[k]]))
        return rows


def _prepare(system: SystemModel, chain, prune: bool):
    chain = validate_chain(system, chain)
    rel = relevant_tasks(system, chain) if prune else set(system.ids)
    hz = compute_horizon(system, chain, rel)
    return chain, rel, hz


def _notes(system, chain):
    if isinstance(system[chain.tasks[0]].activation, Sporadic):
        return ["latency measured from activation (sporadic first task, no re-sampling gap)"]
    return []


def _finish(res: SolveResult, cs, mode, kind, hz, rel, system, chain):
    if res.timed_out:
        kind = BoundKind.LOWER
    stats = dict(seconds=res.seconds, nodes=res.nodes, workers=res.workers, **res.stats)
    return AnalysisResult(res.latency, kind, mode, hz, res.witness, cs, rel,
                          timed_out=res.timed_out, stats=stats, notes=_notes(system, chain))


def analyze_full(system: SystemModel, chain, config: Optional[SolveConfig] = None,
                 prune: bool = True, horizon: Optional[Horizon] = None) -> AnalysisResult:
    """Exact worst-case latency over the full relevant window."""
    chain, rel, hz = _prepare(system, chain, prune)
    hz = horizon or hz
    cs = encode(system, chain, hz)
    res = solve_max(cs, config)
    return _finish(res, cs, Mode.FULL, BoundKind.EXACT, hz, rel, system, chain)


def analyze_relaxed(system: SystemModel, chain, config: Optional[SolveConfig] = None,
                    prune: bool = True) -> AnalysisResult:
    """Upper bound: start/paused-time scheduling constraints dropped."""
    chain, rel, hz = _prepare(system, chain, prune)
    cs = encode(system, chain, hz, relaxed=True)
    res = solve_max(cs, config)
    out = _finish(res, cs, Mode.RELAXED, BoundKind.UPPER, hz, rel, system, chain)
    if res.timed_out:
        # an interrupted maximization of a relaxation bounds nothing safely
        out.notes.append("relaxed search timed out: value is a lower bound of the relaxation only")
    return out


def slice_windows(T: int, slice_len: int, overlap: int) -> list[tuple[int, int]]:
    if not 0 < slice_len <= T:
        raise BadSliceConfig(f"slice length {slice_len} outside (0, {T}]")
    if not 0 <= overlap < slice_len:
        raise BadSliceConfig(f"overlap {overlap} outside [0, {slice_len})")
    out = []
    s = 0
    step = slice_len - overlap
    while True:
        e = min(s + slice_len, T)
        out.append((s, e))
        if e >= T:
            break
        s += step
    return out


def default_slices(T: int) -> tuple[int, int]:
    """Two equal slices overlapping by a quarter of a slice."""
    slice_len = -(-4 * T // 7)  # 2L - L/4 = T
    return slice_len, slice_len // 4


def analyze_decomposed(system: SystemModel, chain, slice_len: Optional[int] = None,
                       overlap: Optional[int] = None, config: Optional[SolveConfig] = None,
                       prune: bool = True) -> AnalysisResult:
    """Lower bound: maximum over chain occurrences confined to each time slice."""
    chain, rel, hz = _prepare(system, chain, prune)
    if slice_len is None:
        slice_len, d_overlap = default_slices(hz.T)
        overlap = d_overlap if overlap is None else overlap
    overlap = 0 if overlap is None else overlap
    windows = slice_windows(hz.T, slice_len, overlap)
    best = None
    per_window = []
    timed_out = False
    nodes = 0
    seconds = 0.0
    for s, e in windows:
        sw = (max(hz.O, s), min(hz.O + hz.lcm, e))
        if sw[0] > sw[1]:
            per_window.append((s, e, None))
            continue
        cs = encode(system, chain, hz, start_window=sw, end=e)
        try:
            res = solve_max(cs, config)
        except Infeasible:
            # window admits no complete chain occurrence
            per_window.append((s, e, None))
            continue
        nodes += res.nodes
        seconds += res.seconds
        timed_out = timed_out or res.timed_out
        per_window.append((s, e, res.latency))
        if res.latency is not None and (best is None or res.latency > best[0].latency):
            best = (res, cs)
    if best is None:
        raise Infeasible("no slice admits a complete chain occurrence")
    res, cs = best
    kind = BoundKind.LOWER
    if len(windows) == 1 and not timed_out and windows[0] == (0, hz.T):
        kind = BoundKind.EXACT
    stats = dict(seconds=seconds, nodes=nodes, workers=res.workers,
                 windows=[dict(start=s, end=e, latency=v) for s, e, v in per_window])
    return AnalysisResult(res.latency, kind, Mode.DECOMPOSED, hz, res.witness, cs, rel,
                          timed_out=timed_out, stats=stats, notes=_notes(system, chain))


def analyze(system, chain, mode: Mode = Mode.FULL, config=None, slice_len=None, overlap=None,
            prune=True) -> AnalysisResult:
    mode = Mode(mode)
    if mode is Mode.FULL:
        return analyze_full(system, chain, config, prune)
    if mode is Mode.RELAXED:
        return analyze_relaxed(system, chain, config, prune)
    return analyze_decomposed(system, chain, slice_len, overlap, config, prune)
