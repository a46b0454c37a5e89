"""Discrete-event FPPS simulator and brute-force latency enumeration.

This module is the ground truth the constraint encoding is checked against,
so it shares nothing with the encoder or the engine beyond the task model and
the analysis window convention.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from .horizon import activation_gap, compute_horizon, relevant_tasks
from .model import Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, SystemModel


class DeadlineMiss(RuntimeError):
    def __init__(self, task, instance, finish, limit):
        self.task, self.instance, self.finish, self.limit = task, instance, finish, limit
        super().__init__(f"{task}#{instance} finishes at {finish}, after its limit {limit}")


class NoPath(LookupError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class ConcreteScenario:
    """Activation instants for non-periodic roots and per-instance demands.

    Periodic and chained activations are derived; missing demands default to BCET.
    """
    activations: dict = field(default_factory=dict)  # task -> [instants]
    demands: dict = field(default_factory=dict)      # task -> [demand of instance 1, 2, ...]

    def demand(self, task, j, default):
        d = self.demands.get(task)
        if d is None or j > len(d):
            return default
        return d[j - 1]


@dataclass
class Job:
    task: str
    index: int
    alpha: int
    demand: int
    sigma: Optional[int] = None
    epsilon: Optional[int] = None
    remaining: int = 0

    @property
    def iota(self):
        if self.epsilon is None:
            return None
        return self.epsilon - self.sigma - self.demand


@dataclass
class SimSchedule:
    jobs: dict                      # (task, j) -> Job
    busy: dict                      # core -> [(start, end, task, j)]
    trace: list                     # (time, core, task, j, event)
    until: int

    def instances(self, task):
        out = []
        j = 1
        while (task, j) in self.jobs:
            out.append(self.jobs[(task, j)])
            j += 1
        return out

    def dump_trace(self) -> str:
        return "".join(f"{t} {c} {task} {j} {ev}\n" for t, c, task, j, ev in self.trace)


def _root_activations(system, scenario, until):
    acts = {}
    for t in system.tasks:
        a = t.activation
        if isinstance(a, Periodic):
            acts[t.id] = list(range(a.offset, until + 1, a.period))
        elif isinstance(a, (Bounded, Sporadic)):
            acts[t.id] = sorted(x for x in scenario.activations.get(t.id, []) if x <= until)
    return acts


def simulate(system: SystemModel, scenario: ConcreteScenario, until: int,
             check_deadlines: bool = True) -> SimSchedule:
    """Simulate fixed-priority preemptive scheduling on every core.

    Roots activate at or before ``until``; every activated job then runs to
    completion.  Same-instant rules: finishes are handled before activations,
    so an arrival at the runner's finish instant is not a preemption; a job
    displaced at the instant it was dispatched counts as not yet started; a
    zero-demand job completes at the first instant at which no higher-priority
    job that arrived strictly earlier is pending and no earlier-started
    non-preemptable job holds the core.
    """
    succ = {}
    for t in system.tasks:
        if isinstance(t.activation, Chained):
            succ.setdefault(t.activation.predecessor, []).append(t.id)
    spec = {t.id: t for t in system.tasks}
    counter = {t.id: 0 for t in system.tasks}
    jobs = {}
    trace = []
    busy = {c: [] for c in range(system.num_cores)}

    arrivals = []  # heap of (time, seq, task)
    seq = itertools.count()
    for tid, times in _root_activations(system, scenario, until).items():
        for x in times:
            heapq.heappush(arrivals, (x, next(seq), tid))

    ready = {c: [] for c in range(system.num_cores)}   # heap of (-prio, index, job)
    running = {c: None for c in range(system.num_cores)}
    run_since = {c: None for c in range(system.num_cores)}

    def activate(tid, now):
        t = spec[tid]
        counter[tid] += 1
        j = counter[tid]
        job = Job(tid, j, now, scenario.demand(tid, j, t.bcet))
        job.remaining = job.demand
        jobs[(tid, j)] = job
        heapq.heappush(ready[t.core], (-t.prio, j, job))
        trace.append((now, t.core, tid, j, "act"))

    def stop(core, now):
        job = running[core]
        if job is not None and run_since[core] is not None and now > run_since[core]:
            busy[core].append((run_since[core], now, job.task, job.index))
        run_since[core] = now

    def outranks(a, b):
        ta, tb = spec[a.task], spec[b.task]
        return ta.prio > tb.prio or (a.task == b.task and a.index < b.index)

    def _complete_zero_jobs(core, now):
        """Zero-demand jobs finish ahead of anything that arrived at this instant."""
        cur = running[core]
        if cur is not None and not spec[cur.task].preemptable and cur.sigma is not None \
                and cur.sigma < now:
            return False
        done = False
        for _, _, z in sorted(ready[core]):
            if z.demand != 0 or z.sigma is not None:
                continue
            pending = [j for _, _, j in ready[core]] + ([cur] if cur is not None else [])
            if any(j is not z and j.alpha < now and outranks(j, z) for j in pending):
                continue
            ready[core] = [e for e in ready[core] if e[2] is not z]
            heapq.heapify(ready[core])
            z.sigma = z.epsilon = now
            for ev in ("start", "finish", "write"):
                trace.append((now, core, z.task, z.index, ev))
            for nxt in succ.get(z.task, ()):
                activate(nxt, now)
            done = True
        return done

    now = 0
    while True:
        # finishes at `now`, then arrivals, then dispatch; repeat for zero-length work
        progress = True
        while progress:
            progress = False
            for c in range(system.num_cores):
                job = running[c]
                if job is not None and job.remaining == 0:
                    stop(c, now)
                    job.epsilon = now
                    running[c] = None
                    trace.append((now, c, job.task, job.index, "finish"))
                    trace.append((now, c, job.task, job.index, "write"))
                    t = spec[job.task]
                    limit = job.alpha + t.response_bound
                    if check_deadlines and now > limit:
                        raise DeadlineMiss(job.task, job.index, now, limit)
                    for s in succ.get(job.task, ()):
                        activate(s, now)
                    progress = True
            while arrivals and arrivals[0][0] == now:
                _, _, tid = heapq.heappop(arrivals)
                activate(tid, now)
                progress = True
            for c in range(system.num_cores):
                if _complete_zero_jobs(c, now):
                    progress = True
            for c in range(system.num_cores):
                cur = running[c]
                q = ready[c]
                # a job dispatched at this very instant has not run yet
                fresh = cur is not None and cur.sigma == now and cur.remaining == cur.demand
                if cur is not None and not spec[cur.task].preemptable and not fresh:
                    continue
                if q and (cur is None or -q[0][0] > spec[cur.task].prio):
                    _, _, nxt = heapq.heappop(q)
                    if cur is not None:
                        stop(c, now)
                        heapq.heappush(q, (-spec[cur.task].prio, cur.index, cur))
                        if fresh:
                            cur.sigma = None
                            trace.remove((now, c, cur.task, cur.index, "start"))
                        else:
                            trace.append((now, c, cur.task, cur.index, "preempt"))
                    running[c] = nxt
                    run_since[c] = now
                    if nxt.sigma is None:
                        nxt.sigma = now
                        trace.append((now, c, nxt.task, nxt.index, "start"))
                    else:
                        trace.append((now, c, nxt.task, nxt.index, "resume"))
                    progress = True
                    if nxt.remaining == 0:
                        continue
        # advance to the next event
        nxt_t = arrivals[0][0] if arrivals else None
        for c in range(system.num_cores):
            job = running[c]
            if job is not None:
                f = now + job.remaining
                if nxt_t is None or f < nxt_t:
                    nxt_t = f
        if nxt_t is None:
            break
        dt = nxt_t - now
        for c in range(system.num_cores):
            if running[c] is not None:
                running[c].remaining -= dt
        now = nxt_t
    for job in jobs.values():
        limit = job.alpha + spec[job.task].response_bound
        if check_deadlines and job.epsilon > limit:
            raise DeadlineMiss(job.task, job.index, job.epsilon, limit)
    return SimSchedule(jobs, busy, trace, until)


def _write_time(system, job):
    t = system[job.task]
    if t.comm is CommParadigm.DETERMINISTIC:
        # next release boundary after this instance's activation
        return job.alpha + t.activation.period
    return job.epsilon


def measure_chain(schedule: SimSchedule, system: SystemModel, chain: Chain,
                  start_window=None, first=None) -> int:
    """Worst realized chain latency over first-task instances.

    Returns ``x_last - alpha_first + gap(first task)``; ``first`` selects a single
    instance index, ``start_window`` an activation range.  Raises NoPath when no
    instance produces a complete chain.
    """
    gap = activation_gap(system, system[chain.tasks[0]])
    readers = []
    for tid in chain.tasks[1:]:
        det = system[tid].comm is CommParadigm.DETERMINISTIC
        jobs = schedule.instances(tid)
        readers.append([(j.alpha if det else j.sigma, j) for j in jobs])
    best = None
    for job in schedule.instances(chain.tasks[0]):
        if first is not None and job.index != first:
            continue
        if start_window is not None and not start_window[0] <= job.alpha <= start_window[1]:
            continue
        x = _write_time(system, job)
        ok = True
        for cands in readers:
            hit = next((j for thr, j in cands if thr >= x), None)
            if hit is None:
                ok = False
                break
            x = _write_time(system, hit)
        if ok:
            lat = x - job.alpha + gap
            best = lat if best is None else max(best, lat)
    if best is None:
        raise NoPath(f"chain {chain.name} does not complete within the simulated window")
    return best


def _grid(lo, hi, step):
    vals = list(range(lo, hi + 1, step))
    if vals[-1] != hi:
        vals.append(hi)
    return vals


def _activation_choices(task, T, step):
    """All activation sequences of a bounded/sporadic task on the grid within [0, T]."""
    a = task.activation
    out = []

    def rec(seq):
        if isinstance(a, Bounded):
            if not seq:
                nxt = _grid(0, a.dt_max, step)
            else:
                nxt = _grid(seq[-1] + a.dt_min, seq[-1] + a.dt_max, step)
            nxt = [x for x in nxt if x <= T]
            if not nxt:
                out.append(tuple(seq))
                return
            for x in nxt:
                rec(seq + [x])
        else:
            if seq:
                # stop here, or continue with a later activation
                out.append(tuple(seq))
                lo = seq[-1] + a.dt_min
            else:
                lo = 0
            if lo > T:
                if not seq:
                    out.append(())
                return
            for x in _grid(lo, T, step):
                rec(seq + [x])

    rec([])
    return out


def scenario_space(system: SystemModel, T: int, grid: int = 1):
    """Axes of the scenario grid: (activation axes, demand axes)."""
    act_axes = []
    for t in system.tasks:
        if isinstance(t.activation, (Bounded, Sporadic)):
            act_axes.append((t.id, _activation_choices(t, T, grid)))
    return act_axes


def _count_instances(system, acts, T):
    counts = {}

    def count(t):
        if t.id in counts:
            return counts[t.id]
        a = t.activation
        if isinstance(a, Periodic):
            n = len(range(a.offset, T + 1, a.period))
        elif isinstance(a, Chained):
            n = count(system[a.predecessor])
        else:
            n = len(acts[t.id])
        counts[t.id] = n
        return n

    for t in system.tasks:
        count(t)
    return counts


def enumerate_scenarios(system: SystemModel, T: int, grid: int = 1, budget: int = 200_000):
    act_axes = scenario_space(system, T, grid)
    names = [n for n, _ in act_axes]
    total = 0
    plans = []
    for combo in itertools.product(*(c for _, c in act_axes)):
        acts = dict(zip(names, combo))
        counts = _count_instances(system, acts, T)
        axes = []
        size = 1
        for t in system.tasks:
            choices = _grid(t.bcet, t.max_demand, grid)
            for j in range(1, counts[t.id] + 1):
                axes.append((t.id, j, choices))
                size *= len(choices)
        total += size
        if total > budget:
            raise BudgetExceeded(f"more than {budget} scenarios on grid {grid}")
        plans.append((acts, axes))
    for acts, axes in plans:
        for ds in itertools.product(*(c for _, _, c in axes)):
            demands = {}
            for (tid, j, _), d in zip(axes, ds):
                demands.setdefault(tid, []).append(d)
            yield ConcreteScenario({k: list(v) for k, v in acts.items()}, demands)


def brute_force_max(system: SystemModel, chain: Chain, grid: int = 1, budget: int = 200_000,
                    prune: bool = True, horizon=None) -> int:
    """Maximum simulated chain latency over every scenario on the grid.

    Scenarios with a deadline miss are skipped.  The chain start is restricted
    to the same window the analysis uses.
    """
    rel = relevant_tasks(system, chain) if prune else set(system.ids)
    sub = system.restrict(rel)
    hz = horizon or compute_horizon(system, chain, rel)
    best = None
    for sc in enumerate_scenarios(sub, hz.T, grid, budget):
        try:
            sched = simulate(sub, sc, hz.T)
            lat = measure_chain(sched, sub, chain, hz.start_window)
        except (DeadlineMiss, NoPath):
            continue
        best = lat if best is None else max(best, lat)
    if best is None:
        raise NoPath("no deadline-respecting scenario completes the chain")
    return best


def random_scenario(system: SystemModel, T: int, seed) -> ConcreteScenario:
    """Random activations and demands; used for soundness sampling."""
    rng = random.Random(seed)
    acts = {}
    for t in system.tasks:
        a = t.activation
        if isinstance(a, Bounded):
            xs = [rng.randint(0, a.dt_max)]
            while xs[-1] <= T:
                xs.append(xs[-1] + rng.randint(a.dt_min, a.dt_max))
            acts[t.id] = xs
        elif isinstance(a, Sporadic):
            xs = [rng.randint(0, T)]
            while xs[-1] <= T:
                xs.append(xs[-1] + a.dt_min + int(rng.expovariate(1.0 / (a.dt_min + 1))))
            acts[t.id] = xs
    demands = {}
    for t in system.tasks:
        n = T // _min_gap(t, system) + 2
        demands[t.id] = [rng.choice((t.bcet, t.max_demand, rng.randint(t.bcet, t.max_demand)))
                         for _ in range(n)]
    return ConcreteScenario(acts, demands)


def _min_gap(t, system):
    a = t.activation
    if isinstance(a, Periodic):
        return a.period
    if isinstance(a, (Bounded, Sporadic)):
        return a.dt_min
    return _min_gap(system[a.predecessor], system)
