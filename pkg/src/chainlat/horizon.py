"""Relevant tasks, analysis window and per-task instance counts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import lcm as _lcm

from .model import Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, SystemModel, TaskSpec

MAX_TIME = 2**63 - 1


class HorizonOverflow(ArithmeticError):
    pass


class UnboundedChain(ValueError):
    """A chain link waits on a sporadic root, so no finite window exists."""


@dataclass(frozen=True)
class Horizon:
    T: int
    O: int
    lcm: int
    ub: int
    instance_counts: dict = field(compare=True)
    O_p: int = 0
    O_s: int = 0
    gap: int = 0
    extra: int = 0

    @property
    def start_window(self) -> tuple[int, int]:
        """Activation range for the first chain instance."""
        return self.O, self.O + self.lcm

    def extended(self, delta: int, system: SystemModel) -> "Horizon":
        """Same window parameters, ``delta`` more time at the end."""
        T = self.T + delta
        counts = compute_instance_counts(system, self.instance_counts.keys(), T)
        return replace(self, T=T, extra=self.extra + delta, instance_counts=counts)


def relevant_tasks(system: SystemModel, chain: Chain) -> set[str]:
    rel = set(chain.tasks)
    changed = True
    while changed:
        changed = False
        for t in system.tasks:
            if t.id in rel:
                continue
            for r in (system[x] for x in list(rel)):
                if t.core == r.core and (t.prio > r.prio or not t.preemptable):
                    break
                if isinstance(r.activation, Chained) and r.activation.predecessor == t.id:
                    break
            else:
                continue
            rel.add(t.id)
            changed = True
    return rel


def root_of(system: SystemModel, task: TaskSpec) -> TaskSpec:
    while isinstance(task.activation, Chained):
        task = system[task.activation.predecessor]
    return task


def activation_gap(system: SystemModel, task: TaskSpec) -> int:
    """Largest distance between two consecutive activations (0 if unbounded)."""
    a = task.activation
    if isinstance(a, Periodic):
        return a.period
    if isinstance(a, Bounded):
        return a.dt_max
    if isinstance(a, Sporadic):
        return 0
    pred = system[a.predecessor]
    g = activation_gap(system, pred)
    return g + pred.response_bound if g else 0


def link_cost(task: TaskSpec) -> int:
    """Bound on activation-to-write time of one instance."""
    if task.comm is CommParadigm.DETERMINISTIC:
        return max(task.activation.period, task.response_bound)
    return task.response_bound


def chain_upper_bound(system: SystemModel, chain: Chain) -> int:
    first = system[chain.tasks[0]]
    ub = activation_gap(system, first) + link_cost(first)
    for tid in chain.tasks[1:]:
        t = system[tid]
        wait = activation_gap(system, t)
        if wait == 0:
            raise UnboundedChain(f"task {tid} at a reading position is sporadically rooted")
        ub += wait + link_cost(t)
    return ub


def _release_jitter(system, task, resp) -> tuple[int, int]:
    """(min spacing, jitter) of consecutive activations, for interference counting."""
    a = task.activation
    if isinstance(a, Periodic):
        return a.period, 0
    if isinstance(a, (Bounded, Sporadic)):
        return a.dt_min, 0
    pred = system[a.predecessor]
    p, j = _release_jitter(system, pred, resp)
    return p, j + resp[pred.id] - pred.bcet


def _busy_window(c, block, hp, space, jit, limit) -> int:
    """Worst response over all jobs of a level-i busy window (preemptive task)."""
    def interference(w):
        return sum(-(-(w + j) // p) * u.max_demand for u, p, j in hp)

    # length of the busy window, own jobs included
    L = c + block
    while L <= 64 * max(limit, 1):
        nxt = block + -(-(L + jit) // space) * c + interference(L)
        if nxt == L:
            break
        L = nxt
    else:
        return limit + 1
    worst = 0
    for q in range(-(-(L + jit) // space)):
        w = (q + 1) * c + block
        while True:
            nxt = (q + 1) * c + block + interference(w)
            if nxt == w:
                break
            w = nxt
            if w - q * space + jit > limit:
                return limit + 1
        worst = max(worst, w - q * space + jit)
    return worst


def response_time_bounds(system: SystemModel) -> dict[str, int]:
    """Busy-window response-time bounds under FPPS with non-preemptive blocking.

    Used only to tighten domains; a task whose recurrence does not settle within
    its deadline, or may overlap its own next activation, keeps its trivial bound.
    """
    resp = {t.id: t.response_bound for t in system.tasks}
    by_core: dict = {}
    for t in system.tasks:
        by_core.setdefault(t.core, []).append(t)
    for changed in range(len(system.tasks) + 1):
        changed = False
        for t in sorted(system.tasks, key=lambda t: -t.prio):
            peers = by_core[t.core]
            hp = [(u,) + _release_jitter(system, u, resp) for u in peers if u.prio > t.prio]
            block = max((u.max_demand for u in peers if u.prio < t.prio and not u.preemptable),
                        default=0)
            c = t.max_demand
            limit = resp[t.id]
            space, jit = _release_jitter(system, t, resp)
            if t.preemptable and c > 0:
                r = _busy_window(c, block, hp, space, jit, limit)
            else:
                w = block
                while w + c <= limit:
                    # arrivals up to and including the start instant delay it
                    nxt = block + sum(((w + j) // p + 1) * u.max_demand for u, p, j in hp)
                    if nxt == w:
                        break
                    w = nxt
                r = w + c
                if r > space - jit:
                    # may queue behind its own previous job: not covered here
                    r = limit + 1
            if r <= limit and r < resp[t.id]:
                resp[t.id] = r
                changed = True
        if not changed:
            break
    return resp


def compute_instance_counts(system: SystemModel, relevant, T: int) -> dict[str, int]:
    counts: dict[str, int] = {}

    def count(t: TaskSpec) -> int:
        if t.id in counts:
            return counts[t.id]
        a = t.activation
        if isinstance(a, Periodic):
            m = max(1, (T - a.offset) // a.period + 1) if a.offset <= T else 1
        elif isinstance(a, (Bounded, Sporadic)):
            m = T // a.dt_min + 1
        else:
            m = count(system[a.predecessor])
        counts[t.id] = m
        return m

    for tid in relevant:
        count(system[tid])
    return {tid: counts[tid] for tid in relevant}


def compute_horizon(system: SystemModel, chain: Chain, relevant=None) -> Horizon:
    if relevant is None:
        relevant = relevant_tasks(system, chain)
    rel = [system[t] for t in system.ids if t in relevant]
    periodic = [t.activation for t in rel if isinstance(t.activation, Periodic)]
    bounded = [t.activation for t in rel if isinstance(t.activation, Bounded)]
    hyper = _lcm(*(p.period for p in periodic)) if periodic else 1
    O_p = max((p.offset + p.period for p in periodic), default=0)
    O_s = max((b.dt_max for b in bounded), default=0)
    O = max(O_p, O_s)
    ub = chain_upper_bound(system, chain)
    T = O + hyper + ub
    if T > MAX_TIME:
        raise HorizonOverflow(f"window length {T} exceeds the 64-bit time range")
    return Horizon(
        T=T, O=O, lcm=hyper, ub=ub,
        instance_counts=compute_instance_counts(system, [t.id for t in rel], T),
        O_p=O_p, O_s=O_s, gap=activation_gap(system, system[chain.tasks[0]]),
    )
