"""Seeded synthetic task sets shaped like published automotive benchmarks.

Unpublished parameters come from these distributions (all times in us):

* periods: drawn from the automotive rate set {1, 2, 5, 10, 20, 50, 100, 200, 1000} ms;
* per-core utilization is split with UUniFast; WCET = u * period, BCET = WCET * U(0.2, 0.8);
* deadlines equal periods (chained tasks inherit their root's period);
* priorities are rate-monotonic per core, sporadic tasks below all periodic ones;
* sporadic event handlers have a relaxed deadline of 1000 ms;
* 10 % of periodic tasks with periods up to 10 ms are non-preemptable;
* communication is implicit unless noted.

Each profile redraws (advancing the same seeded generator) until the
response-time analysis proves every deadline, so generated sets are schedulable.
"""

from __future__ import annotations

import random

from .horizon import UnboundedChain, compute_horizon, relevant_tasks, response_time_bounds
from .model import (Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, TaskSpec,
                    validate_chain, validate_system)

MS = 1000
RATES_MS = (1, 2, 5, 10, 20, 50, 100, 200, 1000)


def uunifast(rng: random.Random, n: int, total: float) -> list[float]:
    out, rest = [], total
    for i in range(1, n):
        nxt = rest * rng.random() ** (1.0 / (n - i))
        out.append(rest - nxt)
        rest = nxt
    out.append(rest)
    return out


def _timing(rng, period, u):
    wcet = max(1, int(period * u))
    bcet = max(0, int(wcet * rng.uniform(0.2, 0.8)))
    return bcet, wcet


def _assign_priorities(specs):
    """Rate-monotonic per core; sporadic tasks below periodic ones; stable ties."""
    by_core = {}
    for k, s in enumerate(specs):
        by_core.setdefault(s["core"], []).append((k, s))
    for items in by_core.values():
        items.sort(key=lambda ks: (ks[1]["rank"], ks[0]))
        for p, (_, s) in enumerate(reversed(items), start=1):
            s["prio"] = p


class Unschedulable(Exception):
    pass


def _np(rng, period):
    return rng.random() >= 0.1 or period > 10 * MS


def _build(specs, num_cores):
    _assign_priorities(specs)
    tasks = [TaskSpec(s["id"], s["act"], s["prio"], s["core"], s["deadline"], bcet=s["bcet"],
                      wcet=s["wcet"], preemptable=s.get("preemptable", True),
                      comm=s.get("comm", CommParadigm.IMPLICIT)) for s in specs]
    system = validate_system(tasks, num_cores)
    rta = response_time_bounds(system)
    if any(rta[t.id] >= t.deadline for t in system.tasks if t.max_demand < t.deadline):
        raise Unschedulable
    return system


def _window_size(system, chain) -> int:
    try:
        hz = compute_horizon(system, chain, relevant_tasks(system, chain))
    except UnboundedChain:
        return 1 << 62
    return sum(hz.instance_counts.values())


def _pick_chain(rng, system, candidates, length, budget, tries=200):
    """Random cross-core chain over ``candidates`` whose window holds <= budget instances."""
    best = None
    for _ in range(tries):
        pool = list(candidates)
        rng.shuffle(pool)
        picked, cores = [], set()
        for tid in pool:
            if system[tid].core not in cores or len(cores) == system.num_cores:
                picked.append(tid)
                cores.add(system[tid].core)
            if len(picked) == length:
                break
        chain = Chain(tuple(picked), "main")
        size = _window_size(system, chain)
        if size <= budget:
            return chain
        if best is None or size < best[0]:
            best = (size, chain)
    return best[1]


def ptc_a(seed: int):
    """2 cores: 9 periodic tasks on core 0, 8 chained counterparts on core 1."""
    rng = random.Random(seed)
    specs = []
    periods = [rng.choice(RATES_MS[1:7]) * MS for _ in range(9)]
    for k, (P, u) in enumerate(zip(periods, uunifast(rng, 9, 0.5))):
        bcet, wcet = _timing(rng, P, u)
        specs.append(dict(id=f"P{k}", act=Periodic(P, rng.randrange(0, P // 10 + 1, 100)),
                          core=0, deadline=P, bcet=bcet, wcet=wcet, rank=P,
                          preemptable=_np(rng, P)))
    roots = rng.sample(range(9), 8)
    for k, (r, u) in enumerate(zip(roots, uunifast(rng, 8, 0.4))):
        P = periods[r]
        bcet, wcet = _timing(rng, P // 2, u)
        specs.append(dict(id=f"C{k}", act=Chained(f"P{r}"), core=1, deadline=P // 2, bcet=bcet,
                          wcet=wcet, rank=P))
    system = _build(specs, 2)
    chained = {t.activation.predecessor: t.id for t in system.tasks if t.is_chained}
    best = None
    for _ in range(200):
        # periodic writer -> its core-1 counterpart -> another core-0 reader
        r = f"P{rng.choice(roots)}"
        reader = rng.choice([t.id for t in system.tasks if t.is_periodic and t.id != r])
        chain = Chain((r, chained[r], reader), "main")
        size = _window_size(system, chain)
        if best is None or size < best[0]:
            best = (size, chain)
        if size <= 400:
            break
    return system, {"main": validate_chain(system, best[1])}


def ptc_b(seed: int):
    """4 cores, 39 tasks: 23 periodic (1 ms to 1000 ms), 16 sporadic."""
    rng = random.Random(seed)
    specs = []
    cores = [k % 4 for k in range(23)]
    rng.shuffle(cores)
    periods = [rng.choice(RATES_MS) * MS for _ in range(23)]
    util = {c: uunifast(rng, cores.count(c) + 4, 0.55) for c in range(4)}
    for k, (P, c) in enumerate(zip(periods, cores)):
        bcet, wcet = _timing(rng, P, util[c].pop())
        specs.append(dict(id=f"P{k}", act=Periodic(P, 0), core=c, deadline=P, bcet=bcet,
                          wcet=wcet, rank=P, preemptable=_np(rng, P),
                          comm=rng.choice([CommParadigm.IMPLICIT, CommParadigm.EXPLICIT])))
    for k in range(16):
        c = k % 4
        dt = rng.choice((5, 10, 20, 50)) * MS
        share = util[c].pop() if util[c] else 0.01
        bcet, wcet = _timing(rng, dt, share)
        specs.append(dict(id=f"S{k}", act=Sporadic(dt), core=c, deadline=1000 * MS,
                          bcet=bcet, wcet=wcet, rank=10**12 + dt))
    system = _build(specs, 4)
    cands = [t.id for t in system.tasks if t.is_periodic]
    return system, {"main": _pick_chain(rng, system, cands, 3, 120)}


def ecm_like(seed: int):
    """Engine-control shape: a 6-task chain over angle-synchronous and periodic tasks."""
    rng = random.Random(seed)
    specs = []
    # angle-synchronous triggers: one per crank segment, between 6000 and 600 rpm
    lo_dt = rng.choice((5, 10)) * MS
    specs.append(dict(id="crank", act=Bounded(lo_dt, 2 * lo_dt), core=0, deadline=lo_dt,
                      rank=0, **_bw(rng, lo_dt, 0.15)))
    specs.append(dict(id="inj_calc", act=Chained("crank"), core=0, deadline=lo_dt // 2,
                      rank=1, **_bw(rng, lo_dt // 2, 0.2)))
    for k, P in enumerate((5 * MS, 10 * MS, 20 * MS)):
        specs.append(dict(id=f"bg{k}", act=Periodic(P, 0), core=k % 2, deadline=P, rank=P,
                          **_bw(rng, P, 0.1)))
    specs.append(dict(id="airpath", act=Periodic(10 * MS, 0), core=1, deadline=10 * MS,
                      rank=1, **_bw(rng, 10 * MS, 0.15)))
    specs.append(dict(id="torque", act=Periodic(20 * MS, 0), core=1, deadline=20 * MS,
                      rank=2, comm=CommParadigm.DETERMINISTIC, **_bw(rng, 20 * MS, 0.15)))
    specs.append(dict(id="ignition", act=Chained("crank"), core=1, deadline=lo_dt // 2,
                      rank=0, **_bw(rng, lo_dt // 2, 0.15)))
    specs.append(dict(id="diag", act=Sporadic(50 * MS), core=0, deadline=1000 * MS,
                      rank=10**12, **_bw(rng, 50 * MS, 0.05)))
    system = _build(specs, 2)
    chain = Chain(("crank", "inj_calc", "airpath", "torque", "ignition", "inj_calc"), "main")
    return system, {"main": validate_chain(system, chain)}


def _bw(rng, budget, u):
    bcet, wcet = _timing(rng, budget, u * rng.uniform(0.5, 1.0))
    return dict(bcet=bcet, wcet=wcet)


def random_profile(seed: int):
    """Small random system (3 to 6 tasks, 1 or 2 cores) with one chain."""
    rng = random.Random(seed)
    n = rng.randint(3, 6)
    cores = rng.randint(1, 2)
    specs = []
    for k in range(n):
        c = rng.randrange(cores)
        if k and rng.random() < 0.2:
            pred = specs[rng.randrange(k)]
            budget = pred["deadline"] // 2
            specs.append(dict(id=f"T{k}", act=Chained(pred["id"]), core=c, deadline=budget,
                              rank=pred["rank"], **_bw(rng, budget, 0.3)))
            continue
        P = rng.choice((1, 2, 5, 10)) * MS
        specs.append(dict(id=f"T{k}", act=Periodic(P, rng.randrange(0, P // 2 + 1, 100)),
                          core=c, deadline=P, rank=P, preemptable=_np(rng, P),
                          comm=rng.choice(list(CommParadigm)[:2]), **_bw(rng, P, 0.6 / n)))
    system = _build(specs, cores)
    ids = system.ids
    chain = Chain(tuple(rng.sample(ids, min(len(ids), rng.randint(2, 3)))), "main")
    return system, {"main": chain}


PROFILES = {"ptc-a": ptc_a, "ptc-b": ptc_b, "ecm-like": ecm_like, "random": random_profile}


def generate(profile: str, seed: int, attempts: int = 1000):
    """Return ``(system, chains)`` for a named profile; deterministic in ``seed``."""
    for k in range(attempts):
        try:
            return PROFILES[profile](seed * attempts + k)
        except Unschedulable:
            continue
    raise RuntimeError(f"profile {profile} found no schedulable set for seed {seed}")
