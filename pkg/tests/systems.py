"""Small hand-built and seeded random systems shared by the tests."""

import random

from chainlat import (Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, TaskSpec,
                      ValidationError, validate_system)

I, E, D = CommParadigm.IMPLICIT, CommParadigm.EXPLICIT, CommParadigm.DETERMINISTIC


def single(period=10, deadline=4, bcet=0, comm=I):
    s = validate_system([TaskSpec("A", Periodic(period), 1, 0, deadline, bcet=bcet, comm=comm)], 1)
    return s, Chain(("A",))


def lh_pair():
    """L (demand 5, act 0) preempted by H (demand 2, act 1) on one core."""
    return validate_system([
        TaskSpec("L", Periodic(20), 1, 0, 10, bcet=5, wcet=5),
        TaskSpec("H", Periodic(20, 1), 2, 0, 5, bcet=2, wcet=2),
    ], 1)


def ab_pair(comm, ms=1000, wcet_a=2, wcet_b=1):
    """A(10 ms) -> B(5 ms) on two cores; ``ms`` scales the time unit."""
    s = validate_system([
        TaskSpec("A", Periodic(10 * ms), 2, 0, 10 * ms, wcet=wcet_a * ms, comm=comm),
        TaskSpec("B", Periodic(5 * ms), 1, 1, 5 * ms, wcet=wcet_b * ms, comm=comm),
    ], 2)
    return s, Chain(("A", "B"))


def bcet_triple(with_bcet=True):
    """A on core 0 feeds B on core 1; H delays B by at least its BCET.

    With BCETs, H's minimal demand exceeds A's worst finish, so B always reads
    the fresh value; without them B can start first and miss a whole period.
    """
    b = (lambda x: x) if with_bcet else (lambda x: 0)
    s = validate_system([
        TaskSpec("A", Periodic(10), 1, 0, 10, bcet=b(2), wcet=3),
        TaskSpec("H", Periodic(10), 2, 1, 10, bcet=b(4), wcet=5),
        TaskSpec("B", Periodic(10), 1, 1, 10, bcet=b(1), wcet=2),
    ], 2)
    return s, Chain(("A", "B"))


def toy(seed):
    """2 to 4 tasks, 1 or 2 cores, unit-grid times; chain of 1 to 3 links.

    Raises ValidationError for draws that break a model rule (callers skip them).
    """
    rng = random.Random(seed)
    n = rng.randint(2, 4)
    cores = rng.randint(1, 2)
    tasks = []
    for i in range(n):
        if i > 0 and rng.random() < 0.2:
            act = Chained("T%d" % rng.randrange(i))
            dl = rng.randint(2, 4)
        else:
            p = rng.choice([4, 6, 8, 12])
            act = Periodic(p, rng.randrange(0, 3))
            dl = rng.randint(2, p)
        bcet = rng.randint(0, min(dl, 2))
        wcet = min(dl, bcet + rng.randint(0, 1))
        tasks.append(TaskSpec("T%d" % i, act, prio=rng.randrange(100), core=rng.randrange(cores),
                              deadline=dl, bcet=bcet, wcet=wcet, preemptable=rng.random() < 0.8,
                              comm=rng.choice([I, E])))
    system = validate_system(tasks, cores)
    chain = Chain(tuple(rng.choice(system.ids) for _ in range(rng.randint(1, 3))))
    return system, chain


def toys(count, start=0):
    """The first ``count`` valid toy draws from ``start`` on, as (seed, system, chain)."""
    out = []
    seed = start
    while len(out) < count:
        try:
            out.append((seed,) + toy(seed))
        except ValidationError:
            pass
        seed += 1
    return out


def medium(seed):
    """5 to 10 tasks on 1 or 2 cores with every activation kind; chain of 2 or 3 links."""
    rng = random.Random(seed)
    n = rng.randint(5, 10)
    cores = rng.randint(1, 2)
    tasks = []
    prios = rng.sample(range(1, 100), n)
    for i in range(n):
        tid = "T%d" % i
        c = rng.randrange(cores)
        roll = rng.random()
        if i > 0 and roll < 0.15:
            pred = tasks[rng.randrange(i)]
            if isinstance(pred.activation, Sporadic):
                pred = tasks[0]
            act, dl = Chained(pred.id), rng.randint(3, 6)
        elif roll < 0.25:
            lo = rng.choice([10, 20])
            act, dl = Bounded(lo, lo + rng.choice([0, 5, 10])), lo
        elif roll < 0.3:
            act, dl = Sporadic(rng.choice([20, 40])), 20
        else:
            p = rng.choice([10, 20, 40])
            act, dl = Periodic(p, rng.randrange(0, 5)), p
        wcet = rng.randint(0, max(1, dl // 8))
        bcet = rng.randint(0, wcet)
        comm = rng.choice([I, E]) if not isinstance(act, Periodic) else rng.choice([I, E, E, D])
        tasks.append(TaskSpec(tid, act, prios[i], c, dl, bcet=bcet, wcet=wcet,
                              preemptable=rng.random() < 0.85, comm=comm))
    system = validate_system(tasks, cores)
    usable = [t.id for t in system.tasks if not isinstance(t.activation, Sporadic)]
    chain = Chain(tuple(rng.sample(usable, min(len(usable), rng.randint(2, 3)))))
    return system, chain
