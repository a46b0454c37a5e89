"""Task, system and chain types plus structural validation.

All times are integer microseconds.  Larger ``prio`` means higher priority.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union


class CommParadigm(str, Enum):
    IMPLICIT = "implicit"
    EXPLICIT = "explicit"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class Periodic:
    period: int
    offset: int = 0
    kind = "periodic"


@dataclass(frozen=True)
class Chained:
    predecessor: str
    kind = "chained"


@dataclass(frozen=True)
class Bounded:
    dt_min: int
    dt_max: int
    kind = "bounded"


@dataclass(frozen=True)
class Sporadic:
    dt_min: int
    kind = "sporadic"


ActivationPattern = Union[Periodic, Chained, Bounded, Sporadic]


@dataclass(frozen=True)
class TaskSpec:
    id: str
    activation: ActivationPattern
    prio: int
    core: int
    deadline: int
    bcet: int = 0
    preemptable: bool = True
    wcet: Optional[int] = None
    wcrt: Optional[int] = None
    comm: CommParadigm = CommParadigm.IMPLICIT
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or self.id

    @property
    def is_periodic(self) -> bool:
        return isinstance(self.activation, Periodic)

    @property
    def is_chained(self) -> bool:
        return isinstance(self.activation, Chained)

    @property
    def max_demand(self) -> int:
        """Largest execution demand the task may ever exhibit."""
        return self.deadline if self.wcet is None else min(self.wcet, self.deadline)

    @property
    def response_bound(self) -> int:
        """Trivial response-time bound: the WCRT if given, else the deadline."""
        return self.deadline if self.wcrt is None else min(self.wcrt, self.deadline)


@dataclass(frozen=True)
class SystemModel:
    tasks: tuple[TaskSpec, ...]
    num_cores: int
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t.id: t for t in self.tasks})

    def __getitem__(self, task_id: str) -> TaskSpec:
        return self._index[task_id]

    def __contains__(self, task_id) -> bool:
        return task_id in self._index

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.tasks]

    def restrict(self, keep: Iterable[str]) -> "SystemModel":
        keep = set(keep)
        return SystemModel(tuple(t for t in self.tasks if t.id in keep), self.num_cores)


@dataclass(frozen=True)
class Chain:
    tasks: tuple[str, ...]
    name: str = "chain"

    def __len__(self):
        return len(self.tasks)


@dataclass(frozen=True)
class Violation:
    rule: str
    task: Optional[str]
    message: str

    def __str__(self):
        where = f"[{self.task}] " if self.task is not None else ""
        return f"{self.rule}: {where}{self.message}"


class ValidationError(ValueError):
    """Raised with the complete list of violated rules."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_task(t, num_cores, out: list[Violation]):
    tid = getattr(t, "id", None)

    def bad(rule, msg):
        out.append(Violation(rule, tid, msg))

    if not isinstance(t, TaskSpec):
        bad("BadTask", f"not a TaskSpec: {t!r}")
        return
    a = t.activation
    if isinstance(a, Periodic):
        if not (_is_int(a.period) and a.period > 0):
            bad("BadBounds", f"period must be a positive integer, got {a.period!r}")
        if not (_is_int(a.offset) and a.offset >= 0):
            bad("BadBounds", f"offset must be a non-negative integer, got {a.offset!r}")
    elif isinstance(a, Bounded):
        if not (_is_int(a.dt_min) and a.dt_min > 0):
            bad("BadBounds", f"dt_min must be a positive integer, got {a.dt_min!r}")
        elif not (_is_int(a.dt_max) and a.dt_max >= a.dt_min):
            bad("BadBounds", f"dt_max must be >= dt_min, got {a.dt_max!r}")
    elif isinstance(a, Sporadic):
        if not (_is_int(a.dt_min) and a.dt_min > 0):
            bad("BadBounds", f"dt_min must be a positive integer, got {a.dt_min!r}")
    elif isinstance(a, Chained):
        if a.predecessor == t.id:
            bad("ChainedCycle", "task is chained to itself")
    else:
        bad("BadActivation", f"unknown activation pattern {a!r}")

    if not (_is_int(t.prio) and t.prio >= 0):
        bad("BadBounds", f"prio must be a non-negative integer, got {t.prio!r}")
    if not (_is_int(t.core) and 0 <= t.core < num_cores):
        bad("BadCore", f"core {t.core!r} outside [0, {num_cores})")
    if not (_is_int(t.deadline) and t.deadline > 0):
        bad("BadBounds", f"deadline must be a positive integer, got {t.deadline!r}")
        return
    if not (_is_int(t.bcet) and 0 <= t.bcet <= t.deadline):
        bad("BadBounds", f"bcet must lie in [0, deadline], got {t.bcet!r}")
        return
    if t.wcet is not None and not (_is_int(t.wcet) and t.bcet <= t.wcet <= t.deadline):
        bad("BadBounds", f"wcet must lie in [bcet, deadline], got {t.wcet!r}")
    if t.wcrt is not None and not (_is_int(t.wcrt) and t.wcrt >= t.bcet):
        bad("BadBounds", f"wcrt must be >= bcet, got {t.wcrt!r}")
    if not isinstance(t.preemptable, bool):
        bad("BadTask", "preemptable must be a boolean")
    if not isinstance(t.comm, CommParadigm):
        bad("BadTask", f"unknown communication paradigm {t.comm!r}")
    elif t.comm is CommParadigm.DETERMINISTIC and not isinstance(a, Periodic):
        bad("DeterministicNonPeriodic", "deterministic communication needs periodic activation")


def validate_system(raw_tasks, num_cores) -> SystemModel:
    """Check every structural rule and return an immutable :class:`SystemModel`.

    Raises :class:`ValidationError` listing all violations at once.
    """
    out: list[Violation] = []
    if isinstance(raw_tasks, SystemModel):
        raw_tasks = raw_tasks.tasks
    if not (_is_int(num_cores) and num_cores >= 1):
        out.append(Violation("BadCore", None, f"num_cores must be >= 1, got {num_cores!r}"))
        num_cores = 0
    try:
        tasks = list(raw_tasks)
    except TypeError:
        raise ValidationError([Violation("BadTask", None, "task list is not iterable")])
    if not tasks:
        out.append(Violation("EmptySystem", None, "system has no tasks"))

    ids: dict = {}
    for t in tasks:
        _check_task(t, num_cores, out)
        tid = getattr(t, "id", None)
        if tid in ids:
            out.append(Violation("DuplicateId", tid, "task id used more than once"))
        ids[tid] = t

    good = [t for t in tasks if isinstance(t, TaskSpec)]
    for t in good:
        if isinstance(t.activation, Chained) and t.activation.predecessor not in ids:
            out.append(Violation("UnknownPredecessor", t.id,
                                 f"predecessor {t.activation.predecessor!r} does not exist"))

    # cycles in the chained-activation graph
    reported = set()
    for t in good:
        seen = []
        cur = t
        while isinstance(cur, TaskSpec) and isinstance(cur.activation, Chained):
            if cur.id in seen:
                cyc = tuple(sorted(seen[seen.index(cur.id):]))
                if cyc not in reported and cur.activation.predecessor != cur.id:
                    reported.add(cyc)
                    out.append(Violation("ChainedCycle", cur.id,
                                         "chained activation cycle through " + ", ".join(cyc)))
                break
            seen.append(cur.id)
            cur = ids.get(cur.activation.predecessor)

    by_slot: dict = {}
    for t in good:
        key = (t.core, t.prio)
        if key in by_slot:
            out.append(Violation("DuplicatePriorityOnCore", t.id,
                                 f"priority {t.prio} already used by {by_slot[key]} on core {t.core}"))
        else:
            by_slot[key] = t.id

    if out:
        raise ValidationError(out)
    return SystemModel(tuple(tasks), num_cores)


def validate_chain(system: SystemModel, chain) -> Chain:
    if isinstance(chain, Chain):
        name, ids = chain.name, chain.tasks
    else:
        name, ids = "chain", tuple(chain)
    out = []
    if not ids:
        out.append(Violation("EmptyChain", None, "chain has no tasks"))
    for pos, tid in enumerate(ids):
        if tid not in system:
            out.append(Violation("UnknownTask", tid, f"chain position {pos + 1} names an unknown task"))
        elif pos > 0 and isinstance(system[tid].activation, Sporadic):
            out.append(Violation("SporadicNotFirst", tid,
                                 f"sporadic task at chain position {pos + 1}; only position 1 is allowed"))
    if out:
        raise ValidationError(out)
    return Chain(tuple(ids), name)
