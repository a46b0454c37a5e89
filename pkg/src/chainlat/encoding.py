"""Constraint encoding of all feasible schedules plus the chain latency objective.

Every task instance carries four integer variables: activation ``alpha``,
start ``sigma``, paused time ``iota`` and finish ``epsilon``.  The chain adds
an instance index ``n_k`` and a write instant ``x_k`` per position, the
activation of the first chain instance (``start``) and the latency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .horizon import Horizon, response_time_bounds
from .model import Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, SystemModel


class VarKind(str, Enum):
    ALPHA = "alpha"
    SIGMA = "sigma"
    IOTA = "iota"
    EPSILON = "epsilon"
    CHAIN_INDEX = "n"
    CHAIN_WRITE = "x"
    CHAIN_START = "start"
    LATENCY = "latency"


@dataclass(frozen=True)
class VarRef:
    kind: VarKind
    task: Union[str, int, None] = None  # task id, or chain position k (1-based)
    instance: Optional[int] = None      # 1-based instance index

    def __str__(self):
        k = self.kind.value
        if self.kind in (VarKind.CHAIN_INDEX, VarKind.CHAIN_WRITE):
            return f"{k}[{self.task}]"
        if self.task is None:
            return k
        return f"{k}[{self.task},{self.instance}]"


# All constraints refer to variables by integer index into ConstraintSystem.variables.

@dataclass(frozen=True)
class LinearLe:
    """sum(c * v) <= const"""
    terms: tuple  # ((coef, var), ...)
    const: int


@dataclass(frozen=True)
class LinearEq:
    terms: tuple
    const: int


@dataclass(frozen=True)
class MaxTerm:
    value: int
    guard_lhs: int  # guard reads  var[guard_lhs] + shift (+1 if zero) <= var[guard_rhs]
    guard_rhs: int
    tag: str = "hp"
    shift: int = 0
    zero_of: tuple = ()  # (eps, sigma) of the target; equal means a zero-demand start


@dataclass(frozen=True)
class MaxOfSet:
    """target = max({base} | {value : guard_lhs + shift <= guard_rhs})"""
    target: int
    base: int
    terms: tuple  # MaxTerm...


@dataclass(frozen=True)
class SumTerm:
    sigma: int
    epsilon: int
    iota: int
    w_lo: int  # implied bounds of epsilon - sigma - iota
    w_hi: int


@dataclass(frozen=True)
class ConditionalSum:
    """target = sum(eps_l - sig_l - iota_l  for terms with sig_l > sigma and eps_l < epsilon)"""
    target: int
    sigma: int
    epsilon: int
    terms: tuple  # SumTerm...


@dataclass(frozen=True)
class MinIndex:
    """index = least j (1-based) with seq[j-1] >= threshold"""
    index: int
    threshold: int
    seq: tuple


@dataclass(frozen=True)
class Element:
    """result REL seq[index-1], REL in {'le', 'ge', 'eq'} -- guarded on the index value"""
    result: int
    index: int
    seq: tuple
    rel: str


@dataclass(frozen=True)
class WorkConserving:
    """No idle instant between activation and start.

    Every point p in {alpha} | {eps of all terms} with alpha <= p < sigma must lie
    inside a blocking interval: [a_l, e_l) for ``hp`` pairs (a_l, e_l), or
    [alpha, e_l) with s_l < alpha for ``np`` pairs (s_l, e_l).  With ``zero_of``
    = (eps, sigma) and eps == sigma, an hp pair blocks only from a_l + 1 on.
    """
    sigma: int
    alpha: int
    hp: tuple  # ((alpha_l, eps_l), ...)
    np: tuple  # ((sigma_l, eps_l), ...)
    zero_of: tuple = ()


@dataclass(frozen=True)
class Nested:
    """A preemptor starting inside (sigma, epsilon) finishes first.

    sig_l <= sigma  or  sig_l >= epsilon  or  eps_l < epsilon
    """
    sigma: int
    epsilon: int
    sig_l: int
    eps_l: int


Constraint = Union[LinearLe, LinearEq, MaxOfSet, ConditionalSum, MinIndex, Element,
                   WorkConserving, Nested]


@dataclass
class ConstraintSystem:
    variables: list          # VarRef per index
    lo: list                 # initial domains
    hi: list
    constraints: list
    objective: int           # variable to maximize
    gap: int
    horizon: Horizon
    chain: Chain
    system: SystemModel
    relaxed: bool = False
    inst: dict = field(default_factory=dict)    # (task, j) -> (a, s, i, e)
    chain_n: list = field(default_factory=list)
    chain_x: list = field(default_factory=list)
    start: int = -1
    notes: list = field(default_factory=list)

    def index_of(self, ref: VarRef) -> int:
        if not hasattr(self, "_rev"):
            self._rev = {v: i for i, v in enumerate(self.variables)}
        return self._rev[ref]

    def domain(self, ref: VarRef) -> tuple[int, int]:
        i = self.index_of(ref)
        return self.lo[i], self.hi[i]


class _Builder:
    def __init__(self):
        self.vars, self.lo, self.hi, self.cons = [], [], [], []

    def var(self, ref, lo, hi):
        self.vars.append(ref)
        self.lo.append(lo)
        self.hi.append(hi)
        return len(self.vars) - 1

    def le(self, terms, const):
        self.cons.append(LinearLe(tuple(terms), const))

    def eq(self, terms, const):
        self.cons.append(LinearEq(tuple(terms), const))


def _topo(system: SystemModel, ids):
    order, seen = [], set()

    def visit(tid):
        if tid in seen:
            return
        a = system[tid].activation
        if isinstance(a, Chained):
            visit(a.predecessor)
        seen.add(tid)
        order.append(tid)

    for tid in ids:
        visit(tid)
    return order


def _descendants(system, ids) -> dict:
    """Task -> every task (transitively) chained to its finish."""
    kids = {}
    for tid in ids:
        a = system[tid].activation
        if isinstance(a, Chained):
            kids.setdefault(a.predecessor, []).append(tid)
    out = {}
    for tid in ids:
        seen, todo = set(), list(kids.get(tid, ()))
        while todo:
            d = todo.pop()
            if d not in seen:
                seen.add(d)
                todo.extend(kids.get(d, ()))
        out[tid] = seen
    return out


def _declare_instances(b: _Builder, system, horizon, resp_bounds):
    """Variables of all instances with static domains; returns inst map."""
    T = horizon.T
    inst = {}
    for tid in _topo(system, horizon.instance_counts):
        t = system[tid]
        a = t.activation
        m = horizon.instance_counts[tid]
        for j in range(1, m + 1):
            if isinstance(a, Periodic):
                alo = ahi = a.offset + (j - 1) * a.period
            elif isinstance(a, Bounded):
                alo, ahi = (j - 1) * a.dt_min, j * a.dt_max
            elif isinstance(a, Sporadic):
                alo, ahi = (j - 1) * a.dt_min, T + (j - 1) * a.dt_min
            else:
                pe = inst[(a.predecessor, j)][3]
                alo, ahi = b.lo[pe], b.hi[pe]
            resp = resp_bounds[tid]
            av = b.var(VarRef(VarKind.ALPHA, tid, j), alo, ahi)
            sv = b.var(VarRef(VarKind.SIGMA, tid, j), alo, ahi + resp - t.bcet)
            iv = b.var(VarRef(VarKind.IOTA, tid, j), 0, resp - t.bcet)
            ev = b.var(VarRef(VarKind.EPSILON, tid, j), alo + t.bcet, ahi + resp)
            inst[(tid, j)] = (av, sv, iv, ev)
    return inst


def encode_activations(b: _Builder, system, horizon, inst):
    for tid, m in horizon.instance_counts.items():
        a = system[tid].activation
        if isinstance(a, Chained):
            for j in range(1, m + 1):
                b.eq([(1, inst[(tid, j)][0]), (-1, inst[(a.predecessor, j)][3])], 0)
        elif isinstance(a, (Bounded, Sporadic)):
            for j in range(2, m + 1):
                prev, cur = inst[(tid, j - 1)][0], inst[(tid, j)][0]
                b.le([(1, prev), (-1, cur)], -a.dt_min)
                if isinstance(a, Bounded):
                    b.le([(1, cur), (-1, prev)], a.dt_max)
        # periodic activations are fixed by their domains


def _window(b, vs):
    """Static lifetime [alpha.lo, epsilon.hi] of an instance."""
    return b.lo[vs[0]], b.hi[vs[3]]


def encode_scheduling(b: _Builder, system, horizon, inst):
    """Start = max of activation and blocking finishes, with no idle gap before it.

    Higher-priority instances and earlier instances of the same task block from
    their activation on.  A lower-priority non-preemptable instance blocks only
    if it started strictly before the activation.
    """
    by_core = {}
    for key, vs in inst.items():
        by_core.setdefault(system[key[0]].core, []).append((key, vs))
    desc = _descendants(system, horizon.instance_counts)
    for (tid, j), (a, s, _, e) in inst.items():
        t = system[tid]
        terms, hp, np_ = [], [], []
        # a zero-demand instance goes ahead of arrivals at its own start instant
        zero = (e, s) if t.bcet == 0 else ()
        for (lid, k), (la, ls, _, le_) in by_core[t.core]:
            if (lid, k) == (tid, j):
                continue
            # released at or after this instance's finish: never ahead of its start
            if k >= j and lid in desc[tid]:
                continue
            other = system[lid]
            # entries that can never exceed alpha are irrelevant to the max
            if b.hi[le_] <= b.lo[a]:
                continue
            if other.prio > t.prio or (lid == tid and k < j):
                if b.lo[la] <= b.hi[s]:
                    terms.append(MaxTerm(le_, la, s, "hp", 0, zero))
                    hp.append((la, le_))
            elif not other.preemptable and lid != tid and b.lo[ls] < b.hi[a]:
                terms.append(MaxTerm(le_, ls, a, "np", 1))
                np_.append((ls, le_))
        if terms:
            b.cons.append(MaxOfSet(s, a, tuple(terms)))
            b.cons.append(WorkConserving(s, a, tuple(hp), tuple(np_), zero))
        else:
            b.eq([(1, s), (-1, a)], 0)


def encode_interrupts(b: _Builder, system, horizon, inst):
    desc = _descendants(system, horizon.instance_counts)
    for (tid, j), (a, s, i, e) in inst.items():
        t = system[tid]
        terms = []
        # on integer time a job of one unit or less cannot be interrupted
        if t.preemptable and t.max_demand >= 2:
            for (lid, k), (la, ls, li, le_) in inst.items():
                other = system[lid]
                if lid == tid or other.core != t.core or other.prio <= t.prio:
                    continue
                # activated at or after this instance's finish
                if k >= j and lid in desc[tid]:
                    continue
                if b.hi[ls] <= b.lo[s] or b.lo[ls] >= b.hi[e]:
                    continue
                b.cons.append(Nested(s, e, ls, le_))
                if b.lo[le_] < b.hi[e]:
                    terms.append(SumTerm(ls, le_, li, other.bcet, other.max_demand))
        if terms:
            b.cons.append(ConditionalSum(i, s, e, tuple(terms)))
        else:
            b.eq([(1, i)], 0)


def encode_relaxed_scheduling(b: _Builder, system, horizon, inst):
    """Start after activation only; paused time left free in its domain."""
    for (a, s, _, _) in inst.values():
        b.le([(1, a), (-1, s)], 0)


def encode_termination(b: _Builder, system, horizon, inst, resp_bounds=None):
    for (tid, j), (a, s, i, e) in inst.items():
        t = system[tid]
        b.le([(1, s), (1, i), (-1, e)], -t.bcet)
        b.le([(1, e), (-1, a)], t.deadline)
        if resp_bounds is not None and resp_bounds[tid] < t.response_bound:
            b.le([(1, e), (-1, a)], resp_bounds[tid])
        if t.wcrt is not None:
            b.le([(1, e), (-1, a)], t.wcrt)
        if t.wcet is not None:
            b.le([(1, e), (-1, s), (-1, i)], t.wcet)


def _write_constraints(b, t, m, n, x, inst, tid):
    seq_s = tuple(inst[(tid, j)][1] for j in range(1, m + 1))
    seq_e = tuple(inst[(tid, j)][3] for j in range(1, m + 1))
    if t.comm is CommParadigm.IMPLICIT:
        b.cons.append(Element(x, n, seq_s, "ge"))
        b.cons.append(Element(x, n, seq_e, "le"))
    elif t.comm is CommParadigm.EXPLICIT:
        b.cons.append(Element(x, n, seq_e, "eq"))
    else:
        # written at the release following instance n
        p = t.activation
        b.eq([(1, x), (-p.period, n)], p.offset)


def encode_chain(b: _Builder, system, chain, horizon, inst, start_window, end=None):
    T = horizon.T if end is None else end
    ns, xs = [], []
    first = chain.tasks[0]
    m1 = horizon.instance_counts[first]
    n1 = b.var(VarRef(VarKind.CHAIN_INDEX, 1), 1, m1)
    x1 = b.var(VarRef(VarKind.CHAIN_WRITE, 1), 0, T)
    st = b.var(VarRef(VarKind.CHAIN_START), start_window[0], start_window[1])
    b.cons.append(Element(st, n1, tuple(inst[(first, j)][0] for j in range(1, m1 + 1)), "eq"))
    _write_constraints(b, system[first], m1, n1, x1, inst, first)
    ns.append(n1)
    xs.append(x1)
    for k, tid in enumerate(chain.tasks[1:], start=2):
        t = system[tid]
        m = horizon.instance_counts[tid]
        n = b.var(VarRef(VarKind.CHAIN_INDEX, k), 1, m)
        x = b.var(VarRef(VarKind.CHAIN_WRITE, k), 0, T)
        read = 0 if t.comm is CommParadigm.DETERMINISTIC else 1
        b.cons.append(MinIndex(n, xs[-1], tuple(inst[(tid, j)][read] for j in range(1, m + 1))))
        _write_constraints(b, t, m, n, x, inst, tid)
        ns.append(n)
        xs.append(x)
    gap = horizon.gap
    lat = b.var(VarRef(VarKind.LATENCY), 0, T - start_window[0] + gap)
    b.eq([(1, lat), (-1, xs[-1]), (1, st)], gap)
    return ns, xs, st, lat


def encode(system: SystemModel, chain: Chain, horizon: Horizon, relaxed: bool = False,
           start_window=None, end=None, tighten: bool = True) -> ConstraintSystem:
    """Build the constraint system for ``chain`` over the tasks counted in ``horizon``.

    ``start_window`` and ``end`` confine the chain (decomposition); they default
    to one hyper period after the lead-in and the window end ``T``.  With
    ``tighten`` the instance domains use busy-window response-time bounds, an
    implied constraint that every schedule satisfies; the window is unchanged.
    """
    b = _Builder()
    if tighten:
        resp = response_time_bounds(system)
    else:
        resp = {t.id: t.response_bound for t in system.tasks}
    inst = _declare_instances(b, system, horizon, resp)
    encode_activations(b, system, horizon, inst)
    if relaxed:
        encode_relaxed_scheduling(b, system, horizon, inst)
    else:
        encode_scheduling(b, system, horizon, inst)
        encode_interrupts(b, system, horizon, inst)
    encode_termination(b, system, horizon, inst, resp if tighten else None)
    sw = horizon.start_window if start_window is None else start_window
    ns, xs, st, lat = encode_chain(b, system, chain, horizon, inst, sw, end)
    return ConstraintSystem(
        variables=b.vars, lo=b.lo, hi=b.hi, constraints=b.cons, objective=lat,
        gap=horizon.gap, horizon=horizon, chain=chain, system=system, relaxed=relaxed,
        inst=inst, chain_n=ns, chain_x=xs, start=st,
    )


# --- flat text export -------------------------------------------------------

def _lin(terms, names):
    parts = []
    for c, v in terms:
        parts.append(f"{c}*{names[v]}")
    return " + ".join(parts) if parts else "0"


def export_flat(cs: ConstraintSystem) -> str:
    """Line-oriented, solver-agnostic dump; format documented in docs/formats.md."""
    names = [str(v) for v in cs.variables]
    out = [f"% chain {cs.chain.name}: {' -> '.join(cs.chain.tasks)}",
           f"% horizon T={cs.horizon.T} O={cs.horizon.O} LCM={cs.horizon.lcm} UB={cs.horizon.ub}"
           + (" relaxed" if cs.relaxed else "")]
    for name, lo, hi in zip(names, cs.lo, cs.hi):
        out.append(f"var {name} {lo} {hi}")
    for c in cs.constraints:
        if isinstance(c, LinearLe):
            out.append(f"lin_le {_lin(c.terms, names)} <= {c.const}")
        elif isinstance(c, LinearEq):
            out.append(f"lin_eq {_lin(c.terms, names)} == {c.const}")
        elif isinstance(c, MaxOfSet):
            terms = " ".join(f"({names[t.value]} if {names[t.guard_lhs]} + {t.shift}"
                             + (f" + [{names[t.zero_of[0]]} == {names[t.zero_of[1]]}]"
                                if t.zero_of else "")
                             + f" <= {names[t.guard_rhs]})" for t in c.terms)
            out.append(f"max_guarded {names[c.target]} = max {names[c.base]} {terms}")
        elif isinstance(c, ConditionalSum):
            terms = " ".join(
                f"({names[t.epsilon]} - {names[t.sigma]} - {names[t.iota]} if "
                f"{names[t.sigma]} > {names[c.sigma]} and {names[t.epsilon]} < {names[c.epsilon]})"
                for t in c.terms)
            out.append(f"sum_guarded {names[c.target]} = sum {terms}")
        elif isinstance(c, MinIndex):
            out.append(f"min_index {names[c.index]} {names[c.threshold]} "
                       + " ".join(names[v] for v in c.seq))
        elif isinstance(c, Element):
            out.append(f"element_{c.rel} {names[c.result]} {names[c.index]} "
                       + " ".join(names[v] for v in c.seq))
        elif isinstance(c, WorkConserving):
            hp = " ".join(f"hp({names[x]},{names[y]})" for x, y in c.hp)
            np_ = " ".join(f"np({names[x]},{names[y]})" for x, y in c.np)
            z = f" zero({names[c.zero_of[0]]},{names[c.zero_of[1]]})" if c.zero_of else ""
            out.append(f"busy {names[c.sigma]} {names[c.alpha]} {hp} {np_}".rstrip() + z)
        elif isinstance(c, Nested):
            out.append(f"nest {names[c.sigma]} {names[c.epsilon]} {names[c.sig_l]} {names[c.eps_l]}")
    out.append(f"objective max {names[cs.objective]}")
    return "\n".join(out) + "\n"
