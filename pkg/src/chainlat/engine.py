"""Bounds-consistency propagation and branch-and-bound maximization.

The search is a depth-first tree over interval domains.  Each node holds a
private copy of the bound vectors, so backtracking is just dropping the copy.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from .encoding import (
    ConditionalSum, ConstraintSystem, Element, LinearEq, LinearLe, MaxOfSet, MinIndex, VarKind,
    WorkConserving, Nested,
)


class Conflict(Exception):
    pass


class Infeasible(RuntimeError):
    """No assignment satisfies the constraint system."""


@dataclass
class SolveConfig:
    workers: int = 0          # 0 -> os.cpu_count()
    timeout: Optional[float] = None  # seconds of wall clock
    split_factor: int = 4     # open subtrees per worker

    def n_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


@dataclass
class Witness:
    values: list
    latency: int

    def as_dict(self, cs: ConstraintSystem) -> dict:
        return {ref: self.values[i] for i, ref in enumerate(cs.variables)}


@dataclass
class SolveResult:
    latency: Optional[int]
    witness: Optional[Witness]
    optimal: bool
    timed_out: bool
    nodes: int
    workers: int
    seconds: float
    stats: dict = field(default_factory=dict)


# --- propagators ---------------------------------------------------------
# Each propagator is a function (lo, hi, changed) -> None that raises Conflict.
# ``changed`` collects indices of tightened variables.

def _lin_le(terms, const):
    terms = list(terms)

    def prop(lo, hi, changed):
        # minimal value of the left-hand side
        smin = 0
        for c, v in terms:
            smin += c * lo[v] if c > 0 else c * hi[v]
        if smin > const:
            raise Conflict
        slack = const - smin
        for c, v in terms:
            if c > 0:
                nh = lo[v] + slack // c
                if nh < hi[v]:
                    hi[v] = nh
                    changed.append(v)
            else:
                nl = hi[v] - slack // (-c)
                if nl > lo[v]:
                    lo[v] = nl
                    changed.append(v)
    return prop


def _set_lo(lo, hi, changed, v, val):
    if val > lo[v]:
        if val > hi[v]:
            raise Conflict
        lo[v] = val
        changed.append(v)


def _set_hi(lo, hi, changed, v, val):
    if val < hi[v]:
        if val < lo[v]:
            raise Conflict
        hi[v] = val
        changed.append(v)


def _zero_flag(lo, hi, zero_of):
    """Bounds of [eps == sigma] for a (eps, sigma) pair; (0, 0) when absent."""
    if not zero_of:
        return 0, 0
    e, s = zero_of
    if lo[e] > hi[s]:
        return 0, 0
    if lo[e] == hi[e] == lo[s] == hi[s]:
        return 1, 1
    return 0, 1


def _max_of_set(c: MaxOfSet):
    s, a = c.target, c.base
    terms = [(t.value, t.guard_lhs, t.guard_rhs, t.shift) for t in c.terms]
    zero_of = next((t.zero_of for t in c.terms if t.zero_of), ())
    zeroed = [bool(t.zero_of) for t in c.terms]

    def prop(lo, hi, changed):
        _set_lo(lo, hi, changed, s, lo[a])
        _set_hi(lo, hi, changed, a, hi[s])
        again = True
        while again:
            again = False
            zlo, zhi = _zero_flag(lo, hi, zero_of)
            slo, shi = lo[s], hi[s]
            cand_hi = hi[a]
            supports = []
            for (val, ga, gb, sh), zt in zip(terms, zeroed):
                lo_sh, hi_sh = (sh + zlo, sh + zhi) if zt else (sh, sh)
                if hi[ga] + hi_sh <= lo[gb]:
                    # guard certainly holds
                    if lo[val] > slo:
                        _set_lo(lo, hi, changed, s, lo[val])
                        again = True
                        break
                    _set_hi(lo, hi, changed, val, shi)
                    if hi[val] > cand_hi:
                        cand_hi = hi[val]
                    if hi[val] >= slo:
                        supports.append((val, ga, gb, lo_sh))
                elif lo[ga] + lo_sh > hi[gb]:
                    continue
                else:
                    if lo[val] > shi:
                        # guard must fail: ga + shift > gb
                        before = len(changed)
                        _set_lo(lo, hi, changed, ga, lo[gb] - hi_sh + 1)
                        _set_hi(lo, hi, changed, gb, hi[ga] + hi_sh - 1)
                        if len(changed) != before:
                            again = True
                            break
                        continue  # only an undecided zero flag keeps it open
                    if gb == s and hi[ga] + hi_sh <= shi < lo[val]:
                        _set_hi(lo, hi, changed, s, hi[ga] + hi_sh - 1)
                        again = True
                        break
                    if hi[val] > cand_hi:
                        cand_hi = hi[val]
                    if hi[val] >= slo:
                        supports.append((val, ga, gb, lo_sh))
            if again:
                continue
            if cand_hi < shi:
                _set_hi(lo, hi, changed, s, cand_hi)
                again = True
                continue
            base_ok = hi[a] >= slo
            if not base_ok:
                if not supports:
                    raise Conflict
                if len(supports) == 1:
                    val, ga, gb, sh = supports[0]
                    before = len(changed)
                    _set_lo(lo, hi, changed, val, slo)
                    _set_hi(lo, hi, changed, ga, hi[gb] - sh)
                    _set_lo(lo, hi, changed, gb, lo[ga] + sh)
                    if len(changed) != before:
                        again = True
            elif not supports:
                # only the activation can be the maximum
                _set_lo(lo, hi, changed, a, slo)
                _set_hi(lo, hi, changed, s, hi[a])
    return prop


def _work_conserving(c: WorkConserving):
    s, a = c.sigma, c.alpha
    hp, np_ = c.hp, c.np
    zero_of = c.zero_of
    points = [a] + [e for _, e in hp] + [e for _, e in np_]

    def covered(lo, hi, p, zlo):
        """Possible blockers of point variable p (list of (kind, x, e))."""
        out = []
        for la, le_ in hp:
            if lo[la] + zlo <= hi[p] and hi[le_] > lo[p]:
                out.append((0, la, le_))
        for ls, le_ in np_:
            if lo[ls] < hi[a] and hi[le_] > lo[p]:
                out.append((1, ls, le_))
        return out

    def prop(lo, hi, changed):
        zlo, _ = _zero_flag(lo, hi, zero_of)
        for p in points:
            # p certainly at or after alpha?
            if p != a and lo[p] < hi[a]:
                continue
            if lo[p] >= hi[s]:
                continue  # never inside [alpha, sigma)
            sup = covered(lo, hi, p, zlo)
            if sup:
                if len(sup) == 1 and hi[p] < lo[s]:
                    # p certainly inside [alpha, sigma): the single blocker must cover it
                    kind, x, e = sup[0]
                    _set_lo(lo, hi, changed, e, lo[p] + 1)
                    _set_hi(lo, hi, changed, p, hi[e] - 1)
                    if kind == 0:
                        _set_hi(lo, hi, changed, x, hi[p] - zlo)
                        _set_lo(lo, hi, changed, p, lo[x] + zlo)
                    else:
                        _set_hi(lo, hi, changed, x, hi[a] - 1)
                        _set_lo(lo, hi, changed, a, lo[x] + 1)
                continue
            # nothing can block at p, so sigma <= p
            if lo[s] > hi[p]:
                raise Conflict
            _set_hi(lo, hi, changed, s, hi[p])
            _set_lo(lo, hi, changed, p, lo[s])
    return prop


def _nested(c: Nested):
    s, e, ls, le_ = c.sigma, c.epsilon, c.sig_l, c.eps_l

    def prop(lo, hi, changed):
        # before: ls <= s, after: ls >= e, inside: le < e
        if hi[ls] <= lo[s] or lo[ls] >= hi[e] or hi[le_] < lo[e]:
            return
        before = lo[ls] > hi[s]
        after = hi[ls] < lo[e]
        inside = lo[le_] >= hi[e]
        if before and after:
            _set_hi(lo, hi, changed, le_, hi[e] - 1)
            _set_lo(lo, hi, changed, e, lo[le_] + 1)
        elif before and inside:
            _set_lo(lo, hi, changed, ls, lo[e])
            _set_hi(lo, hi, changed, e, hi[ls])
        elif after and inside:
            _set_hi(lo, hi, changed, ls, hi[s])
            _set_lo(lo, hi, changed, s, lo[ls])
    return prop


def _conditional_sum(c: ConditionalSum):
    tgt, si, ei = c.target, c.sigma, c.epsilon
    terms = [(t.sigma, t.epsilon, t.iota, t.w_lo, t.w_hi) for t in c.terms]

    def prop(lo, hi, changed):
        again = True
        while again:
            again = False
            sum_lo = sum_hi = 0
            info = []
            for ls, le, li, wlo, whi in terms:
                if hi[ls] <= lo[si] or lo[le] >= hi[ei]:
                    continue
                wl = lo[le] - hi[ls] - hi[li]
                if wl < wlo:
                    wl = wlo
                wh = hi[le] - lo[ls] - lo[li]
                if wh > whi:
                    wh = whi
                if wl > wh:
                    raise Conflict
                sure = lo[ls] > hi[si] and hi[le] < lo[ei]
                if sure:
                    sum_lo += wl
                sum_hi += wh
                info.append((sure, ls, le, li, wl, wh))
            _set_lo(lo, hi, changed, tgt, sum_lo)
            _set_hi(lo, hi, changed, tgt, sum_hi)
            # an interrupted job runs at its start and just before its finish
            if hi[ei] - lo[si] - max(1, lo[tgt]) < 2:
                _set_hi(lo, hi, changed, tgt, 0)
            elif lo[tgt] > 0:
                _lin_le(((-1, ei), (1, si), (1, tgt)), -2)(lo, hi, changed)
            tlo, thi = lo[tgt], hi[tgt]
            for sure, ls, le, li, wl, wh in info:
                if sure:
                    # bound the weight  e - s - i  of a certain term
                    wmax = thi - (sum_lo - wl)
                    wmin = tlo - (sum_hi - wh)
                    if wmax < wh:
                        n0 = len(changed)
                        _lin_le(((1, le), (-1, ls), (-1, li)), wmax)(lo, hi, changed)
                        if len(changed) != n0:
                            again = True
                    if wmin > wl:
                        n0 = len(changed)
                        _lin_le(((-1, le), (1, ls), (1, li)), -wmin)(lo, hi, changed)
                        if len(changed) != n0:
                            again = True
                else:
                    if sum_lo + wl > thi:
                        # term must be inactive: ls <= si or le >= ei
                        if lo[ls] > hi[si]:
                            n0 = len(changed)
                            _set_lo(lo, hi, changed, le, lo[ei])
                            _set_hi(lo, hi, changed, ei, hi[le])
                            again = again or len(changed) != n0
                        elif lo[le] < hi[ei] and hi[le] < lo[ei]:
                            n0 = len(changed)
                            _set_hi(lo, hi, changed, ls, hi[si])
                            _set_lo(lo, hi, changed, si, lo[ls])
                            again = again or len(changed) != n0
                    elif sum_hi - wh < tlo:
                        # term must be active
                        n0 = len(changed)
                        _set_lo(lo, hi, changed, ls, lo[si] + 1)
                        _set_hi(lo, hi, changed, si, hi[ls] - 1)
                        _set_hi(lo, hi, changed, le, hi[ei] - 1)
                        _set_lo(lo, hi, changed, ei, lo[le] + 1)
                        again = again or len(changed) != n0
                if again:
                    break
    return prop


def _min_index(c: MinIndex):
    n, x, seq = c.index, c.threshold, c.seq

    def prop(lo, hi, changed):
        _set_lo(lo, hi, changed, n, 1)
        _set_hi(lo, hi, changed, n, len(seq))
        nlo, nhi = lo[n], hi[n]
        xlo, xhi = lo[x], hi[x]
        j = nlo
        while j <= nhi and hi[seq[j - 1]] < xlo:
            j += 1
        if j > nhi:
            raise Conflict
        _set_lo(lo, hi, changed, n, j)
        nlo = j
        while j <= nhi and lo[seq[j - 1]] < xhi:
            j += 1
        if j <= nhi:
            _set_hi(lo, hi, changed, n, j)
            nhi = j
        # earlier instances read before the write
        for jj in range(1, nlo):
            t = seq[jj - 1]
            if hi[t] >= lo[x]:
                _set_hi(lo, hi, changed, t, hi[x] - 1)
                _set_lo(lo, hi, changed, x, lo[t] + 1)
        if nlo == nhi:
            t = seq[nlo - 1]
            _set_lo(lo, hi, changed, t, lo[x])
            _set_hi(lo, hi, changed, x, hi[t])
        else:
            m = max(hi[seq[jj - 1]] for jj in range(nlo, nhi + 1))
            _set_hi(lo, hi, changed, x, m)
    return prop


def _element(c: Element):
    r, n, seq, rel = c.result, c.index, c.seq, c.rel
    upper = rel in ("le", "eq")   # r <= seq[n]
    lower = rel in ("ge", "eq")   # r >= seq[n]

    def fits(lo, hi, j):
        v = seq[j - 1]
        if upper and hi[v] < lo[r]:
            return False
        if lower and lo[v] > hi[r]:
            return False
        return True

    def prop(lo, hi, changed):
        nlo, nhi = lo[n], hi[n]
        while nlo <= nhi and not fits(lo, hi, nlo):
            nlo += 1
        while nhi >= nlo and not fits(lo, hi, nhi):
            nhi -= 1
        if nlo > nhi:
            raise Conflict
        _set_lo(lo, hi, changed, n, nlo)
        _set_hi(lo, hi, changed, n, nhi)
        if nlo == nhi:
            v = seq[nlo - 1]
            if upper:
                _set_hi(lo, hi, changed, r, hi[v])
                _set_lo(lo, hi, changed, v, lo[r])
            if lower:
                _set_lo(lo, hi, changed, r, lo[v])
                _set_hi(lo, hi, changed, v, hi[r])
        else:
            rng = range(nlo - 1, nhi)
            if upper:
                _set_hi(lo, hi, changed, r, max(hi[seq[j]] for j in rng))
            if lower:
                _set_lo(lo, hi, changed, r, min(lo[seq[j]] for j in rng))
    return prop


def _vars_of(c) -> set:
    if isinstance(c, (LinearLe, LinearEq)):
        return {v for _, v in c.terms}
    if isinstance(c, MaxOfSet):
        out = {c.target, c.base}
        for t in c.terms:
            out.update((t.value, t.guard_lhs, t.guard_rhs, *t.zero_of))
        return out
    if isinstance(c, ConditionalSum):
        out = {c.target, c.sigma, c.epsilon}
        for t in c.terms:
            out.update((t.sigma, t.epsilon, t.iota))
        return out
    if isinstance(c, MinIndex):
        return {c.index, c.threshold, *c.seq}
    if isinstance(c, WorkConserving):
        return {c.sigma, c.alpha, *c.zero_of, *(v for pair in c.hp + c.np for v in pair)}
    if isinstance(c, Element):
        return {c.result, c.index, *c.seq}
    if isinstance(c, Nested):
        return {c.sigma, c.epsilon, c.sig_l, c.eps_l}
    raise TypeError(c)


def _compile(c):
    if isinstance(c, LinearLe):
        return [_lin_le(c.terms, c.const)]
    if isinstance(c, LinearEq):
        return [_lin_le(c.terms, c.const), _lin_le([(-k, v) for k, v in c.terms], -c.const)]
    if isinstance(c, MaxOfSet):
        return [_max_of_set(c)]
    if isinstance(c, ConditionalSum):
        return [_conditional_sum(c)]
    if isinstance(c, MinIndex):
        return [_min_index(c)]
    if isinstance(c, Element):
        return [_element(c)]
    if isinstance(c, WorkConserving):
        return [_work_conserving(c)]
    if isinstance(c, Nested):
        return [_nested(c)]
    raise TypeError(c)


# --- search ---------------------------------------------------------------

MIN, SPLIT_HI, SPLIT_LO = 0, 1, 2


def branching_order(cs: ConstraintSystem) -> list:
    """Periodic-side instances first, chained tasks last; sigma low, epsilon high."""
    system = cs.system
    first, last = [], []
    for (tid, j), (a, s, i, e) in cs.inst.items():
        t = system[tid]
        key = (cs.lo[a], -t.prio, tid, j)
        entry = (key, [(a, SPLIT_LO), (s, MIN), (e, SPLIT_HI), (i, MIN)])
        (last if t.is_chained else first).append(entry)
    order = [(cs.chain_n[0], MIN)] if cs.chain_n else []
    for _, vs in sorted(first) + sorted(last):
        order.extend(vs)
    for n, x in zip(cs.chain_n, cs.chain_x):
        order.extend([(n, MIN), (x, SPLIT_HI)])
    if cs.start >= 0:
        order.append((cs.start, MIN))
    order.append((cs.objective, SPLIT_HI))
    # anything else (hand-built systems)
    seen = {v for v, _ in order}
    order.extend((v, SPLIT_HI) for v in range(len(cs.variables)) if v not in seen)
    return order


class Timeout(Exception):
    pass


class Searcher:
    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        self.props = []
        self.watch = [[] for _ in cs.variables]
        for c in cs.constraints:
            vs = _vars_of(c)
            for p in _compile(c):
                pid = len(self.props)
                self.props.append(p)
                for v in vs:
                    self.watch[v].append(pid)
        self.order = branching_order(cs)
        owner = {}
        for a, sg, i, e in cs.inst.values():
            for v in (a, sg, i, e):
                owner[v] = (a, e)
        self.owner = [owner.get(v) for v, _ in self.order]
        self.win_end = cs.chain_x[-1] if cs.chain_x and cs.start >= 0 else None
        self.obj = cs.objective
        self.nodes = 0

    def propagate(self, lo, hi, dirty) -> bool:
        props, watch = self.props, self.watch
        queued = set(dirty)
        queue = list(dirty)
        changed = []
        try:
            while queue:
                pid = queue.pop()
                queued.discard(pid)
                props[pid](lo, hi, changed)
                if changed:
                    for v in changed:
                        for q in watch[v]:
                            if q not in queued:
                                queued.add(q)
                                queue.append(q)
                    changed.clear()
        except Conflict:
            return False
        return True

    def root(self):
        lo, hi = list(self.cs.lo), list(self.cs.hi)
        if not self.propagate(lo, hi, range(len(self.props))):
            return None
        return lo, hi

    def _next(self, lo, hi, pos):
        """(branch position, first open position), or None when all are fixed.

        Instances whose lifetime overlaps the current chain window go first;
        the objective depends on the rest only through their carry-in.
        """
        order = self.order
        while pos < len(order) and lo[order[pos][0]] == hi[order[pos][0]]:
            pos += 1
        if pos == len(order):
            for v in range(len(lo)):
                if lo[v] != hi[v]:
                    order.append((v, MIN))
                    self.owner.append(None)
                    return pos, pos
            return None
        if self.win_end is not None:
            owner = self.owner
            wlo, whi = lo[self.cs.start], hi[self.win_end]
            for p in range(pos, len(order)):
                v = order[p][0]
                if lo[v] != hi[v]:
                    o = owner[p]
                    if o is None or (hi[o[1]] > wlo and lo[o[0]] < whi):
                        return p, pos
        return pos, pos

    def children(self, lo, hi, pos):
        """The two decisions at a node, in exploration order."""
        v, mode = self.order[pos]
        a, b = lo[v], hi[v]
        if mode == MIN:
            return [(v, a, a), (v, a + 1, b)]
        if mode == SPLIT_HI:
            mid = (a + b + 1) // 2
            return [(v, mid, b), (v, a, mid - 1)]
        mid = (a + b) // 2
        return [(v, a, mid), (v, mid + 1, b)]

    def apply(self, lo, hi, dec, bound):
        v, a, b = dec
        lo, hi = list(lo), list(hi)
        lo[v] = max(lo[v], a)
        hi[v] = min(hi[v], b)
        dirty = list(self.watch[v])
        if bound is not None and lo[self.obj] < bound:
            lo[self.obj] = bound
            dirty += self.watch[self.obj]
        if lo[v] > hi[v] or lo[self.obj] > hi[self.obj]:
            return None
        if not self.propagate(lo, hi, dirty):
            return None
        return lo, hi

    def frontier(self, lo, hi, target: int):
        """Split the root breadth-first into at least ``target`` open subtrees."""
        nodes = [(lo, hi, 0)]
        while len(nodes) < target:
            grown = []
            expanded = False
            for lo_, hi_, pos in nodes:
                nxt = self._next(lo_, hi_, pos)
                if nxt is None:
                    grown.append((lo_, hi_, pos))
                    continue
                expanded = True
                p, first = nxt
                for dec in self.children(lo_, hi_, p):
                    r = self.apply(lo_, hi_, dec, None)
                    if r is not None:
                        grown.append((r[0], r[1], first))
            nodes = grown
            if not expanded:
                break
        return nodes

    def dfs(self, lo, hi, pos, get_best, set_best, deadline=None):
        """Explore one subtree; returns the best solution found in it (or None)."""
        best_sol = None
        obj = self.obj
        stack = [(lo, hi, pos, None)]
        while stack:
            plo, phi, ppos, dec = stack.pop()
            self.nodes += 1
            if deadline is not None and (self.nodes & 63) == 0 and time.monotonic() > deadline:
                raise Timeout(best_sol)
            best = get_best()
            bound = None if best is None else best + 1
            if dec is None:
                if bound is not None and phi[obj] < bound:
                    continue
                lo_, hi_ = plo, phi
            else:
                r = self.apply(plo, phi, dec, bound)
                if r is None:
                    continue
                lo_, hi_ = r
            nxt = self._next(lo_, hi_, ppos)
            if nxt is None:
                val = lo_[obj]
                if best is None or val > best:
                    if not check_witness(self.cs, lo_):
                        raise AssertionError("propagation accepted an assignment the checker rejects")
                    set_best(val)
                    best_sol = list(lo_)
                continue
            p, first = nxt
            kids = self.children(lo_, hi_, p)
            for d in reversed(kids):
                stack.append((lo_, hi_, first, d))
        return best_sol


# --- parallel driver --------------------------------------------------------

_G: dict = {}


def _worker_init(cs, best, lock, deadline):
    _G["s"] = Searcher(cs)
    _G["best"] = best
    _G["lock"] = lock
    _G["deadline"] = deadline


def _get_best_shared():
    v = _G["best"].value
    return None if v < 0 else v


def _set_best_shared(val):
    with _G["lock"]:
        if val > _G["best"].value:
            _G["best"].value = val


def _worker_run(job):
    lo, hi, pos = job
    s = _G["s"]
    s.nodes = 0
    try:
        sol = s.dfs(lo, hi, pos, _get_best_shared, _set_best_shared, _G["deadline"])
        return sol, s.nodes, False
    except Timeout as t:
        return t.args[0], s.nodes, True


def solve_max(cs: ConstraintSystem, config: Optional[SolveConfig] = None) -> SolveResult:
    """Maximize the latency objective of ``cs``.

    The optimum does not depend on the worker count; on timeout the best
    incumbent is returned with ``optimal=False``.
    """
    config = config or SolveConfig()
    t0 = time.monotonic()
    deadline = None if config.timeout is None else t0 + config.timeout
    workers = config.n_workers()
    searcher = Searcher(cs)
    root = searcher.root()
    if root is None:
        raise Infeasible("constraint system is infeasible at the root")
    jobs = searcher.frontier(root[0], root[1], max(1, workers * config.split_factor))
    nodes = searcher.nodes
    results = []
    if workers == 1:
        box = {"best": None}

        def get():
            return box["best"]

        def put(v):
            if box["best"] is None or v > box["best"]:
                box["best"] = v

        timed_out = False
        for lo, hi, pos in jobs:
            searcher.nodes = 0
            try:
                sol = searcher.dfs(lo, hi, pos, get, put, deadline)
            except Timeout as t:
                sol, timed_out = t.args[0], True
            nodes += searcher.nodes
            if sol is not None:
                results.append(sol)
            if timed_out:
                break
    else:
        ctx = mp.get_context("fork")
        best = ctx.Value("q", -1, lock=False)
        lock = ctx.Lock()
        timed_out = False
        with ctx.Pool(workers, initializer=_worker_init, initargs=(cs, best, lock, deadline)) as pool:
            for sol, n, to in pool.imap_unordered(_worker_run, jobs):
                nodes += n
                timed_out = timed_out or to
                if sol is not None:
                    results.append(sol)
    elapsed = time.monotonic() - t0
    if not results:
        if timed_out:
            return SolveResult(None, None, False, True, nodes, workers, elapsed)
        raise Infeasible("no assignment satisfies the constraint system")
    obj = cs.objective
    sol = max(results, key=lambda s: s[obj])
    return SolveResult(sol[obj], Witness(sol, sol[obj]), not timed_out, timed_out,
                       nodes, workers, elapsed, {"subtrees": len(jobs)})


# --- independent checker -------------------------------------------------------

def _zero_value(w, zero_of) -> int:
    return int(bool(zero_of) and w[zero_of[0]] == w[zero_of[1]])


def check_witness(cs: ConstraintSystem, witness) -> bool:
    """Evaluate every constraint directly on a complete assignment."""
    if isinstance(witness, Witness):
        witness = witness.values
    elif isinstance(witness, dict):
        witness = [witness[r] for r in cs.variables]
    w = witness
    if len(w) != len(cs.variables):
        return False
    for i in range(len(w)):
        if not cs.lo[i] <= w[i] <= cs.hi[i]:
            return False
    for c in cs.constraints:
        if isinstance(c, LinearLe):
            if sum(k * w[v] for k, v in c.terms) > c.const:
                return False
        elif isinstance(c, LinearEq):
            if sum(k * w[v] for k, v in c.terms) != c.const:
                return False
        elif isinstance(c, MaxOfSet):
            vals = [w[c.base]] + [
                w[t.value] for t in c.terms
                if w[t.guard_lhs] + t.shift + _zero_value(w, t.zero_of) <= w[t.guard_rhs]]
            if w[c.target] != max(vals):
                return False
        elif isinstance(c, ConditionalSum):
            total = 0
            for t in c.terms:
                if w[t.sigma] > w[c.sigma] and w[t.epsilon] < w[c.epsilon]:
                    total += w[t.epsilon] - w[t.sigma] - w[t.iota]
            if w[c.target] != total:
                return False
        elif isinstance(c, MinIndex):
            hits = [j for j, v in enumerate(c.seq, start=1) if w[v] >= w[c.threshold]]
            if not hits or w[c.index] != hits[0]:
                return False
        elif isinstance(c, Element):
            j = w[c.index]
            if not 1 <= j <= len(c.seq):
                return False
            r, v = w[c.result], w[c.seq[j - 1]]
            if (c.rel == "le" and not r <= v) or (c.rel == "ge" and not r >= v) \
                    or (c.rel == "eq" and r != v):
                return False
        elif isinstance(c, WorkConserving):
            al, si = w[c.alpha], w[c.sigma]
            z = _zero_value(w, c.zero_of)
            pts = [al] + [w[e] for _, e in c.hp + c.np]
            for p in pts:
                if al <= p < si and not (
                        any(w[x] + z <= p < w[e] for x, e in c.hp)
                        or any(w[x] < al and p < w[e] for x, e in c.np)):
                    return False
        elif isinstance(c, Nested):
            if w[c.sigma] < w[c.sig_l] < w[c.epsilon] and w[c.eps_l] >= w[c.epsilon]:
                return False
        else:
            return False
    return True
