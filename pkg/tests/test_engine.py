import pytest

from chainlat import SolveConfig, analyze_full, check_witness, solve_max
from chainlat.encoding import (ConditionalSum, ConstraintSystem, LinearEq, LinearLe, MaxOfSet,
                               MaxTerm, MinIndex, Nested, SumTerm, VarKind, VarRef)
from chainlat.engine import Infeasible, Searcher

import systems

ONE = SolveConfig(workers=1)


def mk(domains, cons, obj=0):
    """A bare constraint system over variables v0, v1, ... with the given domains."""
    refs = [VarRef(VarKind.LATENCY, "v%d" % i) for i in range(len(domains))]
    return ConstraintSystem(variables=refs, lo=[d[0] for d in domains],
                            hi=[d[1] for d in domains], constraints=cons, objective=obj,
                            gap=0, horizon=None, chain=None, system=None)


def root(cs):
    return Searcher(cs).root()


def test_linear_bound_tightens_upper():
    # eps <= alpha + 10 with alpha in [0, 2]
    cs = mk([(0, 2), (0, 100)], [LinearLe(((1, 1), (-1, 0)), 10)])
    lo, hi = root(cs)
    assert hi[1] == 12 and lo[1] == 0


def test_linear_equality_fixes_value():
    cs = mk([(3, 3), (0, 9), (0, 9)], [LinearEq(((1, 1), (-1, 0)), 2), LinearEq(((1, 2), (-1, 1)), 1)])
    lo, hi = root(cs)
    assert (lo[1], hi[1], lo[2], hi[2]) == (5, 5, 6, 6)


def test_max_with_all_guards_false_is_base():
    # sigma = max(alpha, v if g1 <= g2); g1 > g2 always
    cs = mk([(3, 3), (0, 10), (0, 10), (5, 6), (0, 2)],
            [MaxOfSet(1, 0, (MaxTerm(2, 3, 4),))])
    lo, hi = root(cs)
    assert lo[1] == hi[1] == 3


def test_max_with_certain_guard_is_at_least_term():
    cs = mk([(3, 3), (0, 20), (7, 9), (0, 1), (4, 4)],
            [MaxOfSet(1, 0, (MaxTerm(2, 3, 4),))])
    lo, hi = root(cs)
    assert (lo[1], hi[1]) == (7, 9)


def test_conflict_at_root():
    # x - y <= -5 with x >= 0 and y <= 3
    cs = mk([(0, 10), (0, 3)], [LinearLe(((1, 0), (-1, 1)), -5)])
    assert root(cs) is None
    with pytest.raises(Infeasible):
        solve_max(cs, ONE)


def test_nested_forces_earlier_finish():
    # preemptor starts at 4, inside (2, 10): it must finish before 10
    cs = mk([(2, 2), (10, 10), (4, 4), (0, 20)], [Nested(0, 1, 2, 3)])
    lo, hi = root(cs)
    assert hi[3] == 9


def test_nested_late_finish_keeps_start_outside():
    # the preemptor finishes at 12 or later, so it cannot start inside (2, 10)
    cs = mk([(2, 2), (10, 10), (0, 20), (12, 20)], [Nested(0, 1, 2, 3)], obj=2)
    res = solve_max(cs, ONE)
    assert res.latency == 20
    assert check_witness(cs, res.witness)
    assert not check_witness(cs, [2, 10, 5, 12])


def test_min_index():
    cs = mk([(0, 5), (2, 2), (4, 4), (6, 6), (4, 4)], [MinIndex(0, 4, (1, 2, 3))])
    lo, hi = root(cs)
    assert lo[0] == hi[0] == 2


def test_conditional_sum_counts_nested_term():
    # target = eps_l - sig_l - iota_l when the term lies strictly inside (0, 10)
    cs = mk([(0, 0), (10, 10), (0, 20), (2, 2), (5, 5), (0, 0)],
            [ConditionalSum(2, 0, 1, (SumTerm(3, 4, 5, 0, 10),))])
    lo, hi = root(cs)
    assert lo[2] == hi[2] == 3


def test_solve_small_program():
    # maximize x with x + y <= 7 and y >= 2
    cs = mk([(0, 10), (2, 10)], [LinearLe(((1, 0), (1, 1)), 7)])
    res = solve_max(cs, ONE)
    assert res.latency == 5 and res.optimal and not res.timed_out
    assert check_witness(cs, res.witness)


def test_check_witness_rejects_violations():
    cs = mk([(0, 10), (2, 10)], [LinearLe(((1, 0), (1, 1)), 7)])
    assert check_witness(cs, [5, 2])
    assert not check_witness(cs, [6, 2])     # constraint broken
    assert not check_witness(cs, [0, 1])     # outside domain
    assert not check_witness(cs, [1])        # wrong length


def test_single_task_latency():
    s, c = systems.single()
    res = analyze_full(s, c, ONE)
    # one period of gap plus the latest finish at the deadline
    assert res.latency == 14
    assert res.witness_ok()


def test_witness_rejects_start_before_activation():
    s, c = systems.single()
    res = analyze_full(s, c, ONE)
    cs = res.system
    w = list(res.witness.values)
    a, sg, i, e = cs.inst[("A", 1)]
    w[sg] = w[a] - 1
    assert not check_witness(cs, w)


def test_witness_rejects_inconsistent_interruption():
    s = systems.lh_pair()
    from chainlat import Chain
    res = analyze_full(s, Chain(("L",)), ONE)
    cs = res.system
    w = list(res.witness.values)
    a, sg, i, e = cs.inst[("L", 1)]
    w[i] += 1
    assert not check_witness(cs, w)


def test_worker_count_does_not_change_optimum():
    for seed, s, c in systems.toys(8, start=100):
        try:
            a = analyze_full(s, c, SolveConfig(workers=1))
        except Infeasible:
            # no deadline-respecting schedule; the parallel run must agree
            with pytest.raises(Infeasible):
                analyze_full(s, c, SolveConfig(workers=4))
            continue
        b = analyze_full(s, c, SolveConfig(workers=4))
        assert a.latency == b.latency, seed
        assert b.witness_ok()


def test_timeout_returns_lower_bound():
    s, c = systems.medium(3)
    res = analyze_full(s, c, SolveConfig(workers=1, timeout=0.0))
    assert res.timed_out
    assert res.bound_kind.value in ("lower", "none")
    if res.witness is not None:
        assert res.witness_ok()
