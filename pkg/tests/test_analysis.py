import pytest
from hypothesis import given, settings, strategies as st

from chainlat import (BoundKind, Chain, Mode, Periodic, SolveConfig, TaskSpec, ValidationError,
                      analyze, analyze_decomposed, analyze_full, analyze_relaxed, validate_system)
from chainlat.analysis import BadSliceConfig, default_slices, slice_windows
from chainlat.engine import Infeasible

import systems

ONE = SolveConfig(workers=1)


def test_single_task_relaxed_equals_full():
    s, c = systems.single()
    full = analyze_full(s, c, ONE)
    rel = analyze_relaxed(s, c, ONE)
    assert full.bound_kind is BoundKind.EXACT and rel.bound_kind is BoundKind.UPPER
    assert rel.latency == full.latency == 14


def test_relaxed_strictly_above_full():
    # H's offset keeps it clear of L, which the relaxation cannot see
    s = validate_system([TaskSpec("L", Periodic(20), 1, 0, 20, bcet=5, wcet=5),
                         TaskSpec("H", Periodic(20, 10), 2, 0, 20, bcet=2, wcet=2)], 1)
    c = Chain(("L",))
    assert analyze_full(s, c, ONE).latency == 25
    assert analyze_relaxed(s, c, ONE).latency == 27


def test_single_full_slice_equals_full():
    s, c = systems.ab_pair(systems.I, ms=1)
    full = analyze_full(s, c, ONE)
    d = analyze_decomposed(s, c, slice_len=full.horizon.T, overlap=0, config=ONE)
    assert d.bound_kind is BoundKind.EXACT
    assert d.latency == full.latency


def test_straddling_occurrence_lost_by_slicing():
    _, s, c = systems.toys(1, start=22)[0]
    full = analyze_full(s, c, ONE)
    d = analyze_decomposed(s, c, slice_len=full.horizon.T // 2, overlap=0, config=ONE)
    assert d.bound_kind is BoundKind.LOWER
    assert d.latency < full.latency
    assert d.witness_ok()


def test_slice_windows():
    assert slice_windows(100, 40, 10) == [(0, 40), (30, 70), (60, 100)]
    assert slice_windows(50, 50, 0) == [(0, 50)]
    L, ov = default_slices(70)
    ws = slice_windows(70, L, ov)
    assert len(ws) == 2 and ws[-1][1] == 70 and ws[0][1] > ws[1][0]


@pytest.mark.parametrize("L, ov", [(0, 0), (200, 0), (10, 10), (10, -1)])
def test_bad_slice_config(L, ov):
    with pytest.raises(BadSliceConfig):
        slice_windows(100, L, ov)


def test_bad_slice_config_from_analysis():
    s, c = systems.ab_pair(systems.I, ms=1)
    with pytest.raises(BadSliceConfig):
        analyze_decomposed(s, c, slice_len=10, overlap=20, config=ONE)


def test_analyze_dispatch():
    s, c = systems.single()
    for mode in Mode:
        r = analyze(s, c, mode, ONE)
        assert r.mode is mode and r.latency == 14


def test_chain_trace_rows():
    s, c = systems.ab_pair(systems.E, ms=1)
    r = analyze_full(s, c, ONE)
    rows = r.chain_trace()
    assert [row["task"] for row in rows] == ["A", "B"]
    first, last = rows[0], rows[-1]
    assert r.latency == last["x"] - first["alpha"] + r.system.gap
    assert first["alpha"] <= first["sigma"] <= first["epsilon"]


def test_sporadic_first_task_note():
    from chainlat import Sporadic
    s = validate_system([TaskSpec("S", Sporadic(10), 1, 0, 10, bcet=1, wcet=2)], 1)
    r = analyze_full(s, Chain(("S",)), ONE)
    assert r.notes and r.latency == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3000))
def test_decomposed_full_relaxed_sandwich(seed):
    try:
        s, c = systems.toy(seed)
        full = analyze_full(s, c, ONE)
    except (ValidationError, Infeasible):
        return
    rel = analyze_relaxed(s, c, ONE)
    try:
        dec = analyze_decomposed(s, c, config=ONE).latency
    except Infeasible:
        dec = None
    assert full.latency <= rel.latency
    if dec is not None:
        assert dec <= full.latency
