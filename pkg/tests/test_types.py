import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ditraffic import (
    ActivityTrace,
    CausalityEntry,
    CausalitySet,
    DatasetError,
    DiMatrix,
    EventDataset,
    JointDistribution,
    Prediction,
    align_events,
    pad_trace,
    validate_dataset,
)


def test_all_zero_dataset_is_valid():
    ds = EventDataset.from_array(["a", "b"], np.zeros((2, 5, 4), dtype=np.uint8))
    assert validate_dataset(ds) == []


def test_event_count_mismatch_reported():
    ds = EventDataset((ActivityTrace("a", np.zeros((5, 4))), ActivityTrace("b", np.zeros((4, 4)))))
    problems = validate_dataset(ds)
    assert any("event count mismatch" in p for p in problems)


def test_non_binary_entry_reported():
    bits = np.zeros((3, 4), dtype=int)
    bits[1, 2] = 2
    ds = EventDataset((ActivityTrace("a", bits),))
    assert validate_dataset(ds) == ["non-binary entry at (a, event 1, slot 3): 2"]


def test_ragged_rows_and_duplicates_reported():
    ds = EventDataset((ActivityTrace("a", [[0, 1, 0], [1, 0]]), ActivityTrace("a", [[0, 0, 0], [0, 0, 0]])))
    problems = validate_dataset(ds)
    assert any("ragged" in p for p in problems)
    assert any("duplicate device id" in p for p in problems)
    with pytest.raises(DatasetError):
        ds.cube


def test_slot_count_mismatch_reported():
    ds = EventDataset((ActivityTrace("a", np.zeros((2, 4))), ActivityTrace("b", np.zeros((2, 5)))))
    assert any("slot count mismatch" in p for p in validate_dataset(ds))


@given(st.lists(st.lists(st.integers(0, 1), max_size=8), min_size=1, max_size=6), st.integers(0, 4))
def test_padding_preserves_prefix(rows, extra):
    L = max(len(r) for r in rows) + extra
    padded = pad_trace(rows, L)
    for r, out in zip(rows, padded):
        assert list(out[: len(r)]) == r
        assert not out[len(r):].any()


def test_align_events_shifts_to_trigger_and_pads():
    events = [
        {"a": [10, 12], "b": [11]},
        {"a": [3], "b": [5, 5, 8]},
        {},
    ]
    ds = align_events(events)
    assert ds.device_ids == ("a", "b")
    assert ds.slots_per_event == 6
    np.testing.assert_array_equal(ds.trace("a").bits, [[1, 0, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0], [0] * 6])
    np.testing.assert_array_equal(ds.trace("b").bits, [[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 1], [0] * 6])


def test_align_events_rejects_overlong_event():
    with pytest.raises(DatasetError):
        align_events([{"a": [0, 9]}], slots_per_event=5)


def test_joint_distribution_invariants():
    assert JointDistribution([0.25] * 4).arity == 2
    with pytest.raises(ValueError):
        JointDistribution([0.5, 0.6])
    with pytest.raises(ValueError):
        JointDistribution([0.5, 0.25, 0.25])
    with pytest.raises(ValueError):
        JointDistribution(np.full(128, 1 / 128))
    with pytest.raises(ValueError):
        JointDistribution([1.5, -0.5])


def test_di_matrix_clamps_and_rejects():
    m = DiMatrix("x", "y", 3, {(1, 0): -5e-10, (1, 1): 2.0 + 5e-10, (2, 0): 0.3})
    assert m.values[(1, 0)] == 0.0
    assert m.values[(1, 1)] == 2.0
    with pytest.raises(ValueError):
        DiMatrix("x", "y", 3, {(1, 0): -1e-6})
    with pytest.raises(ValueError):
        DiMatrix("x", "y", 3, {(2, 1): 0.1})  # k + i + 1 > L
    grid = m.to_grid()
    assert grid.shape == (2, 2)
    assert grid[1, 0] == 2.0 and np.isnan(grid[1, 1])
    assert m.argmax() == (1, 1) and m.peak_lag() == 1


def test_causality_set_order_enforced():
    a = CausalityEntry("y", 1, 2, 0.5)
    b = CausalityEntry("z", 1, 1, 0.5)
    c = CausalityEntry("a", 2, 1, 0.9)
    cs = CausalitySet.from_entries("x", [a, b, c])
    # descending DI, then smaller lag, then target id
    assert cs.entries == (c, b, a)
    with pytest.raises(ValueError):
        CausalitySet("x", (a, c))


def test_prediction_normalization():
    assert Prediction("y", 3, 2.0).normalized_confidence == 1.0
    assert Prediction("y", 3, 0.5).normalized_confidence == 0.25
