import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_metrics

from gustosonic.errors import EmptyInput
from gustosonic.learn import compute_metrics
from gustosonic.sensor_data import LABELS, ActivityLabel

CRUNCHY, SOFT = ActivityLabel.CRUNCHY_FOOD, ActivityLabel.SOFT_FOOD


def test_all_correct():
    y = [lab for lab in LABELS for _ in range(4)]
    report = compute_metrics(y, y)
    for s in report.per_class.values():
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)
    assert report.macro_f1 == 1.0
    assert report.weighted_avg.f1 == 1.0


def test_hand_computed_two_class_confusion():
    y_true = [CRUNCHY] * 10 + [SOFT] * 10
    y_pred = [CRUNCHY] * 8 + [SOFT] * 2 + [SOFT] * 10
    r = compute_metrics(y_true, y_pred)
    c, s = r.per_class[CRUNCHY], r.per_class[SOFT]
    assert (c.precision, c.recall) == (1.0, 0.8)
    assert c.f1 == pytest.approx(8 / 9, abs=1e-12)
    assert s.precision == pytest.approx(10 / 12, abs=1e-12)
    assert s.recall == 1.0
    assert s.f1 == pytest.approx(20 / 22, abs=1e-12)
    assert r.confusion[0, 0] == 8 and r.confusion[0, 1] == 2 and r.confusion[1, 1] == 10
    assert r.averaged_labels == (CRUNCHY, SOFT)
    assert r.macro_f1 == pytest.approx((8 / 9 + 20 / 22) / 2, abs=1e-12)


def test_absent_classes_listed_with_zero_support():
    r = compute_metrics([CRUNCHY, SOFT], [CRUNCHY, SOFT])
    assert list(r.per_class) == list(LABELS)
    idle = r.per_class[ActivityLabel.IDLE]
    assert (idle.precision, idle.recall, idle.f1, idle.support) == (0.0, 0.0, 0.0, 0)
    assert r.macro_f1 == 1.0


def test_explicit_labels_average_zero_support_as_zero():
    r = compute_metrics([CRUNCHY, SOFT], [CRUNCHY, SOFT], labels=LABELS)
    assert r.macro_f1 == pytest.approx(2 / 5)


def test_predicted_but_absent_class_enters_macro():
    r = compute_metrics([CRUNCHY, CRUNCHY], [CRUNCHY, ActivityLabel.IDLE])
    assert ActivityLabel.IDLE in r.averaged_labels
    assert r.per_class[ActivityLabel.IDLE].f1 == 0.0


def test_empty_input():
    with pytest.raises(EmptyInput):
        compute_metrics([], [])


def test_table_rows():
    r = compute_metrics([0, 1, 2, 3, 4], [0, 1, 2, 3, 3])
    names = [name for name, _ in r.rows()]
    assert names == ["crunchy", "soft", "beverage", "speaking", "idle", "macro avg", "weighted avg"]
    assert r.to_csv().splitlines()[0] == "class,precision,recall,f1,support"
    assert len(r.format_table().splitlines()) == 9


def _assert_matches_oracle(t, p):
    r = compute_metrics(t, p)
    o = brute_force_metrics(t, p)
    for c, lab in enumerate(LABELS):
        s = r.per_class[lab]
        assert np.allclose((s.precision, s.recall, s.f1), o["per_class"][c][:3], atol=1e-9, rtol=0)
        assert s.support == o["per_class"][c][3]
    assert np.allclose((r.macro_avg.precision, r.macro_avg.recall, r.macro_avg.f1), o["macro"], atol=1e-9, rtol=0)
    assert np.allclose((r.weighted_avg.precision, r.weighted_avg.recall, r.weighted_avg.f1), o["weighted"],
                       atol=1e-9, rtol=0)
    assert r.confusion.tolist() == o["confusion"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=60))
def test_matches_brute_force(pairs):
    _assert_matches_oracle([a for a, _ in pairs], [b for _, b in pairs])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=60))
def test_identities(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    r = compute_metrics(t, p)
    cm = r.confusion
    assert cm.sum() == len(pairs)
    for c, lab in enumerate(LABELS):
        s = r.per_class[lab]
        assert cm[c].sum() == s.support
        assert s.precision == (cm[c, c] / cm[:, c].sum() if cm[:, c].sum() else 0.0)
        assert s.recall == (cm[c, c] / cm[c].sum() if cm[c].sum() else 0.0)
        expected_f1 = 2 * s.precision * s.recall / (s.precision + s.recall) if s.precision + s.recall else 0.0
        assert s.f1 == pytest.approx(expected_f1, abs=1e-12)
    assert r.weighted_avg.recall == pytest.approx(r.accuracy, abs=1e-12)
    assert r.macro_f1 == pytest.approx(np.mean([r.per_class[lab].f1 for lab in r.averaged_labels]), abs=1e-12)
