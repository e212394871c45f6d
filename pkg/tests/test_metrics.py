import math

import pytest
from hypothesis import given, settings, strategies as st

from fundus_select.metrics import (
    ConfusionMatrix,
    Label,
    MetricSet,
    PredictionRecord,
    abs_deltas,
    accuracy,
    confusion_from_predictions,
    loss_value,
    overfitting,
    relative_comparison,
    sensitivity,
    specificity,
)
from fundus_select.validation import ValidationError

TOL = 1e-9


def rec(i, label, p_d):
    return PredictionRecord(str(i), label, 1.0 - p_d, p_d)


def brute_force_counts(records, threshold):
    """Oracle: tally (truth, call) pairs directly."""
    pairs = [(r.true_label.value, "diseased" if r.p_diseased >= threshold else "healthy") for r in records]
    return (
        pairs.count(("diseased", "diseased")),
        pairs.count(("diseased", "healthy")),
        pairs.count(("healthy", "healthy")),
        pairs.count(("healthy", "diseased")),
    )


def ten_records():
    # 6 diseased (5 called diseased), 4 healthy (3 called healthy)
    ps_d = [0.9, 0.8, 0.7, 0.6, 0.55, 0.2]
    ps_h = [0.1, 0.3, 0.45, 0.7]
    return [rec(i, "diseased", p) for i, p in enumerate(ps_d)] + [
        rec(10 + i, "healthy", p) for i, p in enumerate(ps_h)
    ]


class TestConfusion:
    def test_perfect_diseased(self):
        cm = confusion_from_predictions([rec(i, "diseased", 1.0) for i in range(4)])
        assert cm == ConfusionMatrix(4, 0, 0, 0)

    def test_ten_records(self):
        records = ten_records()
        assert brute_force_counts(records, 0.5) == (5, 1, 3, 1)
        assert confusion_from_predictions(records) == ConfusionMatrix(tp=5, fn_=1, tn=3, fp=1)

    def test_tie_goes_to_diseased(self):
        cm = confusion_from_predictions([rec(0, "healthy", 0.5)], threshold=0.5)
        assert cm == ConfusionMatrix(0, 0, 0, 1)

    def test_empty(self):
        with pytest.raises(ValidationError, match="no records"):
            confusion_from_predictions([])

    def test_bad_threshold(self):
        with pytest.raises(ValidationError):
            confusion_from_predictions([rec(0, "healthy", 0.1)], threshold=1.5)

    def test_malformed_probabilities_name_the_example(self):
        with pytest.raises(ValidationError, match="ex-7"):
            PredictionRecord("ex-7", "healthy", 0.7, 0.7)
        with pytest.raises(ValidationError, match="ex-8"):
            PredictionRecord("ex-8", "healthy", -0.1, 1.1)

    def test_unknown_label(self):
        with pytest.raises(ValidationError, match="label"):
            PredictionRecord("a", "sick", 0.5, 0.5)


class TestScalarMetrics:
    cm = ConfusionMatrix(tp=5, fn_=1, tn=3, fp=1)

    def test_accuracy(self):
        assert accuracy(self.cm) == pytest.approx(0.8, abs=TOL)
        assert accuracy(ConfusionMatrix(3, 0, 2, 0)) == 1.0
        assert accuracy(ConfusionMatrix(0, 3, 0, 2)) == 0.0
        with pytest.raises(ValidationError):
            accuracy(ConfusionMatrix(0, 0, 0, 0))

    def test_sensitivity(self):
        assert sensitivity(self.cm) == pytest.approx(5 / 6, abs=TOL)
        assert sensitivity(ConfusionMatrix(4, 0, 1, 1)) == 1.0
        assert sensitivity(ConfusionMatrix(0, 4, 1, 1)) == 0.0
        with pytest.raises(ValidationError, match="undefined sensitivity"):
            sensitivity(ConfusionMatrix(0, 0, 3, 1))

    def test_specificity(self):
        assert specificity(self.cm) == pytest.approx(0.75, abs=TOL)
        assert specificity(ConfusionMatrix(1, 1, 4, 0)) == 1.0
        assert specificity(ConfusionMatrix(1, 1, 0, 2)) == 0.0
        with pytest.raises(ValidationError, match="undefined specificity"):
            specificity(ConfusionMatrix(3, 1, 0, 0))

    def test_overfitting(self):
        assert overfitting(0.9861, 0.9015) == pytest.approx(0.0846, abs=TOL)
        assert overfitting(0.7, 0.7) == 0.0
        assert overfitting(0.5, 0.6) == pytest.approx(-0.1, abs=TOL)
        with pytest.raises(ValidationError):
            overfitting(1.2, 0.5)

    def test_confusion_counts_must_be_non_negative_ints(self):
        with pytest.raises(ValidationError):
            ConfusionMatrix(-1, 0, 0, 0)
        with pytest.raises(ValidationError):
            ConfusionMatrix(1.5, 0, 0, 0)


class TestLoss:
    def test_perfect(self):
        records = [rec(0, "diseased", 1.0), rec(1, "healthy", 0.0)]
        for kind in ("CCE", "MSE", "MAE"):
            assert loss_value(records, kind) == 0.0

    def test_uniform(self):
        records = [rec(0, "diseased", 0.5), rec(1, "healthy", 0.5)]
        assert loss_value(records, "CCE") == pytest.approx(math.log(2), abs=TOL)
        assert loss_value(records, "MSE") == pytest.approx(0.25, abs=TOL)
        assert loss_value(records, "MAE") == pytest.approx(0.5, abs=TOL)

    def test_single_record(self):
        records = [rec(0, "diseased", 0.8)]
        assert loss_value(records, "CCE") == pytest.approx(-math.log(0.8), abs=TOL)
        assert loss_value(records, "MSE") == pytest.approx(0.04, abs=TOL)
        assert loss_value(records, "MAE") == pytest.approx(0.2, abs=TOL)

    def test_cce_clamped_finite(self):
        value = loss_value([rec(0, "diseased", 0.0)], "cce")
        assert value == pytest.approx(-math.log(1e-12))

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            loss_value([rec(0, "diseased", 0.3)], "hinge")


class TestDeltasAndComparison:
    def test_published_deltas(self):
        d = abs_deltas((0.9015, 0.9413, 0.8560), (0.8748, 0.8952, 0.8561))
        for got, want in zip(d, (0.0267, 0.0461, 0.0001)):
            assert got == pytest.approx(want, abs=TOL)

    def test_identical_and_symmetric(self):
        assert abs_deltas((0.3, 0.4, 0.5), (0.3, 0.4, 0.5)) == (0.0, 0.0, 0.0)
        d = abs_deltas((0.5, 0.5, 0.5), (0.6, 0.4, 0.5))
        assert d == pytest.approx((0.1, 0.1, 0.0), abs=TOL)

    def test_range_validation(self):
        with pytest.raises(ValidationError):
            abs_deltas((0.5, 0.5, 1.5), (0.5, 0.5, 0.5))

    def test_relative_comparison(self, table2_records, baseline_record):
        final = next(r for r in table2_records if r.model_name == "Adam, MSE").metrics
        report = relative_comparison(final, baseline_record.metrics)
        assert report.relative_change["sensitivity"] == pytest.approx(0.884107, abs=5e-7)
        assert report.relative_change["specificity"] == pytest.approx(0.277803, abs=5e-7)
        assert report.relative_change["val_accuracy"] == pytest.approx(0.5434, abs=5e-5)
        assert report.loss_ratio == pytest.approx(7.511, abs=1e-3)

    def test_identity_comparison(self):
        m = MetricSet(0.1, 0.8, 0.4, 0.7, 0.6)
        report = relative_comparison(m, m)
        assert all(v == 0 for v in report.relative_change.values())
        assert report.loss_ratio == 1.0

    def test_zero_baseline_is_marked_undefined(self):
        final = MetricSet(0.1, 0.8, 0.4, 0.7, 0.6)
        baseline = MetricSet(0.0, 0.5, 0.5, 0.0, 0.5)
        report = relative_comparison(final, baseline)
        assert report.relative_change["sensitivity"] is None
        assert report.relative_change["overfitting"] is None
        assert report.relative_change["val_accuracy"] == pytest.approx(0.6)
        zero_loss = MetricSet(0.1, 0.8, 0.0, 0.7, 0.6)
        assert relative_comparison(zero_loss, baseline).loss_ratio is None


def test_metricset_validation():
    with pytest.raises(ValidationError, match="val_accuracy"):
        MetricSet(0.1, 1.3, 0.4, 0.5, 0.5)
    with pytest.raises(ValidationError, match="val_loss"):
        MetricSet(0.1, 0.3, -0.4, 0.5, 0.5)
    with pytest.raises(ValidationError):
        MetricSet(float("nan"), 0.3, 0.4, 0.5, 0.5)


# -- properties ---------------------------------------------------------------

probability = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
records_st = st.lists(
    st.tuples(st.sampled_from(list(Label)), probability), min_size=1, max_size=40
).map(lambda items: [rec(i, label, p) for i, (label, p) in enumerate(items)])


@given(records_st, probability)
def test_confusion_matches_oracle_and_partitions(records, threshold):
    cm = confusion_from_predictions(records, threshold)
    assert (cm.tp, cm.fn_, cm.tn, cm.fp) == brute_force_counts(records, threshold)
    assert cm.total == len(records)
    assert cm.positives == sum(r.true_label is Label.DISEASED for r in records)


@given(st.tuples(*[st.integers(0, 50)] * 4).filter(lambda t: t[0] + t[1] > 0 and t[2] + t[3] > 0))
def test_accuracy_decomposes(counts):
    cm = ConfusionMatrix(*counts)
    assert accuracy(cm) * cm.total == pytest.approx(
        sensitivity(cm) * cm.positives + specificity(cm) * cm.negatives, abs=1e-9
    )


@given(records_st, st.integers(1, 5))
def test_sensitivity_ignores_added_healthy(records, extra):
    cm = confusion_from_predictions(records)
    more = records + [rec(1000 + i, "healthy", 0.3 * (i % 3)) for i in range(extra)]
    cm2 = confusion_from_predictions(more)
    if cm.positives:
        assert sensitivity(cm2) == sensitivity(cm)
    less_healthy = records + [rec(2000 + i, "diseased", 0.9) for i in range(extra)]
    cm3 = confusion_from_predictions(less_healthy)
    if cm.negatives:
        assert specificity(cm3) == specificity(cm)


@given(probability, probability)
def test_overfitting_antisymmetric(a, b):
    assert overfitting(a, b) == -overfitting(b, a)


@given(st.tuples(probability, probability, probability), st.tuples(probability, probability, probability))
def test_abs_deltas_symmetric(a, b):
    assert abs_deltas(a, b) == abs_deltas(b, a)
    assert (abs_deltas(a, b) == (0.0, 0.0, 0.0)) == (a == b)


@given(records_st, st.sampled_from(["CCE", "MSE", "MAE"]), st.integers(2, 4))
def test_loss_non_negative_and_duplication_invariant(records, kind, copies):
    value = loss_value(records, kind)
    assert value >= 0
    assert loss_value(records * copies, kind) == pytest.approx(value, rel=1e-9, abs=1e-12)


@given(st.lists(st.tuples(st.sampled_from(list(Label)), st.booleans()), min_size=1, max_size=20))
def test_loss_zero_on_one_hot_correct(items):
    records = [rec(i, label, 1.0 if label is Label.DISEASED else 0.0) for i, (label, _) in enumerate(items)]
    for kind in ("CCE", "MSE", "MAE"):
        assert loss_value(records, kind) == 0.0


@settings(max_examples=50)
@given(records_st, probability, probability)
def test_threshold_monotone(records, t1, t2):
    lo, hi = sorted((t1, t2))
    a = confusion_from_predictions(records, lo)
    b = confusion_from_predictions(records, hi)
    assert b.tp <= a.tp
    assert b.tn >= a.tn
