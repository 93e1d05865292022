import csv
import io
import json

import numpy as np
import pytest

from carrot_cure.metrics import (
    ClassMetrics,
    ConfusionMatrix,
    EmptyMatrixError,
    all_class_metrics,
    class_metrics,
    confusion,
    f1_from,
    overall_accuracy,
    render_report,
)
from oracles import metrics_brute_force


class TestConfusion:
    def test_perfect_diagonal(self):
        trues = [0, 0, 1, 1, 2, 2, 3, 3]
        cm = confusion(trues, trues)
        np.testing.assert_array_equal(cm.counts, np.diag([2, 2, 2, 2]))

    def test_empty_input(self):
        cm = confusion([], [])
        assert cm.total == 0
        assert not cm.counts.any()

    def test_hand_counted_case(self):
        cm = confusion([0, 0, 1], [0, 1, 1])
        assert cm.counts[0, 0] == 1
        assert cm.counts[0, 1] == 1
        assert cm.counts[1, 1] == 1
        assert cm.total == 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([0, 1], [0])

    def test_out_of_range_label(self):
        with pytest.raises(ValueError):
            confusion([0, 9], [0, 0])


class TestClassMetrics:
    def test_one_vs_rest_reduction(self):
        cm = confusion([0, 0, 1, 2], [0, 1, 1, 0])
        m = class_metrics(cm, 0)
        assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
        assert m.tp + m.fp + m.fn + m.tn == cm.total

    def test_diagonal_matrix_is_perfect(self):
        cm = ConfusionMatrix(np.diag([3, 4, 5, 6]))
        for m in all_class_metrics(cm):
            assert m.precision == m.recall == m.specificity == m.f1 == 1.0
            assert not m.degenerate

    def test_f1_reference_points(self):
        # frozen F1 values for fixed precision/recall pairs
        f1, _ = f1_from(0.995, 0.988)
        assert abs(f1 * 100 - 99.15) < 0.01
        f1, _ = f1_from(0.990, 0.985)
        assert abs(f1 * 100 - 98.75) < 0.011
        f1, _ = f1_from(0.980, 0.970)
        assert abs(f1 * 100 - 97.49) < 0.01
        f1, _ = f1_from(1.000, 0.980)
        assert abs(f1 * 100 - 98.99) < 0.01

    def test_degenerate_flag_for_absent_class(self):
        # class 3 never appears in truth or prediction
        cm = confusion([0, 1, 2], [0, 1, 2])
        m = class_metrics(cm, 3)
        assert m.degenerate
        assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0
        assert m.specificity == 1.0

    def test_matches_brute_force_recount(self):
        rng = np.random.default_rng(55)
        for _ in range(50):
            n = int(rng.integers(1, 200))
            trues = rng.integers(0, 4, n).tolist()
            preds = rng.integers(0, 4, n).tolist()
            cm = confusion(trues, preds)
            for c in range(4):
                m = class_metrics(cm, c)
                tp, fp, fn, tn, p, r, s, f1 = metrics_brute_force(trues, preds, c)
                assert (m.tp, m.fp, m.fn, m.tn) == (tp, fp, fn, tn)
                assert abs(m.precision - p) < 1e-12
                assert abs(m.recall - r) < 1e-12
                assert abs(m.specificity - s) < 1e-12
                assert abs(m.f1 - f1) < 1e-12

    def test_f1_between_min_and_max(self):
        rng = np.random.default_rng(56)
        for _ in range(200):
            p, r = rng.uniform(0.01, 1.0, 2)
            f1, degenerate = f1_from(p, r)
            assert not degenerate
            assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12

    def test_tp_sums_to_trace(self):
        rng = np.random.default_rng(57)
        trues = rng.integers(0, 4, 100).tolist()
        preds = rng.integers(0, 4, 100).tolist()
        cm = confusion(trues, preds)
        assert sum(m.tp for m in all_class_metrics(cm)) == np.trace(cm.counts)


class TestOverallAccuracy:
    def test_diagonal(self):
        assert overall_accuracy(ConfusionMatrix(np.diag([2, 2, 2, 2]))) == 1.0

    def test_all_off_diagonal(self):
        counts = np.ones((4, 4), dtype=np.int64) - np.eye(4, dtype=np.int64)
        assert overall_accuracy(ConfusionMatrix(counts)) == 0.0

    def test_simple_ratio(self):
        counts = np.diag([24, 24, 24, 24])
        counts[0, 1] = 4
        assert overall_accuracy(ConfusionMatrix(counts)) == 0.96

    def test_empty_matrix_rejected(self):
        with pytest.raises(EmptyMatrixError):
            overall_accuracy(ConfusionMatrix(np.zeros((4, 4), dtype=np.int64)))


class TestRenderReport:
    def _case(self):
        rng = np.random.default_rng(58)
        trues = rng.integers(0, 4, 80).tolist()
        preds = [t if rng.random() < 0.8 else int(rng.integers(0, 4)) for t in trues]
        cm = confusion(trues, preds)
        return cm, all_class_metrics(cm)

    def test_json_schema_and_round_trip(self):
        cm, ms = self._case()
        payload = json.loads(render_report(cm, ms, "json"))
        assert set(payload) == {"overall_accuracy", "classes"}
        assert len(payload["classes"]) == 4
        for row in payload["classes"]:
            assert set(row) == {
                "key", "tp", "fp", "fn", "tn",
                "precision", "recall", "specificity", "f1", "degenerate",
            }
        assert payload["overall_accuracy"] == overall_accuracy(cm)

    def test_csv_row_count(self):
        cm, ms = self._case()
        rows = list(csv.reader(io.StringIO(render_report(cm, ms, "csv").decode())))
        assert len(rows) == 5  # header + 4 classes
        assert rows[0][0] == "class"

    def test_text_contains_percentages(self):
        cm, ms = self._case()
        text = render_report(cm, ms, "text").decode()
        assert "overall accuracy:" in text
        for m in ms:
            assert m.cls.key in text
            assert f"{m.precision * 100:.2f}%" in text

    def test_unknown_format(self):
        cm, ms = self._case()
        with pytest.raises(ValueError):
            render_report(cm, ms, "yaml")
