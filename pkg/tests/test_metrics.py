import json

import numpy as np
import pytest

from costformer.metrics import (UNDEFINED, ConfusionMatrix, CostSpec, MetricReport, average_confusion, confusion,
                                evaluate, metric_suite, render_report, total_cost)



def test_confusion_examples():
    assert confusion([1, 0], [1, 0]) == ConfusionMatrix(1, 0, 0, 1)
    assert confusion([1, 1], [0, 0]).fn == 2
    with pytest.raises(ValueError):
        confusion([1, 0], [1])


def test_confusion_matches_loop_oracle():
    g = np.random.default_rng(0)
    t, p = g.integers(0, 2, 1000), g.integers(0, 2, 1000)
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for a, b in zip(t, p):
        counts[{(1, 1): "tp", (0, 1): "fp", (1, 0): "fn", (0, 0): "tn"}[(a, b)]] += 1
    assert confusion(t, p).to_dict() == counts


def test_proposed_test_row():
    m = metric_suite(ConfusionMatrix(368.2, 4, 6.8, 15621))
    assert round(m["accuracy"], 4) == 0.9993
    assert round(m["npv"], 4) == 0.9996
    # exact ratios of the averaged counts; the published cells differ in the last digit
    assert m["precision"] == pytest.approx(368.2 / 372.2, abs=1e-15)
    assert m["sensitivity"] == pytest.approx(368.2 / 375, abs=1e-15)
    assert m["f1"] == pytest.approx(736.4 / 747.2, abs=1e-15)
    assert (round(m["precision"], 4), round(m["sensitivity"], 4), round(m["f1"], 4)) == (0.9893, 0.9819, 0.9855)


def test_syed_train_row():
    m = metric_suite(ConfusionMatrix(967, 1568, 33, 57432))
    assert round(m["precision"], 4) == 0.3815 and round(m["f1"], 4) == 0.5471


def test_undefined_ratios():
    m = metric_suite(ConfusionMatrix(0, 0, 3, 7))
    assert m["precision"] is UNDEFINED and m["fdr"] is UNDEFINED
    assert m["sensitivity"] == 0.0
    assert repr(UNDEFINED) == "UNDEFINED"


def test_costs():
    assert total_cost(ConfusionMatrix(368.2, 4, 6.8, 15621)) == (40, 3400, 3440)
    assert total_cost(ConfusionMatrix(0, 77, 137, 0)) == (770, 68500, 69270)
    assert total_cost(ConfusionMatrix(1, 0, 0, 1)) == (0, 0, 0)
    with pytest.raises(ValueError):
        CostSpec(-1, 5)


def test_average_confusion():
    cms = [ConfusionMatrix(368, 4, 7, 15621), ConfusionMatrix(369, 4, 6, 15621)]
    assert average_confusion(cms) == ConfusionMatrix(368.5, 4, 6.5, 15621)
    assert average_confusion(cms[:1]) == cms[0]
    with pytest.raises(ValueError):
        average_confusion([])


def test_render_single_row_has_all_columns():
    r = evaluate(ConfusionMatrix(368.2, 4, 6.8, 15621), label="proposed")
    lines = render_report([r], "text_table").splitlines()
    assert len(lines) == 2
    assert len(lines[1].split()) == 14  # label plus 13 columns
    cells = dict(zip(lines[0].split(), lines[1].split()))
    assert cells["precision"] == "0.9893" and cells["f1"] == "0.9855" and cells["accuracy"] == "0.9993"
    assert cells["fn"] == "6.8" and cells["total_cost"] == "3440"


def test_render_json_round_trip_idempotent():
    reports = [evaluate(ConfusionMatrix(0, 0, 3, 7), seeds=(1,)), evaluate(ConfusionMatrix(5, 2, 1, 90))]
    doc = render_report(reports, "json")
    again = render_report([MetricReport.from_dict(d) for d in json.loads(doc)], "json")
    assert doc == again
    assert json.loads(doc)[0]["metrics"]["precision"] is None


def test_render_errors():
    with pytest.raises(ValueError):
        render_report([])
    with pytest.raises(ValueError):
        render_report([evaluate(ConfusionMatrix(1, 1, 1, 1))], "xml")
