import json
from fractions import Fraction

import jsonschema
import pytest

from profilerisk import report as rep
from profilerisk.attack import attack_closed_form, AttackInstance, summarize_runs
from profilerisk.partition import AnonymityAssignment, k_delta, partition_speakers, uniqueness_report

from conftest import speaker_dataset


@pytest.mark.parametrize(
    "value, places, text",
    [
        (Fraction(28 * 100, 72), 1, "38.9"),
        (Fraction(40 * 100, 72), 1, "55.6"),
        (Fraction(47 * 100, 72), 1, "65.3"),
        (Fraction(52 * 100, 72), 1, "72.2"),
        (Fraction(1, 8), 2, "0.13"),
        (0.0, 1, "0.0"),
        (20.4, 1, "20.4"),
    ],
)
def test_fmt_decimal(value, places, text):
    assert rep.fmt_decimal(value, places) == text


def test_fmt_median():
    assert rep.fmt_median(Fraction(2)) == "2"
    assert rep.fmt_median(Fraction(5, 2)) == "2.5"


def _uniqueness_doc(fixture72_dataset):
    ur = uniqueness_report(partition_speakers(fixture72_dataset))
    results = {
        "thresholds": [3, 5, 10],
        "conditions": [
            {
                "condition": "ground_truth",
                "level": "speaker",
                "runs": [rep.uniqueness_to_dict(ur)],
                "summary": rep.summarize_uniqueness([ur]),
            }
        ],
    }
    return rep.build_report("uniqueness", results, {"seed": 0}, [
        {"path": "gt.csv", "label": "ground_truth", "sha256": fixture72_dataset.content_hash()}
    ])


def test_uniqueness_csv(fixture72_dataset):
    text = rep.csv_tables(_uniqueness_doc(fixture72_dataset))["uniqueness_table"]
    assert text.splitlines() == [
        "metric,ground_truth",
        "k=1,38.9",
        "k<3,55.6",
        "k<5,65.3",
        "k<10,72.2",
        "median,2",
    ]


def test_threshold_series_csv(fixture72_dataset):
    lines = rep.csv_tables(_uniqueness_doc(fixture72_dataset))["threshold_series"].splitlines()
    assert lines[0] == "condition,run,threshold,pct"
    assert lines[1] == "ground_truth,,k=1,38.9"


def test_kdelta_row_format():
    # 49 speakers, 10 of whom cross below k=10 -> 20.4 % worse
    gt = AnonymityAssignment({f"s{i}": 12 for i in range(49)}, ())
    inf = AnonymityAssignment({f"s{i}": (4 if i < 10 else 12) for i in range(49)}, ())
    kd = k_delta(gt, inf, (10,))
    results = {"mode": "threshold", "runs": [{"run": None, "rows": rep.kdelta_rows(kd)}],
               "mean_rows": rep.mean_kdelta_rows([kd])}
    doc = rep.build_report("kdelta", results, {}, [])
    assert rep.csv_tables(doc)["kdelta_table"].splitlines()[1] == "10,20.4,79.6,0.0"


def test_json_is_canonical_and_deterministic(fixture72_dataset, tmp_path):
    a = rep.dumps(_uniqueness_doc(fixture72_dataset))
    b = rep.dumps(_uniqueness_doc(fixture72_dataset))
    assert a == b
    doc = json.loads(a)
    assert list(doc) == sorted(doc)
    paths = rep.emit_report(doc, "json", tmp_path / "u.json")
    assert paths[0].read_text() == a


def test_schema_rejects_bad_documents(fixture72_dataset):
    doc = _uniqueness_doc(fixture72_dataset)
    bad = json.loads(json.dumps(doc))
    bad["results"]["conditions"][0]["runs"][0]["pct_unique"] = 140.0
    with pytest.raises(jsonschema.ValidationError):
        rep.validate_report(bad)
    bad = json.loads(json.dumps(doc))
    del bad["inputs"]
    with pytest.raises(jsonschema.ValidationError):
        rep.validate_report(bad)


def test_attack_dict_and_table(schema):
    ds = speaker_dataset(schema, {"a": (0, 0, 0, 0), "b": (0, 0, 0, 0)})
    cf = attack_closed_form(AttackInstance.build(ds, ds))
    entry = {"target": "t", "reference": "r", "runs": [rep.attack_to_dict(cf, 0)],
             **rep.run_summary_to_dict(summarize_runs([cf.error_rate]))}
    doc = rep.build_report("attack", {"conditions": [entry]}, {}, [])
    assert doc["results"]["conditions"][0]["runs"][0]["exact_error"] == "1/2"
    assert rep.csv_tables(doc)["error_rates"].splitlines()[1] == "t,r,0.5000,0.0000,1,0.50 ± 0.00"
