import hashlib
import json
import random

import pytest

from profilerisk import cli
from profilerisk.schema import AttributeSchema

from conftest import CSV_HEADER, random_profiles, write_label_csv


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def digests(directory):
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(directory.iterdir())
        if p.is_file()
    }


def test_validate_ok(workspace, capsys):
    code, out, _ = run(capsys, "validate", "--schema", workspace / "schema.json", workspace / "gt.csv")
    assert code == 0
    assert "72 speakers, 72 utterances" in out


def test_validate_unknown_level(tmp_path, schema, capsys):
    (tmp_path / "s.json").write_text(json.dumps(schema.to_dict()))
    (tmp_path / "bad.csv").write_text(CSV_HEADER + "A,u,male,young,accent_00,actor\nB,u,male,young,Atlantis,actor\n")
    code, _, err = run(capsys, "validate", "--schema", tmp_path / "s.json", tmp_path / "bad.csv")
    assert code == 1
    errors = json.loads(err)["errors"]
    assert errors[0]["line"] == 3 and "Atlantis" in errors[0]["reason"]


def test_validate_118_with_46_incomplete(tmp_path, schema, capsys):
    (tmp_path / "s.json").write_text(json.dumps(schema.to_dict()))
    rng = random.Random(118)
    profiles = random_profiles(rng, schema.level_counts, 118)
    incomplete = set(rng.sample(sorted(profiles), 46))
    lines = [CSV_HEADER]
    for spk, prof in sorted(profiles.items()):
        cells = list(schema.decode(prof))
        if spk in incomplete:
            cells[rng.randrange(4)] = ""
        lines.append(f"{spk},u0,{','.join(cells)}\n")
    (tmp_path / "all.csv").write_text("".join(lines))
    code, out, _ = run(
        capsys, "validate", "--schema", tmp_path / "s.json", "--out", tmp_path / "o", tmp_path / "all.csv"
    )
    assert code == 1
    assert "118 speakers" in out and "46 incomplete speakers" in out
    doc = json.loads((tmp_path / "o" / "validate.json").read_text())
    summary = doc["results"]["summaries"][0]
    assert summary["n_complete_speakers"] == 72
    assert set(summary["incomplete_speakers"]) == incomplete


def test_uniqueness_fixture_table(workspace, capsys):
    out = workspace / "out"
    code, _, err = run(capsys, "uniqueness", "--schema", workspace / "schema.json", "--out", out,
                       f"ground_truth={workspace / 'gt.csv'}")
    assert code == 0, err
    assert (out / "uniqueness_uniqueness_table.csv").read_text().splitlines()[1:] == [
        "k=1,38.9", "k<3,55.6", "k<5,65.3", "k<10,72.2", "median,2"
    ]
    doc = json.loads((out / "uniqueness.json").read_text())
    assert doc["config"]["seed"] == 0 and doc["inputs"][0]["sha256"]


def test_utterance_level_runs(workspace, capsys):
    out = workspace / "out"
    code, _, err = run(capsys, "uniqueness", "--schema", workspace / "schema.json", "--level", "utterance",
                       "--runs", 4, "--seed", 9, "--out", out, workspace / "orig.jsonl")
    assert code == 0, err
    doc = json.loads((out / "uniqueness.json").read_text())
    assert len(doc["results"]["conditions"][0]["runs"]) == 4
    assert len(doc["config"]["per_run_seeds"]) == 4
    rows = (out / "uniqueness_threshold_series.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 4


def test_attack_command(workspace, capsys):
    out = workspace / "out"
    code, _, err = run(capsys, "attack", "--schema", workspace / "schema.json",
                       "--reference", f"gt={workspace / 'gt.csv'}", "--runs", 3, "--mc-trials", 500,
                       "--out", out, f"original={workspace / 'orig.jsonl'}")
    assert code == 0, err
    doc = json.loads((out / "attack.json").read_text())
    cond = doc["results"]["conditions"][0]
    assert cond["n_runs"] == 3 and len(cond["runs"]) == 3
    assert "monte_carlo" in cond["runs"][0]
    assert (out / "attack_error_rates.csv").read_text().startswith("target,reference,mean,std")


def test_attack_truth_mapping(tmp_path, small_schema, capsys):
    (tmp_path / "s.json").write_text(json.dumps(small_schema.to_dict()))
    write_label_csv(tmp_path / "t.csv", small_schema, [("T1", "u", (0, 0)), ("T2", "u", (1, 2))])
    write_label_csv(tmp_path / "r.csv", small_schema, [("R1", "u", (0, 0)), ("R2", "u", (1, 2)), ("R3", "u", (1, 2))])
    (tmp_path / "truth.csv").write_text("target_speaker_id,reference_speaker_id\nT1,R1\nT2,R2\n")
    code, _, err = run(capsys, "attack", "--schema", tmp_path / "s.json", "--reference", tmp_path / "r.csv",
                       "--truth", tmp_path / "truth.csv", "--level", "speaker", "--out", tmp_path / "o",
                       tmp_path / "t.csv")
    assert code == 0, err
    cond = json.loads((tmp_path / "o" / "attack.json").read_text())["results"]["conditions"][0]
    assert cond["runs"][0]["exact_error"] == "1/4"
    assert cond["single_run"] is True


def test_resample_channel_kdelta_metrics_report(workspace, capsys):
    s = workspace / "schema.json"
    out = workspace / "out"
    assert run(capsys, "resample", "--schema", s, "--runs", 2, "--out", out, workspace / "orig.jsonl")[0] == 0
    assert (out / "orig_run0.jsonl").exists() and (out / "resample.json").exists()

    code, _, err = run(capsys, "channel", "--schema", s, "--accuracy", "gender=0.8", "--accuracy", "age=0.56",
                       "--accuracy", "accent=0.52", "--accuracy", "profession=0.57", "--out", out,
                       workspace / "gt.csv")
    assert code == 0, err
    assert (out / "gt_noisy.csv").exists()

    code, _, err = run(capsys, "kdelta", "--schema", s, "--gt", workspace / "gt.csv", "--out", out,
                       out / "gt_noisy.csv")
    assert code == 0, err
    assert (out / "kdelta_kdelta_table.csv").read_text().splitlines()[0] == "threshold,worse,unchanged,better"

    code, _, err = run(capsys, "metrics", "--schema", s, "--truth", workspace / "gt.csv", "--out", out,
                       out / "gt_noisy.csv")
    assert code == 0, err
    m = json.loads((out / "metrics.json").read_text())["results"]["attributes"]
    assert set(m) == {"gender", "age", "accent", "profession"}

    code, stdout, err = run(capsys, "report", "--out", workspace / "r", out / "metrics.json")
    assert code == 0, err
    assert (workspace / "r" / "metrics_metrics_table.csv").exists()


def test_channel_file(workspace, capsys):
    ch = {"mode": "independent", "matrices": {
        "gender": [[1, 0], [0, 1]], "age": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        "accent": [[1.0 if i == j else 0.0 for j in range(29)] for i in range(29)],
        "profession": [[1.0 if i == j else 0.0 for j in range(6)] for i in range(6)],
    }}
    (workspace / "ch.json").write_text(json.dumps(ch))
    code, _, err = run(capsys, "channel", "--schema", workspace / "schema.json", "--channel", workspace / "ch.json",
                       "--out", workspace / "o", workspace / "gt.csv")
    assert code == 0, err
    assert (workspace / "o" / "gt_noisy.csv").read_text() == (workspace / "gt.csv").read_text()


def test_config_file_and_flag_override(workspace, capsys):
    cfg = {"schema": "schema.json", "inputs": ["orig.jsonl"], "level": "utterance", "runs": 2, "seed": 5,
           "out": "cfg_out", "format": "json"}
    (workspace / "run.json").write_text(json.dumps(cfg))
    assert run(capsys, "uniqueness", "--config", workspace / "run.json")[0] == 0
    doc = json.loads((workspace / "cfg_out" / "uniqueness.json").read_text())
    assert doc["config"]["runs"] == 2 and doc["config"]["seed"] == 5
    assert not (workspace / "cfg_out" / "uniqueness_uniqueness_table.csv").exists()
    assert run(capsys, "uniqueness", "--config", workspace / "run.json", "--runs", 3)[0] == 0
    doc = json.loads((workspace / "cfg_out" / "uniqueness.json").read_text())
    assert doc["config"]["runs"] == 3


def test_rerun_byte_identical(workspace, capsys):
    out = workspace / "out"
    argv = ["uniqueness", "--schema", workspace / "schema.json", "--level", "utterance", "--runs", 3,
            "--out", out, workspace / "orig.jsonl"]
    run(capsys, *argv)
    first = digests(out)
    run(capsys, *argv)
    assert digests(out) == first


def test_no_temp_files_left(workspace, capsys):
    out = workspace / "out"
    run(capsys, "uniqueness", "--schema", workspace / "schema.json", "--out", out, workspace / "gt.csv")
    assert not [p for p in out.iterdir() if p.name.endswith(".tmp")]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["uniqueness", "--bogus"], 2),
        (["nosuchcommand"], 2),
        (["uniqueness", "--schema", "missing.json", "x.csv"], 1),
        (["uniqueness", "--thresholds", "1,3", "--schema", "schema.json", "gt.csv"], 1),
    ],
)
def test_exit_codes(argv, code, workspace, capsys, monkeypatch):
    monkeypatch.chdir(workspace)
    got, _, err = run(capsys, *argv)
    assert got == code
    assert "error" in json.loads(err.strip().splitlines()[-1])


def test_internal_error_exit_3(workspace, capsys, monkeypatch):
    def boom(settings):
        raise RuntimeError("kaboom")

    monkeypatch.setitem(cli.COMMANDS, "uniqueness", boom)
    code, _, err = run(capsys, "uniqueness")
    assert code == 3 and json.loads(err)["error"] == "RuntimeError"
