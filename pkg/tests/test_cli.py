"""Command-line surface: pipeline, determinism, exit codes, schemas."""

import json
from pathlib import Path

import numpy as np
import pytest

from anonvoice.cli import main
from helpers import type_skeleton

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One synth -> fit pipeline shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth-population", "--speakers", "24", "--utterances", "16",
                 "--dimension", "32", "--sigma-within", "0.05", "--seed", "11",
                 "--out", str(root / "pop.avec"),
                 "--truth-out", str(root / "truth.json")]) == 0
    assert main(["synth-population", "--speakers", "40", "--utterances", "4",
                 "--dimension", "32", "--seed", "101",
                 "--out", str(root / "dev.jsonl")]) == 0
    assert main(["synth-population", "--speakers", "24", "--utterances", "1",
                 "--dimension", "32", "--seed", "202",
                 "--out", str(root / "train.jsonl")]) == 0
    assert main(["fit-models", "--dev", str(root / "dev.jsonl"),
                 "--training", str(root / "train.jsonl"),
                 "--components", "8", "--seed", "5",
                 "--out", str(root / "models.json")]) == 0
    return root


def test_truth_sidecar_schema(pipeline):
    truth = json.loads((pipeline / "truth.json").read_text())
    assert truth["schema_version"] == 1
    assert truth["dimension"] == 32
    assert len(truth["speakers"]) == 24
    assert set(truth["speakers"][0]) == {"speaker_id", "gender", "identity_mean"}


def test_gen_identity_deterministic(pipeline):
    secret = pipeline / "secret.bin"
    secret.write_bytes(b"swordfish")
    for name in ("id1.json", "id2.json"):
        assert main(["gen-identity", "--generator", str(pipeline / "models.json"),
                     "--method", "mean-pool-subset", "--gender", "f",
                     "--secret-file", str(secret),
                     "--out", str(pipeline / name)]) == 0
    first = (pipeline / "id1.json").read_bytes()
    assert first == (pipeline / "id2.json").read_bytes()
    payload = json.loads(first)
    assert payload["method"] == "mean-pool-subset"
    vec = np.asarray(payload["embedding"])
    assert abs(np.linalg.norm(vec) - 1.0) < 1e-9
    assert len(payload["secret_digest"]) == 64


def test_eval_diversity_smoke_and_rerun_identical(pipeline):
    args = ["eval-diversity", "--generator", str(pipeline / "models.json"),
            "--dataset", str(pipeline / "pop.avec"),
            "--identities", "16", "--utterances", "12", "--enroll", "10",
            "--methods", "random,pool-selection", "--seed", "3"]
    assert main(args + ["--out", str(pipeline / "div1")]) == 0
    assert main(args + ["--out", str(pipeline / "div2")]) == 0
    for method in ("random", "pool-selection"):
        first = pipeline / "div1" / method
        second = pipeline / "div2" / method
        assert (first / "summary.json").read_bytes() == (second / "summary.json").read_bytes()
        assert (first / "roc.csv").read_bytes() == (second / "roc.csv").read_bytes()
        assert (first / "hist.csv").read_bytes() == (second / "hist.csv").read_bytes()
        summary = json.loads((first / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["method"] == method
        assert {"eer", "auc", "auc_gap", "auc_natural", "nontarget_modes"} <= set(summary)
    natural = json.loads((pipeline / "div1" / "natural" / "summary.json").read_text())
    assert natural["population"] == "natural"
    resolved = json.loads((pipeline / "div1" / "config.resolved").read_text())
    assert resolved["identities"] == 16


def test_eval_diversity_roc_csv_parses(pipeline):
    rows = (pipeline / "div1" / "random" / "roc.csv").read_text().strip().splitlines()
    assert rows[0] == "threshold,fpr,tpr"
    values = np.asarray([[float(x) for x in row.split(",")] for row in rows[1:]])
    assert np.all(np.diff(values[:, 0]) < 0)          # thresholds descending
    assert values[0, 1] == 0.0 and values[0, 2] == 0.0
    assert values[-1, 1] == 1.0 and values[-1, 2] == 1.0


def test_attack_privacy_two_candidates_chance_half(pipeline):
    out = pipeline / "priv2.json"
    assert main(["attack-privacy", "--dataset", str(pipeline / "pop.avec"),
                 "--generator", str(pipeline / "models.json"),
                 "--method", "random", "--no-gender-filter",
                 "--candidates", "2", "--rounds", "600", "--seed", "21",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    chance = 0.5
    sigma = (chance * (1 - chance) / report["n_trials"]) ** 0.5
    assert abs(report["success_rate"] - chance) < 4 * sigma


def test_attack_privacy_round_csv_and_config(pipeline):
    out = pipeline / "priv.json"
    csv_path = pipeline / "rounds.csv"
    assert main(["attack-privacy", "--dataset", str(pipeline / "pop.avec"),
                 "--generator", str(pipeline / "models.json"),
                 "--method", "pool-selection", "--rounds", "50", "--seed", "22",
                 "--out", str(out), "--round-csv", str(csv_path)]) == 0
    rows = csv_path.read_text().strip().splitlines()
    assert rows[0] == "round,victim,identified,success"
    assert len(rows) == 51
    report = json.loads(out.read_text())
    assert report["config"]["method"] == "pool-selection"
    assert report["config"]["seed"] == 22


def test_attack_auth_parallel_serial_identical(pipeline):
    base = ["attack-auth", "--dataset", str(pipeline / "pop.avec"),
            "--generator", str(pipeline / "models.json"),
            "--method", "random", "--strategy", "victim-original-voice",
            "--trials", "150", "--seed", "23"]
    assert main(base + ["--out", str(pipeline / "auth1.json"), "--workers", "1",
                        "--trial-csv", str(pipeline / "trials.csv")]) == 0
    assert main(base + ["--out", str(pipeline / "auth2.json"), "--workers", "4"]) == 0
    assert (pipeline / "auth1.json").read_bytes() == (pipeline / "auth2.json").read_bytes()
    report = json.loads((pipeline / "auth1.json").read_text())
    assert report["attack"] == "auth"
    assert "threshold" in report
    assert "impostor_rate" in report["extras"]
    rows = (pipeline / "trials.csv").read_text().strip().splitlines()
    assert rows[0] == "trial,success"
    assert len(rows) == 151
    assert sum(int(r.split(",")[1]) for r in rows[1:]) == report["n_successes"]


def test_config_file_with_flag_override(pipeline, tmp_path):
    config = tmp_path / "attack.json"
    config.write_text(json.dumps({
        "dataset": str(pipeline / "pop.avec"),
        "generator": str(pipeline / "models.json"),
        "method": "pca-gmm",
        "rounds": 40,
        "seed": 30,
    }))
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(["attack-privacy", "--config", str(config), "--out", str(out1)]) == 0
    assert main(["attack-privacy", "--config", str(config), "--rounds", "20",
                 "--out", str(out2)]) == 0
    assert json.loads(out1.read_text())["n_trials"] == 40
    assert json.loads(out2.read_text())["n_trials"] == 20  # flags win


def test_text_metrics_command(tmp_path):
    ref = tmp_path / "ref"
    hyp = tmp_path / "hyp"
    ref.mkdir()
    hyp.mkdir()
    (ref / "a.txt").write_text("the cat sat on the mat")
    (hyp / "a.txt").write_text("the cat sat mat")
    (ref / "b.txt").write_text("hello world")
    (hyp / "b.txt").write_text("hello cruel world")
    out = tmp_path / "metrics.json"
    assert main(["text-metrics", "--ref-dir", str(ref), "--hyp-dir", str(hyp),
                 "--bootstrap", "100", "--seed", "0", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["wer"] == pytest.approx(3.0 / 8.0)
    assert report["counts"]["hits"] == 6
    missing = tmp_path / "hyp_missing"
    missing.mkdir()
    assert main(["text-metrics", "--ref-dir", str(ref), "--hyp-dir", str(missing),
                 "--out", str(out)]) == 3


def test_exit_codes(pipeline, tmp_path, capsys):
    # 2: config errors
    assert main(["attack-privacy", "--dataset", str(pipeline / "pop.avec"),
                 "--method", "pca-gmm", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["eval-diversity", "--generator", str(pipeline / "models.json"),
                 "--identities", "8", "--utterances", "4", "--enroll", "10",
                 "--out", str(tmp_path / "d")]) == 2
    bad_config = tmp_path / "bad.json"
    bad_config.write_text('{"no_such_key": 1}')
    assert main(["attack-privacy", "--config", str(bad_config),
                 "--out", str(tmp_path / "x.json")]) == 2
    # 3: data errors
    assert main(["attack-privacy", "--dataset", str(tmp_path / "missing.avec"),
                 "--method", "baseline", "--out", str(tmp_path / "x.json")]) == 3
    assert main(["fit-models", "--dev", str(tmp_path / "missing.jsonl"),
                 "--out", str(tmp_path / "m.json")]) == 3
    capsys.readouterr()


def test_numerical_error_exit_code(pipeline, tmp_path):
    """A non-positive-definite GMM covariance must surface as exit code 4."""
    from anonvoice.stats import _decode_array, _encode_array

    payload = json.loads((pipeline / "models.json").read_text())
    for gender_models in payload["genders"].values():
        covariances = _decode_array(gender_models["gmm"]["covariances"])
        gender_models["gmm"]["covariances"] = _encode_array(-covariances)
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(payload))
    secret = tmp_path / "secret.bin"
    secret.write_bytes(b"x")
    assert main(["gen-identity", "--generator", str(broken),
                 "--method", "pca-gmm", "--gender", "f",
                 "--secret-file", str(secret),
                 "--out", str(tmp_path / "id.json")]) == 4


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["attack-auth", "--strategy", "bogus"])
    assert excinfo.value.code == 2


def test_golden_schemas(tmp_path, monkeypatch):
    """Every JSON artifact's schema is pinned by a golden skeleton file."""
    monkeypatch.chdir(tmp_path)
    assert main(["synth-population", "--speakers", "12", "--utterances", "14",
                 "--dimension", "16", "--seed", "1", "--out", "pop.avec",
                 "--truth-out", "truth.json"]) == 0
    assert main(["synth-population", "--speakers", "24", "--utterances", "2",
                 "--dimension", "16", "--seed", "2", "--out", "dev.jsonl"]) == 0
    assert main(["fit-models", "--dev", "dev.jsonl", "--training", "dev.jsonl",
                 "--components", "4", "--seed", "3", "--out", "models.json"]) == 0
    (tmp_path / "secret.bin").write_bytes(b"s")
    assert main(["gen-identity", "--generator", "models.json", "--method", "pool-selection",
                 "--gender", "m", "--secret-file", "secret.bin", "--out", "identity.json"]) == 0
    assert main(["eval-diversity", "--generator", "models.json", "--dataset", "pop.avec",
                 "--identities", "8", "--utterances", "12", "--enroll", "10",
                 "--methods", "random", "--seed", "4", "--out", "div"]) == 0
    assert main(["attack-privacy", "--dataset", "pop.avec", "--generator", "models.json",
                 "--method", "random", "--no-gender-filter", "--candidates", "4",
                 "--rounds", "30", "--seed", "5", "--out", "privacy.json"]) == 0
    assert main(["attack-auth", "--dataset", "pop.avec", "--generator", "models.json",
                 "--method", "random", "--strategy", "victim-original-voice",
                 "--trials", "30", "--seed", "6", "--out", "auth.json"]) == 0
    (tmp_path / "ref").mkdir()
    (tmp_path / "hyp").mkdir()
    (tmp_path / "ref" / "a.txt").write_text("one two three")
    (tmp_path / "hyp" / "a.txt").write_text("one two")
    assert main(["text-metrics", "--ref-dir", "ref", "--hyp-dir", "hyp",
                 "--bootstrap", "50", "--seed", "7", "--out", "metrics.json"]) == 0
    artifacts = {
        "diversity_summary": "div/random/summary.json",
        "natural_summary": "div/natural/summary.json",
        "privacy_report": "privacy.json",
        "auth_report": "auth.json",
        "identity": "identity.json",
        "truth_sidecar": "truth.json",
        "text_metrics": "metrics.json",
    }
    for name, artifact in artifacts.items():
        produced = type_skeleton(json.loads((tmp_path / artifact).read_text()))
        expected = json.loads((GOLDEN_DIR / f"{name}.schema.json").read_text())
        assert produced == expected, f"schema drift in {artifact}"
