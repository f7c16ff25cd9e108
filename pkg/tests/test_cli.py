from __future__ import annotations

import json

import pytest

from answerability.cli import main
from answerability.corpus import dump_corpus
from answerability.harness import read_run

from conftest import make_answerable_item, make_unanswerable_item


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_playbook(path, rules):
    path.write_text(json.dumps(rules), encoding="utf-8")
    return path


@pytest.fixture
def small_dataset(tmp_path):
    # Questions are keyed to playbook rules so the pre run covers every
    # transition-row denominator: answered/refused on both answerability sides.
    items = [
        make_answerable_item("a0"),
        make_answerable_item("a1"),
        make_answerable_item("a2", question="What color is the stage curtain?"),
        make_unanswerable_item("u0", replacement="dog"),
        make_unanswerable_item("u1", replacement="dog"),
        make_unanswerable_item("u2", replacement="dog",
                               question="Where is the dog sleeping tonight?"),
    ]
    path = tmp_path / "dataset.jsonl"
    dump_corpus(items, path, "qa_items")
    return path


@pytest.fixture
def model_playbook(tmp_path):
    return write_playbook(
        tmp_path / "playbook.json",
        [
            {"match": "Where is the dog sleeping",
             "completion": "On the sofa, obviously."},
            {"match": "What is the dog doing",
             "completion": "The question is unanswerable because the video does not show a dog."},
            {"match": "What is parked", "completion": "a red car"},
            {"match": "stage curtain",
             "completion": "That cannot be answered from these frames."},
            {"match": ".*", "completion": "no idea"},
        ],
    )


class TestExitCodes:
    def test_unknown_subcommand_exits_1(self, capsys):
        code, _out, err = run_cli(capsys, "frobnicate")
        assert code == 1
        assert "Usage" in err or "No such command" in err

    def test_missing_seed_is_validation_error(self, capsys, tmp_path, small_dataset):
        code, _out, _err = run_cli(
            capsys, "dataset", "build",
            "--unanswerable", str(small_dataset), "--answerable", str(small_dataset),
            "--per-category", "1", "--out", str(tmp_path / "d.jsonl"),
        )
        assert code == 1

    def test_unreachable_endpoint_exits_2(self, capsys, tmp_path, small_dataset, monkeypatch):
        registry = tmp_path / "registry.json"
        registry.write_text(json.dumps({
            "endpoints": {"model": {"base_url": "http://127.0.0.1:1", "model": "m"},
                          "judge": {"base_url": "http://127.0.0.1:1", "model": "m"}}
        }))
        monkeypatch.setattr("answerability.gateway.HttpTransport.__init__",
                            lambda self, reg, **kw: _fast_init(self, reg))
        code, _out, _err = run_cli(
            capsys, "--registry", str(registry), "run",
            "--dataset", str(small_dataset), "--endpoint", "model",
            "--out", str(tmp_path / "run.jsonl"),
        )
        assert code == 2


def _fast_init(transport, registry):
    import requests

    transport.registry = registry
    transport.timeout = 0.2
    transport.max_retries = 0
    transport.backoff_base = 0.0
    transport.backoff_cap = 0.0
    transport.sleep = lambda s: None
    transport.session = requests.Session()


class TestRunAndMetrics:
    def test_run_then_identity_metrics(self, capsys, tmp_path, small_dataset, model_playbook):
        run_path = tmp_path / "run.jsonl"
        code, out, _err = run_cli(
            capsys, "--mock", str(model_playbook), "run",
            "--dataset", str(small_dataset), "--judge", "rules", "--out", str(run_path),
        )
        assert code == 0
        assert json.loads(out)["items"] == 6
        assert len(read_run(run_path).responses) == 6

        code, out, _err = run_cli(
            capsys, "metrics",
            "--pre", str(run_path), "--post", str(run_path),
            "--dataset", str(small_dataset),
            "--out", str(tmp_path / "report"),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["s_align"] == pytest.approx(1 / 3)
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["s_align"] == pytest.approx(1 / 3)
        pareto = (tmp_path / "report_pareto.csv").read_text().splitlines()
        assert pareto[0] == "run_id,answerable_acc,unanswerable_acc"

    def test_cache_stats_and_clear(self, capsys, tmp_path, small_dataset, model_playbook):
        cache = tmp_path / "cache"
        code, _out, _err = run_cli(
            capsys, "--mock", str(model_playbook), "--cache-dir", str(cache), "run",
            "--dataset", str(small_dataset), "--out", str(tmp_path / "r.jsonl"),
        )
        assert code == 0
        code, out, _err = run_cli(capsys, "--cache-dir", str(cache), "cache", "stats")
        assert code == 0
        assert json.loads(out)["entries"] > 0
        code, out, _err = run_cli(capsys, "--cache-dir", str(cache), "cache", "clear")
        assert code == 0
        code, out, _err = run_cli(capsys, "--cache-dir", str(cache), "cache", "stats")
        assert json.loads(out)["entries"] == 0


class TestPerturbGenerate:
    def test_perturb_triplets(self, capsys, tmp_path, table_files):
        triplets = tmp_path / "triplets.jsonl"
        triplets.write_text(
            json.dumps({"id": "t1", "source_object": "police officer",
                        "relation": "looking at", "target_object": "pedestrians",
                        "video": {"id": "v1", "source": "fixture", "frames": []}}) + "\n"
        )
        out = tmp_path / "altered.jsonl"
        code, stdout, _err = run_cli(
            capsys, "--seed", "7", "perturb",
            "--triplets", str(triplets),
            "--object-table", str(table_files["object"]),
            "--relation-table", str(table_files["relation"]),
            "--out", str(out),
        )
        assert code == 0
        assert json.loads(stdout)["written"] == 1
        record = json.loads(out.read_text())
        assert record["base_id"] == "t1"
        assert {"kind", "original", "replacement", "category"} <= set(record["alteration"])

    def test_generate_from_alterations(self, capsys, tmp_path, table_files):
        triplets = tmp_path / "triplets.jsonl"
        triplets.write_text(
            json.dumps({"id": "t1", "source_object": "cat",
                        "relation": "walking", "target_object": "dog",
                        "video": {"id": "v1", "source": "fixture", "frames": []}}) + "\n"
        )
        altered = tmp_path / "altered.jsonl"
        run_cli(
            capsys, "--seed", "3", "perturb",
            "--triplets", str(triplets),
            "--object-table", str(table_files["object"]),
            "--relation-table", str(table_files["relation"]),
            "--out", str(altered),
        )
        playbook = write_playbook(
            tmp_path / "gen.json",
            [{"match": "dataset",
              "completion": "VERDICT: ok\nQUESTION: What is it?\n"
                            "ANSWER: The question is unanswerable because of the swap."}],
        )
        out = tmp_path / "outcomes.jsonl"
        ds = tmp_path / "generated.jsonl"
        code, stdout, _err = run_cli(
            capsys, "--mock", str(playbook), "--seed", "3", "generate",
            "--alterations", str(altered), "--out", str(out), "--dataset-out", str(ds),
        )
        assert code == 0
        assert json.loads(stdout)["accepted"] == 1
        item = json.loads(ds.read_text())
        assert item["k"] == -1


class TestDatasetBuild:
    def test_balanced_build(self, capsys, tmp_path):
        unans = []
        for kind in ("object", "relation", "attribute"):
            unans.extend(make_unanswerable_item(f"{kind}-{i}", kind=kind) for i in range(3))
        ans = [make_answerable_item(f"a{i}") for i in range(9)]
        unans_path, ans_path = tmp_path / "u.jsonl", tmp_path / "a.jsonl"
        dump_corpus(unans, unans_path, "qa_items")
        dump_corpus(ans, ans_path, "qa_items")
        out = tmp_path / "balanced.jsonl"
        code, stdout, _err = run_cli(
            capsys, "--seed", "5", "dataset", "build",
            "--unanswerable", str(unans_path), "--answerable", str(ans_path),
            "--per-category", "2", "--out", str(out),
        )
        assert code == 0
        assert json.loads(stdout)["written"] == 12


class TestExportCli:
    def test_sft_and_dpo(self, capsys, tmp_path, small_dataset):
        sft = tmp_path / "sft.jsonl"
        code, stdout, _err = run_cli(
            capsys, "export", "sft", "--dataset", str(small_dataset), "--out", str(sft))
        assert code == 0
        assert json.loads(stdout)["written"] == 6

        dpo = tmp_path / "dpo.jsonl"
        code, stdout, _err = run_cli(
            capsys, "export", "dpo", "--dataset", str(small_dataset), "--out", str(dpo))
        assert code == 0
        assert json.loads(stdout)["rejected_source"] == "synthetic"


class TestPopeCli:
    def test_pope_run_and_cost(self, capsys, tmp_path, small_dataset):
        playbook = write_playbook(
            tmp_path / "pope.json",
            [
                {"match": "existence checks.*dog",
                 "completion": "PROBE: Is there a dog in the video?"},
                {"match": "existence checks",
                 "completion": "PROBE: Is there a car in the video?"},
                {"match": "Is there a dog", "completion": "No"},
                {"match": "Is there a car", "completion": "Yes"},
                {"match": "What is parked", "completion": "a red car"},
                {"match": ".*", "completion": "no idea"},
            ],
        )
        out = tmp_path / "pope_run.jsonl"
        cost = tmp_path / "cost.json"
        code, stdout, _err = run_cli(
            capsys, "--mock", str(playbook), "pope",
            "--dataset", str(small_dataset), "--out", str(out),
            "--cost-report", str(cost),
        )
        assert code == 0
        assert len(read_run(out).responses) == 6
        cost_data = json.loads(cost.read_text())
        assert cost_data["dataset_multiplier"] == 1.0
        summary = json.loads(stdout)
        assert summary["items"] == 6
