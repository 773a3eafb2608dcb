import json

import numpy as np
import pytest

from simover.cli import EXIT_DATA, EXIT_OK, EXIT_RUN, EXIT_USAGE, main
from simover.data import load_dataset, save_dataset, split_labeled_unlabeled
from synth import make_small_dataset


@pytest.fixture()
def dataset_file(tmp_path):
    dataset = make_small_dataset(60, 3, 4, seed=0)
    path = tmp_path / "data.jsonl"
    save_dataset(dataset, path)
    return path, dataset


def run(*argv):
    return main([str(a) for a in argv])


class TestSplit:
    def test_writes_partitions_and_sidecar(self, tmp_path, dataset_file):
        path, dataset = dataset_file
        outdir = tmp_path / "out"
        code = run("split", "--input", path, "--labeled-fraction", 0.3,
                   "--test-fraction", 0.2, "--seed", 7, "--outdir", outdir)
        assert code == EXIT_OK
        labeled = load_dataset(outdir / "labeled.jsonl", "labeled")
        pool = load_dataset(outdir / "pool.jsonl", "unlabeled")
        test = load_dataset(outdir / "test.jsonl", "labeled")
        assert len(labeled) + len(pool) + len(test) == len(dataset)
        sidecar = [json.loads(l) for l in (outdir / "pool_labels.jsonl").read_text().splitlines()]
        assert {r["id"] for r in sidecar} == set(pool.ids())

    def test_missing_file_is_a_data_error(self, tmp_path):
        code = run("split", "--input", tmp_path / "nope.jsonl",
                   "--labeled-fraction", 0.3, "--seed", 1, "--outdir", tmp_path)
        assert code == EXIT_DATA

    def test_bad_fraction_is_a_run_failure(self, tmp_path, dataset_file):
        path, _ = dataset_file
        code = run("split", "--input", path, "--labeled-fraction", 0.001,
                   "--seed", 1, "--outdir", tmp_path / "o")
        assert code == EXIT_RUN


class TestOversampleCommand:
    def make_inputs(self, tmp_path, dataset):
        labeled, pool = split_labeled_unlabeled(dataset, 0.3, 3)
        lp, pp = tmp_path / "labeled.jsonl", tmp_path / "pool.jsonl"
        save_dataset(labeled, lp)
        save_dataset(pool, pp)
        return lp, pp

    def test_end_to_end_outputs(self, tmp_path, dataset_file):
        _, dataset = dataset_file
        lp, pp = self.make_inputs(tmp_path, dataset)
        outdir = tmp_path / "run"
        code = run("oversample", "--labeled", lp, "--pool", pp, "--seed", 11,
                   "--iterations", 6, "--batch-size", 2, "--outdir", outdir)
        assert code == EXIT_OK
        summary = json.loads((outdir / "summary.json").read_text())
        assert set(summary) == {"initial_measure", "final_measure", "improvement",
                                "instances_added", "wall_clock_seconds"}
        new_labeled = load_dataset(outdir / "labeled.jsonl", "labeled")
        remaining = load_dataset(outdir / "pool.jsonl", "unlabeled")
        assert len(new_labeled) >= 1
        history_lines = (outdir / "history.csv").read_text().strip().splitlines()
        assert history_lines[0].startswith("iteration,selected_class")
        assert len(history_lines) >= 2
        assert not set(new_labeled.ids()) & set(remaining.ids())

    def test_external_policy_requires_test_file(self, tmp_path, dataset_file):
        _, dataset = dataset_file
        lp, pp = self.make_inputs(tmp_path, dataset)
        code = run("oversample", "--labeled", lp, "--pool", pp, "--seed", 1,
                   "--eval-policy", "external_test", "--outdir", tmp_path / "x")
        assert code == EXIT_USAGE

    def test_curve_from_history(self, tmp_path, dataset_file):
        _, dataset = dataset_file
        lp, pp = self.make_inputs(tmp_path, dataset)
        outdir = tmp_path / "run"
        assert run("oversample", "--labeled", lp, "--pool", pp, "--seed", 11,
                   "--iterations", 6, "--outdir", outdir) == EXIT_OK
        curve = tmp_path / "curve.csv"
        assert run("curve", "--history", outdir / "history.csv", "--out", curve) == EXIT_OK
        lines = curve.read_text().strip().splitlines()
        assert lines[0] == "instances_added,measure"
        assert len(lines) >= 2


class TestGridsearchCommand:
    def plan_file(self, tmp_path, dataset_path, with_seed=True):
        plan = {
            "dataset": str(dataset_path),
            "labeled_fraction": 0.3,
            "k": 2,
            "grid": {
                "balance_ratio": [0.3],
                "similarity_calc_type": ["average"],
                "batch_size": [2],
                "num_iterations": [4],
                "similarity_kind": ["euclidean"],
            },
            "hyperparams": {"epochs": 40},
        }
        if with_seed:
            plan["seed"] = 9
        path = tmp_path / "plan.json"
        path.write_text(json.dumps(plan), encoding="utf-8")
        return path

    def test_runs_and_writes_outputs(self, tmp_path, dataset_file, capsys):
        data_path, _ = dataset_file
        plan = self.plan_file(tmp_path, data_path)
        outdir = tmp_path / "grid"
        code = run("gridsearch", "--config", plan, "--outdir", outdir)
        assert code == EXIT_OK
        assert (outdir / "runs.csv").exists()
        assert (outdir / "aggregates.csv").exists()
        best = json.loads((outdir / "best_config.json").read_text())
        assert best is None or best["config_index"] == 0

    def test_seed_is_mandatory(self, tmp_path, dataset_file):
        data_path, _ = dataset_file
        plan = self.plan_file(tmp_path, data_path, with_seed=False)
        assert run("gridsearch", "--config", plan) == EXIT_USAGE
        assert run("gridsearch", "--config", plan, "--seed", 3,
                   "--outdir", tmp_path / "g2") == EXIT_OK

    def test_grid_values_overridable_by_flags(self, tmp_path, dataset_file, capsys):
        data_path, _ = dataset_file
        plan = self.plan_file(tmp_path, data_path)
        outdir = tmp_path / "g3"
        code = run("gridsearch", "--config", plan, "--outdir", outdir,
                   "--balance-ratio", 0.2, 0.4, "--iterations", 2)
        assert code == EXIT_OK
        lines = (outdir / "aggregates.csv").read_text().strip().splitlines()
        assert len(lines) == 3  # header + two balance-ratio configs
        assert ",0.2," in lines[1] and ",0.4," in lines[2]


class TestEvaluateCommand:
    def test_report_from_predictions(self, tmp_path, dataset_file, capsys):
        path, dataset = dataset_file
        preds = tmp_path / "preds.jsonl"
        with preds.open("w", encoding="utf-8") as fh:
            for inst in dataset.instances:
                proba = (np.asarray(inst.labels, float) * 0.8 + 0.1).tolist()
                fh.write(json.dumps({"id": inst.id, "proba": proba}) + "\n")
        assert run("evaluate", "--truth", path, "--predictions", preds) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["f1.weighted"] == 1.0
        assert report["hamming_loss"] == 0.0
        assert report["n_samples"] == len(dataset)

    def test_missing_prediction_is_a_data_error(self, tmp_path, dataset_file):
        path, dataset = dataset_file
        preds = tmp_path / "preds.jsonl"
        preds.write_text(
            json.dumps({"id": dataset.instances[0].id, "proba": [0.5, 0.5, 0.5]}) + "\n",
            encoding="utf-8",
        )
        assert run("evaluate", "--truth", path, "--predictions", preds) == EXIT_DATA


class TestStatsCommand:
    def test_prints_summary(self, dataset_file, capsys):
        path, dataset = dataset_file
        assert run("stats", "--input", path) == EXIT_OK
        stats = json.loads(capsys.readouterr().out)
        assert stats["num_instances"] == len(dataset)
        assert stats["num_labels"] == dataset.num_classes
        assert 0 < stats["density"] <= 1

    def test_unlabeled_file_is_a_data_error(self, tmp_path, dataset_file):
        path, dataset = dataset_file
        from simover.data import strip_labels

        pool_path = tmp_path / "pool.jsonl"
        save_dataset(strip_labels(dataset), pool_path)
        assert run("stats", "--input", pool_path) == EXIT_DATA


class TestUsage:
    def test_unknown_command(self):
        assert run("frobnicate") == EXIT_USAGE

    def test_missing_required_flag(self):
        assert run("stats") == EXIT_USAGE

    def test_unknown_measure_is_a_usage_error(self, tmp_path, dataset_file):
        path, dataset = dataset_file
        labeled, pool = split_labeled_unlabeled(dataset, 0.3, 3)
        lp, pp = tmp_path / "l.jsonl", tmp_path / "p.jsonl"
        save_dataset(labeled, lp)
        save_dataset(pool, pp)
        code = run("oversample", "--labeled", lp, "--pool", pp, "--seed", 1,
                   "--measure", "auc", "--outdir", tmp_path / "o")
        assert code == EXIT_USAGE

    def test_plan_missing_dataset_is_a_usage_error(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"labeled_fraction": 0.3, "seed": 1}), encoding="utf-8")
        assert run("gridsearch", "--config", plan) == EXIT_USAGE
