import json

import numpy as np
import pytest
from click.testing import CliRunner

from bcdc import io as bio
from bcdc.cli import main
from bcdc.core import CovariateSet
from bcdc.metrics import nmi
from bcdc.simulate import block_labels


@pytest.fixture
def runner():
    return CliRunner()


def write_two_cliques(tmp_path, n_per=10, gap=6.0):
    """Two disconnected cliques with well-separated Gaussian covariates."""
    n = 2 * n_per
    lines = []
    for base in (0, n_per):
        for i in range(n_per):
            for j in range(i + 1, n_per):
                lines.append(f"{base + i + 1} {base + j + 1}")
    edges = tmp_path / "edges.txt"
    edges.write_text("\n".join(lines) + "\n")
    rng = np.random.default_rng(5)
    x = rng.standard_normal((n, 1)) * 0.3
    x[n_per:] += gap
    cov = tmp_path / "cov.csv"
    bio.write_covariates(cov, CovariateSet.continuous_only(x))
    truth = tmp_path / "truth.csv"
    bio.write_labels(truth, block_labels([n_per, n_per]))
    return edges, cov, truth


class TestFit:
    def test_two_cliques_recovered(self, runner, tmp_path):
        edges, cov, truth = write_two_cliques(tmp_path)
        out = tmp_path / "run"
        res = runner.invoke(
            main,
            ["fit", str(edges), str(cov), "--truth", str(truth),
             "--iters", "300", "--seed", "1", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["nmi_vs_truth"] == 1.0
        assert summary["point_estimate_L"] == 2
        labels = bio.read_labels(out / "labels.csv")
        assert nmi(labels, bio.read_labels(truth)) == 1.0
        assert (out / "trace_chain0.csv").exists()
        assert (out / "meta.txt").exists()

    def test_no_covariates_mode(self, runner, tmp_path):
        edges, _, truth = write_two_cliques(tmp_path)
        out = tmp_path / "run"
        res = runner.invoke(
            main,
            ["fit", str(edges), "--no-covariates", "--truth", str(truth),
             "--iters", "300", "--seed", "1", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["no_covariates"] is True
        assert summary["nmi_vs_truth"] == 1.0

    def test_missing_covariates_is_usage_error(self, runner, tmp_path):
        edges, _, _ = write_two_cliques(tmp_path)
        res = runner.invoke(main, ["fit", str(edges), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2

    def test_byte_identical_reruns(self, runner, tmp_path):
        edges, cov, _ = write_two_cliques(tmp_path)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = runner.invoke(
                main,
                ["fit", str(edges), str(cov), "--iters", "120", "--seed", "7",
                 "--out", str(out)],
            )
            assert res.exit_code == 0, res.output
            outs.append(out)
        for fname in ("trace_chain0.csv", "summary.json", "labels.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_multi_chain_reports_best(self, runner, tmp_path):
        edges, cov, _ = write_two_cliques(tmp_path)
        out = tmp_path / "run"
        res = runner.invoke(
            main,
            ["fit", str(edges), str(cov), "--iters", "120", "--seed", "3",
             "--chains", "2", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        assert (out / "trace_chain0.csv").exists()
        assert (out / "trace_chain1.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["best_chain"] in (0, 1)
        best = summary["best_log_joint"]
        joints = []
        for c in (0, 1):
            trace = bio.read_trace(out / f"trace_chain{c}.csv")
            joints.append(trace.log_joint.max())
        assert best == pytest.approx(max(joints), rel=1e-12)

    def test_mask_file(self, runner, tmp_path):
        edges, cov, _ = write_two_cliques(tmp_path, n_per=5)
        mask = tmp_path / "mask.txt"
        mask.write_text("1 2\n3 4\n")  # almost everything unobserved
        out = tmp_path / "run"
        res = runner.invoke(
            main,
            ["fit", str(edges), str(cov), "--mask", str(mask),
             "--iters", "60", "--seed", "2", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["masked"] is True
        assert "bic_exact" not in summary

    def test_data_error_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 1\n")
        res = runner.invoke(
            main, ["fit", str(bad), "--no-covariates", "--out", str(tmp_path / "o")]
        )
        assert res.exit_code == 3

    def test_truth_size_mismatch_is_data_error(self, runner, tmp_path):
        edges, cov, _ = write_two_cliques(tmp_path)
        truth = tmp_path / "short.csv"
        bio.write_labels(truth, [0, 1, 0])
        res = runner.invoke(
            main,
            ["fit", str(edges), str(cov), "--truth", str(truth),
             "--iters", "40", "--out", str(tmp_path / "o")],
        )
        assert res.exit_code == 3


class TestSimulate:
    def test_writes_replicate_directories(self, runner, tmp_path):
        out = tmp_path / "data"
        res = runner.invoke(
            main,
            ["simulate", "continuous", "--replicates", "3", "--seed", "9",
             "--n", "30", "--r", "0.2", "--mu", "2.0", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        reps = sorted(p.name for p in out.iterdir())
        assert reps == ["rep0000", "rep0001", "rep0002"]
        for rep in reps:
            d = out / rep
            assert (d / "edges.txt").exists()
            assert (d / "covariates.csv").exists()
            assert (d / "covariates.csv.types").exists()
            assert (d / "truth.csv").exists()
            meta = bio.read_metadata(d / "meta.txt")
            assert meta["design"] == "continuous"
            assert float(meta["mu"]) == 2.0

    def test_replicates_distinct_and_reproducible(self, runner, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = runner.invoke(
                main,
                ["simulate", "categorical1", "--replicates", "2", "--seed", "4",
                 "--n", "30", "--out", str(out)],
            )
            assert res.exit_code == 0, res.output
            outs.append(out)
        e00 = (outs[0] / "rep0000" / "edges.txt").read_bytes()
        e01 = (outs[0] / "rep0001" / "edges.txt").read_bytes()
        assert e00 != e01
        assert e00 == (outs[1] / "rep0000" / "edges.txt").read_bytes()

    def test_fit_consumes_simulated_replicate(self, runner, tmp_path):
        data = tmp_path / "data"
        res = runner.invoke(
            main,
            ["simulate", "continuous", "--replicates", "1", "--seed", "2",
             "--n", "40", "--r", "0.05", "--mu", "4.0", "--out", str(data)],
        )
        assert res.exit_code == 0, res.output
        rep = data / "rep0000"
        out = tmp_path / "fit"
        res = runner.invoke(
            main,
            ["fit", str(rep / "edges.txt"), str(rep / "covariates.csv"),
             "--truth", str(rep / "truth.csv"), "--iters", "300", "--seed", "0",
             "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["nmi_vs_truth"] >= 0.9


class TestEval:
    def test_nmi_and_bic_row(self, runner, tmp_path):
        edges, _, truth = write_two_cliques(tmp_path, n_per=5)
        labels = tmp_path / "labels.csv"
        bio.write_labels(labels, block_labels([5, 5]))
        res = runner.invoke(
            main,
            ["eval", "--labels", str(labels), "--ref", str(truth),
             "--network", str(edges)],
        )
        assert res.exit_code == 0, res.output
        header, row = res.output.strip().splitlines()
        assert header == "nmi,bic_exact,bic_approx"
        vals = dict(zip(header.split(","), row.split(",")))
        assert float(vals["nmi"]) == 1.0

    def test_requires_some_reference(self, runner, tmp_path):
        labels = tmp_path / "labels.csv"
        bio.write_labels(labels, [0, 1])
        res = runner.invoke(main, ["eval", "--labels", str(labels)])
        assert res.exit_code == 2


class TestBenchmark:
    def test_small_sweep_outputs(self, runner, tmp_path):
        import pandas as pd

        out = tmp_path / "bench"
        res = runner.invoke(
            main,
            ["benchmark", "--design", "continuous", "--grid", "r=0.1",
             "--grid", "mu=3.0", "--replicates", "2", "--iters", "80",
             "--seed", "5", "--out", str(out)],
            env={"BCDC_JOBS": "1"},
        )
        assert res.exit_code == 0, res.output
        results = pd.read_csv(out / "results.csv")
        assert sorted(results["method"].unique()) == ["bcdc", "bsbm"]
        assert len(results) == 4
        assert {"design", "grid_mu", "grid_r", "replicate", "method", "nmi",
                "runtime_seconds", "L_est", "status"} <= set(results.columns)
        assert (results["status"] == "ok").all()
        summary = pd.read_csv(out / "summary.csv")
        assert {"nmi_mean", "nmi_q25", "nmi_q75", "runtime_mean"} <= set(summary.columns)
        assert (out / "nmi_continuous.png").exists()
        assert (out / "runtime_continuous.png").exists()

    def test_results_deterministic_except_runtime(self, runner, tmp_path):
        import pandas as pd

        frames = []
        for name in ("a", "b"):
            out = tmp_path / name
            res = runner.invoke(
                main,
                ["benchmark", "--design", "continuous", "--grid", "r=0.1",
                 "--replicates", "1", "--iters", "60", "--seed", "11",
                 "--no-figures", "--out", str(out)],
            )
            assert res.exit_code == 0, res.output
            frames.append(pd.read_csv(out / "results.csv"))
        a, b = frames
        for col in ("nmi", "L_est", "status"):
            assert a[col].tolist() == b[col].tolist()

    def test_bad_grid_is_usage_error(self, runner, tmp_path):
        res = runner.invoke(
            main,
            ["benchmark", "--design", "continuous", "--grid", "bogus",
             "--out", str(tmp_path / "o")],
        )
        assert res.exit_code == 2
