import json
from pathlib import Path

import numpy as np
import pytest

import evidencenet as en
from evidencenet import cli
from evidencenet.sampler import summary_checksum


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    """Small synthetic table so CLI runs finish in seconds."""
    rng = np.random.default_rng(99)
    X = rng.normal(size=(40, 13))
    w = rng.normal(size=13) * 0.5
    y = X @ w + 0.4 * rng.normal(size=40)
    path = tmp_path_factory.mktemp("data") / "tiny.data"
    rows = [" ".join(f"{v:.10g}" for v in [*X[i], y[i]]) for i in range(40)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def run_cli(*argv):
    return cli.main(list(argv))


class TestRunCommand:
    @pytest.fixture(scope="class")
    def run_out(self, tiny_data, tmp_path_factory):
        out = tmp_path_factory.mktemp("runs")
        code = run_cli("run", "--data", tiny_data, "--models", "br",
                       "--out", str(out), "--n-splits", "2", "--n-live", "60",
                       "--n-repeats", "10", "--seed", "5")
        assert code == 0
        return out

    def test_artifacts_written(self, run_out):
        for split in (0, 1):
            d = run_out / "br" / f"split{split}"
            assert (d / "dead.csv").exists()
            assert (d / "summary.json").exists()
            assert (d / "predictions.csv").exists()
        assert (run_out / "config.json").exists()
        assert (run_out / "report.csv").exists()

    def test_summaries_validate(self, run_out):
        summary = en.read_summary(run_out / "br" / "split0" / "summary.json")
        assert summary["model_name"] == "br"
        assert summary["converged"] is True
        assert summary["dim"] == 14
        assert summary["config_hash"]

    def test_rerun_is_byte_identical(self, run_out, tiny_data, tmp_path):
        out2 = tmp_path / "again"
        code = run_cli("run", "--data", tiny_data, "--models", "br",
                       "--out", str(out2), "--n-splits", "2", "--n-live", "60",
                       "--n-repeats", "10", "--seed", "5")
        assert code == 0
        for rel in ("br/split0/summary.json", "br/split0/dead.csv",
                    "br/split1/dead.csv", "report.csv"):
            assert (out2 / rel).read_bytes() == (run_out / rel).read_bytes()

    def test_report_regenerates_identically(self, run_out, capsys):
        code = run_cli("report", str(run_out), "--csv", str(run_out / "regen.csv"))
        assert code == 0
        assert (run_out / "regen.csv").read_bytes() == (run_out / "report.csv").read_bytes()

    def test_unknown_model_is_usage_error(self, tiny_data, tmp_path):
        code = run_cli("run", "--data", tiny_data, "--models", "frobnicate",
                       "--out", str(tmp_path / "x"))
        assert code == 2

    def test_offgrid_needs_flag(self, tiny_data, tmp_path):
        code = run_cli("run", "--data", tiny_data, "--models", "r sh sv (2)",
                       "--out", str(tmp_path / "x"))
        assert code == 2

    def test_missing_data_actionable(self, tmp_path, monkeypatch):
        monkeypatch.delenv(cli.DATA_ENV, raising=False)
        with pytest.raises(SystemExit, match="EVIDENCENET_DATA"):
            run_cli("run", "--models", "br", "--out", str(tmp_path / "x"))


def fake_run_dir(root, name, log_z, loss=0.3, dim=14, split_index=0,
                 config_hash="cafe", y=None, y_hat=None, y_sd=None):
    d = Path(root) / cli.model_slug(name) / f"split{split_index}"
    d.mkdir(parents=True, exist_ok=True)
    summary = {"model_name": name, "split_index": split_index, "log_z": log_z,
               "log_z_err": 0.05, "test_loss": loss, "test_loss_err": 0.01,
               "dim": dim, "converged": True, "config_hash": config_hash}
    summary["checksum"] = summary_checksum(summary)
    (d / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2))
    if y is not None:
        from evidencenet.posterior import write_predictions
        write_predictions(d / "predictions.csv", y, y_hat, y_sd)
    return d.parent


class TestReportCommand:
    def test_full_grid_has_49_rows(self, tmp_path, capsys):
        for i, name in enumerate(en.benchmark_grid()):
            fake_run_dir(tmp_path, name, log_z=-100.0 - i,
                         dim=en.total_dim(en.parse_name(name)))
        code = run_cli("report", str(tmp_path), "--csv", str(tmp_path / "grid.csv"))
        assert code == 0
        lines = (tmp_path / "grid.csv").read_text().strip().split("\n")
        assert len(lines) == 50  # header + 49 rows
        names = [line.split(",")[0].strip('"') for line in lines[1:]]
        assert names == en.benchmark_grid()

    def test_empty_input_gives_header_only(self, tmp_path):
        code = run_cli("report", str(tmp_path), "--csv", str(tmp_path / "empty.csv"))
        assert code == 0
        assert (tmp_path / "empty.csv").read_text().strip() == \
            "name,test_loss,test_loss_err,log_z,log_z_err,dim"

    def test_subset_gives_subset_rows(self, tmp_path):
        fake_run_dir(tmp_path, "br", -294.0)
        fake_run_dir(tmp_path, "(2)", -287.0, dim=31)
        code = run_cli("report", str(tmp_path), "--csv", str(tmp_path / "two.csv"))
        assert code == 0
        lines = (tmp_path / "two.csv").read_text().strip().split("\n")
        assert len(lines) == 3
        assert lines[1].startswith('"br"')

    def test_mixed_config_hashes_refused(self, tmp_path):
        fake_run_dir(tmp_path, "br", -294.0, config_hash="aaaa")
        fake_run_dir(tmp_path, "(2)", -287.0, dim=31, config_hash="bbbb")
        with pytest.raises(SystemExit, match="config snapshots"):
            run_cli("report", str(tmp_path))
        assert run_cli("report", str(tmp_path), "--force") == 0


class TestEnsembleCommand:
    @pytest.fixture()
    def members(self, tmp_path):
        rng = np.random.default_rng(3)
        y = rng.normal(size=6)
        dirs = []
        self.preds = []
        for i, (name, log_z) in enumerate([("(2)", -10.0), ("(4)", -10.0 - np.log(3.0))]):
            y_hat = rng.normal(size=6)
            y_sd = rng.random(6) + 0.1
            self.preds.append((y_hat, y_sd))
            dirs.append(fake_run_dir(tmp_path, name, log_z, dim=31 + i,
                                     y=y, y_hat=y_hat, y_sd=y_sd))
        self.y = y
        return dirs

    def test_two_member_combination(self, members, tmp_path):
        out = tmp_path / "ens"
        code = run_cli("ensemble", str(members[0]), str(members[1]),
                       "--out", str(out), "--name", "pair")
        assert code == 0
        summary = en.read_summary(out / "split0" / "summary.json")
        assert summary["model_name"] == "pair"
        assert summary["members"] == ["(2)", "(4)"]
        np.testing.assert_allclose(summary["model_posterior"], [0.75, 0.25], atol=1e-12)
        expected = en.combined_evidence([-10.0, -10.0 - np.log(3.0)])
        assert summary["log_z"] == pytest.approx(expected, abs=1e-12)
        from evidencenet.posterior import read_predictions
        _, y_comb, _ = read_predictions(out / "split0" / "predictions.csv")
        np.testing.assert_allclose(
            y_comb, 0.75 * self.preds[0][0] + 0.25 * self.preds[1][0], atol=1e-12)

    def test_single_member_matches_member(self, members, tmp_path):
        out = tmp_path / "solo"
        code = run_cli("ensemble", str(members[0]), "--out", str(out), "--name", "solo")
        assert code == 0
        member = en.read_summary(members[0] / "split0" / "summary.json")
        combined = en.read_summary(out / "split0" / "summary.json")
        assert combined["log_z"] == pytest.approx(member["log_z"], abs=1e-12)
        assert combined["test_loss"] == pytest.approx(member["test_loss"], rel=1e-9)

    def test_delta_prior_selects_first_member(self, members, tmp_path):
        out = tmp_path / "delta"
        code = run_cli("ensemble", str(members[0]), str(members[1]),
                       "--out", str(out), "--name", "delta", "--prior", "1", "0")
        assert code == 0
        combined = en.read_summary(out / "split0" / "summary.json")
        member = en.read_summary(members[0] / "split0" / "summary.json")
        assert combined["log_z"] == pytest.approx(member["log_z"] + np.log(1.0), abs=1e-12)
        from evidencenet.posterior import read_predictions
        _, y_comb, _ = read_predictions(out / "split0" / "predictions.csv")
        np.testing.assert_allclose(y_comb, self.preds[0][0], atol=1e-13)

    def test_split_mismatch_is_error(self, members, tmp_path):
        fake_run_dir(tmp_path, "(8)", -9.0, dim=121, split_index=1,
                     y=np.zeros(3), y_hat=np.zeros(3), y_sd=np.ones(3))
        code = run_cli("ensemble", str(members[0]), str(Path(tmp_path) / cli.model_slug("(8)")),
                       "--out", str(tmp_path / "bad"), "--name", "bad")
        assert code == 2


class TestOracleCommand:
    def test_prints_splits_and_average(self, data_path, capsys):
        code = run_cli("oracle", "br", "--data", data_path, "--n-splits", "3")
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("split") == 3
        assert "mean loss" in out


class TestVerifyRunChecks:
    def test_tampered_summary_detected(self, tmp_path):
        d = fake_run_dir(tmp_path, "br", -294.0)
        path = d / "split0" / "summary.json"
        data = json.loads(path.read_text())
        data["log_z"] = 0.0
        path.write_text(json.dumps(data, sort_keys=True, indent=2))
        checks = cli._verify_run_dirs([str(tmp_path)])
        assert len(checks) == 1
        assert checks[0][1] is False
        assert "checksum" in checks[0][2]

    def test_intact_summary_passes(self, tmp_path):
        fake_run_dir(tmp_path, "br", -294.0)
        checks = cli._verify_run_dirs([str(tmp_path)])
        assert checks[0][1] is True

    @pytest.mark.slow
    def test_fast_scorecard_on_real_data(self, data_path, capsys):
        code = run_cli("verify", "--data", data_path)
        out = capsys.readouterr().out
        assert code == 0, out
        assert "checks passed" in out


class TestSeedDerivation:
    def test_stable_and_distinct(self):
        a = cli.run_seed(38, "br", 0)
        assert a == cli.run_seed(38, "br", 0)
        assert a != cli.run_seed(38, "br", 1)
        assert a != cli.run_seed(38, "(2)", 0)
        assert a != cli.run_seed(39, "br", 0)
