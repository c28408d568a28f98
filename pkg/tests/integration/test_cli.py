"""
End-to-end tests of the qmms command line.
"""

import json

import pandas as pd
import pytest

from main import main


def run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path)])


class TestSpaceCommand:
    """qmms space gen"""

    def test_generates_bundle(self, tmp_path):
        # Act
        code = run(tmp_path, "space", "gen", "--name", "discrete_N", "--params", "n=10")

        # Assert
        assert code == 0
        for name in ("discrete_N.json", "reference_card.json", "manifest.json"):
            assert (tmp_path / name).exists(), name
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["exit_code"] == 0
        assert "discrete_N.json" in manifest["artifacts"]

    def test_usage_errors(self, tmp_path):
        assert run(tmp_path, "space", "gen", "--name", "discrete_N", "--bogus") == 2
        assert run(tmp_path, "space", "gen", "--name", "discrete_N", "--params", "n=1") == 2
        assert run(tmp_path, "space", "gen", "--name", "discrete_N", "--params", "m=3") == 2


class TestNormCommand:
    def test_two_point_grid(self, tmp_path):
        code = run(
            tmp_path, "norm", "--name", "euclidean_grid", "--params", "n=2",
            "--values", "0,1", "--alpha", "1", "--p", "2",
        )
        assert code == 0
        payload = json.loads((tmp_path / "norm.json").read_text())
        assert payload["seminorm"] == pytest.approx(1.0, rel=1e-6)
        assert payload["solver"]["status"] == "CERTIFIED"

    def test_saved_space(self, tmp_path):
        assert run(tmp_path / "gen", "space", "gen", "--name", "euclidean_grid", "--params", "n=3") == 0
        code = run(
            tmp_path / "norm", "norm", "--space", str(tmp_path / "gen" / "euclidean_grid.json"),
            "--values", "0,0,0", "--alpha", "1", "--p", "2",
        )
        assert code == 0
        assert json.loads((tmp_path / "norm" / "norm.json").read_text())["seminorm"] == 0.0

    def test_length_mismatch(self, tmp_path):
        code = run(
            tmp_path, "norm", "--name", "euclidean_grid", "--params", "n=3",
            "--values", "0,1", "--alpha", "1", "--p", "2",
        )
        assert code == 2


class TestOtherCommands:
    def test_bump(self, tmp_path):
        code = run(tmp_path, "bump", "--name", "euclidean_grid", "--params", "n=6", "--E0", "0", "--E1", "5")
        assert code == 0
        assert (tmp_path / "bump.json").exists()

    def test_diag_doubling(self, tmp_path):
        code = run(tmp_path, "diag", "doubling", "--name", "discrete_N", "--params", "n=12", "--deltas", "0.1,0.2")
        assert code == 0
        assert (tmp_path / "doubling.csv").exists()

    def test_divergent_integrability(self, tmp_path):
        code = run(
            tmp_path, "diag", "integrability", "--name", "gauss_density",
            "--params", "beta=1,resolution=100", "--r", "1",
        )
        assert code == 1

    def test_experiment(self, tmp_path):
        assert run(tmp_path, "experiment", "--name", "exdis-doubling") == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["passed"] is True

    def test_diag_index_custom_grid(self, tmp_path):
        # Act
        code = run(
            tmp_path, "diag", "index", "--name", "euclidean_grid", "--params", "n=6",
            "--beta-grid", "0.5,1,2", "--threshold", "1.5",
        )

        # Assert
        assert code == 0
        table = pd.read_csv(tmp_path / "index_profile.csv")
        assert list(table.columns) == ["beta", "distortion", "feasible"]
        assert table["beta"].tolist() == [0.5, 1.0, 2.0]
        assert table["feasible"].tolist() == [True, True, False]
        assert table["distortion"].iloc[2] == pytest.approx(5.0)
        summary = json.loads((tmp_path / "index_profile.json").read_text())
        assert summary["threshold"] == 1.5
        assert summary["feasible_sup"] == 1.0

    def test_density_bound_experiment_cites_examples(self, tmp_path):
        assert run(tmp_path, "experiment", "--name", "exp0-bound") == 0
        text = (tmp_path / "summary.json").read_text()
        for locator in ("Example 3.9", "Example 3.10", "Example 3.11"):
            assert locator in text
        bounds = pd.read_csv(tmp_path / "bounds.csv")
        assert set(bounds["beta"]) == {0.25, 0.5, 1.0}
        assert len(bounds) == 3 * 3 * 2 * 3
        assert bounds["pass"].all()
