"""
Integration tests for the JSON codec, repositories and the bundle exporter.
"""

import json
import math

import numpy as np
import pandas as pd
import pytest

from src.core.models.entities import FunctionFamily, FunctionOnSpace, GeneratorSpec, Refusal
from src.core.models.exceptions import InvalidParams, InvalidSpace
from src.data.repositories.json_repository import JsonFamilyRepository, JsonSpaceRepository
from src.data.storage.codec import atomic_write_text, decode_space, dumps, encode_space, to_jsonable
from src.reports.exporters.bundle_exporter import BundleExporter


class TestCodec:
    """Plain JSON structures of results"""

    def test_non_finite_floats(self):
        payload = json.loads(dumps({"a": math.inf, "b": -math.inf, "c": math.nan, None: 1}))
        assert payload == {"a": "inf", "b": "-inf", "c": "nan", "null": 1}

    def test_dataclasses_and_numpy(self, two_point):
        refusal = Refusal(epsilon=0.1, reason="budget", pair=(np.int64(0), np.int64(1)), oscillation=np.float64(2.5))
        payload = to_jsonable(refusal)
        assert payload["pair"] == [0, 1]
        assert payload["oscillation"] == 2.5
        assert to_jsonable(FunctionOnSpace(np.array([1.0, 2.0]), two_point)) == [1.0, 2.0]
        assert to_jsonable(two_point)["n"] == 2

    def test_space_round_trip(self, line3):
        space, generator = decode_space(encode_space(line3, GeneratorSpec("custom", {"k": 1})))
        np.testing.assert_array_equal(space.dist, line3.dist)
        np.testing.assert_array_equal(space.mu, line3.mu)
        assert generator.name == "custom"

    def test_generator_only_payload(self):
        space, generator = decode_space({"generator": {"name": "discrete_N", "params": {"n": 4}}})
        assert space.n == 4
        assert generator.params == {"n": 4}

    def test_density_line_needs_generator(self, deps):
        line, _ = deps.examples.generate(GeneratorSpec("dyadic_tail", {"K": 3}))
        with pytest.raises(InvalidSpace):
            encode_space(line)
        assert "dist" not in encode_space(line, GeneratorSpec("dyadic_tail", {"K": 3}))

    def test_empty_payload(self):
        with pytest.raises(InvalidSpace):
            decode_space({})

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        target = tmp_path / "sub" / "file.txt"
        atomic_write_text(target, "one")
        atomic_write_text(target, "two")
        assert target.read_text() == "two"
        assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


class TestRepositories:
    """Spaces and families on disk"""

    def test_space_repository(self, tmp_path, discrete):
        # Arrange
        repo = JsonSpaceRepository(str(tmp_path))
        space = discrete(5)

        # Act
        path = repo.save("discrete", space, GeneratorSpec("discrete_N", {"n": 5}))
        loaded, generator = repo.load(path)

        # Assert
        assert repo.find_all() == [path]
        np.testing.assert_array_equal(loaded.mu, space.mu)
        assert loaded.point_ids == space.point_ids
        assert generator.name == "discrete_N"

    def test_family_repository(self, tmp_path, grid):
        space = grid(4)
        family = FunctionFamily(
            members=[FunctionOnSpace(np.arange(4.0), space), FunctionOnSpace(np.ones(4), space)],
            nu=space.mu * 0.5,
            nu_constant=1.0,
            gradients=[np.full(4, 8.0), np.zeros(4)],
            alpha=1.0,
            norm_bound=10.0,
        )
        repo = JsonFamilyRepository(str(tmp_path))
        path = repo.save("fam", family)
        loaded = repo.load(path, space)
        assert len(loaded.members) == 2
        np.testing.assert_array_equal(loaded.members[0].values, np.arange(4.0))
        np.testing.assert_array_equal(loaded.gradients[0], np.full(4, 8.0))
        assert loaded.alpha == 1.0
        assert loaded.norm_bound == 10.0
        assert loaded.nu_constant == 1.0

    def test_family_errors(self, tmp_path, grid):
        space = grid(4)
        repo = JsonFamilyRepository(str(tmp_path))
        (tmp_path / "empty").mkdir()
        with pytest.raises(InvalidParams):
            repo.load(tmp_path / "empty", space)

        family = FunctionFamily(
            members=[FunctionOnSpace(np.zeros(4), space), FunctionOnSpace(np.ones(4), space)],
            gradients=[np.zeros(4), np.zeros(4)],
        )
        path = repo.save("partial", family)
        (path / "gradient_001.json").unlink()
        with pytest.raises(InvalidParams):
            repo.load(path, space)


class TestBundleExporter:
    """Report bundles"""

    def test_bundle(self, tmp_path, config):
        # Arrange
        exporter = BundleExporter(str(tmp_path / "bundle"))

        # Act
        exporter.export_table("table", pd.DataFrame({"r": [0.5, 1.0], "h": [1 / 3, math.inf]}))
        exporter.export_json("summary", {"value": math.nan})
        manifest_path = exporter.write_manifest(config.to_dict(), {"total_seconds": 0.5}, {"exit_code": 0})

        # Assert
        table = pd.read_csv(tmp_path / "bundle" / "table.csv")
        assert table["h"][0] == 1 / 3
        manifest = json.loads(manifest_path.read_text())
        assert manifest["artifacts"] == ["summary.json", "table.csv"]
        assert manifest["seed"] == 0
        assert manifest["exit_code"] == 0
        assert "numpy" in manifest["versions"]
        assert json.loads((tmp_path / "bundle" / "summary.json").read_text()) == {"value": "nan"}
