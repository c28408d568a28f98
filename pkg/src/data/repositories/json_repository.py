"""
JSON file implementation of the space and family repositories.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.core.models.entities import FunctionFamily, FunctionOnSpace, GeneratorSpec, QuasiMetricMeasureSpace
from src.core.models.exceptions import InvalidParams
from src.core.models.repositories import FamilyRepository, SpaceRepository
from src.core.services.calculations.example_space_service import ExampleSpaceService
from src.core.services.calculations.space_calculation_service import SpaceCalculationService
from src.data.storage.codec import decode_space, encode_space, load_json, save_json

logger = logging.getLogger(__name__)


class JsonFileMixin:
    """Mixin for a repository rooted in one directory"""

    def __init__(self, base_dir: str = "data"):
        self.base_dir = Path(base_dir)
        self._ensure_dir_exists()

    def _ensure_dir_exists(self) -> None:
        self.base_dir.mkdir(parents=True, exist_ok=True)

    def _resolve(self, path: Path) -> Path:
        path = Path(path)
        return path if path.is_absolute() or path.exists() else self.base_dir / path


class JsonSpaceRepository(JsonFileMixin, SpaceRepository):
    """Spaces as <name>.json files"""

    def __init__(
        self,
        base_dir: str = "data",
        spaces: Optional[SpaceCalculationService] = None,
        examples: Optional[ExampleSpaceService] = None,
    ):
        super().__init__(base_dir)
        self.spaces = spaces or SpaceCalculationService()
        self.examples = examples or ExampleSpaceService(self.spaces)

    def save(
        self, name: str, space: QuasiMetricMeasureSpace, generator: Optional[GeneratorSpec] = None
    ) -> Path:
        path = save_json(self.base_dir / f"{name}.json", encode_space(space, generator))
        logger.info("saved space %s (%d atoms) to %s", name, space.n, path)
        return path

    def load(self, path: Path) -> Tuple[QuasiMetricMeasureSpace, Optional[GeneratorSpec]]:
        return decode_space(load_json(self._resolve(path)), self.spaces, self.examples)

    def find_all(self) -> List[Path]:
        return sorted(self.base_dir.glob("*.json"))


class JsonFamilyRepository(JsonFileMixin, FamilyRepository):
    """
    Families as directories:

        member_000.json    {"values": [...]}
        gradient_000.json  {"values": [...]}   optional, one per member
        nu.json            {"nu": [...], "C": c} optional
        family.json        {"alpha": a, "norm_bound": m} optional
    """

    def save(self, name: str, family: FunctionFamily) -> Path:
        target = self.base_dir / name
        for k, member in enumerate(family.members):
            save_json(target / f"member_{k:03d}.json", {"values": member.values})
        for k, g in enumerate(family.gradients or []):
            save_json(target / f"gradient_{k:03d}.json", {"values": g})
        if family.nu is not None:
            save_json(target / "nu.json", {"nu": family.nu, "C": family.nu_constant})
        meta = {"alpha": family.alpha, "norm_bound": family.norm_bound}
        if any(v is not None for v in meta.values()):
            save_json(target / "family.json", meta)
        return target

    def load(self, path: Path, space: QuasiMetricMeasureSpace) -> FunctionFamily:
        """
        Raises:
            InvalidParams: no member files, or gradient files not matching members
        """
        folder = self._resolve(path)
        member_files = sorted(folder.glob("member_*.json"))
        if not member_files:
            raise InvalidParams(f"no member_*.json files in {folder}")
        members = [
            FunctionOnSpace(np.asarray(load_json(f)["values"], dtype=float), space) for f in member_files
        ]

        gradients = None
        gradient_files = sorted(folder.glob("gradient_*.json"))
        if gradient_files:
            if len(gradient_files) != len(member_files):
                raise InvalidParams("every member needs its gradient file")
            gradients = [np.asarray(load_json(f)["values"], dtype=float) for f in gradient_files]

        nu = nu_constant = None
        if (folder / "nu.json").exists():
            payload = load_json(folder / "nu.json")
            nu = np.asarray(payload["nu"], dtype=float)
            nu_constant = payload.get("C")

        meta = load_json(folder / "family.json") if (folder / "family.json").exists() else {}
        logger.info("loaded family of %d members from %s", len(members), folder)
        return FunctionFamily(
            members=members,
            nu=nu,
            nu_constant=nu_constant,
            gradients=gradients,
            alpha=meta.get("alpha"),
            norm_bound=meta.get("norm_bound"),
        )
