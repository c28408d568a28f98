"""
Repository interfaces for spaces and function families.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Optional, Tuple

from .entities import FunctionFamily, GeneratorSpec, QuasiMetricMeasureSpace


class SpaceRepository(ABC):
    """Storage of spaces, either as matrices or as generator recipes"""

    @abstractmethod
    def save(
        self, name: str, space: QuasiMetricMeasureSpace, generator: Optional[GeneratorSpec] = None
    ) -> Path:
        """
        Save space under name.

        Args:
            name: file stem
            space: the space to store
            generator: recipe that regenerates the space; density lines are
                stored only through it

        Returns:
            Path of the written file
        """
        pass

    @abstractmethod
    def load(self, path: Path) -> Tuple[QuasiMetricMeasureSpace, Optional[GeneratorSpec]]:
        """Load a space file, regenerating it when it carries only a recipe"""
        pass

    @abstractmethod
    def find_all(self) -> List[Path]:
        """All stored space files"""
        pass


class FamilyRepository(ABC):
    """Storage of function families as directories of member files"""

    @abstractmethod
    def save(self, name: str, family: FunctionFamily) -> Path:
        """Save family members, gradients and nu; returns the directory"""
        pass

    @abstractmethod
    def load(self, path: Path, space: QuasiMetricMeasureSpace) -> FunctionFamily:
        """Load the family stored in path on the given space"""
        pass
