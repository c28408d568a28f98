"""
JSON codec for spaces, functions and result objects.

Floats are written through json's repr, so every finite value reads back
bit-identical.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import dataclasses
import json
import logging
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from src.core.models.entities import (
    FiniteQMMSpace,
    FunctionOnSpace,
    GeneratorSpec,
    QuasiMetricMeasureSpace,
)
from src.core.models.exceptions import InvalidSpace
from src.core.services.calculations.example_space_service import ExampleSpaceService
from src.core.services.calculations.space_calculation_service import SpaceCalculationService

logger = logging.getLogger(__name__)


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write text to a temporary file in the target directory, then os.replace it"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def to_jsonable(obj: Any) -> Any:
    """
    Plain JSON structure of a result object.

    Spaces collapse to a short summary and functions to their values; non
    finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, QuasiMetricMeasureSpace):
        summary = {"n": obj.n, "total_mass": obj.total_mass}
        if isinstance(obj, FiniteQMMSpace) and obj.cached_Cd is not None:
            summary.update(C_d=obj.cached_Cd, C_d_tilde=obj.cached_Cd_tilde)
        return summary
    if isinstance(obj, FunctionOnSpace):
        return to_jsonable(obj.values)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        for name in ("net_size_bound",):
            if hasattr(type(obj), name):
                out[name] = to_jsonable(getattr(obj, name))
        return out
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {("null" if k is None else str(k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def save_json(path: Union[str, Path], obj: Any) -> Path:
    return atomic_write_text(path, dumps(obj))


def load_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def encode_space(space: QuasiMetricMeasureSpace, generator: Optional[GeneratorSpec] = None) -> Dict[str, Any]:
    """
    {"points", "dist", "mu"} for finite spaces, plus an optional
    {"generator": {"name", "params"}} block. Density lines carry only the
    generator block.

    Raises:
        InvalidSpace: a density line without its generator
    """
    payload: Dict[str, Any] = {}
    if isinstance(space, FiniteQMMSpace):
        payload["points"] = list(space.point_ids)
        payload["dist"] = space.dist.tolist()
        payload["mu"] = space.mu.tolist()
    elif generator is None:
        raise InvalidSpace("density lines are stored through their generator")
    if generator is not None:
        payload["generator"] = {"name": generator.name, "params": dict(generator.params)}
    return payload


def decode_space(
    payload: Dict[str, Any],
    spaces: Optional[SpaceCalculationService] = None,
    examples: Optional[ExampleSpaceService] = None,
) -> Tuple[QuasiMetricMeasureSpace, Optional[GeneratorSpec]]:
    """
    Inverse of encode_space. Matrices win over the generator block when
    both are present; the block is then returned for provenance only.

    Raises:
        InvalidSpace: neither matrices nor a generator block
    """
    spaces = spaces or SpaceCalculationService()
    generator = None
    if "generator" in payload:
        block = payload["generator"]
        generator = GeneratorSpec(str(block["name"]), dict(block.get("params", {})))
    if "dist" in payload and "mu" in payload:
        space = spaces.validate_space(payload["dist"], payload["mu"], payload.get("points"))
        return space, generator
    if generator is None:
        raise InvalidSpace("space file needs dist/mu or a generator block")
    examples = examples or ExampleSpaceService(spaces)
    space, _ = examples.generate(generator)
    return space, generator

