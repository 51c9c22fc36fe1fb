"""
Utilities for writing result files: hashed inputs, CSV/JSON writers, run
manifests and progress bars.
"""

import json
import logging
from hashlib import sha256
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm as _tqdm

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.6g"


def file_sha256(path: Union[str, Path]) -> str:
    """
    Hex sha256 digest of the file at `path`, read in chunks.
    """
    digest = sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _jsonable(value: Any) -> Any:
    "Convert numpy scalars/arrays and NaN to plain JSON values, recursively"
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    "Write `data` as indented JSON with sorted keys, at full float precision"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_csv(frame: pd.DataFrame, path: Union[str, Path], index: bool = False) -> Path:
    "Write `frame` with six significant digits"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format=CSV_FLOAT_FORMAT)
    logger.info("wrote %s", path)
    return path


def matrix_frame(matrix: np.ndarray, rows: np.ndarray, columns: np.ndarray, row_name: str) -> pd.DataFrame:
    "Dense matrix with labelled axes, rows down and columns across"
    frame = pd.DataFrame(np.asarray(matrix), index=pd.Index(np.asarray(rows), name=row_name), columns=np.asarray(columns))
    return frame


class RunManifest(BaseModel):
    """
    Record of one CLI run: enough to reproduce every file it lists. Contains no
    timestamps so that identical runs produce identical manifests.
    """

    model_config = ConfigDict(frozen=True)

    command: List[str]
    registry_path: str
    registry_sha256: str
    parameters: Dict[str, Any]
    version: str
    outputs: List[str]

    def save(self, path: Union[str, Path]) -> Path:
        return write_json(self.model_dump(), path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def missing_outputs(self, root: Optional[Union[str, Path]] = None) -> List[str]:
        "Listed outputs that do not exist, relative to `root` when given"
        base = Path(root) if root is not None else Path(".")
        return [name for name in self.outputs if not (base / name).exists()]


class Tqdm:
    # These defaults are the same as the argument defaults in tqdm.
    default_mininterval: float = 0.1

    @staticmethod
    def set_slower_interval(use_slower_interval: bool) -> None:
        """
        If `use_slower_interval` is `True`, progress bars refresh every 10 s instead
        of every 0.1 s, which keeps log files of long surveys readable.
        """
        Tqdm.default_mininterval = 10.0 if use_slower_interval else 0.1

    @staticmethod
    def tqdm(*args, **kwargs):
        new_kwargs = {"mininterval": Tqdm.default_mininterval, **kwargs}

        return _tqdm(*args, **new_kwargs)
