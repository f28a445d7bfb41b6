"""Run manifests and output writers: machine JSON on stdout, a human summary on stderr, CSV dumps."""
import enum
import hashlib
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

logger = logging.getLogger(__name__)


class RunManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: str
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str
    duration_seconds: float
    result_sha256: str


def _json_default(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _finite(value: Any) -> Any:
    """Replaces non-finite floats by strings so the JSON stays standard."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def canonical_json(payload: Any) -> str:
    normalized = json.loads(json.dumps(payload, default=_json_default))
    return json.dumps(_finite(normalized), sort_keys=True, separators=(",", ":"), allow_nan=False)


def result_digest(result: Dict[str, Any]) -> str:
    return hashlib.sha256(canonical_json(result).encode("utf-8")).hexdigest()


def build_manifest(command: str, parameters: Dict[str, Any], seed: Optional[int], tool_version: str,
                   duration_seconds: float, result: Dict[str, Any]) -> RunManifest:
    return RunManifest(
        command=command,
        parameters=json.loads(canonical_json(parameters)),
        seed=seed,
        tool_version=tool_version,
        duration_seconds=duration_seconds,
        result_sha256=result_digest(result),
    )


def emit_result(result: Dict[str, Any], manifest: RunManifest, out: Optional[Path] = None, stream: TextIO = sys.stdout) -> str:
    """Writes {"manifest", "result"} as JSON to the stream and, if given, to ``out``."""
    document = canonical_json({"manifest": manifest.model_dump(), "result": result})
    stream.write(document + "\n")
    stream.flush()
    if out is not None:
        Path(out).write_text(document + "\n")
        logger.info("Wrote result to %s", out)
    return document


def print_summary(command: str, result: Dict[str, Any], stream: TextIO = sys.stderr) -> None:
    """Scalar fields of the result as a two-column table."""
    scalars = {key: value for key, value in result.items() if isinstance(value, (int, float, str, bool)) or value is None}
    print(f"\n--- {command} ---", file=stream)
    if not scalars:
        print("(no scalar fields)", file=stream)
        return
    table = pd.Series(scalars, dtype=object).to_frame("value")
    print(table.to_string(), file=stream)


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False)
    logger.info("Wrote %d rows to %s", len(frame), path)
