import csv
import hashlib
import io
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Type, TypeVar
import numpy as np
from pydantic import BaseModel, ValidationError
from src.errors import ConfigError
from src.settings import ArithmeticMode

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def read_json(path: Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")


def _format_validation(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err.get("loc", ())) or "<root>"
        parts.append(f"{loc}: {err.get('msg')}")
    return "; ".join(parts)


def load_model(model: Type[ModelT], data: Any, source: str = "config") -> ModelT:
    """Validate `data` into `model`; pydantic errors become ConfigError naming the offending fields."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation(e)}")


def _mark_exact(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {**obj, "exact": True}
    return obj


def load_scenario(path: Path, mode: ArithmeticMode = ArithmeticMode.DOUBLE):
    """Read a scenario config; exact mode reads lambda and psi as rationals."""
    from src.models.scenario import ScenarioConfig

    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: a scenario config must be a JSON object")
    if mode == ArithmeticMode.EXACT:
        data = dict(data)
        for key in ("lambda", "psi"):
            if key in data:
                data[key] = _mark_exact(data[key])
    return load_model(ScenarioConfig, data, str(path))


def to_plain(obj: Any) -> Any:
    """JSON-ready copy: infinities as "inf"/"-inf", NaN as null, Fractions as "p/q", numpy as Python."""
    if isinstance(obj, BaseModel):
        return to_plain(obj.model_dump(by_alias=True))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return to_plain(obj.item())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    return obj


def canonical_json(obj: Any, indent: Optional[int] = None) -> str:
    return json.dumps(to_plain(obj), indent=indent, allow_nan=False, ensure_ascii=True)


def config_hash(effective: Dict[str, Any]) -> str:
    """SHA-256 over the compact key-sorted JSON of the effective configuration."""
    payload = json.dumps(to_plain(effective), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_cell(v) for v in value)
    return str(value)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    logger.info("Wrote %s", out)


def write_csv(
    rows: Iterable[Dict[str, Any]],
    out: Optional[Path],
    digest: str,
    mode: ArithmeticMode,
    columns: Optional[Sequence[str]] = None,
) -> None:
    """
   Writes rows as CSV, led by a `# config_hash=...,mode=...` comment line.

   Columns default to the keys of the first row; a row missing a column gets an empty cell.
   """
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    buffer.write(f"# config_hash={digest},mode={ArithmeticMode(mode).value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    _emit(buffer.getvalue(), out)


def write_json(payload: Dict[str, Any], out: Optional[Path], digest: str, mode: ArithmeticMode) -> None:
    body: Dict[str, Any] = {"config_hash": digest, "mode": ArithmeticMode(mode).value}
    body.update(payload)
    _emit(canonical_json(body, indent=2) + "\n", out)


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Reads a report written by write_csv back into dicts, skipping the comment line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))
