import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .errors import ConfigError


def to_jsonable(value: Any) -> Any:
    """
    Convert results into plain JSON values.

    Complex numbers become [re, im], arrays nested lists (complex entries as
    [re, im] pairs), dataclasses dicts and tuples lists.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return value.tolist()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass
class Report:
    command: str
    config: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    seed: int = 42
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failed_checks(self) -> List[Dict[str, Any]]:
        return [c for c in self.checks if not c["passed"]]


def build_report(command: str, config, results: Dict[str, Any], checks: List[Any]) -> Report:
    """Assemble a Report from a RunConfig, raw results and Check records."""
    return Report(
        command=command,
        config=to_jsonable(config.to_dict()),
        results=to_jsonable(results),
        checks=[to_jsonable(c) for c in checks],
        seed=config.seed,
    )


def report_to_json(report: Report, indent: Optional[int] = 2) -> str:
    return json.dumps(dataclasses.asdict(report), indent=indent)


def report_from_json(text: str) -> Report:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"report is not valid JSON: {e}") from e
    known = {f.name for f in dataclasses.fields(Report)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown report fields: {sorted(unknown)}")
    return Report(**data)


def write_report(report: Report, out: Optional[str] = None) -> None:
    """Write the report as JSON to `out`, or to stdout when no path is given."""
    text = report_to_json(report)
    if out is None:
        sys.stdout.write(text + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")
    logging.info("Report written to %s", path)


def append_jsonl(path: str, record: Dict[str, Any]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as f:
        f.write(json.dumps(to_jsonable(record)) + "\n")


def load_jsonl(path: str) -> List[Dict[str, Any]]:
    """Read a JSONL file written by append_jsonl, skipping unparsable lines."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")

    records = []
    with open(path, "r") as f:
        for i, line in enumerate(f):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                logging.warning("Error parsing line %d of %s: %s", i, path, e)
    return records
