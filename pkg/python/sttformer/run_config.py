"""
Run configuration for the command-line tools.

A run config is one flat mapping whose keys belong to ``ModelConfig``,
``TrainSchedule`` or the run itself (paths, data mode, precision). It is
assembled with the precedence::

    defaults < config file < command-line flags

Config files are either a JSON object or ``key=value`` lines::

    # tiny ablation
    n = 3
    channels = 16,16,32,32
    pe_enabled = false

Values are parsed as JSON when possible; a bare comma list becomes a list of
integers. Unknown keys are rejected with the list of valid keys.
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from .core.tensor import PRECISIONS
from .data.skeleton import MODES
from .data.splits import PROTOCOLS
from .errors import ConfigError
from .model.config import ModelConfig
from .training.optim import TrainSchedule

logger = logging.getLogger("sttformer.cli")

CONFIG_SNAPSHOT = "config.json"


@dataclass
class RunSettings:
    """Paths and switches that are neither architecture nor schedule."""
    mode: str = "joint"
    data: Optional[str] = None
    eval_data: Optional[str] = None
    topology: Optional[str] = None
    protocol: Optional[str] = None
    precision: str = "f32"
    out: str = "runs/sttformer"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode '{self.mode}'. Valid modes: {', '.join(MODES)}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"unknown precision '{self.precision}'. Valid values: {', '.join(PRECISIONS)}")
        if self.protocol is not None and self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown split protocol '{self.protocol}'. Valid protocols: {', '.join(PROTOCOLS)}")


def _field_names(cls) -> set:
    return {f.name for f in dataclasses.fields(cls)}


_OWNERS = (("model", ModelConfig), ("schedule", TrainSchedule), ("run", RunSettings))


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    run: RunSettings = field(default_factory=RunSettings)

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.model.to_dict(), "schedule": self.schedule.to_dict(), "run": dataclasses.asdict(self.run)}

    def write_snapshot(self, directory: Union[str, Path]) -> Path:
        path = Path(directory) / CONFIG_SNAPSHOT
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _parse_value(raw: str) -> Any:
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        try:
            return [int(part) for part in raw.split(",") if part.strip()]
        except ValueError:
            pass
    lowered = raw.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    return raw


def parse_config_text(text: str) -> Dict[str, Any]:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        flat: Dict[str, Any] = {}
        for key, value in data.items():
            # sections written by RunConfig.write_snapshot
            if key in ("model", "schedule", "run") and isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        return flat
    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {number}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def build_run_config(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Merge defaults < file values < overrides (``None`` overrides are ignored)."""
    merged: Dict[str, Any] = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if isinstance(merged.get("channels"), int):
        merged["channels"] = [merged["channels"]]
    if "channels" in merged and "num_layers" not in merged:
        merged["num_layers"] = len(merged["channels"])

    valid = set()
    for _, cls in _OWNERS:
        valid |= _field_names(cls)
    unknown = sorted(set(merged) - valid)
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {', '.join(repr(k) for k in unknown)}. "
            f"Valid keys: {', '.join(sorted(valid))}"
        )
    parts = {}
    for section, cls in _OWNERS:
        names = _field_names(cls)
        parts[section] = cls(**{k: v for k, v in merged.items() if k in names})
    config = RunConfig(**parts)
    logger.debug("run config: %s", config.to_dict())
    return config
