"""
Persistent user defaults for the command line and the HTTP service.

Stored as JSON next to the default store, in the data directory named by
``CHRONOSTORE_DATA_DIR`` (``./data`` when unset). Flags given on the command
line win over these settings; these settings win over ``DEFAULTS``.
The environment variable is read on every call, so a process can point at
another data directory without restarting.
"""
import json
import logging
import os
import threading
from typing import Any, Dict, List

logger = logging.getLogger("chronostore")

ENV_DATA_DIR = "CHRONOSTORE_DATA_DIR"
STORE_FILE = "store.chrn"
SETTINGS_FILE = "settings.json"

DEFAULTS: Dict[str, Any] = {
    "batch_size": 64,               # cursor batch size; 0 = one batch
    "layout": "st",
    "mode": "id",
    "fractions": [1, 25, 50, 100],  # percent of history
    "reps": 500,
    "warmup": 5,
    "skip_errors": False,
    "log_level": "INFO",
}

LAYOUTS = ("st", "mt")
MODES = ("ra", "rr", "id")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

_lock = threading.Lock()


def data_dir() -> str:
    return os.environ.get(ENV_DATA_DIR) or "./data"


def default_store_path() -> str:
    return os.path.join(data_dir(), STORE_FILE)


def settings_path() -> str:
    return os.path.join(data_dir(), SETTINGS_FILE)


def _read() -> Dict[str, Any]:
    try:
        with open(settings_path(), encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError):
        data = {}
    merged = dict(DEFAULTS)
    if isinstance(data, dict):
        merged.update({k: v for k, v in data.items() if k in DEFAULTS})
    return merged


def get_settings() -> Dict[str, Any]:
    with _lock:
        return _read()


def _int(key: str, value: Any, minimum: int) -> int:
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{key} must be an integer") from None
    if isinstance(value, bool) or n < minimum:
        raise ValueError(f"{key} must be an integer >= {minimum}")
    return n


def parse_fractions(value: Any) -> List[float]:
    items = value.split(",") if isinstance(value, str) else value
    try:
        out = [float(x) for x in items]
    except (TypeError, ValueError):
        raise ValueError("fractions must be numbers, e.g. 1,25,50,100") from None
    if not out or any(not 0 < f <= 100 for f in out):
        raise ValueError("fractions must lie in (0, 100]")
    return [int(f) if f.is_integer() else f for f in out]


def _bool(key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key} must be true or false")


def _validate(key: str, value: Any) -> Any:
    if key not in DEFAULTS:
        raise ValueError(f"unknown setting {key!r}; choose from {list(DEFAULTS)}")
    if key == "batch_size":
        return _int(key, value, 0)
    if key == "reps":
        return _int(key, value, 1)
    if key == "warmup":
        return _int(key, value, 0)
    if key == "layout":
        if value not in LAYOUTS:
            raise ValueError(f"layout must be one of {list(LAYOUTS)}")
        return value
    if key == "mode":
        if value not in MODES:
            raise ValueError(f"mode must be one of {list(MODES)}")
        return value
    if key == "fractions":
        return parse_fractions(value)
    if key == "skip_errors":
        return _bool(key, value)
    level = str(value).upper()
    if level not in LOG_LEVELS:
        raise ValueError(f"log_level must be one of {list(LOG_LEVELS)}")
    return level


def update_settings(**changes: Any) -> Dict[str, Any]:
    """Validate and persist settings. Raises ValueError on bad input; nothing is written then."""
    with _lock:
        data = _read()
        for key, value in changes.items():
            data[key] = _validate(key, value)
        path = settings_path()
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
        os.replace(tmp, path)
        logger.info(f"Updated settings: {sorted(changes)}")
        return data


def parse_assignments(pairs: List[str]) -> Dict[str, str]:
    """``["reps=10", "mode=rr"]`` -> ``{"reps": "10", "mode": "rr"}``."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = v.strip()
    return out
