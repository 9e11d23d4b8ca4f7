"""Loading and validation of JSON configuration files for the CLI.

Validation errors raise :class:`ConfigError` carrying the dotted path of
the offending field, which the CLI reports verbatim with exit code 2.
"""

from __future__ import annotations

import json

from .errors import ConfigError
from .scenario import ScenarioSpec

CONFIG_VERSION = 1


def load_json_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(str(path), "file not found") from err
    except json.JSONDecodeError as err:
        raise ConfigError(str(path), f"invalid JSON at offset {err.pos}: {err.msg}") from err
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "top-level value must be an object")
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError("version", f"expected {CONFIG_VERSION}, got {version!r}")
    return doc


def require(obj: dict, field: str, prefix: str = ""):
    if field not in obj:
        raise ConfigError(f"{prefix}{field}", "missing required field")
    return obj[field]


def parse_complex(value, field: str) -> complex:
    """Accept a plain number or an [re, im] pair."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError):
            pass
    raise ConfigError(field, f"expected a number or [re, im] pair, got {value!r}")


def _positive_int(value, field: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(field, f"expected a positive integer, got {value!r}")
    return value


def parse_scenario(obj, prefix: str = "scenario.") -> ScenarioSpec:
    if not isinstance(obj, dict):
        raise ConfigError(prefix.rstrip("."), "expected an object")
    n_f = _positive_int(require(obj, "n_f", prefix), prefix + "n_f")
    n_m = _positive_int(require(obj, "n_m", prefix), prefix + "n_m")
    n_u = _positive_int(require(obj, "n_u", prefix), prefix + "n_u")
    coupling = obj.get("coupling_strength", 0.0)
    if not isinstance(coupling, (int, float)) or not 0.0 <= float(coupling) < 1.0:
        raise ConfigError(prefix + "coupling_strength", f"expected a real in [0, 1), got {coupling!r}")
    snr_db = obj.get("snr_db")
    if snr_db is not None and not isinstance(snr_db, (int, float)):
        raise ConfigError(prefix + "snr_db", f"expected a number or null, got {snr_db!r}")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(prefix + "seed", f"expected an integer, got {seed!r}")
    alpha = parse_complex(obj.get("alpha", 0.0), prefix + "alpha")
    beta = parse_complex(obj.get("beta", 1.0), prefix + "beta")
    try:
        return ScenarioSpec(
            n_f=n_f,
            n_m=n_m,
            n_u=n_u,
            coupling_strength=float(coupling),
            snr_db=None if snr_db is None else float(snr_db),
            seed=seed,
            alpha=alpha,
            beta=beta,
        )
    except ValueError as err:
        raise ConfigError(prefix.rstrip("."), str(err)) from err


def parse_estimator_overrides(obj, prefix: str = "estimator.") -> dict:
    """Validate the estimator sub-object; returns EstimatorConfig kwargs."""
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(prefix.rstrip("."), "expected an object")
    out: dict = {}
    if "max_iter" in obj:
        out["max_iter"] = _positive_int(obj["max_iter"], prefix + "max_iter")
    for key in ("cost_tol", "rank_tol"):
        if key in obj:
            value = obj[key]
            if not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(prefix + key, f"expected a positive number, got {value!r}")
            out[key] = float(value)
    if "init_seed" in obj:
        value = obj["init_seed"]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(prefix + "init_seed", f"expected an integer, got {value!r}")
        out["init_seed"] = value
    if "restarts" in obj:
        out["restarts"] = _positive_int(obj["restarts"], prefix + "restarts")
    if "line_search" in obj:
        value = obj["line_search"]
        if not isinstance(value, bool):
            raise ConfigError(prefix + "line_search", f"expected a boolean, got {value!r}")
        out["line_search"] = value
    return out
