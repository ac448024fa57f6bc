"""Framework settings.

``app_settings.<NAME>`` serves the override read from the JSON file named by
``HYBRID_FLIGHT_SETTINGS`` and falls back to the built-in default. Overrides
are validated as soon as the file is read; values are cached on first access
until ``reload()``.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from .exceptions import ImproperlyConfigured
from .utils import resolve_transport

logger = logging.getLogger(__name__)

NAMESPACE = "HYBRID_FLIGHT"

# Names a JSON file holding the overrides
SETTINGS_ENV_VAR = "HYBRID_FLIGHT_SETTINGS"

DEFAULTS: Dict[str, Any] = {
    "TRANSPORT_CLASS": "hybrid_flight.transport.SimTransport",
    "STALENESS_THRESHOLD_MS": 500,
    "ACK_TIMEOUT_S": 2.0,
    "RATE_GROUP_PERIODS_MS": [10, 100],
    "HEALTH_TIMEOUT_PERIODS": 3,
    "AUTOPILOT_RATE_HZ": 10,
    "RESOURCE_RATE_HZ": 1,
    "UDP_HOST": "127.0.0.1",
    "UDP_PORTS": [47800, 47801],
    "HISTOGRAM_MAX_MS": 50,
}

# Dotted class paths, handed out as the class itself
IMPORT_STRINGS = ["TRANSPORT_CLASS"]


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _non_negative_int(value: Any) -> Optional[str]:
    if not _is_int(value) or value < 0:
        return "must be of type int and must not be negative"
    return None


def _positive_number(value: Any) -> Optional[str]:
    if not (_is_int(value) or isinstance(value, float)) or value <= 0:
        return "must be a positive number"
    return None


def _positive_ints(length: Optional[int] = None) -> Callable[[Any], Optional[str]]:
    def check(value: Any) -> Optional[str]:
        if (
            not isinstance(value, list)
            or not value
            or not all(_is_int(v) and v > 0 for v in value)
            or (length is not None and len(value) != length)
        ):
            size = "" if length is None else f" of length {length}"
            return f"must be a list{size} of positive ints"
        return None

    return check


def _transport(value: Any) -> Optional[str]:
    # Raises ImproperlyConfigured itself, naming the offending path
    resolve_transport(value)
    return None


def _host(value: Any) -> Optional[str]:
    return None if isinstance(value, str) and value else "must be a non-empty string"


VALIDATORS: Dict[str, Callable[[Any], Optional[str]]] = {
    "TRANSPORT_CLASS": _transport,
    "STALENESS_THRESHOLD_MS": _non_negative_int,
    "ACK_TIMEOUT_S": _positive_number,
    "RATE_GROUP_PERIODS_MS": _positive_ints(),
    "HEALTH_TIMEOUT_PERIODS": _non_negative_int,
    "AUTOPILOT_RATE_HZ": _non_negative_int,
    "RESOURCE_RATE_HZ": _non_negative_int,
    "UDP_HOST": _host,
    "UDP_PORTS": _positive_ints(2),
    "HISTOGRAM_MAX_MS": _non_negative_int,
}


def load_user_settings() -> dict:
    """Read user overrides from the file named by ``HYBRID_FLIGHT_SETTINGS``.

    The file may hold the overrides at top level or under the ``HYBRID_FLIGHT``
    key. A missing variable means no overrides.
    """
    path = os.environ.get(SETTINGS_ENV_VAR)
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ImproperlyConfigured(
            f"Unable to read settings file {path!r} named by `{SETTINGS_ENV_VAR}`."
        ) from e
    if not isinstance(data, dict):
        raise ImproperlyConfigured(f"Settings file {path!r} must hold a JSON object.")
    return data.get(NAMESPACE, data)


def validate_settings(overrides: dict) -> dict:
    """Check every override against its validator and return them unchanged.

    Raises:
        ImproperlyConfigured: On an unknown name or an invalid value; the
            message names the setting.
    """
    unknown = sorted(set(overrides) - set(DEFAULTS))
    if unknown:
        raise ImproperlyConfigured(f"Unknown `{NAMESPACE}` settings: {', '.join(unknown)}.")
    for name, value in overrides.items():
        problem = VALIDATORS[name](value)
        if problem is not None:
            raise ImproperlyConfigured(f"The setting `{NAMESPACE}.{name}` {problem}.")
    return overrides


class FlightSettings:
    """Settings served as attributes, resolved lazily and cached."""

    def __init__(
        self,
        user_settings: Optional[dict] = None,
        defaults: Optional[dict] = None,
        import_strings: Optional[list] = None,
    ):
        self.defaults = defaults or DEFAULTS
        self.import_strings = import_strings or IMPORT_STRINGS
        self._overrides: Optional[dict] = (
            validate_settings(user_settings) if user_settings else None
        )
        self._resolved: Dict[str, Any] = {}

    @property
    def user_settings(self) -> dict:
        if self._overrides is None:
            self._overrides = validate_settings(load_user_settings())
        return self._overrides

    def __getattr__(self, name: str) -> Any:
        # Only reached for names not set on the instance
        if name.startswith("_") or name not in self.__dict__.get("defaults", ()):
            raise AttributeError(f"Invalid setting: {name!r}")
        if name not in self._resolved:
            value = self.user_settings.get(name, self.defaults[name])
            if name in self.import_strings:
                value = resolve_transport(value)
            self._resolved[name] = value
        return self._resolved[name]

    def reload(self) -> None:
        """Forget cached values and re-read and re-validate the settings file."""
        self._resolved.clear()
        self._overrides = None
        self.user_settings
        logger.debug("Reloaded %s settings", NAMESPACE)


app_settings = FlightSettings(None, DEFAULTS, IMPORT_STRINGS)


def reload_settings(*args, **kwargs) -> None:
    if kwargs.get("setting", NAMESPACE) == NAMESPACE:
        app_settings.reload()
