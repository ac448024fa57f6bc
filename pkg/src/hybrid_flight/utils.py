"""Resolve transport classes named in settings or on the command line."""

import importlib
from typing import Optional, Type

from .exceptions import ImproperlyConfigured

# Short names accepted wherever a transport class is expected
TRANSPORT_ALIASES = {
    "sim": "hybrid_flight.transport.SimTransport",
    "udp": "hybrid_flight.transport.UdpTransport",
}


def klass_to_string(klass: Type) -> str:
    """Returns the dotted import path of ``klass``, e.g. ``hybrid_flight.transport.SimTransport``."""
    return f"{klass.__module__}.{klass.__qualname__}"


def import_class(path: str, base: Optional[type] = None) -> type:
    """
    Import a class from its dotted path.

    Args:
        path: ``package.module.ClassName``.
        base: When given, the imported class must subclass it.

    Returns:
        The class object.

    Raises:
        ImproperlyConfigured: If the path does not name an importable class, or
            the class does not subclass ``base``.
    """
    module_path, _, name = path.rpartition(".")
    try:
        klass = getattr(importlib.import_module(module_path), name)
    except (ImportError, AttributeError, ValueError) as e:
        raise ImproperlyConfigured(f"Unable to import class {path!r}.") from e
    if not isinstance(klass, type):
        raise ImproperlyConfigured(f"{path!r} does not name a class.")
    if base is not None and not issubclass(klass, base):
        raise ImproperlyConfigured(f"`{path}` is not a subclass of `{base.__name__}`.")
    return klass


def resolve_transport(name: str) -> type:
    """Returns the transport class for an alias (``sim``, ``udp``) or a dotted path."""
    from .transport import AbstractTransport

    if not isinstance(name, str):
        raise ImproperlyConfigured(f"Transport class must be given as a string, not {name!r}.")
    return import_class(TRANSPORT_ALIASES.get(name, name), AbstractTransport)
