import pytest

from hybrid_flight.bus import MessageBus
from hybrid_flight.exceptions import ImproperlyConfigured
from hybrid_flight.transport import AbstractTransport, SimTransport, UdpTransport
from hybrid_flight.utils import import_class, klass_to_string, resolve_transport


class TestUtils:
    """Test the utils module."""

    def test_klass_to_string(self):
        """Test that a class converts to its dotted path."""
        assert klass_to_string(SimTransport) == "hybrid_flight.transport.SimTransport"

    def test_import_class(self):
        """Test that a dotted path imports the class it names."""
        assert import_class("hybrid_flight.bus.MessageBus") is MessageBus

    def test_roundtrip_conversion(self):
        """Test that klass_to_string and import_class are inverses."""
        assert import_class(klass_to_string(UdpTransport)) is UdpTransport

    @pytest.mark.parametrize(
        "path",
        ["nonexistent.module.Class", "hybrid_flight.transport.Missing", "SimTransport"],
    )
    def test_import_class_invalid_path(self, path):
        """Test that an unimportable path is a configuration error."""
        with pytest.raises(ImproperlyConfigured):
            import_class(path)

    def test_import_class_not_a_class(self):
        """Test that a path naming a function is refused."""
        with pytest.raises(ImproperlyConfigured, match="does not name a class"):
            import_class("hybrid_flight.bridge.encode_frame")

    def test_import_class_wrong_base(self):
        """Test that the base class is enforced."""
        with pytest.raises(ImproperlyConfigured, match="AbstractTransport"):
            import_class("hybrid_flight.bus.MessageBus", AbstractTransport)


class TestResolveTransport:
    """Test transport lookup by alias or dotted path."""

    @pytest.mark.parametrize("name, klass", [("sim", SimTransport), ("udp", UdpTransport)])
    def test_aliases(self, name, klass):
        """Test that the short names resolve to the built-in transports."""
        assert resolve_transport(name) is klass

    def test_dotted_path(self):
        """Test that a dotted path resolves too."""
        assert resolve_transport("hybrid_flight.transport.UdpTransport") is UdpTransport

    def test_not_a_transport(self):
        """Test that a class outside the transport hierarchy is refused."""
        with pytest.raises(ImproperlyConfigured):
            resolve_transport("hybrid_flight.bus.MessageBus")

    def test_not_a_string(self):
        """Test that a non-string setting value is refused."""
        with pytest.raises(ImproperlyConfigured):
            resolve_transport(5)
