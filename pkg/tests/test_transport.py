import pytest

from hybrid_flight.exceptions import TransportUnavailable
from hybrid_flight.transport import SimTransport, UdpTransport


class TestSimTransport:
    """Test the virtual-time transport."""

    def test_lossless_delivery(self, sim_pair):
        """Test that datagrams arrive in order at their send time."""
        a, b = sim_pair
        a.send(b"one", 10)
        a.send(b"two", 20)
        deliveries = b.poll(20)
        assert [d.data for d in deliveries] == [b"one", b"two"]
        assert [d.arrival_ns for d in deliveries] == [10, 20]
        assert a.frames_sent == 2
        assert a.bytes_sent == 6

    def test_poll_respects_time(self):
        """Test that nothing arrives before its delivery time."""
        a, b = SimTransport.pair(seed=1, delay_ms=5.0)
        a.send(b"x", 0)
        assert b.poll(4_999_999) == []
        assert b.next_arrival_ns() == 5_000_000
        assert [d.data for d in b.poll(5_000_000)] == [b"x"]

    def test_both_directions(self, sim_pair):
        """Test that the pair is connected both ways."""
        a, b = sim_pair
        b.send(b"back", 0)
        assert [d.data for d in a.poll(0)] == [b"back"]

    def test_loss_is_seeded(self):
        """Test that the same seed loses the same datagrams."""

        def survivors(seed):
            a, b = SimTransport.pair(seed=seed, loss_prob=0.3)
            for i in range(200):
                a.send(bytes([i]), i)
            return [d.data for d in b.poll(10_000)], a.lost

        first, lost = survivors(4)
        assert survivors(4) == (first, lost)
        assert len(first) + lost == 200
        assert 0 < lost < 200

    def test_reordering(self):
        """Test that held-back datagrams are overtaken by later ones."""
        a, b = SimTransport.pair(seed=8, reorder_prob=0.2, reorder_hold_ms=20.0)
        for i in range(100):
            a.send(bytes([i]), i * 1_000_000)
        received = [d.data[0] for d in b.poll(10**9)]
        assert sorted(received) == list(range(100))
        assert received != list(range(100))
        assert a.reordered > 0

    @pytest.mark.parametrize("option", ["loss_prob", "reorder_prob"])
    def test_invalid_probability(self, option):
        """Test that probabilities outside [0, 1) are rejected."""
        with pytest.raises(ValueError):
            SimTransport(**{option: 1.0})

    def test_unconnected_send(self):
        """Test that a lone endpoint cannot send."""
        with pytest.raises(TransportUnavailable):
            SimTransport().send(b"x", 0)

    def test_dump_state(self, sim_pair):
        """Test that the state dump names the transport class."""
        a, _ = sim_pair
        a.send(b"abc", 0)
        state = a.dump_state()
        assert state["transport"] == "hybrid_flight.transport.SimTransport"
        assert state["frames_sent"] == 1
        assert state["lost"] == 0


class TestUdpTransport:
    """Test the loopback UDP transport."""

    def test_loopback_roundtrip(self):
        """Test that a datagram crosses a loopback pair."""
        try:
            a, b = UdpTransport.pair("127.0.0.1", (0, 0))
        except TransportUnavailable as e:
            pytest.skip(f"loopback UDP unavailable: {e}")
        try:
            a.send(b"ping", a.now_ns())
            deliveries = b.poll(b.now_ns(), timeout_s=1.0)
            assert [d.data for d in deliveries] == [b"ping"]
        finally:
            a.close()
            b.close()

    def test_port_in_use(self):
        """Test that binding a busy port raises TransportUnavailable."""
        try:
            first = UdpTransport(("127.0.0.1", 0), ("127.0.0.1", 9))
        except TransportUnavailable as e:
            pytest.skip(f"loopback UDP unavailable: {e}")
        try:
            port = first.address[1]
            with pytest.raises(TransportUnavailable):
                UdpTransport(("127.0.0.1", port), ("127.0.0.1", 9))
        finally:
            first.close()
