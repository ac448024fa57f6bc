import pytest

from hybrid_flight.bench import run_bench, transport_options
from hybrid_flight.exceptions import TransportUnavailable
from hybrid_flight.transport import SimTransport, UdpTransport


class TestBridgeBench:
    """Test the bridge round-trip benchmark."""

    def test_offered_load(self):
        """Test that 78-byte frames at 100 Hz offer 62.4 kbps."""
        result = run_bench(SimTransport, 500, 100.0)
        assert result.frame_bytes == 78
        assert result.offered_kbps == pytest.approx(62.4)
        assert result.achieved_kbps == pytest.approx(62.4)

    def test_ideal_link_round_trip(self):
        """Test that an ideal simulated link has zero round-trip time."""
        result = run_bench(SimTransport, 100, 50.0)
        assert result.frames_returned == 100
        assert result.loss_pct == 0.0
        assert result.rtt.p99 == 0.0
        assert result.rtt.max == 0.0

    def test_lossy_link(self):
        """Test that a lossy link returns fewer frames and reports the loss."""
        result = run_bench(SimTransport, 1000, 100.0, loss_prob=0.2)
        assert 0 < result.frames_returned < 1000
        assert result.loss_pct == pytest.approx(100.0 * (1000 - result.frames_returned) / 1000)
        assert result.achieved_kbps < result.offered_kbps

    def test_everything_lost(self):
        """Test that a bench with no returned frames has no round-trip statistics."""
        result = run_bench(SimTransport, 1, 100.0, loss_prob=0.999999)
        assert result.rtt is None
        assert result.lines()[-1] == "rtt_ms n/a (no frames returned)"

    def test_invalid_arguments(self):
        """Test that frame count and rate are validated."""
        with pytest.raises(ValueError):
            run_bench(SimTransport, 0, 100.0)
        with pytest.raises(ValueError):
            run_bench(SimTransport, 10, 0.0)

    def test_transport_options(self):
        """Test that UDP endpoints come from the settings."""
        assert transport_options(UdpTransport) == {"host": "127.0.0.1", "ports": (47800, 47801)}
        assert transport_options(SimTransport, seed=3) == {"seed": 3}

    def test_udp_loopback(self):
        """Test a short benchmark over loopback UDP."""
        try:
            result = run_bench(UdpTransport, 20, 200.0, ports=(0, 0))
        except TransportUnavailable as e:
            pytest.skip(f"loopback UDP unavailable: {e}")
        assert result.frames_sent == 20
        assert 0 < result.frames_returned <= 20
        assert result.rtt.min >= 0.0
