import numpy as np
import pytest

from hybrid_flight.bridge import (
    MsgType,
    decode_command,
    decode_frame,
    decode_health,
    encode_ack,
    encode_frame,
    encode_pose,
)
from hybrid_flight.exceptions import (
    DuplicateCommandId,
    NonMonotonicClock,
    UnknownChannel,
    UnknownOpcode,
)
from hybrid_flight.flight_core import (
    TELEMETRY_CHANNELS,
    CommandDispatcher,
    FlightCore,
    HealthState,
    RateGroup,
    RateGroupScheduler,
    TelemetryDb,
    health_check,
    record_telemetry,
    scheduler_tick,
)
from hybrid_flight.models import (
    AckStatus,
    Command,
    CommandAck,
    HealthStatus,
    Opcode,
    PoseSample,
)

MS = 1_000_000


def recording_scheduler(periods=(10, 100), start_ns=0):
    calls = []
    groups = [RateGroup(p, (f"g{p}a", f"g{p}b")) for p in periods]
    components = {
        name: (lambda name: lambda now_ns: calls.append((now_ns, name)))(name)
        for g in groups
        for name in g.members
    }
    return RateGroupScheduler(groups, components, start_ns), calls


def script(n, spacing=0.5):
    return [Command(i + 1, Opcode.ARM, issued_at=i * spacing) for i in range(n)]


class TestRateGroupScheduler:
    """Test the virtual-clock rate group scheduler."""

    def test_one_second_counts(self):
        """Test that 1 s runs the 10 ms group 100 times and the 100 ms group 10 times."""
        scheduler, _ = recording_scheduler()
        scheduler.tick(1000 * MS)
        assert scheduler.execution_counts() == {10: 100, 100: 10}

    def test_tick_spacing_does_not_matter(self):
        """Test that many small ticks and one large tick run the same instants."""
        fine, fine_calls = recording_scheduler()
        for k in range(1, 301):
            fine.tick(k * MS)
        coarse, coarse_calls = recording_scheduler()
        coarse.tick(300 * MS)
        assert fine_calls == coarse_calls

    def test_rate_fidelity(self):
        """Test that a group of period P runs floor(T / P) times at random tick times."""
        rng = np.random.default_rng(9)
        scheduler, _ = recording_scheduler(periods=(7, 30, 110))
        now = 0
        for _ in range(500):
            now += int(rng.integers(1, 20 * MS))
            scheduler.tick(now)
        counts = scheduler.execution_counts()
        for period in (7, 30, 110):
            assert counts[period] == now // (period * MS)

    def test_order_within_instant(self):
        """Test that at a shared instant the faster group runs first, members in order."""
        scheduler, calls = recording_scheduler()
        scheduler.tick(100 * MS)
        at_100 = [name for t, name in calls if t == 100 * MS]
        assert at_100 == ["g10a", "g10b", "g100a", "g100b"]

    def test_declared_order_breaks_period_ties(self):
        """Test that groups of equal period keep their declaration order."""
        calls = []
        groups = [RateGroup(10, ("second",)), RateGroup(10, ("first",))]
        scheduler = RateGroupScheduler(
            groups,
            {"second": lambda t: calls.append("second"), "first": lambda t: calls.append("first")},
        )
        scheduler.tick(10 * MS)
        assert calls == ["second", "first"]

    def test_non_monotonic_clock(self):
        """Test that a tick at the previous time is refused."""
        scheduler, _ = recording_scheduler()
        scheduler.tick(10 * MS)
        with pytest.raises(NonMonotonicClock):
            scheduler.tick(10 * MS)
        with pytest.raises(NonMonotonicClock):
            scheduler.tick(5 * MS)

    def test_tick_at_start_time(self):
        """Test that the first tick must advance past the start time."""
        scheduler, _ = recording_scheduler(start_ns=50 * MS)
        with pytest.raises(NonMonotonicClock):
            scheduler.tick(50 * MS)

    def test_unknown_member(self):
        """Test that every group member must name a component."""
        with pytest.raises(ValueError):
            RateGroupScheduler([RateGroup(10, ("missing",))], {})

    def test_invalid_period(self):
        """Test that group periods must be positive."""
        with pytest.raises(ValueError):
            RateGroup(0, ("a",))


class TestTelemetryDb:
    """Test the latest-value telemetry store."""

    def test_write_then_read(self):
        """Test that a written value is read back."""
        db = record_telemetry(TelemetryDb(["alt"]), "alt", 1.5, 0.1)
        assert db.read("alt").value == 1.5
        assert db.read("alt").updated_at == 0.1

    def test_latest_value_wins(self):
        """Test that a second write replaces the first."""
        db = TelemetryDb(["alt"])
        db.record("alt", 1.5, 0.1)
        db.record("alt", 2.5, 0.2)
        assert db.read("alt").value == 2.5

    def test_unknown_channel(self):
        """Test that unregistered channels are refused."""
        db = TelemetryDb(["alt"])
        with pytest.raises(UnknownChannel):
            db.record("speed", 1.0, 0.0)
        with pytest.raises(UnknownChannel):
            db.read("speed")

    def test_unwritten_channel(self):
        """Test that a never-written channel reads as None."""
        assert TelemetryDb(["alt"]).read("alt") is None

    def test_duplicate_channels(self):
        """Test that channel ids must be unique."""
        with pytest.raises(ValueError):
            TelemetryDb(["alt", "alt"])


class TestCommandDispatcher:
    """Test command dispatch and acknowledgment bookkeeping."""

    def test_all_acked(self):
        """Test that fifteen successful acks give a 100% success rate."""
        sent = []
        dispatcher = CommandDispatcher(sent.append, ack_timeout_s=2.0)
        for command in script(15):
            dispatcher.dispatch(command)
            dispatcher.settle(CommandAck(command.id, AckStatus.SUCCESS, command.issued_at))
        state = dispatcher.state
        assert len(sent) == 15
        assert (state.sent, state.succeeded, state.success_rate_pct) == (15, 15, 100.0)
        assert not state.pending

    def test_deadline(self):
        """Test that the deadline is the issue time plus the ack timeout."""
        dispatcher = CommandDispatcher(lambda c: None, ack_timeout_s=2.0)
        assert dispatcher.dispatch(Command(1, Opcode.ARM, issued_at=3.0)) == 5.0

    def test_default_timeout_from_settings(self):
        """Test that the ack timeout defaults to the framework setting."""
        assert CommandDispatcher(lambda c: None).ack_timeout_s == 2.0

    def test_timeout(self):
        """Test that a missing ack times out once the deadline has passed."""
        dispatcher = CommandDispatcher(lambda c: None, ack_timeout_s=2.0)
        dispatcher.dispatch(Command(1, Opcode.ARM, issued_at=0.0))
        assert dispatcher.expire(2.0) == []
        assert dispatcher.expire(2.01) == [1]
        assert dispatcher.state.timed_out == 1
        assert dispatcher.state.success_rate_pct == 0.0

    def test_late_ack_is_ignored(self):
        """Test that an ack after the timeout does not change the counts."""
        dispatcher = CommandDispatcher(lambda c: None, ack_timeout_s=1.0)
        dispatcher.dispatch(Command(1, Opcode.ARM))
        dispatcher.expire(5.0)
        dispatcher.settle(CommandAck(1, AckStatus.SUCCESS, 5.0))
        assert dispatcher.state.succeeded == 0
        assert dispatcher.state.timed_out == 1

    def test_duplicate_id(self):
        """Test that an id can only be dispatched once."""
        dispatcher = CommandDispatcher(lambda c: None)
        dispatcher.dispatch(Command(1, Opcode.ARM))
        with pytest.raises(DuplicateCommandId):
            dispatcher.dispatch(Command(1, Opcode.DISARM))

    def test_unknown_opcode(self):
        """Test that an undefined opcode is refused and not sent."""
        sent = []
        dispatcher = CommandDispatcher(sent.append)
        with pytest.raises(UnknownOpcode):
            dispatcher.dispatch(Command(1, 42))
        assert sent == []
        assert dispatcher.state.sent == 0

    def test_no_commands(self):
        """Test that the success rate is undefined before any command."""
        assert CommandDispatcher(lambda c: None).state.success_rate_pct is None

    def test_conservation_under_random_acks(self):
        """Test that sent = succeeded + rejected + timed_out + pending after every event."""
        rng = np.random.default_rng(21)
        dispatcher = CommandDispatcher(lambda c: None, ack_timeout_s=2.0)
        state = dispatcher.state
        now = 0.0
        outstanding = []
        for command_id in range(1, 301):
            now += float(rng.uniform(0.0, 0.5))
            dispatcher.dispatch(Command(command_id, Opcode.ARM, issued_at=now))
            outstanding.append(command_id)
            rng.shuffle(outstanding)
            while outstanding and rng.random() < 0.6:
                cid = outstanding.pop()
                if rng.random() < 0.1:
                    continue  # ack lost
                status = AckStatus(int(rng.integers(0, 2)))
                dispatcher.settle(CommandAck(cid, status, now))
                assert state.sent == state.succeeded + state.rejected + state.timed_out + len(state.pending)
            dispatcher.expire(now)
            assert state.sent == state.succeeded + state.rejected + state.timed_out + len(state.pending)


class TestHealthState:
    """Test the health thresholds."""

    @pytest.fixture
    def health(self):
        """Health of one component with a 0.3 s timeout, pinged at t = 0."""
        return HealthState.for_components(["autopilot"], timeout_s=0.3)

    def test_regular_pings(self, health):
        """Test that a component pinged every period stays healthy."""
        for k in range(1, 50):
            health.ping("autopilot", k * 0.1)
            assert health.check(k * 0.1 + 0.05) == []
        assert health.overall is HealthStatus.HEALTHY

    def test_degraded(self, health):
        """Test that a ping 1.5 timeouts old is degraded."""
        health_check(health, 0.45)
        assert health.status["autopilot"] is HealthStatus.DEGRADED

    def test_fault(self, health):
        """Test that a ping 2.5 timeouts old is a fault."""
        events = health.check(0.75)
        assert health.status["autopilot"] is HealthStatus.FAULT
        assert [(e.kind, e.source, e.detail) for e in events] == [
            ("health", "autopilot", "HEALTHY->FAULT")
        ]

    def test_recovery_emits_event(self, health):
        """Test that a recovered component transitions back to healthy."""
        health.check(1.0)
        health.ping("autopilot", 1.1)
        events = health.check(1.2)
        assert events[0].detail == "FAULT->HEALTHY"
        assert health.overall is HealthStatus.HEALTHY

    def test_threshold_boundaries(self, health):
        """Test that the boundaries are inclusive on the healthier side."""
        assert health.classify(0.3) is HealthStatus.HEALTHY
        assert health.classify(0.6) is HealthStatus.DEGRADED
        assert health.classify(0.6000001) is HealthStatus.FAULT


class TestFlightCore:
    """Test the assembled flight core over a simulated link."""

    def test_commands_are_sent_at_their_time(self, sim_pair):
        """Test that scripted commands leave at the first tick at or after their time."""
        link, peer = sim_pair
        core = FlightCore(link, script(3, spacing=0.015))
        core.tick(40 * MS)
        frames = [decode_frame(d.data) for d in peer.poll(40 * MS)]
        commands = [decode_command(f) for f in frames if f.msg_type == MsgType.COMMAND]
        assert [c.id for c in commands] == [1, 2, 3]
        assert [f.send_time_ns for f in frames if f.msg_type == MsgType.COMMAND] == [
            10 * MS,
            20 * MS,
            30 * MS,
        ]

    def test_acks_settle_dispatcher(self, sim_pair):
        """Test that acks coming back over the bridge settle commands."""
        link, peer = sim_pair
        core = FlightCore(link, script(2, spacing=0.0))
        core.tick(10 * MS)
        for delivery in peer.poll(10 * MS):
            frame = decode_frame(delivery.data)
            if frame.msg_type == MsgType.COMMAND:
                ack = CommandAck(decode_command(frame).id, AckStatus.SUCCESS, 0.015)
                peer.send(encode_frame(MsgType.COMMAND_ACK, frame.seq, 15 * MS, encode_ack(ack)), 15 * MS)
        core.tick(20 * MS)
        assert core.dispatcher.state.succeeded == 2
        assert core.dispatcher.state.success_rate_pct == 100.0

    def test_unacked_command_times_out(self, sim_pair):
        """Test that a command with no ack is timed out by the dispatcher group."""
        link, _ = sim_pair
        core = FlightCore(link, script(1), ack_timeout_s=0.5)
        core.tick(700 * MS)
        assert core.dispatcher.state.timed_out == 1
        assert any(e.kind == "command" and e.detail == "TIMEOUT" for e in core.events)

    def test_pose_telemetry_is_recorded(self, sim_pair):
        """Test that pose frames land in the telemetry database."""
        link, peer = sim_pair
        pose = PoseSample(0.005, (1.0, 2.0, 3.0), (0.0, 0.0, 0.0, 1.0))
        peer.send(encode_frame(MsgType.POSE_TELEMETRY, 0, 5 * MS, encode_pose(pose)), 5 * MS)
        core = FlightCore(link)
        core.tick(10 * MS)
        assert core.telemetry.read("pose.z").value == 3.0
        assert core.freshness.freshness_pct == 100.0

    def test_corrupt_frame_is_counted(self, sim_pair):
        """Test that an undecodable frame is dropped and counted."""
        link, peer = sim_pair
        peer.send(b"garbage", 0)
        core = FlightCore(link)
        core.tick(10 * MS)
        assert core.rx_errors == 1

    def test_silent_components_fault(self, sim_pair):
        """Test that components that never report go to fault and health is sent."""
        link, peer = sim_pair
        core = FlightCore(link)
        core.tick(1000 * MS)
        assert core.health.overall is HealthStatus.FAULT
        health_frames = [
            decode_frame(d.data) for d in peer.poll(1000 * MS)
        ]
        statuses = [decode_health(f) for f in health_frames if f.msg_type == MsgType.HEALTH]
        assert len(statuses) == 10
        assert statuses[-1] is HealthStatus.FAULT

    def test_static_capacity(self, sim_pair):
        """Test that the telemetry channel count never changes over a long run."""
        link, _ = sim_pair
        core = FlightCore(link)
        capacity = core.telemetry.capacity
        for k in range(1, 601):
            scheduler_tick(core, float(k))
        assert core.telemetry.capacity == capacity == len(TELEMETRY_CHANNELS)

    def test_single_rate_group(self, sim_pair):
        """Test that one configured period runs every component in it."""
        link, _ = sim_pair
        core = FlightCore(link, rate_group_periods_ms=[20])
        assert len(core.scheduler.groups) == 1
        assert len(core.scheduler.groups[0].members) == 5

    def test_three_rate_groups(self, sim_pair):
        """Test that a middle period hosts the link monitor."""
        link, _ = sim_pair
        core = FlightCore(link, rate_group_periods_ms=[100, 10, 50])
        periods = [g.period_ms for g in core.scheduler.groups]
        assert periods == [10, 50, 100]
        assert core.scheduler.groups[1].members == ("link_monitor",)
