"""Datagram transports that carry bridge frames between two endpoints.

Both transports implement the same delivery interface: ``send`` one datagram,
``poll`` for datagrams that have arrived by a given time. ``SimTransport`` runs
in virtual time with seeded loss, reorder and delay injection; ``UdpTransport``
uses loopback UDP sockets and the monotonic wall clock.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import select
import socket
import time
from abc import ABC, abstractmethod
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import TransportUnavailable
from .utils import klass_to_string

logger = logging.getLogger(__name__)

MAX_DATAGRAM = 65_535 + 22


class Delivery(NamedTuple):
    """A datagram and the time it arrived, in nanoseconds."""

    data: bytes
    arrival_ns: int


class AbstractTransport(ABC):
    """Abstract base class for bridge transports."""

    # True when timestamps are virtual and advance only as callers pass them in
    virtual_time: bool = False
    frames_sent: int = 0
    bytes_sent: int = 0

    @classmethod
    @abstractmethod
    def pair(cls, **options) -> Tuple["AbstractTransport", "AbstractTransport"]:
        """Create two endpoints connected to each other."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abstractmethod
    def send(self, data: bytes, now_ns: int) -> None:
        """Send one datagram to the peer endpoint."""
        raise NotImplementedError("Subclasses must implement this method.")

    @abstractmethod
    def poll(self, now_ns: int, timeout_s: float = 0.0) -> List[Delivery]:
        """Returns the datagrams that have arrived by ``now_ns``, oldest first."""
        raise NotImplementedError("Subclasses must implement this method.")

    def now_ns(self) -> int:
        """Returns the transport's notion of the current time."""
        return time.monotonic_ns()

    def close(self) -> None:
        """Release the endpoint."""

    def dump_state(self) -> dict:
        return {
            "transport": klass_to_string(self.__class__),
            "frames_sent": self.frames_sent,
            "bytes_sent": self.bytes_sent,
        }


class SimTransport(AbstractTransport):
    """In-process transport running in virtual time.

    Each endpoint applies its own seeded channel effects to what it sends:
    Bernoulli loss, a fixed delay, and Bernoulli reordering (a reordered
    datagram is held back so that later datagrams overtake it).
    """

    virtual_time = True

    def __init__(
        self,
        seed: int = 0,
        loss_prob: float = 0.0,
        reorder_prob: float = 0.0,
        delay_ms: float = 0.0,
        reorder_hold_ms: float = 20.0,
    ):
        for name, prob in (("loss_prob", loss_prob), ("reorder_prob", reorder_prob)):
            if not 0.0 <= prob < 1.0:
                raise ValueError(f"{name} must be within [0, 1), got {prob}")
        if delay_ms < 0 or reorder_hold_ms < 0:
            raise ValueError("Delays must not be negative.")
        self._rng = np.random.default_rng(seed)
        self._loss_prob = loss_prob
        self._reorder_prob = reorder_prob
        self._delay_ns = int(round(delay_ms * 1e6))
        self._reorder_hold_ns = int(round(reorder_hold_ms * 1e6))
        self._inbox: List[Tuple[int, int, bytes]] = []
        self._arrivals = itertools.count()
        self._peer: Optional[SimTransport] = None
        self.frames_sent = 0
        self.bytes_sent = 0
        self.lost = 0
        self.reordered = 0

    @classmethod
    def pair(
        cls,
        seed: int = 0,
        loss_prob: float = 0.0,
        reorder_prob: float = 0.0,
        delay_ms: float = 0.0,
        reorder_hold_ms: float = 20.0,
    ) -> Tuple["SimTransport", "SimTransport"]:
        """Create two connected endpoints with independent seeded channels."""
        a = cls(seed, loss_prob, reorder_prob, delay_ms, reorder_hold_ms)
        b = cls(seed + 1, loss_prob, reorder_prob, delay_ms, reorder_hold_ms)
        a.connect(b)
        b.connect(a)
        return a, b

    def connect(self, peer: "SimTransport") -> None:
        self._peer = peer

    def send(self, data: bytes, now_ns: int) -> None:
        if self._peer is None:
            raise TransportUnavailable("Simulated endpoint is not connected.")
        self.frames_sent += 1
        self.bytes_sent += len(data)

        if self._loss_prob and self._rng.random() < self._loss_prob:
            self.lost += 1
            logger.debug("Dropped datagram of %d bytes at %d ns", len(data), now_ns)
            return

        deliver_ns = now_ns + self._delay_ns
        if self._reorder_prob and self._rng.random() < self._reorder_prob:
            deliver_ns += self._reorder_hold_ns
            self.reordered += 1
        self._peer._enqueue(deliver_ns, bytes(data))

    def _enqueue(self, deliver_ns: int, data: bytes) -> None:
        heapq.heappush(self._inbox, (deliver_ns, next(self._arrivals), data))

    def poll(self, now_ns: int, timeout_s: float = 0.0) -> List[Delivery]:
        deliveries = []
        while self._inbox and self._inbox[0][0] <= now_ns:
            deliver_ns, _, data = heapq.heappop(self._inbox)
            deliveries.append(Delivery(data=data, arrival_ns=deliver_ns))
        return deliveries

    def next_arrival_ns(self) -> Optional[int]:
        """Returns the earliest pending arrival time, if any."""
        return self._inbox[0][0] if self._inbox else None

    def close(self) -> None:
        self._inbox.clear()

    def dump_state(self) -> dict:
        state = super().dump_state()
        state.update(lost=self.lost, reordered=self.reordered)
        return state


class UdpTransport(AbstractTransport):
    """Loopback UDP endpoint, one frame per datagram."""

    def __init__(self, local: Tuple[str, int], remote: Tuple[str, int]):
        self._remote = remote
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind(local)
            self._sock.setblocking(False)
        except OSError as e:
            raise TransportUnavailable(f"Unable to bind UDP endpoint {local}: {e}") from e
        self.frames_sent = 0
        self.bytes_sent = 0

    @classmethod
    def pair(
        cls, host: str = "127.0.0.1", ports: Sequence[int] = (47800, 47801)
    ) -> Tuple["UdpTransport", "UdpTransport"]:
        """Create two endpoints on ``host`` sending to each other.

        Port 0 binds an ephemeral port.
        """
        port_a, port_b = ports
        a = cls((host, port_a), (host, port_b))
        try:
            b = cls((host, port_b), a.address)
        except TransportUnavailable:
            a.close()
            raise
        a._remote = b.address
        return a, b

    @property
    def address(self) -> Tuple[str, int]:
        return self._sock.getsockname()

    def send(self, data: bytes, now_ns: int) -> None:
        try:
            self._sock.sendto(data, self._remote)
        except OSError as e:
            raise TransportUnavailable(f"UDP send to {self._remote} failed: {e}") from e
        self.frames_sent += 1
        self.bytes_sent += len(data)

    def poll(self, now_ns: int, timeout_s: float = 0.0) -> List[Delivery]:
        if timeout_s > 0:
            readable, _, _ = select.select([self._sock], [], [], timeout_s)
            if not readable:
                return []
        deliveries = []
        while True:
            try:
                data, _ = self._sock.recvfrom(MAX_DATAGRAM)
            except (BlockingIOError, InterruptedError):
                break
            except OSError as e:
                raise TransportUnavailable(f"UDP receive failed: {e}") from e
            deliveries.append(Delivery(data=data, arrival_ns=time.monotonic_ns()))
        return deliveries

    def close(self) -> None:
        self._sock.close()
