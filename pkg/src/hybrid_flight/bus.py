"""Topic-based publish/subscribe for the perception side.

Delivery is deferred: ``publish`` only queues, ``route`` hands queued messages
to subscriber callbacks. Each subscription owns a queue of at most ``depth``
messages, shaped by its QoS policy:

* best-effort: a full queue drops its oldest message to make room.
* reliable: a full queue never drops. The publisher is blocked instead; the
  message is held for that subscriber and enters its queue once a ``route``
  call has made space, so it is delivered on a later call.

Each ``route`` call delivers at most ``depth`` messages per subscription.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Deque, Dict, List

logger = logging.getLogger(__name__)

Callback = Callable[[Any], None]

TOPIC_VISION_POSE = "vision/pose"
TOPIC_FC_STATE = "fc/state"
TOPIC_FC_ACK = "fc/ack"


class Reliability(str, Enum):
    BEST_EFFORT = "best_effort"
    RELIABLE = "reliable"


@dataclass(frozen=True)
class QosPolicy:
    reliability: Reliability = Reliability.RELIABLE
    depth: int = 10

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError(f"QoS depth must be at least 1, got {self.depth}")


class Subscription:
    """A subscriber callback, its queue and, when reliable, the messages held back from it."""

    def __init__(self, topic: str, callback: Callback, qos: QosPolicy):
        self.topic = topic
        self.callback = callback
        self.qos = qos
        self._queue: Deque[Any] = deque()
        self._held: Deque[Any] = deque()
        self.delivered = 0
        self.dropped = 0
        self.blocked = 0

    @property
    def reliable(self) -> bool:
        return self.qos.reliability is Reliability.RELIABLE

    @property
    def pending(self) -> int:
        return len(self._queue)

    @property
    def held(self) -> int:
        return len(self._held)

    @property
    def full(self) -> bool:
        return self.pending >= self.qos.depth

    def push(self, message: Any) -> bool:
        """Queue ``message``; returns False when a reliable queue had to hold it back."""
        if self.reliable:
            if self._held or self.full:
                self._held.append(message)
                self.blocked += 1
                return False
        elif self.full:
            self._queue.popleft()
            self.dropped += 1
        self._queue.append(message)
        return True

    def take(self) -> List[Any]:
        """Remove up to ``depth`` queued messages, oldest first."""
        return [self._queue.popleft() for _ in range(min(self.qos.depth, self.pending))]

    def admit_held(self) -> None:
        while self._held and not self.full:
            self._queue.append(self._held.popleft())


class MessageBus:
    """Deterministic in-process pub/sub."""

    def __init__(self):
        self._subscriptions: Dict[str, List[Subscription]] = {}
        self.published = 0
        self.discarded = 0

    def subscribe(
        self, topic: str, callback: Callback, qos: QosPolicy = QosPolicy()
    ) -> Subscription:
        subscription = Subscription(topic, callback, qos)
        self._subscriptions.setdefault(topic, []).append(subscription)
        return subscription

    def subscriptions(self, topic: str) -> List[Subscription]:
        return list(self._subscriptions.get(topic, ()))

    def publish(self, topic: str, message: Any) -> bool:
        """Offer ``message`` to every subscription of ``topic``.

        Returns:
            False when a reliable subscriber's queue was full, meaning the
            publisher is blocked on it. The message is held, not lost, and
            reaches that subscriber after later ``route`` calls.
        """
        self.published += 1
        subscriptions = self._subscriptions.get(topic)
        if not subscriptions:
            self.discarded += 1
            return True
        accepted = True
        for subscription in subscriptions:
            if not subscription.push(message):
                accepted = False
        if not accepted:
            logger.debug("Publisher blocked on topic %s", topic)
        return accepted

    def route(self) -> int:
        """Deliver up to ``depth`` queued messages per subscription, in publish order.

        Messages published from inside a callback wait for the next call. Held
        reliable messages move into the space freed by this call and are
        delivered on the next one.

        Returns:
            The number of callback invocations.
        """
        subscriptions = [s for group in self._subscriptions.values() for s in group]
        batches = [(s, s.take()) for s in subscriptions if s.pending]
        delivered = 0
        for subscription, messages in batches:
            for message in messages:
                subscription.callback(message)
                subscription.delivered += 1
                delivered += 1
        for subscription in subscriptions:
            subscription.admit_held()
        return delivered

    def backlog(self) -> int:
        """Messages queued or held across all subscriptions."""
        return sum(s.pending + s.held for group in self._subscriptions.values() for s in group)

    def dump_state(self) -> dict:
        return {
            topic: [
                {
                    "reliability": s.qos.reliability.value,
                    "depth": s.qos.depth,
                    "delivered": s.delivered,
                    "dropped": s.dropped,
                    "blocked": s.blocked,
                    "pending": s.pending,
                    "held": s.held,
                }
                for s in subscriptions
            ]
            for topic, subscriptions in sorted(self._subscriptions.items())
        }
