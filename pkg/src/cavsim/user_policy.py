"""Endpoint window control: signal filtering and AIMD adjustment.

A source collects the congestion bits echoed back with each delivery and
compresses them into one increase/decrease decision every two window
turns, a turn being a window's worth of acknowledgments. Bits seen
during the first turn after an adjustment are discarded: they answer the
previous window setting. Bits of the second turn feed the signal filter.
Increases are additive (one packet), decreases multiplicative (factor
0.875), and the integer window in force is the real-valued window
rounded half-up.
"""
from __future__ import annotations

import enum
import math

__all__ = ["Decision", "signal_filter", "WindowController", "nearest_int"]


class Decision(enum.Enum):
    INCREASE = "increase"
    DECREASE = "decrease"


def nearest_int(x: float) -> int:
    """Round half up: 6.5 -> 7. Truncating here hurts fairness."""
    return math.floor(x + 0.5)


def signal_filter(bits_ones: int, bits_total: int, cutoff: float = 0.5) -> Decision:
    """Majority vote over the collected bits.

    Decrease when at least `cutoff` of the bits are set, increase
    otherwise. The tie at exactly the cutoff counts as decrease: when in
    doubt, back off.
    """
    if bits_total < 1:
        raise ValueError("signal_filter needs at least one bit")
    if bits_ones >= cutoff * bits_total:
        return Decision.DECREASE
    return Decision.INCREASE


class WindowController:
    """Window state machine for one transport connection.

    `w` is the real-valued window the control law operates on; `w_used`
    is the integer window actually in force (nearest_int of w, clamped
    to [1, w_max]). Acknowledged packets are counted into two
    alternating turns; packets in flight across an adjustment belong to
    the turn their ack arrives in, which is all the endpoint can
    observe. The turn length is sampled from w_used when a cycle starts,
    so exactly one Decision is emitted per 2*w_used acknowledgments.
    """

    def __init__(
        self,
        w_max: int,
        initial_window: float = 1.0,
        cutoff: float = 0.5,
        decrease_factor: float = 0.875,
        increase_amount: float = 1.0,
    ):
        if w_max < 1:
            raise ValueError(f"w_max must be at least 1, got {w_max}")
        if not 0.0 < cutoff < 1.0:
            raise ValueError(f"cutoff must be in (0, 1), got {cutoff}")
        if not 0.0 < decrease_factor < 1.0:
            raise ValueError(
                f"decrease_factor must be in (0, 1), got {decrease_factor}"
            )
        if increase_amount <= 0.0:
            raise ValueError(f"increase_amount must be positive, got {increase_amount}")
        if not 1.0 <= initial_window <= w_max:
            raise ValueError(f"initial_window {initial_window} outside [1, {w_max}]")
        self.w_max = int(w_max)
        self.cutoff = cutoff
        self.decrease_factor = decrease_factor
        self.increase_amount = increase_amount
        self.w = float(initial_window)
        self.w_used = nearest_int(self.w)
        self.bits_ones = 0
        self.bits_total = 0
        self.phase = 1
        self.acks_in_turn = 0
        self._turn_len: int | None = None

    def record_ack(self, bit: bool) -> Decision | None:
        """Count one acknowledged packet carrying `bit`.

        Returns a Decision when this ack completes the second turn of
        the cycle, else None. The caller is expected to apply the
        decision (increase/decrease) before feeding further acks.
        """
        if self._turn_len is None:
            self._turn_len = self.w_used
        self.acks_in_turn += 1
        if self.phase == 2:
            self.bits_total += 1
            if bit:
                self.bits_ones += 1
        if self.acks_in_turn < self._turn_len:
            return None
        if self.phase == 1:
            self.phase = 2
            self.acks_in_turn = 0
            return None
        decision = signal_filter(self.bits_ones, self.bits_total, self.cutoff)
        self.phase = 1
        self.acks_in_turn = 0
        self.bits_ones = 0
        self.bits_total = 0
        self._turn_len = None
        return decision

    def increase(self) -> None:
        """Additive increase, at most one above the window last used and
        never beyond the destination-imposed maximum."""
        self.w += self.increase_amount
        if self.w > self.w_used + self.increase_amount:
            self.w = self.w_used + self.increase_amount
        if self.w > self.w_max:
            self.w = float(self.w_max)
        self.w_used = nearest_int(self.w)

    def decrease(self) -> None:
        """Multiplicative decrease, never below a window of one."""
        self.w *= self.decrease_factor
        if self.w < 1.0:
            self.w = 1.0
        self.w_used = nearest_int(self.w)

    def apply(self, decision: Decision) -> None:
        if decision is Decision.INCREASE:
            self.increase()
        else:
            self.decrease()
