"""Slotted frame geometry: reserved query services vs. random-access slots.

A frame of ``frame_slots`` slots of ``tau_s`` seconds carries, in order,
``q`` scheduled wake-up services of ``k_w + k_t`` slots each, a ``k_c``-slot
control beacon, and ``k_a`` contention slots. ``q`` is the single design
knob; everything else follows from it.
"""

from __future__ import annotations

from dataclasses import dataclass


class InfeasibleSplitError(ValueError):
    """Requested split leaves no random-access slot (k_a >= 1 violated)."""


@dataclass(frozen=True)
class FrameConfig:
    """Slot layout of one frame. Defaults match the reference setup.

    tau_s: slot duration [s]; frame_slots: slots per frame; k_w: slots for
    one wake-up signal plus radio activation; k_t: slots for the woken
    device's data transmission; k_c: slots for the push control beacon.
    """

    tau_s: float = 0.25e-3
    frame_slots: int = 101
    k_w: int = 4
    k_t: int = 1
    k_c: int = 1

    def __post_init__(self):
        if not (isinstance(self.tau_s, (int, float)) and 0.0 < self.tau_s < float("inf")):
            raise ValueError(f"tau_s must be a finite positive number, got {self.tau_s!r}")
        for name in ("frame_slots", "k_w", "k_t", "k_c"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        needed = self.k_c + self.k_w + self.k_t + 1
        if self.frame_slots < needed:
            raise ValueError(
                f"frame_slots={self.frame_slots} too small: need at least "
                f"k_c + k_w + k_t + 1 = {needed} slots for one query service "
                f"and one access slot"
            )

    @property
    def t_frame_s(self) -> float:
        """Frame duration [s]: tau_s * frame_slots."""
        return self.tau_s * self.frame_slots

    @property
    def slots_per_service(self) -> int:
        """Slots one scheduled query service occupies (k_w + k_t)."""
        return self.k_w + self.k_t


@dataclass(frozen=True)
class FrameSplit:
    """One concrete split: q query services, k_a access slots, durations."""

    q: int
    k_a: int
    t_pull_s: float
    t_push_s: float


def q_max(config: FrameConfig) -> int:
    """Largest q that still leaves one access slot: floor((F - k_c - 1)/(k_w + k_t))."""
    return (config.frame_slots - config.k_c - 1) // config.slots_per_service


def split_for_q(config: FrameConfig, q: int) -> FrameSplit:
    """Split the frame for ``q`` query services.

    Slot bookkeeping is integer-exact; durations are derived by a single
    multiplication with tau_s. q = 0 (all-push frame) is allowed.
    """
    if not (isinstance(q, int) and q >= 0):
        raise ValueError(f"q must be a nonnegative integer, got {q!r}")
    k_a = config.frame_slots - config.k_c - q * config.slots_per_service
    if k_a < 1:
        raise InfeasibleSplitError(
            f"q={q} leaves k_a={k_a} access slots, violating k_a >= 1 "
            f"(q_max={q_max(config)} for this frame)"
        )
    pull_slots = q * config.slots_per_service
    return FrameSplit(
        q=q,
        k_a=k_a,
        t_pull_s=pull_slots * config.tau_s,
        t_push_s=(config.k_c + k_a) * config.tau_s,
    )
