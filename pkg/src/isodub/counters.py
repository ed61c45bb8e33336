"""Timing counter state machine used during decoding.

The three counters mirror the factored training streams: total frames
remaining in the sentence, pauses remaining, and frames remaining in the
current segment. ``step_counters`` is a pure function; values may go
negative when durations overshoot (noised training data, imperfect
models) and are never clamped here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alignment import PAUSE
from .errors import PauseOverflowError, ValidationError


@dataclass(frozen=True)
class CounterState:
    total_remaining: int
    pauses_remaining: int
    segment_remaining: int
    pending_segments: tuple[int, ...]

    def as_row(self) -> tuple[int, int, int]:
        return (self.total_remaining, self.pauses_remaining, self.segment_remaining)


def init_counters(segment_durations) -> CounterState:
    """Start-of-sentence state from the desired per-segment durations."""
    segments = tuple(int(d) for d in segment_durations)
    if not segments:
        raise ValidationError("segment durations must be a nonempty list")
    if any(d <= 0 for d in segments):
        raise ValidationError(f"segment durations must be positive, got {segments}")
    return CounterState(
        total_remaining=sum(segments),
        pauses_remaining=len(segments) - 1,
        segment_remaining=segments[0],
        pending_segments=segments[1:],
    )


def step_counters(state: CounterState, token: str, duration: int) -> CounterState:
    """Advance the counters for one emitted (token, duration) row.

    The total always decreases by the duration. A [pause] consumes one
    pending segment (raising PauseOverflowError when none remain, so the
    decoder can mask rather than emit); any other token counts down the
    current segment.
    """
    if duration < 0:
        raise ValidationError(f"duration must be >= 0, got {duration}")
    total = state.total_remaining - duration
    if token == PAUSE:
        if state.pauses_remaining < 1 or not state.pending_segments:
            raise PauseOverflowError("no pending segments left for [pause]")
        return CounterState(
            total_remaining=total,
            pauses_remaining=state.pauses_remaining - 1,
            segment_remaining=state.pending_segments[0],
            pending_segments=state.pending_segments[1:],
        )
    return CounterState(
        total_remaining=total,
        pauses_remaining=state.pauses_remaining,
        segment_remaining=state.segment_remaining - duration,
        pending_segments=state.pending_segments,
    )


def replay_counters(segment_durations, rows) -> list[tuple[int, int, int]]:
    """Counter trace for a (token, duration) row sequence, initial state first.

    Replaying a factored example's main/dur streams must reproduce its
    stored counter rows exactly.
    """
    state = init_counters(segment_durations)
    trace = [state.as_row()]
    for token, duration in rows:
        state = step_counters(state, token, duration)
        trace.append(state.as_row())
    return trace
