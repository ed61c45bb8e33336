"""Factored and interleaved target representations.

A factored example carries five aligned streams: main tokens, per-token
durations, and three countdown streams (total frames remaining, pauses
remaining, segment frames remaining). Row 0 is a NULL pad column holding
the initial counter values, so the decoder sees them before emitting the
first token. The interleaved representation is the single-stream baseline
format alternating phonemes and duration tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alignment import EOW, PAUSE, AlignedUtterance, SegmentSpec, compute_segments
from .errors import ConsistencyError, ValidationError
from .vocab import NULL


@dataclass
class FactoredExample:
    """Equal-length target streams beginning with the NULL pad column."""

    main: list[str]
    dur: list[int]
    total: list[int]
    pause: list[int]
    segment: list[int]
    source_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.main)

    def streams(self) -> dict[str, list]:
        return {
            "main": self.main,
            "dur": self.dur,
            "total": self.total,
            "pause": self.pause,
            "segment": self.segment,
        }

    def rows(self) -> list[tuple[str, int, int, int, int]]:
        return list(zip(self.main, self.dur, self.total, self.pause, self.segment))

    def check_invariants(self):
        n = len(self.main)
        for name, stream in self.streams().items():
            if len(stream) != n:
                raise ConsistencyError(f"stream {name!r} length {len(stream)} != {n}")
        if n == 0 or self.main[0] != NULL or self.dur[0] != 0:
            raise ConsistencyError("row 0 must be the NULL column with duration 0")
        for t in range(1, n):
            if self.total[t] != self.total[t - 1] - self.dur[t]:
                raise ConsistencyError(f"total counter broken at row {t}")
            if self.main[t] == PAUSE:
                if self.pause[t] != self.pause[t - 1] - 1:
                    raise ConsistencyError(f"pause counter broken at row {t}")
            else:
                if self.pause[t] != self.pause[t - 1]:
                    raise ConsistencyError(f"pause counter broken at row {t}")
                if self.segment[t] != self.segment[t - 1] - self.dur[t]:
                    raise ConsistencyError(f"segment counter broken at row {t}")


@dataclass
class InterleavedExample:
    """Single-stream baseline: phoneme, duration, <eow> and [pause] tokens."""

    tokens: list[str]
    source_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class InterleavedCheck:
    """Validation outcome; index and reason name the first violation."""

    ok: bool
    index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_duration_token(token: str) -> bool:
    return token.isdigit()


def _target_tokens(utt: AlignedUtterance) -> list[tuple[str, int]]:
    """Expand units into the output token order: phoneme/pause rows plus
    <eow> rows (duration 0) after word-final units."""
    boundaries = set(utt.word_boundaries)
    out: list[tuple[str, int]] = []
    for i, (sym, frames) in enumerate(utt.target_units):
        if sym == PAUSE:
            out.append((PAUSE, 0))
        else:
            out.append((sym, frames))
        if i in boundaries and sym != PAUSE:
            out.append((EOW, 0))
    return out


def build_factored_example(utt: AlignedUtterance, spec: SegmentSpec) -> FactoredExample:
    """Construct the five aligned streams for one utterance.

    The counters count down from the spec's (possibly noised) segment
    durations while token durations stay clean, so with a noised spec the
    final counters may be nonzero. If the spec matches the utterance's
    clean segments, counter non-negativity and exact final zeros are
    enforced.
    """
    if not spec.segment_durations:
        raise ValidationError("segment spec is empty")
    clean = spec == compute_segments(utt)
    tokens = _target_tokens(utt)
    n_pauses = sum(1 for sym, _ in tokens if sym == PAUSE)
    if n_pauses != spec.n_pauses():
        raise ValidationError(
            f"utterance has {n_pauses} pauses but spec implies {spec.n_pauses()}"
        )

    main = [NULL]
    dur = [0]
    total = [spec.total_frames()]
    pause = [spec.n_pauses()]
    segment = [spec.segment_durations[0]]
    pending = list(spec.segment_durations[1:])
    for sym, frames in tokens:
        main.append(sym)
        dur.append(frames)
        total.append(total[-1] - frames)
        if sym == PAUSE:
            pause.append(pause[-1] - 1)
            segment.append(pending.pop(0))
        else:
            pause.append(pause[-1])
            segment.append(segment[-1] - frames)
        if clean and (total[-1] < 0 or segment[-1] < 0):
            raise ConsistencyError(
                f"counter underflow at row {len(main) - 1} on unnoised data"
            )
    if clean and (total[-1] != 0 or segment[-1] != 0):
        raise ConsistencyError("counters did not reach zero on unnoised data")
    return FactoredExample(main, dur, total, pause, segment)


def build_interleaved_example(utt: AlignedUtterance) -> InterleavedExample:
    """Phoneme/duration alternation with <eow> and [pause] markers."""
    tokens: list[str] = []
    for sym, frames in _target_tokens(utt):
        if sym in (EOW, PAUSE):
            tokens.append(sym)
        else:
            tokens.append(sym)
            tokens.append(str(frames))
    return InterleavedExample(tokens)


def validate_interleaved(tokens: list[str]) -> InterleavedCheck:
    """Check the alternation structure of an interleaved token sequence.

    Violations: a duration with no phoneme immediately before it (sequence
    start, after another duration, or after <eow>/[pause]) and a phoneme
    not immediately followed by its duration.
    """
    expecting_duration = False
    for i, tok in enumerate(tokens):
        if is_duration_token(tok):
            if not expecting_duration:
                return InterleavedCheck(False, i, "duration token without a preceding phoneme")
            expecting_duration = False
        elif tok in (EOW, PAUSE):
            if expecting_duration:
                return InterleavedCheck(False, i, "phoneme not followed by a duration token")
            # marker tokens carry no duration
        else:
            if expecting_duration:
                return InterleavedCheck(False, i, "phoneme not followed by a duration token")
            expecting_duration = True
    if expecting_duration:
        return InterleavedCheck(False, len(tokens) - 1, "phoneme missing its duration at end")
    return InterleavedCheck(True)


def interleaved_to_utterance(tokens: list[str], source_text: str = "") -> AlignedUtterance:
    """Parse interleaved tokens back into an utterance (pauses kept marked)."""
    check = validate_interleaved(tokens)
    if not check:
        raise ValidationError(f"invalid interleaved sequence at index {check.index}: {check.reason}")
    units: list[tuple[str, int]] = []
    boundaries: list[int] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == EOW:
            if units:
                boundaries.append(len(units) - 1)
            i += 1
        elif tok == PAUSE:
            units.append((PAUSE, 0))
            i += 1
        else:
            units.append((tok, int(tokens[i + 1])))
            i += 2
    return AlignedUtterance(source_text, units, boundaries)


def factored_to_interleaved(example: FactoredExample) -> list[str]:
    """Drop the NULL column and counters; re-emit the single-stream form."""
    tokens: list[str] = []
    for sym, frames in zip(example.main[1:], example.dur[1:]):
        if sym in (EOW, PAUSE):
            tokens.append(sym)
        else:
            tokens.append(sym)
            tokens.append(str(frames))
    return tokens


def interleaved_to_factored(tokens: list[str], source_text: str = "") -> FactoredExample:
    """Rebuild the factored streams; segments are recomputed from durations."""
    utt = interleaved_to_utterance(tokens, source_text)
    return build_factored_example(utt, compute_segments(utt))


def rows_to_interleaved(rows: list[tuple[str, int]]) -> list[str]:
    """Render decoded (token, duration) rows in the interleaved text syntax."""
    tokens: list[str] = []
    for sym, frames in rows:
        if sym in (EOW, PAUSE):
            tokens.append(sym)
        else:
            tokens.append(sym)
            tokens.append(str(frames))
    return tokens
