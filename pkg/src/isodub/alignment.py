"""Aligned utterances: ingestion, pause marking, segment durations, noise.

The interchange format is one record per line:

    source text<TAB>phone:dur phone:dur | sil:dur phone:dur ... |

where durations are in seconds, ``sil`` marks silence and a bare ``|``
marks the end of a word. Internally durations are integer frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, ValidationError

SILENCE = "sil"
PAUSE = "[pause]"
EOW = "<eow>"
WORD_SEP = "|"

DEFAULT_FRAME_S = 0.01
DEFAULT_PAUSE_THRESHOLD_S = 0.3


@dataclass
class AlignedUtterance:
    """Source text plus the target phone/duration sequence.

    target_units holds (symbol, frames) pairs; symbol is a phoneme, SILENCE
    (raw ingested silence) or PAUSE (after mark_pauses). word_boundaries
    are indices of word-final units, strictly increasing.
    """

    source_text: str
    target_units: list[tuple[str, int]]
    word_boundaries: list[int] = field(default_factory=list)

    def validate(self):
        for sym, frames in self.target_units:
            if frames < 0:
                raise ValidationError(f"negative duration {frames} for unit {sym!r}")
            if not isinstance(frames, int):
                raise ValidationError(f"non-integer duration {frames!r} for unit {sym!r}")
        prev = -1
        for b in self.word_boundaries:
            if not 0 <= b < len(self.target_units):
                raise ValidationError(f"word boundary {b} out of range")
            if b <= prev:
                raise ValidationError("word boundaries must be strictly increasing")
            prev = b

    def phoneme_frames(self) -> int:
        """Total speech frames, excluding silences and pauses."""
        return sum(f for s, f in self.target_units if s not in (SILENCE, PAUSE))


@dataclass(frozen=True)
class SegmentSpec:
    """Per-segment durations and the unit indices of the pauses between them."""

    segment_durations: tuple[int, ...]
    pause_positions: tuple[int, ...]

    def total_frames(self) -> int:
        return sum(self.segment_durations)

    def n_pauses(self) -> int:
        return len(self.segment_durations) - 1


def seconds_to_frames(seconds: float, frame_s: float = DEFAULT_FRAME_S) -> int:
    return int(math.floor(seconds / frame_s + 0.5))


def parse_alignment_line(line: str, lineno: int, frame_s: float) -> AlignedUtterance:
    if "\t" not in line:
        raise ParseError("missing TAB between source text and alignment", lineno)
    source_text, target_spec = line.split("\t", 1)
    units: list[tuple[str, int]] = []
    boundaries: list[int] = []
    for item in target_spec.split():
        if item == WORD_SEP:
            if not units:
                raise ParseError("word boundary before any unit", lineno)
            idx = len(units) - 1
            if boundaries and boundaries[-1] == idx:
                raise ParseError("duplicate word boundary", lineno)
            boundaries.append(idx)
            continue
        if ":" not in item:
            raise ParseError(f"expected phone:duration, got {item!r}", lineno)
        sym, dur_text = item.rsplit(":", 1)
        if not sym:
            raise ParseError(f"empty phone symbol in {item!r}", lineno)
        try:
            dur_s = float(dur_text)
        except ValueError:
            raise ParseError(f"bad duration {dur_text!r} in {item!r}", lineno) from None
        if dur_s < 0:
            raise ValidationError(f"line {lineno}: negative duration in {item!r}")
        units.append((sym, seconds_to_frames(dur_s, frame_s)))
    utt = AlignedUtterance(source_text, units, boundaries)
    utt.validate()
    return utt


def ingest_alignment(path_or_lines, frame_s: float = DEFAULT_FRAME_S) -> list[AlignedUtterance]:
    """Parse the interchange format into utterances with frame durations."""
    if isinstance(path_or_lines, (str, bytes)) or hasattr(path_or_lines, "__fspath__"):
        with open(path_or_lines, encoding="utf-8") as f:
            lines = f.read().splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in path_or_lines]
    utts = []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        utts.append(parse_alignment_line(line, i, frame_s))
    return utts


def format_alignment_line(utt: AlignedUtterance, frame_s: float = DEFAULT_FRAME_S) -> str:
    """Inverse of parse_alignment_line, up to float formatting of seconds."""
    boundaries = set(utt.word_boundaries)
    items = []
    for i, (sym, frames) in enumerate(utt.target_units):
        items.append(f"{sym}:{frames * frame_s:.4f}")
        if i in boundaries:
            items.append(WORD_SEP)
    return f"{utt.source_text}\t{' '.join(items)}"


def write_alignment(path, utts: list[AlignedUtterance], frame_s: float = DEFAULT_FRAME_S):
    with open(path, "w", encoding="utf-8") as f:
        for utt in utts:
            f.write(format_alignment_line(utt, frame_s) + "\n")


def mark_pauses(
    utt: AlignedUtterance,
    threshold_s: float = DEFAULT_PAUSE_THRESHOLD_S,
    frame_s: float = DEFAULT_FRAME_S,
) -> AlignedUtterance:
    """Turn long silences into PAUSE units and drop short ones.

    Silence strictly longer than the threshold becomes a PAUSE (keeping its
    frames for reference; downstream targets give pauses duration 0).
    Shorter silences are removed and their frames discarded. Word boundary
    indices are remapped onto the surviving units.
    """
    if threshold_s <= 0:
        raise ValidationError(f"pause threshold must be positive, got {threshold_s}")
    threshold_frames = threshold_s / frame_s
    new_units: list[tuple[str, int]] = []
    index_map: dict[int, int] = {}
    for i, (sym, frames) in enumerate(utt.target_units):
        if sym == SILENCE:
            if frames > threshold_frames:
                new_units.append((PAUSE, frames))
                index_map[i] = len(new_units) - 1
            continue
        new_units.append((sym, frames))
        index_map[i] = len(new_units) - 1

    boundaries: list[int] = []
    for b in utt.word_boundaries:
        while b >= 0 and b not in index_map:
            b -= 1
        if b < 0:
            continue
        mapped = index_map[b]
        if not boundaries or boundaries[-1] != mapped:
            boundaries.append(mapped)
    return replace(utt, target_units=new_units, word_boundaries=boundaries)


def compute_segments(utt: AlignedUtterance) -> SegmentSpec:
    """Sum phoneme durations between consecutive pauses.

    Requires pauses to be marked already; raises on empty segments (adjacent
    pauses, or a pause at the start or end of the utterance).
    """
    durations: list[int] = []
    pause_positions: list[int] = []
    current = 0
    current_has_speech = False
    for i, (sym, frames) in enumerate(utt.target_units):
        if sym == SILENCE:
            raise ValidationError("compute_segments called before mark_pauses (raw silence found)")
        if sym == PAUSE:
            if not current_has_speech:
                raise ValidationError(f"empty segment before pause at unit {i}")
            durations.append(current)
            pause_positions.append(i)
            current = 0
            current_has_speech = False
        else:
            current += frames
            current_has_speech = True
    if not current_has_speech:
        if pause_positions:
            raise ValidationError("empty segment after final pause")
        raise ValidationError("utterance has no speech units")
    durations.append(current)
    return SegmentSpec(tuple(durations), tuple(pause_positions))


def add_noise(
    spec: SegmentSpec,
    sigma_s: float,
    rng: np.random.Generator,
    frames_per_second: float = 1.0 / DEFAULT_FRAME_S,
) -> SegmentSpec:
    """Gaussian-perturb segment durations; sigma 0 is an exact identity.

    The standard deviation is sigma_s seconds expressed in frames. Noised
    durations are clamped to at least one frame.
    """
    if sigma_s < 0:
        raise ValidationError(f"noise sigma must be >= 0, got {sigma_s}")
    if sigma_s == 0:
        return spec
    std_frames = sigma_s * frames_per_second
    noised = tuple(
        max(1, int(np.rint(d + rng.normal(0.0, std_frames))))
        for d in spec.segment_durations
    )
    return SegmentSpec(noised, spec.pause_positions)
