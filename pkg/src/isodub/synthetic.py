"""Synthetic aligned corpora for desk-scale experiments.

Source sentences are sequences of word types ``w0 .. w{V-1}``; each word
maps invertibly to a phoneme group (the base-B digits of its index, as
symbols ``P0 .. P{B-1}``), so translation quality can be measured exactly
by decoding hypothesis phonemes back into words. Durations are drawn per
phoneme, optionally scaled by a per-example speaking-rate jitter that
makes segment durations unpredictable from the text alone; pauses are
inserted between words with configurable probability.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .alignment import EOW, PAUSE, SILENCE, AlignedUtterance, DEFAULT_FRAME_S
from .errors import ConfigError
from .rng import stream

SYNTH_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SyntheticConfig:
    n_examples: int = 50
    n_word_types: int = 30
    words_min: int = 3
    words_max: int = 8
    phoneme_base: int = 6
    pad_spread: int = 0
    dur_min: int = 3
    dur_max: int = 9
    rate_jitter: float = 0.0
    pause_prob: float = 0.3
    pause_min_s: float = 0.35
    pause_max_s: float = 0.8
    frame_s: float = DEFAULT_FRAME_S

    def validate(self):
        if self.n_examples < 1 or self.n_word_types < 1:
            raise ConfigError("n_examples and n_word_types must be >= 1")
        if not 1 <= self.words_min <= self.words_max:
            raise ConfigError("need 1 <= words_min <= words_max")
        if not 2 <= self.phoneme_base <= 10:
            raise ConfigError("phoneme_base must be in [2, 10]")
        if not 1 <= self.dur_min <= self.dur_max:
            raise ConfigError("need 1 <= dur_min <= dur_max")
        if not 0.0 <= self.rate_jitter < 1.0:
            raise ConfigError("rate_jitter must be in [0, 1)")
        if not 0.0 <= self.pause_prob <= 1.0:
            raise ConfigError("pause_prob must be in [0, 1]")
        if self.pad_spread < 0:
            raise ConfigError("pad_spread must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["format"] = "isodub-synth"
        d["version"] = SYNTH_FORMAT_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        d = {k: v for k, v in d.items() if k not in ("format", "version")}
        return cls(**d)


def word_symbol(index: int) -> str:
    return f"w{index}"


def phoneme_symbol(digit: int) -> str:
    return f"P{digit}"


def word_phonemes(index: int, config: SyntheticConfig) -> list[str]:
    """Deterministic phoneme group for a word: its base-B digit string,
    left-padded with P0 by a per-word amount when pad_spread > 0."""
    base = config.phoneme_base
    digits: list[int] = []
    k = index
    while True:
        digits.append(k % base)
        k //= base
        if k == 0:
            break
    digits.reverse()
    extra = index % (config.pad_spread + 1)
    digits = [0] * extra + digits
    return [phoneme_symbol(d) for d in digits]


def phonemes_to_word(symbols: list[str], config: SyntheticConfig) -> str | None:
    """Invert word_phonemes; None when the group decodes to no word type."""
    if not symbols:
        return None
    value = 0
    for sym in symbols:
        if not sym.startswith("P") or not sym[1:].isdigit():
            return None
        digit = int(sym[1:])
        if digit >= config.phoneme_base:
            return None
        value = value * config.phoneme_base + digit
    if value >= config.n_word_types:
        return None
    if symbols != word_phonemes(value, config):
        return None
    return word_symbol(value)


def generate_synthetic_corpus(config: SyntheticConfig, seed: int) -> list[AlignedUtterance]:
    """Deterministic corpus of aligned utterances with parallel source texts.

    Each example draws from its own substream, so the corpus is stable
    under sharded generation.
    """
    config.validate()
    utterances = []
    for i in range(config.n_examples):
        rng = stream(seed, "synth-example", i)
        n_words = int(rng.integers(config.words_min, config.words_max + 1))
        word_ids = [int(rng.integers(0, config.n_word_types)) for _ in range(n_words)]
        rate = 1.0
        if config.rate_jitter > 0:
            rate = float(rng.uniform(1.0 - config.rate_jitter, 1.0 + config.rate_jitter))
        units: list[tuple[str, int]] = []
        boundaries: list[int] = []
        for w, word_id in enumerate(word_ids):
            for sym in word_phonemes(word_id, config):
                raw = int(rng.integers(config.dur_min, config.dur_max + 1))
                units.append((sym, max(1, int(round(raw * rate)))))
            boundaries.append(len(units) - 1)
            if w < n_words - 1 and rng.random() < config.pause_prob:
                pause_s = float(rng.uniform(config.pause_min_s, config.pause_max_s))
                units.append((SILENCE, int(round(pause_s / config.frame_s))))
        source_text = " ".join(word_symbol(w) for w in word_ids)
        utterances.append(AlignedUtterance(source_text, units, boundaries))
    return utterances


def rows_to_words(rows, config: SyntheticConfig) -> str:
    """Decode emitted (token, duration) rows back into source-style words.

    Groups are split at <eow>; [pause] rows are skipped; groups that do not
    decode to a word type become <unk>.
    """
    words: list[str] = []
    group: list[str] = []
    for token, _ in rows:
        if token == EOW:
            if group:
                words.append(phonemes_to_word(group, config) or "<unk>")
                group = []
        elif token == PAUSE:
            continue
        else:
            group.append(token)
    if group:
        words.append(phonemes_to_word(group, config) or "<unk>")
    return " ".join(words)
