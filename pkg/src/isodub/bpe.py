"""Byte-pair encoding: greedy merge learning and deterministic application.

Words are whitespace tokens; the last character of each word carries an
end-of-word marker during learning. Applied subwords use the ``@@`` suffix
on non-final pieces, so joining on spaces and deleting ``@@ `` restores the
original text.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ParseError

WORD_END = "</w>"
CONTINUATION = "@@"

BPE_FILE_HEADER = "#version: 1"


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._cache = {}

    def segment_word(self, word: str) -> list[str]:
        """Split one word into subwords, non-final pieces suffixed with @@."""
        if word in self._cache:
            return list(self._cache[word])
        symbols = _word_symbols(word)
        while len(symbols) > 1:
            pairs = {(symbols[i], symbols[i + 1]) for i in range(len(symbols) - 1)}
            ranked = [(self._ranks[p], p) for p in pairs if p in self._ranks]
            if not ranked:
                break
            _, best = min(ranked)
            symbols = _merge_pair(symbols, best)
        pieces = []
        for i, sym in enumerate(symbols):
            text = sym[: -len(WORD_END)] if sym.endswith(WORD_END) else sym
            if i < len(symbols) - 1:
                text += CONTINUATION
            pieces.append(text)
        self._cache[word] = tuple(pieces)
        return pieces

    def apply(self, text: str) -> list[str]:
        out: list[str] = []
        for word in text.split():
            out.extend(self.segment_word(word))
        return out

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(BPE_FILE_HEADER + "\n")
            for a, b in self.merges:
                f.write(f"{a} {b}\n")

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        if not lines or lines[0] != BPE_FILE_HEADER:
            raise ParseError("not a BPE model file (missing header)", 1)
        merges = []
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ParseError(f"expected two symbols, got {line!r}", i)
            merges.append((parts[0], parts[1]))
        return cls(merges)


def _word_symbols(word: str) -> tuple[str, ...]:
    chars = list(word)
    chars[-1] += WORD_END
    return tuple(chars)


def _merge_pair(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    merged = []
    i = 0
    while i < len(symbols):
        if i < len(symbols) - 1 and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def learn_bpe(lines: Iterable[str], n_merges: int) -> BpeModel:
    """Learn up to n_merges most-frequent-pair merges.

    Ties break toward the lexicographically smallest pair so learning is
    deterministic regardless of input order.
    """
    word_freq = Counter()
    for line in lines:
        word_freq.update(line.split())
    words = {w: _word_symbols(w) for w in word_freq}
    merges: list[tuple[str, str]] = []
    for _ in range(n_merges):
        pair_counts = Counter()
        for w, symbols in words.items():
            freq = word_freq[w]
            for i in range(len(symbols) - 1):
                pair_counts[(symbols[i], symbols[i + 1])] += freq
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        words = {w: _merge_pair(s, best) for w, s in words.items()}
    return BpeModel(merges)


def debpe(subwords: Iterable[str]) -> str:
    """Undo BPE segmentation: join subwords and remove continuation marks."""
    return " ".join(subwords).replace(CONTINUATION + " ", "")
