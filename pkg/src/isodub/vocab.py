"""Token vocabularies with reserved control symbols."""

from __future__ import annotations

import json
from typing import Iterable

from .alignment import EOW, PAUSE
from .errors import VocabularyError

NULL = "NULL"
EOS = "</s>"
SOURCE_SEP = "<||>"

RESERVED = (NULL, EOS, EOW, PAUSE, SOURCE_SEP)

VOCAB_FORMAT_VERSION = 1


def bin_tag(k: int) -> str:
    return f"<bin{k}>"


class Vocabulary:
    """Bidirectional token/id map; ids dense from 0, reserved tokens first."""

    def __init__(self, tokens: Iterable[str] = (), n_bins: int = 0):
        regular = sorted(set(tokens) - set(RESERVED))
        tags = [bin_tag(k) for k in range(n_bins)]
        overlap = set(regular) & set(tags)
        if overlap:
            raise VocabularyError(f"tokens collide with bin tags: {sorted(overlap)}")
        self._id_to_token: list[str] = list(RESERVED) + regular + tags
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise VocabularyError("duplicate tokens in vocabulary")
        self.n_bins = n_bins

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        try:
            return self._token_to_id[token]
        except KeyError:
            raise VocabularyError(f"unknown token {token!r}") from None

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self._id_to_token):
            raise VocabularyError(f"id {idx} out of range [0, {len(self._id_to_token)})")
        return self._id_to_token[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.token(i) for i in ids]

    def tokens(self) -> list[str]:
        return list(self._id_to_token)

    # Serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "isodub-vocab",
            "version": VOCAB_FORMAT_VERSION,
            "n_bins": self.n_bins,
            "tokens": self._id_to_token,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        if d.get("format") != "isodub-vocab" or d.get("version") != VOCAB_FORMAT_VERSION:
            raise VocabularyError("not a vocabulary file (bad format/version)")
        vocab = cls.__new__(cls)
        vocab._id_to_token = list(d["tokens"])
        vocab._token_to_id = {t: i for i, t in enumerate(vocab._id_to_token)}
        vocab.n_bins = int(d["n_bins"])
        for i, t in enumerate(RESERVED):
            if vocab._id_to_token[i] != t:
                raise VocabularyError(f"reserved token {t!r} missing from position {i}")
        return vocab

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


NULL_ID = RESERVED.index(NULL)
EOS_ID = RESERVED.index(EOS)
EOW_ID = RESERVED.index(EOW)
PAUSE_ID = RESERVED.index(PAUSE)
