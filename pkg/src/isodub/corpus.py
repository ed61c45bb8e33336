"""Prepared-corpus assembly and line-delimited serialization.

``prepare_corpus`` runs the full data pipeline over aligned utterances:
pause marking, segment computation, equal-frequency binning, gaussian
noising of segment durations (source tags and counter initialization
only; per-token durations stay clean), BPE on source text, and
construction of both the factored and interleaved target forms plus the
reference records used by evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .alignment import (
    DEFAULT_FRAME_S,
    DEFAULT_PAUSE_THRESHOLD_S,
    PAUSE,
    AlignedUtterance,
    add_noise,
    compute_segments,
    mark_pauses,
)
from .bins import BinBoundaries, learn_bins
from .bpe import BpeModel, learn_bpe
from .errors import ParseError, ValidationError
from .factored import (
    FactoredExample,
    InterleavedExample,
    build_factored_example,
    build_interleaved_example,
)
from .rng import stream
from .synthetic import SyntheticConfig, rows_to_words
from .vocab import SOURCE_SEP, Vocabulary, bin_tag

CORPUS_FORMAT_VERSION = 1

STREAM_NAMES = ("dur", "total", "pause", "segment")


def format_source(subwords, segment_bins, vocab: Vocabulary) -> list[int]:
    """Source token ids: subwords, then the separator and one tag per segment.

    With no bins (timing conditioning ablated) the separator is omitted.
    """
    tokens = list(subwords)
    if segment_bins:
        tokens.append(SOURCE_SEP)
        tokens.extend(bin_tag(b) for b in segment_bins)
    return vocab.encode(tokens)


@dataclass
class Reference:
    source_text: str
    ref_text: str
    ref_rows: list[tuple[str, int]]
    ref_segments: list[int]
    ref_pause_count: int

    def to_dict(self) -> dict:
        return {
            "source_text": self.source_text,
            "ref_text": self.ref_text,
            "ref_rows": [[t, d] for t, d in self.ref_rows],
            "ref_segments": self.ref_segments,
            "ref_pause_count": self.ref_pause_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Reference":
        return cls(
            source_text=d["source_text"],
            ref_text=d["ref_text"],
            ref_rows=[(t, int(x)) for t, x in d["ref_rows"]],
            ref_segments=[int(x) for x in d["ref_segments"]],
            ref_pause_count=int(d["ref_pause_count"]),
        )


@dataclass
class PreparedCorpus:
    meta: dict
    source_vocab: Vocabulary
    target_vocab: Vocabulary
    interleaved_vocab: Vocabulary
    bins: BinBoundaries
    bpe: BpeModel
    factored: list[FactoredExample]
    interleaved: list[InterleavedExample]
    references: list[Reference]
    synth: SyntheticConfig | None = None
    val_factored: list[FactoredExample] = field(default_factory=list)
    val_references: list[Reference] = field(default_factory=list)

    @property
    def maxima(self) -> dict[str, int]:
        return self.meta["maxima"]


def _stream_maxima(examples: list[FactoredExample]) -> dict[str, int]:
    maxima = {name: 0 for name in STREAM_NAMES}
    for ex in examples:
        for name in STREAM_NAMES:
            values = getattr(ex, name)
            maxima[name] = max(maxima[name], max(values))
    return maxima


def prepare_corpus(
    utterances: list[AlignedUtterance],
    *,
    seed: int,
    frame_s: float = DEFAULT_FRAME_S,
    pause_threshold_s: float = DEFAULT_PAUSE_THRESHOLD_S,
    n_bins: int = 20,
    bpe_merges: int = 80,
    noise_sigma_s: float = 0.0,
    source_tags: bool = True,
    synth: SyntheticConfig | None = None,
    val_utterances: list[AlignedUtterance] | None = None,
) -> PreparedCorpus:
    """Run the preprocessing pipeline; bins and BPE come from the train set."""
    if not utterances:
        raise ValidationError("cannot prepare an empty corpus")
    marked = [mark_pauses(u, pause_threshold_s, frame_s) for u in utterances]
    clean_specs = [compute_segments(m) for m in marked]
    noised_specs = [
        add_noise(spec, noise_sigma_s, stream(seed, "noise", i), 1.0 / frame_s)
        for i, spec in enumerate(clean_specs)
    ]
    bins = learn_bins(
        [d for spec in noised_specs for d in spec.segment_durations], n_bins
    )
    bpe = learn_bpe((u.source_text for u in utterances), bpe_merges)

    subword_lists = [bpe.apply(u.source_text) for u in utterances]
    source_vocab = Vocabulary(
        (sw for subwords in subword_lists for sw in subwords),
        n_bins=n_bins if source_tags else 0,
    )
    phonemes = {
        sym for u in marked for sym, _ in u.target_units if sym != PAUSE
    }
    target_vocab = Vocabulary(phonemes)

    factored, interleaved, references = _build_examples(
        marked, clean_specs, noised_specs, subword_lists, bins, source_vocab,
        source_tags, synth,
    )
    interleaved_vocab = Vocabulary(
        tok for ex in interleaved for tok in ex.tokens
    )

    meta = {
        "format": "isodub-corpus",
        "version": CORPUS_FORMAT_VERSION,
        "seed": seed,
        "frame_s": frame_s,
        "pause_threshold_s": pause_threshold_s,
        "n_bins": n_bins,
        "bpe_merges": bpe_merges,
        "noise_sigma_s": noise_sigma_s,
        "source_tags": source_tags,
        "n_examples": len(factored),
        "maxima": _stream_maxima(factored),
        "synth": synth.to_dict() if synth is not None else None,
    }
    corpus = PreparedCorpus(
        meta=meta,
        source_vocab=source_vocab,
        target_vocab=target_vocab,
        interleaved_vocab=interleaved_vocab,
        bins=bins,
        bpe=bpe,
        factored=factored,
        interleaved=interleaved,
        references=references,
        synth=synth,
    )
    if val_utterances:
        val_marked = [mark_pauses(u, pause_threshold_s, frame_s) for u in val_utterances]
        val_specs = [compute_segments(m) for m in val_marked]
        val_subwords = [bpe.apply(u.source_text) for u in val_utterances]
        corpus.val_factored, _, corpus.val_references = _build_examples(
            val_marked, val_specs, val_specs, val_subwords, bins, source_vocab,
            source_tags, synth,
        )
        meta["n_val_examples"] = len(corpus.val_factored)
    return corpus


def _build_examples(
    marked, clean_specs, noised_specs, subword_lists, bins, source_vocab,
    source_tags, synth,
):
    factored: list[FactoredExample] = []
    interleaved: list[InterleavedExample] = []
    references: list[Reference] = []
    for utt, clean, noised, subwords in zip(marked, clean_specs, noised_specs, subword_lists):
        tags = bins.assign_all(noised.segment_durations) if source_tags else []
        source_ids = format_source(subwords, tags, source_vocab)
        fex = build_factored_example(utt, noised)
        fex.source_ids = source_ids
        iex = build_interleaved_example(utt)
        iex.source_ids = source_ids
        factored.append(fex)
        interleaved.append(iex)
        ref_rows = list(zip(fex.main[1:], fex.dur[1:]))
        if synth is not None:
            ref_text = rows_to_words(ref_rows, synth)
        else:
            ref_text = " ".join(iex.tokens)
        references.append(
            Reference(
                source_text=utt.source_text,
                ref_text=ref_text,
                ref_rows=ref_rows,
                ref_segments=list(clean.segment_durations),
                ref_pause_count=clean.n_pauses(),
            )
        )
    return factored, interleaved, references


# Serialization -------------------------------------------------------------

FACTORED_FILE = "factored.jsonl"
INTERLEAVED_FILE = "interleaved.jsonl"
REFERENCES_FILE = "references.jsonl"
VAL_FACTORED_FILE = "val.factored.jsonl"
VAL_REFERENCES_FILE = "val.references.jsonl"
SOURCE_VOCAB_FILE = "vocab.source.json"
TARGET_VOCAB_FILE = "vocab.target.json"
INTERLEAVED_VOCAB_FILE = "vocab.interleaved.json"
BINS_FILE = "bins.json"
BPE_FILE = "bpe.txt"
META_FILE = "meta.json"


def _dump_jsonl(path, header: dict, records):
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path, expected_format: str) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file", 1)
    header = json.loads(lines[0])
    if header.get("format") != expected_format or header.get("version") != CORPUS_FORMAT_VERSION:
        raise ParseError(f"{path}: bad header (expected {expected_format})", 1)
    records = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", i) from None
    return header, records


def _factored_record(ex: FactoredExample, vocab: Vocabulary) -> dict:
    return {
        "source_ids": ex.source_ids,
        "main": vocab.encode(ex.main),
        "dur": ex.dur,
        "total": ex.total,
        "pause": ex.pause,
        "segment": ex.segment,
    }


def _factored_from_record(rec: dict, vocab: Vocabulary) -> FactoredExample:
    return FactoredExample(
        main=vocab.decode(rec["main"]),
        dur=[int(x) for x in rec["dur"]],
        total=[int(x) for x in rec["total"]],
        pause=[int(x) for x in rec["pause"]],
        segment=[int(x) for x in rec["segment"]],
        source_ids=[int(x) for x in rec["source_ids"]],
    )


def save_corpus(corpus: PreparedCorpus, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / META_FILE, "w", encoding="utf-8") as f:
        json.dump(corpus.meta, f, sort_keys=True, indent=2)
        f.write("\n")
    corpus.source_vocab.save(out / SOURCE_VOCAB_FILE)
    corpus.target_vocab.save(out / TARGET_VOCAB_FILE)
    corpus.interleaved_vocab.save(out / INTERLEAVED_VOCAB_FILE)
    corpus.bins.save(out / BINS_FILE)
    corpus.bpe.save(out / BPE_FILE)
    _dump_jsonl(
        out / FACTORED_FILE,
        {"format": "isodub-factored", "version": CORPUS_FORMAT_VERSION},
        (_factored_record(ex, corpus.target_vocab) for ex in corpus.factored),
    )
    _dump_jsonl(
        out / INTERLEAVED_FILE,
        {"format": "isodub-interleaved", "version": CORPUS_FORMAT_VERSION},
        (
            {"source_ids": ex.source_ids, "tokens": corpus.interleaved_vocab.encode(ex.tokens)}
            for ex in corpus.interleaved
        ),
    )
    _dump_jsonl(
        out / REFERENCES_FILE,
        {"format": "isodub-references", "version": CORPUS_FORMAT_VERSION},
        (ref.to_dict() for ref in corpus.references),
    )
    if corpus.val_factored:
        _dump_jsonl(
            out / VAL_FACTORED_FILE,
            {"format": "isodub-factored", "version": CORPUS_FORMAT_VERSION},
            (_factored_record(ex, corpus.target_vocab) for ex in corpus.val_factored),
        )
        _dump_jsonl(
            out / VAL_REFERENCES_FILE,
            {"format": "isodub-references", "version": CORPUS_FORMAT_VERSION},
            (ref.to_dict() for ref in corpus.val_references),
        )


def load_corpus(corpus_dir) -> PreparedCorpus:
    d = Path(corpus_dir)
    with open(d / META_FILE, encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("format") != "isodub-corpus" or meta.get("version") != CORPUS_FORMAT_VERSION:
        raise ParseError(f"{d / META_FILE}: bad corpus meta")
    source_vocab = Vocabulary.load(d / SOURCE_VOCAB_FILE)
    target_vocab = Vocabulary.load(d / TARGET_VOCAB_FILE)
    interleaved_vocab = Vocabulary.load(d / INTERLEAVED_VOCAB_FILE)
    bins = BinBoundaries.load(d / BINS_FILE)
    bpe = BpeModel.load(d / BPE_FILE)
    _, frecs = read_jsonl(d / FACTORED_FILE, "isodub-factored")
    factored = [_factored_from_record(r, target_vocab) for r in frecs]
    _, irecs = read_jsonl(d / INTERLEAVED_FILE, "isodub-interleaved")
    interleaved = [
        InterleavedExample(
            tokens=interleaved_vocab.decode(r["tokens"]),
            source_ids=[int(x) for x in r["source_ids"]],
        )
        for r in irecs
    ]
    _, rrecs = read_jsonl(d / REFERENCES_FILE, "isodub-references")
    references = [Reference.from_dict(r) for r in rrecs]
    synth = SyntheticConfig.from_dict(meta["synth"]) if meta.get("synth") else None
    corpus = PreparedCorpus(
        meta=meta,
        source_vocab=source_vocab,
        target_vocab=target_vocab,
        interleaved_vocab=interleaved_vocab,
        bins=bins,
        bpe=bpe,
        factored=factored,
        interleaved=interleaved,
        references=references,
        synth=synth,
    )
    if (d / VAL_FACTORED_FILE).exists():
        _, vrecs = read_jsonl(d / VAL_FACTORED_FILE, "isodub-factored")
        corpus.val_factored = [_factored_from_record(r, target_vocab) for r in vrecs]
        _, vrefs = read_jsonl(d / VAL_REFERENCES_FILE, "isodub-references")
        corpus.val_references = [Reference.from_dict(r) for r in vrefs]
    return corpus
