"""Parsing and preprocessing of space-tokenized reaction strings.

Corpus lines look like ``<RX_3> C C ( = O ) O <TAB> C C O . C C ( = O )``:
a reaction-type tag, the product tokens, and (tab-separated) the reactant
tokens.  Tokens are the corpus's space-separated units; multi-letter
elements arrive pre-split ("C l").  Everything here is lexical; no
chemical validity is checked or implied.
"""

import re
import warnings
from dataclasses import dataclass, field

ACETIC = "acetic"
ACETONE = "acetone"
_ACETIC_PATTERN = "CC(=O)O"
_ACETONE_PATTERN = "CC(=O)C"

_RX_TAG = re.compile(r"^<RX_(\d+)>$")
_RX_LIKE = re.compile(r"^<RX_.*>$|^<RX.*$")


class ParseError(ValueError):
    """Malformed reaction line."""


@dataclass
class ReactionRecord:
    reaction_type: int | None
    input_tokens: list[str]
    target: str | None
    raw_input: str
    raw_output: str
    output_tokens: list[str] = field(default_factory=list)


@dataclass
class Vocab:
    """Two first-seen-ordered unique-string lists with index lookup."""

    reactions: list[str] = field(default_factory=list)
    reactants: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._reaction_index = {s: i for i, s in enumerate(self.reactions)}
        self._reactant_index = {s: i for i, s in enumerate(self.reactants)}

    def add_reaction(self, s: str) -> int:
        if s not in self._reaction_index:
            self._reaction_index[s] = len(self.reactions)
            self.reactions.append(s)
        return self._reaction_index[s]

    def add_reactant(self, s: str) -> int:
        if s not in self._reactant_index:
            self._reactant_index[s] = len(self.reactants)
            self.reactants.append(s)
        return self._reactant_index[s]

    def encode_reactant(self, s: str) -> int:
        return self._reactant_index[s]

    def decode_reactant(self, idx: int) -> str:
        return self.reactants[idx]


def tokenize(line: str):
    """Split a corpus line into (reaction_type or None, tokens).

    A leading ``<RX_k>`` tag with k in 1..10 is parsed and stripped; a
    malformed or out-of-range tag is an error, as is a tag with nothing
    after it.
    """
    if not line or not line.strip():
        raise ParseError("empty line")
    tokens = line.split()
    reaction_type = None
    first = tokens[0]
    m = _RX_TAG.match(first)
    if m:
        reaction_type = int(m.group(1))
        if not 1 <= reaction_type <= 10:
            raise ParseError(f"reaction type {reaction_type} outside 1..10: {first!r}")
        tokens = tokens[1:]
        if not tokens:
            raise ParseError(f"no tokens after reaction tag {first!r}")
    elif _RX_LIKE.match(first):
        raise ParseError(f"malformed reaction tag {first!r}")
    return reaction_type, tokens


def compress(tokens) -> str:
    """Join tokens with no separator (the spacing carries no meaning)."""
    if not tokens:
        raise ParseError("cannot compress an empty token list")
    return "".join(tokens)


def parse_record(input_line: str, output_line: str) -> ReactionRecord:
    reaction_type, input_tokens = tokenize(input_line)
    _, output_tokens = tokenize(output_line)
    return ReactionRecord(reaction_type=reaction_type, input_tokens=input_tokens,
                          target=None, raw_input=input_line.strip(),
                          raw_output=output_line.strip(), output_tokens=output_tokens)


def load_corpus(path) -> list[ReactionRecord]:
    """Read a corpus file: TSV (input<TAB>output) or alternating line pairs."""
    with open(path, encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle if ln.strip()]
    records = []
    if lines and "\t" in lines[0]:
        for ln in lines:
            left, _, right = ln.partition("\t")
            records.append(parse_record(left, right))
    else:
        if len(lines) % 2:
            raise ParseError("line-pair corpus has an odd number of lines")
        for i in range(0, len(lines), 2):
            records.append(parse_record(lines[i], lines[i + 1]))
    return records


def filter_single_reaction(records, subset_size: int = 9) -> list[ReactionRecord]:
    """Keep reaction-type-1 records, capped to the first ``subset_size``."""
    kept = [r for r in records if r.reaction_type == 1]
    if len(kept) < subset_size:
        warnings.warn(f"only {len(kept)} type-1 records available "
                      f"(requested {subset_size}); using all of them")
        return kept
    return kept[:subset_size]


def label_chain(output_tokens):
    """acetic/acetone label from the compressed reactant string, or None.

    Acetic takes precedence when both substrings occur.
    """
    compressed = compress(output_tokens)
    if _ACETIC_PATTERN in compressed:
        return ACETIC
    if _ACETONE_PATTERN in compressed:
        return ACETONE
    return None


def chain_subset(records, subset_size: int = 200) -> list[ReactionRecord]:
    """Label records by contained chain and keep the first labeled ones."""
    labeled = []
    for r in records:
        label = label_chain(r.output_tokens)
        if label is not None:
            labeled.append(ReactionRecord(r.reaction_type, r.input_tokens, label,
                                          r.raw_input, r.raw_output, r.output_tokens))
    if len(labeled) < subset_size:
        warnings.warn(f"only {len(labeled)} chain-labeled records available "
                      f"(requested {subset_size}); using all of them")
        return labeled
    return labeled[:subset_size]


def reactant_targets(records) -> list[ReactionRecord]:
    """Task-A labeling: the whole compressed reactant string is the class."""
    return [ReactionRecord(r.reaction_type, r.input_tokens,
                           compress(r.output_tokens), r.raw_input, r.raw_output,
                           r.output_tokens)
            for r in records]


def build_vocab_and_encode(records):
    """Token vocabulary plus class ids, both in first-seen order.

    Returns (vocab, token_vocab, encoded) where encoded is a list of
    (token_id_list, class_id) and token_vocab maps token -> id for the
    embedding table.
    """
    vocab = Vocab()
    token_vocab: dict[str, int] = {}
    encoded = []
    for r in records:
        vocab.add_reaction(compress(r.input_tokens))
        class_id = vocab.add_reactant(r.target)
        ids = []
        for tok in r.input_tokens:
            if tok not in token_vocab:
                token_vocab[tok] = len(token_vocab)
            ids.append(token_vocab[tok])
        encoded.append((ids, class_id))
    return vocab, token_vocab, encoded
