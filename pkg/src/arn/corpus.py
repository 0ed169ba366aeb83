"""Data pipeline: tokenizer, vocabulary, fixed-length encoding, and synthetic
Markov sources with exact n-gram statistics for verification.
"""

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError, EncodingError

PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"
PAD_ID = 0
UNK_ID = 1


def tokenize(text):
    """Lowercase and split on Unicode whitespace; punctuation stays attached."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(str(exc)) from exc
    return text.lower().split()


@dataclass
class Vocabulary:
    tokens: list

    def __post_init__(self):
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def encode_token(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def decode(self, ids):
        return [self.tokens[int(i)] for i in ids]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @staticmethod
    def load(path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return Vocabulary([line.rstrip("\n") for line in fh if line != "\n"])


def build_vocab(lines, cap: int) -> Vocabulary:
    """Top cap-2 tokens by frequency (lexicographic tie-break) plus PAD/UNK."""
    if cap < 3:
        raise ConfigError("vocabulary cap must be at least 3")
    counts = Counter()
    for line in lines:
        counts.update(tokenize(line))
    if not counts:
        raise EmptyInputError("empty corpus")
    kept = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: cap - 2]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN] + [tok for tok, _ in kept])


def encode_fixed(tokens, vocab: Vocabulary, t_len: int) -> np.ndarray:
    """Map tokens to ids, truncate to t_len or right-pad with PAD."""
    ids = [vocab.encode_token(tok) for tok in tokens[:t_len]]
    ids += [PAD_ID] * (t_len - len(ids))
    return np.asarray(ids, dtype=np.int64)


def load_corpus(path, vocab: Vocabulary, t_len: int) -> np.ndarray:
    """Encode a one-sentence-per-line UTF-8 file into an (N, T) id array."""
    rows = []
    with open(path, "rb") as fh:
        for raw in fh:
            toks = tokenize(raw.rstrip(b"\n"))
            if toks:
                rows.append(encode_fixed(toks, vocab, t_len))
    if not rows:
        raise EmptyInputError(f"{path}: no sentences")
    return np.stack(rows)


@dataclass
class MarkovSource:
    """Order-1 chain over K states with known initial and transition laws."""

    pi: np.ndarray
    transition: np.ndarray
    states: list = None

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=np.float64)
        self.transition = np.asarray(self.transition, dtype=np.float64)
        k = self.pi.size
        if self.transition.shape != (k, k):
            raise ConfigError("transition matrix must be K x K")
        if abs(self.pi.sum() - 1.0) > 1e-9 or np.any(np.abs(self.transition.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigError("pi and every transition row must sum to 1")
        if self.states is None:
            self.states = list(range(k))

    @property
    def k(self):
        return self.pi.size

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"states": self.states, "pi": self.pi.tolist(), "A": self.transition.tolist()}, fh
            )

    @staticmethod
    def load(path) -> "MarkovSource":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return MarkovSource(pi=obj["pi"], transition=obj["A"], states=obj["states"])


def sample_markov(src: MarkovSource, t_len: int, count: int, rng) -> np.ndarray:
    """(count, t_len) array of state-index sequences."""
    out = np.empty((count, t_len), dtype=np.int64)
    if count == 0:
        return out
    cum_pi = src.pi.cumsum()
    cum_a = src.transition.cumsum(axis=1)
    out[:, 0] = np.searchsorted(cum_pi, rng.random(count), side="right").clip(0, src.k - 1)
    for i in range(1, t_len):
        u = rng.random(count)
        rows = cum_a[out[:, i - 1]]
        out[:, i] = (u[:, None] > rows).sum(axis=1).clip(0, src.k - 1)
    return out


def source_ngram_distribution(src: MarkovSource, n: int, t_len: int) -> dict:
    """Exact occurrence distribution of n-grams over positions 1..T-n+1.

    Returns {gram tuple: probability}; probabilities sum to 1.
    """
    if n > t_len:
        raise ConfigError(f"n = {n} exceeds sequence length {t_len}")
    k = src.k
    marginals = [src.pi]
    for _ in range(t_len - 1):
        marginals.append(marginals[-1] @ src.transition)
    grams = {}
    positions = t_len - n + 1
    for start in range(positions):
        stack = [((s,), marginals[start][s]) for s in range(k)]
        for _ in range(n - 1):
            nxt = []
            for gram, p in stack:
                for s in range(k):
                    q = p * src.transition[gram[-1], s]
                    if q > 0:
                        nxt.append((gram + (s,), q))
            stack = nxt
        for gram, p in stack:
            grams[gram] = grams.get(gram, 0.0) + p / positions
    return grams


def empirical_ngram_distribution(sequences, n: int) -> dict:
    counts = Counter()
    for seq in sequences:
        ids = getattr(seq, "ids", seq)
        ids = [int(t) for t in ids]
        counts.update(tuple(ids[i:i + n]) for i in range(len(ids) - n + 1))
    total = sum(counts.values())
    if total == 0:
        raise EmptyInputError(f"no {n}-grams")
    return {gram: cnt / total for gram, cnt in counts.items()}


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)


def first_token_distribution(corpus_ids: np.ndarray) -> np.ndarray:
    """Empirical distribution of x1 over the vocabulary (for decoded-x1 seeds)."""
    firsts = corpus_ids[:, 0]
    counts = np.bincount(firsts, minlength=int(firsts.max()) + 1).astype(np.float64)
    return counts / counts.sum()
