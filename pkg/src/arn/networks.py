"""Model architecture: shared embedding, LSTM generator, first-token VAE,
and a sequence discriminator, plus the two generation procedures.

All forward passes are batched: token batches are (B, T) int arrays, soft
(relaxed) sequences are lists of T row tensors of shape (B, V). The public
single-sequence operations wrap a batch of one.
"""

from dataclasses import dataclass, field

import numpy as np

from .distributions import GaussianPosterior, GumbelConfig, gumbel_softmax
from .errors import ConfigError, ShapeError, VocabError
from .tensor import Tensor, gather_rows, lstm_cell, no_grad

INIT_SCALE = 0.08


@dataclass
class TokenSequence:
    """Fixed-length sequence of token ids bound to a vocabulary size."""

    ids: np.ndarray
    vocab_size: int

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.ndim != 1:
            raise ShapeError(f"token sequence must be 1-D, got shape {self.ids.shape}")
        if np.any(self.ids < 0) or np.any(self.ids >= self.vocab_size):
            raise VocabError(f"token ids out of range [0, {self.vocab_size})")

    def __len__(self):
        return self.ids.size


@dataclass
class RnnState:
    h: Tensor
    c: Tensor


@dataclass
class ArnConfig:
    seq_len: int = 8
    vocab_size: int = 8
    d_emb: int = 16
    d_hidden: int = 32
    d_latent: int = 8

    @staticmethod
    def preset(name: str) -> "ArnConfig":
        if name == "desk":
            return ArnConfig()
        if name == "paper":
            return ArnConfig(seq_len=20, vocab_size=10000, d_emb=500, d_hidden=500, d_latent=350)
        raise ConfigError(f"unknown preset {name!r}")


@dataclass
class ArnModel:
    """Parameter bundle; params maps names to Tensors with requires_grad set."""

    config: ArnConfig
    params: dict = field(default_factory=dict)

    @staticmethod
    def initialized(config: ArnConfig, rng: np.random.Generator) -> "ArnModel":
        """Uniform [-0.08, 0.08] initialization of every parameter tensor."""
        model = ArnModel(config)
        for name, shape in model.param_shapes().items():
            model.params[name] = Tensor(
                rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape), requires_grad=True
            )
        return model

    @staticmethod
    def zeros(config: ArnConfig) -> "ArnModel":
        model = ArnModel(config)
        for name, shape in model.param_shapes().items():
            model.params[name] = Tensor(np.zeros(shape), requires_grad=True)
        return model

    def param_shapes(self):
        c = self.config
        return {
            "emb": (c.vocab_size, c.d_emb),
            "gen.wx": (c.d_emb, 4 * c.d_hidden),
            "gen.wh": (c.d_hidden, 4 * c.d_hidden),
            "gen.b": (4 * c.d_hidden,),
            "gen.proj_w": (c.d_hidden, c.vocab_size),
            "gen.proj_b": (c.vocab_size,),
            "dec.w": (c.d_latent, c.vocab_size),
            "dec.b": (c.vocab_size,),
            "enc.w": (c.d_emb, 2 * c.d_latent),
            "enc.b": (2 * c.d_latent,),
            "disc.emb": (c.vocab_size, c.d_emb),
            "disc.wx": (c.d_emb, 4 * c.d_hidden),
            "disc.wh": (c.d_hidden, 4 * c.d_hidden),
            "disc.b": (4 * c.d_hidden,),
            "disc.head_w": (c.d_hidden, 1),
            "disc.head_b": (1,),
        }

    def generator_params(self):
        """theta and phi: everything the generator objective trains."""
        return {k: v for k, v in self.params.items() if not k.startswith("disc.")}

    def discriminator_params(self):
        return {k: v for k, v in self.params.items() if k.startswith("disc.")}

    def copy(self) -> "ArnModel":
        clone = ArnModel(self.config)
        for name, p in self.params.items():
            clone.params[name] = Tensor(p.data.copy(), requires_grad=True)
        return clone


def _check_ids(model, ids):
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids < 0) or np.any(ids >= model.config.vocab_size):
        raise VocabError("token id out of vocabulary range")
    return ids


def init_state(model: ArnModel, batch: int, prefix="gen") -> RnnState:
    hdim = model.config.d_hidden
    return RnnState(Tensor(np.zeros((batch, hdim))), Tensor(np.zeros((batch, hdim))))


def encode_first_token(model: ArnModel, x1) -> GaussianPosterior:
    """q(z | x1): embedding + dense layer to (mu, log_var)."""
    ids = _check_ids(model, np.atleast_1d(x1))
    e = gather_rows(model.params["emb"], ids)
    out = e @ model.params["enc.w"] + model.params["enc.b"]
    dz = model.config.d_latent
    mu, log_var = out[:, :dz], out[:, dz:]
    if np.ndim(x1) == 0:
        mu, log_var = mu.reshape(dz), log_var.reshape(dz)
    return GaussianPosterior(mu, log_var)


def decode_first_token(model: ArnModel, z) -> Tensor:
    """p(x1 | z): dense layer from latent to vocabulary logits."""
    z = z if isinstance(z, Tensor) else Tensor(z)
    single = z.data.ndim == 1
    if single:
        z = z.reshape(1, -1)
    if z.shape[1] != model.config.d_latent:
        raise ShapeError(f"latent width {z.shape[1]} != {model.config.d_latent}")
    logits = z @ model.params["dec.w"] + model.params["dec.b"]
    return logits.reshape(model.config.vocab_size) if single else logits


def _lstm(model, prefix, inp, state):
    pre = inp @ model.params[prefix + ".wx"] + state.h @ model.params[prefix + ".wh"] + model.params[prefix + ".b"]
    hc = lstm_cell(pre, state.c)
    hdim = model.config.d_hidden
    return RnnState(hc[:, :hdim], hc[:, hdim:])


def lstm_step(model: ArnModel, inp, state: RnnState):
    """One generator step: (logits over V, next state). inp is (B, d_emb)."""
    inp = inp if isinstance(inp, Tensor) else Tensor(inp)
    new_state = _lstm(model, "gen", inp, state)
    logits = new_state.h @ model.params["gen.proj_w"] + model.params["gen.proj_b"]
    return logits, new_state


def soft_embed(model: ArnModel, rows: Tensor, table="emb") -> Tensor:
    """Probability-weighted embedding lookup: rows (B, V) times the table."""
    return rows @ model.params[table]


def sequence_log_likelihood_batch(model: ArnModel, ids, z) -> tuple:
    """Teacher-forced log-likelihood terms for a (B, T) batch.

    Returns (first_token_logprob, autoregressive_logprob), each shape (B,),
    where the first term is log p(x1 | z) and the second sums steps 2..T.
    """
    ids = _check_ids(model, ids)
    bsz, tlen = ids.shape
    from .tensor import pick  # local import avoids a cycle in doc tooling

    lp1 = pick(decode_first_token(model, z).log_softmax(), ids[:, 0])
    state = init_state(model, bsz)
    ar = Tensor(np.zeros(bsz))
    inp = gather_rows(model.params["emb"], ids[:, 0])
    for i in range(1, tlen):
        logits, state = lstm_step(model, inp, state)
        ar = ar + pick(logits.log_softmax(), ids[:, i])
        inp = gather_rows(model.params["emb"], ids[:, i])
    return lp1, ar


def sequence_log_likelihood(model: ArnModel, seq: TokenSequence, z) -> Tensor:
    """log p(x1|z) + sum_{i>=2} log p(x_i | h_{i-1}) for one sequence."""
    z = z if isinstance(z, Tensor) else Tensor(z)
    lp1, ar = sequence_log_likelihood_batch(model, seq.ids.reshape(1, -1), z.reshape(1, -1))
    return (lp1 + ar).reshape(())


def _sample_rows(probs: np.ndarray, rng, deterministic=False) -> np.ndarray:
    if deterministic:
        return probs.argmax(axis=1)
    cum = probs.cumsum(axis=1)
    cum[:, -1] = 1.0
    u = rng.random(probs.shape[0])
    return (u[:, None] > cum).sum(axis=1)


def generate_batch(model: ArnModel, z: np.ndarray, rng, deterministic=False) -> np.ndarray:
    """Sample (B, T) hard token ids given latent draws z (B, d_z)."""
    with no_grad():
        bsz = z.shape[0]
        probs = decode_first_token(model, Tensor(z)).softmax().data
        ids = np.empty((bsz, model.config.seq_len), dtype=np.int64)
        ids[:, 0] = _sample_rows(probs, rng, deterministic)
        state = init_state(model, bsz)
        for i in range(1, model.config.seq_len):
            inp = gather_rows(model.params["emb"], ids[:, i - 1])
            logits, state = lstm_step(model, inp, state)
            ids[:, i] = _sample_rows(logits.softmax().data, rng, deterministic)
    return ids


def generate(model: ArnModel, mode, rng, seed_token=None, deterministic=False) -> TokenSequence:
    """Sample one sequence.

    mode "noise": z ~ N(0, I). mode "decoded-x1": z ~ q(z | seed_token).
    """
    dz = model.config.d_latent
    if mode == "noise":
        z = rng.standard_normal((1, dz))
    elif mode == "decoded-x1":
        if seed_token is None:
            raise ConfigError("decoded-x1 mode requires a seed token")
        with no_grad():
            q = encode_first_token(model, np.asarray([seed_token]))
            sigma = np.exp(0.5 * q.log_var.data)
            z = q.mu.data + sigma * rng.standard_normal((1, dz))
    else:
        raise ConfigError(f"unknown generation mode {mode!r}")
    ids = generate_batch(model, z, rng, deterministic)
    return TokenSequence(ids[0], model.config.vocab_size)


def generate_relaxed_batch(model: ArnModel, z, cfg: GumbelConfig, rng):
    """Differentiable sampling: list of T relaxed one-hot rows, each (B, V)."""
    z = z if isinstance(z, Tensor) else Tensor(z)
    bsz = z.shape[0]
    vocab = model.config.vocab_size
    rows = []
    logits = decode_first_token(model, z)
    row = gumbel_softmax(logits, cfg, rng.random((bsz, vocab)))
    rows.append(row)
    state = init_state(model, bsz)
    for _ in range(1, model.config.seq_len):
        inp = soft_embed(model, row)
        logits, state = lstm_step(model, inp, state)
        row = gumbel_softmax(logits, cfg, rng.random((bsz, vocab)))
        rows.append(row)
    return rows


def generate_relaxed(model: ArnModel, z, cfg: GumbelConfig, rng):
    """Single-sequence relaxed sample: list of T rows of shape (1, V)."""
    z = z if isinstance(z, Tensor) else Tensor(z)
    return generate_relaxed_batch(model, z.reshape(1, -1), cfg, rng)


def one_hot_rows(ids: np.ndarray, vocab_size: int):
    """Exact one-hot SoftSequence rows for a (B, T) hard batch."""
    ids = np.asarray(ids, dtype=np.int64)
    rows = []
    for i in range(ids.shape[1]):
        row = np.zeros((ids.shape[0], vocab_size))
        row[np.arange(ids.shape[0]), ids[:, i]] = 1.0
        rows.append(Tensor(row))
    return rows


def discriminator_score_batch(model: ArnModel, rows) -> Tensor:
    """Pre-sigmoid discriminator score, shape (B,). rows: list of (B, V)."""
    bsz = rows[0].shape[0]
    state = init_state(model, bsz)
    for row in rows:
        inp = soft_embed(model, row, table="disc.emb")
        state = _lstm(model, "disc", inp, state)
    score = state.h @ model.params["disc.head_w"] + model.params["disc.head_b"]
    return score.reshape(bsz)


def discriminate(model: ArnModel, seq) -> Tensor:
    """D(X) in (0, 1) for a TokenSequence or a SoftSequence (list of rows)."""
    if isinstance(seq, TokenSequence):
        rows = one_hot_rows(seq.ids.reshape(1, -1), model.config.vocab_size)
    else:
        rows = [r if r.data.ndim == 2 else r.reshape(1, -1) for r in seq]
    return discriminator_score_batch(model, rows).sigmoid().reshape(())
