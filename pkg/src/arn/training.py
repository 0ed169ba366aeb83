"""Training objectives, Adam optimizer, alternating loop, checkpoint I/O.

Sign conventions: both losses are minimized. The generator loss is the
negated variational lower bound plus lambda_adv times the mean of
log(1 - D(G(z))) (the saturating form as written; a non-saturating variant
-log D(G(z)) sits behind a flag). The discriminator loss is the standard
binary cross-entropy -log D(real) - log(1 - D(fake)).
"""

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import networks
from .distributions import GumbelConfig, kl_gauss_std, reparam_sample
from .errors import ConfigError, NumericsError, TrainingAborted
from .networks import ArnConfig, ArnModel
from .tensor import Tensor, no_grad

CHECKPOINT_MAGIC = b"ARN1"
CHECKPOINT_VERSION = 1

# fixed sub-stream ids so every source of randomness hangs off one seed
_STREAMS = {"init": 0, "noise": 1, "gumbel": 2, "data": 3}


def rng_streams(seed: int) -> dict:
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sid])))
        for name, sid in _STREAMS.items()
    }


@dataclass
class LossBreakdown:
    reconstruction: float = 0.0
    kl_term: float = 0.0
    ar_loglik: float = 0.0
    adversarial: float = 0.0
    total_generator: float = 0.0
    total_discriminator: float = 0.0


@dataclass
class TrainConfig:
    batch_size: int = 32
    steps: int = 1000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_adv: float = 1.0
    d_steps: int = 1
    g_steps: int = 1
    tau_start: float = 1.0
    tau_end: float = 0.2
    hard: bool = False
    non_saturating: bool = False
    seed: int = 0
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lambda_adv < 0:
            raise ConfigError("lambda_adv must be >= 0")

    def tau_at(self, step: int) -> float:
        """Exponential anneal from tau_start to tau_end over the run."""
        if self.steps <= 1:
            return self.tau_end
        frac = min(step, self.steps - 1) / (self.steps - 1)
        return float(self.tau_start * (self.tau_end / self.tau_start) ** frac)


def elbo_batch(model: ArnModel, ids: np.ndarray, noise: np.ndarray):
    """Per-sample lower-bound terms for a (B, T) batch.

    Returns (total, recon, kl, ar), each a shape-(B,) Tensor, with
    total = ar - kl + recon. noise is a (B, d_z) standard-normal draw for
    the single-sample reparameterized reconstruction estimate.
    """
    q = networks.encode_first_token(model, ids[:, 0])
    z = reparam_sample(q, noise)
    kl = kl_gauss_std(q)
    recon, ar = networks.sequence_log_likelihood_batch(model, ids, z)
    return ar - kl + recon, recon, kl, ar


def elbo(model: ArnModel, seq: networks.TokenSequence, noise) -> LossBreakdown:
    """Single-sequence lower bound, reported as a LossBreakdown."""
    total, recon, kl, ar = elbo_batch(model, seq.ids.reshape(1, -1), np.reshape(noise, (1, -1)))
    out = LossBreakdown(
        reconstruction=float(recon.data[0]),
        kl_term=float(kl.data[0]),
        ar_loglik=float(ar.data[0]),
    )
    out.total_generator = -float(total.data[0])
    return out


def _detach_rows(rows):
    return [Tensor(r.data.copy()) for r in rows]


def discriminator_loss(model: ArnModel, real_ids: np.ndarray, fake_rows) -> Tensor:
    """Mean of -log D(real) - log(1 - D(fake)); fake rows must be detached."""
    if len(real_ids) == 0 or len(fake_rows) == 0 or fake_rows[0].shape[0] == 0:
        raise ConfigError("empty batch")
    real_rows = networks.one_hot_rows(real_ids, model.config.vocab_size)
    s_real = networks.discriminator_score_batch(model, real_rows)
    s_fake = networks.discriminator_score_batch(model, fake_rows)
    # log D = log_sigmoid(s); log(1 - D) = log_sigmoid(-s)
    return (-s_real.log_sigmoid() - (-s_fake).log_sigmoid()).mean()


def generator_loss(model: ArnModel, real_ids: np.ndarray, cfg: TrainConfig, rngs, tau=None):
    """Total generator objective on a real batch.

    Returns (loss Tensor, LossBreakdown). Discriminator parameters take part
    in the forward pass but are not updated by the caller on this path.
    """
    if len(real_ids) == 0:
        raise ConfigError("empty batch")
    bsz = real_ids.shape[0]
    dz = model.config.d_latent
    noise = rngs["noise"].standard_normal((bsz, dz))
    total, recon, kl, ar = elbo_batch(model, real_ids, noise)
    loss = -total.mean()
    breakdown = LossBreakdown(
        reconstruction=float(recon.data.mean()),
        kl_term=float(kl.data.mean()),
        ar_loglik=float(ar.data.mean()),
    )
    if cfg.lambda_adv > 0:
        gcfg = GumbelConfig(temperature=cfg.tau_start if tau is None else tau, hard=cfg.hard)
        z = rngs["noise"].standard_normal((bsz, dz))
        rows = networks.generate_relaxed_batch(model, z, gcfg, rngs["gumbel"])
        s_fake = networks.discriminator_score_batch(model, rows)
        if cfg.non_saturating:
            adv = -s_fake.log_sigmoid()
        else:
            adv = (-s_fake).log_sigmoid()
        breakdown.adversarial = float(adv.data.mean())
        loss = loss + cfg.lambda_adv * adv.mean()
    breakdown.total_generator = float(loss.data)
    return loss, breakdown


@dataclass
class AdamState:
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def optimizer_step(params: dict, state: AdamState, cfg: TrainConfig, lr=None):
    """Bias-corrected Adam on every param with a populated grad.

    Raises NumericsError (without touching any parameter) when a gradient is
    non-finite, so callers can reject the step.
    """
    from . import kernels

    lr = cfg.lr if lr is None else lr
    grads = {}
    for name, p in params.items():
        if p.grad is None:
            continue
        if not np.all(np.isfinite(p.grad)):
            raise NumericsError(f"non-finite gradient in {name}")
        grads[name] = p.grad
    state.t += 1
    for name, g in grads.items():
        p = params[name]
        if name not in state.m:
            state.m[name] = np.zeros(p.data.size)
            state.v[name] = np.zeros(p.data.size)
        flat = p.data.reshape(-1)
        kernels.adam_update(
            flat, g.reshape(-1).astype(np.float64), state.m[name], state.v[name],
            state.t, lr, cfg.beta1, cfg.beta2, cfg.eps,
        )


def sample_batch(corpus_ids: np.ndarray, batch_size: int, rng) -> np.ndarray:
    idx = rng.integers(0, corpus_ids.shape[0], size=batch_size)
    return corpus_ids[idx]


def train(model: ArnModel, corpus_ids: np.ndarray, cfg: TrainConfig,
          checkpoint_path=None, trace_path=None):
    """Alternating adversarial training.

    corpus_ids is an (N, T) int array. Returns (model, trace) where trace is
    one dict per step with the breakdown fields. With lambda_adv == 0 the
    adversarial machinery (discriminator updates, relaxed sampling) is
    skipped entirely and training is pure VAE+AR maximum likelihood.
    """
    corpus_ids = np.asarray(corpus_ids, dtype=np.int64)
    if corpus_ids.size == 0:
        raise ConfigError("empty corpus")
    rngs = rng_streams(cfg.seed)
    g_state, d_state = AdamState(), AdamState()
    trace = []
    lr = cfg.lr
    halved = False
    trace_file = open(trace_path, "w", encoding="utf-8") if trace_path else None
    try:
        for step in range(cfg.steps):
            tau = cfg.tau_at(step)
            d_loss_val = 0.0
            try:
                if cfg.lambda_adv > 0:
                    for _ in range(cfg.d_steps):
                        batch = sample_batch(corpus_ids, cfg.batch_size, rngs["data"])
                        with no_grad():
                            z = rngs["noise"].standard_normal((cfg.batch_size, model.config.d_latent))
                            fake = networks.generate_relaxed_batch(
                                model, z, GumbelConfig(temperature=tau, hard=cfg.hard), rngs["gumbel"]
                            )
                        d_loss = discriminator_loss(model, batch, _detach_rows(fake))
                        d_loss.backward()
                        optimizer_step(model.discriminator_params(), d_state, cfg, lr=lr)
                        d_loss_val = float(d_loss.data)
                breakdown = LossBreakdown()
                for _ in range(cfg.g_steps):
                    batch = sample_batch(corpus_ids, cfg.batch_size, rngs["data"])
                    g_loss, breakdown = generator_loss(model, batch, cfg, rngs, tau=tau)
                    if not np.isfinite(g_loss.data):
                        raise NumericsError("non-finite generator loss")
                    g_loss.backward()
                    optimizer_step(model.generator_params(), g_state, cfg, lr=lr)
            except NumericsError as exc:
                if halved:
                    if checkpoint_path:
                        save_checkpoint(checkpoint_path, model)
                    raise TrainingAborted(f"NaN recurrence at step {step}: {exc}") from exc
                halved = True
                lr *= 0.5
                continue
            breakdown.total_discriminator = d_loss_val
            record = {
                "step": step,
                "d_loss": d_loss_val,
                "g_loss": breakdown.total_generator,
                "recon": breakdown.reconstruction,
                "kl": breakdown.kl_term,
                "ar_loglik": breakdown.ar_loglik,
                "adv": breakdown.adversarial,
                "tau": tau,
            }
            trace.append(record)
            if trace_file:
                trace_file.write(json.dumps(record) + "\n")
            if checkpoint_path and cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(checkpoint_path, model)
    finally:
        if trace_file:
            trace_file.close()
    if checkpoint_path:
        save_checkpoint(checkpoint_path, model)
    return model, trace


# ---------------------------------------------------------------------------
# checkpoint format: magic "ARN1", u16 version, u32 tensor count, then per
# tensor: u16 name length + UTF-8 name, u8 rank, u64 extents, u8 dtype tag
# (0 = f32, 1 = f64); raw little-endian payloads follow in manifest order.
# ---------------------------------------------------------------------------

_DTYPE_TAGS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_TAG_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}

_META_PREFIX = "meta."
_META_FIELDS = ("seq_len", "vocab_size", "d_emb", "d_hidden", "d_latent")


def save_checkpoint(path, model: ArnModel):
    entries = [(f"{_META_PREFIX}{f}", np.float64(getattr(model.config, f))) for f in _META_FIELDS]
    entries += sorted(model.params.items())
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<H", CHECKPOINT_VERSION))
    buf.write(struct.pack("<I", len(entries)))
    arrays = []
    for name, value in entries:
        arr = value.data if isinstance(value, Tensor) else np.asarray(value)
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<B", arr.ndim))
        for extent in arr.shape:
            buf.write(struct.pack("<Q", extent))
        buf.write(struct.pack("<B", _DTYPE_TAGS[arr.dtype]))
        arrays.append(arr)
    for arr in arrays:
        buf.write(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> ArnModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    view = io.BytesIO(raw)
    if view.read(4) != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path}: not an ARN checkpoint")
    (version,) = struct.unpack("<H", view.read(2))
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    (count,) = struct.unpack("<I", view.read(4))
    manifest = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", view.read(2))
        name = view.read(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", view.read(1))
        shape = tuple(struct.unpack("<Q", view.read(8))[0] for _ in range(rank))
        (tag,) = struct.unpack("<B", view.read(1))
        manifest.append((name, shape, _TAG_DTYPES[tag]))
    tensors = {}
    for name, shape, dtype in manifest:
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if shape else dtype.itemsize
        data = np.frombuffer(view.read(nbytes), dtype=dtype).reshape(shape)
        tensors[name] = data
    meta = {f: int(tensors.pop(_META_PREFIX + f).reshape(())) for f in _META_FIELDS}
    model = ArnModel(ArnConfig(**meta))
    for name, data in tensors.items():
        model.params[name] = Tensor(data.copy(), requires_grad=True)
    return model
