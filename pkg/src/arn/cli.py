"""Command-line surface: train, generate, evaluate, gradcheck, divlab.

Exit codes: 0 success, 2 usage/input error, 3 numeric abort. A JSON config
file may be supplied with --config; explicit flags win over its keys.
"""

import argparse
import json
import sys

import numpy as np

from . import corpus as corpus_mod
from . import divlab, metrics, networks, training
from .errors import ArnError, EmptyInputError, NumericsError, TrainingAborted
from .networks import ArnConfig, ArnModel
from .tensor import Tensor, grad_check

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _merge_config(args, parser):
    """Overlay JSON config-file values under explicitly passed flags."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        file_cfg = json.load(fh)
    passed = {
        action.dest
        for action in parser._actions
        for opt in action.option_strings
        if opt in sys.argv
    }
    for key, value in file_cfg.items():
        if hasattr(args, key) and key not in passed:
            setattr(args, key, value)
    return args


def _load_tokenized(path, t_len, vocab_size):
    """Read a corpus file of space-separated tokens into id sequences.

    Numeric tokens are treated as raw ids when no vocabulary is involved.
    """
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            if toks:
                seqs.append([int(t) for t in toks])
    return seqs


def cmd_train(args):
    model_cfg = ArnConfig.preset(args.preset)
    vocab = None
    if args.vocab:
        vocab = corpus_mod.Vocabulary.load(args.vocab)
        model_cfg.vocab_size = len(vocab)
    if vocab is not None:
        ids = corpus_mod.load_corpus(args.corpus, vocab, model_cfg.seq_len)
    else:
        seqs = _load_tokenized(args.corpus, model_cfg.seq_len, model_cfg.vocab_size)
        if not seqs:
            raise EmptyInputError(f"{args.corpus}: empty corpus")
        ids = np.asarray(seqs, dtype=np.int64)
        model_cfg.seq_len = ids.shape[1]
    train_cfg = training.TrainConfig(
        batch_size=args.batch_size,
        steps=args.steps,
        lr=args.lr,
        lambda_adv=args.lambda_adv,
        seed=args.seed,
    )
    rngs = training.rng_streams(args.seed)
    model = ArnModel.initialized(model_cfg, rngs["init"])
    training.train(model, ids, train_cfg, checkpoint_path=args.out, trace_path=args.trace)
    print(f"checkpoint written to {args.out}")
    return EXIT_OK


def cmd_generate(args):
    model = training.load_checkpoint(args.checkpoint)
    vocab = corpus_mod.Vocabulary.load(args.vocab) if args.vocab else None
    rng = training.rng_streams(args.seed)["noise"]
    first_dist = None
    if args.mode == "decoded-x1":
        if args.seed_corpus:
            vocab_for_ids = vocab
            if vocab_for_ids is not None:
                ids = corpus_mod.load_corpus(args.seed_corpus, vocab_for_ids, model.config.seq_len)
            else:
                ids = np.asarray(
                    _load_tokenized(args.seed_corpus, model.config.seq_len, model.config.vocab_size),
                    dtype=np.int64,
                )
            first_dist = corpus_mod.first_token_distribution(ids)
        else:
            first_dist = np.full(model.config.vocab_size, 1.0 / model.config.vocab_size)
    lines = []
    for _ in range(args.count):
        seed_token = None
        if args.mode == "decoded-x1":
            seed_token = int(rng.choice(len(first_dist), p=first_dist))
        seq = networks.generate(model, args.mode, rng, seed_token=seed_token)
        toks = vocab.decode(seq.ids) if vocab else [str(i) for i in seq.ids]
        lines.append(" ".join(toks))
    out = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def _read_token_corpus(path):
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            if toks:
                seqs.append(toks)
    return seqs


def cmd_evaluate(args):
    generated = _read_token_corpus(args.generated)
    test = _read_token_corpus(args.test)
    if not generated or not test:
        raise EmptyInputError("empty generated or test corpus")
    # score over token strings; map to dense ids for the metric functions
    alphabet = {tok: i for i, tok in enumerate(sorted({t for s in generated + test for t in s}))}
    gen_ids = [[alphabet[t] for t in s] for s in generated]
    test_ids = [[alphabet[t] for t in s] for s in test]
    pad_id = alphabet.get(corpus_mod.PAD_TOKEN.lower())
    orders = tuple(int(o) for o in args.orders.split(","))
    report = metrics.full_report(gen_ids, test_ids, orders=orders, pad_id=pad_id)
    out = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    print(out)
    return EXIT_OK


def gradcheck_report(preset: str, seed: int) -> dict:
    """Finite-difference check of every loss at random small parameters."""
    cfg = ArnConfig.preset(preset)
    rngs = training.rng_streams(seed)
    model = ArnModel.initialized(cfg, rngs["init"])
    ids = rngs["data"].integers(0, cfg.vocab_size, size=(2, cfg.seq_len))
    noise = rngs["noise"].standard_normal((2, cfg.d_latent))
    z_adv = rngs["noise"].standard_normal((2, cfg.d_latent))
    gumbel = rngs["gumbel"].random((cfg.seq_len, 2, cfg.vocab_size))

    class _FixedGumbel:
        def __init__(self):
            self.i = 0

        def random(self, shape):
            row = gumbel[self.i]
            self.i += 1
            return row

    from .distributions import GumbelConfig

    def elbo_loss(m):
        total, _, _, _ = training.elbo_batch(m, ids, noise)
        return -total.mean()

    def disc_loss(m):
        from .tensor import no_grad

        with no_grad():
            fake = networks.generate_relaxed_batch(m, z_adv, GumbelConfig(0.8), _FixedGumbel())
            fake = [Tensor(r.data.copy()) for r in fake]
        return training.discriminator_loss(m, ids, fake)

    def gen_adv_loss(m):
        rows = networks.generate_relaxed_batch(m, z_adv, GumbelConfig(0.8), _FixedGumbel())
        s_fake = networks.discriminator_score_batch(m, rows)
        return elbo_loss(m) + (-s_fake).log_sigmoid().mean()

    report = {}
    for loss_name, fn, param_filter in (
        ("elbo", elbo_loss, lambda n: not n.startswith("disc.")),
        ("discriminator", disc_loss, lambda n: n.startswith("disc.")),
        ("generator", gen_adv_loss, lambda n: not n.startswith("disc.")),
    ):
        worst = 0.0
        for name, p in model.params.items():
            if not param_filter(name):
                continue

            def probe(x, _name=name, _fn=fn):
                trial = ArnModel(model.config, dict(model.params))
                trial.params[_name] = x
                return _fn(trial)

            worst = max(worst, grad_check(probe, p))
        report[loss_name] = worst
    return report


def cmd_gradcheck(args):
    report = gradcheck_report(args.preset, args.seed)
    print(json.dumps(report))
    return EXIT_OK if max(report.values()) <= 1e-4 else EXIT_NUMERIC


def cmd_divlab(args):
    if args.trials < 1 or not 2 <= args.outcomes <= 16:
        raise EmptyInputError("need trials >= 1 and 2 <= outcomes <= 16")
    report = divlab.run_lab(args.trials, args.outcomes, args.seed)
    out = json.dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    print(out)
    ok = (
        report["identity_max_gap"] <= 1e-10
        and report["dstar_max_err"] <= 1e-4
        and report["nash_tv"] <= 1e-3
    )
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="arn", description="Adversarial autoregressive sequence model")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    p_train.add_argument("--corpus", required=True)
    p_train.add_argument("--vocab", default=None)
    p_train.add_argument("--preset", default="desk", choices=["desk", "paper"])
    p_train.add_argument("--steps", type=int, default=1000)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--lambda-adv", type=float, default=1.0)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--trace", default=None)
    p_train.add_argument("--config", default=None)
    p_train.set_defaults(func=cmd_train)

    p_gen = sub.add_parser("generate", help="sample sequences from a checkpoint")
    p_gen.add_argument("--checkpoint", required=True)
    p_gen.add_argument("--mode", default="noise", choices=["noise", "decoded-x1"])
    p_gen.add_argument("--count", type=int, default=10)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--vocab", default=None)
    p_gen.add_argument("--seed-corpus", default=None)
    p_gen.add_argument("--out", default=None)
    p_gen.add_argument("--config", default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("evaluate", help="BLEU/FC/Diversity report")
    p_eval.add_argument("--generated", required=True)
    p_eval.add_argument("--test", required=True)
    p_eval.add_argument("--orders", default="2,3")
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--config", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_grad = sub.add_parser("gradcheck", help="finite-difference loss gradients")
    p_grad.add_argument("--preset", default="desk", choices=["desk", "paper"])
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--config", default=None)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_div = sub.add_parser("divlab", help="divergence-equivalence verification")
    p_div.add_argument("--trials", type=int, default=100)
    p_div.add_argument("--outcomes", type=int, default=8)
    p_div.add_argument("--seed", type=int, default=0)
    p_div.add_argument("--out", default=None)
    p_div.add_argument("--config", default=None)
    p_div.set_defaults(func=cmd_divlab)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _merge_config(args, parser)
    try:
        return args.func(args)
    except (OSError, EmptyInputError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericsError, TrainingAborted) as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
