"""Command-line pipeline: gen-data -> train -> eval (+ ablate, gradcheck, report).

Every command echoes its fully-resolved config into the run directory, so a
run is reproducible from the artifacts alone. Exit codes: 0 success,
2 missing file, 3 invalid config or data, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import (
    RunConfig,
    apply_overrides,
    ed_config,
    eval_window,
    gen_config,
    load_run_config,
    model_config,
    resolve_vocab,
    save_run_config,
    scenario_config,
    train_config,
)
from .data import generate_corpus, load_corpus, save_annotations, save_corpus_meta
from .errors import BiantError, ConfigError, NumericalDivergence
from .evaluation import ABLATION_GRIDS, EvalReport, evaluate, run_ablation
from .model import (
    gradient_check,
    load_checkpoint,
    make_gradcheck_case,
    save_checkpoint,
)
from .prompt import TokenSpace, dump_encoding
from .train import build_training_set, train
from .vocab import save_vocabulary

GRADCHECK_TOL = 1e-4


def _resolved(args) -> RunConfig:
    cfg = load_run_config(args.config)
    return apply_overrides(
        cfg,
        out=args.out,
        seed=args.seed,
        preamble=getattr(args, "preamble", None),
        alpha=getattr(args, "alpha", None),
        beta=getattr(args, "beta", None),
        n_obs_bwd=getattr(args, "n_obs_bwd", None),
        k=getattr(args, "k", None),
        workers=getattr(args, "workers", None),
    )


def _prepare_out(cfg: RunConfig, command: str) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_run_config(cfg, out / f"config_{command}.json")
    return out


def _load_corpus(cfg: RunConfig, out: Path):
    vocab = resolve_vocab(cfg)
    corpus = load_corpus(out / "corpus.json", out / "corpus_meta.json", vocab)
    return vocab, corpus


def _max_workers(cfg: RunConfig) -> int:
    cap = os.environ.get("BIANT_THREADS")
    if cap is None:
        return cfg.workers
    try:
        cap = int(cap)
    except ValueError:
        raise ConfigError(f"BIANT_THREADS must be an integer, got {cap!r}") from None
    if cap < 1:
        raise ConfigError("BIANT_THREADS must be >= 1")
    return min(cfg.workers, cap)


def cmd_gen_data(args) -> int:
    cfg = _resolved(args)
    out = _prepare_out(cfg, "gen-data")
    vocab = resolve_vocab(cfg)
    corpus = generate_corpus(vocab, scenario_config(cfg))
    save_vocabulary(vocab, out / "vocab.json")
    save_annotations(corpus.videos, vocab, out / "corpus.json")
    save_corpus_meta(corpus, out / "corpus_meta.json")
    print(f"wrote {len(corpus.videos)} videos to {out / 'corpus.json'} "
          f"(split {len(corpus.train_ids)}/{len(corpus.val_ids)}/{len(corpus.test_ids)}, "
          f"early_late_agreement={corpus.sanity['early_late_agreement']:.3f})")
    return 0


def cmd_train(args) -> int:
    cfg = _resolved(args)
    out = _prepare_out(cfg, "train")
    vocab, corpus = _load_corpus(cfg, out)
    space = TokenSpace(vocab)
    tcfg = train_config(cfg)
    if args.dump_encodings:
        for enc in build_training_set(corpus.train, tcfg, space)[: args.dump_encodings]:
            print(dump_encoding(space, enc))
    params, log = train(corpus.train, tcfg, model_config(cfg, space), space)
    meta = {
        "preamble": cfg.preamble,
        "vocab": cfg.vocab,
        "alpha": cfg.weights.alpha,
        "beta": cfg.weights.beta,
        "n_obs_bwd": cfg.window.n_obs_bwd,
        "seed": cfg.seed,
    }
    save_checkpoint(params, out / "checkpoint.json", meta)
    log.to_csv(out / "train_log.csv")
    print(f"trained {params.num_params} params for {tcfg.epochs} epochs: "
          f"loss {log.first_loss:.4f} -> {log.final_loss:.4f}; "
          f"wrote {out / 'checkpoint.json'}")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolved(args)
    out = _prepare_out(cfg, "eval")
    vocab, corpus = _load_corpus(cfg, out)
    space = TokenSpace(vocab)
    ckpt_path = Path(args.checkpoint) if args.checkpoint else out / "checkpoint.json"
    params, meta = load_checkpoint(ckpt_path)
    if params.config.vocab_size != space.size:
        raise ConfigError(
            f"checkpoint token space ({params.config.vocab_size}) does not match "
            f"the configured vocabulary ({space.size})"
        )
    if meta.get("preamble", cfg.preamble) != cfg.preamble:
        raise ConfigError(
            f"checkpoint was trained with preamble {meta['preamble']!r}; "
            f"pass --preamble to match"
        )
    report = evaluate(params, space, corpus.test, eval_window(cfg),
                      gen_config(cfg), ed_config(cfg), cfg.preamble)
    report.to_json(out / "eval_report.json")
    report.summary_csv(out / "eval_summary.csv")
    print(f"evaluated {report.num_instances} instances: "
          f"ED verb={report.mean_verb:.4f} noun={report.mean_noun:.4f} "
          f"action={report.mean_action:.4f}; wrote {out / 'eval_report.json'}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _resolved(args)
    out = _prepare_out(cfg, f"ablate_{args.grid}")
    vocab, corpus = _load_corpus(cfg, out)
    space = TokenSpace(vocab)
    table = run_ablation(
        args.grid,
        base=train_config(cfg),
        model_cfg=model_config(cfg, space),
        space=space,
        train_videos=corpus.train,
        test_videos=corpus.test,
        seeds=list(cfg.ablate_seeds),
        eval_window=eval_window(cfg),
        gen=gen_config(cfg),
        ed_cfg=ed_config(cfg),
        max_workers=_max_workers(cfg),
    )
    table.to_csv(out / f"ablation_{args.grid}.csv")
    rendered = table.render()
    (out / f"ablation_{args.grid}.txt").write_text(rendered + "\n", encoding="utf-8")
    print(rendered)
    print(f"wrote {out / f'ablation_{args.grid}.csv'}")
    return 0


def cmd_gradcheck(args) -> int:
    cfg = _resolved(args)
    params, batch, weights = make_gradcheck_case(cfg.seed)
    err = gradient_check(params, batch, weights)
    ok = err < GRADCHECK_TOL
    print(f"gradcheck: max relative error {err:.3e} "
          f"({'PASS' if ok else 'FAIL'}, tolerance {GRADCHECK_TOL:g})")
    return 0 if ok else 4


def cmd_report(args) -> int:
    cfg = _resolved(args)
    out = Path(cfg.out)
    if not out.is_dir():
        raise FileNotFoundError(f"run directory not found: {out}")
    shown = False
    report_path = out / "eval_report.json"
    if report_path.exists():
        report = EvalReport.from_json(report_path)
        print(f"eval ({report.num_instances} instances): "
              f"ED verb={report.mean_verb:.4f} noun={report.mean_noun:.4f} "
              f"action={report.mean_action:.4f}")
        shown = True
    log_path = out / "train_log.csv"
    if log_path.exists():
        lines = log_path.read_text(encoding="utf-8").strip().splitlines()
        if len(lines) > 1:
            first, last = lines[1].split(","), lines[-1].split(",")
            print(f"train: {len(lines) - 1} epochs, "
                  f"loss {float(first[1]):.4f} -> {float(last[1]):.4f}")
            shown = True
    for grid in ABLATION_GRIDS:
        txt = out / f"ablation_{grid}.txt"
        if txt.exists():
            print(txt.read_text(encoding="utf-8").rstrip())
            shown = True
    if not shown:
        raise FileNotFoundError(f"no artifacts to report in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biant",
        description="Bidirectional action-sequence training and anticipation benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON run config")
        p.add_argument("--out", metavar="DIR", help="run directory")
        p.add_argument("--seed", type=int, metavar="N", help="master seed")

    p = sub.add_parser("gen-data", help="generate the synthetic corpus")
    common(p)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train a model on the corpus")
    common(p)
    p.add_argument("--alpha", type=float, metavar="F", help="forward loss weight")
    p.add_argument("--beta", type=float, metavar="F", help="backward loss weight")
    p.add_argument("--n-obs-bwd", type=int, metavar="N", help="backward observed length")
    p.add_argument("--preamble", metavar="MODE",
                   help="special | description (task preamble encoding)")
    p.add_argument("--dump-encodings", type=int, default=0, metavar="N",
                   help="print the first N encoded training instances")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p)
    p.add_argument("--checkpoint", metavar="PATH", help="checkpoint (default: OUT/checkpoint.json)")
    p.add_argument("--k", type=int, metavar="N", help="candidates per instance")
    p.add_argument("--preamble", metavar="MODE",
                   help="special | description (must match the checkpoint)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="run one ablation grid")
    common(p)
    p.add_argument("--grid", required=True, choices=sorted(ABLATION_GRIDS),
                   help="which ablation to run")
    p.add_argument("--alpha", type=float, metavar="F")
    p.add_argument("--beta", type=float, metavar="F")
    p.add_argument("--n-obs-bwd", type=int, metavar="N")
    p.add_argument("--preamble", metavar="MODE")
    p.add_argument("--k", type=int, metavar="N")
    p.add_argument("--workers", type=int, metavar="N",
                   help="parallel cells (also capped by BIANT_THREADS)")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradient")
    common(p)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("report", help="summarize artifacts in a run directory")
    common(p)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as err:
        print(f"error: missing file: {err}", file=sys.stderr)
        return 2
    except NumericalDivergence as err:
        print(f"error: numerical divergence: {err}", file=sys.stderr)
        return 4
    except BiantError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
