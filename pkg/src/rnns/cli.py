"""Command-line entry point: ``rnns <subcommand> ...``.

Every subcommand that writes an artifact also writes ``<out>.manifest.json``
recording the subcommand, the resolved flags, input digests and the tool
version.  Outputs are written atomically; a failed run leaves nothing behind.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .attack import AttackConfig, attack_dataset
from .corpus import CorpusError, build_corpus, load_corpus, save_corpus
from .datasets import generate_dataset, load_dataset, save_dataset
from .encoder import DEFAULT_HASH_SEED, DEFAULT_OFFSET, Encoder, EncoderConfig
from .lexing import LANGUAGES
from .metrics import load_report, render
from .nnsearch import SearchConstraints
from .victim import TrainConfig, VictimError, load_model, resolve_victim, save_model, serve, train_toy

log = logging.getLogger("rnns")

JOBS_ENV = "RNNS_JOBS"


def _digest(path: str) -> str | None:
    p = Path(path)
    if p.is_file():
        return hashlib.sha256(p.read_bytes()).hexdigest()
    return None


def manifest(args: argparse.Namespace, inputs: list[str], outputs: list[str]) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    return {
        "tool": "rnns",
        "version": __version__,
        "subcommand": args.command,
        "flags": flags,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": outputs,
        "rng_seed": flags.get("seed"),
    }


def _write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _write_manifest(out: str, man: dict) -> None:
    _write_atomic(out + ".manifest.json", json.dumps(man, sort_keys=True, indent=1) + "\n")


def _require_file(parser: argparse.ArgumentParser, path: str, flag: str) -> None:
    if not Path(path).is_file():
        parser.error(f"{flag}: no such file: {path}")


# --- subcommands ---------------------------------------------------------------

def cmd_corpus_build(args, parser):
    for p in args.input:
        if not Path(p).exists():
            parser.error(f"--input: no such file or directory: {p}")
    encoder = Encoder(EncoderConfig(args.dim, args.hash_seed, args.table, args.offset))
    corpus = build_corpus(args.input, args.lang, encoder)
    save_corpus(corpus, args.out)
    man = manifest(args, args.input, [args.out])
    man["corpus"] = {"size": len(corpus), "skipped_inputs": corpus.skipped, "fingerprint": corpus.fingerprint}
    _write_manifest(args.out, man)
    print(f"corpus: {len(corpus)} names -> {args.out}")


def cmd_victim_train(args, parser):
    _require_file(parser, args.data, "--data")
    data = load_dataset(args.data)
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, seed=args.seed, n_features=args.features)
    model = train_toy(data, cfg, n_classes=args.classes)
    save_model(model, args.out)
    man = manifest(args, [args.data], [args.out])
    man["train_accuracy"] = model.train_accuracy
    _write_manifest(args.out, man)
    print(f"toy victim: {model.n_classes} classes, train accuracy {model.train_accuracy:.4f} -> {args.out}")


def cmd_victim_serve(args, parser):
    _require_file(parser, args.model, "--model")
    serve(load_model(args.model), args.port, args.host)


def cmd_datagen(args, parser):
    units = generate_dataset(args.classes, args.per_class, args.lang, args.seed,
                             own_task_p=args.own_task_p, class_name_p=args.class_name_p)
    save_dataset(units, args.out)
    _write_manifest(args.out, manifest(args, [], [args.out]))
    print(f"dataset: {len(units)} samples -> {args.out}")


def _encoder_for(corpus_path: str, table: str | None) -> Encoder:
    with open(corpus_path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
    fp = header.get("fingerprint", {})
    return Encoder(EncoderConfig(fp.get("dimension", header.get("dimension")), fp.get("hash_seed", DEFAULT_HASH_SEED),
                                 table, fp.get("offset", DEFAULT_OFFSET)))


def cmd_attack(args, parser):
    _require_file(parser, args.dataset, "--dataset")
    _require_file(parser, args.corpus, "--corpus")
    constraints = SearchConstraints(args.epsilon, args.delta, args.topk, args.unlimited)
    cfg = AttackConfig(max_itr=args.max_itr, alpha=args.alpha, constraints=constraints, rng_seed=args.seed,
                       count_uncertainty_queries=not args.exclude_uncertainty_queries)
    encoder = _encoder_for(args.corpus, args.table)
    corpus = load_corpus(args.corpus, encoder)
    victim = resolve_victim(args.victim)
    dataset = load_dataset(args.dataset)
    report = attack_dataset(dataset, victim, corpus, cfg, attacker=args.attacker, encoder=encoder, jobs=args.jobs)
    inputs = [args.dataset, args.corpus]
    if args.victim.startswith("toy:"):
        inputs.append(args.victim[4:])
    man = manifest(args, inputs, [args.out])
    man["flags"].pop("jobs")  # parallelism never changes the report
    man["search_constraints"] = {**constraints.__dict__, "reference": "original variable"}
    report.manifest = man
    _write_atomic(args.out, render(report, "json"))
    _write_manifest(args.out, man)
    sys.stdout.write(render(report, "table"))


def cmd_report(args, parser):
    _require_file(parser, args.input, "--in")
    sys.stdout.write(render(load_report(args.input), args.format))


def cmd_export_adversarial(args, parser):
    _require_file(parser, args.input, "--in")
    report = load_report(args.input)
    units = [r.adversarial for r in report.results if r.success]
    save_dataset(units, args.out)
    _write_manifest(args.out, manifest(args, [args.input], [args.out]))
    print(f"exported {len(units)} adversarial examples -> {args.out}")


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rnns", description="Representation nearest-neighbor search attacks on code classifiers")
    p.add_argument("--version", action="version", version=f"rnns {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("corpus-build", help="mine a substitute corpus from source files or dataset files")
    s.add_argument("--lang", choices=LANGUAGES, required=True)
    s.add_argument("--input", nargs="+", required=True, help="directories of source files and/or .jsonl datasets")
    s.add_argument("--out", required=True)
    s.add_argument("--dim", type=int, default=64)
    s.add_argument("--hash-seed", type=int, default=DEFAULT_HASH_SEED)
    s.add_argument("--offset", type=float, default=DEFAULT_OFFSET, help="shared component of trigram vectors")
    s.add_argument("--table", help="embedding table overriding the built-in encoder")
    s.set_defaults(func=cmd_corpus_build)

    s = sub.add_parser("victim-train", help="train the toy softmax-regression victim")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--classes", type=int)
    s.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    s.add_argument("--lr", type=float, default=TrainConfig.lr)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--features", type=int, default=TrainConfig.n_features)
    s.set_defaults(func=cmd_victim_train)

    s = sub.add_parser("victim-serve", help="serve a toy victim over HTTP (POST /classify)")
    s.add_argument("--model", required=True)
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--host", default="127.0.0.1")
    s.set_defaults(func=cmd_victim_serve)

    s = sub.add_parser("datagen", help="generate a synthetic labeled dataset")
    s.add_argument("--classes", type=int, default=8)
    s.add_argument("--per-class", type=int, default=100)
    s.add_argument("--lang", choices=LANGUAGES, default="java")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--own-task-p", type=float, default=0.6)
    s.add_argument("--class-name-p", type=float, default=0.75)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_datagen)

    d = AttackConfig()
    s = sub.add_parser("attack", help="attack every sample of a dataset")
    s.add_argument("--dataset", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--victim", required=True, help="toy:PATH or http:URL")
    s.add_argument("--attacker", choices=("rnns", "random"), default="rnns")
    s.add_argument("--max-itr", type=int, default=d.max_itr)
    s.add_argument("--alpha", type=float, default=d.alpha)
    s.add_argument("--epsilon", type=float, default=d.constraints.epsilon)
    s.add_argument("--delta", type=int, default=d.constraints.delta)
    s.add_argument("--topk", type=int, default=d.constraints.k)
    s.add_argument("--seed", type=int, default=d.rng_seed)
    s.add_argument("--unlimited", action="store_true", help="disable the similarity and length constraints")
    s.add_argument("--exclude-uncertainty-queries", action="store_true",
                   help="leave uncertainty probes out of the query count")
    s.add_argument("--table", help="embedding table the corpus was built with")
    s.add_argument("--jobs", type=int, default=int(os.environ.get(JOBS_ENV, "1")))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("report", help="render a saved attack report")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("export-adversarial", help="write successful adversarial examples as a dataset")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_adversarial)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = getattr(args, "out", None)
    try:
        args.func(args, parser)
    except (CorpusError, VictimError, ValueError, OSError) as exc:
        if out:
            for p in (out, out + ".manifest.json"):
                if os.path.exists(p):
                    os.remove(p)
        print(f"rnns {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
