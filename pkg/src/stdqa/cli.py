"""Command-line entry points: training, generation, import, ask, eval, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import kb as kb_mod
from . import nertagger, qgen, simnet, textcore


def _build_tokenizer(texts: list[str], args) -> textcore.Tokenizer:
    lexicon = textcore.load_lexicon(args.lexicon) if args.lexicon else frozenset()
    seg = textcore.SegmenterConfig(mode=args.segmenter, lexicon=lexicon)
    corpus = [textcore.segment(t, seg) for t in texts]
    vocab = textcore.build_vocab(corpus, min_count=args.min_count)
    return textcore.Tokenizer(vocab=vocab, segmenter=seg)


def _write_history(path, history) -> None:
    Path(path).write_text(
        json.dumps(history, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def _cmd_train_sim(args) -> int:
    raw = []
    with open(args.data, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw.append(json.loads(line))
    tokenizer = _build_tokenizer(
        [r["q1"] for r in raw] + [r["q2"] for r in raw], args
    )
    pairs = [
        simnet.PairExample(tokenizer(r["q1"]), tokenizer(r["q2"]), int(r["label"]))
        for r in raw
    ]
    config = simnet.SimModelConfig(
        vocab_size=tokenizer.vocab.size,
        embed_dim=args.dim,
        hidden_dim=args.hidden,
        max_len=args.max_len,
        interactive_attention=not args.no_attention,
        pooling=args.pooling,
        seed=args.seed,
    )
    model, history = simnet.train_sim(
        pairs, config, epochs=args.epochs, batch_size=args.batch_size,
        lr=args.lr, tokenizer=tokenizer,
    )
    simnet.save_sim_checkpoint(args.out, model)
    if args.history_out:
        _write_history(args.history_out, history)
    last = history[-1]
    print(json.dumps({"epochs": args.epochs, "final": last}, ensure_ascii=False, sort_keys=True))
    return 0


def _cmd_train_ner(args) -> int:
    dataset = nertagger.load_ner_file(args.data)
    config = nertagger.NerConfig(
        embed_dim=args.dim, hidden_dim=args.hidden, lr=args.lr,
        batch_size=args.batch_size, seed=args.seed,
    )
    model, history = nertagger.train_ner(dataset, config, epochs=args.epochs)
    nertagger.save_ner_checkpoint(args.out, model)
    if args.history_out:
        _write_history(args.history_out, history)
    accuracy = nertagger.tag_accuracy(model, dataset)
    print(json.dumps({"epochs": args.epochs, "final_loss": history[-1]["loss"],
                      "train_tag_accuracy": accuracy}, sort_keys=True))
    return 0


def _cmd_generate(args) -> int:
    model = nertagger.load_ner_checkpoint(args.ner)
    imap = qgen.InterrogativeMap.load(args.map) if args.map else qgen.InterrogativeMap.default()
    sentences = []
    metas = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                obj = json.loads(line)
                sentences.append(obj["text"])
                metas.append((obj.get("doc", args.doc), obj.get("section", args.section)))
            else:
                sentences.append(line)
                metas.append((args.doc, args.section))
    pairs = []
    for sentence, (doc, section) in zip(sentences, metas):
        pairs.extend(qgen.generate_corpus([sentence], model, imap, doc=doc, section=section))
    qgen.write_pairs_jsonl(args.out, pairs)
    print(json.dumps({"sentences": len(sentences), "pairs": len(pairs)}))
    return 0


def _open_store(path: str) -> kb_mod.KbStore:
    p = Path(path)
    if p.is_file():
        return kb_mod.KbStore.from_file(p)
    return kb_mod.KbStore(p)


def _cmd_import(args) -> int:
    store = kb_mod.KbStore(args.kb)
    added = store.import_json(args.file)
    print(json.dumps({"added": added}))
    return 0


def _cmd_ask(args) -> int:
    model = simnet.load_sim_checkpoint(args.model)
    store = _open_store(args.kb)
    results = kb_mod.retrieve(
        args.question, store, model, top_k=args.top_k, prefilter_m=args.prefilter_m,
    )
    for qr in results:
        print(json.dumps({
            "question": qr.record.question,
            "answer": qr.record.answer,
            "score": qr.score,
            "source": qr.record.source,
        }, ensure_ascii=False, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    model = simnet.load_sim_checkpoint(args.model)
    if model.tokenizer is None:
        print("checkpoint lacks a tokenizer", file=sys.stderr)
        return 1
    pairs = simnet.load_pair_file(args.data, model.tokenizer)
    accuracy = simnet.eval_accuracy(model, pairs, threshold=args.threshold)
    print(json.dumps({"pairs": len(pairs), "accuracy": accuracy}, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config_path = args.config or os.environ.get("QA_CONFIG")
    if config_path:
        config = ServiceConfig.from_file(config_path)
    else:
        if not (args.sim_model and args.kb):
            print("serve requires --config or both --sim-model and --kb", file=sys.stderr)
            return 2
        config = ServiceConfig(sim_model=args.sim_model, kb_path=args.kb)
    if args.sim_model:
        config.sim_model = args.sim_model
    if args.kb:
        config.kb_path = args.kb
    if args.ner_model:
        config.ner_model = args.ner_model
    if args.vocab:
        config.vocab = args.vocab
    if args.prefilter_m is not None:
        config.prefilter_m = args.prefilter_m
    if args.top_k_cap is not None:
        config.top_k_cap = args.top_k_cap
    if args.static_dir:
        config.static_dir = args.static_dir
    if args.docs_dir:
        config.docs_dir = args.docs_dir
    if args.bind:
        host, _, port = args.bind.rpartition(":")
        config.host = host or "127.0.0.1"
        config.port = int(port)
    serve(config)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stdqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-sim", help="train the sentence-pair similarity model")
    p.add_argument("--data", required=True, help="JSONL of {q1,q2,label}")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--segmenter", choices=("char", "maxmatch"), default="char")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--no-attention", action="store_true", help="plain-BiLSTM ablation")
    p.add_argument("--pooling", choices=("mean", "max"), default="mean")
    p.add_argument("--out", required=True)
    p.add_argument("--history-out", default=None)
    p.set_defaults(func=_cmd_train_sim)

    p = sub.add_parser("train-ner", help="train the BiLSTM-CRF tagger")
    p.add_argument("--data", required=True, help="JSONL of {text:[...], tags:[...]}")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--history-out", default=None)
    p.set_defaults(func=_cmd_train_ner)

    p = sub.add_parser("generate", help="generate question-answer pairs from a corpus")
    p.add_argument("--corpus", required=True, help="text lines or JSONL with {text, doc, section}")
    p.add_argument("--ner", required=True, help="tagger checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--map", default=None, help="interrogative override file")
    p.add_argument("--doc", default="")
    p.add_argument("--section", default="")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("import", help="import records into a knowledge store")
    p.add_argument("--kb", required=True, help="store directory")
    p.add_argument("--file", required=True)
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("ask", help="query the knowledge store")
    p.add_argument("--kb", required=True, help="store directory or record JSON file")
    p.add_argument("--model", required=True, help="similarity checkpoint")
    p.add_argument("--question", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--prefilter-m", type=int, default=0)
    p.set_defaults(func=_cmd_ask)

    p = sub.add_parser("eval", help="evaluate a similarity model on labeled pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None, help="JSON config (or QA_CONFIG env var)")
    p.add_argument("--bind", default=None, help="host:port")
    p.add_argument("--kb", default=None)
    p.add_argument("--sim-model", default=None)
    p.add_argument("--ner-model", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--prefilter-m", type=int, default=None)
    p.add_argument("--top-k-cap", type=int, default=None)
    p.add_argument("--static-dir", default=None)
    p.add_argument("--docs-dir", default=None)
    p.add_argument("--seed", type=int, default=None, help="reserved")
    p.set_defaults(func=_cmd_serve)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, kb_mod.KbError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
