"""Single command-line entry point for the pipeline.

Subcommands: parse, split, select-universe, generate, mix, eval, ner, serve.
Machine-readable outputs go to files, human logs to stderr. Exit codes:
0 success, 1 validation/usage error, 2 runtime error. All randomness derives
from --seed (default 42). A flat key=value --config file fills in any flag
not given on the command line; flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus, datagen, medner, metrics, negex
from .ensemble import EnsembleConfig
from .errors import BackendError, EmptyEvalSet, MedensError
from .llmclient import EchoBackend, EndpointConfig, HttpBackend, MockBackend, RetryPolicy, with_retries
from .prompt import DEFAULT_CONFIG

log = logging.getLogger("medens")

DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for runtime
    failures, so usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    config: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        config[key.strip()] = value.strip()
    return config


def _merged(args: argparse.Namespace, config: dict, key: str, default=None, cast=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    raw = config.get(key)
    if raw is None:
        return default
    return cast(raw) if cast else raw


def _check_output(path: str | Path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise ValueError(f"refusing to overwrite {path} (use --force)")
    return path


def _load_lexicon(path: str | None) -> medner.Lexicon:
    return medner.load_lexicon(path) if path else medner.default_lexicon()


def _make_backend(name: str, args: argparse.Namespace):
    if name == "mock":
        return MockBackend(default_response=getattr(args, "mock_default", None) or "")
    if name == "echo":
        return EchoBackend()
    if name == "http":
        return with_retries(HttpBackend(EndpointConfig.from_env()), RetryPolicy())
    raise ValueError(f"unknown backend {name!r} (expected mock, echo, or http)")


# -- subcommand implementations --

def _cmd_parse(args, config) -> int:
    out = _check_output(args.out, args.force)
    raw = Path(getattr(args, "in")).read_text(encoding="utf-8")
    source = args.source or Path(getattr(args, "in")).stem
    turns = corpus.parse_transcript(raw)
    snippets = corpus.split_into_snippets(turns, source=source)
    if args.filter:
        excluded = {
            line.strip()
            for line in Path(args.filter).read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
        snippets = [s for s in snippets if s.id not in excluded]
    examples = [
        corpus.LabeledExample(snippet=s, summary=None, provenance=corpus.Provenance.human())
        for s in snippets
    ]
    dataset = corpus.Dataset.build(source, examples, seed=args.resolved_seed)
    corpus.write_dataset(dataset, out)
    log.info("parsed %d turns into %d snippets -> %s", len(turns), len(snippets), out)
    return 0


def _cmd_split(args, config) -> int:
    out_train = _check_output(args.out_train, args.force)
    out_test = _check_output(args.out_test, args.force)
    dataset = corpus.read_dataset(getattr(args, "in"))
    spec = datagen.SplitSpec(test_size=args.test_size, seed=args.resolved_seed)
    train, test = datagen.make_split(dataset, spec)
    corpus.write_dataset(train, out_train)
    corpus.write_dataset(test, out_test)
    log.info("split %d examples into %d train / %d test", len(dataset.examples), len(train.examples), len(test.examples))
    return 0


def _cmd_select_universe(args, config) -> int:
    out = _check_output(args.out, args.force)
    train = corpus.read_dataset(getattr(args, "in"))
    universe = datagen.select_priming_universe(train, size=args.size, seed=args.resolved_seed)
    corpus.write_dataset(universe, out)
    log.info("selected %d priming examples from %s", len(universe.examples), train.name)
    return 0


def _cmd_generate(args, config) -> int:
    out = _check_output(args.out, args.force)
    snippets = corpus.read_snippets(args.snippets)
    universe = corpus.read_dataset(args.universe)
    backend_name = _merged(args, config, "backend", default="mock")
    backend = _make_backend(backend_name, args)
    recognizer = medner.DictionaryRecognizer(_load_lexicon(_merged(args, config, "lexicon")))
    job = datagen.GenerationJob(
        target_size=args.p,
        ensemble=EnsembleConfig(k_trials=args.k, n_priming=args.n, seed=args.resolved_seed),
        universe_ref=universe.name,
        backend_id=backend.backend_id(),
    )
    dataset = datagen.generate_gcf(
        snippets,
        universe,
        job,
        backend,
        recognizer,
        checkpoint_dir=args.checkpoint_dir,
        max_workers=args.max_workers,
        on_progress=lambda n: log.info("labeled %d/%d snippets", n, args.p),
    )
    corpus.write_dataset(dataset, out)
    log.info("wrote %s (%d synthetic examples)", dataset.name, len(dataset.examples))
    return 0


def _cmd_mix(args, config) -> int:
    out = _check_output(args.out, args.force)
    human = corpus.read_dataset(args.human)
    synthetic = corpus.read_dataset(args.synthetic)
    mixed = datagen.mix(human, synthetic, datagen.MixSpec(alpha=args.alpha, seed=args.resolved_seed))
    corpus.write_dataset(mixed, out)
    counts = mixed.manifest.counts()
    log.info("mixed %d human + %d synthetic -> %s", counts["human"], counts["synthetic"], out)
    return 0


def _cmd_eval(args, config) -> int:
    out = _check_output(args.out, args.force)
    ref = corpus.read_dataset(args.ref)
    hyp = corpus.read_dataset(args.hyp)
    hyp_by_id = {ex.id: ex for ex in hyp.examples}
    pairs = []
    for ex in ref.examples:
        other = hyp_by_id.get(ex.id)
        if other is None or ex.summary is None or other.summary is None:
            continue
        pairs.append(
            metrics.EvalPair(
                id=ex.id,
                reference=ex.summary.text,
                hypothesis=other.summary.text,
                snippet_text=" ".join(t.text for t in ex.snippet.turns),
            )
        )
    if not pairs:
        raise EmptyEvalSet()
    recognizer = medner.DictionaryRecognizer(_load_lexicon(_merged(args, config, "lexicon")))
    rules = negex.load_triggers(_merged(args, config, "triggers"))
    mode = metrics.AggregationMode(_merged(args, config, "mode", default="macro"))
    report = metrics.evaluate(
        pairs, recognizer, rules, mode=mode, concepts_against=args.concepts_against
    )
    metrics.write_report(report, out)
    log.info("evaluated %d pairs -> %s", len(pairs), out)
    if args.table:
        print(metrics.render_table(report, label=hyp.name))
    return 0


def _cmd_ner(args, config) -> int:
    lexicon = _load_lexicon(_merged(args, config, "lexicon"))
    if args.text is not None:
        texts = [args.text]
    elif getattr(args, "in") is not None:
        texts = Path(getattr(args, "in")).read_text(encoding="utf-8").splitlines()
    else:
        raise ValueError("ner needs --text or --in")
    rows = []
    for i, text in enumerate(texts):
        mentions = medner.extract(text, lexicon)
        rows.append(
            {
                "line": i,
                "mentions": [
                    {"concept_id": m.concept_id, "token_span": list(m.token_span), "surface": m.surface}
                    for m in mentions
                ],
            }
        )
    payload = "\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n"
    if args.out:
        _check_output(args.out, args.force).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_serve(args, config) -> int:
    import uvicorn

    from .review import SessionStore, create_app

    store = SessionStore(_merged(args, config, "sessions-dir", default="sessions"))
    app = create_app(store, ui_dist=_merged(args, config, "ui-dist"))
    host = _merged(args, config, "host", default="127.0.0.1")
    port = int(_merged(args, config, "port", default=8321))
    log.info("serving review API on %s:%d", host, port)
    uvicorn.run(app, host=host, port=port, log_level=(args.log_level or "info").lower())
    return 0


# -- parser wiring --

def build_parser() -> _Parser:
    parser = _Parser(prog="medens", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file; flags win")
    parser.add_argument("--seed", type=int, help=f"global random seed (default {DEFAULT_SEED})")
    parser.add_argument("--log-level", default=None, help="logging level (default INFO)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("parse", help="parse a DR:/PT: transcript into snippet records")
    p.add_argument("--in", required=True, help="transcript text file")
    p.add_argument("--source", help="snippet id prefix (default: input stem)")
    p.add_argument("--filter", help="file of snippet ids to exclude, one per line")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("split", help="seeded train/test split")
    p.add_argument("--in", required=True)
    p.add_argument("--test-size", type=int, default=500)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("select-universe", help="seeded priming-universe subset")
    p.add_argument("--in", required=True)
    p.add_argument("--size", type=int, default=210)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_select_universe)

    p = sub.add_parser("generate", help="label snippets with the ensemble summarizer")
    p.add_argument("--snippets", required=True)
    p.add_argument("--universe", required=True)
    p.add_argument("--k", type=int, default=10, help="ensembling trials")
    p.add_argument("--n", type=int, default=DEFAULT_CONFIG.max_examples, help="priming examples per trial")
    p.add_argument("--p", type=int, required=True, help="number of snippets to label")
    p.add_argument("--backend", choices=["mock", "echo", "http"], default=None)
    p.add_argument("--mock-default", help="default response for the mock backend")
    p.add_argument("--lexicon", help="lexicon TSV (default: bundled demo lexicon)")
    p.add_argument("--checkpoint-dir", help="directory for resumable checkpoints")
    p.add_argument("--max-workers", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("mix", help="mix human and synthetic datasets at ratio alpha")
    p.add_argument("--human", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("eval", help="score hypothesis summaries against references")
    p.add_argument("--ref", required=True, help="dataset with reference summaries")
    p.add_argument("--hyp", required=True, help="dataset with hypothesis summaries")
    p.add_argument("--lexicon")
    p.add_argument("--triggers", help="negation trigger TSV (default: bundled)")
    p.add_argument("--mode", choices=["macro", "micro"], default=None)
    p.add_argument(
        "--concepts-against",
        choices=["reference", "snippet"],
        default="reference",
        help="score concept coverage against the reference summary or the source snippet",
    )
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", action="store_true", help="also print a plain-text table")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ner", help="extract medical concept mentions")
    p.add_argument("--lexicon")
    p.add_argument("--text", help="inline text to scan")
    p.add_argument("--in", help="file with one text per line")
    p.add_argument("--out", help="output JSONL (default: stdout)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_ner)

    p = sub.add_parser("serve", help="run the blinded review HTTP service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--sessions-dir", default=None)
    p.add_argument("--ui-dist", default=None, help="built review UI to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        config = _read_config(args.config)
        args.resolved_seed = _merged(args, config, "seed", default=DEFAULT_SEED, cast=int)
        level = (_merged(args, config, "log-level", default="INFO")).upper()
        logging.basicConfig(
            level=getattr(logging, level, logging.INFO),
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args, config)
    except BackendError as exc:
        log.error("backend failure: %s", exc)
        return 2
    except (MedensError, ValueError) as exc:
        print(f"medens {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected
        log.exception("unexpected failure: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
