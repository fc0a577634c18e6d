"""Command-line entry point: ``bugnet <subcommand> ...``.

Exit status is 0 on success, 2 for usage, IO and input-format errors and 1
for failures during computation. Results go to stdout (or ``--out``),
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys

from . import __version__
from .classify import TrainedModels
from .evaluation import EvalConfig, build_dataset, evaluate_models, train_models, write_features_csv
from .events import (
    DEFAULT_VOCABULARY,
    EventError,
    Vocabulary,
    assemble_bug_records,
    corpus_stats,
    parse_event_stream,
    parse_timestamp,
    render_stats,
    write_events,
)
from .netbuild import TimeInterval, WindowIndex, build_network, following_window, preceding_window, write_edge_list
from .stats import hypothesis_suite
from .synth import InvalidConfig, SynthConfig, generate_community

log = logging.getLogger("bugnet")

CLASSIFIERS = ("lcc", "evcent", "svm")


class UsageError(Exception):
    """Bad input on the command line or in an input file (exit 2)."""


# -- shared plumbing ----------------------------------------------------------

@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _load_corpus(args):
    vocab = DEFAULT_VOCABULARY
    if args.config:
        try:
            vocab = Vocabulary.load(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read vocabulary {args.config}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"bad vocabulary {args.config}: {exc}") from None
    errors = []
    try:
        if args.events == "-":
            events = parse_event_stream(sys.stdin.buffer, strict=not args.lenient, errors=errors)
        else:
            with open(args.events, "rb") as fh:
                events = parse_event_stream(fh, strict=not args.lenient, errors=errors)
    except OSError as exc:
        raise UsageError(f"cannot read {args.events}: {exc.strerror}") from None
    if errors:
        log.warning("skipped %d malformed line(s)", len(errors))
    events.sort(key=lambda e: e.timestamp)  # stable: file order breaks ties
    records = assemble_bug_records(events, vocab)
    return events, records, vocab


def _eval_config(args) -> EvalConfig:
    return EvalConfig(
        window_days=args.window_days,
        seed=args.seed,
        train_fraction=args.train_fraction,
        target_mode=args.target,
        C=args.C,
        kernel=args.kernel,
        gamma=args.gamma,
        tol=args.tol,
        max_iter=args.max_iter,
        threads=args.threads,
    )


def _community(args) -> str:
    return args.community or ("stdin" if args.events == "-" else args.events.rsplit("/", 1)[-1])


# -- subcommands --------------------------------------------------------------

def cmd_stats(args) -> None:
    _, records, _ = _load_corpus(args)
    st = corpus_stats(records)
    with _output(args.out) as fh:
        if args.json:
            fh.write(json.dumps(st.to_dict(), sort_keys=True, indent=1) + "\n")
        else:
            fh.write(render_stats(st))


def cmd_hypotheses(args) -> None:
    events, records, vocab = _load_corpus(args)
    table = hypothesis_suite(records, WindowIndex(events), alpha=args.alpha, window_days=args.window_days,
                             include_absent=not args.present_only, vocab=vocab)
    if args.csv:
        with _output(args.csv) as fh:
            fh.write(table.to_csv())
    with _output(args.out) as fh:
        fh.write(table.render())


def cmd_train(args) -> None:
    events, records, _ = _load_corpus(args)
    cfg = _eval_config(args)
    data = build_dataset(records, WindowIndex(events), cfg.window_days, cfg.threads, _community(args))
    models = train_models(data, cfg)
    if not models.svm.converged:
        log.warning("SVM did not converge; the model is saved but flagged")
    try:
        models.save(args.model)
    except OSError as exc:
        raise UsageError(f"cannot write {args.model}: {exc.strerror}") from None


def cmd_evaluate(args) -> None:
    wanted = set(args.classifiers.split(","))
    unknown = wanted - set(CLASSIFIERS)
    if unknown:
        raise UsageError(f"unknown classifier(s): {', '.join(sorted(unknown))}")
    models = None
    if args.model:
        try:
            models = TrainedModels.load(args.model)
        except OSError as exc:
            raise UsageError(f"cannot read model {args.model}: {exc.strerror}") from None
        except (ValueError, KeyError) as exc:
            raise UsageError(f"bad model file {args.model}: {exc}") from None
    events, records, _ = _load_corpus(args)
    cfg = _eval_config(args)
    # features must be computed the way the model was trained
    window_days = models.config.get("window_days", cfg.window_days) if models else cfg.window_days
    data = build_dataset(records, WindowIndex(events), window_days, cfg.threads, _community(args))
    if models is None:
        models = train_models(data, cfg)
    report = evaluate_models(models, data, _community(args))
    report.scores = {k: v for k, v in report.scores.items() if k == "baseline" or k in wanted}
    with _output(args.out) as fh:
        fh.write(report.to_json() if args.format == "json" else report.render())


def cmd_synth(args) -> None:
    kw = {f.name: getattr(args, f.name) for f in dataclasses.fields(SynthConfig)}
    kw["faulty_mix"] = tuple(kw["faulty_mix"])
    cfg = SynthConfig(**kw)
    try:
        cfg.validate()
    except InvalidConfig as exc:
        raise UsageError(str(exc)) from None
    events = generate_community(cfg)
    with _output(args.out) as fh:
        write_events(events, fh)


def _window_from_args(args, records) -> TimeInterval:
    if args.bug is not None:
        if args.bug not in records:
            raise UsageError(f"unknown bug {args.bug!r}")
        t = records[args.bug].created_at
        return (preceding_window if args.phase == 1 else following_window)(t, args.window_days)
    if args.start is None or args.end is None:
        raise UsageError("give either --bug or both --start and --end")
    try:
        return TimeInterval(parse_timestamp(args.start), parse_timestamp(args.end))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_dump_network(args) -> None:
    events, records, _ = _load_corpus(args)
    window = _window_from_args(args, records)
    net = build_network(WindowIndex(events).query(window), window)
    with _output(args.out) as fh:
        write_edge_list(net, fh)


def cmd_dump_features(args) -> None:
    events, records, _ = _load_corpus(args)
    data = build_dataset(records, WindowIndex(events), args.window_days, args.threads)
    with _output(args.out) as fh:
        write_features_csv(records, data, fh)


# -- parser -------------------------------------------------------------------

def _corpus_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("events", help="event stream in JSON Lines format ('-' for stdin)")
    p.add_argument("--config", help="TOML file with the community's status/resolution vocabulary")
    p.add_argument("--lenient", action="store_true", help="skip malformed lines instead of failing")
    p.add_argument("--window-days", type=int, default=30, help="window length in days (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for feature extraction (default: %(default)s)")
    p.add_argument("--out", help="output path (default: stdout)")
    return p


def _model_parent() -> argparse.ArgumentParser:
    d = EvalConfig()
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d.seed, help="seed for the split and SVM (default: %(default)s)")
    p.add_argument("--train-fraction", type=float, default=d.train_fraction,
                   help="share of labeled bugs used for training (default: %(default)s)")
    p.add_argument("--target", choices=("auto", "valid", "faulty"), default=d.target_mode,
                   help="class scored as positive; auto picks the minority (default: %(default)s)")
    p.add_argument("--C", type=float, default=d.C, help="SVM penalty (default: %(default)s)")
    p.add_argument("--kernel", choices=("rbf", "linear"), default=d.kernel, help="SVM kernel (default: %(default)s)")
    p.add_argument("--gamma", type=float, default=d.gamma, help="RBF width (default: %(default).6g)")
    p.add_argument("--tol", type=float, default=d.tol, help="SMO stopping tolerance (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=d.max_iter, help="SMO iteration cap (default: %(default)s)")
    p.add_argument("--community", help="name shown in reports (default: events file name)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bugnet", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    corpus, model = _corpus_parent(), _model_parent()

    p = sub.add_parser("stats", parents=[corpus], help="basic corpus statistics")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("hypotheses", parents=[corpus], help="rank-sum tests on reporter centrality")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default: %(default)s)")
    p.add_argument("--csv", help="also write the table as CSV to this path")
    p.add_argument("--present-only", action="store_true",
                   help="drop reporters absent from the window instead of scoring them 0")
    p.set_defaults(func=cmd_hypotheses)

    p = sub.add_parser("train", parents=[corpus, model], help="tune the threshold and train the SVM")
    p.add_argument("--model", required=True, help="where to write the model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[corpus, model], help="score the classifiers on held-out bugs")
    p.add_argument("--model", help="model from 'train' (default: train in-process with the given flags)")
    p.add_argument("--format", choices=("text", "json"), default="text", help="report format (default: %(default)s)")
    p.add_argument("--classifiers", default=",".join(CLASSIFIERS),
                   help="comma-separated subset of lcc,evcent,svm (default: all)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic community with a planted signal")
    defaults = SynthConfig()
    for f in dataclasses.fields(SynthConfig):
        flag = "--" + f.name.replace("_", "-")
        value = getattr(defaults, f.name)
        if f.name == "faulty_mix":
            p.add_argument(flag, type=float, nargs=3, default=list(value), metavar=("DUP", "INV", "INC"),
                           help="shares of Faulty categories (default: %(default)s)")
        else:
            p.add_argument(flag, type=type(value), default=value, help="(default: %(default)s)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dump-network", parents=[corpus], help="write one window's edge list")
    p.add_argument("--bug", help="use the window around this bug's report time")
    p.add_argument("--phase", type=int, choices=(1, 2), default=1, help="1 = preceding, 2 = following window")
    p.add_argument("--start", help="explicit window start (ISO-8601 UTC)")
    p.add_argument("--end", help="explicit window end, exclusive (ISO-8601 UTC)")
    p.set_defaults(func=cmd_dump_network)

    p = sub.add_parser("dump-features", parents=[corpus], help="write the per-bug feature table as CSV")
    p.set_defaults(func=cmd_dump_features)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="bugnet: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "window_days", 1) < 1:
            raise UsageError("--window-days must be >= 1")
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        if hasattr(args, "train_fraction") and not 0 < args.train_fraction < 1:
            raise UsageError("--train-fraction must lie strictly between 0 and 1")
        args.func(args)
    except (UsageError, EventError) as exc:
        print(f"bugnet: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any computation failure maps to exit 1
        print(f"bugnet: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0
