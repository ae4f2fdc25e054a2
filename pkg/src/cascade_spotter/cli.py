"""Command-line entry point.

Four subcommands cover the pipeline: `process` turns raw jsonl dumps into
the output tables, `train` fits (or fine-tunes) the labeling model from an
annotated CSV, `label` stamps botness scores onto an existing users table,
and `serve` hosts the explorer API over a processed directory.

Progress goes to stderr; files are the only machine-readable output.  Exit
codes: 0 success, 1 I/O trouble, 2 validation or schema problems, 3
anything else.  Output files are staged and renamed into place together,
so a failing run never leaves partial tables behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path
from time import perf_counter

import numpy as np

from cascade_spotter import __version__
from cascade_spotter import tables
from cascade_spotter.features import (
    EmbeddingTable,
    UserFeaturizer,
    check_embedding_dim,
    embedding_block_names,
    USER_STAT_NAMES,
)
from cascade_spotter.influence import KernelParams, influence_report
from cascade_spotter.ingest import load_dataset
from cascade_spotter.labeler import (
    SchemaMismatchError,
    TreeEnsembleModel,
    fine_tune,
    load_annotations,
    train,
)

log = logging.getLogger("cascade_spotter")

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3

_KERNEL_NAMES = {"exp": "exponential", "plaw": "power-law"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-spotter",
        description="Influence scoring and user labeling over Twitter jsonl dumps",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=os.environ.get("CASCADE_SPOTTER_OUT"),
                       help="output directory (default: $CASCADE_SPOTTER_OUT)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads, 0 = machine parallelism")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("process", help="parse dumps, score influence, extract features")
    p.add_argument("--input", action="append", required=True,
                   help="jsonl dump path, repeatable; .gz accepted")
    p.add_argument("--kernel", choices=sorted(_KERNEL_NAMES), default="exp")
    p.add_argument("--theta", type=float, default=KernelParams().theta)
    p.add_argument("--kappa", type=float, default=None,
                   help="kernel scale (default 1/theta)")
    p.add_argument("--beta", type=float, default=1.0, help="mark exponent")
    p.add_argument("--c", type=float, default=1.0, help="power-law offset, seconds")
    p.add_argument("--embeddings", default=None, help="word vector file (text format)")
    p.add_argument("--vocab-size", type=int, default=1000)
    p.add_argument("--model", default=None,
                   help="labeling model; adds the botness column when given")
    common(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("train", help="train or fine-tune the labeling model")
    p.add_argument("--input", required=True, help="users.csv with the feature block")
    p.add_argument("--annotations", required=True, help="annotation CSV with labels")
    p.add_argument("--fine-tune", dest="fine_tune", default=None, metavar="MODEL",
                   help="start from this model and append boosting rounds")
    p.add_argument("--rounds", type=int, default=10,
                   help="boosting rounds to append in fine-tune mode")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("label", help="stamp model scores onto a users table")
    p.add_argument("--input", required=True, help="users.csv to label")
    p.add_argument("--model", required=True)
    common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("serve", help="serve the explorer API over a processed directory")
    p.add_argument("--input", required=True, help="directory written by `process`")
    p.add_argument("--model", default=None,
                   help="labeling model (default: model_active.json or model.json in the input dir)")
    p.add_argument("--ui", default=None, help="built explorer UI directory to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    common(p)
    p.set_defaults(func=cmd_serve)
    return parser


class StagedWrites:
    """Collect rendered files, then rename them into place together."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.staged: list[tuple[Path, Path]] = []

    def add(self, name: str, text: str) -> None:
        tmp = self.out_dir / (name + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="")
        self.staged.append((tmp, self.out_dir / name))

    def commit(self) -> None:
        for tmp, final in self.staged:
            os.replace(tmp, final)
        self.staged.clear()

    def abort(self) -> None:
        for tmp, _ in self.staged:
            tmp.unlink(missing_ok=True)
        self.staged.clear()


def _out_dir(args) -> Path:
    if not args.out:
        raise ValueError("no output directory: pass --out or set CASCADE_SPOTTER_OUT")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kernel_from_args(args) -> KernelParams:
    return KernelParams(
        kind=_KERNEL_NAMES[args.kernel],
        theta=args.theta,
        kappa=args.kappa,
        beta=args.beta,
        c=args.c,
    )


def cmd_process(args) -> int:
    out = _out_dir(args)
    params = _kernel_from_args(args)
    threads = args.threads or (os.cpu_count() or 1)

    t0 = perf_counter()
    data = load_dataset(args.input)
    stats = data.stats
    log.info("parsed %d tweets into %d cascades, %d users (%.2fs)",
             stats.parsed_tweets, len(data.cascades), len(data.users),
             perf_counter() - t0)

    t1 = perf_counter()
    report = influence_report(data.cascades, params, n_jobs=threads)
    log.info("influence over %d cascades (%.2fs)", len(data.cascades), perf_counter() - t1)

    table = EmbeddingTable.load(args.embeddings) if args.embeddings else None
    t2 = perf_counter()
    if data.users:
        featurizer = UserFeaturizer(
            embeddings=table,
            vocab_size=args.vocab_size,
            now=float(stats.max_created_at),
        ).fit(data.users)
        feats = featurizer.transform(data.users)
        vocab = featurizer.tfidf_.vocabulary_
    else:
        from cascade_spotter.features import HashtagVocabulary, FeatureMatrix
        dim = table.dimension if table is not None else 0
        names = USER_STAT_NAMES + embedding_block_names(dim)
        feats = FeatureMatrix(names=names, values=np.zeros((0, len(names))), user_ids=())
        vocab = HashtagVocabulary(tags=(), df=(), n_users=0)
    log.info("features for %d users, %d columns (%.2fs)",
             len(data.users), len(feats.names), perf_counter() - t2)

    botness = None
    if args.model:
        model = TreeEnsembleModel.load(args.model)
        check_embedding_dim(model.feature_names, table)
        botness = model.predict(feats.values, feature_names=feats.names) \
            if data.users else np.zeros(0)

    meta = {
        "tool": "cascade-spotter",
        "version": __version__,
        "command": "process",
        "parameters": {
            "kernel": params.kind,
            "theta": params.theta,
            "kappa": params.kappa,
            "beta": params.beta,
            "c": params.c,
            "vocab_size": args.vocab_size,
            "embeddings": args.embeddings,
            "embedding_dim": table.dimension if table is not None else 0,
            "model": args.model,
            "seed": args.seed,
        },
        "counts": {
            "input_lines": stats.input_lines,
            "parsed_tweets": stats.parsed_tweets,
            "skipped_lines": stats.skipped_lines,
            "malformed_lines": stats.malformed_lines,
            "duplicate_tweets": stats.duplicate_tweets,
            "orphan_cascades": stats.orphan_cascades,
            "cascades": len(data.cascades),
            "events": sum(len(c.events) for c in data.cascades),
            "users": len(data.users),
        },
        "max_created_at": stats.max_created_at,
        "feature_columns": list(feats.names),
    }

    staged = StagedWrites(out)
    try:
        staged.add(tables.USERS_CSV,
                   tables.render_users_csv(data.users, feats, report.user_influence, botness))
        staged.add(tables.CASCADES_CSV, tables.render_cascades_csv(data.cascades, report))
        staged.add(tables.HASHTAGS_CSV, tables.render_hashtags_csv(vocab))
        staged.add(tables.RUN_META_JSON, tables.render_run_meta(meta))
        staged.commit()
    except BaseException:
        staged.abort()
        raise
    log.info("wrote %s, %s, %s, %s to %s", tables.USERS_CSV, tables.CASCADES_CSV,
             tables.HASHTAGS_CSV, tables.RUN_META_JSON, out)
    return EXIT_OK


def _labeled_rows(table: tables.UserTable, annotations_path) -> tuple[np.ndarray, np.ndarray]:
    rows, labels = [], []
    for rec in load_annotations(annotations_path):
        if rec.label is None:
            continue
        idx = table.row_of(rec.user_id)
        if idx is None:
            log.warning("annotation for unknown user %s ignored", rec.user_id)
            continue
        rows.append(idx)
        labels.append(rec.label)
    if not rows:
        raise ValueError("no labeled rows joined against the feature table")
    return table.X[rows], np.array(labels)


def cmd_train(args) -> int:
    out = _out_dir(args)
    table = tables.read_users_table(args.input)
    X, y = _labeled_rows(table, args.annotations)

    staged = StagedWrites(out)
    try:
        if args.fine_tune:
            base = TreeEnsembleModel.load(args.fine_tune)
            model = fine_tune(base, X, y, rounds=args.rounds,
                              feature_names=table.feature_names, seed=args.seed)
            report = {
                "mode": "fine_tune",
                "base_model": args.fine_tune,
                "rounds": args.rounds,
                "n_labeled": int(len(y)),
                "trees": len(model.trees),
            }
            log.info("fine-tuned %s: %d -> %d trees on %d labeled users",
                     args.fine_tune, len(base.trees), len(model.trees), len(y))
        else:
            model = train(X, y, table.feature_names, seed=args.seed)
            report = {
                "mode": "train",
                "cv_auc": model.metadata["cv_auc"],
                "hyperparameters": model.metadata["hyperparameters"],
                "n_labeled": int(len(y)),
                "seed": args.seed,
            }
            log.info("trained on %d labeled users, CV AUC %.4f",
                     len(y), model.metadata["cv_auc"])
        staged.add("model.json", model.to_json())
        staged.add("cv_report.json", tables.render_run_meta(report))
        staged.commit()
    except BaseException:
        staged.abort()
        raise
    return EXIT_OK


def cmd_label(args) -> int:
    out = _out_dir(args)
    model = TreeEnsembleModel.load(args.model)
    table = tables.read_users_table(args.input)
    botness = model.predict(table.X, feature_names=table.feature_names)

    # rewrite the csv cell-for-cell so untouched columns stay byte-identical
    with open(args.input, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if "botness" not in header:
        raise ValueError(f"{args.input}: missing botness column")
    bi = header.index("botness")
    for row, score in zip(rows, botness):
        row[bi] = repr(float(score))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)

    staged = StagedWrites(out)
    try:
        staged.add(tables.USERS_CSV, buf.getvalue())
        staged.commit()
    except BaseException:
        staged.abort()
        raise
    log.info("labeled %d users with %s", len(rows), args.model)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from cascade_spotter.service import create_app

    data_dir = Path(args.input)
    if not (data_dir / tables.USERS_CSV).exists():
        raise FileNotFoundError(f"{data_dir} does not look like a processed directory "
                                f"(no {tables.USERS_CSV})")
    model_path = args.model
    if model_path is None:
        for candidate in ("model_active.json", "model.json"):
            if (data_dir / candidate).exists():
                model_path = str(data_dir / candidate)
                break
    app = create_app(data_dir, model_path=model_path, ui_dir=args.ui)
    log.info("serving %s on %s:%d (model: %s)", data_dir, args.host, args.port,
             model_path or "none")
    uvicorn.run(app, host=args.host, port=args.port,
                log_level="warning" if args.quiet else "info")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ValueError, SchemaMismatchError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
