"""Command-line pipeline surface.

Every file-producing subcommand writes a manifest (flags, input digests,
tool version; no timestamps) next to its output, so any published number
can be re-derived.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from . import __version__
from .annotate import (
    adjudicate_export,
    agreement_strata,
    krippendorff_alpha,
    read_annotations,
    relation_distribution,
    render_relation_distribution,
    render_strata,
    run_annotation_session,
    summarize_all,
    summary_to_record,
    write_summaries,
    read_summaries,
)
from .assess import (
    confusion,
    consistency,
    consistency_table,
    pairs_from_summaries,
    render_consistency_table,
)
from .corpus import FORMATS, TagLexicon, load_corpus, tag, tokenize
from .errors import DataFormatError, DegenerateDataError
from .extract import (
    connective_distribution,
    connective_rate,
    extract_all,
    extract_instance,
    masked_text,
    read_instances,
    render_distribution,
    write_instances,
)
from .postprocess import (
    POLICIES,
    compare_systems,
    fix_corpus,
    fixed_records,
    read_fixed,
    render_comparison,
    render_fix_report,
    write_fixed,
)
from .predict import (
    ConnectiveClassifier,
    SubprocessPredictor,
    build_training_set,
    evaluate_model,
    read_examples,
    render_eval,
    train,
    write_examples,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resamples(value: str) -> int:
    n = int(value)
    if n < 1000:
        raise argparse.ArgumentTypeError("at least 1000 resamples are required")
    return n


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


_SKIP_CONFIG_KEYS = ("func", "command")


def _write_manifest(out_path: str, args: argparse.Namespace, inputs: dict[str, str]) -> None:
    manifest = {
        "tool": {"name": "conncheck", "version": __version__},
        "subcommand": args.command,
        "config": {
            k: v for k, v in vars(args).items() if k not in _SKIP_CONFIG_KEYS
        },
        "inputs": {
            name: {"path": path, "sha256": _sha256(path)}
            for name, path in inputs.items()
        },
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _lexicon(args: argparse.Namespace) -> TagLexicon:
    if getattr(args, "lexicon", None):
        return TagLexicon.load(args.lexicon)
    return TagLexicon.default()


def _read_instances_file(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_instances(fh)


def _read_summaries_file(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_summaries(fh)


# --- subcommands --------------------------------------------------------------


def _cmd_extract(args: argparse.Namespace) -> int:
    utterances = list(load_corpus(args.in_path, args.format, args.source))
    lexicon = _lexicon(args)
    if args.jobs > 1:
        tagged = (
            u if all(t.tag is not None for t in u.tokens)
            else replace(u, tokens=tag(u.tokens, lexicon))
            for u in utterances
        )
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            found = list(pool.map(extract_instance, tagged))
        instances = []
        for instance in found:
            if instance is not None:
                instances.append(replace(instance, id=f"i{len(instances) + 1:06d}"))
    else:
        instances = extract_all(utterances, lexicon)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_instances(instances, fh)
    _write_manifest(args.out, args, {"in": args.in_path})
    print(f"extracted {len(instances)} instances from {len(utterances)} utterances")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    instances = _read_instances_file(args.in_path)
    distribution = connective_distribution(instances)
    payload: dict = {
        "instances": len(instances),
        "distribution": distribution,
    }
    text = [f"instances: {len(instances)}", render_distribution(distribution)]
    if args.corpus:
        utterances = list(load_corpus(args.corpus, args.format, None))
        rate = connective_rate(utterances, _lexicon(args))
        payload["connective_rate"] = rate
        text.append(f"connective rate: {100.0 * rate:.1f}%")
    _write_json(args.out, payload)
    inputs = {"in": args.in_path}
    if args.corpus:
        inputs["corpus"] = args.corpus
    _write_manifest(args.out, args, inputs)
    print("\n".join(text))
    return 0


def _cmd_mask(args: argparse.Namespace) -> int:
    instances = _read_instances_file(args.in_path)
    with open(args.out, "w", encoding="utf-8") as fh:
        for instance in instances:
            record = {
                "instance_id": instance.id,
                "prompt": instance.prompt,
                "text": masked_text(instance),
            }
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
    _write_manifest(args.out, args, {"in": args.in_path})
    print(f"masked {len(instances)} instances")
    return 0


def _cmd_annotate(args: argparse.Namespace) -> int:
    instances = _read_instances_file(args.in_path)
    new = run_annotation_session(instances, args.annotator, args.out)
    _write_manifest(args.out, args, {"in": args.in_path})
    print(f"recorded {len(new)} annotations from {args.annotator}")
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    with open(args.in_path, encoding="utf-8") as fh:
        annotations = read_annotations(fh)
    summaries = summarize_all(annotations)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_summaries(summaries, fh)
    try:
        alpha = krippendorff_alpha(annotations)
    except DegenerateDataError:
        alpha = "degenerate"
    strata = agreement_strata(summaries)
    distribution = relation_distribution(summaries)
    text = [
        f"instances: {len(summaries)}",
        "",
        "% agreed by n annotators:",
        render_strata(strata),
        "",
        "% of majority relations:",
        render_relation_distribution(distribution),
        "",
        f"krippendorff alpha: {alpha if isinstance(alpha, str) else f'{alpha:.3f}'}",
        "(alpha counts the none category as a relation class)",
    ]
    if args.report:
        _write_json(
            args.report,
            {
                "instances": len(summaries),
                "strata": {str(k): v for k, v in strata.items()},
                "majority_distribution": {r.value: v for r, v in distribution.items()},
                "alpha": alpha,
                "summaries": [summary_to_record(s) for s in summaries],
                "notes": ["alpha counts the none category as a relation class"],
            },
        )
    if args.adjudicate:
        if not args.instances:
            raise DataFormatError("--adjudicate needs --instances")
        instances = {i.id: i for i in _read_instances_file(args.instances)}
        records = adjudicate_export(summaries, instances)
        with open(args.adjudicate, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False))
                fh.write("\n")
        text.append(f"exported {len(records)} no-majority instances for adjudication")
    _write_manifest(args.out, args, {"in": args.in_path})
    print("\n".join(text))
    return 0


def _cmd_assess(args: argparse.Namespace) -> int:
    summaries = _read_summaries_file(args.summaries)
    instances = {i.id: i for i in _read_instances_file(args.instances)}
    pairs = pairs_from_summaries(summaries, instances)
    table = consistency_table(pairs)
    overall = consistency(pairs, args.min_agree)
    matrix = confusion(pairs)
    payload = {
        "pairs": len(pairs),
        "consistency": {str(k): v for k, v in table.items()},
        "min_agree": args.min_agree,
        "consistency_at_min_agree": overall,
        "confusion": matrix.to_record(),
        "notes": [
            "consistency credits either relation of an ambiguous connective",
            "confusion rows are human majorities, columns resolved system relations",
        ],
    }
    _write_json(args.out, payload)
    _write_manifest(
        args.out, args, {"summaries": args.summaries, "instances": args.instances}
    )
    print(f"pairs: {len(pairs)}")
    print("")
    print("% consistent, by exact agreement level:")
    print(render_consistency_table(table))
    cell = f"{overall:.1f}" if overall is not None else "n/a"
    print(f"% consistent at >={args.min_agree} votes: {cell}")
    print("")
    print("confusion (rows human, columns system):")
    print(matrix.render())
    return 0


def _cmd_build_train(args: argparse.Namespace) -> int:
    utterances = list(load_corpus(args.in_path, args.format, args.source))
    examples = build_training_set(
        utterances,
        seed=args.seed,
        none_ratio=args.none_ratio,
        min_len=args.min_len,
        max_len=args.max_len,
        lexicon=_lexicon(args),
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        write_examples(examples, fh)
    _write_manifest(args.out, args, {"in": args.in_path})
    none = sum(1 for e in examples if e.label == "NONE")
    print(f"built {len(examples)} examples ({none} NONE)")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    with open(args.in_path, encoding="utf-8") as fh:
        examples = read_examples(fh)
    model = train(
        examples,
        seed=args.seed,
        l2=args.l2,
        step=args.step,
        epochs=args.epochs,
        batch_size=args.batch_size,
    )
    model.save(args.out)
    _write_manifest(args.out, args, {"in": args.in_path})
    print(f"trained on {len(examples)} examples; final loss {model.loss_trace_[-1]:.6f}")
    return 0


def _cmd_finetune(args: argparse.Namespace) -> int:
    model = ConnectiveClassifier.load(args.model)
    with open(args.in_path, encoding="utf-8") as fh:
        examples = read_examples(fh)
    tuned = model.fine_tune(
        [(e.arg1, e.arg2) for e in examples],
        [e.label for e in examples],
        seed=args.seed,
        epochs=args.epochs,
        step=args.step,
    )
    tuned.save(args.out)
    _write_manifest(args.out, args, {"model": args.model, "in": args.in_path})
    print(
        f"fine-tuned on {len(examples)} examples; final loss {tuned.loss_trace_[-1]:.6f}"
    )
    return 0


def _cmd_eval_model(args: argparse.Namespace) -> int:
    model = ConnectiveClassifier.load(args.model)
    with open(args.in_path, encoding="utf-8") as fh:
        examples = read_examples(fh)
    report = evaluate_model(model, examples)
    _write_json(args.out, report.to_record())
    _write_manifest(args.out, args, {"model": args.model, "in": args.in_path})
    print(render_eval(report))
    return 0


def _serve_stdio(model: ConnectiveClassifier) -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            prediction = model.predict_one(request["arg1"], request["arg2"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            print(json.dumps({"error": str(exc)}), flush=True)
            continue
        response = {
            "label": prediction.label,
            "scores": prediction.scores,
            "all_unknown": prediction.all_unknown,
        }
        print(json.dumps(response, ensure_ascii=False), flush=True)
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = ConnectiveClassifier.load(args.model)
    if args.stdio:
        return _serve_stdio(model)
    if args.arg1 is not None or args.arg2 is not None:
        if args.arg1 is None or args.arg2 is None:
            raise DataFormatError("--arg1 and --arg2 must be given together")
        arg1 = [t.surface for t in tokenize(args.arg1)]
        arg2 = [t.surface for t in tokenize(args.arg2)]
        prediction = model.predict_one(arg1, arg2)
        print(
            json.dumps(
                {
                    "label": prediction.label,
                    "scores": prediction.scores,
                    "all_unknown": prediction.all_unknown,
                },
                ensure_ascii=False,
            )
        )
        return 0
    if not args.in_path or not args.out:
        raise DataFormatError("predict needs --arg1/--arg2, or --in and --out, or --stdio")
    with open(args.in_path, encoding="utf-8") as fh, open(
        args.out, "w", encoding="utf-8"
    ) as out:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
                arg1 = record["arg1"]
                arg2 = record["arg2"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataFormatError(f"bad pair record: {exc}", line=lineno) from None
            prediction = model.predict_one(arg1, arg2)
            out.write(
                json.dumps(
                    {
                        "label": prediction.label,
                        "scores": prediction.scores,
                        "all_unknown": prediction.all_unknown,
                    },
                    ensure_ascii=False,
                )
            )
            out.write("\n")
    _write_manifest(args.out, args, {"model": args.model, "in": args.in_path})
    return 0


def _cmd_fix(args: argparse.Namespace) -> int:
    instances = _read_instances_file(args.in_path)
    lexicon = _lexicon(args)
    if args.predict_cmd:
        with SubprocessPredictor(shlex.split(args.predict_cmd)) as predictor:
            results, report = fix_corpus(instances, predictor, lexicon)
    else:
        if not args.model:
            raise DataFormatError("fix needs --model or --predict-cmd")
        predictor = ConnectiveClassifier.load(args.model)
        results, report = fix_corpus(instances, predictor, lexicon)
    records = fixed_records(results, args.policy, {i.id: i for i in instances})
    with open(args.out, "w", encoding="utf-8") as fh:
        write_fixed(records, fh)
    if args.report:
        _write_json(args.report, report.to_record())
    inputs = {"in": args.in_path}
    if args.model:
        inputs["model"] = args.model
    _write_manifest(args.out, args, inputs)
    print(render_fix_report(report))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    instances = _read_instances_file(args.instances)
    summaries = _read_summaries_file(args.summaries)
    with open(args.fixed, encoding="utf-8") as fh:
        fixed_results = read_fixed(fh)
    original = {i.id: i.connective for i in instances}
    fixed = {}
    for result in fixed_results:
        if result.action == "flagged_incoherent":
            if result.text is None:
                continue
            fixed[result.instance_id] = result.original
        else:
            fixed[result.instance_id] = result.predicted
    kept = [
        s for s in summaries if s.instance_id in fixed and s.instance_id in original
    ]
    report = compare_systems(
        kept, original, fixed, seed=args.seed, resamples=args.resamples
    )
    _write_json(args.out, report.to_record())
    _write_manifest(
        args.out,
        args,
        {
            "instances": args.instances,
            "fixed": args.fixed,
            "summaries": args.summaries,
        },
    )
    print(render_comparison(report))
    return 0


_REPORT_SECTIONS = (
    ("stats", "Connective distribution"),
    ("aggregate", "Annotation agreement"),
    ("assess", "Consistency with human relations"),
    ("eval", "Classifier evaluation"),
    ("fix", "Repair actions"),
    ("compare", "Original vs. repaired connectives"),
)


def _cmd_report(args: argparse.Namespace) -> int:
    sections = []
    inputs = {}
    for key, title in _REPORT_SECTIONS:
        path = getattr(args, key)
        if not path:
            continue
        inputs[key] = path
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: bad JSON: {exc.msg}") from None
        sections.append((title, payload))
    if not sections:
        raise DataFormatError("report needs at least one section input")
    lines = [f"conncheck report (tool version {__version__})"]
    for title, payload in sections:
        lines.append("")
        lines.append(f"== {title} ==")
        lines.append(json.dumps(payload, sort_keys=True, indent=2))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    _write_manifest(args.out, args, inputs)
    print(f"wrote report with {len(sections)} sections to {args.out}")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="conncheck", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"conncheck {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="corpus -> connective instances JSONL")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--format", choices=FORMATS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source", default=None, help="source label (default: file stem)")
    p.add_argument("--lexicon", default=None, help="override tag lexicon TSV")
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("stats", help="instance file -> distribution report")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", default=None, help="corpus for the connective rate")
    p.add_argument("--format", choices=FORMATS, default="plain")
    p.add_argument("--lexicon", default=None)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("mask", help="instances -> masked annotation tasks")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("annotate", help="interactive annotation session")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--annotator", required=True)
    p.add_argument("--out", required=True, help="annotation CSV (append-only)")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("aggregate", help="annotation CSV -> summaries + agreement")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True, help="summary JSONL")
    p.add_argument("--report", default=None, help="agreement report JSON")
    p.add_argument("--adjudicate", default=None, help="no-majority export JSONL")
    p.add_argument("--instances", default=None, help="instances for --adjudicate")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("assess", help="summaries + instances -> consistency report")
    p.add_argument("--summaries", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-agree", type=int, choices=(2, 3, 4, 5), default=3)
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("build-train", help="corpus -> training examples JSONL")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--format", choices=FORMATS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--none-ratio", type=float, default=0.3)
    p.add_argument("--min-len", type=int, default=7)
    p.add_argument("--max-len", type=int, default=25)
    p.add_argument("--source", default=None)
    p.add_argument("--lexicon", default=None)
    p.set_defaults(func=_cmd_build_train)

    p = sub.add_parser("train", help="examples JSONL -> model file")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("finetune", help="continue training a model on new examples")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--step", type=float, default=None)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("eval-model", help="model + labeled examples -> metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_model)

    p = sub.add_parser("predict", help="predict a connective for argument pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--arg1", default=None, help="text before the connective")
    p.add_argument("--arg2", default=None, help="text after the connective")
    p.add_argument("--in", dest="in_path", default=None, help="JSONL of {arg1, arg2}")
    p.add_argument("--out", default=None)
    p.add_argument(
        "--stdio",
        action="store_true",
        help="serve the line-delimited JSON predictor protocol",
    )
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("fix", help="instances + predictor -> repaired JSONL")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--model", default=None)
    p.add_argument(
        "--predict-cmd", default=None, help="external predictor command (stdio protocol)"
    )
    p.add_argument("--out", required=True)
    p.add_argument("--policy", choices=POLICIES, default="flag")
    p.add_argument("--report", default=None, help="repair report JSON")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--jobs", type=_positive, default=1, help="accepted; repairs run serialized")
    p.set_defaults(func=_cmd_fix)

    p = sub.add_parser("compare", help="original vs. repaired consistency tables")
    p.add_argument("--instances", required=True)
    p.add_argument("--fixed", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--resamples", type=_resamples, default=1000)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="bundle stage reports into one document")
    for key, _ in _REPORT_SECTIONS:
        p.add_argument(f"--{key}", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, DegenerateDataError) as exc:
        print(f"conncheck: data error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"conncheck: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
