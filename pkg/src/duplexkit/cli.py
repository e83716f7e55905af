"""Command-line entry point.

    duplexkit serve  --listen 127.0.0.1:8990 --mode {sim,live}
                     [--config FILE] [--scenario FILE] [--engine {async,sync}]
                     [--record FILE] [--votes FILE]
    duplexkit replay --scenario FILE [--mode {async,sync}] [--assert]
                     [--record FILE] [--horizon MS]
    duplexkit report --trace FILE | --fixtures FILE
    duplexkit corpus {form,insert,filter,render} ...
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core.config import SessionConfig, load_config
from .core.tokens import Modality
from .corpus import (
    FilterRules,
    InterruptionAnnotation,
    dialogue_from_json,
    dialogue_to_json,
    filter_sample,
    form_interleaved,
    read_records,
    render_training_sample,
    sample_to_json,
    write_records,
    _units_from_json,
    _words_from_json,
)
from .core.tokens import token_to_json
from .errors import DuplexError
from .scenario import load_scenario_file
from .service.driver import check_expectations, run_scenario


def _parse_listen(value: str):
    host, _, port = value.rpartition(":")
    return host or "127.0.0.1", int(port)


def cmd_serve(args) -> int:
    import uvicorn

    from .service.server import ServerOptions, build_app

    patterns = ()
    if args.patterns:
        from .frontend.asr import load_patterns
        patterns = tuple(load_patterns(
            Path(args.patterns).read_text(encoding="utf-8")))
    options = ServerOptions(
        mode=args.mode,
        config=load_config(args.config) if args.config else SessionConfig(),
        scenario=load_scenario_file(args.scenario) if args.scenario else None,
        engine_mode=args.engine,
        record_path=Path(args.record) if args.record else None,
        votes_path=Path(args.votes) if args.votes else None,
        patterns=patterns,
    )
    host, port = _parse_listen(args.listen)
    uvicorn.run(build_app(options), host=host, port=port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    scenario = load_scenario_file(args.scenario)
    trace = run_scenario(scenario, mode=args.mode, horizon_ms=args.horizon)
    if args.record:
        Path(args.record).write_text(trace.trace_text(), encoding="utf-8")
    print(f"scenario {scenario.name}: {len(trace.inbound)} in / "
          f"{len(trace.outbound)} out, {len(trace.bot_turns)} bot turns, "
          f"end t={trace.end_ms} ms")
    if getattr(args, "assert_expectations", False):
        failures = check_expectations(scenario, trace)
        for exp in scenario.expectations:
            status = "FAIL" if any(exp.check in f for f in failures) else "ok"
            print(f"  [{status}] {exp.check} {exp.params}")
        for failure in failures:
            print(f"  FAIL {failure}", file=sys.stderr)
        return 1 if failures else 0
    return 0


def cmd_report(args) -> int:
    if args.trace:
        from .evaluation.report import render_trace_report, trace_stats
        stats = trace_stats(Path(args.trace).read_text(encoding="utf-8"))
        print(render_trace_report(stats))
        return 0
    if args.fixtures:
        from .evaluation.report import (
            fixture_report,
            load_fixtures,
            render_fixture_report,
        )
        fixtures = load_fixtures(Path(args.fixtures).read_text(encoding="utf-8"))
        print(render_fixture_report(fixture_report(fixtures)))
        return 0
    print("report: need --trace or --fixtures", file=sys.stderr)
    return 2


def _load_dialogues(path: str):
    return [dialogue_from_json(r)
            for r in read_records(Path(path).read_text(encoding="utf-8"))
            if r.get("kind") == "dialogue"]


def cmd_corpus_form(args) -> int:
    out = []
    for dlg in _load_dialogues(args.infile):
        out.append({
            "kind": "formed",
            "meta": dlg.meta,
            "turns": [{
                "speaker": t.speaker,
                "tokens": [token_to_json(tok)
                           for tok in form_interleaved(t.words, t.units)],
            } for t in dlg.turns],
        })
    Path(args.out).write_text(write_records(out), encoding="utf-8")
    print(f"formed {len(out)} records -> {args.out}")
    return 0


def cmd_corpus_insert(args) -> int:
    from .corpus import insert_interruption_record

    spec = json.loads(args.annotation)
    annotation = InterruptionAnnotation(
        turn_index=int(spec["turn"]),
        split_word_index=int(spec["split"]),
        interrupter=str(spec["interrupter"]),
        words=_words_from_json(spec.get("words", [])),
        units=_units_from_json(spec.get("units", [])),
    )
    dialogues = _load_dialogues(args.infile)
    if not 0 <= args.index < len(dialogues):
        print(f"record index {args.index} outside corpus", file=sys.stderr)
        return 2
    dialogues[args.index] = insert_interruption_record(dialogues[args.index],
                                                       annotation)
    Path(args.out).write_text(
        write_records([dialogue_to_json(d) for d in dialogues]),
        encoding="utf-8")
    print(f"annotated record {args.index} -> {args.out}")
    return 0


def _load_rules(path) -> FilterRules:
    if not path:
        return FilterRules()
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return FilterRules(
        hallucination_patterns=tuple(obj.get("patterns", [])),
        han_fraction_min=float(obj.get("han_fraction_min", 0.2)))


def cmd_corpus_filter(args) -> int:
    rules = _load_rules(args.rules)
    kept, rejected = [], []
    for dlg in _load_dialogues(args.infile):
        verdict = filter_sample(dlg, rules)
        if verdict.keep:
            kept.append(dialogue_to_json(dlg))
        else:
            record = dialogue_to_json(dlg)
            record["reject_reason"] = verdict.reason
            rejected.append(record)
    Path(args.out).write_text(write_records(kept), encoding="utf-8")
    if args.rejects:
        Path(args.rejects).write_text(write_records(rejected), encoding="utf-8")
    print(f"kept {len(kept)}, rejected {len(rejected)} -> {args.out}")
    return 0


def cmd_corpus_render(args) -> int:
    in_name, _, out_name = args.modality.partition(":")
    input_mod = Modality.parse(in_name)
    output_mod = Modality.parse(out_name)
    out = []
    for dlg in _load_dialogues(args.infile):
        sample = render_training_sample(dlg, input_mod, output_mod,
                                        role=args.role, family=args.family)
        out.append(sample_to_json(sample))
    Path(args.out).write_text(write_records(out), encoding="utf-8")
    print(f"rendered {len(out)} samples -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duplexkit")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--listen", default="127.0.0.1:8990")
    serve.add_argument("--mode", choices=("sim", "live"), default="sim")
    serve.add_argument("--engine", choices=("async", "sync"), default="async")
    serve.add_argument("--config")
    serve.add_argument("--scenario")
    serve.add_argument("--record")
    serve.add_argument("--votes")
    serve.add_argument("--patterns", help="hallucination pattern file")
    serve.set_defaults(fn=cmd_serve)

    replay = sub.add_parser("replay", help="replay a scenario headlessly")
    replay.add_argument("--scenario", required=True)
    replay.add_argument("--mode", choices=("async", "sync"), default="async")
    replay.add_argument("--assert", dest="assert_expectations",
                        action="store_true")
    replay.add_argument("--record")
    replay.add_argument("--horizon", type=int, default=None)
    replay.set_defaults(fn=cmd_replay)

    report = sub.add_parser("report", help="summarize a trace or fixtures")
    report.add_argument("--trace")
    report.add_argument("--fixtures")
    report.set_defaults(fn=cmd_report)

    corpus = sub.add_parser("corpus", help="offline corpus tools")
    csub = corpus.add_subparsers(dest="corpus_command", required=True)

    form = csub.add_parser("form", help="form interleaved token sequences")
    form.add_argument("--in", dest="infile", required=True)
    form.add_argument("--out", required=True)
    form.set_defaults(fn=cmd_corpus_form)

    insert = csub.add_parser("insert", help="insert an interruption annotation")
    insert.add_argument("--in", dest="infile", required=True)
    insert.add_argument("--out", required=True)
    insert.add_argument("--annotation", required=True,
                        help='JSON: {"turn":1,"split":6,"interrupter":"User",'
                             '"words":[["等等",0,200]]}')
    insert.add_argument("--index", type=int, default=0)
    insert.set_defaults(fn=cmd_corpus_insert)

    filt = csub.add_parser("filter", help="apply the quality filter")
    filt.add_argument("--in", dest="infile", required=True)
    filt.add_argument("--out", required=True)
    filt.add_argument("--rules")
    filt.add_argument("--rejects")
    filt.set_defaults(fn=cmd_corpus_filter)

    render = csub.add_parser("render", help="render training samples")
    render.add_argument("--in", dest="infile", required=True)
    render.add_argument("--out", required=True)
    render.add_argument("--modality", required=True, metavar="IN:OUT")
    render.add_argument("--role", default="You are a ChatBot. "
                                          "Have a fun chat with the user.")
    render.add_argument("--family", choices=("dialogue", "pretrain"),
                        default="dialogue")
    render.set_defaults(fn=cmd_corpus_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DuplexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
