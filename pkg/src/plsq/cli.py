"""Command-line entry points: ingest, generate, eval, repl, serve.

Exit codes: 0 success, 1 validation/runtime failure, 2 usage error
(argparse's default).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import engine
from .corpus import load_cache_dir, load_candidate_cache, load_corpus, save_candidate_cache
from .errors import PlsqError
from .evalsim import POLICIES, run_benchmark
from .llm import SamplingConfig, generate_candidates, validate_candidates


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plsq")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="validate a corpus file and report")
    ingest.add_argument("--corpus", required=True)

    generate = sub.add_parser("generate", help="sample candidates for one task")
    generate.add_argument("--corpus", required=True)
    generate.add_argument("--task", required=True)
    generate.add_argument("--out", required=True)
    generate.add_argument("--n", type=int, default=50)
    generate.add_argument("--temperature", type=float, default=0.7)
    generate.add_argument("--model", default="gpt-4o")
    generate.add_argument("--endpoint", default="")

    evaluate = sub.add_parser("eval", help="run the simulated-user benchmark")
    evaluate.add_argument("--corpus", required=True)
    evaluate.add_argument("--caches", required=True)
    evaluate.add_argument("--policies", default=",".join(POLICIES))
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--turn-cap", type=int, default=20)
    evaluate.add_argument("--out", required=True)

    repl = sub.add_parser("repl", help="interactive text-mode clarification loop")
    repl.add_argument("--corpus", required=True)
    repl.add_argument("--cache", required=True)
    repl.add_argument("--task", required=True)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--corpus", required=True)
    serve.add_argument("--caches", default=None)
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--snapshot-dir", default=None)

    return parser


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.corpus)
    print(f"corpus OK: {len(corpus)} tasks")
    for task in corpus:
        print(
            f"  {task.id}: {len(task.gold_sqls)} golds, "
            f"{len(task.db.tables)} tables, type={task.ambiguity_type or '-'}"
        )
    return 0


def cmd_generate(args) -> int:
    corpus = load_corpus(args.corpus)
    task = corpus.task(args.task)
    if task is None:
        print(f"unknown task {args.task!r}", file=sys.stderr)
        return 1
    cfg = SamplingConfig(
        endpoint=args.endpoint, model=args.model, n=args.n, temperature=args.temperature
    )
    cache = generate_candidates(task, cfg)
    save_candidate_cache(cache, args.out)
    print(f"wrote {len(cache.samples)} samples to {args.out}")
    return 0


def cmd_eval(args) -> int:
    corpus = load_corpus(args.corpus)
    caches = load_cache_dir(args.caches)
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    for policy in policies:
        if policy not in POLICIES:
            print(f"unknown policy {policy!r} (choose from {', '.join(POLICIES)})",
                  file=sys.stderr)
            return 1
    report = run_benchmark(
        corpus, caches, policies=policies, seeds=(args.seed,), turn_cap=args.turn_cap
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json())
    print(f"wrote {out / 'report.csv'} and {out / 'report.json'}")
    if report.skipped:
        for task_id, gold, reason in report.skipped:
            print(f"  skipped {task_id} gold {gold}: {reason}")
    return 0


def run_repl(state, input_stream=None, output=None) -> int:
    """Clarification loop: y/n answer the shown variable, s(kip) cycles
    alternatives without consuming a turn, b(ack) undoes, q quits."""
    out = output or sys.stdout
    stream = input_stream or sys.stdin

    def say(text=""):
        print(text, file=out)

    def show_state():
        say(f"\nturn {state.turn}: {len(state.candidates)} candidates, "
            f"{len(state.meanings)} meanings")

    def show_variable():
        if not state.variables:
            say("no decision variables available (functionally distinct candidates "
                "share identical features); use back or quit")
            return
        i = index % len(state.variables)
        variable = state.variables[i]
        say(f"\n[{i + 1}/{len(state.variables)}] "
            f"{' | '.join(variable.display_features())}  "
            f"(IG {variable.ig_bits:.3f} bits)")
        example = state.candidate(variable.example_candidate_id)
        say(f"  example: {example.sql}")
        for feature, probability in variable.implicit_features:
            say(f"  implicit: {feature.display} ({probability:.0%})")

    index = 0
    say(f"utterance: {state.utterance}")
    show_state()
    show_variable()
    for line in stream:
        answer = line.strip().lower()
        if answer in ("q", "quit", "exit"):
            break
        if engine.is_terminal(state):
            break
        try:
            if answer in ("y", "yes", "n", "no"):
                if not state.variables:
                    say("nothing to answer; skip, back or quit")
                    continue
                variable = state.variables[index % len(state.variables)]
                choice = "yes" if answer.startswith("y") else "no"
                state = engine.apply_decision(state, variable, choice)
                index = 0
            elif answer in ("s", "skip"):
                index += 1
            elif answer in ("b", "back"):
                state = engine.undo(state)
                index = 0
            elif answer == "":
                continue
            else:
                say("commands: y(es) n(o) s(kip) b(ack) q(uit)")
                continue
        except PlsqError as exc:
            say(f"rejected: {exc}")
            continue
        show_state()
        if engine.is_terminal(state):
            break
        show_variable()
    if engine.is_terminal(state):
        say("\nresolved; predicted query:")
        top = max(state.candidates, key=lambda c: (c.weight, -c.id))
        say(f"  {top.sql}")
    else:
        say("\nsession left unresolved")
    return 0


def cmd_repl(args) -> int:
    corpus = load_corpus(args.corpus)
    task = corpus.task(args.task)
    if task is None:
        print(f"unknown task {args.task!r}", file=sys.stderr)
        return 1
    cache = load_candidate_cache(args.cache)
    candidates = validate_candidates(cache, task.db)
    state = engine.init_session(task.utterance, candidates)
    return run_repl(state)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    corpus = load_corpus(args.corpus)
    caches = load_cache_dir(args.caches) if args.caches else {}
    app = create_app(corpus, caches, snapshot_dir=args.snapshot_dir)
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "ingest": cmd_ingest,
        "generate": cmd_generate,
        "eval": cmd_eval,
        "repl": cmd_repl,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except PlsqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
