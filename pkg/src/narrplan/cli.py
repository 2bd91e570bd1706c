"""Command-line entry point: ``narrplan <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .domains import DOMAIN_IDS, canonical, params_from_dict
from .domains.batch import gen_batch, write_batch
from .model import DomainError
from .oracle import BudgetExceeded, SearchBudget, Solved, solve
from .prompts import CALIBRATED, ONE_OFF, ParseError, parse_plan, render_plan, render_task_prompt
from .serialize import read_task, save_task, step_from_dict
from .simulator import grounded_for
from .validators import validate


def _budget(args) -> SearchBudget:
    return SearchBudget(args.max_depth, args.max_nodes, args.time_limit)


def _load_task(spec: str):
    if spec in DOMAIN_IDS:
        return canonical(spec)
    return read_task(spec)


def _read_plan(path: str, task):
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        return tuple(step_from_dict(d) for d in json.loads(text))
    return parse_plan(text, grounded_for(task), task.mode)


def cmd_gen(args) -> int:
    params = [params_from_dict(json.loads(p)) for p in args.params]
    result = gen_batch(params, args.count, _budget(args), args.seed, args.max_draws, args.workers)
    paths = write_batch(result, args.out)
    for entry in result.manifest:
        print(f"{entry['params']['domain']}: retained {entry['retained']}, rejected {entry['rejected']}, "
              f"shortfall {entry['shortfall']}")
    print(f"wrote {len(paths)} tasks to {args.out}")
    return 0 if result.shortfall == 0 else 3


def cmd_canonical(args) -> int:
    save_task(canonical(args.domain), args.out)
    return 0


def cmd_verify(args) -> int:
    task = _load_task(args.task)
    outcome = solve(task, _budget(args))
    report = {"task": task.task_id, "outcome": type(outcome).__name__, "nodes": outcome.nodes}
    if isinstance(outcome, Solved):
        report["length"] = outcome.depth
    elif isinstance(outcome, BudgetExceeded):
        report["reason"] = outcome.reason
    else:
        report["depth"] = outcome.depth
        report["exhaustive"] = outcome.exhaustive
    print(json.dumps(report, sort_keys=True))
    return 0 if isinstance(outcome, Solved) else 1


def cmd_render(args) -> int:
    print(render_task_prompt(_load_task(args.task), args.mode).text(), end="")
    return 0


def cmd_validate(args) -> int:
    task = _load_task(args.task)
    plan = _read_plan(args.plan, task)
    report = validate(task, plan)
    print(report.to_json())
    return 0 if report.accepted else 1


def cmd_solve(args) -> int:
    task = _load_task(args.task)
    outcome = solve(task, _budget(args))
    if not isinstance(outcome, Solved):
        print(f"no plan: {outcome}", file=sys.stderr)
        return 1
    text = render_plan(outcome.plan) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_run(args) -> int:
    from .harness import RunConfig, agent_from_spec, aggregate, run_many

    conf = {}
    if args.config:
        conf = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key in ("agent", "attempts", "parallel", "out", "seed"):
        value = getattr(args, key)
        if value is not None:
            conf[key] = value
    if args.mode is not None:
        conf["prompt_mode"] = args.mode
    config = RunConfig.from_dict(conf)
    replies = None
    if args.replay:
        replies = json.loads(Path(args.replay).read_text(encoding="utf-8"))
    agent = agent_from_spec(config.agent, args.base_url, args.model, args.key_env, replies)
    tasks = [_load_task(t) for t in args.task]
    records = run_many(tasks, agent, config)
    print(aggregate(records).render())
    return 0


def cmd_report(args) -> int:
    from .harness import aggregate, load_records

    records = []
    for path in args.records:
        records.extend(load_records(path))
    table = aggregate(records)
    print(table.render())
    if args.json:
        Path(args.json).write_text(table.to_json() + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="narrplan", description="Narrative planning benchmark tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def budget_flags(sp):
        sp.add_argument("--max-depth", type=int, default=24)
        sp.add_argument("--max-nodes", type=int, default=5_000_000)
        sp.add_argument("--time-limit", type=float, default=60.0)

    task_help = "task JSON file or a canonical domain id (" + ", ".join(DOMAIN_IDS) + ")"

    sp = sub.add_parser("gen", help="generate verified task files")
    sp.add_argument("--params", action="append", required=True,
                    help='generator params as JSON, e.g. \'{"domain": "secret_agent", "n": 5}\'')
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--max-draws", type=int, default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True)
    budget_flags(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("canonical", help="write a canonical task file")
    sp.add_argument("domain", choices=DOMAIN_IDS)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_canonical)

    sp = sub.add_parser("verify", help="check that a task is solvable")
    sp.add_argument("task", help=task_help)
    budget_flags(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("render", help="print the prompt for a task")
    sp.add_argument("task", help=task_help)
    sp.add_argument("--mode", choices=(ONE_OFF, CALIBRATED), default=ONE_OFF)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("validate", help="validate a plan; exit 1 when rejected")
    sp.add_argument("task", help=task_help)
    sp.add_argument("plan", help="plan text (one step per line) or JSON list of steps")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="print a minimal plan")
    sp.add_argument("task", help=task_help)
    sp.add_argument("--out")
    budget_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("run", help="run attempts and append records to JSONL")
    sp.add_argument("--task", action="append", required=True, help=task_help)
    sp.add_argument("--agent", help="remote, replay, oracle or corrupt:<mutation>")
    sp.add_argument("--mode", choices=(ONE_OFF, CALIBRATED))
    sp.add_argument("--attempts", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--config", help="JSON run config; flags override it")
    sp.add_argument("--parallel", type=int)
    sp.add_argument("--base-url")
    sp.add_argument("--model")
    sp.add_argument("--key-env", default="NARRPLAN_API_KEY")
    sp.add_argument("--replay", help="JSON list of scripted replies for the replay agent")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("report", help="summarize JSONL records")
    sp.add_argument("records", nargs="+")
    sp.add_argument("--json", help="also write the table as JSON")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, DomainError, ParseError, KeyError, json.JSONDecodeError) as exc:
        print(f"narrplan {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
