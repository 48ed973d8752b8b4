"""Command-line interface.

Subcommands: validate, gen, play, replay, segment, eval, serve, stats.
Exit codes: 0 success, 1 data error, 2 usage error.

Environment overrides for defaults: CHOREBENCH_TASKS and
CHOREBENCH_FLOORPLANS (library/floorplan directories), CHOREBENCH_MAX_STEPS,
CHOREBENCH_MAX_FAILS, CHOREBENCH_SEED, CHOREBENCH_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

from .agents import AgentConfig, EpisodeLimits, run_tatc_episode
from .bench import (
    EdhInstance,
    InferenceLimits,
    TfdInstance,
    aggregate,
    extract_tfd,
    segment_edh,
    session_stats,
)
from .errors import ChoreBenchError, ReplayDivergence
from .floorplan import load_floorplan_dir, shipped_floorplans
from .library import (
    BENCHMARK_TASKS,
    default_hierarchy,
    load_library,
    load_library_from_dir,
    scan_task_dir,
    shipped_library,
)
from .scenario import generate_scenario, pick_variant
from .session import Session
from . import report as reportmod

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


def _load_plans(args):
    if getattr(args, "floorplans", None):
        return load_floorplan_dir(args.floorplans)
    return shipped_floorplans()


def _load_lib(args):
    if getattr(args, "tasks", None):
        return load_library_from_dir(args.tasks)
    return shipped_library()


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",")]


def _emit(args, rows, label=""):
    if getattr(args, "format", "table") == "record":
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    else:
        if label:
            print(label)
        print(reportmod.format_table(rows), end="")


# ----------------------------------------------------------- subcommands


def cmd_validate(args) -> int:
    hierarchy = default_hierarchy()
    errors = []
    sources = []
    n_top = 0
    for raw in args.paths:
        path = Path(raw)
        if path.is_dir():
            try:
                found = scan_task_dir(path)
            except ChoreBenchError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_DATA
            sources.extend(found)
            n_top += len(list(path.glob("*.task")))
        else:
            sources.append((str(path), path.read_text(encoding="utf-8")))
            n_top += 1
    try:
        load_library(sources, hierarchy, lenient=args.lenient)
    except ChoreBenchError as exc:
        errors.append(str(exc))
    n_helpers = len(sources) - n_top
    suffix = f" (+{n_helpers} helper tasks)" if n_helpers else ""
    print(f"{n_top} tasks, {len(errors)} errors{suffix}")
    for err in errors:
        print(f"  {err}", file=sys.stderr)
    return EXIT_DATA if errors else EXIT_OK


def cmd_gen(args) -> int:
    lib = _load_lib(args)
    plans = _load_plans(args)
    if args.params is not None:
        ground = lib.ground(args.task, args.params)
        plan = plans[args.floorplan] if args.floorplan else None
        if plan is None:
            print("error: --floorplan required with explicit --params", file=sys.stderr)
            return EXIT_USAGE
    else:
        ground, plan = pick_variant(args.task, plans, args.seed, lib)
        if args.floorplan:
            plan = plans[args.floorplan]
    scenario = generate_scenario(ground, plan, args.seed, lib)
    out = Path(args.out) if args.out else Path(f"scenario_{args.seed}.json")
    out.write_text(json.dumps(scenario.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_play(args) -> int:
    lib = _load_lib(args)
    plans = _load_plans(args)
    tasks = [args.task] if args.task else list(BENCHMARK_TASKS)
    seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    agent_config = AgentConfig(partial_policy_coverage=args.partial_policies)
    limits = EpisodeLimits(max_steps=args.max_steps, max_fails=args.max_fails)
    rows = []
    per_task = {}
    for task in tasks:
        wins = 0
        for seed in seeds:
            if args.params is not None:
                ground = lib.ground(task, args.params)
                plan = plans[args.floorplan] if args.floorplan else None
                if plan is None:
                    print("error: --floorplan required with --params", file=sys.stderr)
                    return EXIT_USAGE
            else:
                ground, plan = pick_variant(task, plans, seed, lib)
            scenario = generate_scenario(ground, plan, seed, lib)
            session, success = run_tatc_episode(
                scenario, plan, lib, limits, agent_config
            )
            session.save(out_dir / f"{session.session_id}.json")
            wins += int(success)
            rows.append(
                {
                    "session_id": session.session_id,
                    "task_name": task,
                    "seed": seed,
                    "floorplan_id": scenario.floorplan_id,
                    "success": int(success),
                    "actions": len(session.actions),
                }
            )
        per_task[task] = wins / len(seeds)
    reportmod.write_records(out_dir / "play_summary.tsv", rows)
    reportmod.render_success_figure(out_dir / "success_by_task.png", per_task)
    summary = [
        {"task_name": t, "episodes": len(seeds), "success_rate": rate}
        for t, rate in sorted(per_task.items())
    ]
    overall = sum(per_task.values()) / len(per_task)
    summary.append({"task_name": "Overall", "episodes": len(seeds) * len(tasks), "success_rate": overall})
    _emit(args, summary)
    return EXIT_OK


def cmd_replay(args) -> int:
    from .session import replay

    lib = _load_lib(args)
    plans = _load_plans(args)
    status = EXIT_OK
    for path in args.sessions:
        session = Session.load(path)
        plan = plans[session.floorplan_id]
        try:
            replay(session, plan, lib)
            print(f"{path}: OK")
        except ReplayDivergence as exc:
            print(f"{path}: DIVERGED at action {exc.index}: {exc}", file=sys.stderr)
            status = EXIT_DATA
    return status


def cmd_segment(args) -> int:
    lib = _load_lib(args)
    plans = _load_plans(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_edh = n_tfd = 0
    for path in sorted(Path(args.sessions).glob("*.json")):
        if path.name.endswith("_summary.json"):
            continue
        session = Session.load(path)
        plan = plans[session.floorplan_id]
        if args.kind in ("edh", "both"):
            for instance in segment_edh(
                session, plan, lib, drop_commander_ops=args.drop_commander_ops
            ):
                out = out_dir / f"{instance.instance_id}.json"
                out.write_text(json.dumps(instance.to_dict(), indent=1) + "\n")
                n_edh += 1
        if args.kind in ("tfd", "both"):
            try:
                instance = extract_tfd(session)
            except ChoreBenchError:
                continue  # no state change between start and end
            out = out_dir / f"{instance.instance_id}.json"
            out.write_text(json.dumps(instance.to_dict(), indent=1) + "\n")
            n_tfd += 1
    print(f"wrote {n_edh} EDH and {n_tfd} TfD instances to {out_dir}")
    return EXIT_OK


def _load_instances(path, kind):
    instances = []
    for file in sorted(Path(path).glob("*.json")):
        data = json.loads(file.read_text(encoding="utf-8"))
        if data.get("kind") != kind:
            continue
        cls = EdhInstance if kind == "edh" else TfdInstance
        instances.append(cls.from_dict(data))
    return instances


def cmd_eval(args) -> int:
    from .bench import OracleReplayAgent, run_inference, score
    from .errors import ProtocolViolation
    from .protocol import LineChannel
    from .server import evaluate_instances_over_channel

    lib = _load_lib(args)
    plans = _load_plans(args)
    instances = _load_instances(args.instances, args.benchmark)
    if not instances:
        print(f"error: no {args.benchmark} instances in {args.instances}", file=sys.stderr)
        return EXIT_DATA
    limits = InferenceLimits(max_steps=args.max_steps, max_fails=args.max_fails)
    rows = []
    if args.oracle:

        def eval_one(instance):
            plan = plans[instance.floorplan_id]
            try:
                outcome = run_inference(OracleReplayAgent(), instance, plan, lib, limits)
                metrics = score(outcome, instance)
                halt = outcome.halt
                pred = len(outcome.predicted_actions)
            except ProtocolViolation as exc:
                print(f"{instance.instance_id}: protocol violation: {exc}", file=sys.stderr)
                metrics = {"SR": 0.0, "GC": 0.0, "TLW_SR": 0.0, "TLW_GC": 0.0}
                halt = "protocol_error"
                pred = 0
            return {
                "instance_id": instance.instance_id,
                "task_name": instance.task_name,
                "halt": halt,
                "predicted": pred,
                "reference": len(instance.reference_actions),
                **metrics,
            }

        if args.workers > 1:
            # each worker owns its world copy; aggregation is order-stable
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                rows = list(pool.map(eval_one, instances))
        else:
            rows = [eval_one(instance) for instance in instances]
    elif args.agent_cmd:
        proc = subprocess.Popen(
            args.agent_cmd,
            shell=True,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        channel = LineChannel(proc.stdout, proc.stdin, "eval")
        rows = list(
            evaluate_instances_over_channel(
                channel, instances, plans, lib, limits, benchmark=args.benchmark
            )
        )
        proc.stdin.close()
        proc.wait(timeout=10)
    else:
        print("error: need --agent-cmd or --oracle", file=sys.stderr)
        return EXIT_USAGE
    per_task: dict[str, list] = {}
    for row in rows:
        per_task.setdefault(row["task_name"], []).append(row)
    summary = aggregate(rows)
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    reportmod.write_records(report_dir / f"{args.benchmark}_results.tsv", rows)
    per_task_summary = {t: aggregate(rs) for t, rs in per_task.items()}
    reportmod.render_eval_figure(report_dir / f"{args.benchmark}_metrics.png", per_task_summary)
    summary_row = {"instances": summary["instances"], **{k: summary[k] for k in ("SR", "GC", "TLW_SR", "TLW_GC")}}
    (report_dir / f"{args.benchmark}_summary.json").write_text(
        json.dumps(summary_row, indent=1, sort_keys=True) + "\n"
    )
    _emit(args, [summary_row], label=f"{args.benchmark} macro summary:")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import AgentServer, ServeConfig

    lib = _load_lib(args)
    plans = _load_plans(args)
    config = ServeConfig(
        max_steps=args.max_steps, max_fails=args.max_fails, idle_timeout=args.idle_timeout
    )
    scenarios = []
    instances = []
    if args.mode == "tatc":
        tasks = [args.task] if args.task else list(BENCHMARK_TASKS)
        for seed in _parse_seeds(args.seeds):
            for task in tasks:
                ground, plan = pick_variant(task, plans, seed, lib)
                scenarios.append(generate_scenario(ground, plan, seed, lib))
    else:
        if not args.instances:
            print("error: --instances required for edh/tfd serving", file=sys.stderr)
            return EXIT_USAGE
        instances = _load_instances(args.instances, args.mode)
    out_dir = None
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    server = AgentServer(
        args.host, args.port, lib, plans,
        mode=args.mode, scenarios=scenarios, instances=instances,
        config=config, out_dir=out_dir,
    )
    print(f"serving {args.mode} on {args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def cmd_stats(args) -> int:
    sessions = []
    for path in sorted(Path(args.sessions).glob("*.json")):
        if path.name.endswith("_summary.json"):
            continue
        sessions.append(Session.load(path))
    if not sessions:
        print(f"error: no sessions in {args.sessions}", file=sys.stderr)
        return EXIT_DATA
    rows = session_stats(sessions)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.sessions)
    out_dir.mkdir(parents=True, exist_ok=True)
    reportmod.write_records(out_dir / "session_stats.tsv", rows)
    reportmod.render_stats_figures(out_dir, sessions)
    _emit(args, rows)
    return EXIT_OK


# ------------------------------------------------------------- arg parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chorebench",
        description="Household-task benchmark engine: author tasks, run and "
        "record two-agent episodes, and evaluate external agents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, plans=True, tasks=True, fmt=True):
        if tasks:
            p.add_argument(
                "--tasks",
                default=os.environ.get("CHOREBENCH_TASKS"),
                help="task library directory (default: shipped set)",
            )
        if plans:
            p.add_argument(
                "--floorplans",
                default=os.environ.get("CHOREBENCH_FLOORPLANS"),
                help="floorplan directory (default: shipped set)",
            )
        if fmt:
            p.add_argument("--format", choices=("record", "table"), default="table")

    def add_limits(p):
        p.add_argument("--max-steps", type=int, default=_env_int("CHOREBENCH_MAX_STEPS", 1000))
        p.add_argument("--max-fails", type=int, default=_env_int("CHOREBENCH_MAX_FAILS", 30))

    p = sub.add_parser("validate", help="validate task library directories or files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--lenient", action="store_true", help="allow unknown fields")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("gen", help="generate a scenario file")
    p.add_argument("--task", required=True)
    p.add_argument("--params", nargs="*", default=None)
    p.add_argument("--floorplan")
    p.add_argument("--seed", type=int, default=_env_int("CHOREBENCH_SEED", 0))
    p.add_argument("--out")
    add_common(p, fmt=False)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("play", help="run rule-agent episodes and record sessions")
    p.add_argument("--task", help="task name (default: all benchmark tasks)")
    p.add_argument("--params", nargs="*", default=None)
    p.add_argument("--floorplan")
    p.add_argument("--seeds", default="0..9", help="e.g. 0..49 or 0,3,7")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--partial-policies", action="store_true",
                   help="disable the boiling and bread-toasting policies")
    add_limits(p)
    add_common(p)
    p.set_defaults(fn=cmd_play)

    p = sub.add_parser("replay", help="verify sessions replay to their recorded hash")
    p.add_argument("sessions", nargs="+")
    add_common(p, fmt=False)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("segment", help="extract EDH/TfD instances from sessions")
    p.add_argument("--sessions", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=("edh", "tfd", "both"), default="both")
    p.add_argument("--drop-commander-ops", action="store_true",
                   help="strip Commander environment actions from EDH histories")
    add_common(p, fmt=False)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("eval", help="evaluate an agent on benchmark instances")
    p.add_argument("benchmark", choices=("edh", "tfd"))
    p.add_argument("--instances", required=True)
    p.add_argument("--agent-cmd", help="external agent command (line protocol on stdio)")
    p.add_argument("--oracle", action="store_true", help="run the reference-replay oracle agent")
    p.add_argument("--report-dir", default="eval_report")
    p.add_argument("--workers", type=int, default=_env_int("CHOREBENCH_WORKERS", 1),
                   help="parallel worker slots (in-process agents only)")
    add_limits(p)
    add_common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="serve episodes to external agents over TCP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--mode", choices=("tatc", "edh", "tfd"), default="tatc")
    p.add_argument("--task")
    p.add_argument("--seeds", default="0..9")
    p.add_argument("--instances")
    p.add_argument("--out-dir")
    add_limits(p)
    p.add_argument("--idle-timeout", type=float, default=60.0)
    add_common(p, fmt=False)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("stats", help="per-task statistics over a session corpus")
    p.add_argument("--sessions", required=True)
    p.add_argument("--out-dir")
    add_common(p)
    p.set_defaults(fn=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ChoreBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
