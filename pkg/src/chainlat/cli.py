"""Command-line front end: task-set files, analyses, simulation and generation."""

from __future__ import annotations

import argparse
import json
import sys
from json import scanner as _scanner
from typing import Optional

import jsonschema

from .analysis import AnalysisResult, BadSliceConfig, Mode, analyze
from .encoding import export_flat
from .engine import Infeasible, SolveConfig
from .horizon import HorizonOverflow, UnboundedChain, compute_horizon, relevant_tasks
from .model import (Bounded, Chain, Chained, CommParadigm, Periodic, Sporadic, SystemModel,
                    TaskSpec, ValidationError, validate_chain, validate_system)
from .oracle import ConcreteScenario, DeadlineMiss, NoPath, measure_chain, random_scenario, simulate

EXIT_OK, EXIT_VALIDATION, EXIT_TIMEOUT, EXIT_INTERNAL = 0, 2, 3, 4

FORMAT_VERSION = 1

_INT = {"type": "integer"}

ACTIVATION_SCHEMA = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["periodic", "chained", "bounded", "sporadic"]}},
    "allOf": [
        {"if": {"properties": {"type": {"const": "periodic"}}},
         "then": {"required": ["period"], "additionalProperties": False,
                  "properties": {"type": {}, "period": _INT, "offset": _INT}}},
        {"if": {"properties": {"type": {"const": "chained"}}},
         "then": {"required": ["predecessor"], "additionalProperties": False,
                  "properties": {"type": {}, "predecessor": {"type": "string"}}}},
        {"if": {"properties": {"type": {"const": "bounded"}}},
         "then": {"required": ["dt_min", "dt_max"], "additionalProperties": False,
                  "properties": {"type": {}, "dt_min": _INT, "dt_max": _INT}}},
        {"if": {"properties": {"type": {"const": "sporadic"}}},
         "then": {"required": ["dt_min"], "additionalProperties": False,
                  "properties": {"type": {}, "dt_min": _INT}}},
    ],
}

TASK_SCHEMA = {
    "type": "object",
    "required": ["name", "activation", "prio", "core", "deadline"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "label": {"type": "string"},
        "activation": ACTIVATION_SCHEMA,
        "prio": _INT,
        "core": _INT,
        "deadline": _INT,
        "bcet": _INT,
        "wcet": {"type": ["integer", "null"]},
        "wcrt": {"type": ["integer", "null"]},
        "preemptable": {"type": "boolean"},
        "comm": {"enum": [c.value for c in CommParadigm]},
    },
}

TASKSET_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "time_unit", "num_cores", "tasks"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": FORMAT_VERSION},
        "time_unit": {"const": "us"},
        "num_cores": _INT,
        "tasks": {"type": "array", "items": TASK_SCHEMA},
        "chains": {"type": "object",
                   "additionalProperties": {"type": "array", "items": {"type": "string"}}},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "activations": {"type": "object", "additionalProperties": {"type": "array", "items": _INT}},
        "demands": {"type": "object", "additionalProperties": {"type": "array", "items": _INT}},
    },
}


class FileError(ValueError):
    """Unreadable, malformed or schema-violating input; message carries the line."""


# --- JSON with line numbers -----------------------------------------------------

class _LineDecoder(json.JSONDecoder):
    """Records the source line of every object and array it builds."""

    def __init__(self, text):
        super().__init__()
        self.lines = {}
        self._text = text
        plain_obj, plain_arr = self.parse_object, self.parse_array

        def obj(s_and_end, *rest):
            value, end = plain_obj(s_and_end, *rest)
            self.lines[id(value)] = self._line(s_and_end[1])
            return value, end

        def arr(s_and_end, scan_once):
            value, end = plain_arr(s_and_end, scan_once)
            self.lines[id(value)] = self._line(s_and_end[1])
            return value, end

        self.parse_object, self.parse_array = obj, arr
        # the C scanner ignores the hooks above
        self.scan_once = _scanner.py_make_scanner(self)

    def _line(self, pos):
        return self._text.count("\n", 0, pos) + 1


def _load_json(text: str, source: str):
    dec = _LineDecoder(text)
    try:
        data = dec.decode(text)
    except json.JSONDecodeError as e:
        raise FileError(f"{source}:{e.lineno}: malformed JSON: {e.msg}") from None
    return data, dec.lines


def _line_of(data, lines, path) -> int:
    node, line = data, lines.get(id(data), 1)
    for key in path:
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            break
        line = lines.get(id(node), line)
    return line


def _schema_check(data, lines, schema, source):
    v = jsonschema.Draft202012Validator(schema)
    errors = sorted(v.iter_errors(data), key=lambda e: (_line_of(data, lines, e.absolute_path),
                                                         list(map(str, e.absolute_path))))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(map(str, e.absolute_path)) or "<top>"
            msgs.append(f"{source}:{_line_of(data, lines, e.absolute_path)}: {where}: {e.message}")
        raise FileError("\n".join(msgs))


# --- task-set files -------------------------------------------------------------

def _activation_from(d) -> object:
    kind = d["type"]
    if kind == "periodic":
        return Periodic(d["period"], d.get("offset", 0))
    if kind == "chained":
        return Chained(d["predecessor"])
    if kind == "bounded":
        return Bounded(d["dt_min"], d["dt_max"])
    return Sporadic(d["dt_min"])


def _activation_to(a) -> dict:
    if isinstance(a, Periodic):
        return {"type": "periodic", "period": a.period, "offset": a.offset}
    if isinstance(a, Chained):
        return {"type": "chained", "predecessor": a.predecessor}
    if isinstance(a, Bounded):
        return {"type": "bounded", "dt_min": a.dt_min, "dt_max": a.dt_max}
    return {"type": "sporadic", "dt_min": a.dt_min}


def parse_taskset(text: str, source: str = "<input>") -> tuple[SystemModel, dict]:
    """Parse and validate a task-set document; returns the model and its named chains."""
    data, lines = _load_json(text, source)
    _schema_check(data, lines, TASKSET_SCHEMA, source)
    tasks = []
    task_line = {}
    for d in data["tasks"]:
        task_line[d["name"]] = lines.get(id(d), 1)
        tasks.append(TaskSpec(
            id=d["name"], activation=_activation_from(d["activation"]), prio=d["prio"],
            core=d["core"], deadline=d["deadline"], bcet=d.get("bcet", 0),
            preemptable=d.get("preemptable", True), wcet=d.get("wcet"), wcrt=d.get("wcrt"),
            comm=CommParadigm(d.get("comm", "implicit")), name=d.get("label", ""),
        ))
    try:
        system = validate_system(tasks, data["num_cores"])
    except ValidationError as e:
        msgs = [f"{source}:{task_line.get(v.task, 1)}: {v}" for v in e.violations]
        raise FileError("\n".join(msgs)) from None
    chains = {}
    chain_data = data.get("chains", {})
    for name, ids in chain_data.items():
        try:
            chains[name] = validate_chain(system, Chain(tuple(ids), name))
        except ValidationError as e:
            line = lines.get(id(ids), 1)
            raise FileError("\n".join(f"{source}:{line}: chain {name}: {v}"
                                      for v in e.violations)) from None
    return system, chains


def taskset_to_dict(system: SystemModel, chains: Optional[dict] = None) -> dict:
    tasks = []
    for t in system.tasks:
        d = {"name": t.id, "activation": _activation_to(t.activation), "prio": t.prio,
             "core": t.core, "deadline": t.deadline, "bcet": t.bcet, "preemptable": t.preemptable,
             "comm": t.comm.value}
        if t.wcet is not None:
            d["wcet"] = t.wcet
        if t.wcrt is not None:
            d["wcrt"] = t.wcrt
        if t.name:
            d["label"] = t.name
        tasks.append(d)
    out = {"schema": FORMAT_VERSION, "time_unit": "us", "num_cores": system.num_cores,
           "tasks": tasks}
    if chains:
        out["chains"] = {name: list(c.tasks) for name, c in chains.items()}
    return out


def serialize_taskset(system: SystemModel, chains: Optional[dict] = None) -> str:
    return json.dumps(taskset_to_dict(system, chains), indent=2) + "\n"


def load_taskset(path: str) -> tuple[SystemModel, dict]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise FileError(f"{path}: cannot read: {e.strerror}") from None
    return parse_taskset(text, path)


def load_scenario(spec: str, system: SystemModel, until: int) -> ConcreteScenario:
    """``random:SEED`` or a JSON file with activations and demands per task."""
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise FileError(f"bad scenario seed in {spec!r}") from None
        return random_scenario(system, until, seed)
    try:
        with open(spec) as f:
            text = f.read()
    except OSError as e:
        raise FileError(f"{spec}: cannot read: {e.strerror}") from None
    data, lines = _load_json(text, spec)
    _schema_check(data, lines, SCENARIO_SCHEMA, spec)
    for tid in list(data.get("activations", {})) + list(data.get("demands", {})):
        if tid not in system:
            raise FileError(f"{spec}:{_line_of(data, lines, [])}: unknown task {tid!r}")
    return ConcreteScenario(data.get("activations", {}), data.get("demands", {}))


def _pick_chain(chains: dict, name: str) -> Chain:
    if name not in chains:
        known = ", ".join(sorted(chains)) or "none"
        raise FileError(f"no chain named {name!r} (file defines: {known})")
    return chains[name]


# --- reports --------------------------------------------------------------------

WITNESS_COLUMNS = ("task", "n", "alpha", "sigma", "iota", "epsilon", "x")


def analysis_report(res: AnalysisResult, chain: Chain) -> dict:
    hz = res.horizon
    return {
        "schema": FORMAT_VERSION,
        "command": "analyze",
        "chain": chain.name,
        "tasks": list(chain.tasks),
        "mode": res.mode.value,
        "latency": res.latency,
        "bound_kind": res.bound_kind.value,
        "timed_out": res.timed_out,
        "horizon": {"T": hz.T, "O": hz.O, "LCM": hz.lcm, "UB": hz.ub},
        "relevant_tasks": len(res.relevant),
        "witness": [{c: row[c] for c in WITNESS_COLUMNS} for row in res.chain_trace()],
        "notes": list(res.notes),
        "stats": {k: res.stats[k] for k in ("seconds", "nodes", "workers") if k in res.stats},
    }


def format_table(rows, columns) -> str:
    cells = [[str(c) for c in columns]] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells)


def _print_analysis(rep: dict, out):
    hz = rep["horizon"]
    print(f"chain      {rep['chain']}: {' -> '.join(rep['tasks'])}", file=out)
    print(f"latency    {rep['latency']} us", file=out)
    print(f"bound      {rep['bound_kind']} ({rep['mode']})", file=out)
    print(f"horizon    T={hz['T']} O={hz['O']} LCM={hz['LCM']} UB={hz['UB']}", file=out)
    print(f"relevant   {rep['relevant_tasks']} tasks", file=out)
    for n in rep["notes"]:
        print(f"note       {n}", file=out)
    if rep["timed_out"]:
        print("note       search timed out; latency is a lower bound", file=out)
    if rep["witness"]:
        print(file=out)
        print(format_table(rep["witness"], WITNESS_COLUMNS), file=out)


# --- commands -------------------------------------------------------------------

def cmd_analyze(args, out=sys.stdout) -> int:
    system, chains = load_taskset(args.file)
    chain = _pick_chain(chains, args.chain)
    cfg = SolveConfig(workers=args.workers, timeout=args.timeout)
    res = analyze(system, chain, Mode(args.mode), cfg, slice_len=args.slice, overlap=args.overlap,
                  prune=not args.no_prune)
    if args.export_model:
        with open(args.export_model, "w") as f:
            f.write(export_flat(res.system))
    rep = analysis_report(res, chain)
    if args.plot and res.witness is not None:
        from .plot import plot_witness
        rep["plot"] = plot_witness(res, args.plot)
    if args.json:
        json.dump(rep, out, indent=2)
        out.write("\n")
    else:
        _print_analysis(rep, out)
        if "plot" in rep:
            print(f"plot       {rep['plot']}", file=out)
    return EXIT_TIMEOUT if res.timed_out else EXIT_OK


def cmd_simulate(args, out=sys.stdout) -> int:
    system, chains = load_taskset(args.file)
    chain = _pick_chain(chains, args.chain)
    until = args.until
    if until is None:
        until = compute_horizon(system, chain, relevant_tasks(system, chain)).T
    scenario = load_scenario(args.scenario, system, until)
    sched = simulate(system, scenario, until)
    try:
        lat = measure_chain(sched, system, chain)
    except NoPath:
        lat = None
    if args.trace:
        with open(args.trace, "w") as f:
            f.write(sched.dump_trace())
    rep = {"schema": FORMAT_VERSION, "command": "simulate", "chain": chain.name,
           "tasks": list(chain.tasks), "until": until, "latency": lat,
           "jobs": len(sched.jobs), "trace": args.trace}
    if args.plot:
        from .plot import plot_schedule
        rep["plot"] = plot_schedule(sched, system, args.plot, title=f"chain {chain.name}")
    if args.json:
        json.dump(rep, out, indent=2)
        out.write("\n")
    else:
        print(f"chain      {chain.name}: {' -> '.join(chain.tasks)}", file=out)
        print(f"simulated  [0, {until}] us, {len(sched.jobs)} jobs", file=out)
        print(f"latency    {lat if lat is not None else 'no complete chain'}"
              + (" us" if lat is not None else ""), file=out)
        if args.trace:
            print(f"trace      {args.trace}", file=out)
        if "plot" in rep:
            print(f"plot       {rep['plot']}", file=out)
    return EXIT_OK


def cmd_generate(args, out=sys.stdout) -> int:
    from .profiles import generate
    system, chains = generate(args.profile, args.seed)
    text = serialize_taskset(system, chains)
    with open(args.out, "w") as f:
        f.write(text)
    rep = {"schema": FORMAT_VERSION, "command": "generate", "profile": args.profile,
           "seed": args.seed, "out": args.out, "tasks": len(system.tasks),
           "num_cores": system.num_cores, "chains": {n: list(c.tasks) for n, c in chains.items()}}
    if args.json:
        json.dump(rep, out, indent=2)
        out.write("\n")
    else:
        print(f"wrote {args.out}: {len(system.tasks)} tasks on {system.num_cores} cores, "
              f"chains {', '.join(chains)}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chainlat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="worst-case latency of a chain")
    a.add_argument("file")
    a.add_argument("--chain", required=True)
    a.add_argument("--mode", choices=[m.value for m in Mode], default="full")
    a.add_argument("--slice", type=int, help="slice length (us), decomposed mode")
    a.add_argument("--overlap", type=int, help="slice overlap (us), decomposed mode")
    a.add_argument("--workers", type=int, default=1, help="0 means one per CPU")
    a.add_argument("--timeout", type=float, help="seconds")
    a.add_argument("--no-prune", action="store_true", help="keep irrelevant tasks")
    a.add_argument("--json", action="store_true")
    a.add_argument("--export-model", metavar="PATH")
    a.add_argument("--plot", metavar="PATH", help="write a Gantt chart of the witness schedule")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="simulate one concrete scenario")
    s.add_argument("file")
    s.add_argument("--chain", required=True)
    s.add_argument("--scenario", default="random:0", help="scenario file or random:SEED")
    s.add_argument("--until", type=int, help="last root activation instant (us)")
    s.add_argument("--trace", metavar="PATH")
    s.add_argument("--json", action="store_true")
    s.add_argument("--plot", metavar="PATH", help="write a Gantt chart of the schedule")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("generate", help="write a synthetic task-set file")
    g.add_argument("--profile", choices=["ptc-a", "ptc-b", "ecm-like", "random"], required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (FileError, ValidationError, BadSliceConfig, UnboundedChain, HorizonOverflow) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except DeadlineMiss as e:
        print(f"error: deadline miss: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Infeasible as e:
        print(f"error: no feasible schedule completes the chain: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # pragma: no cover - safety net for the exit-code contract
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
