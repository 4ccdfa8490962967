"""Command-line interface.

Every command prints a result (a short text report, or JSON with
``--json``).  With ``--output DIR`` the result files and a
``manifest.json`` describing the run are written to ``DIR``; without it the
manifest goes to stderr as a single JSON line.  Exit codes: 0 success,
1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shlex
import subprocess
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import (
    OPTIMISTIC,
    PESSIMISTIC,
    Dataset,
    EvalConfig,
    classify_neighbors,
    evaluate_selection,
    generate_synthetic_dataset,
    load_dataset,
)
from .fixtures import BUILTIN
from .hardness import load_mc_instance, predicted_objective, reduce_max_coverage
from .solvers import KOptConfig, exact_enumeration, k_opt_search, random_selection_baseline

MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    """Bad arguments detected after parsing; maps to exit code 2."""


def _num(x):
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _sha256_file(path) -> str:
    return _sha256_bytes(Path(path).read_bytes())


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Run:
    """Collects inputs, outputs and seeds of one invocation and writes the manifest."""

    def __init__(self, args: argparse.Namespace, argv: list):
        self.args = args
        self.argv = list(argv)
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.seeds: dict = {}
        self.config: dict = {}
        self.started = time.perf_counter()
        self.start_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.out_dir = Path(args.output) if getattr(args, "output", None) else None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def add_input(self, label: str, path=None, data: bytes | None = None) -> None:
        self.inputs[label] = _sha256_file(path) if path is not None else _sha256_bytes(data)

    def write(self, name: str, text: str) -> Path | None:
        if self.out_dir is None:
            return None
        path = self.out_dir / name
        path.write_text(text)
        self.outputs[name] = _sha256_bytes(text.encode())
        return path

    def write_json(self, name: str, payload: dict) -> Path | None:
        return self.write(name, _dumps(dict(payload, manifest=MANIFEST_NAME)))

    def manifest(self) -> dict:
        return {
            "command": self.args.command,
            "argv": self.argv,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": __version__,
            "timings": {"start_utc": self.start_utc,
                        "elapsed_seconds": round(time.perf_counter() - self.started, 6)},
        }

    def finish(self) -> None:
        man = self.manifest()
        if self.out_dir is not None:
            (self.out_dir / MANIFEST_NAME).write_text(_dumps(man))
        else:
            print("manifest " + json.dumps(man, sort_keys=True), file=sys.stderr)


# -- dataset helpers ----------------------------------------------------------

def _load_dataset(run: Run, spec: str, normalize: bool = False) -> Dataset:
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in BUILTIN:
            raise UsageError(f"unknown builtin dataset {name!r}; choose from {sorted(BUILTIN)}")
        ds = BUILTIN[name]()
        if normalize:
            ds = ds.normalized()
        run.add_input(spec, data=json.dumps(ds.to_dict(), sort_keys=True).encode())
        return ds
    run.add_input(spec, path=spec)
    return load_dataset(spec, normalize=normalize)


def _parse_selection(ds: Dataset, raw: str) -> tuple:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise UsageError("selection must name at least one feature")
    out = []
    for item in items:
        key = int(item) if item.lstrip("-").isdigit() and item not in ds.feature_names else item
        try:
            out.append(ds.feature_index(key))
        except (KeyError, IndexError, ValueError) as exc:
            raise UsageError(f"unknown feature {item!r}") from exc
    return tuple(sorted(set(out)))


def _eval_config(args) -> EvalConfig:
    return EvalConfig(k=args.k, mode=args.mode, tie_tolerance=args.tol)


def _selection_payload(ds: Dataset, sel) -> dict:
    return {"indices": list(sel), "names": [ds.feature_names[f] for f in sel]}


def _emit(args, payload: dict, text_lines: list) -> None:
    if args.json:
        sys.stdout.write(_dumps(payload))
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


# -- commands -----------------------------------------------------------------

def cmd_evaluate(args, run: Run) -> int:
    ds = _load_dataset(run, args.dataset, args.normalize)
    sel = _parse_selection(ds, args.select)
    cfg = _eval_config(args)
    run.config = {"k": cfg.k, "mode": cfg.mode, "tie_tolerance": cfg.tie_tolerance, "selection": list(sel)}
    res = evaluate_selection(ds, sel, cfg)
    points = []
    for i, (c, chosen) in enumerate(res.per_point):
        nb = classify_neighbors(ds, i, sel, cfg)
        points.append({"point": i, "contribution": float(c), "neighbors": list(chosen),
                       "strict": list(nb.strict), "borderline": list(nb.borderline),
                       "epsilon": float(nb.epsilon)})
    payload = {"objective": float(res.objective), "selection": _selection_payload(ds, sel),
               "k": cfg.k, "mode": cfg.mode, "points": points}
    run.write_json("evaluate.json", payload)
    lines = [f"objective {_num(res.objective)}"]
    lines += [f"  point {p['point']}: contribution {_num(p['contribution'])} neighbors {p['neighbors']}"
              for p in points]
    _emit(args, payload, lines)
    return 0


def cmd_select(args, run: Run) -> int:
    ds = _load_dataset(run, args.dataset, args.normalize)
    cutoff = None if args.cutoff == 0 else args.cutoff
    kcfg = KOptConfig(L=args.L, swap_size=args.swap_size, max_sampled_moves=args.max_moves,
                      improving_moves_cutoff=cutoff, start_candidates=args.start_candidates,
                      restarts=args.restarts, seed=args.seed, workers=args.workers)
    cfg = _eval_config(args)
    run.config = {"kopt": {k: v for k, v in vars(kcfg).items() if k != "workers"},
                  "k": cfg.k, "mode": cfg.mode, "tie_tolerance": cfg.tie_tolerance}
    run.seeds = {"kopt": args.seed}
    res = k_opt_search(ds, kcfg, cfg)
    payload = {"selection": _selection_payload(ds, res.best_selection), "objective": float(res.best_objective),
               "evaluations": res.evaluations, "trace": res.trace}
    run.write_json("select.json", payload)
    _emit(args, payload, [f"selection {payload['selection']['names']}", f"objective {_num(res.best_objective)}",
                          f"evaluations {res.evaluations}"])
    return 0


def cmd_exact(args, run: Run) -> int:
    ds = _load_dataset(run, args.dataset, args.normalize)
    cfg = _eval_config(args)
    run.config = {"L": args.L, "min_size": args.min_size, "budget": args.budget, "k": cfg.k,
                  "mode": cfg.mode, "tie_tolerance": cfg.tie_tolerance}
    res = exact_enumeration(ds, args.L, cfg, min_size=args.min_size, budget=args.budget)
    payload = {"selection": _selection_payload(ds, res.best_selection), "objective": float(res.best_objective),
               "evaluations": res.evaluations}
    run.write_json("exact.json", payload)
    _emit(args, payload, [f"selection {payload['selection']['names']}", f"objective {_num(res.best_objective)}"])
    return 0


def cmd_baseline(args, run: Run) -> int:
    ds = _load_dataset(run, args.dataset, args.normalize)
    cfg = _eval_config(args)
    run.config = {"L": args.L, "repeats": args.repeats, "k": cfg.k, "mode": cfg.mode,
                  "tie_tolerance": cfg.tie_tolerance}
    run.seeds = {"baseline": args.seed}
    st = random_selection_baseline(ds, args.L, args.repeats, cfg, args.seed)
    payload = {"mean": st.mean, "std": st.std, "min": st.min, "max": st.max,
               "objectives": list(st.objectives), "selections": [list(s) for s in st.selections]}
    run.write_json("baseline.json", payload)
    _emit(args, payload, [f"mean {_num(st.mean)}", f"std {_num(st.std)}", f"min {_num(st.min)}",
                          f"max {_num(st.max)}"])
    return 0


def _crosscheck(ds, values: dict, claimed: float, mode: str, k: int, tol: float, rel_tol: float) -> dict:
    from .mip import crosscheck_solution, selection_from_solution

    sel = selection_from_solution(values, ds.n_features)
    if not sel:
        raise ValueError("solution selects no feature (no b_f above 0.5)")
    rep = crosscheck_solution(ds, sel, claimed, EvalConfig(k=k, mode=mode, tie_tolerance=tol), rel_tol=rel_tol)
    return rep.to_dict()


def cmd_export_mip(args, run: Run) -> int:
    from .mip import build_optimistic_mip, build_pessimistic_mip, read_solution_file, to_lp_string

    if run.out_dir is None:
        raise UsageError("export-mip needs --output DIR")
    ds = _load_dataset(run, args.dataset, args.normalize)
    if args.formulation == OPTIMISTIC:
        if args.alpha_bounds != "auto" or args.eval_k != "equality":
            raise UsageError("--alpha-bounds/--eval-k apply to the pessimistic formulation only")
        model = build_optimistic_mip(ds, args.L, args.k, big_m=args.big_m)
    else:
        if args.big_m is not None:
            raise UsageError("--big-m applies to the optimistic formulation only")
        model = build_pessimistic_mip(ds, args.L, args.k, alpha_bounds=args.alpha_bounds, eval_k=args.eval_k,
                                      tie_tolerance=args.tol)
    run.config = {"formulation": args.formulation, "L": args.L, "k": args.k, "big_m": args.big_m,
                  "alpha_bounds": args.alpha_bounds, "eval_k": args.eval_k, "tie_tolerance": args.tol,
                  "metadata": dict(model.metadata)}
    lp = run.write("model.lp", f"\\ manifest: {MANIFEST_NAME}\n" + to_lp_string(model))
    if model.start:
        run.write("start.sol", "".join(f"{n} {_num(v)}\n" for n, v in model.start.items()))
    payload = {"model": lp.name, "binaries": model.n_binary, "continuous": model.n_continuous,
               "constraints": len(model.constraints), "metadata": dict(model.metadata)}
    if args.solver_cmd:
        sol = run.out_dir / "solver.sol"
        cmd = [part.format(lp=lp, sol=sol) for part in shlex.split(args.solver_cmd)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"solver exited with {proc.returncode}: {proc.stderr.strip()[:500]}")
        values = read_solution_file(sol)
        claimed = model.objective_value(values)
        payload["crosscheck"] = _crosscheck(ds, values, claimed, args.formulation, args.k, args.tol, args.rel_tol)
        run.write_json("crosscheck.json", payload["crosscheck"])
    run.write_json("export.json", payload)
    lines = [f"wrote {lp}", f"binaries {model.n_binary} continuous {model.n_continuous} "
             f"constraints {len(model.constraints)}"]
    if "crosscheck" in payload:
        cc = payload["crosscheck"]
        lines.append(f"crosscheck match={cc['match']} solver {_num(cc['mip_objective_claimed'])} "
                     f"evaluator {_num(cc['core_objective'])}")
    _emit(args, payload, lines)
    if "crosscheck" in payload and not payload["crosscheck"]["match"]:
        return 1
    return 0


def cmd_check_solution(args, run: Run) -> int:
    from .mip import read_solution_file

    ds = _load_dataset(run, args.dataset, args.normalize)
    run.add_input(args.solution, path=args.solution)
    values = read_solution_file(args.solution)
    claimed = args.claimed
    if claimed is None:
        for key in ("objective", "obj", "Objective"):
            if key in values:
                claimed = values[key]
                break
    if claimed is None:
        raise UsageError("no objective in the solution file; pass --claimed")
    run.config = {"mode": args.mode, "k": args.k, "tie_tolerance": args.tol, "rel_tol": args.rel_tol,
                  "claimed": claimed}
    rep = _crosscheck(ds, values, claimed, args.mode, args.k, args.tol, args.rel_tol)
    run.write_json("crosscheck.json", rep)
    _emit(args, rep, [f"selection {rep['selection']}", f"claimed {_num(rep['mip_objective_claimed'])}",
                      f"evaluator {_num(rep['core_objective'])}", f"match {rep['match']}"])
    return 0 if rep["match"] else 1


def cmd_reduce_mc(args, run: Run) -> int:
    run.add_input(args.instance, path=args.instance)
    mc = load_mc_instance(args.instance)
    ds, L, k = reduce_max_coverage(mc)
    run.config = {"instance": mc.to_dict()}
    payload = {"L": L, "k": k, "n_points": ds.n_points, "n_features": ds.n_features}
    run.write_json("dataset.json", ds.to_dict())
    if args.cover is not None:
        cover = tuple(sorted({int(c) for c in args.cover.split(",") if c.strip()}))
        if any(not 0 <= c < mc.m for c in cover) or not 1 <= len(cover) <= L:
            raise UsageError(f"cover must name 1..{L} subsets out of {mc.m}")
        res = evaluate_selection(ds, cover, EvalConfig(k=k, mode=args.mode, tie_tolerance=args.tol))
        payload["cover"] = list(cover)
        payload["objective"] = float(res.objective)
        payload["predicted"] = predicted_objective(mc, cover)
    run.write_json("reduction.json", payload)
    lines = [f"N {ds.n_points} p {ds.n_features} L {L} k {k}"]
    if "objective" in payload:
        lines.append(f"objective {_num(payload['objective'])} predicted {payload['predicted']}")
    _emit(args, payload, lines)
    return 0


def cmd_experiment(args, run: Run) -> int:
    from .pathlab import ExperimentConfig, run_experiment
    from .pathlab.io import resolve_data_dir

    raw = {}
    if args.config:
        run.add_input(args.config, path=args.config)
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise UsageError("experiment config must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.repeats is not None:
        raw["repeats"] = args.repeats
    if args.L_values:
        raw["L_values"] = [int(v) for v in args.L_values.split(",")]
    if args.workers_given:
        raw["workers"] = args.workers
    data_dir = resolve_data_dir(args.data_dir or raw.get("data_dir"))
    raw["data_dir"] = str(data_dir) if data_dir is not None else None
    cfg = ExperimentConfig.from_dict(raw)
    run.config = cfg.to_dict()
    run.seeds = {"experiment": cfg.seed, "synthetic": cfg.synthetic_seed}
    if data_dir is not None:
        for name in sorted(os.listdir(data_dir)):
            if (data_dir / name).is_file():
                run.add_input(str(data_dir / name), path=data_dir / name)
    res = run_experiment(cfg)
    summary = dict(res.summary, csv="results.csv", manifest=MANIFEST_NAME)
    run.write("results.csv", res.to_csv())
    run.write("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    payload = summary
    lines = ["L method mean_relative_length mean_objective failures"]
    for a in summary["aggregate"]:
        rl = "nan" if a["mean_relative_length"] is None else f"{a['mean_relative_length']:.4f}"
        lines.append(f"{a['L']} {a['method']} {rl} {a['mean_objective']:.4f} {a['failures']}")
    _emit(args, payload, lines)
    return 0


def cmd_gen_synthetic(args, run: Run) -> int:
    if run.out_dir is None:
        raise UsageError("gen-synthetic needs --output DIR")
    seed = 0 if args.seed is None else args.seed
    run.seeds = {"generator": seed}
    if args.kind == "dataset":
        ds = generate_synthetic_dataset(args.n_points, args.n_features, args.n_solution_features, seed,
                                        n_informative=args.n_informative, decimals=args.decimals)
        run.config = {"kind": "dataset", "n_points": args.n_points, "n_features": args.n_features,
                      "n_solution_features": args.n_solution_features, "n_informative": args.n_informative,
                      "decimals": args.decimals}
        run.write_json("dataset.json", ds.to_dict())
        payload = {"dataset": "dataset.json", "n_points": ds.n_points,
                   "n_features": ds.n_features}
    else:
        from .pathlab import congestion_scenarios, grid_road_network
        from .pathlab.io import graph_to_dict

        g = grid_road_network(args.rows, args.cols, seed=seed)
        sc = congestion_scenarios(g, args.scenarios, seed=seed)
        run.config = {"kind": "road", "rows": args.rows, "cols": args.cols, "scenarios": args.scenarios}
        run.write_json("graph.json", graph_to_dict(g))
        header = ",".join(str(e) for e in g.edge_ids)
        body = "".join(",".join(repr(float(v)) for v in row) + "\n" for row in sc.weights)
        run.write("scenarios.csv", header + "\n" + body)
        payload = {"graph": "graph.json", "scenarios_file": "scenarios.csv", "nodes": g.n_nodes, "edges": g.n_edges,
                   "scenarios": sc.n_scenarios}
    _emit(args, payload, [f"{k} {v}" for k, v in sorted(payload.items())])
    return 0


# -- parser -------------------------------------------------------------------

def _positive(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_float(raw: str) -> float:
    v = float(raw)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be a nonnegative number")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--tol", type=_nonneg_float, default=1e-9, help="distance tie tolerance")
    common.add_argument("--output", "-o", metavar="DIR", help="write result files and manifest.json here")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")
    common.add_argument("--workers", type=_positive, default=None,
                        help="worker threads (default: available CPUs)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("dataset", help="dataset JSON file or builtin:toy / builtin:knapsack")
    data.add_argument("--normalize", action="store_true", help="min-max scale numeric features")

    ev = argparse.ArgumentParser(add_help=False)
    ev.add_argument("--k", type=_positive, default=1, help="neighbourhood size")
    ev.add_argument("--mode", choices=(OPTIMISTIC, PESSIMISTIC), default=PESSIMISTIC)

    parser = argparse.ArgumentParser(prog="explainsel", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("evaluate", parents=[common, data, ev], help="objective of a given selection")
    p.add_argument("--select", "-s", required=True, help="comma-separated feature names or indices")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("select", parents=[common, data, ev], help="k-opt local search")
    p.add_argument("--L", type=_positive, required=True, help="number of features to select")
    p.add_argument("--swap-size", type=_positive, default=1)
    p.add_argument("--max-moves", type=_positive, default=1000, help="sampled moves per pass")
    p.add_argument("--cutoff", type=int, default=10, help="improving moves per pass, 0 = unlimited")
    p.add_argument("--start-candidates", type=_positive, default=10)
    p.add_argument("--restarts", type=_positive, default=5)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("exact", parents=[common, data, ev], help="exhaustive enumeration")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--min-size", type=_positive, default=1)
    p.add_argument("--budget", type=_positive, default=10**6, help="maximum number of selections")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("baseline-random", parents=[common, data, ev], help="random selection baseline")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--repeats", type=_positive, default=100)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("export-mip", parents=[common, data], help="write an LP file of the MIP model")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--k", type=_positive, default=1)
    p.add_argument("--formulation", choices=(OPTIMISTIC, PESSIMISTIC), default=PESSIMISTIC)
    p.add_argument("--big-m", type=float, default=None, help="override the computed big-M (optimistic)")
    p.add_argument("--alpha-bounds", choices=("auto", "certified", "quantum", "pairwise"), default="auto")
    p.add_argument("--eval-k", choices=("equality", "inequality"), default="equality")
    p.add_argument("--solver-cmd", default=None,
                   help="solver command template with {lp} and {sol} placeholders; the solution is cross-checked")
    p.add_argument("--rel-tol", type=_nonneg_float, default=1e-6)
    p.set_defaults(func=cmd_export_mip)

    p = sub.add_parser("check-solution", parents=[common, data, ev], help="cross-check a solver solution")
    p.add_argument("--solution", required=True, help="file of 'name value' lines")
    p.add_argument("--claimed", type=float, default=None, help="solver objective (default: from the file)")
    p.add_argument("--rel-tol", type=_nonneg_float, default=1e-6)
    p.set_defaults(func=cmd_check_solution)

    p = sub.add_parser("reduce-mc", parents=[common], help="reduce a Max Coverage instance")
    p.add_argument("instance", help="Max Coverage JSON instance")
    p.add_argument("--cover", default=None, help="comma-separated subset indices to evaluate")
    p.add_argument("--mode", choices=(OPTIMISTIC, PESSIMISTIC), default=PESSIMISTIC)
    p.set_defaults(func=cmd_reduce_mc)

    p = sub.add_parser("experiment", parents=[common], help="road-network experiment")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--data-dir", default=None, help="graph/scenario directory (else $EXPLAINSEL_DATA_DIR)")
    p.add_argument("--repeats", type=_positive, default=None)
    p.add_argument("--L-values", dest="L_values", default=None, help="comma-separated L values")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gen-synthetic", parents=[common], help="generate a synthetic dataset or road network")
    p.add_argument("--kind", choices=("dataset", "road"), default="dataset")
    p.add_argument("--n-points", type=_positive, default=30)
    p.add_argument("--n-features", type=_positive, default=8)
    p.add_argument("--n-solution-features", type=_positive, default=5)
    p.add_argument("--n-informative", type=_positive, default=2)
    p.add_argument("--decimals", type=int, default=None)
    p.add_argument("--rows", type=_positive, default=6)
    p.add_argument("--cols", type=_positive, default=10)
    p.add_argument("--scenarios", type=_positive, default=500)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    args.workers_given = args.workers is not None
    if args.workers is None:
        args.workers = os.cpu_count() or 1
    if args.command != "experiment" and args.seed is None:
        args.seed = 0
    try:
        run = Run(args, argv)
        code = args.func(args, run)
        run.finish()
        return code
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"explainsel: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"explainsel: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
