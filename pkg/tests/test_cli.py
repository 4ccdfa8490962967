import json
import subprocess
import sys
from pathlib import Path

import pytest

from explainsel.cli import main
from explainsel.core import save_dataset
from explainsel.fixtures import knapsack_dataset

HERE = Path(__file__).parent


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_evaluate_toy_lower_prints_three(capsys):
    code, out, _ = run(["evaluate", "builtin:toy", "--select", "lower"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "objective 3"


def test_exact_toy(capsys):
    code, out, _ = run(["exact", "builtin:toy", "--L", "1", "--json"], capsys)
    data = json.loads(out)
    assert code == 0 and data["selection"]["names"] == ["upper"] and data["objective"] == 2


def test_unknown_flag_exit_two(capsys):
    code, _, err = run(["exact", "builtin:toy", "--L", "1", "--frobnicate"], capsys)
    assert code == 2 and "usage" in err


def test_missing_subcommand(capsys):
    code, _, _ = run([], capsys)
    assert code == 2


def test_runtime_error_exit_one(capsys, tmp_path):
    code, _, err = run(["evaluate", str(tmp_path / "missing.json"), "--select", "0"], capsys)
    assert code == 1 and "error" in err
    code, _, err = run(["evaluate", "builtin:toy", "--select", "0", "--k", "5"], capsys)
    assert code == 1


def test_manifest_written_and_references_outputs(capsys, tmp_path):
    ds_path = tmp_path / "ks.json"
    save_dataset(knapsack_dataset(), ds_path)
    out = tmp_path / "out"
    code, _, _ = run(["select", str(ds_path), "--L", "2", "--seed", "3", "-o", str(out)], capsys)
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "select" and man["seeds"] == {"kopt": 3}
    assert str(ds_path) in man["inputs"]
    assert set(man["outputs"]) == {"select.json"}
    assert {"version", "timings", "config", "argv"} <= set(man)


def test_manifest_on_stderr_without_output(capsys):
    _, _, err = run(["evaluate", "builtin:toy", "--select", "upper"], capsys)
    line = [l for l in err.splitlines() if l.startswith("manifest ")][0]
    assert json.loads(line[len("manifest "):])["command"] == "evaluate"


def test_repeat_is_byte_identical(capsys, tmp_path):
    for name in ("a", "b"):
        run(["baseline-random", "builtin:knapsack", "--L", "2", "--repeats", "9", "--seed", "4",
             "-o", str(tmp_path / name)], capsys)
    assert (tmp_path / "a" / "baseline.json").read_bytes() == (tmp_path / "b" / "baseline.json").read_bytes()


def test_export_mip_and_check_solution(capsys, tmp_path):
    out = tmp_path / "mip"
    code, _, _ = run(["export-mip", "builtin:toy", "--L", "1", "--formulation", "optimistic", "--big-m", "5",
                      "-o", str(out)], capsys)
    assert code == 0
    text = (out / "model.lp").read_text()
    assert "Minimize" in text and "Binaries" in text
    sol = tmp_path / "sol.txt"
    sol.write_text("b_0 1\nb_1 0\nobjective 2\n")
    code, out_txt, _ = run(["check-solution", "builtin:toy", "--solution", str(sol), "--json"], capsys)
    assert code == 0 and json.loads(out_txt)["match"] is True
    sol.write_text("b_0=0\nb_1=1\n")
    code, out_txt, _ = run(["check-solution", "builtin:toy", "--solution", str(sol), "--claimed", "2",
                            "--json"], capsys)
    assert code == 1 and json.loads(out_txt)["core_objective"] == 3


def test_export_mip_usage_errors(capsys, tmp_path):
    assert run(["export-mip", "builtin:toy", "--L", "1"], capsys)[0] == 2
    assert run(["export-mip", "builtin:toy", "--L", "1", "--big-m", "3", "-o", str(tmp_path)], capsys)[0] == 2


def test_export_mip_solver_hook(capsys, tmp_path):
    pytest.importorskip("highspy")
    script = tmp_path / "solve.py"
    script.write_text(
        "import sys, highspy\n"
        "h = highspy.Highs(); h.setOptionValue('output_flag', False)\n"
        "h.readModel(sys.argv[1]); h.run()\n"
        "v = h.getSolution().col_value\n"
        "open(sys.argv[2], 'w').write(''.join(f'{h.getColName(i)[1]} {x!r}\\n' for i, x in enumerate(v)))\n"
    )
    code, out, _ = run(["export-mip", "builtin:toy", "--L", "1", "-o", str(tmp_path / "o"), "--json",
                        "--solver-cmd", f"{sys.executable} {script} {{lp}} {{sol}}"], capsys)
    assert code == 0
    assert json.loads(out)["crosscheck"]["match"] is True


def test_reduce_mc(capsys, tmp_path):
    inst = tmp_path / "mc.json"
    inst.write_text(json.dumps({"universe_size": 3, "subsets": [[0, 1, 2], [1]], "K": 1}))
    code, out, _ = run(["reduce-mc", str(inst), "--cover", "0", "--json", "-o", str(tmp_path / "r")], capsys)
    data = json.loads(out)
    assert code == 0 and data["objective"] == 48 and data["predicted"] == 48
    assert (tmp_path / "r" / "dataset.json").exists()


def test_gen_synthetic_and_experiment(capsys, tmp_path):
    road = tmp_path / "road"
    assert run(["gen-synthetic", "--kind", "road", "--rows", "3", "--cols", "4", "--scenarios", "40",
                "-o", str(road)], capsys)[0] == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_train": 20, "n_eval": 4, "k": 2, "grid_rows": 2, "grid_cols": 2,
                               "random_baseline_repeats": 3, "random_path_selections": 1, "restarts": 1}))
    outs = []
    for name, workers in (("e1", "1"), ("e2", "3")):
        code, _, _ = run(["experiment", "--config", str(cfg), "--data-dir", str(road), "--repeats", "2",
                          "--L-values", "1,2", "--workers", workers, "-o", str(tmp_path / name)], capsys)
        assert code == 0
        outs.append(tmp_path / name)
    for f in ("results.csv", "summary.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["manifest"] == "manifest.json" and summary["csv"] == "results.csv"
    man = json.loads((outs[0] / "manifest.json").read_text())
    assert set(man["outputs"]) == {"results.csv", "summary.json"}
    assert man["config"]["repeats"] == 2


def test_experiment_bad_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(["experiment", "--config", str(cfg)], capsys)[0] == 1


def test_gen_synthetic_dataset(capsys, tmp_path):
    assert run(["gen-synthetic", "--n-points", "8", "--n-features", "4", "-o", str(tmp_path)], capsys)[0] == 0
    data = json.loads((tmp_path / "dataset.json").read_text())
    assert data["n_points"] == 8 and len(data["features"]) == 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "explainsel", "evaluate", "builtin:toy", "--select", "upper"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("objective 2")
