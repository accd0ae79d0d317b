import json
import shutil
import subprocess

import numpy as np
import pytest

from csbmprop import __version__
from csbmprop.cli import main
from csbmprop.csbm import load_graph


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def manifest(path):
    return json.loads(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------- generate


def test_generate_writes_four_files_and_manifest(tmp_path, capsys):
    code, out, _ = run(["generate", "--n", 1000, "--p", 0.02, "--q", 0.01, "--gauss-sep", 0.5, "--m", 10,
                        "--seed", 7, "--out-dir", tmp_path], capsys)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert len(names) == 5 and "graph.manifest.json" in names
    m = manifest(tmp_path / "graph.manifest.json")
    assert m["subcommand"] == "generate" and m["seed"] == 7 and m["version"] == __version__
    assert set(m["outputs"]) == {"header", "edges", "labels", "attrs"}
    g = load_graph(m["outputs"]["header"])
    assert g.n == 1000 and g.attrs.shape == (1000, 10)
    assert m["summary"]["num_edges"] == g.num_edges


def test_generate_is_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        run(["--seed", 3, "generate", "--n", 300, "--p", 0.05, "--q", 0.01, "--laplace-norm", 0.5, "--m", 4,
             "--out-dir", tmp_path / d], capsys)
    for name in ("graph.json", "graph.edges", "graph.labels", "graph.attrs.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_q_zero_is_an_error(tmp_path, capsys):
    code, _, err = run(["generate", "--n", 100, "--p", 0.1, "--q", 0, "--gauss-sep", 1, "--out-dir", tmp_path],
                       capsys)
    assert code == 1 and "q must be positive" in err
    assert not any(tmp_path.iterdir())


def test_generate_n_zero_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["generate", "--n", "0", "--p", "0.1", "--q", "0.1", "--gauss-sep", "1"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_generate_needs_one_attribute_flag(tmp_path, capsys):
    code, _, err = run(["generate", "--n", 100, "--p", 0.1, "--q", 0.05, "--out-dir", tmp_path], capsys)
    assert code == 1 and "exactly one" in err


# ---------------------------------------------------------------- presets and schedules


def test_preset_conflicts_with_explicit_flags(tmp_path, capsys):
    code, _, err = run(["sweep", "--preset", "fig3-left", "--p", "0.1", "--out-dir", tmp_path], capsys)
    assert code == 1 and "conflicts" in err


def test_unknown_preset(tmp_path, capsys):
    code, _, err = run(["sweep", "--preset", "fig42", "--out-dir", tmp_path], capsys)
    assert code == 1 and "unknown preset" in err


def test_wrong_kind_of_preset(tmp_path, capsys):
    code, _, err = run(["sweep", "--preset", "fig5-homo", "--out-dir", tmp_path], capsys)
    assert code == 1 and "transition" in err


def test_info_resolves_presets(capsys):
    code, out, _ = run(["info", "--preset", "fig3-left"], capsys)
    doc = json.loads(out)
    pt = doc["preset"]["points"][0]
    assert code == 0 and pt["n"] == 10000
    assert pt["p"] == pytest.approx(0.02) and pt["q"] == pytest.approx(0.01)
    assert pt["sep"] == pytest.approx(0.3 * np.log(1e4) ** 2 / 100)
    code, out, _ = run(["info", "--preset", "fig5-homo"], capsys)
    tr = json.loads(out)["preset"]["transition"]
    assert tr["fixed"] == 5e-3 and not tr["heterophilic"]
    code, out, _ = run(["info"], capsys)
    assert "fig8-suff" in json.loads(out)["presets"]


def test_explicit_schedule_sweep(tmp_path, capsys):
    code, _, _ = run(["sweep", "--p", "2:inv_sqrt", "--q", "1:inv_sqrt", "--sep", "0.5", "--n-grid", "500,1000",
                      "--trials", 2, "--out-dir", tmp_path, "--stem", "explicit", "--threads", 1], capsys)
    assert code == 0
    lines = (tmp_path / "explicit.csv").read_text().splitlines()
    assert lines[0].startswith("#") and lines[1].startswith("n,model,mean_acc")
    assert len(lines) == 2 + 2 * 2
    code, _, err = run(["sweep", "--p", "2:inv_sqrt", "--q", "1:inv_sqrt", "--out-dir", tmp_path], capsys)
    assert code == 1 and "--sep" in err
    with pytest.raises(SystemExit) as e:
        main(["sweep", "--p", "2:cubic", "--q", "1", "--sep", "1", "--n-grid", "100", "--out-dir", str(tmp_path)])
    assert e.value.code == 2 and "unknown schedule form" in capsys.readouterr().err


# ---------------------------------------------------------------- determinism


SMALL_RUNS = {
    "sweep": ["sweep", "--preset", "fig3-left", "--n-grid", "600,900", "--trials", "3"],
    "sparse": ["sparse", "--preset", "fig8-fixed", "--n-grid", "800", "--trials", "3"],
    "wsweep": ["wsweep", "--preset", "fig7-limited", "--n-grid", "700", "--trials", "3"],
    "transfer": ["transfer", "--preset", "fig4-limited", "--n", "800", "--trials", "3", "--intensities", "0.05,0.2"],
    "transition": ["transition", "--n", "500", "--struct-points", "3", "--sep-points", "2", "--trials", "2"],
}


@pytest.mark.parametrize("name", sorted(SMALL_RUNS))
def test_csv_identical_across_thread_counts(name, tmp_path, capsys):
    texts = []
    for threads in (1, 3):
        d = tmp_path / f"t{threads}"
        code, _, _ = run(SMALL_RUNS[name] + ["--threads", threads, "--seed", 11, "--out-dir", d, "--stem", "r"],
                         capsys)
        assert code == 0
        texts.append((d / "r.csv").read_bytes())
        assert manifest(d / "r.manifest.json")["threads"] == threads
    assert texts[0] == texts[1]


def test_rerun_from_manifest_argv(tmp_path, capsys):
    code, _, _ = run(SMALL_RUNS["sweep"] + ["--seed", 4, "--out-dir", tmp_path, "--stem", "r"], capsys)
    assert code == 0
    first = (tmp_path / "r.csv").read_bytes()
    argv = manifest(tmp_path / "r.manifest.json")["argv"]
    (tmp_path / "r.csv").unlink()
    assert main(argv + ["--threads", "2"]) == 0
    capsys.readouterr()
    assert (tmp_path / "r.csv").read_bytes() == first


def test_seed_changes_output(tmp_path, capsys):
    for s in (1, 2):
        run(SMALL_RUNS["sweep"] + ["--seed", s, "--out-dir", tmp_path, "--stem", f"s{s}"], capsys)
    assert (tmp_path / "s1.csv").read_bytes() != (tmp_path / "s2.csv").read_bytes()


# ---------------------------------------------------------------- real data and training


@pytest.fixture
def toy_dataset(tmp_path):
    g = np.random.default_rng(0)
    n = 120
    cls = np.arange(n) % 3
    edges = [(a, b) for a in range(n) for b in range(a + 1, n)
             if g.random() < (0.08 if cls[a] == cls[b] else 0.01)]
    (tmp_path / "toy.edges").write_text("".join(f"{a} {b}\n" for a, b in edges))
    (tmp_path / "toy.labels").write_text("".join(f"{c}\n" for c in cls))
    return tmp_path


def test_real_on_toy_files(toy_dataset, capsys):
    out = toy_dataset / "out"
    argv = ["real", "--edges", toy_dataset / "toy.edges", "--labels", toy_dataset / "toy.labels", "--rule", "1",
            "--family", "laplace", "--levels", "0.5,2", "--trials", 2, "--m", 4, "--epochs", 20, "--out-dir", out,
            "--stem", "toy"]
    code, _, _ = run(argv, capsys)
    assert code == 0
    lines = [ln for ln in (out / "toy.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 1 + 2 * 4
    assert lines[1].startswith("toy,1-vs-all,laplace,0.5,nonlinear,a,")
    code, _, _ = run(argv[:-4] + ["--out-dir", toy_dataset / "out2", "--stem", "toy", "--threads", 3], capsys)
    assert (out / "toy.csv").read_bytes() == (toy_dataset / "out2" / "toy.csv").read_bytes()


def test_real_missing_label_file(toy_dataset, capsys):
    code, _, err = run(["real", "--edges", toy_dataset / "toy.edges", "--labels", toy_dataset / "nope.labels",
                        "--out-dir", toy_dataset], capsys)
    assert code == 1 and "nope.labels" in err


def test_real_rule_errors(toy_dataset, capsys):
    base = ["real", "--edges", toy_dataset / "toy.edges", "--labels", toy_dataset / "toy.labels",
            "--out-dir", toy_dataset, "--epochs", 1, "--trials", 1]
    code, _, err = run(base + ["--rule", "9"], capsys)
    assert code == 1 and "does not exist" in err
    code, _, err = run(base + ["--rule", "several"], capsys)
    assert code == 1 and "partition" in err
    code, _, err = run(base + ["--models", "b"], capsys)
    assert code == 1 and "not available" in err


def test_train_synthetic_writes_checkpoint_and_trace(tmp_path, capsys):
    code, _, _ = run(["train", "--n", 300, "--p", 0.05, "--q", 0.01, "--gauss-sep", 1.0, "--m", 4, "--variant", "c",
                      "--epochs", 15, "--out-dir", tmp_path, "--seed", 2], capsys)
    assert code == 0
    doc = manifest(tmp_path / "train.model.json")
    assert doc["model"]["variant"] == "c" and doc["config"]["epochs"] == 15
    trace = (tmp_path / "train.loss.csv").read_text().splitlines()
    assert trace[1] == "epoch,loss" and len(trace) == 2 + 15
    m = manifest(tmp_path / "train.manifest.json")
    assert m["subcommand"] == "train"


def test_train_from_generated_graph(tmp_path, capsys):
    run(["generate", "--n", 200, "--p", 0.05, "--q", 0.01, "--laplace-norm", 1.0, "--m", 3, "--out-dir", tmp_path],
        capsys)
    code, _, _ = run(["train", "--graph", tmp_path / "graph.json", "--family", "laplace", "--variant", "a",
                      "--epochs", 5, "--out-dir", tmp_path], capsys)
    assert code == 0
    assert manifest(tmp_path / "train.model.json")["model"]["psi_kind"] == "clamp"
    code, _, err = run(["train", "--graph", tmp_path / "graph.json", "--n", 10, "--out-dir", tmp_path], capsys)
    assert code == 1 and "conflicts" in err


# ---------------------------------------------------------------- verify


def test_verify_default_passes(tmp_path, capsys):
    code, out, _ = run(["verify", "--out-dir", tmp_path], capsys)
    assert code == 0
    for name in ("map-oracle", "moments", "gradients", "phi"):
        assert f"PASS {name}" in out
    assert "FAIL" not in out
    assert manifest(tmp_path / "verify.manifest.json")["results"][0]["passed"]


def test_verify_moments_only_prints_table(tmp_path, capsys):
    code, out, _ = run(["verify", "--checks", "moments", "--samples", 20000, "--out-dir", tmp_path], capsys)
    lines = out.splitlines()
    assert lines[1].startswith("m_mu2,p_over_q,mean_cf,mean_mc")
    assert len([ln for ln in lines if ln[:1].isdigit()]) == 12
    assert "map-oracle" not in out and "gradients" not in out
    assert (tmp_path / "verify-moments.csv").exists()
    assert code in (0, 1)


def test_verify_unknown_check(tmp_path, capsys):
    code, _, err = run(["verify", "--checks", "nope", "--out-dir", tmp_path], capsys)
    assert code == 1 and "unknown checks" in err


@pytest.mark.skipif(shutil.which("csbmprop") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["csbmprop", "--version"], capture_output=True, text=True, check=False)
    assert r.returncode == 0 and __version__ in r.stdout
