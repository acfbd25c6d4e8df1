import json

import pytest

from kernelverify.cli import main
from kernelverify.errors import ValidationError
from kernelverify.kernels import KernelSpec
from kernelverify.pipeline import RunConfig, SyntheticConfig

SYNTH = "clients=5,impostors=3,per=6,dim=8,sep=8,warp=radial"


def run(*argv):
    return main(["-q", *map(str, argv)])


def test_run_writes_two_deterministic_reports(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run("run", "--synthetic", SYNTH, "--kernel", "rbf:sigma=2", "--learn", "dinkelbach",
                   "--modes", "OnC,OnI", "--seed", 1, "--out", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    reports = json.loads(outs[0])
    assert [r["mode"] for r in reports] == ["OnC", "OnI"]
    assert all(r["test_ter"] == r["test_far"] + r["test_frr"] for r in reports)


def test_run_compare_emits_paired_table(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run("run", "--synthetic", SYNTH, "--kernel", "rbf:sigma=2", "--compare",
               "--seed", 1, "--out", out, "--roc", tmp_path / "roc.csv") == 0
    reports = json.loads(out.read_text())
    assert len(reports) == 4
    assert [r["learn"]["mode"] for r in reports] == ["baseline"] * 2 + ["dinkelbach"] * 2
    table = capsys.readouterr().out
    assert table.count("baseline rbf") == 2 and table.count("learned rbf") == 2
    for method in ("baseline", "learned"):
        for mode in ("OnC", "OnI"):
            assert (tmp_path / f"roc_{method}_{mode}.csv").exists()


def test_run_baseline_has_no_alpha(tmp_path):
    out = tmp_path / "r.json"
    assert run("run", "--synthetic", SYNTH, "--kernel", "linear", "--baseline", "--out", out) == 0
    assert all(r["alpha"] is None for r in json.loads(out.read_text()))


def test_missing_protocol_file(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    samples.write_text("1,2,a\n")
    code = run("run", "--samples", samples, "--protocol", tmp_path / "nope.json",
               "--kernel", "linear", "--baseline")
    assert code == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "FileNotFound"


def test_unknown_identity_exit_code(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    samples.write_text("f0,f1,identity\n1,2,a\n3,4,a\n5,6,a\n")
    protocol = tmp_path / "p.json"
    protocol.write_text(json.dumps({"clients": ["a", "id99"], "impostors": [],
                                    "roles": {"a": ["train", "train", "test"]}}))
    assert run("run", "--samples", samples, "--protocol", protocol, "--kernel", "linear") == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "UnknownIdentity"


def test_numerical_error_exit_code(tmp_path, capsys):
    # every identity's samples coincide, so the within scatter vanishes
    samples = tmp_path / "s.csv"
    rows = [f"{v},0,{c}" for c, v in (("a", 0), ("b", 5), ("x", 9)) for _ in range(3)]
    samples.write_text("\n".join(["f0,f1,identity", *rows]) + "\n")
    protocol = tmp_path / "p.json"
    protocol.write_text(json.dumps({
        "clients": ["a", "b"], "impostors": ["x"],
        "roles": {"a": ["train", "train", "evaluation"], "b": ["train", "train", "test"],
                  "x": ["evaluation", "test", "test"]}}))
    assert run("run", "--samples", samples, "--protocol", protocol, "--kernel", "linear") == 1
    assert "error" in json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_sweep_rbf_grid(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    grid = [f"rbf:sigma={s}" for s in (5, 10, 15, 20)]
    assert run("sweep", "--synthetic", SYNTH, "--seed", 3, "--baseline", "--grid", *grid,
               "--out", out) == 0
    rows = json.loads(out.read_text())
    assert [r["kernel"]["sigma"] for r in rows] == [5.0, 10.0, 15.0, 20.0]
    for mode in ("OnC", "OnI"):
        assert sum(rep["mode"] == mode for r in rows for rep in r["reports"]) == 4
    table = capsys.readouterr().out
    assert table.count("rbf") == 8


def test_sweep_poly_grid_from_config(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({
        "synthetic": SYNTH, "seed": 0, "learn": {"mode": "dinkelbach"},
        "grid": [{"family": "polynomial", "a": a, "b": b, "d": d}
                 for a, b, d in ((0.0001, 1, 2), (0.0001, 0, 2), (10, 1, 2), (5, 2, 4))]}))
    out = tmp_path / "sweep.json"
    assert run("sweep", "--config", config, "--out", out) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 4
    for row in rows:
        # a failed grid point is recorded rather than aborting the sweep
        assert "reports" in row or "error" in row
    done = [r for r in rows if "reports" in r]
    assert done and all(len(r["reports"]) == 2 for r in done)


def test_sweep_empty_grid(tmp_path):
    assert run("sweep", "--synthetic", SYNTH) == 2
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"synthetic": SYNTH, "grid": []}))
    assert run("sweep", "--config", config) == 2


def test_gen_then_file_run(tmp_path):
    s, p = tmp_path / "s.csv", tmp_path / "p.json"
    assert run("gen", "--synthetic", "clients=3,impostors=2,per=4,dim=5,sep=10", "--seed", 7,
               "--samples-out", s, "--protocol-out", p) == 0
    out = tmp_path / "r.json"
    assert run("run", "--samples", s, "--protocol", p, "--kernel", "linear", "--baseline",
               "--out", out) == 0
    assert all(r["test_ter"] == 0.0 for r in json.loads(out.read_text()))


def test_file_run_matches_synthetic_run(tmp_path):
    s, p = tmp_path / "s.csv", tmp_path / "p.json"
    synth = "clients=4,impostors=2,per=6,dim=4,sep=3"
    run("gen", "--synthetic", synth, "--seed", 2, "--samples-out", s, "--protocol-out", p)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("run", "--samples", s, "--protocol", p, "--kernel", "rbf:sigma=3", "--out", a)
    run("run", "--synthetic", synth, "--seed", 2, "--kernel", "rbf:sigma=3", "--out", b)
    assert json.loads(a.read_text()) == pytest.approx(json.loads(b.read_text()))


def test_report_rerender(tmp_path, capsys):
    out = tmp_path / "r.json"
    run("run", "--synthetic", SYNTH, "--kernel", "linear", "--baseline", "--out", out)
    first = capsys.readouterr().out
    assert run("report", out) == 0
    assert capsys.readouterr().out == first


def test_report_on_sweep_output(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    run("sweep", "--synthetic", SYNTH, "--baseline", "--grid", "linear", "rbf:sigma=5", "--out", out)
    capsys.readouterr()
    assert run("report", out) == 0
    assert capsys.readouterr().out.count("\n") >= 4


def test_config_file_and_flag_override(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"synthetic": SYNTH, "kernel": {"family": "rbf", "sigma": 2},
                                  "learn": {"mode": "fixed_alpha", "alpha": 1.0},
                                  "modes": ["OnI"], "seed": 4}))
    out = tmp_path / "r.json"
    assert run("run", "--config", config, "--out", out) == 0
    reports = json.loads(out.read_text())
    assert [r["mode"] for r in reports] == ["OnI"]
    assert reports[0]["alpha"] == 1.0
    assert run("run", "--config", config, "--modes", "OnC", "--out", out) == 0
    assert [r["mode"] for r in json.loads(out.read_text())] == ["OnC"]


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(synthetic=SyntheticConfig.parse(SYNTH), samples="s.csv", protocol="p.json")
    with pytest.raises(ValidationError):
        RunConfig(synthetic=SyntheticConfig.parse(SYNTH), modes=())
    cfg = RunConfig.from_dict({"synthetic": SYNTH, "kernel": "rbf:sigma=20"})
    assert cfg.kernel == KernelSpec.rbf(20)


def test_bad_usage_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == 2
