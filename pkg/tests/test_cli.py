import csv
import io
import json

import numpy as np
import pytest

from acls.cli import build_parser, dumps, main, threads
from acls.io import read_pgm, write_pgm
from acls.loss import TauRule, select_tau
from acls.simulation import breakdown_probe


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_fit_collinear_toy(tmp_path, capsys):
    path = write(tmp_path / "toy.csv", "x,y\n1,1\n2,2\n3,3\n")
    code, out, _ = run(["fit", path, "--solver", "exact", "--tau", "1"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["fit"]["loss"] == pytest.approx(0.0, abs=1e-20)
    assert payload["manifest"]["subcommand"] == "fit"


def test_fit_three_point_example(tmp_path, capsys):
    path = write(tmp_path / "three.csv", "x,y\n1,1\n1,1\n1,10\n")
    code, out, _ = run(["fit", path, "--solver", "exact", "--tau", "2", "--no-intercept"], capsys)
    assert code == 0
    fit = json.loads(out)["fit"]
    assert fit["beta"] == [pytest.approx(1.0, abs=1e-12)]
    assert fit["inlier_mask"] == [True, True, False]


def test_fit_too_large_for_exact(tmp_path, capsys, rng):
    X = rng.standard_normal((30, 1))
    rows = "\n".join(f"{a},{b}" for a, b in zip(X[:, 0], X[:, 0] + rng.standard_normal(30)))
    path = write(tmp_path / "big.csv", "x,y\n" + rows + "\n")
    code, _, err = run(["fit", path, "--solver", "exact"], capsys)
    assert code == 3
    assert "instance-too-large" in err


def test_fit_input_errors(tmp_path, capsys):
    assert run(["fit", str(tmp_path / "missing.csv")], capsys)[0] == 2
    path = write(tmp_path / "bad.csv", "x,y\n1,oops\n")
    assert run(["fit", path], capsys)[0] == 2
    small = write(tmp_path / "small.csv", "x,y\n1,1\n2,2\n3,4\n")
    # the loglog rule needs n >= 16
    assert run(["fit", small], capsys)[0] == 2
    assert run(["fit", small, "--y", "zzz", "--tau", "1"], capsys)[0] == 2


def test_fit_with_inference_and_out(tmp_path, capsys, rng):
    X = rng.standard_normal((40, 2))
    y = X @ [1.0, 2.0] + rng.standard_normal(40)
    rows = "\n".join(",".join(repr(float(v)) for v in r) for r in np.column_stack([y, X]))
    path = write(tmp_path / "d.csv", "resp,a,b\n" + rows + "\n")
    out = tmp_path / "fit.json"
    code, _, _ = run(["fit", path, "--y", "resp", "--solver", "rgd", "--restarts", "10", "--infer",
                      "--out", str(out)], capsys)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["predictors"] == ["a", "b"]
    assert len(payload["inference"]["se"]) == 3


def test_fit_is_byte_identical_apart_from_timing(tmp_path, capsys, rng):
    X = rng.standard_normal((30, 1))
    rows = "\n".join(f"{float(a)!r},{float(a + b)!r}" for a, b in zip(X[:, 0], rng.standard_normal(30)))
    path = write(tmp_path / "d.csv", "x,y\n" + rows + "\n")
    outs = []
    for _ in range(2):
        _, out, _ = run(["fit", path, "--restarts", "20", "--seed", "3"], capsys)
        payload = json.loads(out)
        payload["manifest"].pop("wall_seconds")
        payload["manifest"].pop("fit_seconds")
        outs.append(dumps(payload))
    assert outs[0] == outs[1]


def test_json_floats_round_trip():
    values = [0.1, 1 / 3, 2.0**-1074, 1e308, -123.456]
    assert json.loads(dumps(values)) == values


def test_simulate_rows(tmp_path, capsys):
    code, out, err = run(["simulate", "--scenario", "1", "--replicates", "1", "--estimators", "ols,ahr"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["estimator"] for r in rows] == ["ols", "ahr"]
    assert list(rows[0]) == ["estimator", "scenario", "a", "median_mse", "median_sd", "mean_cpu_s"]
    assert json.loads(err)["subcommand"] == "simulate"
    out_path = tmp_path / "sweep.csv"
    a_list = ",".join(str(a) for a in range(10, 101, 10))
    code, _, _ = run(["simulate", "--a", a_list, "--replicates", "1", "--estimators", "ols,ahr",
                      "--out", str(out_path)], capsys)
    assert code == 0
    assert len(list(csv.DictReader(out_path.open()))) == 20
    assert (tmp_path / "sweep.csv.manifest.json").exists()


def test_simulate_unknown_estimator(capsys):
    assert run(["simulate", "--estimators", "magic", "--replicates", "1"], capsys)[0] == 2


def test_landscape_output(capsys):
    code, out, _ = run(["landscape", "--case", "1", "--n-list", "200,400", "--grid=-5,15,401"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2 * 401
    for n in (200, 400):
        sub = [r for r in rows if int(r["n"]) == n]
        tau = select_tau(n, TauRule.SQRT_N_OVER_LOGLOG_N)
        assert all(float(r["loss"]) <= tau * tau / 2 for r in sub)
        best = min(sub, key=lambda r: float(r["loss"]))
        assert abs(float(best["beta"]) - 5.0) <= 0.5


def test_breakdown_matches_library(capsys):
    code, out, _ = run(["breakdown", "--estimator", "exact,ahr", "--m-list", "0,1,9"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    for est in ("exact", "ahr"):
        lib = breakdown_probe(20, 2, [0, 1, 9], [1e2, 1e3, 1e4], est, 0)
        got = [(int(r["m"]), float(r["t"]), float(r["norm"])) for r in rows if r["estimator"] == est]
        assert got == lib


def test_background_constant_sequence(tmp_path, capsys, rng):
    frame = rng.uniform(0.2, 0.8, (6, 7))
    frames = tmp_path / "frames"
    frames.mkdir()
    # the default mad-scaled rule needs at least 16 frames
    for k in range(20):
        write_pgm(frames / f"f{k:02d}.pgm", frame)
    out = tmp_path / "out"
    code, _, _ = run(["background", str(frames), "--q", "1", "--out-dir", str(out)], capsys)
    assert code == 0
    stored = read_pgm(frames / "f00.pgm")
    for k in range(20):
        np.testing.assert_array_equal(read_pgm(out / f"background_{k:04d}.pgm"), stored)
        assert read_pgm(out / f"foreground_{k:04d}.pgm").max() == 0
    summary = json.loads((out / "summary.json").read_text())
    assert not any(summary["flagged"])


def test_inpaint_clean_image_is_unchanged(tmp_path, capsys):
    x = np.linspace(0, 1, 20)
    img = 0.5 + 0.3 * np.outer(np.sin(3 * x), np.cos(2 * x))
    src = tmp_path / "clean.pgm"
    write_pgm(src, img)
    out = tmp_path / "restored.pgm"
    metrics = tmp_path / "m.json"
    code, _, _ = run(["inpaint", str(src), "--out", str(out), "--metrics", str(metrics), "--patch", "5",
                      "--lambda", "1e-6", "--tau", "0.05", "--truth", str(src)], capsys)
    assert code == 0
    np.testing.assert_array_equal(read_pgm(out), read_pgm(src))
    m = json.loads(metrics.read_text().replace("Infinity", "1e999"))
    assert m["mask_density"] == 0


def test_inpaint_removes_spikes(tmp_path, capsys, rng):
    x = np.linspace(0, 1, 24)
    img = 0.5 + 0.3 * np.outer(np.sin(3 * x), np.cos(2 * x))
    dirty = img.copy()
    dirty[rng.random(img.shape) < 0.03] = 1.0
    write_pgm(tmp_path / "clean.pgm", img)
    write_pgm(tmp_path / "dirty.pgm", dirty)
    code, out, _ = run(["inpaint", str(tmp_path / "dirty.pgm"), "--out", str(tmp_path / "r.pgm"), "--patch", "5",
                        "--truth", str(tmp_path / "clean.pgm")], capsys)
    assert code == 0
    m = json.loads(out)
    assert m["psnr_restored"] > m["psnr_input"] + 6


def test_help_lists_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name in ("fit", "simulate", "landscape", "breakdown", "background", "inpaint"):
        text = sub[name].format_help()
        assert "--threads" in text and "default" in text


def test_threads_from_environment(monkeypatch):
    args = build_parser().parse_args(["landscape"])
    monkeypatch.setenv("ACLS_THREADS", "3")
    assert threads(args) == 3
    args = build_parser().parse_args(["landscape", "--threads", "2"])
    assert threads(args) == 2
