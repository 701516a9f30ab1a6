import numpy as np
import pytest

from zacf.cli import RunConfig, main
from zacf.io import read_manifest, read_template


def run(*args):
    return main([str(a) for a in args])


def files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_synth_is_deterministic(tmp_path):
    assert run("synth", "shapes", "--out", tmp_path / "a", "--seed", 3) == 0
    assert run("synth", "shapes", "--out", tmp_path / "b", "--seed", 3) == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")
    run("synth", "shapes", "--out", tmp_path / "c", "--seed", 4)
    assert files(tmp_path / "a") != files(tmp_path / "c")


def test_synth_counts(tmp_path):
    run("synth", "shapes", "--out", tmp_path / "s", "--n-train", 10, "--n-test", 0)
    manifest = read_manifest(tmp_path / "s" / "manifest.cfman")
    assert len(manifest.records) == 40 and manifest.classes == [0, 1, 2, 3]
    run("synth", "ecg-like", "--out", tmp_path / "e")
    manifest = read_manifest(tmp_path / "e" / "manifest.cfman")
    assert manifest.load(manifest.records[0]).size == (301, 1)
    run("synth", "vehicles-ir-like", "--out", tmp_path / "v", "--n-test", 2)
    manifest = read_manifest(tmp_path / "v" / "manifest.cfman")
    assert {r.split for r in manifest.records} == {"train", "test", "mine"}
    assert manifest.select("test")[0].location is not None


@pytest.fixture
def shapes_dir(tmp_path):
    run("synth", "shapes", "--out", tmp_path / "data", "--n-train", 4, "--n-test", 2, "--seed", 1)
    return tmp_path


def test_train_za_templates_have_no_tail(shapes_dir, capsys):
    assert run("train", shapes_dir / "data" / "manifest.cfman", "--design", "ZAMACE", "--out", shapes_dir / "t") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "class,kind,objective,peak_residual,tail_residual,iterations"
    assert len(out) == 5
    for c in range(4):
        t = read_template(shapes_dir / "t" / f"class_{c:03d}.cft1")
        assert t.kind == "ZAMACE" and t.tail_max() < 1e-8 and t.grid == (31, 31)


def test_zero_padding_zamace_payload_equals_mace(shapes_dir):
    manifest = shapes_dir / "data" / "manifest.cfman"
    run("train", manifest, "--design", "ZAMACE", "--q", 0, "--out", shapes_dir / "za")
    run("train", manifest, "--design", "MACE", "--q", 0, "--out", shapes_dir / "mace")
    for c in range(4):
        a = (shapes_dir / "za" / f"class_{c:03d}.cft1").read_bytes()
        b = (shapes_dir / "mace" / f"class_{c:03d}.cft1").read_bytes()
        ha, pa = a.split(b"\n", 1)
        hb, pb = b.split(b"\n", 1)
        assert pa == pb
        assert ha.split()[2:] == hb.split()[2:]


def test_prox_and_closed_form_agree(tmp_path):
    run("synth", "ecg-like", "--out", tmp_path / "d", "--count", 4, "--length", 12)
    manifest = tmp_path / "d" / "manifest.cfman"
    run("train", manifest, "--design", "ZAMACE", "--out", tmp_path / "c")
    run("train", manifest, "--design", "ZAMACE", "--solver", "prox", "--out", tmp_path / "p")
    a = read_template(tmp_path / "c" / "class_000.cft1").template.data
    b = read_template(tmp_path / "p" / "class_000.cft1").template.data
    assert np.mean((a - b) ** 2) < 1e-6


def test_eval_on_noiseless_training_set(tmp_path):
    run("synth", "shapes", "--out", tmp_path / "d", "--n-train", 3, "--n-test", 2, "--noise", 0)
    manifest = tmp_path / "d" / "manifest.cfman"
    run("train", manifest, "--design", "ZAMACE", "--out", tmp_path / "t")
    assert run("eval", manifest, "--templates", tmp_path / "t", "--split", "train", "--out", tmp_path / "e") == 0
    metrics = (tmp_path / "e" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "design,eer,rank1,classification,localization,recognition"
    assert float(metrics[1].split(",")[2]) == 1.0


def test_eval_outputs(shapes_dir):
    manifest = shapes_dir / "data" / "manifest.cfman"
    run("train", manifest, "--design", "ZAOTSDF", "--out", shapes_dir / "t")
    run("eval", manifest, "--templates", shapes_dir / "t", "--out", shapes_dir / "e")
    scores = (shapes_dir / "e" / "scores.csv").read_text().splitlines()
    assert scores[0] == "probe_id,filter_id,pce,peak_row,peak_col"
    assert len(scores) - 1 == 8 * 4
    first = (shapes_dir / "e" / "metrics.csv").read_bytes()
    run("eval", manifest, "--templates", shapes_dir / "t", "--out", shapes_dir / "e")
    assert (shapes_dir / "e" / "metrics.csv").read_bytes() == first


def test_sweep_command(tmp_path):
    run("synth", "ecg-like", "--out", tmp_path / "d", "--count", 5, "--length", 32)
    assert run("sweep", tmp_path / "d" / "manifest.cfman", "--out", tmp_path / "s", "--svg") == 0
    lines = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    assert [r[0] for r in rows] == [0, 8, 16, 24, 31]
    assert len({r[4] for r in rows}) == 1
    assert rows[-1][6] < 1e-10
    za = [r[3] for r in rows]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(za, za[1:]))
    assert (tmp_path / "s" / "sweep.svg").read_text().startswith("<svg")


def test_selftest_command(tmp_path, capsys):
    assert run("selftest", "--out", tmp_path, "--seed", 2) == 0
    text = (tmp_path / "selftest.csv").read_text()
    assert capsys.readouterr().out == text
    assert text.startswith("check,instances,worst,tolerance,passed\n")


@pytest.mark.parametrize(
    "args",
    [
        ("train", "missing.cfman"),
        ("synth", "nothing", "--out", "."),
        ("train", "m.cfman", "--delta", "-1"),
        ("train", "m.cfman", "--q", "3", "--pad-fraction", "0.2"),
        ("selftest", "--seed", "-1"),
        (),
    ],
)
def test_errors_are_single_lines(tmp_path, capsys, args, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(list(args)) == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("error: ")


def test_missing_template(shapes_dir, capsys):
    manifest = shapes_dir / "data" / "manifest.cfman"
    (shapes_dir / "empty").mkdir()
    assert run("eval", manifest, "--templates", shapes_dir / "empty", "--out", shapes_dir / "e") == 2
    assert "MissingTemplate" in capsys.readouterr().err


def test_run_config_validation():
    from zacf.cli import CliError

    for kwargs in ({"C": 0.0}, {"sigma": -1.0}, {"pad_fraction": 1.0}, {"design": "XYZ"}, {"seed": 2**64}):
        with pytest.raises(CliError):
            RunConfig(**kwargs)
    assert RunConfig(seed=2**64 - 1).suite().C == 0.003
