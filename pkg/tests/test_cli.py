import json
import shutil
import subprocess

import pytest

from mwe.cli import read_config, run

CONLLU = """# text = The dog chased a red ball .
1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_
2\tdog\tdog\tNOUN\t_\t_\t3\tnsubj\t_\t_
3\tchased\tchase\tVERB\t_\t_\t0\troot\t_\t_
4\ta\ta\tDET\t_\t_\t6\tdet\t_\t_
5\tred\tred\tADJ\t_\t_\t6\tamod\t_\t_
6\tball\tball\tNOUN\t_\t_\t3\tobj\t_\t_
7\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_

"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> train (desk) on the full planted corpus."""
    d = tmp_path_factory.mktemp("cli")
    prefix = str(d / "planted")
    assert run(["-q", "synth", "--output", prefix, "--seed", "0"]) == 0
    model = str(d / "model.bin")
    argv = ["-q", "train", "--input", prefix + ".tuples.tsv", "--output", model,
            "--preset", "desk", "--min-count", "1", "--seed", "3"]
    assert run(argv) == 0
    return d, prefix, model, argv


def test_help_exits_zero(capsys):
    assert run(["train", "--help"]) == 0
    assert "--local-dim" in capsys.readouterr().out


def test_usage_errors_exit_one(capsys):
    assert run(["train", "--no-such-flag"]) == 1
    assert run(["frobnicate"]) == 1
    assert run([]) == 1
    assert "usage" in capsys.readouterr().err


def test_console_script_help():
    exe = shutil.which("mwe")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "eval-sp" in res.stdout


def test_runtime_error_exits_two(tmp_path, capsys):
    assert run(["info", "--model", str(tmp_path / "nope.bin")]) == 2
    assert "nope.bin" in capsys.readouterr().err


def test_end_to_end_planted_recovery(pipeline, capsys, tmp_path):
    _, prefix, model, _ = pipeline
    out = tmp_path / "sp.json"
    assert run(["-q", "eval-sp", "--model", model, "--input", prefix + ".gold.tsv",
                "--json", str(out)]) == 0
    table = capsys.readouterr().out
    assert table.startswith("group\trho\tscorable\ttotal")
    result = json.loads(out.read_text())
    assert set(result["rho"]) == {"nsubj", "dobj", "amod"}
    assert all(rho >= 0.8 for rho in result["rho"].values()), result["rho"]
    assert result["coverage"] == 1.0


def test_train_is_reproducible(pipeline, tmp_path, capsys):
    d, _, model, argv = pipeline
    again = str(tmp_path / "again.bin")
    capsys.readouterr()
    assert run(argv[:5] + [again] + argv[6:]) == 0
    first_table = capsys.readouterr().out
    with open(model, "rb") as a, open(again, "rb") as b:
        assert a.read() == b.read()
    rep1 = json.loads(open(model + ".report.json").read())
    rep2 = json.loads(open(again + ".report.json").read())
    assert rep1 == rep2
    assert run(argv[:5] + [again] + argv[6:]) == 0
    assert capsys.readouterr().out == first_table


def test_effective_settings_echoed(pipeline, capsys):
    _, prefix, _, argv = pipeline
    assert run(argv + ["--epochs", "1"]) == 0
    err = capsys.readouterr().err
    assert "# dim\t32" in err and "# epochs\t1" in err
    assert "# relations\tnsubj,dobj,amod" in err
    assert err.count("# seed\t") == 1


def test_config_overlay_precedence(pipeline, tmp_path, capsys, monkeypatch):
    _, prefix, _, _ = pipeline
    cfg = tmp_path / "train.cfg"
    cfg.write_text("# overlay\npreset = desk\nepochs = 2\nlocal-dim = 2\nseed = 9\n")
    assert read_config(cfg)["local_dim"] == 2
    monkeypatch.setenv("MWE_THREADS", "1")
    out = str(tmp_path / "m.bin")
    assert run(["-q", "train", "--input", prefix + ".tuples.tsv", "--output", out, "--config", str(cfg),
                "--epochs", "1", "--min-count", "1"]) == 0
    err = capsys.readouterr().err
    assert "# epochs\t1" in err and "# local_dim\t2" in err and "# seed\t9" in err
    assert "# dim\t32" in err and "# workers\t1" in err
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(["train", "--input", prefix + ".tuples.tsv", "--output", out, "--config", str(bad)]) == 1


def test_info_reports_sizes(pipeline, tmp_path, capsys):
    _, _, model, _ = pipeline
    out = tmp_path / "info.json"
    assert run(["info", "--model", model, "--json", str(out)]) == 0
    info = json.loads(out.read_text())
    assert (info["n"], info["m"], info["d"], info["s"]) == (200, 3, 32, 4)
    assert info["param_count"] == 2 * 200 * 32 + 2 * 3 * 200 * 4 + 2 * 3 * 4 * 32
    assert "param_count\t" in capsys.readouterr().out


def test_export_and_eval_ws(pipeline, tmp_path, capsys):
    d, _, model, _ = pipeline
    out = tmp_path / "vec.txt"
    assert run(["export", "--model", model, "--output", str(out), "--selector", "dobj",
                "--role", "concat"]) == 0
    first = out.read_text().splitlines()[:2]
    assert first[0] == "200 64" and "@dobj " in first[1]
    ws = tmp_path / "ws.tsv"
    ws.write_text("g0_w1\tg0_w2\tn\t9\ng0_w1\tg1_w2\tn\t1\ng2_w3\tg2_w5\tn\t8\ng2_w3\tg3_w0\tn\t2\n")
    assert run(["eval-ws", "--model", model, "--input", str(ws), "--combiner", "h+t"]) == 0
    assert "overall" in capsys.readouterr().out


def test_verify(capsys):
    assert run(["verify", "--seeds", "4"]) == 0
    out = capsys.readouterr().out
    assert "4/4 passed" in out
    assert run(["verify", "--seeds", "2", "--tol", "1e-30"]) == 2


def test_sweep(pipeline, tmp_path):
    _, prefix, _, _ = pipeline
    out = tmp_path / "sweep.tsv"
    assert run(["-q", "sweep", "--input", prefix + ".tuples.tsv", "--gold", prefix + ".gold.tsv",
                "--param", "s", "--values", "1,2", "--preset", "desk", "--epochs", "2",
                "--min-count", "1", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s\tseed\taverage\tamod\tdobj\tnsubj\tcoverage"
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["1", "2"]


def test_extract_and_build_vocab(tmp_path, capsys):
    src = tmp_path / "t.conllu"
    src.write_text(CONLLU * 5)
    tuples = tmp_path / "t.tsv"
    assert run(["extract", "--input", str(src), "--output", str(tuples),
                "--relations", "nsubj,obj,amod"]) == 0
    body = [ln for ln in tuples.read_text().splitlines() if not ln.startswith("#")]
    assert sorted(body) == ["ball\tamod\tred\t5", "chased\tnsubj\tdog\t5", "chased\tobj\tball\t5"]
    assert run(["build-vocab", "--input", str(tuples), "--output", str(tmp_path / "v"),
                "--min-count", "5"]) == 0
    assert "n\t4" in capsys.readouterr().out
    assert (tmp_path / "v.rels").read_text().splitlines()[1:] == ["nsubj", "amod", "obj"]
