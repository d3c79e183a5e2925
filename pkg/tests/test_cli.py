import subprocess
import sys

import pytest

from gradalign import cli
from gradalign.errors import NumericalError
from gradalign.graph import erdos_renyi, load_graph, load_ground_truth, save_graph

FAST = ["--epochs", "20", "--hidden-dim", "16"]


@pytest.fixture()
def files(tmp_path):
    g = erdos_renyi(60, p=0.08, d=5, seed=2)
    save_graph(g, tmp_path / "base.edges", tmp_path / "base.attrs")
    rc = cli.main(["synth", "--base-edges", str(tmp_path / "base.edges"),
                   "--base-attrs", str(tmp_path / "base.attrs"), "--edge-noise", "0.1",
                   "--attr-noise", "0.1", "--seed", "4", "--out-dir", str(tmp_path / "copy")])
    assert rc == 0
    return tmp_path


def align_args(d, out="a.tsv", *extra):
    return ["align", "--source-edges", str(d / "base.edges"), "--source-attrs", str(d / "base.attrs"),
            "--target-edges", str(d / "copy/target.edges"),
            "--target-attrs", str(d / "copy/target.attrs"),
            "--ground-truth", str(d / "copy/ground_truth.txt"), "--out", str(d / out), *FAST, *extra]


class TestSynth:
    def test_outputs_consistent(self, files):
        base = load_graph(files / "base.edges", files / "base.attrs")
        copy = load_graph(files / "copy/target.edges", files / "copy/target.attrs")
        gt = load_ground_truth(files / "copy/ground_truth.txt", base, copy)
        assert copy.n == base.n and len(gt) == base.n
        assert copy.num_edges == base.num_edges - int(0.1 * base.num_edges)


class TestAlign:
    def test_alignment_and_metrics(self, files, capsys):
        assert cli.main(align_args(files)) == 0
        out = capsys.readouterr().out
        assert "acc=" in out and "p_at_10=" in out and "iter = 15" in out
        lines = (files / "a.tsv").read_text().splitlines()
        assert len(lines) == 60
        src, tgt, score, origin = lines[0].split("\t")
        float(score)
        assert origin == "seed" or origin.startswith("iter-")
        assert (files / "a.tsv.eval.csv").exists()
        assert "variant = grad-align" in (files / "a.tsv.config").read_text()

    def test_deterministic_output(self, files):
        cli.main(align_args(files, "x.tsv"))
        cli.main(align_args(files, "y.tsv"))
        assert (files / "x.tsv").read_bytes() == (files / "y.tsv").read_bytes()

    def test_precedence_flag_over_file_over_default(self, files, capsys):
        (files / "cfg.txt").write_text("# run settings\niter = 3\nbeta = 0.5\ntau = inf\n")
        cli.main(align_args(files, "c.tsv", "--config", str(files / "cfg.txt"), "--iter", "4"))
        out = capsys.readouterr().out
        assert "iter = 4" in out and "beta = 0.5" in out and "tau = inf" in out
        assert "k = 2" in out

    def test_env_seed_is_default(self, files, capsys, monkeypatch):
        monkeypatch.setenv("GRADALIGN_SEED", "17")
        cli.main(align_args(files, "e.tsv"))
        assert "rng_seed = 17" in capsys.readouterr().out
        cli.main(align_args(files, "e.tsv", "--seed", "3"))
        assert "rng_seed = 3" in capsys.readouterr().out

    def test_augment_log_written(self, files):
        rc = cli.main(align_args(files, "ea.tsv", "--variant", "grad-align-ea", "--tau", "0",
                                 "--augment-log", str(files / "aug.tsv")))
        assert rc == 0
        assert (files / "aug.tsv").read_text().strip()

    def test_missing_required_flag_exits_1(self, files, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["align", "--source-edges", str(files / "base.edges")])
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_malformed_input_exits_1(self, files, capsys):
        (files / "bad.edges").write_text("1 2\n3\n")
        args = align_args(files)
        args[args.index("--source-edges") + 1] = str(files / "bad.edges")
        assert cli.main(args) == 1
        assert "bad.edges" in capsys.readouterr().err

    def test_unknown_config_key_exits_1(self, files):
        (files / "cfg.txt").write_text("learning_rat = 0.1\n")
        assert cli.main(align_args(files, "a.tsv", "--config", str(files / "cfg.txt"))) == 1

    def test_divergence_exits_2(self, files, monkeypatch):
        def diverge(*a, **k):
            raise NumericalError("non-finite activations", layer=1)

        monkeypatch.setattr(cli, "align", diverge)
        assert cli.main(align_args(files)) == 2


class TestBench:
    def test_csv_and_summary(self, files, capsys):
        csv_path = files / "b.csv"
        rc = cli.main(["bench", "--base-edges", str(files / "base.edges"),
                       "--base-attrs", str(files / "base.attrs"), "--grid", "0.1:0.1,0.2:0.0",
                       "--repeats", "2", "--variants", "grad-align,ablation-3",
                       "--out-csv", str(csv_path), *FAST])
        assert rc == 0
        assert len(csv_path.read_text().splitlines()) == 1 + 2 * 2 * 2
        assert (files / "b.csv.summary.csv").exists()
        assert "acc_mean" in capsys.readouterr().out

    def test_bad_variant_exits_1(self, files):
        rc = cli.main(["bench", "--base-edges", str(files / "base.edges"), "--grid", "0.1:0",
                       "--repeats", "1", "--variants", "nope", "--out-csv", str(files / "b.csv")])
        assert rc == 1


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "gradalign.cli", *align_args(files, "s.tsv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "acc=" in proc.stdout
