import json

import numpy as np
import pytest

from chcl.cli import run
from chcl.eval import synthetic_dataset
from chcl.graphs import load_edge_list, save_edge_list


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "bench.el"
    save_edge_list(synthetic_dataset(count_per_class=6, seed=5), path)
    return path


class TestSynth:
    def test_writes_loadable_dataset(self, tmp_path):
        out = tmp_path / "synth.el"
        code = run(["synth", "--per-class", "3", "--seed", "9", "--out", str(out)])
        assert code == 0
        ds = load_edge_list(out)
        assert len(ds) == 12
        assert (tmp_path / "manifest.json").exists()

    def test_identical_runs_identical_files(self, tmp_path):
        a, b = tmp_path / "a.el", tmp_path / "b.el"
        run(["synth", "--per-class", "2", "--seed", "4", "--out", str(a)])
        run(["synth", "--per-class", "2", "--seed", "4", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestSignature:
    def test_column_contract(self, data_file, tmp_path):
        out = tmp_path / "sig.csv"
        code = run(
            ["--workers", "1", "signature", "--data", str(data_file), "--dc", "8", "--dh", "14", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 24
        # 3 id columns + d_c + d_h value columns
        assert all(len(line.split(",")) == 3 + 22 for line in lines[1:])

    def test_missing_file_nonzero_exit(self, tmp_path, capsys):
        code = run(["signature", "--data", "nope.el", "--out", str(tmp_path / "x.csv")])
        assert code != 0
        assert "error:" in capsys.readouterr().err

    def test_incidence_dump(self, tmp_path):
        data = tmp_path / "k3.el"
        data.write_text("# graph 0 label=0\nn 3\ne 0 1\ne 0 2\ne 1 2\n")
        dump = tmp_path / "inc"
        code = run(
            [
                "--workers", "1", "signature", "--data", str(data),
                "--out", str(tmp_path / "sig.csv"), "--dump-incidence", str(dump),
            ]
        )
        assert code == 0
        assert (dump / "b1_0.txt").read_text() == "0 0 -1\n0 1 -1\n1 0 1\n1 2 -1\n2 1 1\n2 2 1\n"
        assert (dump / "b2_0.txt").read_text() == "0 0 1\n1 0 -1\n2 0 1\n"

    def test_unknown_flag_exits_two(self, data_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["signature", "--data", str(data_file), "--out", str(tmp_path / "s.csv"), "--frobnicate"])
        assert exc.value.code == 2


class TestPretrain:
    def test_outputs_and_manifest(self, data_file, tmp_path):
        out = tmp_path / "run"
        code = run(
            [
                "pretrain",
                "--data", str(data_file),
                "--epochs", "2",
                "--batch-size", "8",
                "--hidden-dim", "8",
                "--embed-dim", "6",
                "--num-layers", "2",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert (out / "checkpoint.txt").exists()
        trace = (out / "loss_trace.csv").read_text().splitlines()
        assert trace[0] == "epoch,mean_total,mean_geo,mean_ch"
        assert len(trace) == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "pretrain"
        assert manifest["resolved_config"]["epochs"] == 2
        assert manifest["resolved_config"]["seed"] == 3

    def test_config_file_with_flag_override(self, data_file, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs = 1\nbatch_size = 8\nhidden_dim = 8\nembed_dim = 6\nnum_layers = 2\ntau = 0.4\n")
        out = tmp_path / "run"
        code = run(
            ["pretrain", "--data", str(data_file), "--config", str(cfg), "--tau", "0.7", "--out", str(out)]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["resolved_config"]["tau"] == 0.7  # flag beats file
        assert manifest["resolved_config"]["epochs"] == 1  # file beats default

    def test_malformed_config_nonzero(self, data_file, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("epochs 1\n")
        code = run(["pretrain", "--data", str(data_file), "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code != 0
        assert "malformed" in capsys.readouterr().err

    def test_byte_identical_reruns(self, data_file, tmp_path):
        args = [
            "pretrain", "--data", str(data_file),
            "--epochs", "2", "--batch-size", "8", "--hidden-dim", "8",
            "--embed-dim", "6", "--num-layers", "2", "--seed", "7",
        ]
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        assert (out1 / "loss_trace.csv").read_bytes() == (out2 / "loss_trace.csv").read_bytes()
        assert (out1 / "checkpoint.txt").read_bytes() == (out2 / "checkpoint.txt").read_bytes()


@pytest.fixture(scope="module")
def checkpoint(data_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("ckpt")
    run(
        [
            "pretrain",
            "--data", str(data_file),
            "--epochs", "3", "--batch-size", "8", "--hidden-dim", "8",
            "--embed-dim", "6", "--num-layers", "2", "--seed", "1",
            "--out", str(out),
        ]
    )
    return out / "checkpoint.txt"


class TestProbeSweepAblate:
    def test_probe_signature_source(self, data_file, tmp_path):
        out = tmp_path / "probe"
        code = run(["probe", "--data", str(data_file), "--folds", "4", "--out", str(out)])
        assert code == 0
        lines = (out / "probe_report.csv").read_text().splitlines()
        assert lines[0] == "source,fold,accuracy"
        assert len(lines) == 5
        assert (out / "manifest.json").exists()

    def test_probe_checkpoint_source(self, data_file, checkpoint, tmp_path):
        out = tmp_path / "probe"
        code = run(
            [
                "probe", "--data", str(data_file), "--checkpoint", str(checkpoint),
                "--source", "concat", "--folds", "4", "--out", str(out),
            ]
        )
        assert code == 0

    def test_probe_geo_requires_checkpoint(self, data_file, tmp_path, capsys):
        code = run(["probe", "--data", str(data_file), "--source", "geo", "--out", str(tmp_path / "p")])
        assert code != 0
        assert "requires --checkpoint" in capsys.readouterr().err

    def test_sweep_row_count(self, data_file, checkpoint, tmp_path):
        out = tmp_path / "sweep"
        before = data_file.read_bytes()
        code = run(
            [
                "sweep", "--data", str(data_file), "--checkpoint", str(checkpoint),
                "--kind", "edge_drop", "--levels", "0.05,0.25,0.5", "--seeds", "1",
                "--folds", "4", "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 4
        assert (out / "manifest.json").exists()
        assert data_file.read_bytes() == before  # inputs are never mutated

    def test_sweep_both_kinds(self, data_file, checkpoint, tmp_path):
        out = tmp_path / "sweep2"
        code = run(
            [
                "sweep", "--data", str(data_file), "--checkpoint", str(checkpoint),
                "--kind", "both", "--levels", "0.1,0.3", "--seeds", "1",
                "--folds", "4", "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        kinds = {line.split(",")[0] for line in lines[1:]}
        assert kinds == {"edge_drop", "feature_mask"}
        assert len(lines) == 5

    def test_ablate_four_rows(self, data_file, tmp_path):
        out = tmp_path / "ablate"
        code = run(
            [
                "ablate", "--data", str(data_file), "--seeds", "1", "--folds", "4",
                "--epochs", "2", "--batch-size", "8", "--hidden-dim", "8",
                "--embed-dim", "6", "--num-layers", "2", "--seed", "11",
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = (out / "ablate.csv").read_text().splitlines()
        assert len(lines) == 5
        variants = [line.split(",")[0] for line in lines[1:]]
        assert variants == ["full", "no_cheeger", "no_hodge", "no_ch"]
        assert (out / "manifest.json").exists()
