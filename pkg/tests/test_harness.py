import json

import numpy as np
import pytest

from spectral_gn.cli import main
from spectral_gn.datasets import load_manifest, load_samples
from spectral_gn.exceptions import ConfigError
from spectral_gn.harness import (ExperimentConfig, RunRecord, evaluate, evaluate_split, load_dataset,
                                 merge_curves, split_of, split_samples, train)

MODEL = {"k": 2, "latent_size": 8, "hidden_size": 8, "n_hidden": 1, "n_steps": 2}


def _config(tmp_path, **kw):
    d = dict(task="node-binary", dataset={"family": "delaunay2d", "n": 16, "count": 30, "seed": 1},
             model=MODEL, batch_size=8, iterations=6, eval_every=3, seed=0, out_dir=str(tmp_path / "run"))
    d.update(kw)
    return ExperimentConfig(**d)


# config -------------------------------------------------------------------------

def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        _config(tmp_path, task="ranking")
    with pytest.raises(ConfigError):
        _config(tmp_path, batch_size=0)
    with pytest.raises(ConfigError):
        _config(tmp_path, iterations=-1)
    with pytest.raises(ConfigError):
        _config(tmp_path, dataset={"path": "missing.jsonl"})
    with pytest.raises(ConfigError):
        _config(tmp_path, optimizer={"momentum": 0.9})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"task": "node-binary", "colour": 1})


def test_config_json_roundtrip(tmp_path):
    cfg = _config(tmp_path)
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    again = ExperimentConfig.load(path)
    assert again.to_dict() == cfg.to_dict()
    assert again.base_dir == str(tmp_path)


def test_split_is_stable_and_roughly_80_10_10():
    parts = [split_of(i, 3) for i in range(5000)]
    assert parts == [split_of(i, 3) for i in range(5000)]
    frac = {s: parts.count(s) / 5000 for s in ("train", "val", "test")}
    assert abs(frac["train"] - 0.8) < 0.03 and abs(frac["val"] - 0.1) < 0.02
    assert parts != [split_of(i, 4) for i in range(5000)]


def test_split_none_puts_everything_in_train(tmp_path):
    cfg = _config(tmp_path, split="none")
    parts = split_samples(load_dataset(cfg), cfg)
    assert len(parts["train"]) == 30 and not parts["val"] and not parts["test"]


def test_task_label_mismatch(tmp_path):
    cfg = _config(tmp_path, task="graph-class")
    with pytest.raises(ValueError):
        load_dataset(cfg)


# records ------------------------------------------------------------------------

def test_run_record_csv(tmp_path):
    r = RunRecord()
    r.add(0, "val", {"b": 0.5, "a": 1 / 3})
    r.add(5, "train", {"loss": 2.0})
    with pytest.raises(ValueError):
        r.add(4, "val", {"a": 1.0})
    assert r.to_csv() == ("iteration,split,metric,value\n0,val,a,0.3333333333333333\n"
                          "0,val,b,0.5\n5,train,loss,2.0\n")
    r.write(tmp_path / "r.csv")
    assert RunRecord.read(tmp_path / "r.csv") == r.rows
    assert r.last("val", "b") == 0.5 and r.last("test", "b") is None


# training -----------------------------------------------------------------------

def test_zero_iterations_gives_only_initial_eval(tmp_path):
    rec = train(_config(tmp_path, iterations=0))
    assert {row[0] for row in rec.rows} == {0}
    assert {row[1] for row in rec.rows} == {"val", "test"}
    for name in ("run.csv", "timing.csv", "final.ckpt", "best.ckpt", "config.json"):
        assert (tmp_path / "run" / name).exists()


def test_eval_cadence_and_train_loss_rows(tmp_path):
    rec = train(_config(tmp_path, iterations=7))
    assert sorted({row[0] for row in rec.rows}) == [0, 3, 6, 7]
    assert [row[0] for row in rec.rows if row[1] == "train"] == [3, 6, 7]


def test_identical_seeds_give_identical_bytes(tmp_path):
    a = _config(tmp_path, out_dir=str(tmp_path / "a"))
    b = _config(tmp_path, out_dir=str(tmp_path / "b"))
    train(a), train(b)
    for name in ("run.csv", "final.ckpt", "best.ckpt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    c = _config(tmp_path, out_dir=str(tmp_path / "c"), seed=1)
    train(c)
    assert (tmp_path / "c" / "run.csv").read_bytes() != (tmp_path / "a" / "run.csv").read_bytes()


def test_eval_of_final_checkpoint_matches_last_row(tmp_path):
    cfg = _config(tmp_path)
    rec = train(cfg)
    got = evaluate_split(cfg, tmp_path / "run" / "final.ckpt", "test")
    for name, value in got.items():
        assert value == rec.last("test", name)


def test_best_checkpoint_records_selection(tmp_path):
    from spectral_gn.nn import load_checkpoint

    cfg = _config(tmp_path)
    rec = train(cfg)
    _, header = load_checkpoint(tmp_path / "run" / "best.ckpt")
    vals = [v for it, s, m, v in rec.rows if s == "val" and m == "accuracy"]
    assert header["selection"]["value"] == max(vals)


def test_edge_dropout_and_perturb_configs_run(tmp_path):
    ds = {"family": "delaunay2d", "n": 16, "count": 20, "seed": 1, "edge_dropout": 1.0,
          "perturb": {"kind": "uniform-vertex-dropout", "amount": 0.1, "seed": 2}}
    rec = train(_config(tmp_path, dataset=ds, iterations=2))
    assert rec.last("val", "accuracy") is not None


def test_graph_regression_task(tmp_path):
    from spectral_gn.datasets import LabeledSample, save_samples
    from spectral_gn.datasets.generators import delaunay2d

    rng = np.random.default_rng(0)
    samples = []
    for i in range(20):
        g = delaunay2d(10, rng)
        samples.append(LabeledSample(g, [g.n_edges / 10.0], "target"))
    save_samples(tmp_path / "r.jsonl", samples)
    rec = train(_config(tmp_path, task="graph-regress", dataset={"path": "r.jsonl"}, base_dir=str(tmp_path),
                        iterations=3))
    assert rec.last("test", "mae") is not None or rec.last("val", "mae") is not None


def test_merge_curves(tmp_path):
    r = RunRecord()
    r.add(0, "val", {"accuracy": 0.5})
    r.write(tmp_path / "x.csv")
    text = merge_curves({"gn": tmp_path / "x.csv", "u-gn": tmp_path / "x.csv"})
    assert text.splitlines() == ["variant,iteration,split,metric,value", "gn,0,val,accuracy,0.5",
                                 "u-gn,0,val,accuracy,0.5"]


# CLI ----------------------------------------------------------------------------

def test_cli_generate_writes_lines_and_manifest(tmp_path, capsys):
    out = tmp_path / "d.jsonl"
    assert main(["generate", "--family", "delaunay2d", "--n", "12", "--count", "25", "--seed", "7",
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 25
    manifest = load_manifest(out)
    assert manifest["generator"] == "delaunay2d" and manifest["seed"] == 7 and manifest["count"] == 25


def test_cli_perturb_vertex_dropout_rate(tmp_path):
    src, dst = tmp_path / "d.jsonl", tmp_path / "p.jsonl"
    main(["generate", "--family", "barabasi-albert", "--n", "32", "--count", "5000", "--seed", "1",
          "--out", str(src)])
    assert main(["perturb", "--data", str(src), "--kind", "uniform-vertex-dropout", "--p", "0.1",
                 "--seed", "3", "--out", str(dst)]) == 0
    before = np.mean([s.graph.n_nodes for s in load_samples(src)])
    after = np.mean([s.graph.n_nodes for s in load_samples(dst)])
    assert abs(after / before - 0.9) <= 0.02 * 0.9
    assert load_manifest(dst)["perturbation"] == {"kind": "uniform-vertex-dropout", "amount": 0.1}


def test_cli_train_eval_curves(tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    main(["generate", "--family", "delaunay2d", "--n", "16", "--count", "30", "--seed", "2", "--out", str(data)])
    cfg = _config(tmp_path, dataset={"path": "d.jsonl"}, base_dir=str(tmp_path), out_dir="run").to_dict()
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["train", "--config", str(tmp_path / "c.json"), "--quiet"]) == 0
    rec = RunRecord()
    rec.rows = RunRecord.read(tmp_path / "run" / "run.csv")
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(tmp_path / "run" / "final.ckpt"), "--config",
                 str(tmp_path / "c.json"), "--split", "test"]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["accuracy"] == rec.last("test", "accuracy")
    assert main(["eval", "--checkpoint", str(tmp_path / "run" / "final.ckpt"), "--data", str(data)]) == 0
    assert main(["curves", f"gn={tmp_path / 'run'}", "--out", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.csv").read_text().startswith("variant,iteration,split,metric,value\n")


def test_cli_usage_errors_exit_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--family", "nope", "--n", "3", "--count", "1", "--out", "x"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code != 0
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 1
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["perturb", "--data", "x", "--kind", "edge-dropout", "--out", "y"])
    assert exc.value.code


def test_evaluate_rejects_wrong_widths(tmp_path):
    cfg = _config(tmp_path, iterations=1)
    train(cfg)
    from spectral_gn.datasets import LabeledSample
    from conftest import path_graph

    with pytest.raises(ValueError):
        evaluate(tmp_path / "run" / "final.ckpt", [LabeledSample(path_graph(4), [0, 1, 1, 0], "node")])
