import numpy as np
import pytest

from seafield.cli import main
from seafield.config import ConfigError, DEFAULTS, ExperimentConfig
from seafield.data import load_dataset

SMALL = """\
model.kind={kind}
model.channels=4
model.end_channels=8
model.skip_channels=8
cnf.hidden=8
data.synthetic.nodes=3
data.synthetic.days=14
data.synthetic.granularity=60
train.epochs=1
eval.plot_nodes=0,2
seeds=0
"""


def _config(tmp_path, kind="inception", extra=""):
    path = tmp_path / f"{kind}.cfg"
    path.write_text(SMALL.format(kind=kind) + extra)
    return path


def test_parse_and_dump_round_trip():
    cfg = ExperimentConfig.parse("# comment\nmodel.kind=mtgnn\ntrain.epochs=3\ndata.weekend=yes\n")
    assert cfg["model.kind"] == "mtgnn" and cfg["train.epochs"] == 3 and cfg["data.weekend"]
    assert ExperimentConfig.parse(cfg.dumps()).values == cfg.values
    assert set(cfg.values) == set(DEFAULTS)


@pytest.mark.parametrize("text", ["foo=1", "train.epochs=many", "model.kind=lstm", "noequals",
                                  "data.train_fraction=0.9"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.parse(text)


def test_unknown_key_exit_status(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("foo=1\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err.strip()
    assert "foo" in err and len(err.splitlines()) == 1


def test_missing_config_is_config_error(tmp_path):
    assert main(["train", "--config", str(tmp_path / "none.cfg")]) == 2


def test_runtime_failure_exit_status(tmp_path, capsys):
    cfg = _config(tmp_path, extra=f"data.path={tmp_path / 'missing'}\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert capsys.readouterr().err.startswith("seafield: ")


def test_data_dir_environment(tmp_path, monkeypatch):
    assert main(["synthesize", "--config", str(_config(tmp_path)), "--out",
                 str(tmp_path / "root" / "syn")]) == 0
    monkeypatch.setenv("SEAFIELD_DATA_DIR", str(tmp_path / "root"))
    cfg = ExperimentConfig.load(_config(tmp_path, extra="data.path=syn\n"))
    assert cfg.dataset().num_nodes == 3


def test_pipeline(tmp_path):
    data = tmp_path / "data"
    assert main(["synthesize", "--config", str(_config(tmp_path)), "--out", str(data)]) == 0
    assert load_dataset(data).num_nodes == 3

    cfg = _config(tmp_path, extra=f"data.path={data}\n")
    run = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--seed", "4", "--out", str(run)]) == 0
    for name in ("checkpoint.pt", "history.csv", "metrics.csv", "val_curve.png", "config.txt",
                 "seed", "FORMAT"):
        assert (run / name).exists(), name
    assert (run / "seed").read_text().strip() == "4"
    assert ExperimentConfig.parse((run / "config.txt").read_text())["data.path"] == str(data)

    ev = tmp_path / "eval"
    assert main(["evaluate", "--config", str(cfg), "--out", str(ev),
                 "--checkpoint", str(run / "checkpoint.pt")]) == 0
    assert (ev / "metrics.csv").exists()
    assert (ev / "prediction_node0.png").exists() and (ev / "prediction_node2.png").exists()


def test_evaluate_needs_checkpoint(tmp_path):
    assert main(["evaluate", "--config", str(_config(tmp_path)), "--out", str(tmp_path)]) == 2


def test_ablate(tmp_path):
    cfg = _config(tmp_path, "seagnn", "ablate.variants=full,no_lgf\nseeds=0,1\n")
    out = tmp_path / "abl"
    assert main(["ablate", "--config", str(cfg), "--out", str(out), "--jobs", "2"]) == 0
    lines = (out / "ablation.csv").read_text().splitlines()
    assert lines[0] == "variant,metric,mean,std,n"
    assert len(lines) == 1 + 2 * 3
    assert (out / "seed").read_text().strip() == "0,1"
    jobs = sorted(p.name for p in (out / "jobs").iterdir())
    assert jobs == ["full_seed0", "full_seed1", "no_lgf_seed0", "no_lgf_seed1"]


def test_reconstruct(tmp_path):
    cfg = _config(tmp_path, extra="reconstruct.iterations=3\nreconstruct.nodes=1\n")
    out = tmp_path / "rec"
    assert main(["reconstruct", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "reconstruction.csv").read_text().splitlines()
    assert [r.split(",")[1] for r in rows[1:]] == ["rff", "siren", "linear"]
    assert (out / "reconstruction_node1.png").exists()


def test_train_is_byte_reproducible(tmp_path):
    cfg = _config(tmp_path, "mtgnn")
    for name in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == \
        (tmp_path / "b" / "metrics.csv").read_bytes()
    assert (tmp_path / "a" / "history.csv").read_bytes() == \
        (tmp_path / "b" / "history.csv").read_bytes()
