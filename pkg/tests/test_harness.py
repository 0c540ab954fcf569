import csv

import numpy as np
import pytest

from irs2d.channel import ArrayConfig
from irs2d.cli import main
from irs2d.harness import experiment as ex
from irs2d.harness.experiment import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    read_csv,
    records_to_csv,
    run_experiment,
    run_point,
    with_overrides,
)


def _small(tmp_path, **kw):
    base = dict(trials=2, snr_db=(0.0, 10.0), out_dir=str(tmp_path), metrics=("rmse",))
    base.update(kw)
    return ExperimentConfig(**base)


def test_csv_schema(tmp_path):
    run_experiment(_small(tmp_path, metrics=("rmse", "nmse", "se", "complexity")))
    for metric in ("rmse", "nmse", "se", "complexity"):
        path = tmp_path / f"{metric}.csv"
        raw = path.read_bytes()
        assert raw.decode("utf-8").splitlines()[0] == ",".join(CSV_COLUMNS)
        rows = read_csv(path)
        assert rows
        for r in rows:
            v = r["value"]
            float(v)
            digits = v.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 9


def test_determinism(tmp_path):
    cfg = _small(tmp_path / "a", trials=1, metrics=("rmse", "nmse"))
    run_experiment(cfg)
    run_experiment(with_overrides(cfg, out_dir=str(tmp_path / "b")))
    for m in ("rmse", "nmse"):
        assert (tmp_path / "a" / f"{m}.csv").read_bytes() == (tmp_path / "b" / f"{m}.csv").read_bytes()


def test_noiseless_sweep_rmse_tiny(tmp_path):
    cfg = _small(tmp_path, trials=5, snr_db=(float("inf"),))
    recs = run_experiment(cfg, write=False)["rmse"]
    vals = [r.value for r in recs if r.metric == "rmse"]
    assert vals and max(vals) < 1e-4


def test_common_random_numbers():
    a = run_point(ArrayConfig(), 0.0, 3, 7, methods=("TSHDR",))
    b = run_point(ArrayConfig(), 0.0, 3, 7, methods=("HKMR", "TSHDR"))
    np.testing.assert_array_equal(a.errors["TSHDR"], b.errors["TSHDR"])


def test_trial_failures_counted(monkeypatch):
    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("synthetic failure")

    monkeypatch.setattr(ex, "hkmr_estimate", boom)
    table = run_point(ArrayConfig(), 0.0, 3, 0, methods=("HKMR", "TSHDR"))
    assert table.failures == {"HKMR": 3, "TSHDR": 0}
    recs = ex.records_for_point(table, "rmse", 0.0, 16, 0, ("HKMR", "TSHDR"))
    fail = [r for r in recs if r.metric == "failures"]
    assert len(fail) == 1 and fail[0].value == 3
    assert not any(r.method == "HKMR" and r.metric == "rmse" for r in recs)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=("FOO",))
    with pytest.raises(ConfigError):
        ExperimentConfig(metrics=("bogus",))
    with pytest.raises(ConfigError):
        ExperimentConfig(snr_db=())
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"nope": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"arrays": {"M_y": 0}})
    cfg = ExperimentConfig.from_dict({"arrays": {"N_y": 2}, "methods": "tshdr", "snr_db": [1, 2]})
    assert cfg.arrays.N == 8 and cfg.methods == ("TSHDR",) and cfg.snr_db == (1.0, 2.0)


def test_unwritable_output_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        ex.write_csv([], blocker / "sub" / "rmse.csv")


def test_irs_sweep_records(tmp_path):
    cfg = _small(tmp_path, metrics=("nmse",), snr_db=(0.0,), irs_sizes=(16, 64))
    recs = run_experiment(cfg, write=False)["nmse"]
    points = {(r.snr_db, r.n_irs) for r in recs}
    assert points == {(0.0, 16), (5.0, 16), (5.0, 64)}


def test_records_to_csv_formatting():
    rec = ex.MetricRecord("rmse", "TSHDR", -5.0, 16, "mu_bs", 1 / 3, 10, 42)
    text = records_to_csv([rec])
    assert text.splitlines()[1] == "rmse,TSHDR,-5,16,mu_bs,0.333333333,10,42"


def test_cli_run_and_overrides(tmp_path):
    conf = tmp_path / "c.yaml"
    conf.write_text("trials: 50\nsnr_db: [0, 10]\nseed: 3\nmethods: [TSHDR]\n")
    out = tmp_path / "out"
    rc = main(["rmse", "--config", str(conf), "--trials", "1", "--snr", "5",
               "--out", str(out), "--plot-script"])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "rmse.csv", encoding="utf-8")))
    assert {r["trials"] for r in rows} == {"1"}
    assert {r["snr_db"] for r in rows} == {"5"}
    assert {r["seed"] for r in rows} == {"3"}
    assert {r["method"] for r in rows} == {"TSHDR", "CRLB"}
    assert (out / "plot_rmse.py").exists()
    compile((out / "plot_rmse.py").read_text(), "plot_rmse.py", "exec")


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert main(["rmse", "--trials", "0"]) == 1
    assert main(["nosuch"]) == 1
    assert main(["rmse", "--config", str(tmp_path / "missing.yaml")]) == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("trials: [1, 2\n")
    assert main(["rmse", "--config", str(bad)]) == 1
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["complexity", "--out", str(blocker / "x")]) == 2

    def boom(cfg):
        raise FloatingPointError("overflow")

    monkeypatch.setattr("irs2d.cli.run_experiment", boom)
    assert main(["complexity", "--out", str(tmp_path)]) == 2


def test_cli_all(tmp_path):
    rc = main(["all", "--trials", "1", "--snr", "0", "--irs-sizes", "16",
               "--methods", "HKMR,TSHDR,LS,KRF", "--out", str(tmp_path), "--seed", "9"])
    assert rc == 0
    for m in ("rmse", "nmse", "se", "complexity"):
        assert (tmp_path / f"{m}.csv").exists()
