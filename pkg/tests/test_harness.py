import json
import math
import warnings

import numpy as np
import pytest

from rlab import cli, harness
from rlab.errors import ConfigError
from rlab.harness import (
    CSV_HEADER,
    ExperimentConfig,
    SweepResult,
    SweepRow,
    emit_outputs,
    fit_scaling,
    read_sweep_csv,
    reduce_trials,
    run_sweep,
)
from rlab.kernel import KernelSpec

T_RANGE = [2**k for k in range(8, 15)]


def small_config(**kw):
    base = dict(kernel={"family": "se", "lengthscale": 0.2}, sigma2=1.0, T_values=[16, 32, 64], trials=3, seed=5)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


# ---- scaling fit -----------------------------------------------------------

def test_fit_power_law():
    slope, intercept, resid = fit_scaling([(T, 7 * math.sqrt(T)) for T in T_RANGE])
    assert slope == pytest.approx(0.5, abs=1e-12)
    assert intercept == pytest.approx(math.log(7), abs=1e-10)
    assert resid == pytest.approx(0.0, abs=1e-20)


def test_fit_linear():
    assert fit_scaling([(T, 3 * T) for T in T_RANGE])[0] == pytest.approx(1.0, abs=1e-12)


def test_fit_sqrt_t_log_t():
    slope = fit_scaling([(T, math.sqrt(T * math.log(T))) for T in T_RANGE])[0]
    assert 0.5 < slope < 0.62


def test_fit_drops_nonpositive_with_warning():
    rows = [(T, 2 * T) for T in T_RANGE] + [(2**15, 0.0)]
    with pytest.warns(UserWarning, match="nonpositive"):
        slope, _, _ = fit_scaling(rows)
    assert slope == pytest.approx(1.0)
    with pytest.raises(ValueError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit_scaling([(1, 0.0), (2, 1.0), (4, 2.0)])


def test_reduction_ignores_trial_order():
    rng = np.random.default_rng(0)
    v = rng.lognormal(3, 2, 500)
    ref = reduce_trials(v)
    for _ in range(5):
        assert reduce_trials(rng.permutation(v)) == ref


# ---- config -----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(T_values=[64, 32])
    with pytest.raises(ConfigError):
        small_config(trials=0)
    with pytest.raises(ConfigError):
        small_config(algorithm="random-search")
    with pytest.raises(ConfigError):
        small_config(unknown_key=1)


def test_config_noise_warnings():
    with pytest.warns(UserWarning, match="below"):
        small_config(sigma2=1e-4, c_sigma=1.0, zeta=0.5)
    with pytest.warns(UserWarning, match="above"):
        small_config(sigma2=100.0, c_sigma_lb=1.0, zeta_lb=0.5)


def test_config_json_roundtrip(tmp_path):
    cfg = small_config()
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(p) == cfg


# ---- sweeps and files -----------------------------------------------------------

def test_sweep_rows_and_monotone():
    res = run_sweep(small_config(), workers=1)
    assert [r.T for r in res.rows] == [16, 32, 64]
    for r in res.rows:
        assert r.trials + r.rejected == 3
        assert r.mean_regret >= 0 and math.isfinite(r.stderr_regret)
    assert res.monotone
    assert math.isfinite(res.slope)


def test_rerun_is_byte_identical(tmp_path):
    cfg = small_config(algorithm="gp-ucb", trials=2)
    a = emit_outputs(run_sweep(cfg, workers=1), tmp_path / "a", cfg)
    b = emit_outputs(run_sweep(cfg, workers=1), tmp_path / "b", cfg)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()
    assert a["json"].read_bytes() == b["json"].read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = small_config(trials=2)
    a = emit_outputs(run_sweep(cfg, workers=1), tmp_path / "a", cfg)
    b = emit_outputs(run_sweep(cfg, workers=2), tmp_path / "b", cfg)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()


def test_csv_roundtrip_and_summary(tmp_path):
    res = run_sweep(small_config(), workers=1)
    paths = emit_outputs(res, tmp_path, stem="s")
    assert paths["csv"].read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert read_sweep_csv(paths["csv"]) == res.rows
    summary = json.loads(paths["json"].read_text())
    assert summary["slope"] == fit_scaling(res.rows)[0]
    dat = paths["dat"].read_text().splitlines()
    assert dat[1].split()[0] == "16" and len(dat) == 4


def test_empty_sweep_header_only(tmp_path):
    paths = emit_outputs(SweepResult(rows=[]), tmp_path)
    assert paths["csv"].read_text() == ",".join(CSV_HEADER) + "\n"


def test_all_rejected_raises(monkeypatch):
    monkeypatch.setattr(harness, "run_trial", lambda cfg, i, T: None)
    with pytest.raises(harness.SweepError, match="T=16"):
        run_sweep(small_config(), workers=1)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("RLAB_THREADS", "3")
    assert harness.worker_count() == 3
    monkeypatch.setenv("RLAB_THREADS", "many")
    with pytest.raises(ConfigError):
        harness.worker_count()


def test_row_formatting():
    row = SweepRow(16, "uniform", "se(l=0.2)", 1.0, 3, 0, np.float64(2.5), 0.1)
    assert row.as_list()[6] == "2.5"


# ---- CLI -----------------------------------------------------------

def test_cli_run_writes_trace(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    ep = tmp_path / "epochs.json"
    code = cli.main(["run", "--algo", "epoch-elim", "--T", "200", "--sigma2", "0.25", "--out", str(out), "--epochs", str(ep)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 201
    epochs = json.loads(ep.read_text())
    assert set(epochs[0]) == {"i", "eta", "w", "lipschitz_case", "M", "Ls", "K"}
    meta = json.loads((tmp_path / "trace.csv.json").read_text())
    assert meta["T"] == 200 and meta["constants"]["case"] in ("interior_quadratic", "endpoint_linear")


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config(algorithm="uniform").to_dict()))
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    assert (tmp_path / "o" / "sweep.csv").exists()


def test_cli_verify(capsys):
    assert cli.main(["verify-assumptions", "--kernel", "matern:0.2:2.5", "--seeds", "3"]) == 0
    assert "excluded" in capsys.readouterr().out


def test_cli_lowerbound(tmp_path):
    out = tmp_path / "lb.json"
    code = cli.main(["lowerbound", "--algo", "uniform", "--T", "64", "--trials", "3", "--c-tilde", "64",
                     "--grid-size", "513", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["trials"] == 3 and "lemma5" in rep


def test_cli_config_errors(tmp_path, capsys):
    assert cli.main(["run", "--kernel", "cosine:1", "--T", "5", "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kernel": {"family": "se", "lengthscale": 0.2}, "sigma2": 1.0, "T_values": [8, 4]}))
    assert cli.main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_cli_numerical_failure(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_trial", lambda cfg, i, T: None)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config().to_dict()))
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--workers", "1"]) == 3
