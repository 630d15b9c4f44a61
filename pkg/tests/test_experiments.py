import csv
import io
import json

import numpy as np
import pytest

from naelab.experiments import (THREADS_ENV, ExperimentConfig, InstanceFormatError, default_threads,
                                instance_from_json, instance_to_json, load_instance, manifest,
                                run_bordenave_trial, run_cycle_poisson, run_threshold_sweep,
                                run_trace_bound_check, save_instance, write_json)
from naelab.lifts import random_instance


def dumps(obj):
    return json.dumps(obj, sort_keys=True)


def test_config_validation():
    for bad in ({"n": 0}, {"trials": 0}, {"eps": 0}, {"threads": 0}, {"seed": -1}, {"tol": 0}):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_trial_seeds_deterministic():
    a = ExperimentConfig(seed=5, trials=4).trial_seeds()
    assert a == ExperimentConfig(seed=5, trials=4).trial_seeds()
    assert a != ExperimentConfig(seed=6, trials=4).trial_seeds()
    assert ExperimentConfig(seed=5, trials=6).trial_seeds()[:4] == a
    assert len(set(a)) == 4


def test_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3 and ExperimentConfig().threads == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValueError):
        default_threads()
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() == 1


def test_bordenave_small():
    s = run_bordenave_trial(ExperimentConfig(n=60, trials=4, seed=1))
    assert s.counted == 4 and 0 <= s.pass_fraction <= 1
    rec = s.records[0]
    assert {"ps_min", "ps_max", "b_radius"} <= set(rec.values)
    assert rec.flags["degenerate"] is False


def test_bordenave_degenerate_order_one():
    s = run_bordenave_trial(ExperimentConfig(n=1, trials=2))
    assert s.counted == 0 and all(r.flags["degenerate"] for r in s.records)
    assert np.isnan(s.pass_fraction)


def test_bordenave_requires_more_constraints():
    with pytest.raises(Exception):
        run_bordenave_trial(ExperimentConfig(c=5, d=3, n=4, trials=1))


def test_results_do_not_depend_on_threads():
    a = run_bordenave_trial(ExperimentConfig(n=40, trials=5, seed=3, threads=1))
    b = run_bordenave_trial(ExperimentConfig(n=40, trials=5, seed=3, threads=3))
    assert dumps(a.to_json()) == dumps(b.to_json())


def test_sweep_small():
    cfg = ExperimentConfig(n=60, trials=2, seed=2)
    res = run_threshold_sweep(cfg, [8, 14], witness_triples=500)
    assert [r["d"] for r in res.rows] == [8.0, 14.0]
    assert not res.rows[0]["agreement_checked"]  # n below 500
    assert res.agreement_ok
    rows = list(csv.reader(io.StringIO(res.curve.to_csv())))
    assert rows[0] == ["d", "f", "rho_star", "xor_bound", "regime"]
    assert dumps(res.to_json()) == dumps(run_threshold_sweep(cfg, [8, 14], witness_triples=500).to_json())


@pytest.mark.parametrize("d_list", [[13.5], [2], [65]])
def test_sweep_rejects(d_list):
    with pytest.raises(ValueError):
        run_threshold_sweep(ExperimentConfig(n=10, trials=1), d_list)


def test_sweep_requires_c3():
    with pytest.raises(ValueError):
        run_threshold_sweep(ExperimentConfig(c=4, n=10, trials=1), [8])


def test_cycles_small():
    r = run_cycle_poisson(ExperimentConfig(n=100, trials=20, seed=1), 6)
    rows = {row["k"]: row for row in r["rows"]}
    assert rows[3]["mean"] == 0 and rows[3]["expected"] == 0
    assert rows[4]["expected"] == 18 and rows[6]["expected"] == pytest.approx(288 / 12)
    with pytest.raises(ValueError):
        run_cycle_poisson(ExperimentConfig(), 9)


def test_trace_check():
    r = run_trace_bound_check(ExperimentConfig(n=10, trials=20, seed=0, eps=0.3), 1, 1)
    assert r["arcs"] == 240 and r["kept"] >= 1
    assert r["statistic"] > 0 and "ell_in_regime" in r
    with pytest.raises(ValueError):
        run_trace_bound_check(ExperimentConfig(n=10, trials=2), 0, 1)
    with pytest.raises(ValueError):
        run_trace_bound_check(ExperimentConfig(n=10, trials=2), 1, 0)
    with pytest.raises(ValueError):
        run_trace_bound_check(ExperimentConfig(n=200, trials=2), 1, 1)


def test_instance_roundtrip(tmp_path):
    _, spec = random_instance(3, 4, 20, seed=9)
    path = tmp_path / "inst.json"
    cs = save_instance(spec, path)
    back = load_instance(path)
    assert back == spec
    assert np.array_equal(back.build().edges, spec.build().edges)
    assert json.loads(path.read_text())["checksum"] == cs


def test_instance_unknown_field():
    obj = instance_to_json(random_instance(3, 4, 3, seed=0)[1])
    obj["comment"] = "x"
    with pytest.raises(InstanceFormatError, match="version"):
        instance_from_json(obj)


def test_instance_version_and_corruption():
    obj = instance_to_json(random_instance(3, 4, 3, seed=0)[1])
    with pytest.raises(InstanceFormatError, match="version"):
        instance_from_json({**obj, "version": 2})
    short = {**obj, "signs": obj["signs"][:-1]}
    with pytest.raises(InstanceFormatError, match="checksum"):
        instance_from_json(short)
    short.pop("checksum")
    with pytest.raises(InstanceFormatError, match="sign"):
        instance_from_json(short)
    with pytest.raises(InstanceFormatError, match="missing"):
        instance_from_json({k: v for k, v in obj.items() if k not in ("seed", "checksum")})
    with pytest.raises(InstanceFormatError):
        instance_from_json([1, 2])


def test_instance_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        load_instance(p)


def test_manifest_and_write(tmp_path):
    cfg = ExperimentConfig(threads=2)
    m = manifest("spectra", cfg, ["spectra"], {"wall_clock_seconds": 1.0})
    assert m["threads"] == 2 and "threads" not in m["config"]
    assert {"naelab", "numpy", "scipy", "python"} <= set(m["versions"])
    write_json({"a": np.int64(3), "b": np.array([1.5]), "c": np.bool_(True)}, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == {"a": 3, "b": [1.5], "c": True}


def test_trace_growth_k43_example():
    r = run_trace_bound_check(ExperimentConfig(c=3, d=4, n=40, trials=100, seed=0, eps=0.3), 2, 2)
    assert r["passed"] and r["statistic"] <= 6 ** 0.25 + 0.3
    assert not r["ell_in_regime"]  # n = 40 is too small for ell = 2 to be in the log-n regime
