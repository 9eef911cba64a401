import json

import pandas as pd
import pytest
from click.testing import CliRunner

import cartanbloch.cli as cli
from cartanbloch.io.report import BATTERY_COLUMNS


def _config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _invoke(args):
    return CliRunner().invoke(cli.main, args)


def _report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.mark.parametrize(
    "domain, expected, dist",
    [
        ({"kind": "I", "m": 1, "n": 1}, 2.0, 1.0),
        ({"kind": "IV", "n": 3}, 6.0, 0.5),
    ],
)
def test_metric_at_origin(tmp_path, domain, expected, dist):
    cfg = _config(tmp_path, {"domain": domain})
    out = tmp_path / "metric.json"
    result = _invoke(["metric", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["command"] == "metric"
    assert report["summary"]["H"] == pytest.approx(expected)
    assert report["summary"]["boundary_distance"] == pytest.approx(dist)
    assert len(report["meta"]["config_hash"]) == 64


def test_metric_outside_point_is_reported(tmp_path):
    cfg = _config(
        tmp_path,
        {"domain": {"kind": "I", "m": 1, "n": 1}, "analysis": {"z": [1.5]}},
    )
    result = _invoke(["metric", "--config", cfg])
    assert result.exit_code == 2
    assert "outside-domain" in result.output


def test_bad_descriptor_exit_code(tmp_path):
    cfg = _config(tmp_path, {"domain": {"kind": "VII", "n": 2}})
    result = _invoke(["metric", "--config", cfg])
    assert result.exit_code == 2
    assert "bad-descriptor" in result.output


def test_sampling_command_needs_seed(tmp_path):
    cfg = _config(tmp_path, {"domain": {"kind": "I", "m": 1, "n": 1}})
    result = _invoke(["ratio-profile", "--config", cfg])
    assert result.exit_code == 2
    assert "seed" in result.output


def test_check_identities_passes(tmp_path):
    out = tmp_path / "ids.json"
    result = _invoke(
        ["check-identities", "--seed", "3", "--samples", "10"]
        + ["--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["summary"]["failed"] == []
    assert all(row["passed"] for row in report["tables"]["identities"])


def test_check_identities_failure_exit_code(monkeypatch, tmp_path):
    def fake_battery(m, n, samples, seed, tol):
        return pd.DataFrame(
            [
                {
                    "identity": "involution",
                    "samples": samples,
                    "max_residual": 1.0,
                    "passed": False,
                }
            ],
            columns=BATTERY_COLUMNS,
        )

    monkeypatch.setattr(cli, "identity_battery", fake_battery)
    out = tmp_path / "ids.json"
    result = _invoke(
        ["check-identities", "--seed", "3", "--samples", "5"]
        + ["--out", str(out)]
    )
    assert result.exit_code == 1
    assert _report(out)["summary"]["failed"] == ["involution"]


def _profile_config(tmp_path, params):
    return _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 1, "n": 1},
            "map": {"family": "disc_affine", "params": params},
            "seed": 11,
            "analysis": {
                "deltas": [0.1, 0.01, 0.001],
                "n_starts": 2,
                "n_rays": 1,
                "n_uniform": 4,
            },
        },
    )


def test_ratio_profile_of_contraction(tmp_path):
    cfg = _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 1, "n": 1},
            "map": {"family": "scale", "params": {"c": 0.5}},
            "seed": 1,
            "analysis": {"deltas": [0.1, 0.01], "n_starts": 2, "n_uniform": 4},
        },
    )
    out = tmp_path / "profile.json"
    result = _invoke(["ratio-profile", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["summary"]["verdict"] == "ImageBoundedAway"
    assert report["summary"]["scope"] == "evidence at sampled scale"
    assert report["meta"]["seed"] == 1


def test_ratio_profile_is_identical_across_workers(tmp_path):
    params = {"a": 0.5, "b": 0.5}
    cfg = _profile_config(tmp_path, params)
    out1 = tmp_path / "w1.json"
    out2 = tmp_path / "w2.json"
    first = _invoke(["ratio-profile", "--config", cfg, "--out", str(out1)])
    second = _invoke(
        [
            "ratio-profile",
            "--config",
            cfg,
            "--workers",
            "2",
            "--out",
            str(out2),
        ]
    )
    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output
    assert out1.read_bytes() == out2.read_bytes()


def test_ratio_profile_csv(tmp_path):
    cfg = _profile_config(tmp_path, {"a": 0.5, "b": 0.5})
    out = tmp_path / "profile.csv"
    result = _invoke(
        ["ratio-profile", "--config", cfg, "--format", "csv"]
        + ["--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# command=ratio-profile"
    header = next(line for line in lines if not line.startswith("#"))
    assert header == "sample_index,delta,ratio,verdict_flag"


def test_testfn_default_point(tmp_path):
    cfg = _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 2, "n": 2},
            "seed": 5,
            "analysis": {"samples": 50, "r_grid": [0.9, 0.99]},
        },
    )
    out = tmp_path / "testfn.json"
    result = _invoke(["testfn", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["summary"]["case"] == "LogCase1"
    checks = {row["check"]: row for row in report["tables"]["checks"]}
    assert checks["bounded_seminorm"]["passed"]
    assert checks["ratio_nonvanishing"]["passed"]
    assert checks["decay_trend"]["passed"]
    first, second = checks["decay_r=0.9"], checks["decay_r=0.99"]
    assert first["bound"] is None and first["passed"]
    assert second["bound"] == pytest.approx(first["value"])
    assert second["passed"] == (second["value"] <= first["value"])


def test_testfn_flags_growing_decay(monkeypatch, tmp_path):
    values = iter([0.25, 0.5])
    monkeypatch.setattr(
        cli, "decay_on_compact", lambda f, rho, samples, seed: next(values)
    )
    cfg = _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 1, "n": 2},
            "seed": 5,
            "analysis": {"samples": 10, "r_grid": [0.9, 0.99]},
        },
    )
    out = tmp_path / "testfn.json"
    result = _invoke(["testfn", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    checks = {row["check"]: row for row in report["tables"]["checks"]}
    assert checks["decay_r=0.9"]["passed"]
    assert not checks["decay_r=0.99"]["passed"]
    assert checks["decay_r=0.99"]["bound"] == 0.25
    assert not checks["decay_trend"]["passed"]
    assert report["summary"]["all_passed"] is False


def test_testfn_rejects_other_domains(tmp_path):
    cfg = _config(tmp_path, {"domain": {"kind": "IV", "n": 2}, "seed": 1})
    result = _invoke(["testfn", "--config", cfg])
    assert result.exit_code == 2
    assert "bad-descriptor" in result.output


def test_sequence_probe_identity(tmp_path):
    cfg = _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 1, "n": 1},
            "seed": 2,
            "analysis": {"r_grid": [0.9, 0.99], "samples": 20},
        },
    )
    out = tmp_path / "probe.json"
    result = _invoke(["sequence-probe", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["summary"]["bounded_away"] is False
    rows = report["tables"]["probe"]
    assert [row["r"] for row in rows] == [0.9, 0.99]
    assert all(row["estimate"] > 0.1 for row in rows)


def test_sequence_probe_contraction_is_bounded_away(tmp_path):
    cfg = _config(
        tmp_path,
        {
            "domain": {"kind": "I", "m": 1, "n": 1},
            "map": {"family": "scale", "params": {"c": 0.5}},
            "seed": 2,
            "analysis": {"r_grid": [0.9]},
        },
    )
    out = tmp_path / "probe.json"
    result = _invoke(["sequence-probe", "--config", cfg, "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = _report(out)
    assert report["summary"]["bounded_away"] is True
    assert report["tables"]["probe"] == []


def test_json_to_stdout(tmp_path):
    cfg = _config(tmp_path, {"domain": {"kind": "I", "m": 1, "n": 2}})
    result = _invoke(["metric", "--config", cfg])
    assert result.exit_code == 0
    assert '"command": "metric"' in result.output
