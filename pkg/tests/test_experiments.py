import json
import math

import numpy as np
import pytest

from levyhull.config import config_from_mapping, load_config
from levyhull.errors import ConfigError, PathError
from levyhull.experiments import (
    emit_plot_data,
    load_report,
    report_csv_body,
    run,
    write_report,
)
from levyhull.models import CompoundPoissonDrift, Gaussian


def cp_identity_cfg(**over):
    base = {
        "experiment": "verify-identity",
        "model": {
            "kind": "cp",
            "rate": 1,
            "jump": {"kind": "gaussian", "mean": 0, "sd": 1},
            "mu": 0.2,
        },
        "T_grid": [8.0],
        "reps": 400,
        "seed": 99,
    }
    base.update(over)
    return config_from_mapping(base)


# ---------------------------------------------------------------------------
# configuration surface
# ---------------------------------------------------------------------------

def test_flat_and_json_configs_agree(tmp_path):
    flat = tmp_path / "c.cfg"
    flat.write_text(
        """
        # cross-validation demo
        experiment = verify-identity
        model.kind = cp
        model.rate = 1
        model.jump.kind = gaussian
        model.jump.mean = 0
        model.jump.sd = 1
        model.mu = 0.2
        T_grid = 50
        reps = 10000
        cutoff = 1e-3
        seed = 20260808
        """
    )
    jsn = tmp_path / "c.json"
    jsn.write_text(
        json.dumps(
            {
                "experiment": "verify-identity",
                "model": {
                    "kind": "cp",
                    "rate": 1,
                    "jump": {"kind": "gaussian", "mean": 0, "sd": 1},
                    "mu": 0.2,
                },
                "T_grid": [50],
                "reps": 10000,
                "cutoff": 1e-3,
                "seed": 20260808,
            }
        )
    )
    a = load_config(flat)
    b = load_config(jsn)
    assert a == b
    assert isinstance(a.model, CompoundPoissonDrift)
    assert isinstance(a.model.jump, Gaussian)
    assert a.t_grid == (50.0,)


def test_grid_list_forms(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("experiment = sb-props\nT_grid = 1e2, 1e4 1e6\nreps = 200\n")
    cfg = load_config(p)
    assert cfg.t_grid == (100.0, 10000.0, 1000000.0)


def test_config_errors():
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": "nope", "T_grid": [1], "reps": 200})
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": "sb-props", "T_grid": [1], "reps": 50})
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": "sb-props", "T_grid": [2, 1], "reps": 200})
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": "sb-props", "T_grid": [1], "reps": 200, "bogus": 1})
    with pytest.raises(ConfigError):
        config_from_mapping(
            {"experiment": "sb-props", "T_grid": [1], "reps": 200, "model": {"kind": "martian"}}
        )


def test_regime_mismatch_rejected_before_sampling():
    # drifted model under the zero-mean limit experiment
    with pytest.raises(ConfigError):
        run(
            config_from_mapping(
                {
                    "experiment": "verify-clt",
                    "model": {"kind": "brownian", "sigma": 1, "mu": 0.5},
                    "T_grid": [1e3],
                    "reps": 200,
                }
            )
        )
    with pytest.raises(ConfigError):
        run(
            config_from_mapping(
                {
                    "experiment": "verify-heavy",
                    "model": {"kind": "stable", "alpha": 1.5},
                    "T_grid": [1e3],
                    "reps": 200,
                }
            )
        )
    with pytest.raises(ConfigError):
        run(
            config_from_mapping(
                {
                    "experiment": "verify-identity",
                    "model": {"kind": "brownian", "sigma": 1},
                    "T_grid": [10],
                    "reps": 200,
                }
            )
        )


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

def test_report_deterministic_across_runs_and_workers():
    cfg1 = cp_identity_cfg(workers=1)
    cfg2 = cp_identity_cfg(workers=1)
    cfg3 = cp_identity_cfg(workers=2)
    body1 = report_csv_body(run(cfg1))
    body2 = report_csv_body(run(cfg2))
    body3 = report_csv_body(run(cfg3))
    assert body1 == body2
    assert body1 == body3


def test_seed_changes_report():
    a = report_csv_body(run(cp_identity_cfg(seed=1)))
    b = report_csv_body(run(cp_identity_cfg(seed=2)))
    assert a != b


# ---------------------------------------------------------------------------
# report round trip and plot data
# ---------------------------------------------------------------------------

def test_write_load_roundtrip(tmp_path):
    rep = run(cp_identity_cfg())
    json_path = write_report(rep, tmp_path / "out")
    loaded = load_report(json_path)
    assert loaded.experiment == rep.experiment
    assert len(loaded.rows) == len(rep.rows)
    assert loaded.rows[0] == rep.rows[0]
    for name, vec in rep.samples.items():
        assert np.array_equal(loaded.samples[name], np.asarray(vec))
    csv_text = (tmp_path / "out" / "report.csv").read_text()
    assert csv_text.splitlines()[0] == "T,statistic,estimate,se_or_d,p_value,threshold,verdict"
    # the draw-record table round-trips with its header
    header, mat = loaded.tables["rep_draws"]
    assert header == ("T", "upsilon", "h_prime", "final", "sup", "gamma", "truncation_bound")
    assert mat.shape == (rep.samples["rep_upsilon"].size, 7)
    assert np.array_equal(mat[:, 1], rep.samples["rep_upsilon"])


def test_write_report_serializes_every_experiment(tmp_path):
    # row payloads must be JSON-clean for every experiment family
    # (numpy scalars leaked through here once)
    configs = [
        {"experiment": "sb-props", "T_grid": [math.e**2], "reps": 500, "seed": 3},
        {
            "experiment": "theta-scan",
            "model": {"kind": "cp", "rate": 1, "jump": {"kind": "point-mass", "x": 2.0}},
            "T_grid": [2.0, 9.0],
            "reps": 100,
        },
        {
            "experiment": "compare-length",
            "model": {"kind": "brownian", "sigma": 1},
            "T_grid": [1e3, 1e4],
            "reps": 300,
            "seed": 4,
        },
    ]
    for i, mapping in enumerate(configs):
        rep = run(config_from_mapping(mapping))
        path = write_report(rep, tmp_path / f"r{i}")
        loaded = load_report(path)
        assert loaded.rows == rep.rows


def test_faces_csv_interface(tmp_path):
    from levyhull.hull import Face, write_faces_csv

    path = tmp_path / "faces.csv"
    write_faces_csv([Face(2.0, 1.0), Face(1.0, -2.0)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "l,h,slope"
    assert lines[1] == "2.0,1.0,0.5"


def test_emit_plot_kinds(tmp_path):
    rep = run(cp_identity_cfg())
    paths = emit_plot_data(rep, "ecdf-pair", tmp_path)
    assert {p.name for p in paths} == {
        "ecdf_upsilon.csv", "ecdf_final.csv", "ecdf_sup.csv", "ecdf_gamma.csv"
    }
    body = paths[0].read_text().splitlines()
    assert body[0] == "sample,x,ecdf"
    _, x, f = body[1].split(",")
    assert 0.0 < float(f) <= 1.0 and math.isfinite(float(x))
    qq = emit_plot_data(rep, "qq", tmp_path)
    assert len(qq) == 4
    with pytest.raises(PathError):
        emit_plot_data(rep, "tail-loglog", tmp_path)
    with pytest.raises(ConfigError):
        emit_plot_data(rep, "histogram", tmp_path)


def test_emit_identical_samples_give_identical_curves(tmp_path):
    rep = run(cp_identity_cfg())
    rep.samples = {"hull_x": rep.samples["hull_upsilon"], "rep_x": rep.samples["hull_upsilon"]}
    (path,) = emit_plot_data(rep, "ecdf-pair", tmp_path)
    lines = path.read_text().splitlines()[1:]
    a = [l.split(",", 1)[1] for l in lines if l.startswith("hull_x,")]
    b = [l.split(",", 1)[1] for l in lines if l.startswith("rep_x,")]
    assert a == b


def test_emit_tail_loglog(tmp_path):
    rep = run(
        config_from_mapping(
            {
                "experiment": "tail-index",
                "model": {"kind": "stable", "alpha": 1.5},
                "T_grid": [1],
                "reps": 20_000,
                "seed": 5,
            }
        )
    )
    (path,) = emit_plot_data(rep, "tail-loglog", tmp_path)
    header, *rows = path.read_text().splitlines()
    assert header == "log_x,log_sf,fit"
    assert len(rows) >= 50


def test_emit_tail_loglog_slope_matches_synthetic_tail(tmp_path):
    # feed the emitter a synthetic power-tail sample with known exponent
    # and recover the exponent from the emitted point cloud
    from levyhull.experiments import RunReport

    a = 0.75
    draws = np.random.default_rng(17).random(200_000) ** (-1.0 / a)
    rep = RunReport("tail-index", rows=[], samples={"q_draws": draws})
    (path,) = emit_plot_data(rep, "tail-loglog", tmp_path)
    data = np.array(
        [[float(v) for v in line.split(",")] for line in path.read_text().splitlines()[1:]]
    )
    lx, lsf = data[:, 0], data[:, 1]
    slope = np.polyfit(lx, lsf, 1)[0]
    assert abs(slope + a) < 0.05


def test_emit_scaling_table(tmp_path):
    rep = run(
        config_from_mapping(
            {
                "experiment": "compare-length",
                "model": {"kind": "brownian", "sigma": 1},
                "T_grid": [1e3, 1e5],
                "reps": 600,
                "seed": 6,
            }
        )
    )
    (path,) = emit_plot_data(rep, "scaling-table", tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("T,sd_hut,sd_majorant,sd_tent")
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_run_and_emit(tmp_path, capsys):
    from levyhull.cli import main

    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "experiment = verify-identity\n"
        "model.kind = cp\n"
        "model.rate = 1\n"
        "model.jump.kind = gaussian\n"
        "model.jump.mean = 0\n"
        "model.jump.sd = 1\n"
        "model.mu = 0.2\n"
        "T_grid = 8\n"
        "reps = 400\n"
        "seed = 99\n"
    )
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == 0
    assert "[pass]" in captured
    assert (out / "report.csv").exists()
    code2 = main(["emit-plot", "--report", str(out / "report.json"), "--kind", "qq"])
    assert code2 == 0


def test_shipped_criterion_configs_parse():
    import pathlib

    cfg_dir = pathlib.Path(__file__).resolve().parents[1] / "configs"
    paths = sorted(cfg_dir.glob("criterion*.cfg"))
    assert len(paths) == 12
    expected = {
        "criterion01": "sb-props",
        "criterion02": "sb-props",
        "criterion03": "verify-identity",
        "criterion04": "verify-clt",
        "criterion05": "verify-clt",
        "criterion06": "verify-stable",
        "criterion07": "tail-index",
        "criterion08": "verify-stable",
        "criterion09": "verify-heavy",
        "criterion10": "compare-length",
        "criterion11": "hull-props",
        "criterion12": "theta-scan",
    }
    for path in paths:
        cfg = load_config(path)
        key = path.stem.split("_")[0]
        assert cfg.experiment == expected[key], path.name
        assert cfg.out is not None


def test_cli_reports_config_errors(tmp_path, capsys):
    from levyhull.cli import main

    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = verify-clt\nmodel.kind = brownian\nmodel.mu = 1\nT_grid = 100\nreps = 200\n")
    code = main(["run", "--config", str(cfg)])
    assert code == 2
    assert "error:" in capsys.readouterr().err
