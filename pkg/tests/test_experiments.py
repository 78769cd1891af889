"""Configuration, result emission, runners, suites, and the CLI."""
import numpy as np
import pytest
from xml.etree import ElementTree as ET

from defeatr import estimators
from defeatr.errors import ConfigError
from defeatr.experiments import (
    DEFAULT_SIZES,
    ETA_MIN,
    ExperimentConfig,
    ResultRow,
    emit_csv,
    emit_svg,
    format_report,
    load_config,
    main,
    parse_config,
    read_csv,
    run_custom,
    run_dd_angle_sweep,
    run_dd_shapes,
    run_experiment,
    run_internal_correction,
    svg_kinds,
)
from defeatr.experiments import catalog, checks, cli
from defeatr.experiments.checks import SuiteResult


class TestConfig:
    def test_minimal_defaults(self):
        cfg = parse_config("experiment = dd_shapes\n")
        assert cfg.shapes == ("disk", "square", "triangle")
        assert cfg.sizes == DEFAULT_SIZES
        assert cfg.h is None
        assert cfg.refinement_levels == 0
        assert cfg.seed == 0x5EED

    def test_comments_and_spacing(self):
        cfg = parse_config(
            "# sweep\nexperiment = internal_shapes  # family\n\n"
            "shapes = star , c_shape\nsizes = 0.25, 0.125\nh = 0.05\n"
            "seed = 0x10\n"
        )
        assert cfg.shapes == ("star", "c_shape")
        assert cfg.sizes == (0.25, 0.125)
        assert cfg.h == 0.05
        assert cfg.seed == 16

    @pytest.mark.parametrize(
        "text",
        [
            "experiment = dd_shapes\ncolor = blue\n",          # unknown key
            "experiment = dd_shapes\nexperiment = dn_shapes\n",  # duplicate
            "shapes = disk\n",                                   # no experiment
            "experiment = custom\n",                             # custom needs shapes
            "experiment = dd_shapes\nsizes = 0.1, 0.2\n",        # not decreasing
            "experiment = dd_shapes\nh = -0.1\n",                # bad h
            "experiment = warp_drive\n",                         # unknown family
            "experiment dd_shapes\n",                            # missing '='
            "experiment = dd_shapes\nh =\n",                     # empty value
            "experiment = dd_shapes\nsizes = a, b\n",            # unparsable float
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_load_config_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")


def make_row(**kw):
    base = dict(
        experiment="dd_shapes",
        shape="disk",
        size=0.25,
        alpha=None,
        error_h1=0.5,
        estimate=0.7,
        component_avg=0.0,
        component_navg=0.7,
        effectivity=1.4,
        c_bar=None,
        dof=321,
        runtime_ms=0.0,
    )
    base.update(kw)
    return ResultRow(**base)


class TestResultRow:
    def test_effectivity_consistency(self):
        with pytest.raises(ValueError):
            make_row(effectivity=2.0)

    def test_positive_error(self):
        with pytest.raises(ValueError):
            make_row(error_h1=0.0, effectivity=1.0)

    def test_positive_estimate(self):
        with pytest.raises(ValueError):
            make_row(estimate=-1.0, effectivity=-2.0)


class TestCsv:
    def rows(self):
        return [
            make_row(),
            make_row(shape="star", experiment="internal_shapes",
                     c_bar=1.97, estimate=1.0, effectivity=2.0),
            make_row(experiment="dd_angle_sweep", shape="triangle",
                     alpha=120.0, size=0.125,
                     error_h1=1.0 / 3.0, estimate=0.41,
                     effectivity=0.41 * 3.0),
        ]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "rows.csv"
        rows = self.rows()
        emit_csv(rows, path)
        assert read_csv(path) == rows

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(self.rows(), a)
        emit_csv(self.rows(), b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], tmp_path / "x.csv")

    def test_header_checked(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("shape,size\ndisk,0.25\n")
        with pytest.raises(ValueError):
            read_csv(p)

    def test_field_count_checked(self, tmp_path):
        p = tmp_path / "short.csv"
        emit_csv(self.rows(), p)
        p.write_text(p.read_text() + "dd_shapes,disk\n")
        with pytest.raises(ValueError):
            read_csv(p)


def polyline_count(path):
    root = ET.parse(path).getroot()
    return sum(1 for el in root.iter() if el.tag.endswith("polyline"))


class TestSvg:
    def rows(self, with_alpha=False):
        out = []
        for shape in ("disk", "square"):
            for k, size in enumerate((0.25, 0.125, 0.0625)):
                out.append(make_row(
                    shape=shape, size=size,
                    alpha=100.0 + 10 * k if with_alpha else None,
                    error_h1=size, estimate=1.4 * size,
                    effectivity=1.4, component_navg=1.4 * size,
                ))
        return out

    def test_error_vs_size_series(self, tmp_path):
        p = tmp_path / "plot.svg"
        emit_svg(self.rows(), p, "error_vs_size")
        # one error and one estimate polyline per shape
        assert polyline_count(p) == 4

    def test_effectivity_vs_size_series(self, tmp_path):
        p = tmp_path / "plot.svg"
        emit_svg(self.rows(), p, "effectivity_vs_size")
        assert polyline_count(p) == 2

    def test_alpha_plot(self, tmp_path):
        p = tmp_path / "plot.svg"
        emit_svg(self.rows(with_alpha=True), p, "error_vs_alpha")
        assert polyline_count(p) == 4

    def test_alpha_required(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg(self.rows(), tmp_path / "x.svg", "error_vs_alpha")

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg(self.rows(), tmp_path / "x.svg", "histogram")

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg([], tmp_path / "x.svg", "error_vs_size")

    def test_well_formed_with_frame_and_title(self, tmp_path):
        p = tmp_path / "plot.svg"
        emit_svg(self.rows(), p, "error_vs_size")
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        texts = [el.text for el in root.iter() if el.tag.endswith("text")]
        assert any("dd_shapes" in (t or "") for t in texts)

    def test_kinds_per_experiment(self):
        assert svg_kinds("dd_angle_sweep") == ("error_vs_alpha",)
        assert svg_kinds("dn_shapes") == (
            "error_vs_size", "effectivity_vs_size"
        )


def tiny(experiment, shapes, h=0.08, sizes=(0.125,)):
    return ExperimentConfig(
        experiment=experiment, shapes=shapes, sizes=sizes, h=h
    )


class TestRunners:
    def test_dd_single_cell(self):
        rows = run_dd_shapes(tiny("dd_shapes", ("disk",)))
        assert len(rows) == 1
        r = rows[0]
        assert (r.experiment, r.shape, r.size) == ("dd_shapes", "disk", 0.125)
        assert r.alpha is None and r.c_bar is None
        assert 0.2 < r.effectivity < 10.0
        assert r.component_avg == 0.0
        assert r.dof > 0

    def test_deterministic_rows(self):
        cfg = tiny("dd_shapes", ("disk",))
        assert run_dd_shapes(cfg) == run_dd_shapes(cfg)

    def test_h_controls_resolution(self):
        coarse = run_dd_shapes(tiny("dd_shapes", ("disk",)))[0]
        fine = run_dd_shapes(tiny("dd_shapes", ("disk",), h=0.06))[0]
        assert fine.dof > coarse.dof

    def test_shape_family_enforced(self):
        with pytest.raises(ConfigError):
            run_dd_shapes(tiny("dd_shapes", ("star",)))

    def test_angle_sweep(self):
        rows = run_dd_angle_sweep(
            tiny("dd_angle_sweep", ("triangle",), h=0.05, sizes=(0.25,)),
            alphas=(120.0,),
        )
        assert len(rows) == 1
        assert rows[0].alpha == 120.0
        with pytest.raises(ConfigError):
            run_dd_angle_sweep(tiny("dd_angle_sweep", ("disk",)))

    def test_custom_dispatch(self):
        boundary_rows = run_custom(tiny("custom", ("disk",)))
        assert all(r.experiment == "custom" for r in boundary_rows)
        assert boundary_rows[0].c_bar is None
        internal_rows = run_custom(tiny("custom", ("star",)))
        assert internal_rows[0].c_bar is not None
        with pytest.raises(ConfigError):
            run_custom(tiny("custom", ("triangle", "star")))

    def test_correction_rows(self):
        rows = run_internal_correction(tiny("internal_correction", ("disk",)))
        assert [r.shape for r in rows] == ["disk_naive", "disk_corrected"]
        assert rows[1].error_h1 < rows[0].error_h1
        with pytest.raises(ConfigError):
            run_internal_correction(tiny("internal_correction", ("square",)))

    def test_run_experiment_dispatch(self):
        cfg = tiny("dd_shapes", ("disk",))
        assert run_experiment(cfg) == run_dd_shapes(cfg)


class TestReferenceTables:
    def test_reference_h_covers_named_experiments(self):
        assert set(catalog.REFERENCE_H) == {
            "dd_shapes", "dd_angle_sweep", "dn_shapes",
            "internal_shapes", "internal_correction",
        }
        assert all(v > 0 for v in catalog.REFERENCE_H.values())

    def test_eta_min_floors(self):
        assert set(ETA_MIN) == set(catalog.REFERENCE_H)
        assert all(v >= 1.0 for v in ETA_MIN.values())


class TestSuites:
    def test_broken_estimator_caught_by_reliability(self, monkeypatch):
        # a scaled-down estimator stays one-homogeneous, so only the
        # end-to-end reliability suite can notice it
        real = estimators.estimator_dd
        monkeypatch.setattr(
            estimators, "estimator_dd", lambda d: 0.01 * real(d)
        )
        assert checks.homogeneity().passed
        assert not checks.dd_reliability().passed

    def test_format_report(self):
        text = format_report([
            SuiteResult("alpha", True, "fine"),
            SuiteResult("beta", False, "broken"),
        ])
        assert "PASS alpha: fine" in text
        assert "FAIL beta: broken" in text


SAMPLE_MSH = """$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 "gamma"
2 2 "exterior"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 1 2 1 1 1 2
2 2 2 2 1 1 2 3
3 2 2 2 1 1 3 4
$EndElements
"""


class TestCli:
    def test_no_command(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_run_writes_outputs(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "experiment = custom\nshapes = star\nsizes = 0.25\nh = 0.12\n"
        )
        out = tmp_path / "results"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "custom.csv")
        assert len(rows) == 1 and rows[0].shape == "star"
        for kind in svg_kinds("custom"):
            assert (out / f"custom_{kind}.svg").exists()
        assert "custom: 1 rows" in capsys.readouterr().out

    def test_run_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment = warp_drive\n")
        assert main(["run", "--config", str(cfg)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_run_wrong_shape_family(self, tmp_path, capsys):
        cfg = tmp_path / "mismatch.cfg"
        cfg.write_text("experiment = dd_shapes\nshapes = star\nsizes = 0.25\n")
        assert main(["run", "--config", str(cfg)]) == 2
        capsys.readouterr()

    def test_verify_exit_codes(self, monkeypatch, capsys):
        monkeypatch.setattr(
            cli, "verify", lambda: [SuiteResult("stub", True, "ok")]
        )
        assert main(["verify"]) == 0
        monkeypatch.setattr(
            cli, "verify", lambda: [SuiteResult("stub", False, "bad")]
        )
        assert main(["verify"]) == 1
        capsys.readouterr()

    def test_mesh_info(self, tmp_path, capsys):
        p = tmp_path / "unit.msh"
        p.write_text(SAMPLE_MSH)
        assert main(["mesh-info", str(p)]) == 0
        out = capsys.readouterr().out
        assert "nodes      4" in out
        assert "gamma" in out

    def test_mesh_info_missing_file(self, tmp_path, capsys):
        assert main(["mesh-info", str(tmp_path / "ghost.msh")]) == 2
        capsys.readouterr()

    def test_mesh_info_malformed(self, tmp_path, capsys):
        p = tmp_path / "bad.msh"
        p.write_text("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
        assert main(["mesh-info", str(p)]) == 2
        capsys.readouterr()
