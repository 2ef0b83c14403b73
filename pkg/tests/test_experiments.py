"""Unit tests for sweep orchestration and persistence."""
import dataclasses
import json
import py_compile

import numpy as np
import pytest

from zenosim.experiments import (
    ComparisonRow, EngineComparison, FIGURE_BETA_GRID, FIGURE_BETA_HIGHLIGHTS,
    FIGURE_PHI1_GRID, FIGURE_PHI2_GRID, SMOKE_BETA_GRID, SMOKE_PHI1_GRID,
    SMOKE_PHI2_GRID, SweepResult, SweepRow, SweepSpec, addressability_margin,
    compare_engines, emit_plot_script, read_results, smoke_spec,
    sweep_single_pulse, sweep_two_pulse, write_manifest, write_results,
)
from zenosim.measures import BlochAngles


def tiny_spec(**kwargs):
    defaults = dict(beta_grid=(0.1, 0.2), phi2_grid=(np.pi, 2 * np.pi),
                    n_max=70, sub_samples=2)
    defaults.update(kwargs)
    return SweepSpec(**defaults)


class TestSweepSpec:
    def test_grid_validation(self):
        with pytest.raises(ValueError, match="nonempty"):
            tiny_spec(beta_grid=())
        with pytest.raises(ValueError, match="strictly increasing"):
            tiny_spec(beta_grid=(0.2, 0.1))
        with pytest.raises(ValueError, match="strictly increasing"):
            tiny_spec(phi2_grid=(np.pi, np.pi))
        with pytest.raises(ValueError, match="> 0"):
            tiny_spec(beta_grid=(0.0, 0.1))
        with pytest.raises(ValueError, match=">= 0"):
            tiny_spec(phi1_grid=(-0.1, 0.0))
        with pytest.raises(ValueError, match="finite"):
            tiny_spec(beta_grid=(0.1, np.inf))

    def test_option_validation(self):
        with pytest.raises(ValueError, match="engine"):
            tiny_spec(engine="exact")
        with pytest.raises(ValueError, match="frame"):
            tiny_spec(frame="rotating")
        with pytest.raises(ValueError, match="preset"):
            tiny_spec(pair_convention="excited")
        with pytest.raises(ValueError, match="pair_convention"):
            tiny_spec(pair_convention=3.0)
        tiny_spec(pair_convention=BlochAngles(0.5, 0.25))
        with pytest.raises(ValueError, match="sub_samples"):
            tiny_spec(sub_samples=0)

    def test_engines_and_order(self):
        spec = tiny_spec(phi1_grid=(0.0, 0.3))
        assert tiny_spec(engine="both").engines == ("piecewise", "lindblad")
        assert spec.engines == ("piecewise",)
        points = list(spec.grid_points())
        assert points == sorted(points)
        assert len(points) == 8

    def test_shipped_grids(self):
        assert len(SMOKE_BETA_GRID) == 4
        assert len(SMOKE_PHI2_GRID) == 7
        assert len(SMOKE_PHI1_GRID) == 5
        assert len(FIGURE_BETA_GRID) == 20
        assert len(FIGURE_PHI2_GRID) == 61
        assert len(FIGURE_PHI1_GRID) == 41
        assert FIGURE_BETA_GRID[0] == pytest.approx(0.0126)
        assert FIGURE_BETA_GRID[-1] == pytest.approx(0.251)
        assert FIGURE_PHI2_GRID[-1] == pytest.approx(6 * np.pi)
        assert FIGURE_PHI1_GRID[-1] == pytest.approx(np.pi)
        assert len(FIGURE_BETA_HIGHLIGHTS) == 3
        smoke = smoke_spec(two_pulse=True)
        assert smoke.phi1_grid == SMOKE_PHI1_GRID
        assert smoke_spec().phi1_grid == (0.0,)


class TestAddressability:
    def test_frozen_values(self):
        gap = np.sqrt(3.0) - np.sqrt(2.0)
        assert addressability_margin(1.0, 2, 1.0 / gap) == pytest.approx(1.0)
        assert addressability_margin(1.0, 1, 100.0) == pytest.approx(
            41.42135623730952)

    def test_linear_in_window(self):
        one = addressability_margin(2.0, 3, 7.0)
        assert addressability_margin(2.0, 3, 14.0) == pytest.approx(2 * one)

    def test_level_bound(self):
        with pytest.raises(ValueError, match="level"):
            addressability_margin(1.0, 0, 1.0)


class TestSweepSinglePulse:
    def test_single_point_single_row(self):
        spec = tiny_spec(beta_grid=(0.1,), phi2_grid=(2 * np.pi,))
        result = sweep_single_pulse(spec)
        assert result.kind == "single_pulse"
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.engine == "piecewise" and not row.error
        assert row.wall_time > 0
        assert 0 < row.entropy < 1 and 0 < row.escape < 1 and row.blp > 0
        # The resolved default pair convention lands in the spec.
        assert result.spec.pair_convention == "ground"

    def test_rejects_two_pulse_grid(self):
        with pytest.raises(ValueError, match="phi1_grid"):
            sweep_single_pulse(tiny_spec(phi1_grid=(0.0, 0.2)))

    def test_zero_angle_column_is_dissipation_free(self):
        spec = tiny_spec(beta_grid=(0.1,), phi2_grid=(0.0,), n_max=90)
        row = sweep_single_pulse(spec).rows[0]
        assert abs(row.entropy) <= 1e-9
        assert row.blp <= 1e-9
        assert row.escape > 0.9  # unprotected drive leaves the subspace

    def test_both_engines_row_order(self):
        spec = tiny_spec(beta_grid=(0.2,), phi2_grid=(np.pi,), n_max=90,
                         engine="both")
        result = sweep_single_pulse(spec)
        assert [row.engine for row in result.rows] == ["piecewise", "lindblad"]
        exact, coarse = result.rows
        assert not exact.error and not coarse.error
        assert coarse.blp <= 1e-6  # the coarse engine carries no backflow
        assert abs(exact.entropy - coarse.entropy) < 0.5

    def test_failed_points_annotate_rows(self, tmp_path):
        spec = tiny_spec(beta_grid=(0.1,), phi2_grid=(0.0, np.pi), n_max=40)
        result = sweep_single_pulse(spec)
        assert len(result.rows) == 2 == result.error_count
        for row in result.rows:
            assert row.error.startswith("TruncationError")
            assert np.isnan(row.entropy) and np.isnan(row.blp)
        # Error rows survive the CSV round trip byte-identically too.
        first = tmp_path / "err.csv"
        write_results(result, first)
        again = dataclasses.replace(result, rows=read_results(first))
        second = tmp_path / "err2.csv"
        write_results(again, second)
        assert first.read_bytes() == second.read_bytes()

    def test_serial_parallel_equivalence(self, tmp_path):
        spec = tiny_spec(phi2_grid=(2 * np.pi,))
        paths = []
        for jobs, name in ((1, "serial.csv"), (2, "parallel.csv")):
            result = sweep_single_pulse(spec, jobs=jobs)
            paths.append(tmp_path / name)
            write_results(result, paths[-1])
        assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.fixture(scope="module")
def two_pulse_result():
    return sweep_two_pulse(tiny_spec(phi1_grid=(0.0, 0.25 * np.pi)))


class TestSweepTwoPulse:
    @pytest.fixture
    def result(self, two_pulse_result):
        return two_pulse_result

    def test_grid_shape_and_order(self, result):
        assert len(result.rows) == 8
        keys = [(row.beta, row.phi2, row.phi1) for row in result.rows]
        assert keys == sorted(keys)
        assert result.spec.pair_convention == "plus"

    def test_turning_points(self, result):
        assert len(result.turning_points) == 4
        for point in result.turning_points:
            matching = [row for row in result.rows
                        if (row.beta, row.phi2) == (point.beta, point.phi2)]
            best = max(row.entropy for row in matching)
            assert point.entropy_max == best
            assert point.phi1_opt in result.spec.phi1_grid
        # A quarter-turn lower pulse raises S_L at every (beta, 2*pi) here.
        for point in result.turning_points:
            if point.phi2 == pytest.approx(2 * np.pi):
                assert point.phi1_opt == pytest.approx(0.25 * np.pi)

    def test_lindblad_engine_rejected(self):
        spec = tiny_spec(phi1_grid=(0.0, 0.2), engine="lindblad")
        with pytest.raises(ValueError, match="single"):
            sweep_two_pulse(spec)


class TestCompareEngines:
    def test_zero_coupling_point_is_engine_exact(self):
        spec = SweepSpec(beta_grid=(0.1,), phi2_grid=(0.0,), n_max=90)
        comparison = compare_engines(spec)
        row = comparison.rows[0]
        assert abs(row.delta_entropy) <= 1e-9
        assert abs(row.delta_escape) <= 1e-9

    def test_agreement_degrades_with_angle_times_beta(self):
        spec = SweepSpec(beta_grid=(0.05, 0.1), phi2_grid=(np.pi, 2 * np.pi),
                         n_max=60)
        comparison = compare_engines(spec)
        assert comparison.correlation > 0
        assert comparison.spec.engine == "both"
        deltas = {(row.beta, row.phi2): abs(row.delta_entropy)
                  for row in comparison.rows}
        assert deltas[(0.05, np.pi)] == min(deltas.values())

    def test_rejects_two_pulse_grid(self):
        with pytest.raises(ValueError, match="single-pulse"):
            compare_engines(tiny_spec(phi1_grid=(0.0, 0.2)))


@pytest.fixture(scope="module")
def persisted_result():
    return sweep_single_pulse(tiny_spec(phi2_grid=(0.5 * np.pi, 2 * np.pi),
                                        n_max=100))


class TestPersistence:
    @pytest.fixture
    def result(self, persisted_result):
        return persisted_result

    def test_csv_layout(self, result, tmp_path):
        path = tmp_path / "sweep.csv"
        write_results(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# zenosim-sweep-csv/1"
        assert lines[1].startswith("# kind=single_pulse")
        assert lines[2] == "beta,phi2,phi1,S_L,P_escape,N_BLP,engine,error"
        assert len(lines) == 3 + len(result.rows)

    def test_empty_result_writes_header_only(self, tmp_path):
        empty = SweepResult(kind="single_pulse", spec=tiny_spec(), rows=())
        path = tmp_path / "empty.csv"
        write_results(empty, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3 and lines[2].startswith("beta,")

    def test_round_trip_is_idempotent(self, result, tmp_path):
        first = tmp_path / "first.csv"
        write_results(result, first)
        rows = read_results(first)
        assert len(rows) == len(result.rows)
        again = dataclasses.replace(result, rows=rows)
        second = tmp_path / "second.csv"
        write_results(again, second)
        assert first.read_bytes() == second.read_bytes()
        # Parsed values match the originals at CSV precision.
        for parsed, original in zip(rows, result.rows):
            assert parsed.engine == original.engine
            assert parsed.entropy == pytest.approx(original.entropy, rel=1e-11)
            assert parsed.blp == pytest.approx(original.blp, rel=1e-11)

    def test_rewrite_is_byte_identical(self, result, tmp_path):
        one, two = tmp_path / "one.csv", tmp_path / "two.csv"
        write_results(result, one)
        write_results(result, two)
        assert one.read_bytes() == two.read_bytes()

    def test_manifest_contents(self, result, tmp_path):
        path = tmp_path / "run.json"
        write_manifest(result, path)
        manifest = json.loads(path.read_text())
        assert manifest["format"] == "zenosim-manifest/1"
        assert manifest["kind"] == "single_pulse"
        assert manifest["rows"] == len(result.rows)
        assert manifest["errors"] == 0
        sweep = manifest["sweep"]
        assert sweep["pair_convention"] == "ground"
        assert sweep["frame"] == "dressed"
        assert sweep["beta_grid"] == list(result.spec.beta_grid)
        assert not any("time" in key for key in manifest)

    def test_manifest_records_turning_points(self, tmp_path):
        result = sweep_two_pulse(tiny_spec(
            beta_grid=(0.2,), phi2_grid=(2 * np.pi,),
            phi1_grid=(0.0, 0.25 * np.pi)))
        path = tmp_path / "two.json"
        write_manifest(result, path)
        manifest = json.loads(path.read_text())
        assert len(manifest["turning_points"]) == 1
        assert manifest["turning_points"][0]["phi1_opt"] == pytest.approx(
            0.25 * np.pi)

    def test_comparison_csv(self, tmp_path):
        rows = (ComparisonRow(beta=0.1, phi2=np.pi, entropy_piecewise=0.5,
                              entropy_lindblad=0.4, escape_piecewise=0.2,
                              escape_lindblad=0.25),)
        comparison = EngineComparison(spec=tiny_spec(), rows=rows,
                                      correlation=1.0)
        path = tmp_path / "cmp.csv"
        write_results(comparison, path)
        lines = path.read_text().splitlines()
        assert lines[2].startswith("beta,phi2,S_L_piecewise")
        parsed = read_results(path)
        assert parsed[0].delta_entropy == pytest.approx(0.1, abs=1e-11)

    def test_plot_script(self, result, tmp_path):
        script = tmp_path / "plot.py"
        emit_plot_script(result, script, csv_name="sweep.csv")
        py_compile.compile(str(script), doraise=True)
        text = script.read_text()
        assert "sweep.csv" in text and "matplotlib" in text
        again = tmp_path / "plot2.py"
        emit_plot_script(result, again, csv_name="sweep.csv")
        assert script.read_text() == again.read_text()

    def test_plot_script_rejects_comparisons(self, tmp_path):
        comparison = EngineComparison(spec=tiny_spec(), rows=(),
                                      correlation=0.0)
        with pytest.raises(ValueError, match="comparison"):
            emit_plot_script(comparison, tmp_path / "nope.py")


def test_rows_are_pure_functions_of_the_spec():
    # Same spec, fresh processes vs in-process: identical numbers.
    spec = tiny_spec(beta_grid=(0.2,), phi2_grid=(2 * np.pi,))
    one = sweep_single_pulse(spec, jobs=2).rows[0]
    two = sweep_single_pulse(spec).rows[0]
    assert (one.entropy, one.escape, one.blp) == (two.entropy, two.escape,
                                                  two.blp)
