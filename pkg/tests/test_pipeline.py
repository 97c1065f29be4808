"""
풀이 파이프라인 테스트

app/pipeline.py의 보고서, 단계 함수, 전체 solve 테스트
"""

import numpy as np
import pandas as pd
import pytest


class TestSolveReport:
    """SolveReport 테스트"""

    def _report(self):
        from app.config import SolveConfig
        from app.pipeline import SolveReport

        return SolveReport(SolveConfig())

    def test_passed_and_first_failure(self):
        report = self._report()
        assert report.passed
        assert report.first_failure is None

        report.add("first", True)
        report.add("second", False, "too large")
        report.add("third", False)
        assert not report.passed
        assert report.first_failure == "second"
        assert report.checks[1].to_dict() == {"check": "second", "passed": False, "detail": "too large"}

    def test_to_text_sections(self):
        """[constants], [checks], [shocks], [config] 순서"""
        report = self._report()
        report.constants.update({"u_plus_oa": 1.0239512345678901, "zeta_B": [0.02, 0.5], "mode": "fan"})
        report.add("oa-shock", True, "ok")
        report.add("shock-rh", False)
        report.shocks = pd.DataFrame([{"kind": "oa-front", "v": 0.5}])

        text = report.to_text()
        sections = [line for line in text.splitlines() if line.startswith("[")]
        assert sections == ["[constants]", "[checks]", "[shocks]", "[config]"]
        assert "u_plus_oa = 1.02395123457" in text
        assert "zeta_B = [0.02, 0.5]" in text
        assert "oa-shock: ok (ok)" in text
        assert "shock-rh: FAILED" in text
        assert "kind,v" in text

    def test_fv_section_when_present(self):
        report = self._report()
        report.fv_table = pd.DataFrame([{"eps": 0.04, "l1_s": 0.1}])
        assert "[fv-refinement]" in report.to_text()


class TestStages:
    """단계 함수 테스트"""

    def test_front_ode_gap(self, rm1_zeta):
        """닫힌 형태 전면과 ODE 적분 일치"""
        from app.pipeline import FRONT_ODE_TOL, front_ode_gap

        assert front_ode_gap(rm1_zeta, x_factor=20.0, n=50) <= FRONT_ODE_TOL

    def test_lagrange_frame(self, rm1_solution):
        """phi, x, zeta, U 열의 n x n 표"""
        from app.pipeline import lagrange_frame

        frame = lagrange_frame(rm1_solution, 5, 1.5, 3.0)
        assert list(frame.columns) == ["phi", "x", "zeta", "U"]
        assert len(frame) == 25
        assert frame["zeta"].between(0.0, 1.0).all()
        inlet = frame[frame["x"] == 0.0]
        assert (inlet["U"] == 1.0).all()

    def test_build_all(self, small_config_data):
        from app.config import parse_config
        from app.pipeline import build_all

        model, zf, solution = build_all(parse_config(small_config_data))
        assert model.to_dict()["m"] == 1.0
        assert zf.x_A == pytest.approx(2.0)
        assert solution.cone.full_jouguet

    def _fv_table(self, l1_c=(0.08, 0.05, 0.03), front=(0.02, 0.01, 0.0009)):
        return pd.DataFrame({
            "eps": [4e-3, 2e-3, 1e-3],
            "dx": [2e-3, 1e-3, 5e-4],
            "l1_s": [0.09, 0.06, 0.04],
            "l1_c": list(l1_c),
            "front_error_c": list(front),
        })

    def test_fv_checks_pass(self):
        """L1(s), L1(c) 단조 감소, 가장 작은 eps 전면 오차 2셀 이내"""
        from app.pipeline import fv_checks

        checks = {check.name: check for check in fv_checks(self._fv_table())}
        assert set(checks) == {"fv-convergence", "fv-convergence-c", "fv-front"}
        assert all(check.passed for check in checks.values())
        assert "1.80 cells" in checks["fv-front"].detail

    def test_fv_checks_concentration_not_decreasing(self):
        from app.pipeline import fv_checks

        checks = {check.name: check.passed for check in fv_checks(self._fv_table(l1_c=(0.08, 0.05, 0.05)))}
        assert checks["fv-convergence"]
        assert not checks["fv-convergence-c"]

    def test_fv_checks_front_too_far(self):
        """전면 오차 3셀이면 실패"""
        from app.pipeline import fv_checks

        checks = {check.name: check.passed for check in fv_checks(self._fv_table(front=(0.02, 0.01, 0.0015)))}
        assert not checks["fv-front"]
        assert checks["fv-convergence-c"]

    @pytest.mark.slow
    def test_fv_comparison_table(self, small_config_data, rm1, rm1_solution):
        """기준 장 간격 = 가장 작은 FV 셀 폭, 표는 eps 내림차순"""
        from app.config import parse_config
        from app.pipeline import fv_checks, run_fv_comparison

        small_config_data["fv"] = {
            "enabled": True, "eps_list": [0.02, 0.04], "length": 1.0,
            "final_time": 0.5, "nt_out": 6, "dx_per_eps": 0.5,
        }
        table = run_fv_comparison(parse_config(small_config_data), rm1, rm1_solution)
        assert table["eps"].tolist() == [0.04, 0.02]
        assert table["dx"].tolist() == pytest.approx([0.02, 0.01])
        assert table["l1_s"].iloc[1] < table["l1_s"].iloc[0]
        assert [check.name for check in fv_checks(table)] == ["fv-convergence", "fv-convergence-c", "fv-front"]

    def test_supported_region_check(self):
        """U-_OA로 채운 점 개수를 실패로 드러냄"""
        from app.inverse_transform import GridField
        from app.pipeline import supported_region_check

        x = np.linspace(0.0, 1.0, 3)
        t = np.linspace(0.0, 0.5, 2)
        field = GridField(x, t, np.zeros((3, 2)), np.zeros((3, 2)), {"unsupported": 0})
        assert supported_region_check(field).passed

        field.metadata["unsupported"] = 7
        check = supported_region_check(field)
        assert check.name == "supported-region"
        assert not check.passed
        assert check.detail.startswith("7 points")


@pytest.mark.slow
class TestRunSolve:
    """전체 solve 테스트"""

    @pytest.fixture(scope="class")
    def solved(self, tmp_path_factory):
        from app.config import parse_config
        from app.pipeline import run_solve

        config = parse_config({
            "model": {"m0": 1.0, "m": 1.0, "gamma": 2.0, "beta": 1.0},
            "t_inj": 1.0,
            "grid": {"nx": 11, "nt": 6, "x_max": 1.0, "t_max": 0.5, "n_phi": 60, "n_lagrange": 9},
            "family": {"n_ta": 24, "n_jouguet": 24, "refine": 4, "n_below": 32},
        })
        output_dir = tmp_path_factory.mktemp("solve")
        return run_solve(config, output_dir), output_dir

    def test_artifacts_written(self, solved):
        from app.pipeline import ARTIFACTS

        report, output_dir = solved
        for name in ARTIFACTS.values():
            assert (output_dir / name).exists(), name
        assert set(report.artifacts) == set(ARTIFACTS)

    def test_core_checks_pass(self, solved):
        report, _ = solved
        results = {check.name: check.passed for check in report.checks}
        for name in ("model-assumptions", "front-closed-form", "oa-shock", "shock-rh", "physical-bounds"):
            assert results[name], name
        assert "a-characteristic" in results
        assert "fv-convergence" not in results
        assert results["supported-region"] == (report.constants["unsupported_points"] == 0)

    def test_constants(self, solved):
        report, _ = solved
        assert report.constants["below_oa_mode"] == "fan"
        assert report.constants["zeta_B"] == []
        assert report.constants["u_plus_oa"] == pytest.approx(1.02395, abs=2e-4)

    def test_physical_field_csv(self, solved):
        """field_physical.csv 는 x, t, s, c 열의 nx * nt 행"""
        _, output_dir = solved
        frame = pd.read_csv(output_dir / "field_physical.csv")
        assert list(frame.columns) == ["x", "t", "s", "c"]
        assert len(frame) == 66
        inlet = frame[(frame["x"] == 0.0) & (frame["t"] > 0)]
        np.testing.assert_allclose(inlet["c"], 1.0)

    def test_report_text(self, solved):
        _, output_dir = solved
        text = (output_dir / "report.txt").read_text(encoding="utf-8")
        assert text.startswith("[constants]")
        assert "[checks]" in text
        assert "oa-front" in text
