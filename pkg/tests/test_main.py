"""
CLI 테스트

app/main.py의 격자 인자 해석, 하위 명령, 종료 코드 테스트
"""

import argparse
import io

import numpy as np
import pandas as pd
import pytest


def _run(argv):
    from app.main import main

    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


def _frame(text):
    return pd.read_csv(io.StringIO(text))


class TestParseGrid:
    """parse_grid 테스트"""

    def test_linear_grid(self):
        from app.main import parse_grid

        np.testing.assert_allclose(parse_grid("0:1:5"), [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(parse_grid("0:1:3:lin"), [0.0, 0.5, 1.0])

    def test_default_count_and_log(self):
        """count 생략 시 50개, log는 등비 격자"""
        from app.main import DEFAULT_GRID_COUNT, parse_grid

        grid = parse_grid("2:100:log")
        assert grid.size == DEFAULT_GRID_COUNT == 50
        assert grid[0] == pytest.approx(2.0)
        assert grid[-1] == pytest.approx(100.0)
        np.testing.assert_allclose(grid[1:] / grid[:-1], grid[1] / grid[0])

    def test_empty_grid(self):
        from app.main import parse_grid

        assert parse_grid("0:1:0").size == 0

    @pytest.mark.parametrize("spec", ["1", "a:b", "2:1", "-1:1", "0:1:log", "0:1:2:3", "0:1:-2"])
    def test_invalid_specs(self, spec):
        from app.main import parse_grid

        with pytest.raises(argparse.ArgumentTypeError):
            parse_grid(spec)


class TestParser:
    """인자 해석 종료 코드"""

    def test_version(self, capsys):
        code, _ = _run(["--version"])
        assert code == 0
        assert "slug-solver" in capsys.readouterr().out

    def test_missing_subcommand(self, capsys):
        code, _ = _run([])
        assert code == 2

    def test_bad_grid_argument(self, capsys):
        code, _ = _run(["front", "--x", "2:1"])
        assert code == 2


class TestFrontCommand:
    """front 하위 명령 테스트"""

    def test_front_table(self):
        """A 에서 (x, phi, zeta) = (2, 2, 1), x = 8 에서 (8, 10, 1/3)"""
        code, out = _run(["front", "--x", "2:8:2"])
        assert code == 0
        frame = _frame(out)
        assert list(frame.columns) == ["x", "phi", "zeta", "slope"]
        assert frame.iloc[0].tolist() == pytest.approx([2.0, 2.0, 1.0, 1.0])
        assert frame.iloc[1].tolist() == pytest.approx([8.0, 10.0, 1.0 / 3.0, 1.5])

    def test_empty_grid_writes_header(self):
        code, out = _run(["front", "--x", "0:1:0"])
        assert code == 0
        assert out.strip() == "x,phi,zeta,slope"

    def test_model_override_and_output_file(self, tmp_path):
        """--t-inj 는 A 를 옮기고 -o 는 파일로 기록"""
        path = tmp_path / "out" / "front.csv"
        code, out = _run(["front", "--t-inj", "0.5", "--x", "1:1:1", "-o", str(path)])
        assert code == 0
        assert out == ""
        frame = pd.read_csv(path)
        assert frame["phi"].iloc[0] == pytest.approx(1.0)
        assert frame["zeta"].iloc[0] == pytest.approx(1.0)

    def test_invalid_slug_is_usage_error(self):
        code, _ = _run(["front", "--t-inj", "0"])
        assert code == 2

    def test_missing_config_is_usage_error(self, tmp_path):
        code, _ = _run(["front", "--config", str(tmp_path / "missing.yaml")])
        assert code == 2

    def test_config_file(self, write_yaml, small_config_data):
        small_config_data["t_inj"] = 2.0
        path = write_yaml(small_config_data)
        code, out = _run(["front", "--config", str(path), "--x", "4:4:1"])
        assert code == 0
        assert _frame(out)["zeta"].iloc[0] == pytest.approx(1.0)


class TestCheckShockCommand:
    """check-shock 하위 명령 테스트"""

    def test_oa_front(self):
        """OA 전면은 허용 (종료 코드 0)"""
        code, out = _run(["check-shock", "--oa"])
        assert code == 0
        row = _frame(out).iloc[0]
        assert bool(row["admissible"]) is True
        assert row["reason"] == "ok"
        assert row["c_minus"] == 1.0
        assert abs(row["r1"]) < 1e-8
        assert row["d1"] == pytest.approx(1.0)
        assert list(_frame(out).columns)[:7] == ["s_minus", "s_plus", "c_minus", "c_plus", "v", "d1", "d2"]

    def test_oversized_saturation_jump(self, rm1):
        """Welge 포화도를 넘는 점프는 Oleinik 실패 (종료 코드 1)"""
        v = float(rm1.fluid.f(0.95, 0.0)) / 0.95
        code, out = _run([
            "check-shock", "--s-minus", "0.95", "--s-plus", "0", "--c-minus", "0",
            "--c-plus", "0", "--v", repr(v),
        ])
        assert code == 1
        row = _frame(out).iloc[0]
        assert bool(row["admissible"]) is False
        assert row["reason"] == "oleinik-fail"

    def test_missing_state_is_usage_error(self):
        code, out = _run(["check-shock", "--s-minus", "0.5"])
        assert code == 2
        assert out == ""


class TestValidateModelCommand:
    """validate-model 하위 명령 테스트"""

    def test_reference_model_passes(self):
        code, out = _run(["validate-model"])
        assert code == 0
        frame = _frame(out)
        assert list(frame.columns) == ["check", "passed", "worst", "s", "c"]
        assert frame["passed"].all()

    def test_uncoupled_viscosity_fails(self):
        """m = 0 이면 F4 실패 (종료 코드 1)"""
        code, out = _run(["validate-model", "--m", "0", "--n", "16"])
        assert code == 1
        frame = _frame(out).set_index("check")
        assert not frame.loc["F4", "passed"]


class TestCompareCommand:
    """compare 하위 명령 테스트"""

    def test_l1_distances(self, tmp_path):
        from app.inverse_transform import GridField

        x = np.linspace(0.0, 1.0, 5)
        t = np.linspace(0.0, 1.0, 3)
        a = GridField(x, t, np.zeros((5, 3)), np.zeros((5, 3)))
        b = GridField(x, t, np.full((5, 3), 0.2), np.zeros((5, 3)))
        a.to_csv(tmp_path / "a.csv")
        b.to_csv(tmp_path / "b.csv")

        code, out = _run(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")])
        assert code == 0
        frame = _frame(out).set_index("which")
        assert frame.loc["s", "l1"] == pytest.approx(0.2 * 15 * 0.25 * 0.5)
        assert frame.loc["c", "l1"] == 0.0

    def test_grid_mismatch_is_solver_failure(self, tmp_path):
        from app.inverse_transform import GridField

        t = np.linspace(0.0, 1.0, 3)
        GridField(np.linspace(0, 1, 5), t, np.zeros((5, 3)), np.zeros((5, 3))).to_csv(tmp_path / "a.csv")
        GridField(np.linspace(0, 1, 4), t, np.zeros((4, 3)), np.zeros((4, 3))).to_csv(tmp_path / "b.csv")
        code, _ = _run(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--which", "s"])
        assert code == 1


@pytest.mark.slow
class TestCharacteristicsCommand:
    """characteristics 하위 명령 테스트"""

    def test_small_family(self):
        code, out = _run(["characteristics", "--n-ta", "8", "--n-jouguet", "8", "--samples", "5"])
        assert code == 0
        frame = _frame(out)
        assert list(frame.columns) == ["family", "param", "zeta", "U", "psi", "phi", "x"]
        assert len(frame) % 5 == 0
        assert set(frame["family"]) == {"ta", "jouguet"}
