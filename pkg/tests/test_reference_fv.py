"""
유한체적 기준해 모듈 테스트

app/reference_fv.py의 설정 검증, 양해법 풀이, 장 비교, 정제 스윕 테스트
"""

import numpy as np
import pytest

# RM1, c = 0 선두 충격파 속도 f(s*)/s*
BL_SPEED = 1.2071067811865


def _constant_field(nx, nt, value, dx=0.1, dt=0.25):
    from app.inverse_transform import GridField

    x = np.arange(nx) * dx
    t = np.arange(nt) * dt
    return GridField(x, t, np.full((nx, nt), value), np.full((nx, nt), value))


class TestFVConfig:
    """FVConfig 검증 테스트"""

    @pytest.mark.parametrize(
        "kwargs,field",
        [
            ({"eps": 0.0, "dx": 0.01}, "eps"),
            ({"eps": 0.01, "dx": -1.0}, "dx"),
            ({"eps": 0.01, "dx": 0.01, "cfl": 0.9}, "cfl"),
            ({"eps": 0.01, "dx": 0.01, "length": 0.005}, "length"),
            ({"eps": 0.01, "dx": 0.01, "final_time": 0.0}, "final_time"),
            ({"eps": 0.01, "dx": 0.01, "nt_out": 1}, "nt_out"),
            ({"eps": 0.01, "dx": 0.01, "t_inj": -1.0}, "t_inj"),
            ({"eps": 0.01, "dx": 0.01, "c_inj": 1.5}, "c_inj"),
            ({"eps": 0.01, "dx": 0.01, "s_init": -0.1}, "s_init"),
        ],
    )
    def test_invalid_values(self, kwargs, field):
        from app.reference_fv import FVConfig

        with pytest.raises(ValueError, match=field):
            FVConfig(**kwargs)

    def test_derived_values(self):
        """셀 개수, 주입 일정, eps 비례 dx"""
        from app.reference_fv import FVConfig

        cfg = FVConfig(eps=0.02, dx=0.01, length=3.0, t_inj=1.0)
        assert cfg.n_cells == 300
        assert cfg.inlet_concentration(0.5) == 1.0
        assert cfg.inlet_concentration(1.0) == 0.0

        scaled = FVConfig.for_eps(0.04, dx_per_eps=0.25, length=2.0)
        assert scaled.dx == pytest.approx(0.01)
        assert scaled.length == 2.0


class TestRecoverConcentration:
    """c 복원 테스트"""

    def test_round_trip(self, rm1):
        from app.reference_fv import recover_concentration

        c = np.array([0.0, 0.1, 0.5, 1.0])
        s = np.array([0.0, 0.4, 0.8, 1.0])
        m = c * s + rm1.adsorption.a(c)
        np.testing.assert_allclose(recover_concentration(rm1, m, s), c, atol=1e-12)

    def test_out_of_range_mass(self, rm1):
        """c > 1 에 해당하는 질량은 ConvergenceError"""
        from app.exceptions import ConvergenceError
        from app.reference_fv import recover_concentration

        with pytest.raises(ConvergenceError, match="cell=1"):
            recover_concentration(rm1, np.array([0.1, 10.0]), np.array([0.5, 0.5]))


class TestRunFV:
    """run_fv 테스트"""

    def test_constant_state_preserved(self, rm1):
        """입구와 초기 상태가 같으면 변하지 않음"""
        from app.reference_fv import FVConfig, run_fv

        cfg = FVConfig(eps=0.01, dx=0.02, length=1.0, final_time=0.2, nt_out=3,
                       c_inj=0.0, s_inlet=0.3, s_init=0.3)
        field = run_fv(rm1, cfg)
        assert field.s.shape == (50, 3)
        np.testing.assert_allclose(field.s, 0.3, atol=1e-12)
        np.testing.assert_allclose(field.c, 0.0, atol=1e-12)
        assert field.metadata["eps"] == 0.01
        assert field.metadata["steps"] > 0

    def test_buckley_leverett_front_speed(self, rm1):
        """화학제 없는 물 주입: 선두 충격파는 x = 1.207 t"""
        from app.reference_fv import FVConfig, front_position, run_fv

        cfg = FVConfig(eps=0.005, dx=0.0025, length=1.0, final_time=0.4, nt_out=3, c_inj=0.0)
        field = run_fv(rm1, cfg)
        assert np.all(field.c == 0.0)
        assert front_position(field, 0.4, "s", level=0.35) == pytest.approx(BL_SPEED * 0.4, abs=0.04)

    def test_slug_bounds(self, rm1):
        """슬러그 주입 중과 후의 s, c 는 [0, 1] (s는 S_RANGE_TOL 이내)"""
        from app.reference_fv import S_RANGE_TOL, FVConfig, run_fv

        cfg = FVConfig(eps=0.05, dx=0.025, length=1.5, final_time=1.4, nt_out=8, t_inj=0.5)
        field = run_fv(rm1, cfg)
        assert np.all((field.s >= -S_RANGE_TOL) & (field.s <= 1 + S_RANGE_TOL))
        assert np.all((field.c >= 0) & (field.c <= 1))
        # t = 0.4 (주입 중) 보다 t = 1.4 의 입구 c가 작음
        assert field.c[0, -1] < field.c[0, 2]

    def test_water_volume_balance(self, rm1):
        """sum s dx 의 변화 = 입구 유입 - 출구 유출 (돌파 이후 포함)"""
        from app.reference_fv import FVConfig, run_fv

        cfg = FVConfig(eps=0.05, dx=0.025, length=1.0, final_time=1.2, nt_out=4, t_inj=0.5)
        field = run_fv(rm1, cfg)
        inflow = field.metadata["inflow_s"]
        outflow = field.metadata["outflow_s"]
        assert outflow > 0.0
        assert inflow > outflow
        volume = cfg.dx * (field.s[:, -1].sum() - field.s[:, 0].sum())
        assert volume == pytest.approx(inflow - outflow, abs=1e-10)

    def test_unstable_step_raises(self, rm1, mocker):
        """국소 속도를 과소평가하면 s가 [0, 1]을 벗어나 ConvergenceError"""
        from app.exceptions import ConvergenceError
        from app.reference_fv import FVConfig, run_fv

        mocker.patch("app.reference_fv._local_speed", side_effect=lambda model, s, c: np.full(s.shape, 1e-3))
        cfg = FVConfig(eps=1e-4, dx=0.02, length=1.0, final_time=0.5, nt_out=3, c_inj=0.0)
        with pytest.raises(ConvergenceError, match="s가"):
            run_fv(rm1, cfg)


class TestCompareFields:
    """compare_fields, resample, front_position 테스트"""

    def test_identical_fields(self):
        from app.reference_fv import compare_fields

        a = _constant_field(5, 4, 0.3)
        assert compare_fields(a, a, "s") == 0.0

    def test_constant_shift(self):
        """sum |a - b| dx dt"""
        from app.reference_fv import compare_fields

        a = _constant_field(5, 4, 0.3)
        b = _constant_field(5, 4, 0.4)
        assert compare_fields(a, b, "c") == pytest.approx(0.1 * 5 * 4 * 0.1 * 0.25)

    def test_mismatch_and_bad_component(self):
        from app.exceptions import GridMismatchError
        from app.reference_fv import compare_fields

        a = _constant_field(5, 4, 0.3)
        with pytest.raises(GridMismatchError):
            compare_fields(a, _constant_field(6, 4, 0.3))
        with pytest.raises(ValueError, match="which"):
            compare_fields(a, a, "z")

    def test_resample_is_linear(self):
        from app.inverse_transform import GridField
        from app.reference_fv import resample

        x = np.array([0.0, 1.0])
        t = np.array([0.0, 1.0])
        field = GridField(x, t, np.array([[0.0, 0.0], [1.0, 0.5]]), np.zeros((2, 2)))
        out = resample(field, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(out.s[:, 1], [0.0, 0.25, 0.5])
        assert out.t is not field.t

    def test_front_position(self):
        from app.inverse_transform import GridField
        from app.reference_fv import front_position

        x = np.linspace(0.0, 1.0, 11)
        t = np.array([0.0, 1.0])
        c = np.zeros((11, 2))
        c[:4, 1] = 1.0
        field = GridField(x, t, c.copy(), c)
        assert front_position(field, 1.0) == pytest.approx(0.3)
        assert front_position(field, 0.0) == 0.0


@pytest.mark.slow
class TestRefinementSweep:
    """eps -> 0 에서 반해석 해로 수렴"""

    def test_error_decreases_with_eps(self, rm1, rm1_solution):
        from app.inverse_transform import sample_grid
        from app.reference_fv import FVConfig, refinement_sweep

        reference = sample_grid(rm1_solution, nx=11, nt=6, x_max=1.0, t_max=0.5, n_phi=120, x_refine=10)
        base = FVConfig(eps=0.04, dx=0.02, length=1.5, final_time=0.5, nt_out=6)
        table = refinement_sweep(rm1, base, [0.02, 0.04], reference, dx_per_eps=0.5)

        assert list(table.columns) == ["eps", "dx", "l1_s", "l1_c", "front_error_c"]
        assert table["eps"].tolist() == [0.04, 0.02]
        assert table["dx"].tolist() == pytest.approx([0.02, 0.01])
        assert table["l1_s"].iloc[1] < table["l1_s"].iloc[0]
        assert (table["front_error_c"] <= 0.2).all()
