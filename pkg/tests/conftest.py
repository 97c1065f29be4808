"""
테스트 설정 및 공통 fixtures

pytest 전역 fixtures 및 테스트 환경 설정
"""

import os
import sys
from pathlib import Path

import pytest
import yaml

# 환경 변수 설정 (테스트용)
os.environ.setdefault("LOG_LEVEL", "WARNING")

# 프로젝트 루트를 Python path에 추가
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


# =============================================================================
# Config Fixtures
# =============================================================================

@pytest.fixture(autouse=True)
def reset_config_cache():
    """설정 모듈의 전역 캐시 초기화"""
    import app.config as config_module
    config_module._config = None
    config_module._settings = None
    yield
    config_module._config = None
    config_module._settings = None


@pytest.fixture
def mock_env_vars(monkeypatch, tmp_path):
    """테스트용 환경 변수 설정"""
    env_vars = {
        "DEBUG": "false",
        "LOG_LEVEL": "WARNING",
        "PROJECT_ROOT": str(tmp_path),
        "SOLVER_CONFIG": "config/solver.yaml",
    }
    for key, value in env_vars.items():
        monkeypatch.setenv(key, value)
    return env_vars


@pytest.fixture
def write_yaml(tmp_path):
    """딕셔너리를 YAML 파일로 기록하는 헬퍼"""
    def _write(data, name: str = "solver.yaml") -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def small_config_data():
    """빠른 풀이용 설정 (작은 족, 작은 격자)"""
    return {
        "model": {"m0": 1.0, "m": 1.0, "gamma": 2.0, "beta": 1.0},
        "t_inj": 1.0,
        "grid": {"nx": 11, "nt": 6, "x_max": 1.0, "t_max": 0.5, "n_phi": 60, "n_lagrange": 9},
        "family": {"n_ta": 24, "n_jouguet": 24, "refine": 4, "n_below": 32},
    }


# =============================================================================
# Model Fixtures
# =============================================================================

@pytest.fixture(scope="session")
def rm1():
    """기준 모델 RM1 (m0=1, m=1, gamma=2, beta=1)"""
    from app.model import ModelPair
    return ModelPair.reference()


@pytest.fixture(scope="session")
def rm1_flux(rm1):
    from app.model import LagrangeFlux
    return LagrangeFlux(rm1)


@pytest.fixture(scope="session")
def rm1_zeta(rm1):
    """t_inj = 1 의 zeta 해"""
    from app.zeta_solution import build_zeta
    return build_zeta(rm1, 1.0)


@pytest.fixture(scope="session")
def one_change_flux():
    """(F5) 부호 변화가 하나인 모델 (m = 0.01)"""
    from app.model import LagrangeFlux, ModelPair
    return LagrangeFlux(ModelPair.from_params(1.0, 0.01, 2.0, 1.0))


# =============================================================================
# Solution Fixtures (세션 단위로 한 번만 구성)
# =============================================================================

@pytest.fixture(scope="session")
def small_options():
    from app.u_solution import FamilyOptions
    return FamilyOptions(n_ta=24, n_jouguet=24, refine=4, n_below=32)


@pytest.fixture(scope="session")
def rm1_solution(rm1_flux, rm1_zeta, small_options):
    """RM1 전체 U 해 (작은 족)"""
    from app.u_solution import build_solution
    return build_solution(rm1_flux, rm1_zeta, small_options)


@pytest.fixture(scope="session")
def rm1_cone(rm1_solution):
    return rm1_solution.cone


@pytest.fixture(scope="session")
def one_change_cone(one_change_flux, small_options):
    """부호 변화 하나인 모델의 cone"""
    from app.u_solution import build_cone
    from app.zeta_solution import build_zeta
    zf = build_zeta(one_change_flux.model, 1.0)
    return build_cone(one_change_flux, zf, small_options)
