"""
설정 모듈

풀이 설정(YAML)과 프로세스 설정(환경 변수)을 관리합니다.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.model import ModelPair
from app.u_solution import FamilyOptions

# .env 파일에서 환경변수 로드 (있는 경우)
load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


# =============================================================================
# 프로세스 설정 (환경 변수)
# =============================================================================

@dataclass
class AppSettings:
    """프로세스 설정"""
    debug: bool = field(
        default_factory=lambda: os.getenv("DEBUG", "false").lower() == "true"
    )
    log_level: str = field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))
    # 상대 경로 기준 디렉터리 (비어 있으면 현재 디렉터리)
    project_root: str = field(default_factory=lambda: os.getenv("PROJECT_ROOT", ""))
    # 기본 풀이 설정 파일
    config_file: str = field(
        default_factory=lambda: os.getenv("SOLVER_CONFIG", "config/solver.yaml")
    )

    @property
    def effective_log_level(self) -> str:
        return "DEBUG" if self.debug else self.log_level.upper()

    def resolve(self, path: Union[str, Path]) -> Path:
        """상대 경로를 project_root 기준으로 변환합니다."""
        path = Path(path)
        if not path.is_absolute() and self.project_root:
            path = Path(self.project_root) / path
        return path


def configure_logging(settings: Optional[AppSettings] = None) -> None:
    """루트 로거를 설정합니다."""
    settings = settings or get_settings()
    level = getattr(logging, settings.effective_log_level, logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


# =============================================================================
# 풀이 설정 (YAML)
# =============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(_Strict):
    """유량/흡착 모델 매개변수"""
    m0: float = Field(1.0, gt=0)
    m: float = Field(1.0, ge=0)
    gamma: float = Field(2.0, gt=0)
    beta: float = Field(1.0, gt=0)

    def build(self) -> ModelPair:
        return ModelPair.from_params(self.m0, self.m, self.gamma, self.beta)


class GridSection(_Strict):
    """출력 격자"""
    nx: int = Field(121, ge=2)
    nt: int = Field(61, ge=2)
    x_max: float = Field(3.0, gt=0)
    t_max: float = Field(1.5, gt=0)
    n_phi: int = Field(400, ge=2)
    # Lagrange 장 출력 격자 (phi, x) 크기
    n_lagrange: int = Field(41, ge=2)


class ToleranceSection(_Strict):
    """허용 오차"""
    root: float = Field(1e-12, gt=0)
    ode_rtol: float = Field(1e-9, gt=0)
    ode_atol: float = Field(1e-10, gt=0)
    front_event: float = Field(1e-9, gt=0)


class FamilySection(_Strict):
    """특성곡선 족 크기"""
    n_ta: int = Field(128, ge=2)
    n_jouguet: int = Field(128, ge=2)
    refine: int = Field(8, ge=0)
    zeta_min: float = Field(1e-6, gt=0, lt=1e-2)
    workers: int = Field(1, ge=1)
    n_below: int = Field(256, ge=8)


class FVSection(_Strict):
    """유한체적 비교 설정"""
    enabled: bool = False
    eps_list: List[float] = Field(default_factory=lambda: [4e-3, 2e-3, 1e-3])
    cfl: float = Field(0.4, gt=0, le=0.4)
    length: float = Field(3.0, gt=0)
    final_time: float = Field(1.5, gt=0)
    nt_out: int = Field(31, ge=2)
    dx_per_eps: float = Field(0.5, gt=0)

    @field_validator("eps_list")
    @classmethod
    def _positive_eps(cls, value: List[float]) -> List[float]:
        if not value or any(eps <= 0 for eps in value):
            raise ValueError("eps_list는 비어 있지 않은 양수 목록이어야 합니다")
        return value


class SolveConfig(_Strict):
    """풀이 설정 전체"""
    model: ModelSection = Field(default_factory=ModelSection)
    t_inj: float = Field(1.0, gt=0)
    grid: GridSection = Field(default_factory=GridSection)
    tolerances: ToleranceSection = Field(default_factory=ToleranceSection)
    family: FamilySection = Field(default_factory=FamilySection)
    fv: FVSection = Field(default_factory=FVSection)
    output_dir: str = "output"

    def family_options(self) -> FamilyOptions:
        """특성곡선 족 옵션으로 변환"""
        return FamilyOptions(
            n_ta=self.family.n_ta,
            n_jouguet=self.family.n_jouguet,
            refine=self.family.refine,
            zeta_min=self.family.zeta_min,
            workers=self.family.workers,
            ode_rtol=self.tolerances.ode_rtol,
            ode_atol=self.tolerances.ode_atol,
            front_event=self.tolerances.front_event,
            root_tol=self.tolerances.root,
            n_below=self.family.n_below,
        )

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(), sort_keys=False, allow_unicode=True)


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    return f"{location}: {first['msg']}"


def parse_config(data: Optional[Dict[str, Any]]) -> SolveConfig:
    """
    딕셔너리에서 SolveConfig를 만듭니다.

    Raises:
        ValueError: 알 수 없는 키 또는 잘못된 값 (필드 이름 포함)
    """
    try:
        return SolveConfig.model_validate(data or {})
    except ValidationError as e:
        raise ValueError(f"설정 오류 - {_first_error(e)}") from e


def load_config(file_path: Union[str, Path], settings: Optional[AppSettings] = None) -> SolveConfig:
    """
    YAML 파일에서 풀이 설정을 로드합니다.

    Args:
        file_path: 설정 파일 경로 (상대 경로는 PROJECT_ROOT 기준)
        settings: 프로세스 설정 (없으면 전역 설정)

    Returns:
        검증된 SolveConfig

    Raises:
        FileNotFoundError: 파일이 없음
        ValueError: YAML 파싱 오류 또는 설정 검증 실패
    """
    path = (settings or get_settings()).resolve(file_path)
    if not path.exists():
        raise FileNotFoundError(f"설정 파일이 없습니다: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"YAML 파싱 오류: {e}")
        raise ValueError(f"YAML 파싱 오류: {path}") from e

    if data is not None and not isinstance(data, dict):
        raise ValueError(f"설정 파일 최상위는 매핑이어야 합니다: {path}")
    config = parse_config(data)
    logger.info(f"설정 로드 완료: {path}")
    return config


# 전역 인스턴스 (lazy initialization)
_settings: Optional[AppSettings] = None
_config: Optional[SolveConfig] = None


def get_settings() -> AppSettings:
    """프로세스 설정 인스턴스를 반환합니다."""
    global _settings
    if _settings is None:
        _settings = AppSettings()
    return _settings


def get_config() -> SolveConfig:
    """기본 풀이 설정을 반환합니다 (파일이 없으면 기본값)."""
    global _config
    if _config is None:
        _config = _load_default()
    return _config


def reload_config() -> SolveConfig:
    """설정을 다시 로드합니다."""
    global _settings, _config
    _settings = AppSettings()
    _config = _load_default()
    return _config


def _load_default() -> SolveConfig:
    settings = get_settings()
    path = settings.resolve(settings.config_file)
    if not path.exists():
        logger.warning(f"기본 설정 파일이 없어 기본값을 사용합니다: {path}")
        return SolveConfig()
    return load_config(path, settings)
