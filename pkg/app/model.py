"""
물리 모델 모듈

분류 유량 함수 f(s, c), Langmuir 흡착 등온선 a(c),
Lagrange 좌표 유량 F(U, zeta) = -s * U (f(s, zeta) = 1/U)와 그 도함수를 제공합니다.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from app.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

# 근 찾기 허용 오차 (미지수 기준)
ROOT_XTOL = 1e-14
# U 상한: 이보다 큰 U는 f = 1/U_CAP 로 고정
U_CAP = 1e8
# 벡터화 이분법 반복 횟수 (구간 [0, 1] -> 2^-64)
_BISECT_ITERATIONS = 64


# =============================================================================
# 분류 유량 함수
# =============================================================================

@dataclass(frozen=True)
class FluidModel:
    """Corey 계열 분류 유량 f(s, c) = s^2 / (s^2 + M(c) (1-s)^2), M(c) = m0 (1 + m c)"""
    m0: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not self.m0 > 0:
            raise ValueError(f"m0는 양수여야 합니다: {self.m0}")
        if self.m < 0:
            raise ValueError(f"m은 0 이상이어야 합니다: {self.m}")

    def mobility(self, c):
        return self.m0 * (1.0 + self.m * np.asarray(c, dtype=float))

    @property
    def dmobility(self) -> float:
        return self.m0 * self.m

    def _denominator(self, s, c):
        s = np.asarray(s, dtype=float)
        return s * s + self.mobility(c) * (1.0 - s) ** 2

    def f(self, s, c):
        s = np.asarray(s, dtype=float)
        return s * s / self._denominator(s, c)

    def f_s(self, s, c):
        s = np.asarray(s, dtype=float)
        d = self._denominator(s, c)
        return 2.0 * self.mobility(c) * s * (1.0 - s) / (d * d)

    def f_c(self, s, c):
        s = np.asarray(s, dtype=float)
        d = self._denominator(s, c)
        return -self.dmobility * (s * (1.0 - s)) ** 2 / (d * d)

    def f_ss(self, s, c):
        s = np.asarray(s, dtype=float)
        mob = self.mobility(c)
        d = self._denominator(s, c)
        d_s = 2.0 * s - 2.0 * mob * (1.0 - s)
        return 2.0 * mob * ((1.0 - 2.0 * s) * d - 2.0 * s * (1.0 - s) * d_s) / d ** 3

    def f_sc(self, s, c):
        s = np.asarray(s, dtype=float)
        mob = self.mobility(c)
        d = self._denominator(s, c)
        return (
            2.0 * self.dmobility * s * (1.0 - s) * (s * s - mob * (1.0 - s) ** 2) / d ** 3
        )


# =============================================================================
# 흡착 등온선
# =============================================================================

@dataclass(frozen=True)
class AdsorptionModel:
    """Langmuir 흡착 a(c) = gamma * beta * c / (1 + beta * c)"""
    gamma: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma는 양수여야 합니다: {self.gamma}")
        if not self.beta > 0:
            raise ValueError(f"beta는 양수여야 합니다: {self.beta}")

    def a(self, z):
        z = np.asarray(z, dtype=float)
        return self.gamma * self.beta * z / (1.0 + self.beta * z)

    def a_z(self, z):
        z = np.asarray(z, dtype=float)
        return self.gamma * self.beta / (1.0 + self.beta * z) ** 2

    def a_zz(self, z):
        z = np.asarray(z, dtype=float)
        return -2.0 * self.gamma * self.beta ** 2 / (1.0 + self.beta * z) ** 3

    def g(self, y):
        """a_zeta의 역함수"""
        y = np.asarray(y, dtype=float)
        return (np.sqrt(self.gamma * self.beta / y) - 1.0) / self.beta

    def p(self, z):
        """p(zeta) = a - zeta * a_zeta"""
        z = np.asarray(z, dtype=float)
        return self.gamma * (self.beta * z / (1.0 + self.beta * z)) ** 2

    def p_z(self, z):
        return -np.asarray(z, dtype=float) * self.a_zz(z)

    def q(self, y):
        """p의 역함수 (닫힌 형태)"""
        r = np.sqrt(np.asarray(y, dtype=float) / self.gamma)
        return r / (self.beta * (1.0 - r))

    def q_bracketed(self, y: float) -> float:
        """p의 역함수 (구간 근 찾기)"""
        if y <= 0.0:
            return 0.0
        hi = 1.0
        while self.p(hi) < y:
            hi *= 2.0
        return brentq(lambda z: float(self.p(z)) - y, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def b(self, z):
        """b(zeta) = a/zeta - a_zeta"""
        z = np.asarray(z, dtype=float)
        return self.gamma * self.beta ** 2 * z / (1.0 + self.beta * z) ** 2

    def b_over_zeta(self, z):
        # 0에서의 극한 -a_zz(0)/2 와 연속
        z = np.asarray(z, dtype=float)
        return self.gamma * self.beta ** 2 / (1.0 + self.beta * z) ** 2

    def chord_slope(self, z):
        """a(zeta)/zeta (0에서 a_zeta(0))"""
        z = np.asarray(z, dtype=float)
        return self.gamma * self.beta / (1.0 + self.beta * z)

    def concentration_from_mass(self, mass, s):
        """c * s + a(c) = mass 를 c에 대해 풉니다 (c는 mass에 대해 단조 증가)."""
        mass = np.asarray(mass, dtype=float)
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        # beta s c^2 + (s + beta (gamma - mass)) c - mass = 0
        lin = s + self.beta * (self.gamma - mass)
        disc = np.sqrt(lin * lin + 4.0 * self.beta * s * mass)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(lin + disc > 0.0, 2.0 * mass / (lin + disc), np.inf)
        return np.where(mass <= 0.0, 0.0, c)


# =============================================================================
# 모델 쌍
# =============================================================================

@dataclass(frozen=True)
class ModelPair:
    """유량 함수와 흡착 함수 쌍"""
    fluid: FluidModel = field(default_factory=FluidModel)
    adsorption: AdsorptionModel = field(default_factory=AdsorptionModel)

    @classmethod
    def from_params(cls, m0: float, m: float, gamma: float, beta: float) -> "ModelPair":
        return cls(FluidModel(m0=m0, m=m), AdsorptionModel(gamma=gamma, beta=beta))

    @classmethod
    def reference(cls) -> "ModelPair":
        """기준 모델 RM1 (m0=1, m=1, gamma=2, beta=1)"""
        return cls.from_params(1.0, 1.0, 2.0, 1.0)

    @cached_property
    def c1_norm(self) -> float:
        """||f||_C1 추정값 (격자 샘플링)"""
        s, c = np.meshgrid(np.linspace(0.0, 1.0, 257), np.linspace(0.0, 1.0, 65))
        fl = self.fluid
        return float(
            np.max(np.abs(fl.f(s, c))) + np.max(np.abs(fl.f_s(s, c))) + np.max(np.abs(fl.f_c(s, c)))
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "m0": self.fluid.m0,
            "m": self.fluid.m,
            "gamma": self.adsorption.gamma,
            "beta": self.adsorption.beta,
        }


# =============================================================================
# Lagrange 유량
# =============================================================================

class FluxDerivatives(NamedTuple):
    """F와 편도함수 묶음"""
    F: float
    F_U: float
    F_z: float
    F_UU: float
    F_Uz: float


class LagrangeFlux:
    """
    Lagrange 좌표 유량 F(U, zeta) = -vartheta_zeta(U) * U

    vartheta_zeta는 theta_c(s) = 1/f(s, c)의 s에 대한 역함수입니다.
    """

    def __init__(self, model: ModelPair):
        self.model = model
        self.fluid = model.fluid
        self.adsorption = model.adsorption

    def theta(self, s, c):
        return 1.0 / self.fluid.f(s, c)

    def vartheta(self, U: float, zeta: float) -> float:
        """f(s, zeta) = 1/U 를 만족하는 s in (0, 1]"""
        if U < 1.0:
            raise ValueError(f"U는 1 이상이어야 합니다: {U}")
        if U == 1.0:
            return 1.0
        target = 1.0 / min(U, U_CAP)
        fl = self.fluid
        try:
            return brentq(
                lambda s: float(fl.f(s, zeta)) - target,
                0.0, 1.0, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200,
            )
        except (RuntimeError, ValueError) as e:
            logger.error(f"vartheta 수렴 실패: U={U}, zeta={zeta}", exc_info=True)
            raise ConvergenceError(f"vartheta 근 찾기 실패 (U={U}, zeta={zeta})") from e

    def vartheta_many(self, U, zeta) -> np.ndarray:
        """vartheta의 배열 버전 (벡터화 이분법)"""
        U, zeta = np.broadcast_arrays(np.asarray(U, dtype=float), np.asarray(zeta, dtype=float))
        if np.any(U < 1.0):
            raise ValueError("U는 1 이상이어야 합니다")
        target = 1.0 / np.minimum(U, U_CAP)
        lo = np.zeros(U.shape)
        hi = np.ones(U.shape)
        for _ in range(_BISECT_ITERATIONS):
            mid = 0.5 * (lo + hi)
            above = self.fluid.f(mid, zeta) >= target
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return np.where(U == 1.0, 1.0, hi)

    def flux(self, U: float, zeta: float) -> float:
        if np.isinf(U):
            return -np.inf
        return -self.vartheta(U, zeta) * U

    def flux_many(self, U, zeta) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        return -self.vartheta_many(U, zeta) * U

    def derivs_at_saturation(self, s: float, zeta: float) -> FluxDerivatives:
        """s in (0, 1)에서 F와 편도함수 (U = 1/f(s, zeta))"""
        fl = self.fluid
        f = float(fl.f(s, zeta))
        fs = float(fl.f_s(s, zeta))
        fc = float(fl.f_c(s, zeta))
        fss = float(fl.f_ss(s, zeta))
        fsc = float(fl.f_sc(s, zeta))
        U = 1.0 / f
        return FluxDerivatives(
            F=-s * U,
            F_U=f / fs - s,
            F_z=U * fc / fs,
            F_UU=f ** 3 * fss / fs ** 3,
            F_Uz=(fc * fs - f * fsc) / fs ** 2 + f * fss * fc / fs ** 3,
        )

    def derivs(self, U: float, zeta: float) -> FluxDerivatives:
        if not U > 1.0:
            raise ValueError(f"도함수는 U > 1 에서만 정의됩니다: {U}")
        return self.derivs_at_saturation(self.vartheta(U, zeta), zeta)

    def flux_u(self, U: float, zeta: float) -> float:
        """F_U (U = 1 또는 무한대에서는 +inf)"""
        if U <= 1.0 or np.isinf(U):
            return np.inf
        return self.derivs(U, zeta).F_U

    # ==================== 특수점 ====================

    def welge_saturation(self, zeta: float) -> float:
        """f = s f_s 인 접점 포화도 (F_U = 0)"""
        fl = self.fluid
        return brentq(
            lambda s: float(fl.f(s, zeta) - s * fl.f_s(s, zeta)),
            1e-9, 1.0, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps,
        )

    def inflection_saturation(self, zeta: float) -> float:
        """f_ss = 0 인 변곡점 포화도"""
        fl = self.fluid
        return brentq(lambda s: float(fl.f_ss(s, zeta)), 0.0, 1.0, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)

    def u_max(self, zeta: float) -> float:
        return 1.0 / float(self.fluid.f(self.welge_saturation(zeta), zeta))

    def u_inflection(self, zeta: float) -> float:
        return 1.0 / float(self.fluid.f(self.inflection_saturation(zeta), zeta))

    def saturation_for_slope(self, slope: float, zeta: float) -> float:
        """F_U(U, zeta) = slope > 0 인 U에 대응하는 s (U in (1, U_max))"""
        if not slope > 0:
            raise ValueError(f"slope는 양수여야 합니다: {slope}")
        fl = self.fluid
        s_w = self.welge_saturation(zeta)

        def residual(s):
            return float(fl.f(s, zeta) / fl.f_s(s, zeta)) - s - slope

        hi = 1.0 - 1e-15
        if residual(hi) < 0:
            raise ConvergenceError(f"F_U = {slope} 구간을 찾을 수 없습니다 (zeta={zeta})")
        return brentq(residual, s_w, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=300)

    def u_for_slope(self, slope: float, zeta: float) -> float:
        """F_U(., zeta)의 (1, U_max) 구간 역함수"""
        return 1.0 / float(self.fluid.f(self.saturation_for_slope(slope, zeta), zeta))

    def u_for_slope_many(self, slopes, zeta: float) -> np.ndarray:
        """u_for_slope의 배열 버전. slope = 0 은 U_max, slope = inf 는 U = 1 입니다."""
        slopes = np.asarray(slopes, dtype=float)
        if np.any(slopes < 0):
            raise ValueError("slope는 0 이상이어야 합니다")
        fl = self.fluid
        lo = np.full(slopes.shape, self.welge_saturation(zeta))
        hi = np.ones(slopes.shape)
        # (s_w, 1)에서 F_U = f/f_s - s 는 s에 대해 증가
        for _ in range(_BISECT_ITERATIONS):
            mid = 0.5 * (lo + hi)
            above = fl.f(mid, zeta) / fl.f_s(mid, zeta) - mid >= slopes
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return 1.0 / fl.f(0.5 * (lo + hi), zeta)


# =============================================================================
# 가정 검증
# =============================================================================

@dataclass
class AssumptionCheck:
    """단일 가정 검증 결과"""
    name: str
    passed: bool
    worst: float
    s: Optional[float] = None
    c: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "s": self.s,
            "c": self.c,
            "detail": self.detail,
        }


@dataclass
class AssumptionReport:
    """모델 구조 가정 검증 보고서"""
    checks: List[AssumptionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> AssumptionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _worst(values: np.ndarray, s_grid: np.ndarray, c_grid: np.ndarray, pick_max: bool):
    idx = np.unravel_index(np.argmax(values) if pick_max else np.argmin(values), values.shape)
    return float(values[idx]), float(s_grid[idx]), float(c_grid[idx])


def validate_assumptions(model: ModelPair, n: int = 64) -> AssumptionReport:
    """
    유량/흡착 함수의 구조 가정(F1-F4, A1-A3)을 격자에서 검사합니다.

    Args:
        model: 모델 쌍
        n: 격자 해상도 (16 이상)

    Returns:
        검사별 통과 여부와 최악 샘플을 담은 보고서
    """
    if n < 16:
        raise ValueError(f"n은 16 이상이어야 합니다: {n}")

    fl = model.fluid
    ad = model.adsorption
    report = AssumptionReport()
    c_line = np.linspace(0.0, 1.0, n)
    s_inner = np.linspace(0.0, 1.0, n + 2)[1:-1]
    c_inner = np.linspace(0.0, 1.0, n + 2)[1:-1]

    # (F1) 경계값
    dev = np.maximum(np.abs(fl.f(0.0, c_line)), np.abs(fl.f(1.0, c_line) - 1.0))
    i = int(np.argmax(dev))
    report.checks.append(AssumptionCheck("F1", bool(dev[i] <= 1e-14), float(dev[i]), None, float(c_line[i])))

    # (F2) 단조성
    S, C = np.meshgrid(s_inner, c_line, indexing="ij")
    worst, ws, wc = _worst(fl.f_s(S, C), S, C, pick_max=False)
    edge = float(max(np.max(np.abs(fl.f_s(0.0, c_line))), np.max(np.abs(fl.f_s(1.0, c_line)))))
    report.checks.append(
        AssumptionCheck("F2", bool(worst > 0 and edge <= 1e-14), worst, ws, wc, f"edge={edge:.3e}")
    )

    # (F3) S자형: 변곡점 하나
    fss = fl.f_ss(S, C)
    bad_count = 0
    bad_c = None
    for j in range(len(c_line)):
        signs = np.sign(fss[:, j])
        signs = signs[signs != 0]
        changes = int(np.count_nonzero(np.diff(signs)))
        if changes != 1 or signs[0] < 0 or signs[-1] > 0:
            bad_count += 1
            bad_c = float(c_line[j])
    report.checks.append(AssumptionCheck("F3", bad_count == 0, float(bad_count), None, bad_c))

    # (F4) c에 대해 감소
    S2, C2 = np.meshgrid(s_inner, c_inner, indexing="ij")
    worst, ws, wc = _worst(fl.f_c(S2, C2), S2, C2, pick_max=True)
    report.checks.append(AssumptionCheck("F4", bool(worst < 0), worst, ws, wc))

    # (A1) a(0) = 0
    a0 = float(abs(ad.a(0.0)))
    report.checks.append(AssumptionCheck("A1", a0 == 0.0, a0, None, 0.0))

    # (A2) a_zeta > 0
    az = ad.a_z(c_line)
    i = int(np.argmin(az))
    report.checks.append(AssumptionCheck("A2", bool(az[i] > 0), float(az[i]), None, float(c_line[i])))

    # (A3) a_zetazeta < 0
    azz = ad.a_zz(c_line)
    i = int(np.argmax(azz))
    report.checks.append(AssumptionCheck("A3", bool(azz[i] < 0), float(azz[i]), None, float(c_line[i])))

    # 보조 항등식: g(a_zeta) = zeta, q(p) = zeta, b > 0, (a/zeta)' < 0
    z = c_line[1:]
    inv_err = float(
        max(
            np.max(np.abs(ad.g(ad.a_z(z)) - z) / z),
            np.max(np.abs(ad.q(ad.p(z)) - z) / z),
        )
    )
    report.checks.append(AssumptionCheck("inverses", inv_err <= 1e-12, inv_err))
    bmin = float(np.min(ad.b(z)))
    report.checks.append(AssumptionCheck("b_positive", bmin > 0, bmin))
    chord_deriv = float(np.max(-ad.p(z) / z ** 2))
    report.checks.append(AssumptionCheck("chord_decreasing", chord_deriv < 0, chord_deriv))

    logger.info(f"모델 가정 검증 완료: passed={report.passed}, failed={report.failed()}")
    return report


# =============================================================================
# 함수형 진입점
# =============================================================================

def vartheta(flux: LagrangeFlux, U: float, zeta: float) -> float:
    """f(s, zeta) = 1/U 인 s"""
    return flux.vartheta(U, zeta)


def flux_derivs(flux: LagrangeFlux, U: float, zeta: float) -> FluxDerivatives:
    """(F, F_U, F_zeta, F_UU, F_Uzeta) at (U, zeta)"""
    return flux.derivs(U, zeta)
