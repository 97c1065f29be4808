"""
농도(zeta) 해 모듈

Lagrange 좌표 (phi, x)에서 분리된 크로마토그래피 방정식 zeta_x + a(zeta)_phi = 0 의 해:
직선 전면 OA, 점 T = (t_inj, 0)에서 나오는 희박파 부채꼴, 닫힌 형태의 곡선 전면 Phi.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.integrate import OdeSolution, solve_ivp
from scipy.optimize import brentq

from app.exceptions import ConvergenceError
from app.model import AdsorptionModel, ModelPair

logger = logging.getLogger(__name__)

# x < x_A 판정 허용 오차 (상대)
_X_TOL = 1e-12


@dataclass(frozen=True)
class ZetaField:
    """zeta(phi, x) 해와 전면 기하"""
    adsorption: AdsorptionModel
    t_inj: float
    # v(1, 0) = a(1) - a(0): 직선 전면 기울기
    v10: float
    # a_zeta(1), a_zeta(0): 부채꼴 아래/위 경계 기울기
    a1: float
    a0: float
    x_A: float
    phi_A: float

    # ==================== 곡선 전면 ====================

    def _require_curved(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_A * (1.0 - _X_TOL)):
            raise ValueError(f"x는 x_A={self.x_A} 이상이어야 합니다")
        return np.maximum(x, self.x_A)

    def zeta_front(self, x):
        """전면 바로 위의 농도 zeta_Phi(x) = q(t_inj / x)"""
        x = self._require_curved(x)
        return np.minimum(self.adsorption.q(self.t_inj / x), 1.0)

    def front_phi(self, x):
        """Phi(x) = t_inj + a_zeta(zeta_Phi(x)) x"""
        x = self._require_curved(x)
        return self.t_inj + self.adsorption.a_z(self.zeta_front(x)) * x

    def front_slope(self, x):
        """Phi'(x) = a(zeta_Phi) / zeta_Phi"""
        return self.adsorption.chord_slope(self.zeta_front(x))

    def front(self, x):
        """전체 전면: x <= x_A 에서 v10 x, 이후 Phi(x)"""
        x = np.asarray(x, dtype=float)
        curved = self.t_inj + self.adsorption.a_z(
            np.minimum(self.adsorption.q(self.t_inj / np.maximum(x, self.x_A)), 1.0)
        ) * np.maximum(x, self.x_A)
        return np.where(x <= self.x_A, self.v10 * x, curved)

    def front_inverse(self, phi: float) -> float:
        """front(x) = phi 인 x (front는 x에 대해 증가)"""
        if phi < 0:
            raise ValueError(f"phi는 0 이상이어야 합니다: {phi}")
        if phi <= self.phi_A:
            return phi / self.v10
        hi = 2.0 * self.x_A
        while float(self.front(hi)) < phi:
            hi *= 2.0
        return brentq(lambda x: float(self.front(x)) - phi, self.x_A, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)

    def zeta_at_front_phi(self, phi: float) -> float:
        """전면 위 점 phi에서의 zeta_Phi"""
        x = self.front_inverse(phi)
        return 1.0 if x <= self.x_A else float(self.zeta_front(x))

    def integrate_front_ode(self, x_end: float, rtol: float = 1e-11) -> OdeSolution:
        """
        dPhi/dx = a(zeta)/zeta, zeta = g((Phi - t_inj)/x) 를 (x_A, phi_A)부터 적분합니다.

        닫힌 형태 Phi와의 일치 검사용입니다.

        Raises:
            ConvergenceError: solve_ivp 실패
        """
        if x_end <= self.x_A:
            raise ValueError(f"x_end는 x_A={self.x_A} 보다 커야 합니다: {x_end}")
        ad = self.adsorption

        def rhs(x, y):
            slope = np.clip((y[0] - self.t_inj) / x, self.a1, self.a0)
            zeta = float(np.clip(ad.g(slope), 1e-300, 1.0))
            return [float(ad.chord_slope(zeta))]

        sol = solve_ivp(
            rhs, (self.x_A, x_end), [self.phi_A],
            method="DOP853", rtol=rtol, atol=1e-12, dense_output=True,
        )
        if not sol.success:
            raise ConvergenceError(f"전면 ODE 적분 실패: {sol.message}")
        return sol.sol

    # ==================== 부채꼴 극좌표 ====================

    def psi_front(self, zeta):
        """전면 위 점의 반지름 좌표 psi_Phi(zeta)"""
        ad = self.adsorption
        zeta = np.asarray(zeta, dtype=float)
        return (
            np.log(self.t_inj) - np.log(ad.p(zeta)) + 0.5 * np.log1p(ad.a_z(zeta) ** 2)
        )

    def psi_ta(self, slope):
        """원점 부채꼴에서 기울기 slope 인 특성선이 TA와 만나는 점의 psi"""
        slope = np.asarray(slope, dtype=float)
        if np.any(slope <= self.a1):
            raise ValueError(f"slope는 a_zeta(1)={self.a1} 보다 커야 합니다")
        return np.log(self.t_inj / (slope - self.a1)) + 0.5 * np.log1p(self.a1 ** 2)

    def polar_coordinates(self, phi: float, x: float) -> Tuple[float, float]:
        """(phi, x) -> (zeta, psi), x > 0 인 부채꼴 내부 점"""
        if x <= 0:
            raise ValueError(f"x는 양수여야 합니다: {x}")
        slope = (phi - self.t_inj) / x
        zeta = float(np.clip(self.adsorption.g(np.clip(slope, self.a1, self.a0)), 0.0, 1.0))
        psi = float(np.log(x) + 0.5 * np.log1p(slope * slope))
        return zeta, psi

    def cone_point(self, zeta, psi):
        """(zeta, psi) -> (phi, x)"""
        a_z = self.adsorption.a_z(zeta)
        x = np.exp(psi) / np.sqrt(1.0 + a_z * a_z)
        return self.t_inj + a_z * x, x

    # ==================== 점 평가 ====================

    def eval_zeta(self, phi, x):
        """
        zeta(phi, x)를 평가합니다 (배열 가능).

        불연속선 위의 점은 phi가 큰 쪽 값을 갖습니다.
        """
        phi, x = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(x, dtype=float))
        ad = self.adsorption
        safe_x = np.where(x > 0.0, x, 1.0)
        slope = (phi - self.t_inj) / safe_x
        in_fan = np.clip(ad.g(np.clip(slope, self.a1, self.a0)), 0.0, 1.0)

        result = np.where(phi < self.t_inj + self.a0 * x, in_fan, 0.0)
        result = np.where(phi <= self.t_inj + self.a1 * x, 1.0, result)
        result = np.where(phi < self.front(x), 0.0, result)
        at_axis = np.where(phi <= self.t_inj, 1.0, 0.0)
        result = np.where(x > 0.0, result, at_axis)
        return result if result.ndim else float(result)

    def front_frame(self, x_grid) -> pd.DataFrame:
        """x, phi, zeta, slope 열의 전면 표"""
        x_grid = np.asarray(x_grid, dtype=float)
        if x_grid.size == 0:
            return pd.DataFrame(columns=["x", "phi", "zeta", "slope"])
        curved = x_grid >= self.x_A
        zeta = np.ones_like(x_grid)
        slope = np.full_like(x_grid, self.v10)
        zeta[curved] = self.zeta_front(x_grid[curved])
        slope[curved] = self.front_slope(x_grid[curved])
        return pd.DataFrame({"x": x_grid, "phi": self.front(x_grid), "zeta": zeta, "slope": slope})


def build_zeta(model: ModelPair, t_inj: float) -> ZetaField:
    """
    주입량 t_inj에 대한 zeta 해를 구성합니다.

    Args:
        model: 모델 쌍
        t_inj: 주입된 슬러그의 포텐셜 부피

    Returns:
        ZetaField
    """
    if not t_inj > 0:
        raise ValueError(f"t_inj는 양수여야 합니다: {t_inj}")
    ad = model.adsorption
    v10 = float(ad.a(1.0) - ad.a(0.0))
    a1 = float(ad.a_z(1.0))
    a0 = float(ad.a_z(0.0))
    x_A = t_inj / (v10 - a1)
    zf = ZetaField(ad, t_inj, v10, a1, a0, x_A, v10 * x_A)
    logger.info(f"zeta 해 구성: t_inj={t_inj}, v10={v10:.6g}, x_A={x_A:.6g}, phi_A={zf.phi_A:.6g}")
    return zf


def front_phi(zf: ZetaField, x: float) -> float:
    return float(zf.front_phi(x))


def eval_zeta(zf: ZetaField, phi: float, x: float) -> float:
    return zf.eval_zeta(phi, x)
