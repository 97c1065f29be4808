"""
U 해 모듈

Lagrange 좌표에서 U = 1/f 장을 구성합니다.

- 원점 삼각형 △_O: zeta = 1 부채꼴 U = G(phi/x)
- 부채꼴 영역(cone): (zeta, U), (zeta, psi) 분리 ODE로 적분한 특성곡선 족
  (TA에서 출발하는 족과 Jouguet 조건으로 전면에서 출발하는 족)
- cone 위: zeta = 0 직선 특성선
- 전면 아래: 전면 RH 조건에서 얻은 U-(x)를 나르는 직선 특성선
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import OdeSolution, solve_ivp
from scipy.interpolate import PchipInterpolator, pchip_interpolate
from scipy.optimize import brentq

from app.admissibility import (
    LagrangeShock,
    ShockData,
    ShockVerdict,
    c_shock_admissible,
    c_shock_roots,
    map_shock_from_lagrange,
    rh_residual,
    s_shock_admissible,
)
from app.exceptions import (
    ConsistencyError,
    ConvergenceError,
    RegimeError,
    UnsupportedRegionError,
)
from app.model import LagrangeFlux
from app.zeta_solution import ZetaField

logger = logging.getLogger(__name__)

TA = "ta"
JOUGUET = "jouguet"

# TA 족 최소 U0 - 1
U0_FLOOR = 1e-8
# 아래 OA 모드 판정 허용 오차
DEGENERATE_TOL = 1e-9
# F5 부호 변화 허용 최대 개수
MAX_SIGN_CHANGES = 16
# 족 순서 검사 허용 오차
ORDER_TOL = 1e-8
# cone 평가 배치 크기
_CHUNK = 2048


@dataclass(frozen=True)
class FamilyOptions:
    """특성곡선 족 구성 옵션"""
    n_ta: int = 128
    n_jouguet: int = 128
    refine: int = 8
    zeta_min: float = 1e-6
    workers: int = 1
    ode_rtol: float = 1e-9
    ode_atol: float = 1e-10
    front_event: float = 1e-9
    root_tol: float = 1e-10
    n_below: int = 256
    # 전면 아래 표의 x 범위 (0이면 8 x_A)
    x_max: float = 0.0

    def __post_init__(self):
        if self.n_ta < 2 or self.n_jouguet < 2:
            raise ValueError(f"족 크기는 2 이상이어야 합니다: n_ta={self.n_ta}, n_jouguet={self.n_jouguet}")
        if self.refine < 0:
            raise ValueError(f"refine은 0 이상이어야 합니다: {self.refine}")
        if not 0 < self.zeta_min < 1e-2:
            raise ValueError(f"zeta_min은 (0, 0.01) 범위여야 합니다: {self.zeta_min}")
        if self.workers < 1:
            raise ValueError(f"workers는 1 이상이어야 합니다: {self.workers}")
        for name in ("ode_rtol", "ode_atol", "front_event", "root_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}은 양수여야 합니다: {getattr(self, name)}")
        if self.n_below < 8:
            raise ValueError(f"n_below는 8 이상이어야 합니다: {self.n_below}")


# =============================================================================
# 부채꼴 값과 Riemann 자료
# =============================================================================

def fan_value(flux: LagrangeFlux, slope: float, zeta: float) -> float:
    """
    (1, U_max(zeta)) 에서 F_U(U, zeta) = slope 인 U.

    zeta = 1 이면 삼각형 △_O의 부채꼴, zeta = 0 이면 OA 아래 원점 부채꼴입니다.
    """
    if slope < 0:
        raise ValueError(f"slope는 0 이상이어야 합니다: {slope}")
    if slope == 0:
        return flux.u_max(zeta)
    if np.isinf(slope):
        return 1.0
    try:
        return flux.u_for_slope(slope, zeta)
    except ConvergenceError:
        # s = 1 근방에서 F_U가 slope에 닿지 않음
        logger.debug(f"fan_value: slope={slope}가 너무 커서 U = 1로 둡니다")
        return 1.0


def u_plus_OA(flux: LagrangeFlux, v10: float) -> float:
    """F_U(U, 1) = v10 인 U+_OA"""
    try:
        U = flux.u_for_slope(v10, 1.0)
    except (ConvergenceError, ValueError) as e:
        raise RegimeError(f"U+_OA 근을 찾을 수 없습니다 (v10={v10})") from e
    residual = flux.flux_u(U, 1.0) - v10
    if abs(residual) > 1e-10 * max(1.0, v10):
        raise RegimeError(f"U+_OA 잔차가 큽니다: {residual:.3e}")
    return U


def u_minus_OA(flux: LagrangeFlux, u_plus: float, v10: float) -> float:
    """
    (F(U+, 1) - F(U-, 0)) / (U+ - U-) = v10 의 U- > U+ 근 중 가장 큰 것.

    가장 큰 근이 원 좌표에서 u1+ 상태에 해당합니다.
    """
    F_plus = flux.flux(u_plus, 1.0)

    def residual(U):
        return v10 * (u_plus - U) - F_plus + flux.flux(U, 0.0)

    grid = u_plus + (u_plus - 1.0 + 1e-3) * np.geomspace(1e-9, 1e5, 2049)
    values = v10 * (u_plus - grid) - F_plus + flux.flux_many(grid, 0.0)
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if changes.size == 0:
        raise RegimeError(f"U-_OA 근이 없습니다 (U+={u_plus}, v10={v10})")
    i = int(changes[-1])
    U = brentq(residual, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
    if not U > u_plus:
        raise RegimeError(f"U-_OA={U} 가 U+_OA={u_plus} 보다 크지 않습니다")
    return U


@dataclass
class RiemannData:
    """일정 주입 Riemann 문제 자료 (OA 전면과 그 아래)"""
    v10: float
    u_plus: float
    u_minus: float
    u_max0: float
    # F_U(U-_OA, 0): OA 아래 특성선 기울기
    k_minus: float
    # "fan" | "parallel" | "degenerate"
    mode: str
    oa_shock: ShockData
    oa_verdict: ShockVerdict

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v10": self.v10,
            "u_plus_oa": self.u_plus,
            "u_minus_oa": self.u_minus,
            "u_max0": self.u_max0,
            "k_minus": self.k_minus,
            "below_oa_mode": self.mode,
            "oa_shock": self.oa_shock.to_dict(),
            "oa_verdict": self.oa_verdict.to_dict(),
        }


def riemann_data(flux: LagrangeFlux, v10: float) -> RiemannData:
    """OA 전면 양쪽 상태와 OA 아래 모드를 계산합니다."""
    u_plus = u_plus_OA(flux, v10)
    u_minus = u_minus_OA(flux, u_plus, v10)
    u_max0 = flux.u_max(0.0)
    if abs(u_minus - u_max0) <= DEGENERATE_TOL:
        mode = "degenerate"
        k_minus = 0.0
    else:
        k_minus = flux.flux_u(u_minus, 0.0)
        mode = "fan" if u_minus < u_max0 else "parallel"

    oa_shock = map_shock_from_lagrange(flux, LagrangeShock(u_minus, u_plus, 0.0, 1.0, v10))
    verdict = c_shock_admissible(flux.model, oa_shock)
    logger.info(
        f"Riemann 자료: U+_OA={u_plus:.10g}, U-_OA={u_minus:.10g}, "
        f"U_max(0)={u_max0:.10g}, mode={mode}, OA verdict={verdict.reason}"
    )
    return RiemannData(v10, u_plus, u_minus, u_max0, k_minus, mode, oa_shock, verdict)


# =============================================================================
# Jouguet 곡선과 (F5)
# =============================================================================

def u_jouguet(flux: LagrangeFlux, zeta: float) -> float:
    """F_U(U, zeta) = a(zeta)/zeta 인 U in (1, U_max) (zeta = 0 에서는 a_zeta(0))"""
    return flux.u_for_slope(float(flux.adsorption.chord_slope(zeta)), zeta)


class UJCurve:
    """
    Jouguet 곡선 U_J(zeta)의 평가 표

    표는 단조 3차 보간이고, exact()는 근 찾기로 다시 풉니다.
    """

    def __init__(self, flux: LagrangeFlux, n_table: int = 1025):
        self.flux = flux
        grid = np.linspace(0.0, 1.0, n_table)
        values = np.array([u_jouguet(flux, z) for z in grid])
        self._table = PchipInterpolator(grid, values)

    def exact(self, zeta: float) -> float:
        return u_jouguet(self.flux, zeta)

    def residual(self, zeta: float) -> float:
        return self.flux.flux_u(self.exact(zeta), zeta) - float(
            self.flux.adsorption.chord_slope(zeta)
        )

    def __call__(self, zeta):
        values = self._table(np.clip(np.asarray(zeta, dtype=float), 0.0, 1.0))
        return values if np.ndim(values) else float(values)


def f5_lhs(flux: LagrangeFlux, zeta: float) -> float:
    """
    -F_UU F_zeta + (F_Uzeta + b/zeta) b  at (U_J(zeta), zeta).

    음수이면 (F5)가 성립합니다. b/zeta는 닫힌 형태라 zeta -> 0 에서도 유한합니다.
    """
    d = flux.derivs(u_jouguet(flux, zeta), zeta)
    ad = flux.adsorption
    b = float(ad.b(zeta))
    return -d.F_UU * d.F_z + (d.F_Uz + float(ad.b_over_zeta(zeta))) * b


def find_f5_sign_changes(
    flux: LagrangeFlux, tol: float = 1e-10, n_scan: int = 512
) -> List[float]:
    """
    f5_lhs의 부호 변화점 zeta_B를 오름차순으로 찾습니다.

    Raises:
        RegimeError: 부호 변화가 너무 많음 (무한 변화 영역은 지원하지 않음)
    """
    grid = np.linspace(0.0, 1.0, n_scan + 1)

    def lhs(z):
        return f5_lhs(flux, z)

    values = np.array([lhs(z) for z in grid])
    changes: List[float] = []
    for i in range(n_scan):
        if values[i] == 0.0 and i > 0:
            changes.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0.0:
            changes.append(brentq(lhs, grid[i], grid[i + 1], xtol=tol))
    if len(changes) > MAX_SIGN_CHANGES:
        raise RegimeError(
            f"infinite-sign-change regime unsupported: (F5) 부호 변화 {len(changes)}개"
        )
    logger.info(f"(F5) 부호 변화점: {[round(z, 8) for z in changes]}")
    return changes


@dataclass(frozen=True)
class FrontStretch:
    """전면 zeta 구간과 그 위의 U_Phi"""
    lo: float
    hi: float
    holding: bool
    # holding이 아닐 때 교차점에서 만든 U_Phi 보간
    interpolator: Optional[PchipInterpolator] = None

    def contains(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        return (zeta >= self.lo) & (zeta <= self.hi)


def front_stretches(flux: LagrangeFlux, changes: Sequence[float]) -> List[FrontStretch]:
    """부호 변화점으로 나눈 구간마다 중점에서 (F5) 성립 여부를 판정합니다."""
    edges = [0.0] + list(changes) + [1.0]
    result = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        holding = f5_lhs(flux, 0.5 * (lo + hi)) < 0.0
        result.append(FrontStretch(lo, hi, holding))
    return result


# =============================================================================
# 특성곡선
# =============================================================================

@dataclass(frozen=True)
class CurveOrigin:
    """특성곡선 출발 정보: TA 위 U0 또는 전면 위 zeta0"""
    family: str
    param: float

    @property
    def order_key(self) -> Tuple[int, float]:
        # psi 오름차순: TA는 U0 증가, Jouguet은 zeta0 감소
        if self.family == TA:
            return (0, self.param)
        return (1, -self.param)

    @property
    def search_param(self) -> float:
        """이분 탐색용 매개변수 (족 순서와 같은 방향)"""
        if self.family == TA:
            return float(np.log(self.param - 1.0))
        return -self.param

    @classmethod
    def from_search_param(cls, family: str, value: float) -> "CurveOrigin":
        if family == TA:
            return cls(TA, 1.0 + float(np.exp(value)))
        return cls(JOUGUET, -value)


@dataclass
class CharCurve:
    """
    zeta -> (U, psi) 특성곡선

    적분 상태는 (s, psi) 이며 U = 1/f(s, zeta) 입니다.
    zeta_end < zeta_start 이고, crossed이면 zeta_end에서 전면과 만납니다.
    """
    origin: CurveOrigin
    zeta_start: float
    zeta_end: float
    crossed: bool
    solution: OdeSolution = field(repr=False)
    flux: LagrangeFlux = field(repr=False)

    def covers(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        return (zeta >= self.zeta_end) & (zeta <= self.zeta_start)

    def state(self, zeta) -> Tuple[np.ndarray, np.ndarray]:
        zeta = np.asarray(zeta, dtype=float)
        y = self.solution(zeta)
        U = 1.0 / self.flux.fluid.f(y[0], zeta)
        return U, y[1]

    def saturation(self, zeta):
        return self.solution(np.asarray(zeta, dtype=float))[0]

    @property
    def end_state(self) -> Tuple[float, float]:
        U, psi = self.state(self.zeta_end)
        return float(U), float(psi)


def _characteristic_rhs(flux: LagrangeFlux):
    fl = flux.fluid
    ad = flux.adsorption

    def rhs(zeta, y):
        s = y[0]
        f = float(fl.f(s, zeta))
        f_s = float(fl.f_s(s, zeta))
        f_c = float(fl.f_c(s, zeta))
        a_z = float(ad.a_z(zeta))
        a_zz = float(ad.a_zz(zeta))
        lead = s + a_z
        # (F_U - a_zeta) f_s
        gap = f - f_s * lead
        if gap <= 0.0:
            raise ConsistencyError(
                f"F_U - a_zeta <= 0 (zeta={zeta:.6g}, s={s:.6g}): 특성곡선이 전면과 횡단하지 않습니다"
            )
        ds = f_c * lead / gap
        dpsi = a_zz * a_z / (1.0 + a_z * a_z) + a_zz * f_s / gap
        return [ds, dpsi]

    return rhs


def integrate_char(
    flux: LagrangeFlux,
    zf: ZetaField,
    origin: CurveOrigin,
    options: FamilyOptions = FamilyOptions(),
) -> CharCurve:
    """
    특성곡선 하나를 zeta 감소 방향으로 적분합니다.

    dU/dzeta = -F_zeta / (F_U - a_zeta),
    dpsi/dzeta = a_zz a_z / (1 + a_z^2) + a_zz / (F_U - a_zeta)
    를 s = vartheta_zeta(U)로 바꿔 풉니다. 전면(psi = psi_Phi)을 넘으면 멈춥니다.

    Args:
        flux: Lagrange 유량
        zf: zeta 해
        origin: TA(U0) 또는 Jouguet(zeta0)
        options: 족 옵션

    Returns:
        조밀 출력(dense output)을 가진 CharCurve

    Raises:
        ConsistencyError: F_U - a_zeta <= 0 이 되는 경우
    """
    ad = flux.adsorption
    if origin.family == TA:
        if not origin.param > 1.0:
            raise ValueError(f"U0는 1보다 커야 합니다: {origin.param}")
        zeta0 = 1.0
        s0 = flux.vartheta(origin.param, 1.0)
        psi0 = float(zf.psi_ta(flux.derivs_at_saturation(s0, 1.0).F_U))
    elif origin.family == JOUGUET:
        zeta0 = origin.param
        if not options.zeta_min < zeta0 <= 1.0:
            raise ValueError(f"zeta0는 (zeta_min, 1] 범위여야 합니다: {zeta0}")
        s0 = flux.saturation_for_slope(float(ad.chord_slope(zeta0)), zeta0)
        psi0 = float(zf.psi_front(zeta0))
    else:
        raise ValueError(f"알 수 없는 족: {origin.family}")

    def front_event(zeta, y):
        return y[1] - float(zf.psi_front(zeta)) - options.front_event

    front_event.terminal = True
    front_event.direction = 1

    sol = solve_ivp(
        _characteristic_rhs(flux),
        (zeta0, options.zeta_min),
        [s0, psi0],
        method="DOP853",
        rtol=options.ode_rtol,
        atol=options.ode_atol,
        dense_output=True,
        events=[front_event],
    )
    if sol.status < 0:
        logger.error(f"특성곡선 적분 실패: {origin}, {sol.message}")
        raise ConvergenceError(f"특성곡선 적분 실패 ({origin.family}, {origin.param}): {sol.message}")

    crossed = sol.status == 1
    return CharCurve(origin, zeta0, float(sol.t[-1]), crossed, sol.sol, flux)


def _integrate_one(args) -> CharCurve:
    flux, zf, origin, options = args
    return integrate_char(flux, zf, origin, options)


def _integrate_many(
    flux: LagrangeFlux, zf: ZetaField, origins: Sequence[CurveOrigin], options: FamilyOptions
) -> List[CharCurve]:
    tasks = [(flux, zf, origin, options) for origin in origins]
    if options.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            return list(pool.map(_integrate_one, tasks))
    return [_integrate_one(task) for task in tasks]


# =============================================================================
# C 점 (접점) 탐색
# =============================================================================

@dataclass
class TangencyResult:
    """B에서 전면에 접하는 특성곡선 C"""
    zeta_B: float
    origin: CurveOrigin
    curve: CharCurve = field(repr=False)
    psi_residual: float
    u_residual: float
    iterations: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "zeta_B": self.zeta_B,
            "family": self.origin.family,
            "param": self.origin.param,
            "psi_residual": self.psi_residual,
            "u_residual": self.u_residual,
            "iterations": self.iterations,
        }


def _crosses_at_or_above(curve: CharCurve, zeta_lo: float) -> bool:
    return curve.crossed and curve.zeta_end >= zeta_lo - 1e-9


def locate_C(
    flux: LagrangeFlux,
    zf: ZetaField,
    zeta_B: float,
    options: FamilyOptions = FamilyOptions(),
    bracket: Optional[Tuple[CurveOrigin, CurveOrigin]] = None,
    u_j: Optional[UJCurve] = None,
    max_iter: int = 60,
) -> TangencyResult:
    """
    zeta_B에서 전면에 접하는 특성곡선의 출발점을 사격법으로 찾습니다.

    bracket = (전면과 만나지 않는 곡선, zeta_B 위에서 만나는 곡선). 주지 않으면
    TA 족 전체 (U0 in (1, U+_OA)) 를 씁니다.

    Raises:
        RegimeError: 구간 양 끝의 교차 여부가 같음
    """
    if bracket is None:
        u_plus = u_plus_OA(flux, zf.v10)
        bracket = (
            CurveOrigin(TA, 1.0 + U0_FLOOR),
            CurveOrigin(TA, 1.0 + (u_plus - 1.0) * (1.0 - 1e-9)),
        )
    low, high = bracket
    if low.family != high.family:
        raise RegimeError(f"C 탐색 구간이 서로 다른 족에 걸쳐 있습니다: {low}, {high}")

    low_curve = integrate_char(flux, zf, low, options)
    high_curve = integrate_char(flux, zf, high, options)
    if _crosses_at_or_above(low_curve, zeta_B) or not _crosses_at_or_above(high_curve, zeta_B):
        raise RegimeError(
            f"C 탐색 구간을 찾지 못했습니다 (zeta_B={zeta_B}): "
            f"low crossed={low_curve.crossed}, high crossed={high_curve.crossed}"
        )

    p_lo, p_hi = low.search_param, high.search_param
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if abs(p_hi - p_lo) <= 1e-14 * max(1.0, abs(p_lo)):
            break
        mid = CurveOrigin.from_search_param(low.family, 0.5 * (p_lo + p_hi))
        curve = integrate_char(flux, zf, mid, options)
        if _crosses_at_or_above(curve, zeta_B):
            p_hi = mid.search_param
        else:
            p_lo = mid.search_param
            low_curve = curve

    u_j = u_j or UJCurve(flux)
    if low_curve.covers(zeta_B):
        U_B, psi_B = low_curve.state(zeta_B)
        psi_res = float(psi_B) - float(zf.psi_front(zeta_B))
        u_res = float(U_B) - u_j.exact(zeta_B)
    else:
        psi_res = u_res = float("nan")
    logger.info(
        f"C 점: family={low_curve.origin.family}, param={low_curve.origin.param:.12g}, "
        f"psi 잔차={psi_res:.3e}, U 잔차={u_res:.3e}"
    )
    return TangencyResult(zeta_B, low_curve.origin, low_curve, psi_res, u_res, iterations)


# =============================================================================
# cone 해
# =============================================================================

@dataclass(frozen=True)
class OrderViolation:
    zeta: float
    index: int
    kind: str


@dataclass
class ConeSolution:
    """부채꼴 영역 특성곡선 족"""
    flux: LagrangeFlux = field(repr=False)
    zf: ZetaField = field(repr=False)
    riemann: RiemannData
    curves: List[CharCurve] = field(repr=False)
    sign_changes: List[float]
    tangencies: List[TangencyResult]
    stretches: List[FrontStretch]
    u_j: UJCurve = field(repr=False)
    options: FamilyOptions

    @property
    def full_jouguet(self) -> bool:
        return not self.sign_changes

    def front_values(self, zeta):
        """전면 위 U_Phi(zeta): Jouguet 구간은 U_J, 그 외는 교차 특성곡선 값"""
        zeta = np.asarray(zeta, dtype=float)
        result = np.asarray(self.u_j(zeta), dtype=float).copy()
        for stretch in self.stretches:
            if stretch.holding or stretch.interpolator is None:
                continue
            mask = stretch.contains(zeta)
            if np.any(mask):
                result = np.where(mask, stretch.interpolator(np.clip(zeta, stretch.lo, stretch.hi)), result)
        return result if result.ndim else float(result)

    def nodes_at(self, zeta: float) -> Tuple[np.ndarray, np.ndarray]:
        """zeta에서 족 순서대로 (psi, U) 노드와 전면 노드"""
        psi_nodes, u_nodes = [], []
        for curve in self.curves:
            if curve.covers(zeta):
                U, psi = curve.state(zeta)
                psi_nodes.append(float(psi))
                u_nodes.append(float(U))
        psi_nodes.append(float(self.zf.psi_front(zeta)))
        u_nodes.append(float(self.front_values(zeta)))
        return np.array(psi_nodes), np.array(u_nodes)

    def evaluate(self, zeta, psi) -> np.ndarray:
        """
        cone 내부 점 (zeta, psi)에서 U를 평가합니다.

        같은 zeta의 노드 사이를 psi에 대해 단조 3차 보간합니다.
        가장 낮은 노드 아래는 그 노드 값으로 고정합니다.
        """
        zeta = np.clip(np.atleast_1d(np.asarray(zeta, dtype=float)), self.options.zeta_min, 1.0)
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        out = np.empty(zeta.shape)
        for start in range(0, zeta.size, _CHUNK):
            sl = slice(start, start + _CHUNK)
            out[sl] = self._evaluate_chunk(zeta[sl], psi[sl])
        return out

    def _evaluate_chunk(self, zeta: np.ndarray, psi: np.ndarray) -> np.ndarray:
        n_curves = len(self.curves)
        psi_table = np.full((n_curves + 1, zeta.size), np.nan)
        u_table = np.full((n_curves + 1, zeta.size), np.nan)
        for i, curve in enumerate(self.curves):
            mask = curve.covers(zeta)
            if np.any(mask):
                U, ps = curve.state(zeta[mask])
                u_table[i, mask] = U
                psi_table[i, mask] = ps
        psi_table[-1] = self.zf.psi_front(zeta)
        u_table[-1] = self.front_values(zeta)

        out = np.empty(zeta.size)
        for j in range(zeta.size):
            valid = ~np.isnan(psi_table[:, j])
            ps = psi_table[valid, j]
            us = u_table[valid, j]
            keep = np.concatenate(([True], np.diff(ps) > 1e-12))
            ps, us = ps[keep], us[keep]
            q = psi[j]
            if q <= ps[0]:
                out[j] = us[0]
            elif q >= ps[-1]:
                out[j] = us[-1]
            else:
                k = int(np.searchsorted(ps, q))
                w = slice(max(k - 2, 0), min(k + 2, ps.size))
                out[j] = float(pchip_interpolate(ps[w], us[w], q))
        return out

    def evaluate_points(self, phi, x) -> np.ndarray:
        """cone 내부 (phi, x) 점들의 U"""
        phi = np.asarray(phi, dtype=float)
        x = np.asarray(x, dtype=float)
        ad = self.zf.adsorption
        slope = np.clip((phi - self.zf.t_inj) / x, self.zf.a1, self.zf.a0)
        zeta = np.clip(ad.g(slope), 0.0, 1.0)
        psi = np.log(x) + 0.5 * np.log1p(((phi - self.zf.t_inj) / x) ** 2)
        return self.evaluate(zeta, psi)

    # ==================== 진단과 내보내기 ====================

    def a_characteristic_gap(self) -> Optional[float]:
        """
        A에서 출발하는 두 특성곡선 (TA의 U0 = U+_OA, Jouguet의 zeta0 = 1) 의 최대 차이.

        zeta = 1 구간에서 (F5)가 성립하지 않으면 Jouguet 곡선이 없으므로 None.
        """
        jouguet = [c for c in self.curves if c.origin == CurveOrigin(JOUGUET, 1.0)]
        if not jouguet:
            return None
        ta = integrate_char(self.flux, self.zf, CurveOrigin(TA, self.riemann.u_plus), self.options)
        lo = max(ta.zeta_end, jouguet[0].zeta_end)
        zetas = np.linspace(lo, 1.0, 33)
        U_ta, psi_ta = ta.state(zetas)
        U_j, psi_j = jouguet[0].state(zetas)
        return float(max(np.max(np.abs(U_ta - U_j)), np.max(np.abs(psi_ta - psi_j))))

    def curves_frame(self, n_per_curve: int = 64) -> pd.DataFrame:
        """family, param, zeta, U, psi, phi, x 열의 특성곡선 표"""
        columns = ["family", "param", "zeta", "U", "psi", "phi", "x"]
        frames = []
        for curve in self.curves:
            zetas = np.linspace(curve.zeta_start, curve.zeta_end, n_per_curve)
            U, psi = curve.state(zetas)
            phi, x = self.zf.cone_point(zetas, psi)
            frames.append(
                pd.DataFrame({
                    "family": curve.origin.family,
                    "param": curve.origin.param,
                    "zeta": zetas,
                    "U": U,
                    "psi": psi,
                    "phi": phi,
                    "x": x,
                })
            )
        if not frames:
            return pd.DataFrame(columns=columns)
        return pd.concat(frames, ignore_index=True)[columns]


def _jouguet_grid(stretch: FrontStretch, n: int) -> np.ndarray:
    interior = np.linspace(stretch.lo, stretch.hi, n + 2)[1:-1]
    if stretch.hi == 1.0:
        return np.append(interior, 1.0)
    return interior


def _refine_between(low: CurveOrigin, high: CurveOrigin, count: int) -> List[CurveOrigin]:
    if count <= 0:
        return []
    values = np.linspace(low.search_param, high.search_param, count + 2)[1:-1]
    return [CurveOrigin.from_search_param(low.family, float(v)) for v in values]


def _find_bracket(
    flux: LagrangeFlux,
    zf: ZetaField,
    curves: List[CharCurve],
    stretch: FrontStretch,
    u_plus: float,
    options: FamilyOptions,
) -> Tuple[CurveOrigin, CurveOrigin]:
    """
    stretch 위쪽 출발점 직전 곡선들 중 (비교차, 교차) 인접 쌍을 찾습니다.

    마지막 후보가 교차하지 않으면 출발점 바로 옆의 덮개 곡선을 더해 다시 봅니다.
    """
    if stretch.hi >= 1.0:
        candidates = [c for c in curves if c.origin.family == TA]
        cap = CurveOrigin(TA, 1.0 + (u_plus - 1.0) * (1.0 - 1e-9))
    else:
        candidates = [c for c in curves if c.origin.family == TA or c.origin.param > stretch.hi]
        cap = CurveOrigin(JOUGUET, stretch.hi + 1e-7)
    candidates.sort(key=lambda c: c.origin.order_key)

    if not candidates or not _crosses_at_or_above(candidates[-1], stretch.lo):
        cap_curve = integrate_char(flux, zf, cap, options)
        curves.append(cap_curve)
        candidates.append(cap_curve)
        candidates.sort(key=lambda c: c.origin.order_key)

    for below, above in zip(reversed(candidates[:-1]), reversed(candidates)):
        if _crosses_at_or_above(below, stretch.lo):
            continue
        if not _crosses_at_or_above(above, stretch.lo) or below.origin.family != above.origin.family:
            break
        return below.origin, above.origin
    raise RegimeError(
        f"bracket not found: 구간 ({stretch.lo:.6g}, {stretch.hi:.6g})의 C 탐색 구간을 찾지 못했습니다"
    )


def _breaking_interpolator(
    curves: List[CharCurve], stretch: FrontStretch, u_j: UJCurve
) -> PchipInterpolator:
    points = {stretch.lo: u_j.exact(stretch.lo), stretch.hi: u_j.exact(stretch.hi)}
    for curve in curves:
        if curve.crossed and stretch.lo < curve.zeta_end < stretch.hi:
            points[curve.zeta_end] = curve.end_state[0]
    zs = np.array(sorted(points))
    us = np.array([points[z] for z in zs])
    keep = np.concatenate(([True], np.diff(zs) > 1e-12))
    return PchipInterpolator(zs[keep], us[keep])


def family_order_violations(cone: ConeSolution, n: int = 64) -> List[OrderViolation]:
    """표본 zeta에서 인접 곡선 사이 psi 또는 U 순서 역전을 찾습니다."""
    violations = []
    zetas = np.linspace(cone.options.zeta_min, 1.0, n)
    for zeta in zetas:
        psi_prev = u_prev = None
        for i, curve in enumerate(cone.curves):
            if not curve.covers(zeta):
                continue
            U, psi = curve.state(zeta)
            if psi_prev is not None:
                if psi < psi_prev - ORDER_TOL:
                    violations.append(OrderViolation(float(zeta), i, "psi"))
                if U < u_prev - ORDER_TOL:
                    violations.append(OrderViolation(float(zeta), i, "U"))
            psi_prev, u_prev = float(psi), float(U)
    return violations


def build_cone(
    flux: LagrangeFlux,
    zf: ZetaField,
    options: FamilyOptions = FamilyOptions(),
    riemann: Optional[RiemannData] = None,
) -> ConeSolution:
    """
    부채꼴 영역의 특성곡선 족을 구성합니다.

    (F5) 부호 변화로 전면을 구간으로 나누고, 성립 구간에는 Jouguet 족,
    위쪽에는 TA 족을 둡니다. 불성립 구간마다 접하는 곡선 C를 찾아 그 주변을 세분하고,
    교차 특성곡선이 가져온 값으로 U_Phi를 만듭니다.

    Raises:
        RegimeError: 부호 변화가 너무 많거나 C 구간을 찾지 못함
        ConsistencyError: 족 순서 역전
    """
    riemann = riemann or riemann_data(flux, zf.v10)
    u_j = UJCurve(flux)
    changes = find_f5_sign_changes(flux, options.root_tol)
    stretches = front_stretches(flux, changes)
    holding = [s for s in stretches if s.holding]

    ta_top = (riemann.u_plus - 1.0) * (1.0 - 1e-6)
    origins = [CurveOrigin(TA, 1.0 + d) for d in np.geomspace(U0_FLOOR, ta_top, options.n_ta)]
    total = sum(s.hi - s.lo for s in holding) or 1.0
    for stretch in holding:
        n = max(4, int(round(options.n_jouguet * (stretch.hi - stretch.lo) / total)))
        origins += [CurveOrigin(JOUGUET, float(z)) for z in _jouguet_grid(stretch, n)]

    logger.info(
        f"특성곡선 족 적분: TA {options.n_ta}개, Jouguet {len(origins) - options.n_ta}개, "
        f"workers={options.workers}"
    )
    curves = _integrate_many(flux, zf, origins, options)

    tangencies: List[TangencyResult] = []
    for stretch in sorted((s for s in stretches if not s.holding), key=lambda s: -s.hi):
        bracket = _find_bracket(flux, zf, curves, stretch, riemann.u_plus, options)
        tangency = locate_C(flux, zf, stretch.lo, options, bracket, u_j)
        tangencies.append(tangency)
        extra = _refine_between(bracket[0], bracket[1], options.refine)
        curves.append(tangency.curve)
        curves += _integrate_many(flux, zf, extra, options)

    curves.sort(key=lambda c: c.origin.order_key)
    stretches = [
        s if s.holding else FrontStretch(s.lo, s.hi, False, _breaking_interpolator(curves, s, u_j))
        for s in stretches
    ]
    cone = ConeSolution(flux, zf, riemann, curves, changes, tangencies, stretches, u_j, options)

    violations = family_order_violations(cone)
    if violations:
        first = violations[0]
        raise ConsistencyError(
            f"특성곡선 족 순서 역전 {len(violations)}건 (첫 위치 zeta={first.zeta:.6g}, "
            f"곡선 {first.index}, {first.kind}); 적분 허용 오차를 줄이세요"
        )
    logger.info(
        f"cone 구성 완료: 곡선 {len(curves)}개, 부호 변화 {len(changes)}개, C 점 {len(tangencies)}개"
    )
    return cone


# =============================================================================
# cone 바깥 영역
# =============================================================================

@dataclass(frozen=True)
class EdgeTable:
    """cone 윗변(zeta = zeta_min)에서 나가는 직선 특성선 표 (x_e 오름차순)"""
    x: np.ndarray
    phi: np.ndarray
    U: np.ndarray
    slope: np.ndarray


@dataclass(frozen=True)
class FrontShockState:
    """곡선 전면 한 점의 양쪽 상태"""
    x: float
    zeta_plus: float
    U_plus: float
    U_minus: float
    v_star: float
    shock: ShockData
    verdict: ShockVerdict


@dataclass(frozen=True)
class BelowFrontTable:
    """곡선 전면에서 아래로 나가는 직선 특성선 표 (x_f 오름차순)"""
    x: np.ndarray
    phi: np.ndarray
    U: np.ndarray
    slope: np.ndarray


@dataclass
class CollisionReport:
    """전면 아래 특성선 기울기 단조성 검사"""
    detected: bool
    x: Optional[float] = None
    slope_drop: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"detected": self.detected, "x": self.x, "slope_drop": self.slope_drop}


def _slopes_at_zero(flux: LagrangeFlux, U: np.ndarray) -> np.ndarray:
    fl = flux.fluid
    s = flux.vartheta_many(U, 0.0)
    return fl.f(s, 0.0) / fl.f_s(s, 0.0) - s


def below_front_values(cone: ConeSolution, x: float) -> FrontShockState:
    """
    곡선 전면 위 x에서 (U+, U-, v*)를 구합니다.

    U+ = U_Phi(zeta_Phi(x)), v* = Phi'(x). U-는 아래 상태 zeta = 0 과의 RH 근 중
    c-충격파 판정이 허용인 첫 근이며, 보통 원 좌표의 u1+ (가장 작은 s) 입니다.

    Raises:
        ConsistencyError: 허용되는 양의 근이 없음
    """
    zf = cone.zf
    flux = cone.flux
    model = flux.model
    zeta_plus = float(zf.zeta_front(x))
    U_plus = float(cone.front_values(zeta_plus))
    v_star = float(zf.front_slope(x))
    s_minus = flux.vartheta(U_plus, zeta_plus)
    v = (1.0 / U_plus) / (v_star + s_minus)
    roots = c_shock_roots(model, v, zeta_plus, 0.0)
    rejected = []
    for s_plus in roots.plus:
        if s_plus <= 0.0:
            continue
        shock = ShockData(s_minus, s_plus, zeta_plus, 0.0, v).with_constants(model)
        try:
            verdict = c_shock_admissible(model, shock)
        except ValueError as e:
            rejected.append(f"{s_plus:.6g}: {e}")
            continue
        if verdict.admissible:
            U_minus = 1.0 / float(flux.fluid.f(s_plus, 0.0))
            return FrontShockState(float(x), zeta_plus, U_plus, U_minus, v_star, shock, verdict)
        rejected.append(f"{s_plus:.6g}: {verdict.reason}")
    logger.error(f"전면 x={x}: 허용되는 U- 근이 없습니다 (v={v}, 후보={rejected})")
    raise ConsistencyError(f"전면 x={x}에서 허용되는 U- 근이 없습니다 (v={v}, plus={roots.plus})")


def collision_report(table: BelowFrontTable, tol: float = 1e-10) -> CollisionReport:
    """전면 아래 특성선 기울기가 x_f에 대해 감소하면 충돌로 보고합니다."""
    drops = np.diff(table.slope)
    bad = np.nonzero(drops < -tol)[0]
    if bad.size == 0:
        return CollisionReport(False)
    i = int(bad[0])
    report = CollisionReport(True, float(table.x[i + 1]), float(-drops[i]))
    logger.warning(f"전면 아래 특성선 충돌 가능성: x_f={report.x:.6g}, 기울기 감소={report.slope_drop:.3e}")
    return report


def _edge_table(cone: ConeSolution) -> EdgeTable:
    zf = cone.zf
    zeta_min = cone.options.zeta_min
    xs, phis, us = [], [], []
    for curve in cone.curves:
        if curve.crossed:
            continue
        U, psi = curve.end_state
        phi, x = zf.cone_point(zeta_min, psi)
        xs.append(float(x))
        phis.append(float(phi))
        us.append(U)
    phi_f, x_f = zf.cone_point(zeta_min, float(zf.psi_front(zeta_min)))
    xs.append(float(x_f))
    phis.append(float(phi_f))
    us.append(float(cone.front_values(zeta_min)))
    order = np.argsort(xs)
    U = np.array(us)[order]
    return EdgeTable(np.array(xs)[order], np.array(phis)[order], U, _slopes_at_zero(cone.flux, U))


def _below_table(cone: ConeSolution, x_max: float, n: int) -> BelowFrontTable:
    zf = cone.zf
    riemann = cone.riemann
    xs = np.geomspace(zf.x_A, x_max, n)
    U = np.empty(n)
    U[0] = riemann.u_minus
    for i, x in enumerate(xs[1:], start=1):
        U[i] = below_front_values(cone, float(x)).U_minus
    return BelowFrontTable(xs, np.asarray(zf.front(xs)), U, _slopes_at_zero(cone.flux, U))


@dataclass
class USolution:
    """(phi, x) 전 영역의 U 해"""
    flux: LagrangeFlux = field(repr=False)
    zf: ZetaField = field(repr=False)
    cone: ConeSolution = field(repr=False)
    edge: EdgeTable = field(repr=False)
    below: BelowFrontTable = field(repr=False)
    collision: CollisionReport

    @property
    def riemann(self) -> RiemannData:
        return self.cone.riemann

    def eval_U(self, phi: float, x: float) -> float:
        return float(self.eval_U_many(np.array([phi]), np.array([x]))[0])

    def eval_U_many(self, phi, x, strict: bool = True) -> np.ndarray:
        """
        영역별로 U(phi, x)를 평가합니다 (불연속선 위는 phi가 큰 쪽 값).

        Args:
            phi, x: 같은 모양으로 브로드캐스트되는 좌표 배열
            strict: False이면 특성선 충돌 이후 점을 NaN으로 돌려줍니다

        Raises:
            UnsupportedRegionError: strict이고 전면 아래 특성선이 교차한 뒤의 점
        """
        phi, x = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(x, dtype=float))
        shape = phi.shape
        phi = phi.ravel()
        x = x.ravel()
        zf = self.zf
        t = zf.t_inj
        if np.any(phi < 0) or np.any(x < 0):
            raise ValueError("(phi, x)는 제1사분면에 있어야 합니다")

        out = np.empty(phi.size)
        axis = x <= 0.0
        below = ~axis & (phi < zf.front(x))
        triangle = ~axis & ~below & (phi <= t + zf.a1 * x)
        above = ~axis & ~below & ~triangle & (phi >= t + zf.a0 * x)
        inside = ~axis & ~below & ~triangle & ~above

        out[axis] = 1.0
        if np.any(triangle):
            out[triangle] = self.flux.u_for_slope_many(phi[triangle] / x[triangle], 1.0)
        if np.any(inside):
            out[inside] = self.cone.evaluate_points(phi[inside], x[inside])
        if np.any(above):
            out[above] = self._above(phi[above], x[above])
        if np.any(below):
            out[below] = self._below(phi[below], x[below], strict)
        return out.reshape(shape)

    def _above(self, phi: np.ndarray, x: np.ndarray) -> np.ndarray:
        zf = self.zf
        zeta_min = self.cone.options.zeta_min
        slope_min = float(zf.adsorption.a_z(zeta_min))
        psi_ray = np.log(x) + 0.5 * np.log1p(slope_min ** 2)
        U_ray = self.cone.evaluate(np.full(x.shape, zeta_min), psi_ray)
        phi_ray = zf.t_inj + slope_min * x

        out = np.empty(phi.size)
        fan = np.zeros(phi.size, dtype=bool)
        for i in range(phi.size):
            mask = self.edge.x < x[i]
            H = np.append(self.edge.phi[mask] + self.edge.slope[mask] * (x[i] - self.edge.x[mask]), phi_ray[i])
            Us = np.append(self.edge.U[mask], U_ray[i])
            if H.size == 1 or phi[i] >= H[0]:
                fan[i] = True
                continue
            order = np.argsort(H)
            out[i] = np.interp(phi[i], H[order], Us[order])
        if np.any(fan):
            # T에서 나오는 zeta = 0 부채꼴
            out[fan] = self.flux.u_for_slope_many((phi[fan] - zf.t_inj) / x[fan], 0.0)
        return out

    def _below(self, phi: np.ndarray, x: np.ndarray, strict: bool) -> np.ndarray:
        zf = self.zf
        riemann = self.riemann
        k = riemann.k_minus
        line_A = zf.phi_A + k * (x - zf.x_A)
        oa = (x <= zf.x_A) | (phi <= line_A)

        out = np.empty(phi.size)
        out[oa] = riemann.u_minus
        if riemann.mode == "fan":
            origin_fan = oa & (phi < k * x)
            if np.any(origin_fan):
                out[origin_fan] = self.flux.u_for_slope_many(phi[origin_fan] / x[origin_fan], 0.0)

        table = self.below
        for i in np.nonzero(~oa)[0]:
            xi = x[i]
            mask = table.x < xi
            if xi <= table.x[-1]:
                U_end = float(np.interp(xi, table.x, table.U))
            else:
                U_end = below_front_values(self.cone, float(xi)).U_minus
            H = np.append(table.phi[mask] + table.slope[mask] * (xi - table.x[mask]), float(zf.front(xi)))
            Us = np.append(table.U[mask], U_end)
            if np.any(np.diff(H) <= 0.0):
                if not strict:
                    out[i] = np.nan
                    continue
                raise UnsupportedRegionError(
                    f"(phi={phi[i]:.6g}, x={xi:.6g})는 전면 아래 특성선 충돌 이후 영역입니다"
                )
            out[i] = np.interp(phi[i], H, Us)
        return out


def build_solution(
    flux: LagrangeFlux,
    zf: ZetaField,
    options: FamilyOptions = FamilyOptions(),
) -> USolution:
    """cone, cone 위 표, 전면 아래 표를 차례로 구성합니다."""
    cone = build_cone(flux, zf, options)
    x_max = options.x_max if options.x_max > 0 else 8.0 * zf.x_A
    edge = _edge_table(cone)
    below = _below_table(cone, max(x_max, 1.01 * zf.x_A), options.n_below)
    collision = collision_report(below)
    return USolution(flux, zf, cone, edge, below, collision)


def eval_U(solution: USolution, phi: float, x: float) -> float:
    return solution.eval_U(phi, x)


# =============================================================================
# 방출 충격파
# =============================================================================

@dataclass
class EmittedShock:
    """해가 만들어 내는 충격파 한 표본"""
    kind: str
    x: float
    shock: ShockData
    residual: Tuple[float, float]
    verdict: ShockVerdict

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "x": self.x,
            **self.shock.to_dict(),
            "r1": self.residual[0],
            "r2": self.residual[1],
            "admissible": self.verdict.admissible,
            "reason": self.verdict.reason,
        }


def collect_shocks(solution: USolution, n_front: int = 8, n_leading: int = 4) -> List[EmittedShock]:
    """
    OA 전면, 곡선 전면 표본, 선두 포화도 충격파 표본을 모읍니다.

    Returns:
        RH 잔차와 판정을 포함한 충격파 목록
    """
    model = solution.flux.model
    zf = solution.zf
    riemann = solution.riemann
    shocks = [
        EmittedShock("oa-front", zf.x_A, riemann.oa_shock, rh_residual(model, riemann.oa_shock), riemann.oa_verdict)
    ]

    x_hi = float(solution.below.x[-1])
    for x in np.geomspace(zf.x_A * 1.01, x_hi, n_front):
        state = below_front_values(solution.cone, float(x))
        shocks.append(
            EmittedShock(
                "curved-front", float(x), state.shock,
                rh_residual(model, state.shock), state.verdict,
            )
        )

    fl = model.fluid
    for x in np.geomspace(zf.x_A * 0.25, x_hi, n_leading):
        U = solution.eval_U(0.0, float(x))
        s_minus = solution.flux.vartheta(U, 0.0)
        v = float(fl.f(s_minus, 0.0)) / s_minus
        shock = ShockData(s_minus, 0.0, 0.0, 0.0, v)
        shocks.append(
            EmittedShock(
                "leading-front", float(x), shock,
                rh_residual(model, shock), s_shock_admissible(model, s_minus, 0.0, 0.0, v),
            )
        )
    return shocks
