"""
충격파 허용성 모듈

Rankine-Hugoniot 조건, Oleinik/Lax 조건, c-충격파 분류,
진행파(traveling wave) 동역학계 오라클, 원 좌표와 Lagrange 좌표 사이의 충격파 사상을 제공합니다.

진행파 동역학계:
    s_xi = f(s, c) - v (s + d1)
    c_xi = v (d1 c - d2 - a(c))
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from app.model import LagrangeFlux, ModelPair

logger = logging.getLogger(__name__)

# Oleinik 검사 내부 샘플 수
OLEINIK_SAMPLES = 256
# Lax 부등식 허용 오차
LAX_TOL = 1e-10
# c-충격파 근 탐색 격자 크기
ROOT_SCAN_POINTS = 512
# 접하는(중근) 판정 허용 오차
TANGENT_TOL = 1e-9
# 근 병합 거리
MERGE_TOL = 1e-6
# u2- 판정에서 이보다 가까운 두 근은 중근(Jouguet 접점)으로 봅니다
DOUBLE_ROOT_TOL = 1e-3
# RH 일관성 허용 오차
RH_TOL = 1e-8
# Oleinik 극값점 정제 허용 오차
OLEINIK_XTOL = 1e-12
# 양 끝 상태에 이만큼 붙은 극값점은 끝점의 접점으로 봅니다
OLEINIK_END_GUARD = 1e-9

class ShockReason:
    """판정 사유 태그"""
    VELOCITY_RANGE = "velocity-range"
    ZERO_LEFT_STATE = "zero-left-state"
    EQUAL_S = "equal-s"
    C_INCREASING = "c-increasing"
    OLEINIK_FAIL = "oleinik-fail"
    LAX_FAIL = "lax-fail"
    U2_TO_U1 = "u2-to-u1"
    OK = "ok"


class OrbitStatus:
    CONNECTED = "connected"
    NO_CONNECTION = "no-connection"
    INCONCLUSIVE = "inconclusive"


# =============================================================================
# 자료형
# =============================================================================

@dataclass(frozen=True)
class ShockData:
    """
    원 좌표 충격파: 좌측(-) 상태, 우측(+) 상태, 속도 v

    c-충격파는 with_constants()로 d1 = [a]/[c], d2 = (c+ a- - c- a+)/(c- - c+)를 채웁니다.
    """
    s_minus: float
    s_plus: float
    c_minus: float
    c_plus: float
    v: float
    d1: Optional[float] = None
    d2: Optional[float] = None

    def __post_init__(self):
        for name in ("s_minus", "s_plus", "c_minus", "c_plus"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}은 [0, 1] 범위여야 합니다: {value}")

    @property
    def is_c_shock(self) -> bool:
        return self.c_minus != self.c_plus

    def with_constants(self, model: ModelPair) -> "ShockData":
        """c-충격파면 d1, d2를 채운 사본 (s-충격파는 그대로)"""
        if not self.is_c_shock:
            return self
        a_minus = float(model.adsorption.a(self.c_minus))
        a_plus = float(model.adsorption.a(self.c_plus))
        d1 = (a_plus - a_minus) / (self.c_plus - self.c_minus)
        d2 = (self.c_plus * a_minus - self.c_minus * a_plus) / (self.c_minus - self.c_plus)
        return replace(self, d1=d1, d2=d2)

    def to_dict(self) -> Dict[str, float]:
        nan = float("nan")
        return {
            "s_minus": self.s_minus,
            "s_plus": self.s_plus,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "v": self.v,
            "d1": nan if self.d1 is None else self.d1,
            "d2": nan if self.d2 is None else self.d2,
        }


@dataclass(frozen=True)
class LagrangeShock:
    """Lagrange 좌표 충격파 (U-, U+, zeta-, zeta+, v*)"""
    U_minus: float
    U_plus: float
    zeta_minus: float
    zeta_plus: float
    v_star: float


@dataclass
class OrbitResult:
    """진행파 궤도 적분 결과"""
    status: str
    xi_end: float = 0.0
    s_end: float = float("nan")
    c_end: float = float("nan")
    path: Optional[np.ndarray] = field(default=None, repr=False)
    detail: str = ""

    @property
    def connected(self) -> bool:
        return self.status == OrbitStatus.CONNECTED

    @property
    def conclusive(self) -> bool:
        return self.status != OrbitStatus.INCONCLUSIVE


@dataclass
class ShockVerdict:
    """충격파 허용성 판정"""
    admissible: bool
    reason: str
    witness: Optional[OrbitResult] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "admissible": self.admissible,
            "reason": self.reason,
            "orbit": self.witness.status if self.witness is not None else "",
        }


@dataclass(frozen=True)
class CShockRoots:
    """
    c-충격파 RH 근

    minus는 c = c-에서, plus는 c = c+에서 f(s, c) = v (s + d1)의 근이며
    s 오름차순입니다 (index 0 = u1, index 1 = u2). 접하는 중근은 한 번만 나타납니다.
    """
    minus: Tuple[float, ...]
    plus: Tuple[float, ...]
    v: float
    d1: float
    c_minus: float = 1.0
    c_plus: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.minus or not self.plus

    def pairs(self) -> List[Tuple[float, float]]:
        return [(sm, sp) for sm, sp in zip(self.minus, self.plus)]


# =============================================================================
# RH 조건
# =============================================================================

def rh_residual(model: ModelPair, shock: ShockData) -> Tuple[float, float]:
    """
    RH 잔차를 계산합니다.

    Returns:
        (r1, r2) = (v[s] - [f], v[cs + a] - [cf]),  [q] = q+ - q-
    """
    fl = model.fluid
    ad = model.adsorption
    f_m = float(fl.f(shock.s_minus, shock.c_minus))
    f_p = float(fl.f(shock.s_plus, shock.c_plus))
    r1 = shock.v * (shock.s_plus - shock.s_minus) - (f_p - f_m)
    mass_m = shock.c_minus * shock.s_minus + float(ad.a(shock.c_minus))
    mass_p = shock.c_plus * shock.s_plus + float(ad.a(shock.c_plus))
    r2 = shock.v * (mass_p - mass_m) - (shock.c_plus * f_p - shock.c_minus * f_m)
    return r1, r2


def traveling_wave_constants(model: ModelPair, shock: ShockData) -> Tuple[float, float]:
    """진행파 경계 조건에서 정해지는 (d1, d2)"""
    if shock.v == 0:
        raise ValueError("v는 0이 아니어야 합니다")
    f_m = float(model.fluid.f(shock.s_minus, shock.c_minus))
    d1 = f_m / shock.v - shock.s_minus
    d2 = d1 * shock.c_minus - float(model.adsorption.a(shock.c_minus))
    return d1, d2


def _check_bounds(**states: float) -> None:
    for name, value in states.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name}은 [0, 1] 범위여야 합니다: {value}")


# =============================================================================
# s-충격파
# =============================================================================

def s_shock_admissible(
    model: ModelPair,
    s_minus: float,
    s_plus: float,
    c: float,
    v: float,
    with_orbit: bool = False,
) -> ShockVerdict:
    """
    c가 연속인 충격파(s-충격파)의 허용성을 판정합니다.

    검사 순서: 좌측 상태 0, 동일 s, 속도 범위, Oleinik, Lax.

    Args:
        model: 모델 쌍
        s_minus: 좌측 포화도
        s_plus: 우측 포화도
        c: 공통 농도
        v: 충격파 속도 (RH로 결정된 값)
        with_orbit: 진행파 궤도 증거 첨부 여부

    Returns:
        판정 결과
    """
    _check_bounds(s_minus=s_minus, s_plus=s_plus, c=c)
    fl = model.fluid

    if s_minus == 0.0:
        return ShockVerdict(False, ShockReason.ZERO_LEFT_STATE)
    if s_minus == s_plus:
        return ShockVerdict(False, ShockReason.EQUAL_S)
    if not 0.0 < v < model.c1_norm:
        return ShockVerdict(False, ShockReason.VELOCITY_RANGE)

    if not _oleinik_holds(model, s_minus, s_plus, c, v):
        logger.debug(f"Oleinik 실패: s-={s_minus}, s+={s_plus}, c={c}, v={v}")
        return _with_witness(
            ShockVerdict(False, ShockReason.OLEINIK_FAIL), model, s_minus, s_plus, c, v, with_orbit
        )

    lam_plus = float(fl.f_s(s_plus, c))
    lam_minus = float(fl.f_s(s_minus, c))
    lower_ok = lam_plus <= v + LAX_TOL
    upper_ok = v <= lam_minus + LAX_TOL
    both_equal = abs(lam_plus - v) <= LAX_TOL and abs(lam_minus - v) <= LAX_TOL
    if not (lower_ok and upper_ok) or both_equal:
        return _with_witness(
            ShockVerdict(False, ShockReason.LAX_FAIL), model, s_minus, s_plus, c, v, with_orbit
        )

    return _with_witness(
        ShockVerdict(True, ShockReason.OK), model, s_minus, s_plus, c, v, with_orbit
    )


def _oleinik_holds(model: ModelPair, s_minus: float, s_plus: float, c: float, v: float) -> bool:
    """
    (s+ - s-) (f(s) - f(s-) - v (s - s-)) > 0 이 두 상태 사이 전체에서 성립하는지 봅니다.

    표본 사이의 좁은 위반은 psi의 극값점(f_s = v)을 brentq로 정제해 찾습니다.
    """
    fl = model.fluid
    f_m = float(fl.f(s_minus, c))
    direction = float(np.sign(s_plus - s_minus))

    def psi(s):
        return direction * (float(fl.f(s, c)) - f_m - v * (s - s_minus))

    def dpsi(s):
        return float(fl.f_s(s, c)) - v

    grid = np.linspace(s_minus, s_plus, OLEINIK_SAMPLES + 2)
    values = direction * (fl.f(grid, c) - f_m - v * (grid - s_minus))
    if np.any(values[1:-1] <= 0.0):
        return False

    slopes = fl.f_s(grid, c) - v
    lo_end, hi_end = min(s_minus, s_plus), max(s_minus, s_plus)
    for i in np.nonzero(slopes[:-1] * slopes[1:] < 0.0)[0]:
        lo, hi = sorted((float(grid[i]), float(grid[i + 1])))
        s_ext = brentq(dpsi, lo, hi, xtol=OLEINIK_XTOL)
        if s_ext - lo_end <= OLEINIK_END_GUARD or hi_end - s_ext <= OLEINIK_END_GUARD:
            continue
        if psi(s_ext) <= 0.0:
            return False
    return True


def _with_witness(verdict, model, s_minus, s_plus, c, v, with_orbit) -> ShockVerdict:
    if with_orbit:
        verdict.witness = traveling_wave_orbit(model, ShockData(s_minus, s_plus, c, c, v))
    return verdict


# =============================================================================
# c-충격파
# =============================================================================

def _level_roots(model: ModelPair, c: float, v: float, d1: float) -> Tuple[float, ...]:
    """f(s, c) - v (s + d1) = 0 의 [0, 1] 근 (중근 포함)"""
    fl = model.fluid

    def h(s):
        return float(fl.f(s, c)) - v * (s + d1)

    def dh(s):
        return float(fl.f_s(s, c)) - v

    grid = np.linspace(0.0, 1.0, ROOT_SCAN_POINTS + 1)
    values = fl.f(grid, c) - v * (grid + d1)
    roots: List[float] = []

    for i in range(len(grid) - 1):
        lo, hi = grid[i], grid[i + 1]
        if values[i] == 0.0:
            roots.append(float(lo))
        elif values[i] * values[i + 1] < 0.0:
            roots.append(brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if values[-1] == 0.0:
        roots.append(1.0)

    # 극값에서의 접하는 근
    slopes = fl.f_s(grid, c) - v
    for i in range(len(grid) - 1):
        if slopes[i] * slopes[i + 1] < 0.0:
            s_ext = brentq(dh, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if abs(h(s_ext)) <= TANGENT_TOL:
                roots.append(s_ext)

    roots.sort()
    merged: List[float] = []
    for r in roots:
        if merged and r - merged[-1] < MERGE_TOL:
            continue
        merged.append(r)
    return tuple(merged)


def c_shock_roots(model: ModelPair, v: float, c_minus: float, c_plus: float) -> CShockRoots:
    """
    주어진 속도와 농도 점프에 대한 c-충격파 RH 근을 찾습니다.

    c- <= c+ 이거나 v <= 0 이면 빈 결과를 반환합니다.
    """
    if c_minus <= c_plus or v <= 0.0:
        return CShockRoots((), (), v, float("nan"), c_minus, c_plus)
    ad = model.adsorption
    d1 = float(ad.a(c_plus) - ad.a(c_minus)) / (c_plus - c_minus)
    minus = _level_roots(model, c_minus, v, d1)
    plus = _level_roots(model, c_plus, v, d1)
    logger.debug(f"c-충격파 근: v={v}, minus={minus}, plus={plus}")
    return CShockRoots(minus, plus, v, d1, c_minus, c_plus)


def _root_index(roots: Tuple[float, ...], s: float) -> Optional[int]:
    if not roots:
        return None
    distances = [abs(r - s) for r in roots]
    i = int(np.argmin(distances))
    return i if distances[i] <= MERGE_TOL else None


def c_shock_admissible(model: ModelPair, shock: ShockData, with_orbit: bool = False) -> ShockVerdict:
    """
    c가 점프하는 충격파의 허용성을 판정합니다.

    c 증가, 속도 범위, 좌측 상태 0, u2- -> u1+ 패턴을 배제합니다.

    Raises:
        ValueError: c가 연속이거나 RH 잔차가 허용 오차를 넘는 경우
    """
    if not shock.is_c_shock:
        raise ValueError("c-충격파가 아닙니다 (c- == c+)")
    if shock.c_plus > shock.c_minus:
        return ShockVerdict(False, ShockReason.C_INCREASING)
    if not 0.0 < shock.v < model.c1_norm:
        return ShockVerdict(False, ShockReason.VELOCITY_RANGE)
    if shock.s_minus == 0.0:
        return ShockVerdict(False, ShockReason.ZERO_LEFT_STATE)

    r1, r2 = rh_residual(model, shock)
    if max(abs(r1), abs(r2)) > RH_TOL:
        raise ValueError(f"RH 조건 불일치: r1={r1:.3e}, r2={r2:.3e}")

    roots = c_shock_roots(model, shock.v, shock.c_minus, shock.c_plus)
    i_plus = _root_index(roots.plus, shock.s_plus)
    if i_plus is None:
        raise ValueError(f"우측 상태가 RH 근과 일치하지 않습니다: s+={shock.s_plus}, plus={roots.plus}")

    verdict = ShockVerdict(True, ShockReason.OK)
    # 좌측 상태 아래에 떨어진 근이 있으면 u2-
    is_u2_minus = any(r < shock.s_minus - DOUBLE_ROOT_TOL for r in roots.minus)
    is_u1_plus = len(roots.plus) == 2 and i_plus == 0
    if is_u2_minus and is_u1_plus:
        verdict = ShockVerdict(False, ShockReason.U2_TO_U1)

    if with_orbit:
        verdict.witness = traveling_wave_orbit(model, shock)
    return verdict


def _eigenvalues(model: ModelPair, s: float, c: float, v: float, d1: float) -> Tuple[float, float]:
    """진행파계 Jacobian 고유값 (s 방향, c 방향). Jacobian은 상삼각입니다."""
    lam_s = float(model.fluid.f_s(s, c)) - v
    lam_c = v * (d1 - float(model.adsorption.a_z(c)))
    return lam_s, lam_c


def critical_point_type(model: ModelPair, roots: CShockRoots, index: int, side: str) -> str:
    """
    진행파계 임계점의 유형을 분류합니다.

    Args:
        model: 모델 쌍
        roots: c_shock_roots 결과
        index: 근 인덱스 (0 = u1, 1 = u2)
        side: "minus" 또는 "plus"

    Returns:
        "source" | "saddle" | "sink" | "saddle-node"
    """
    if side not in ("minus", "plus"):
        raise ValueError(f"side는 minus 또는 plus여야 합니다: {side}")
    states = roots.minus if side == "minus" else roots.plus
    if not 0 <= index < len(states):
        raise ValueError(f"index 범위를 벗어났습니다: {index} (근 {len(states)}개)")

    c = roots.c_minus if side == "minus" else roots.c_plus
    lam_s, lam_c = _eigenvalues(model, states[index], c, roots.v, roots.d1)
    if abs(lam_s) <= TANGENT_TOL:
        return "saddle-node"
    if lam_s > 0 and lam_c > 0:
        return "source"
    if lam_s < 0 and lam_c < 0:
        return "sink"
    return "saddle"


# =============================================================================
# 진행파 궤도 오라클
# =============================================================================

# 적분 구간 (xi) 상한
ORBIT_XI_MAX = 1e4
# 도착 판정 반경
ORBIT_HIT_RADIUS = 1e-4
# 초기 섭동 크기
ORBIT_DELTA = 1e-6
ORBIT_DELTA_TANGENT = 1e-3
# 우측 상태에서 이 거리 밖에서 멈추면 연결 없음
STALL_DISTANCE = 1e-3
# s 탈출 경계
ORBIT_BOX = (-0.05, 1.05)
# 발원점(source)에서의 사격 방향 수와 이분 횟수
SHOOTING_DIRECTIONS = 16
SHOOTING_BISECTIONS = 60


def traveling_wave_orbit(
    model: ModelPair,
    shock: ShockData,
    xi_max: float = ORBIT_XI_MAX,
    hit_radius: float = ORBIT_HIT_RADIUS,
) -> OrbitResult:
    """
    진행파 동역학계를 (s-, c-) 근방에서 출발해 적분하고 (s+, c+) 도달 여부를 판정합니다.

    s-충격파는 c가 고정된 스칼라 흐름이 되고, c-충격파는 불안정 고유벡터를 따라
    (안장점) 또는 방향 사격과 이분법으로 (발원점) 연결 궤도를 찾습니다.

    Returns:
        connected / no-connection / inconclusive 중 하나를 담은 결과.
        xi 예산을 소진했지만 우측 상태 근처에 있으면 inconclusive 입니다.
    """
    if shock.s_minus == shock.s_plus and shock.c_minus == shock.c_plus:
        return OrbitResult(
            OrbitStatus.CONNECTED, 0.0, shock.s_plus, shock.c_plus, detail="zero-jump"
        )
    if shock.v <= 0.0:
        raise ValueError(f"v는 양수여야 합니다: {shock.v}")

    d1, d2 = traveling_wave_constants(model, shock)
    if not shock.is_c_shock:
        return _scalar_orbit(model, shock, d1, xi_max, hit_radius)
    if shock.c_plus > shock.c_minus:
        # c는 모든 궤도에서 감소
        return OrbitResult(OrbitStatus.NO_CONNECTION, detail="c-increasing")
    return _planar_orbit(model, shock, d1, d2, xi_max, hit_radius)


def _scalar_orbit(
    model: ModelPair, shock: ShockData, d1: float, xi_max: float, hit_radius: float
) -> OrbitResult:
    fl = model.fluid
    c = shock.c_minus
    v = shock.v
    s_target = shock.s_plus

    def rhs(xi, y):
        return [float(fl.f(y[0], c)) - v * (y[0] + d1)]

    def hit(xi, y):
        return abs(y[0] - s_target) - hit_radius

    hit.terminal = True

    direction = float(np.sign(s_target - shock.s_minus))
    slope = float(fl.f_s(shock.s_minus, c)) - v
    delta = ORBIT_DELTA_TANGENT if abs(slope) < 1e-4 else ORBIT_DELTA
    delta = min(delta, 0.5 * abs(s_target - shock.s_minus))
    s0 = shock.s_minus + direction * delta

    if rhs(0.0, [s0])[0] * direction <= 0.0:
        return OrbitResult(OrbitStatus.NO_CONNECTION, 0.0, s0, c, detail="wrong initial sign")

    sol = solve_ivp(rhs, (0.0, xi_max), [s0], method="RK45", events=[hit], rtol=1e-9, atol=1e-12)
    s_end = float(sol.y[0, -1])
    path = np.column_stack([sol.y[0], np.full(sol.y.shape[1], c)])
    if sol.t_events[0].size:
        return OrbitResult(OrbitStatus.CONNECTED, float(sol.t[-1]), s_end, c, path)
    if abs(s_end - s_target) > STALL_DISTANCE:
        return OrbitResult(
            OrbitStatus.NO_CONNECTION, float(sol.t[-1]), s_end, c, path, detail="stalled"
        )
    logger.warning(f"궤도 판정 불확정: s_end={s_end}, s+={s_target}")
    return OrbitResult(OrbitStatus.INCONCLUSIVE, float(sol.t[-1]), s_end, c, path)


def _planar_orbit(
    model: ModelPair,
    shock: ShockData,
    d1: float,
    d2: float,
    xi_max: float,
    hit_radius: float,
) -> OrbitResult:
    fl = model.fluid
    ad = model.adsorption
    v = shock.v
    target = np.array([shock.s_plus, shock.c_plus])

    def rhs(xi, y):
        s, c = y
        return [float(fl.f(s, c)) - v * (s + d1), v * (d1 * c - d2 - float(ad.a(c)))]

    def hit(xi, y):
        return float(np.hypot(y[0] - target[0], y[1] - target[1])) - hit_radius

    def exit_low(xi, y):
        return y[0] - ORBIT_BOX[0]

    def exit_high(xi, y):
        return ORBIT_BOX[1] - y[0]

    for event in (hit, exit_low, exit_high):
        event.terminal = True

    def shoot(y0) -> Tuple[OrbitResult, int]:
        sol = solve_ivp(
            rhs, (0.0, xi_max), y0, method="RK45",
            events=[hit, exit_low, exit_high], rtol=1e-9, atol=1e-12,
        )
        s_end, c_end = float(sol.y[0, -1]), float(sol.y[1, -1])
        xi_end = float(sol.t[-1])
        path = sol.y.T
        if sol.t_events[0].size:
            return OrbitResult(OrbitStatus.CONNECTED, xi_end, s_end, c_end, path), 0
        if sol.t_events[1].size:
            return OrbitResult(OrbitStatus.NO_CONNECTION, xi_end, s_end, c_end, path, "exit"), -1
        if sol.t_events[2].size:
            return OrbitResult(OrbitStatus.NO_CONNECTION, xi_end, s_end, c_end, path, "exit"), 1
        side = 1 if s_end > target[0] else -1
        distance = float(np.hypot(s_end - target[0], c_end - target[1]))
        if sol.status >= 0 and distance > STALL_DISTANCE:
            return (
                OrbitResult(
                    OrbitStatus.NO_CONNECTION, xi_end, s_end, c_end, path, "other critical point"
                ),
                side,
            )
        return OrbitResult(OrbitStatus.INCONCLUSIVE, xi_end, s_end, c_end, path), side

    start = np.array([shock.s_minus, shock.c_minus])
    lam_s, lam_c = _eigenvalues(model, shock.s_minus, shock.c_minus, v, d1)
    f_c = float(fl.f_c(shock.s_minus, shock.c_minus))

    if lam_s <= TANGENT_TOL:
        # 안장점 또는 안장-결절점: 강한 불안정 다양체는 하나
        e = np.array([-f_c / (lam_c - lam_s), -1.0])
        e /= np.linalg.norm(e)
        result, _ = shoot(start + ORBIT_DELTA * e)
        return result

    thetas = np.pi * (np.arange(SHOOTING_DIRECTIONS) + 0.5) / SHOOTING_DIRECTIONS

    def direction(theta: float) -> np.ndarray:
        return start + ORBIT_DELTA * np.array([np.cos(theta), -np.sin(theta)])

    outcomes = []
    for theta in thetas:
        result, side = shoot(direction(theta))
        if result.connected:
            return result
        outcomes.append((theta, result, side))

    for (th_a, res_a, side_a), (th_b, res_b, side_b) in zip(outcomes, outcomes[1:]):
        if side_a == side_b or not (res_a.conclusive and res_b.conclusive):
            continue
        lo, hi = th_a, th_b
        result = res_a
        for _ in range(SHOOTING_BISECTIONS):
            mid = 0.5 * (lo + hi)
            result, side = shoot(direction(mid))
            if result.connected:
                return result
            if side == side_a:
                lo = mid
            else:
                hi = mid
        logger.warning(f"사격 이분법이 연결 궤도에 도달하지 못했습니다: theta={lo:.6f}")
        return OrbitResult(
            OrbitStatus.INCONCLUSIVE, result.xi_end, result.s_end, result.c_end, result.path,
            "bisection exhausted",
        )

    last = outcomes[-1][1]
    status = (
        OrbitStatus.NO_CONNECTION
        if all(res.conclusive for _, res, _ in outcomes)
        else OrbitStatus.INCONCLUSIVE
    )
    return OrbitResult(status, last.xi_end, last.s_end, last.c_end, last.path, "no side change")


# =============================================================================
# 좌표 사이 충격파 사상
# =============================================================================

def map_shock_to_lagrange(model: ModelPair, shock: ShockData) -> LagrangeShock:
    """
    원 좌표 충격파를 Lagrange 좌표로 옮깁니다.

    좌우가 바뀝니다: U+ = 1/f(s-, c-), U- = 1/f(s+, c+), zeta+ = c-, zeta- = c+.
    v* = f-/v - s- 이며 이는 진행파 상수 d1과 같습니다.

    Raises:
        ValueError: s- = 0 (변환이 정의되지 않음)
    """
    if shock.s_minus <= 0.0:
        raise ValueError(f"s_minus는 양수여야 합니다: {shock.s_minus}")
    if shock.v <= 0.0:
        raise ValueError(f"v는 양수여야 합니다: {shock.v}")
    fl = model.fluid
    f_m = float(fl.f(shock.s_minus, shock.c_minus))
    f_p = float(fl.f(shock.s_plus, shock.c_plus))
    return LagrangeShock(
        U_minus=np.inf if f_p == 0.0 else 1.0 / f_p,
        U_plus=1.0 / f_m,
        zeta_minus=shock.c_plus,
        zeta_plus=shock.c_minus,
        v_star=f_m / shock.v - shock.s_minus,
    )


def map_shock_from_lagrange(flux: LagrangeFlux, shock: LagrangeShock) -> ShockData:
    """Lagrange 좌표 충격파를 원 좌표로 되돌립니다 (v = f- / (v* + s-))."""
    s_minus = flux.vartheta(shock.U_plus, shock.zeta_plus)
    s_plus = 0.0 if np.isinf(shock.U_minus) else flux.vartheta(shock.U_minus, shock.zeta_minus)
    denominator = shock.v_star + s_minus
    if denominator <= 0.0:
        raise ValueError(f"v* + s- 가 양수가 아닙니다: {denominator}")
    return ShockData(
        s_minus=s_minus,
        s_plus=s_plus,
        c_minus=shock.zeta_plus,
        c_plus=shock.zeta_minus,
        v=(1.0 / shock.U_plus) / denominator,
    ).with_constants(flux.model)


def lagrange_rh_residual(flux: LagrangeFlux, shock: LagrangeShock) -> Tuple[float, float]:
    """(v*[U] - [F], v*[zeta] - [a]),  [q] = q+ - q-"""
    if np.isinf(shock.U_minus) or np.isinf(shock.U_plus):
        raise ValueError("무한대 U를 가진 충격파의 잔차는 정의되지 않습니다")
    ad = flux.adsorption
    r1 = shock.v_star * (shock.U_plus - shock.U_minus) - (
        flux.flux(shock.U_plus, shock.zeta_plus) - flux.flux(shock.U_minus, shock.zeta_minus)
    )
    r2 = shock.v_star * (shock.zeta_plus - shock.zeta_minus) - float(
        ad.a(shock.zeta_plus) - ad.a(shock.zeta_minus)
    )
    return r1, r2


def lagrange_lax_holds(
    flux: LagrangeFlux,
    U_minus: float,
    U_plus: float,
    zeta: float,
    v_star: float,
    tol: float = LAX_TOL,
) -> bool:
    """F_U(U+, zeta) <= v* <= F_U(U-, zeta)"""
    return flux.flux_u(U_plus, zeta) <= v_star + tol and v_star <= flux.flux_u(U_minus, zeta) + tol
