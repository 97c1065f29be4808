"""
역변환 모듈

Lagrange 좌표 해 (U, zeta)(phi, x)를 물리 좌표 (s, c)(x, t)로 되돌립니다.
t(phi, x) = phi + int_0^x s U dx' 이고, t < t0(x) 인 영역 Omega_0 에서는 s = c = 0 입니다.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, quad
from scipy.optimize import brentq

from app.exceptions import ConvergenceError, GridMismatchError
from app.model import ModelPair
from app.u_solution import USolution

logger = logging.getLogger(__name__)

QUAD_LIMIT = 200
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10

GRID_COLUMNS = ["x", "t", "s", "c"]


# =============================================================================
# 격자 장
# =============================================================================

@dataclass
class GridField:
    """균일 (x, t) 격자 위의 s, c 배열 (배열 모양은 (nx, nt))"""
    x: np.ndarray
    t: np.ndarray
    s: np.ndarray
    c: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.x.size, self.t.size)
        if self.s.shape != shape or self.c.shape != shape:
            raise ValueError(f"s, c 모양은 {shape} 이어야 합니다: s={self.s.shape}, c={self.c.shape}")

    def same_grid(self, other: "GridField", tol: float = 1e-12) -> bool:
        return (
            self.x.shape == other.x.shape
            and self.t.shape == other.t.shape
            and bool(np.allclose(self.x, other.x, rtol=0, atol=tol))
            and bool(np.allclose(self.t, other.t, rtol=0, atol=tol))
        )

    def require_same_grid(self, other: "GridField") -> None:
        if not self.same_grid(other):
            raise GridMismatchError(
                f"격자가 다릅니다: ({self.x.size}x{self.t.size}) vs ({other.x.size}x{other.t.size})"
            )

    def column(self, t: float, which: str = "s") -> np.ndarray:
        """시각 t에 가장 가까운 격자 시각의 s 또는 c 단면"""
        j = int(np.argmin(np.abs(self.t - t)))
        return getattr(self, which)[:, j]

    def to_frame(self) -> pd.DataFrame:
        """x, t, s, c 열 (x 우선 순서)"""
        X, T = np.meshgrid(self.x, self.t, indexing="ij")
        return pd.DataFrame(
            {"x": X.ravel(), "t": T.ravel(), "s": self.s.ravel(), "c": self.c.ravel()}
        )[GRID_COLUMNS]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.12g")
        logger.info(f"GridField 저장: {path} ({self.x.size}x{self.t.size})")
        return path

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, **metadata: Any) -> "GridField":
        x = np.unique(frame["x"].to_numpy())
        t = np.unique(frame["t"].to_numpy())
        ordered = frame.sort_values(["x", "t"])
        shape = (x.size, t.size)
        return cls(
            x, t,
            ordered["s"].to_numpy().reshape(shape),
            ordered["c"].to_numpy().reshape(shape),
            dict(metadata),
        )


# =============================================================================
# 점 단위 역변환
# =============================================================================

def _split_points(solution: USolution, phi: float, x: float) -> List[float]:
    """고정 phi에서 x' 방향으로 만나는 불연속/꺾임 위치"""
    zf = solution.zf
    riemann = solution.riemann
    candidates = []
    if phi > 0:
        candidates.append(zf.front_inverse(phi))
    if phi > zf.t_inj:
        candidates.append((phi - zf.t_inj) / zf.a1)
        candidates.append((phi - zf.t_inj) / zf.a0)
    k = riemann.k_minus
    if k > 0:
        candidates.append(phi / k)
        candidates.append(zf.x_A + (phi - zf.phi_A) / k)
    return sorted(p for p in candidates if 0.0 < p < x)


def _integrand(solution: USolution, phi: float):
    flux = solution.flux
    zf = solution.zf

    def s_times_u(xp: float) -> float:
        U = solution.eval_U(phi, xp)
        zeta = float(zf.eval_zeta(phi, xp))
        return flux.vartheta(U, zeta) * U

    return s_times_u


def time_of(solution: USolution, phi: float, x: float) -> float:
    """
    t(phi, x) = phi + int_0^x (-F)(U, zeta)(phi, x') dx'

    적분 구간은 알려진 전면/부채꼴 경계에서 나눕니다.

    Raises:
        ConvergenceError: 적분이 수렴하지 않음
    """
    if phi < 0 or x < 0:
        raise ValueError(f"(phi, x)는 0 이상이어야 합니다: ({phi}, {x})")
    if x == 0.0:
        return float(phi)
    points = _split_points(solution, phi, x)
    result = quad(
        _integrand(solution, phi), 0.0, x,
        points=points or None, limit=QUAD_LIMIT,
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 1e-6 * max(1.0, abs(value)):
        logger.error(f"time_of 적분 실패: phi={phi}, x={x}, abserr={abserr:.3e}, {result[3]}")
        raise ConvergenceError(f"time_of 적분이 수렴하지 않습니다 (phi={phi}, x={x})")
    return float(phi + value)


def t0_curve(solution: USolution, x) -> np.ndarray:
    """Omega_0 경계 t0(x) = t(0+, x)"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([time_of(solution, 0.0, float(xi)) for xi in x])


def potential_of(solution: USolution, x: float, t: float) -> float:
    """
    time_of(phi, x) = t 인 phi (phi에 대해 단조 증가).

    Raises:
        ValueError: t < t0(x) (Omega_0 안의 점)
    """
    if x == 0.0:
        return float(t)
    t0 = time_of(solution, 0.0, x)
    if t < t0:
        raise ValueError(f"(x={x}, t={t})는 Omega_0 안에 있습니다 (t0={t0})")
    if t == t0:
        return 0.0
    return brentq(lambda p: time_of(solution, p, x) - t, 0.0, t, xtol=1e-12)


# =============================================================================
# Riemann 극한
# =============================================================================

def _inverse_speed(model: ModelPair, xi: float, c: float, s_lo: float) -> float:
    """f_s(s, c) = xi 인 s in [s_lo, 1] (변곡점 위 감소 가지)"""
    fl = model.fluid
    if xi <= 0.0:
        return 1.0
    if fl.f_s(s_lo, c) <= xi:
        return s_lo
    return brentq(lambda s: float(fl.f_s(s, c)) - xi, s_lo, 1.0, xtol=1e-14)


def riemann_profile(solution: USolution, x: float, t: float) -> Tuple[float, float]:
    """
    일정 주입(s = 1, c = 1) Riemann 해의 (s, c)(x, t).

    c = 1 부채꼴, OA 화학 충격파, c = 0 의 파동, 선두 포화도 충격파 순서입니다.
    """
    if t <= 0.0:
        return (1.0, 1.0) if x <= 0.0 else (0.0, 0.0)
    model = solution.flux.model
    fl = model.fluid
    riemann = solution.riemann
    shock = riemann.oa_shock
    xi = x / t

    if xi < shock.v:
        return _inverse_speed(model, xi, 1.0, shock.s_minus), 1.0

    s_plus = shock.s_plus
    s_w = solution.flux.welge_saturation(0.0)
    if riemann.mode == "fan" and s_plus > s_w:
        if xi < fl.f_s(s_plus, 0.0):
            return s_plus, 0.0
        if xi < fl.f_s(s_w, 0.0):
            return _inverse_speed(model, xi, 0.0, s_w), 0.0
        return 0.0, 0.0
    front_speed = float(fl.f(s_plus, 0.0)) / s_plus
    return (s_plus, 0.0) if xi < front_speed else (0.0, 0.0)


# =============================================================================
# 격자 표본
# =============================================================================

@dataclass
class LagrangeTable:
    """phi 격자 x x 격자 위의 t(phi, x) 누적 적분 표"""
    phi: np.ndarray
    x: np.ndarray
    t: np.ndarray
    unsupported: int = 0


def lagrange_table(solution: USolution, x_grid, n_phi: int, phi_max: float) -> LagrangeTable:
    """
    t(phi, x)를 x 방향 누적 사다리꼴 적분으로 한꺼번에 계산합니다.

    Args:
        solution: U 해
        x_grid: 0에서 시작하는 오름차순 x 격자
        n_phi: phi 격자 크기
        phi_max: phi 상한 (t <= phi_max 구간 역변환에 충분)
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 2 or x_grid[0] != 0.0:
        raise ValueError("x_grid는 0에서 시작하고 2개 이상이어야 합니다")
    if n_phi < 2 or not phi_max > 0:
        raise ValueError(f"n_phi >= 2, phi_max > 0 이어야 합니다: n_phi={n_phi}, phi_max={phi_max}")
    phi = np.linspace(0.0, phi_max, n_phi)
    PHI, X = np.meshgrid(phi, x_grid, indexing="ij")
    U, unsupported = _eval_lenient(solution, PHI, X)
    zeta = solution.zf.eval_zeta(PHI, X)
    s = solution.flux.vartheta_many(U, zeta)
    t = phi[:, None] + cumulative_trapezoid(s * U, x_grid, axis=1, initial=0.0)
    # 격자 오차로 인한 미세한 비단조 제거
    t = np.maximum.accumulate(t, axis=0)
    return LagrangeTable(phi, x_grid, t, unsupported)


def _eval_lenient(solution: USolution, phi: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, int]:
    """특성선 충돌 이후 점은 U-_OA로 채우고 개수를 셉니다."""
    U = solution.eval_U_many(phi, x, strict=False)
    missing = np.isnan(U)
    unsupported = int(missing.sum())
    if unsupported:
        logger.warning(f"전면 아래 특성선 충돌 영역 점 {unsupported}개를 U-_OA로 채웠습니다")
        U = np.where(missing, solution.riemann.u_minus, U)
    return U, unsupported


def sample_grid(
    solution: USolution,
    nx: int,
    nt: int,
    x_max: float,
    t_max: float,
    n_phi: int = 400,
    x_refine: int = 1,
) -> GridField:
    """
    균일 (x, t) 격자에서 물리 해 (s, c)를 표본합니다.

    각 x 열에서 t < t0(x) 이면 (0, 0), 그 외에는 t(phi, x) = t 를 phi에 대해 풀고
    s = vartheta_zeta(U), c = zeta 로 둡니다.

    Raises:
        ConvergenceError: t가 표의 범위를 벗어남
    """
    if nx < 2 or nt < 2:
        raise ValueError(f"nx, nt는 2 이상이어야 합니다: nx={nx}, nt={nt}")
    if not x_max > 0 or not t_max > 0:
        raise ValueError(f"x_max, t_max는 양수여야 합니다: x_max={x_max}, t_max={t_max}")
    if x_refine < 1:
        raise ValueError(f"x_refine은 1 이상이어야 합니다: {x_refine}")

    x = np.linspace(0.0, x_max, nx)
    t = np.linspace(0.0, t_max, nt)
    fine_x = np.linspace(0.0, x_max, (nx - 1) * x_refine + 1)
    table = lagrange_table(solution, fine_x, n_phi, t_max)
    t_cols = table.t[:, ::x_refine]

    PHI = np.zeros((nx, nt))
    wet = np.zeros((nx, nt), dtype=bool)
    for j in range(nx):
        column = t_cols[:, j]
        if x[j] == 0.0:
            PHI[j] = t
            wet[j] = True
            continue
        mask = t >= column[0]
        if np.any(t[mask] > column[-1] + 1e-12):
            raise ConvergenceError(f"x={x[j]}에서 t={t_max}가 표 범위를 벗어납니다")
        PHI[j, mask] = np.interp(t[mask], column, table.phi)
        wet[j] = mask

    s = np.zeros((nx, nt))
    c = np.zeros((nx, nt))
    X = np.broadcast_to(x[:, None], (nx, nt))
    U, unsupported = _eval_lenient(solution, PHI[wet], X[wet])
    zeta = np.asarray(solution.zf.eval_zeta(PHI[wet], X[wet]), dtype=float)
    s[wet] = solution.flux.vartheta_many(U, zeta)
    c[wet] = zeta
    metadata = {
        **solution.flux.model.to_dict(),
        "t_inj": solution.zf.t_inj,
        "n_phi": n_phi,
        "unsupported": table.unsupported + unsupported,
    }
    logger.info(f"물리 격자 표본 완료: {nx}x{nt}, Omega_0 점 {int((~wet).sum())}개")
    return GridField(x, t, s, c, metadata)
