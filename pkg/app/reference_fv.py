"""
유한체적 기준해 모듈

점성 계

    s_t + f(s, c)_x = eps s_xx
    (c s + a(c))_t + (c f(s, c))_x = eps (c s_x)_x + eps c_xx

를 1차 국소 Lax-Friedrichs(Rusanov) 양해법으로 풉니다. 보존 변수는 (s, m = c s + a(c))이고
c는 셀마다 m에서 복원합니다. eps -> 0 극한이 반해석 해와 비교하는 기준입니다.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.exceptions import ConvergenceError
from app.inverse_transform import GridField
from app.model import ModelPair

logger = logging.getLogger(__name__)

CFL_MAX = 0.4
# 복원된 c의 [0, 1] 허용 오차
C_RECOVERY_TOL = 1e-9
# 갱신된 s의 [0, 1] 허용 오차 (넘으면 수치 불안정)
S_RANGE_TOL = 1e-6


@dataclass(frozen=True)
class FVConfig:
    """점성 계 유한체적 설정"""
    eps: float
    dx: float
    cfl: float = 0.4
    length: float = 3.0
    final_time: float = 1.5
    nt_out: int = 31
    t_inj: float = 1.0
    c_inj: float = 1.0
    s_inlet: float = 1.0
    s_init: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps는 양수여야 합니다: {self.eps}")
        if not self.dx > 0:
            raise ValueError(f"dx는 양수여야 합니다: {self.dx}")
        if not 0 < self.cfl <= CFL_MAX:
            raise ValueError(f"cfl은 (0, {CFL_MAX}] 범위여야 합니다: {self.cfl}")
        if not self.length > self.dx:
            raise ValueError(f"length는 dx보다 커야 합니다: {self.length}")
        if not self.final_time > 0:
            raise ValueError(f"final_time은 양수여야 합니다: {self.final_time}")
        if self.nt_out < 2:
            raise ValueError(f"nt_out은 2 이상이어야 합니다: {self.nt_out}")
        if self.t_inj < 0:
            raise ValueError(f"t_inj는 0 이상이어야 합니다: {self.t_inj}")
        for name in ("c_inj", "s_inlet", "s_init"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}은 [0, 1] 범위여야 합니다: {value}")

    @property
    def n_cells(self) -> int:
        return int(round(self.length / self.dx))

    def inlet_concentration(self, t: float) -> float:
        return self.c_inj if t < self.t_inj else 0.0

    @classmethod
    def for_eps(cls, eps: float, dx_per_eps: float = 0.5, **kwargs) -> "FVConfig":
        return cls(eps=eps, dx=eps * dx_per_eps, **kwargs)


# =============================================================================
# 풀이
# =============================================================================

def recover_concentration(model: ModelPair, m: np.ndarray, s: np.ndarray) -> np.ndarray:
    """
    c s + a(c) = m 을 c에 대해 풉니다.

    Raises:
        ConvergenceError: 복원된 c가 [0, 1] 밖
    """
    c = model.adsorption.concentration_from_mass(m, s)
    if np.any(c < -C_RECOVERY_TOL) or np.any(c > 1.0 + C_RECOVERY_TOL) or np.any(np.isnan(c)):
        bad = int(np.argmax((c < -C_RECOVERY_TOL) | (c > 1.0 + C_RECOVERY_TOL) | np.isnan(c)))
        raise ConvergenceError(f"c 복원 근이 [0, 1] 밖입니다: cell={bad}, m={m[bad]}, s={s[bad]}, c={c[bad]}")
    return np.clip(c, 0.0, 1.0)


def _local_speed(model: ModelPair, s: np.ndarray, c: np.ndarray) -> np.ndarray:
    fl = model.fluid
    ad = model.adsorption
    return (
        np.abs(fl.f_s(s, c))
        + np.abs(fl.f_c(s, c))
        + fl.f(s, c) / (s + ad.a_z(c))
    )


def run_fv(model: ModelPair, cfg: FVConfig) -> GridField:
    """
    양해법으로 final_time까지 진행하고 nt_out개의 균일 시각에서 셀 값을 기록합니다.

    입구 유령 셀은 (s_inlet, 주입 일정의 c), 출구는 0차 외삽입니다.
    s는 잘라내지 않으며, 경계를 지난 s 누적 유량을 metadata의 inflow_s, outflow_s로 남깁니다.

    Args:
        model: 모델 쌍
        cfg: 유한체적 설정

    Returns:
        셀 중심 x 격자의 GridField

    Raises:
        ConvergenceError: s 또는 복원된 c가 허용 오차 이상 [0, 1]을 벗어남
    """
    ad = model.adsorption
    fl = model.fluid
    n = cfg.n_cells
    dx = cfg.length / n
    eps = cfg.eps
    x = (np.arange(n) + 0.5) * dx
    t_out = np.linspace(0.0, cfg.final_time, cfg.nt_out)

    s = np.full(n, cfg.s_init)
    c = np.zeros(n)
    m = c * s + ad.a(c)
    s_hist = np.empty((n, cfg.nt_out))
    c_hist = np.empty((n, cfg.nt_out))
    s_hist[:, 0] = s
    c_hist[:, 0] = c

    t = 0.0
    steps = 0
    inflow_s = 0.0
    outflow_s = 0.0
    diffusion_bound = 4.0 * eps / dx ** 2
    for k in range(1, cfg.nt_out):
        while t < t_out[k] - 1e-14:
            c_in = cfg.inlet_concentration(t)
            s_g = np.concatenate(([cfg.s_inlet], s, [s[-1]]))
            c_g = np.concatenate(([c_in], c, [c[-1]]))
            m_g = c_g * s_g + ad.a(c_g)
            f_g = fl.f(s_g, c_g)
            speed = _local_speed(model, s_g, c_g)
            alpha = np.maximum(speed[:-1], speed[1:])

            dt = cfg.cfl / (float(np.max(alpha)) / dx + diffusion_bound)
            dt = min(dt, t_out[k] - t)
            if cfg.t_inj > t and t + dt > cfg.t_inj:
                dt = cfg.t_inj - t

            flux_s = 0.5 * (f_g[:-1] + f_g[1:]) - 0.5 * alpha * (s_g[1:] - s_g[:-1])
            cf = c_g * f_g
            flux_m = 0.5 * (cf[:-1] + cf[1:]) - 0.5 * alpha * (m_g[1:] - m_g[:-1])

            ds = np.diff(s_g)
            dc = np.diff(c_g)
            c_face = 0.5 * (c_g[:-1] + c_g[1:])
            diff_s = eps * ds / dx
            diff_m = eps * (c_face * ds + dc) / dx

            s = s - dt / dx * np.diff(flux_s - diff_s)
            m = m - dt / dx * np.diff(flux_m - diff_m)
            if np.any(s < -S_RANGE_TOL) or np.any(s > 1.0 + S_RANGE_TOL) or np.any(np.isnan(s)):
                bad = int(np.argmax((s < -S_RANGE_TOL) | (s > 1.0 + S_RANGE_TOL) | np.isnan(s)))
                raise ConvergenceError(f"s가 [0, 1] 밖입니다: t={t:.6g}, cell={bad}, s={s[bad]}")
            inflow_s += dt * float(flux_s[0] - diff_s[0])
            outflow_s += dt * float(flux_s[-1] - diff_s[-1])
            c = recover_concentration(model, m, s)
            t += dt
            steps += 1
        s_hist[:, k] = s
        c_hist[:, k] = c

    logger.info(f"FV 완료: eps={eps}, dx={dx:.4g}, cells={n}, steps={steps}")
    metadata = {
        **model.to_dict(), "eps": eps, "dx": dx, "t_inj": cfg.t_inj, "steps": steps,
        "inflow_s": inflow_s, "outflow_s": outflow_s,
    }
    return GridField(x, t_out, s_hist, c_hist, metadata)


# =============================================================================
# 비교
# =============================================================================

def resample(field: GridField, x) -> GridField:
    """각 시각 단면을 새 x 격자로 선형 보간합니다."""
    x = np.asarray(x, dtype=float)
    s = np.column_stack([np.interp(x, field.x, field.s[:, j]) for j in range(field.t.size)])
    c = np.column_stack([np.interp(x, field.x, field.c[:, j]) for j in range(field.t.size)])
    return GridField(x, field.t.copy(), s, c, dict(field.metadata))


def compare_fields(a: GridField, b: GridField, which: str = "s") -> float:
    """
    격자 가중 L1 거리 sum |a - b| dx dt.

    Raises:
        GridMismatchError: 격자가 다름
    """
    if which not in ("s", "c"):
        raise ValueError(f"which는 's' 또는 'c'여야 합니다: {which}")
    a.require_same_grid(b)
    dx = float(a.x[1] - a.x[0]) if a.x.size > 1 else 1.0
    dt = float(a.t[1] - a.t[0]) if a.t.size > 1 else 1.0
    return float(np.sum(np.abs(getattr(a, which) - getattr(b, which))) * dx * dt)


def front_position(field: GridField, t: float, which: str = "c", level: float = 0.5) -> float:
    """시각 t 단면에서 값이 level을 넘는 가장 오른쪽 x (없으면 0)"""
    column = field.column(t, which)
    above = np.nonzero(column > level)[0]
    return float(field.x[above[-1]]) if above.size else 0.0


def refinement_sweep(
    model: ModelPair,
    base_cfg: FVConfig,
    eps_list: Sequence[float],
    reference: GridField,
    dx_per_eps: Optional[float] = None,
) -> pd.DataFrame:
    """
    eps를 바꿔 가며 FV 해를 reference 격자에서 비교합니다.

    Returns:
        eps, dx, l1_s, l1_c, front_error_c 열의 표 (eps 내림차순).
        front_error_c는 FV 셀 중심 격자 그대로의 농도 전면 위치 오차입니다.
    """
    rows = []
    t_final = float(reference.t[-1])
    for eps in sorted(eps_list, reverse=True):
        dx = eps * dx_per_eps if dx_per_eps else base_cfg.dx
        cfg = replace(base_cfg, eps=eps, dx=dx)
        native = run_fv(model, cfg)
        fv = resample(native, reference.x)
        fv.require_same_grid(reference)
        rows.append({
            "eps": eps,
            "dx": cfg.length / cfg.n_cells,
            "l1_s": compare_fields(fv, reference, "s"),
            "l1_c": compare_fields(fv, reference, "c"),
            "front_error_c": abs(
                front_position(native, t_final, "c") - front_position(reference, t_final, "c")
            ),
        })
        logger.info(f"정제 단계 eps={eps}: L1(s)={rows[-1]['l1_s']:.4g}, L1(c)={rows[-1]['l1_c']:.4g}")
    return pd.DataFrame(rows, columns=["eps", "dx", "l1_s", "l1_c", "front_error_c"])
