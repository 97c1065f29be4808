"""
풀이 파이프라인

설정 하나로 전체 해를 구성하고 산출물(CSV, 보고서)을 기록합니다.

1. 모델 가정 검증
2. zeta 해 / U 해 구성
3. 불변식 검사 (전면 닫힌 형태, 접점, 충격파 허용성)
4. Lagrange 장 / 물리 장 표본
5. (선택) 유한체적 정제 비교
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.admissibility import RH_TOL
from app.config import SolveConfig
from app.inverse_transform import GridField, sample_grid
from app.model import LagrangeFlux, ModelPair, validate_assumptions
from app.reference_fv import FVConfig, refinement_sweep
from app.u_solution import USolution, build_solution, collect_shocks
from app.zeta_solution import ZetaField, build_zeta

logger = logging.getLogger(__name__)

FRONT_ODE_TOL = 1e-8
TANGENCY_TOL = 1e-6
# 가장 작은 eps에서 허용하는 농도 전면 위치 오차 (FV 셀 수)
FRONT_CELLS = 2.0

ARTIFACTS = {
    "front": "zeta_front.csv",
    "characteristics": "characteristics.csv",
    "lagrange": "field_lagrange.csv",
    "physical": "field_physical.csv",
    "report": "report.txt",
}


@dataclass
class CheckResult:
    """단일 검사 결과"""
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"check": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class SolveReport:
    """solve 실행 결과"""
    config: SolveConfig
    constants: Dict[str, Any] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    shocks: pd.DataFrame = field(default_factory=pd.DataFrame)
    fv_table: Optional[pd.DataFrame] = None
    artifacts: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def first_failure(self) -> Optional[str]:
        for check in self.checks:
            if not check.passed:
                return check.name
        return None

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, bool(passed), detail))
        if not passed:
            logger.warning(f"검사 실패: {name} ({detail})")

    def to_text(self) -> str:
        lines = ["[constants]"]
        lines += [f"{key} = {_fmt(value)}" for key, value in self.constants.items()]
        lines += ["", "[checks]"]
        lines += [
            f"{check.name}: {'ok' if check.passed else 'FAILED'}"
            + (f" ({check.detail})" if check.detail else "")
            for check in self.checks
        ]
        lines += ["", "[shocks]", self.shocks.to_csv(index=False, float_format="%.10g").rstrip()]
        if self.fv_table is not None:
            lines += ["", "[fv-refinement]", self.fv_table.to_csv(index=False, float_format="%.6g").rstrip()]
        lines += ["", "[config]", self.config.to_yaml().rstrip(), ""]
        return "\n".join(lines)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


# =============================================================================
# 단계
# =============================================================================

def front_ode_gap(zf: ZetaField, x_factor: float = 100.0, n: int = 200) -> float:
    """닫힌 형태 Phi와 전면 ODE 적분의 최대 상대 차이"""
    x_end = x_factor * zf.x_A
    sol = zf.integrate_front_ode(x_end)
    xs = np.geomspace(zf.x_A, x_end, n)
    closed = np.asarray(zf.front_phi(xs))
    return float(np.max(np.abs(sol(xs)[0] - closed) / np.abs(closed)))


def lagrange_frame(solution: USolution, n: int, phi_max: float, x_max: float) -> pd.DataFrame:
    """phi, x, zeta, U 열의 Lagrange 장 표 (충돌 이후 점의 U는 NaN)"""
    phi = np.linspace(0.0, phi_max, n)
    x = np.linspace(0.0, x_max, n)
    PHI, X = np.meshgrid(phi, x, indexing="ij")
    U = solution.eval_U_many(PHI, X, strict=False)
    zeta = solution.zf.eval_zeta(PHI, X)
    return pd.DataFrame(
        {"phi": PHI.ravel(), "x": X.ravel(), "zeta": np.ravel(zeta), "U": U.ravel()}
    )


def build_all(config: SolveConfig) -> Tuple[ModelPair, ZetaField, USolution]:
    """모델, zeta 해, U 해를 구성합니다."""
    model = config.model.build()
    flux = LagrangeFlux(model)
    zf = build_zeta(model, config.t_inj)
    solution = build_solution(flux, zf, config.family_options())
    return model, zf, solution


def run_solve(config: SolveConfig, output_dir: Optional[Path] = None) -> SolveReport:
    """
    전체 풀이를 실행하고 산출물을 기록합니다.

    Args:
        config: 검증된 풀이 설정
        output_dir: 출력 디렉터리 (없으면 config.output_dir)

    Returns:
        검사 결과와 산출물 경로를 담은 SolveReport
    """
    output_dir = Path(output_dir or config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    report = SolveReport(config)

    # 1. 모델 가정
    model = config.model.build()
    assumptions = validate_assumptions(model)
    report.add("model-assumptions", assumptions.passed, ",".join(assumptions.failed()))

    # 2. 해 구성
    logger.info(f"해 구성 시작: model={model.to_dict()}, t_inj={config.t_inj}")
    _, zf, solution = build_all(config)
    cone = solution.cone
    riemann = solution.riemann
    report.constants.update({
        "u_plus_oa": riemann.u_plus,
        "u_minus_oa": riemann.u_minus,
        "u_max0": riemann.u_max0,
        "below_oa_mode": riemann.mode,
        "v10": zf.v10,
        "x_A": zf.x_A,
        "phi_A": zf.phi_A,
        "zeta_B": list(cone.sign_changes),
        "curves": len(cone.curves),
        "collision": solution.collision.detected,
    })
    for i, tangency in enumerate(cone.tangencies):
        report.constants[f"C{i}"] = f"{tangency.origin.family}:{tangency.origin.param:.12g}"

    # 3. 불변식
    gap = front_ode_gap(zf)
    report.add("front-closed-form", gap <= FRONT_ODE_TOL, f"max rel gap {gap:.3e}")
    report.add("oa-shock", riemann.oa_verdict.admissible, riemann.oa_verdict.reason)
    for tangency in cone.tangencies:
        worst = max(abs(tangency.psi_residual), abs(tangency.u_residual))
        report.add(
            f"tangency@{tangency.zeta_B:.6g}",
            bool(np.isfinite(worst) and worst <= TANGENCY_TOL),
            f"residual {worst:.3e}",
        )
    a_gap = cone.a_characteristic_gap()
    if a_gap is not None:
        report.add("a-characteristic", a_gap <= TANGENCY_TOL, f"gap {a_gap:.3e}")

    shocks = collect_shocks(solution)
    report.shocks = pd.DataFrame([shock.to_dict() for shock in shocks])
    rh_worst = max(max(abs(s.residual[0]), abs(s.residual[1])) for s in shocks)
    report.add("shock-rh", rh_worst <= RH_TOL, f"worst residual {rh_worst:.3e}")
    rejected = [s for s in shocks if not s.verdict.admissible]
    report.add(
        "shock-admissibility",
        not rejected,
        "" if not rejected else f"{rejected[0].kind}@x={rejected[0].x:.6g}: {rejected[0].verdict.reason}",
    )

    # 4. 산출물
    grid = config.grid
    x_front = np.linspace(0.0, grid.x_max, grid.nx)
    paths = {key: output_dir / name for key, name in ARTIFACTS.items()}
    zf.front_frame(x_front).to_csv(paths["front"], index=False, float_format="%.12g")
    cone.curves_frame().to_csv(paths["characteristics"], index=False, float_format="%.12g")
    lagrange_frame(solution, grid.n_lagrange, grid.t_max, grid.x_max).to_csv(
        paths["lagrange"], index=False, float_format="%.12g"
    )
    physical = sample_grid(solution, grid.nx, grid.nt, grid.x_max, grid.t_max, grid.n_phi)
    physical.to_csv(paths["physical"])
    report.add(
        "physical-bounds",
        bool(np.all((physical.s >= 0) & (physical.s <= 1) & (physical.c >= 0) & (physical.c <= 1))),
    )
    unsupported = int(physical.metadata.get("unsupported", 0))
    report.constants["unsupported_points"] = unsupported
    check = supported_region_check(physical)
    report.add(check.name, check.passed, check.detail)

    # 5. 유한체적 비교
    if config.fv.enabled:
        report.fv_table = run_fv_comparison(config, model, solution)
        for check in fv_checks(report.fv_table):
            report.add(check.name, check.passed, check.detail)

    paths["report"].write_text(report.to_text(), encoding="utf-8")
    report.artifacts = {key: str(path) for key, path in paths.items()}
    logger.info(f"solve 완료: passed={report.passed}, output={output_dir}")
    return report


def run_fv_comparison(config: SolveConfig, model: ModelPair, solution: USolution) -> pd.DataFrame:
    """반해석 물리 장을 기준으로 eps 정제 비교표를 만듭니다."""
    fv = config.fv
    # 기준 격자 간격 = 가장 가는 FV 셀 폭
    nx = int(round(fv.length / (min(fv.eps_list) * fv.dx_per_eps))) + 1
    reference: GridField = sample_grid(
        solution, max(nx, 11), fv.nt_out, fv.length, fv.final_time, config.grid.n_phi
    )
    base = FVConfig.for_eps(
        max(fv.eps_list), fv.dx_per_eps,
        cfl=fv.cfl, length=fv.length, final_time=fv.final_time,
        nt_out=fv.nt_out, t_inj=config.t_inj,
    )
    return refinement_sweep(model, base, fv.eps_list, reference, dx_per_eps=fv.dx_per_eps)


def fv_checks(table: pd.DataFrame) -> List[CheckResult]:
    """
    정제 표 검사: eps 감소에 따라 L1(s), L1(c)가 단조 감소하고
    가장 작은 eps의 농도 전면 위치 오차가 FV 셀 FRONT_CELLS개 이내인지 봅니다.

    Args:
        table: refinement_sweep 결과 (eps 내림차순)
    """
    l1_s = table["l1_s"].to_numpy()
    l1_c = table["l1_c"].to_numpy()
    finest = table.iloc[-1]
    cells = float(finest["front_error_c"]) / float(finest["dx"])
    return [
        CheckResult("fv-convergence", bool(np.all(np.diff(l1_s) < 0)), f"L1(s) {np.round(l1_s, 6).tolist()}"),
        CheckResult("fv-convergence-c", bool(np.all(np.diff(l1_c) < 0)), f"L1(c) {np.round(l1_c, 6).tolist()}"),
        CheckResult(
            "fv-front", cells <= FRONT_CELLS, f"eps={float(finest['eps']):.3g}: {cells:.2f} cells"
        ),
    ]


def supported_region_check(physical: GridField) -> CheckResult:
    """특성선 충돌 이후라 U-_OA로 채운 점이 없어야 통과"""
    unsupported = int(physical.metadata.get("unsupported", 0))
    detail = "" if unsupported == 0 else f"{unsupported} points past a characteristic collision filled with U-_OA"
    return CheckResult("supported-region", unsupported == 0, detail)
