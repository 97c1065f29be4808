"""
명령줄 진입점

하위 명령: solve, front, characteristics, check-shock, compare, validate-model.
종료 코드: 0 성공, 1 검사 실패/풀이 오류, 2 사용법/설정 오류.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, TextIO

import numpy as np
import pandas as pd

from app import __version__
from app.admissibility import (
    ShockData,
    c_shock_admissible,
    rh_residual,
    s_shock_admissible,
)
from app.config import SolveConfig, configure_logging, load_config, parse_config
from app.exceptions import SolverError
from app.inverse_transform import GridField
from app.model import LagrangeFlux, validate_assumptions
from app.pipeline import run_solve
from app.reference_fv import compare_fields
from app.u_solution import build_cone, riemann_data
from app.zeta_solution import build_zeta

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

DEFAULT_GRID_COUNT = 50
CSV_FLOAT_FORMAT = "%.12g"


# =============================================================================
# 인자 해석 도우미
# =============================================================================

def parse_grid(spec: str) -> np.ndarray:
    """
    "start:stop[:count][:log|lin]" 형식의 격자를 해석합니다.

    count가 0이면 빈 격자입니다.
    """
    parts = spec.split(":")
    spacing = "lin"
    if parts and parts[-1] in ("log", "lin"):
        spacing = parts.pop()
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"격자 형식이 잘못되었습니다: {spec}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2]) if len(parts) == 3 else DEFAULT_GRID_COUNT
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"격자 형식이 잘못되었습니다: {spec}") from e
    if count < 0 or stop < start or start < 0:
        raise argparse.ArgumentTypeError(f"격자 범위가 잘못되었습니다: {spec}")
    if spacing == "log":
        if start <= 0:
            raise argparse.ArgumentTypeError(f"로그 격자는 양수에서 시작해야 합니다: {spec}")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _write_frame(frame: pd.DataFrame, output: Optional[str], stdout: TextIO) -> None:
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    else:
        frame.to_csv(stdout, index=False, float_format=CSV_FLOAT_FORMAT)


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="풀이 설정 YAML (모델 기본값)")
    parser.add_argument("--m0", type=float)
    parser.add_argument("--m", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--t-inj", type=float, dest="t_inj")


def _config_from_args(args: argparse.Namespace) -> SolveConfig:
    """--config 파일에 명령줄 모델 인자를 덮어씁니다."""
    base = load_config(args.config) if getattr(args, "config", None) else SolveConfig()
    data = base.model_dump()
    for key in ("m0", "m", "gamma", "beta"):
        value = getattr(args, key, None)
        if value is not None:
            data["model"][key] = value
    if getattr(args, "t_inj", None) is not None:
        data["t_inj"] = args.t_inj
    for key in ("n_ta", "n_jouguet"):
        value = getattr(args, key, None)
        if value is not None:
            data["family"][key] = value
    return parse_config(data)


# =============================================================================
# 하위 명령
# =============================================================================

def cmd_solve(args: argparse.Namespace, stdout: TextIO) -> int:
    """전체 풀이와 산출물 기록"""
    config = load_config(args.config)
    report = run_solve(config, Path(args.output_dir) if args.output_dir else None)
    for check in report.checks:
        print(f"{check.name}: {'ok' if check.passed else 'FAILED'}", file=stdout)
    if not report.passed:
        print(f"failed check: {report.first_failure}", file=stdout)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_front(args: argparse.Namespace, stdout: TextIO) -> int:
    """전면 표 (x, phi, zeta, slope)"""
    config = _config_from_args(args)
    zf = build_zeta(config.model.build(), config.t_inj)
    _write_frame(zf.front_frame(args.x), args.output, stdout)
    return EXIT_OK


def cmd_characteristics(args: argparse.Namespace, stdout: TextIO) -> int:
    """cone 특성곡선 표"""
    config = _config_from_args(args)
    model = config.model.build()
    cone = build_cone(LagrangeFlux(model), build_zeta(model, config.t_inj), config.family_options())
    _write_frame(cone.curves_frame(args.samples), args.output, stdout)
    return EXIT_OK


def cmd_check_shock(args: argparse.Namespace, stdout: TextIO) -> int:
    """충격파 허용성 판정 (한 행 CSV)"""
    config = _config_from_args(args)
    model = config.model.build()
    if args.oa:
        shock = riemann_data(LagrangeFlux(model), build_zeta(model, config.t_inj).v10).oa_shock
    else:
        missing = [name for name in ("s_minus", "s_plus", "c_minus", "c_plus", "v") if getattr(args, name) is None]
        if missing:
            raise ValueError(f"--oa 가 없으면 다음 인자가 필요합니다: {', '.join(missing)}")
        shock = ShockData(args.s_minus, args.s_plus, args.c_minus, args.c_plus, args.v).with_constants(model)

    if shock.is_c_shock:
        verdict = c_shock_admissible(model, shock, with_orbit=args.orbit)
    else:
        verdict = s_shock_admissible(
            model, shock.s_minus, shock.s_plus, shock.c_minus, shock.v, with_orbit=args.orbit
        )
    r1, r2 = rh_residual(model, shock)
    row = {**shock.to_dict(), "r1": r1, "r2": r2, "admissible": verdict.admissible, "reason": verdict.reason}
    _write_frame(pd.DataFrame([row]), args.output, stdout)
    return EXIT_OK if verdict.admissible else EXIT_CHECK_FAILED


def cmd_compare(args: argparse.Namespace, stdout: TextIO) -> int:
    """두 GridField CSV의 L1 거리"""
    a = GridField.from_frame(pd.read_csv(args.a))
    b = GridField.from_frame(pd.read_csv(args.b))
    rows = [{"which": which, "l1": compare_fields(a, b, which)} for which in args.which]
    _write_frame(pd.DataFrame(rows, columns=["which", "l1"]), args.output, stdout)
    return EXIT_OK


def cmd_validate_model(args: argparse.Namespace, stdout: TextIO) -> int:
    """모델 가정 검증 표"""
    config = _config_from_args(args)
    report = validate_assumptions(config.model.build(), n=args.n)
    frame = pd.DataFrame(
        [
            {"check": c.name, "passed": c.passed, "worst": c.worst, "s": c.s, "c": c.c}
            for c in report.checks
        ],
        columns=["check", "passed", "worst", "s", "c"],
    )
    _write_frame(frame, args.output, stdout)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


COMMANDS: Dict[str, Callable[[argparse.Namespace, TextIO], int]] = {
    "solve": cmd_solve,
    "front": cmd_front,
    "characteristics": cmd_characteristics,
    "check-shock": cmd_check_shock,
    "compare": cmd_compare,
    "validate-model": cmd_validate_model,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slug-solver",
        description="화학 슬러그 주입 문제의 반해석 해법",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="전체 풀이와 산출물 기록")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", dest="output_dir")

    p = sub.add_parser("front", help="zeta 전면 표")
    _add_model_args(p)
    p.add_argument("--x", type=parse_grid, default=parse_grid("0:10:101"))
    p.add_argument("--output", "-o")

    p = sub.add_parser("characteristics", help="cone 특성곡선 표")
    _add_model_args(p)
    p.add_argument("--n-ta", type=int, dest="n_ta")
    p.add_argument("--n-jouguet", type=int, dest="n_jouguet")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--output", "-o")

    p = sub.add_parser("check-shock", help="충격파 허용성 판정")
    _add_model_args(p)
    p.add_argument("--oa", action="store_true", help="OA 전면 충격파를 판정")
    p.add_argument("--s-minus", type=float, dest="s_minus")
    p.add_argument("--s-plus", type=float, dest="s_plus")
    p.add_argument("--c-minus", type=float, dest="c_minus")
    p.add_argument("--c-plus", type=float, dest="c_plus")
    p.add_argument("--v", type=float)
    p.add_argument("--orbit", action="store_true", help="진행파 궤도 적분도 수행")
    p.add_argument("--output", "-o")

    p = sub.add_parser("compare", help="두 물리 장 CSV 비교")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--which", nargs="+", choices=["s", "c"], default=["s", "c"])
    p.add_argument("--output", "-o")

    p = sub.add_parser("validate-model", help="모델 구조 가정 검증")
    _add_model_args(p)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--output", "-o")
    return parser


def main(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """
    CLI 진입점

    Returns:
        종료 코드
    """
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    configure_logging()
    handler = COMMANDS[args.command]
    try:
        return handler(args, stdout)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"설정/입력 오류: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as e:
        logger.error(f"풀이 오류: {e}", exc_info=True)
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
