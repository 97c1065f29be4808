"""
솔버 예외 모듈

반해석 해 구성 과정에서 발생하는 오류 유형을 정의합니다.
파라미터 검증 오류는 ValueError를 그대로 사용합니다.
"""


class SolverError(RuntimeError):
    """솔버 공통 예외"""


class ConvergenceError(SolverError):
    """근 찾기 또는 적분이 수렴하지 않음"""


class RegimeError(SolverError):
    """모델이 지원하는 해 구조 범위를 벗어남"""


class ConsistencyError(SolverError):
    """내부 불변식 위반 (예: F_U - a_zeta <= 0, 특성곡선 순서 역전)"""


class UnsupportedRegionError(SolverError):
    """특성곡선 충돌 이후 영역 요청"""


class GridMismatchError(SolverError):
    """서로 다른 격자의 필드 비교"""
