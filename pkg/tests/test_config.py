"""
Config 모듈 테스트

app/config.py의 프로세스 설정, 풀이 설정 검증, YAML 로드 테스트
"""

import logging
from pathlib import Path

import pytest
import yaml

REPO_CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


class TestAppSettings:
    """AppSettings 테스트"""

    def test_settings_from_env(self, mock_env_vars, tmp_path):
        """환경 변수에서 설정 로드"""
        from app.config import AppSettings

        settings = AppSettings()
        assert settings.debug is False
        assert settings.log_level == "WARNING"
        assert settings.project_root == str(tmp_path)
        assert settings.config_file == "config/solver.yaml"

    def test_debug_overrides_log_level(self, monkeypatch):
        """DEBUG=true 이면 effective_log_level은 DEBUG"""
        monkeypatch.setenv("DEBUG", "true")
        monkeypatch.setenv("LOG_LEVEL", "error")

        from app.config import AppSettings

        assert AppSettings().effective_log_level == "DEBUG"
        assert AppSettings(debug=False).effective_log_level == "ERROR"

    def test_resolve_relative_path(self, tmp_path):
        """상대 경로는 project_root 기준"""
        from app.config import AppSettings

        settings = AppSettings(project_root=str(tmp_path))
        assert settings.resolve("config/a.yaml") == tmp_path / "config" / "a.yaml"
        assert settings.resolve(tmp_path / "b.yaml") == tmp_path / "b.yaml"
        assert AppSettings(project_root="").resolve("c.yaml") == Path("c.yaml")

    def test_configure_logging(self):
        """루트 로거 레벨 설정"""
        from app.config import AppSettings, configure_logging

        configure_logging(AppSettings(debug=True))
        assert logging.getLogger().level == logging.DEBUG
        configure_logging(AppSettings(debug=False, log_level="warning"))
        assert logging.getLogger().level == logging.WARNING


class TestParseConfig:
    """parse_config 테스트"""

    def test_defaults(self):
        """빈 입력은 RM1 기본값"""
        from app.config import parse_config

        config = parse_config(None)
        assert config.model.m0 == 1.0
        assert config.model.gamma == 2.0
        assert config.t_inj == 1.0
        assert config.grid.nx == 121
        assert config.fv.enabled is False
        assert config.fv.eps_list == [4e-3, 2e-3, 1e-3]

    def test_partial_section(self):
        """일부 키만 주면 나머지는 기본값"""
        from app.config import parse_config

        config = parse_config({"model": {"m": 0.01}, "grid": {"nx": 11}})
        assert config.model.m == 0.01
        assert config.model.m0 == 1.0
        assert config.grid.nx == 11
        assert config.grid.nt == 61

    @pytest.mark.parametrize(
        "data,field",
        [
            ({"bogus": 1}, "bogus"),
            ({"model": {"bogus": 1}}, "model.bogus"),
            ({"t_inj": 0.0}, "t_inj"),
            ({"model": {"m0": -1.0}}, "model.m0"),
            ({"grid": {"nx": 1}}, "grid.nx"),
            ({"family": {"zeta_min": 0.5}}, "family.zeta_min"),
            ({"fv": {"eps_list": []}}, "fv.eps_list"),
            ({"fv": {"eps_list": [0.01, -0.02]}}, "fv.eps_list"),
            ({"fv": {"cfl": 0.5}}, "fv.cfl"),
        ],
    )
    def test_invalid_values_name_the_field(self, data, field):
        """검증 실패 메시지에 필드 위치 포함"""
        from app.config import parse_config

        with pytest.raises(ValueError, match=field):
            parse_config(data)

    def test_family_options(self):
        """족 옵션 변환 시 허용 오차 반영"""
        from app.config import parse_config

        config = parse_config({
            "family": {"n_ta": 16, "workers": 2},
            "tolerances": {"ode_rtol": 1e-7, "root": 1e-11},
        })
        options = config.family_options()
        assert options.n_ta == 16
        assert options.workers == 2
        assert options.ode_rtol == 1e-7
        assert options.root_tol == 1e-11

    def test_model_build(self):
        from app.config import parse_config

        pair = parse_config({"model": {"m": 0.5, "beta": 2.0}}).model.build()
        assert pair.to_dict() == {"m0": 1.0, "m": 0.5, "gamma": 2.0, "beta": 2.0}

    def test_yaml_dump_reloads(self, small_config_data):
        """to_yaml 결과를 다시 읽으면 같은 설정"""
        from app.config import parse_config

        config = parse_config(small_config_data)
        assert parse_config(yaml.safe_load(config.to_yaml())) == config


class TestLoadConfig:
    """load_config 테스트"""

    def test_load_file(self, write_yaml, small_config_data):
        from app.config import AppSettings, load_config

        path = write_yaml(small_config_data)
        config = load_config(path, AppSettings())
        assert config.grid.nx == 11
        assert config.family.n_ta == 24

    def test_relative_path_uses_project_root(self, mock_env_vars, write_yaml, small_config_data):
        """상대 경로는 PROJECT_ROOT 기준"""
        from app.config import load_config

        write_yaml(small_config_data, "scenarios/small.yaml")
        assert load_config("scenarios/small.yaml").grid.nt == 6

    def test_missing_file(self, tmp_path):
        from app.config import AppSettings, load_config

        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "missing.yaml", AppSettings())

    def test_invalid_yaml(self, tmp_path):
        from app.config import AppSettings, load_config

        path = tmp_path / "broken.yaml"
        path.write_text("model: [1, 2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="YAML"):
            load_config(path, AppSettings())

    def test_non_mapping_top_level(self, write_yaml):
        from app.config import AppSettings, load_config

        path = write_yaml([1, 2, 3])
        with pytest.raises(ValueError, match="매핑"):
            load_config(path, AppSettings())

    def test_empty_file_is_defaults(self, tmp_path):
        from app.config import AppSettings, load_config

        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config(path, AppSettings()).t_inj == 1.0

    @pytest.mark.parametrize(
        "name,m",
        [("solver.yaml", 1.0), ("scenario-full-jouguet.yaml", 1.0), ("scenario-one-change.yaml", 0.01)],
    )
    def test_repository_configs_are_valid(self, name, m):
        """저장소에 포함된 설정 파일 검증"""
        from app.config import AppSettings, load_config

        config = load_config(REPO_CONFIG_DIR / name, AppSettings())
        assert config.model.m == m


class TestGlobalConfig:
    """get_config, reload_config 테스트"""

    def test_defaults_when_file_missing(self, mock_env_vars):
        """기본 설정 파일이 없으면 기본값"""
        from app.config import SolveConfig, get_config

        assert get_config() == SolveConfig()

    def test_cached_instance(self, mock_env_vars):
        from app.config import get_config

        assert get_config() is get_config()

    def test_reload_reads_file(self, mock_env_vars, write_yaml, small_config_data):
        """reload_config는 파일 변경을 반영"""
        from app.config import get_config, reload_config

        assert get_config().grid.nx == 121
        write_yaml(small_config_data, "config/solver.yaml")
        assert reload_config().grid.nx == 11
        assert get_config().grid.nx == 11
