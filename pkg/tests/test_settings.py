import pytest

from baxtertq.errors import ConfigError
from baxtertq.model import ModelKind, RootFamily
from baxtertq.settings import THREADS_ENV_VAR, RunConfig, parse_complex, thread_count

from conftest import config_dict


def config_error(data: dict) -> ConfigError:
    with pytest.raises(ConfigError) as excinfo:
        RunConfig(data)
    return excinfo.value


class TestParsing:

    def test_complex_pairs(self):
        assert parse_complex([0.5, -1.0], "$.x") == 0.5 - 1j
        assert parse_complex(2, "$.x") == 2

    def test_bad_complex(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_complex([1.0], "$.model.kappa")
        assert excinfo.value.path == "$.model.kappa"
        with pytest.raises(ConfigError):
            parse_complex(True, "$.model.kappa")


class TestValidation:

    def test_example_config(self):
        config = RunConfig(config_dict())
        spec = config.model_spec()
        assert spec.kind is ModelKind.QTODA
        assert spec.N == 2
        assert not spec.rho_zero

    def test_missing_block(self):
        data = config_dict()
        del data["periods"]
        assert config_error(data).path == "$.periods"

    def test_unknown_keys(self):
        data = config_dict()
        data["model"]["foo"] = 1
        assert config_error(data).path == "$.model.foo"
        assert config_error({**config_dict(), "extra": {}}).path == "$.extra"

    def test_bad_kind(self):
        data = config_dict()
        data["model"]["kind"] = "toda3"
        assert config_error(data).path == "$.model.kind"

    def test_seeds_needed(self):
        data = config_dict()
        data["seeds"] = {}
        assert config_error(data).path == "$.seeds"

    def test_seed_count(self):
        data = config_dict()
        data["seeds"]["tau"] = [[0.25, 0.0]]
        assert config_error(data).path == "$.seeds.tau"

    def test_dual_seed_defaults_to_tau(self):
        config = RunConfig(config_dict())
        assert config.tau_dual_seed().roots == config.tau_seed().roots
        assert config.tau_dual_seed().family is RootFamily.TAU_DUAL

    def test_dual_seed_must_obey_its_constraint(self):
        # Shifting the sum by 2iω₂ keeps the direct product and breaks the dual one
        data = config_dict()
        data["seeds"]["tau"] = [[0.25, 1.0], [-0.25, 1.0]]
        assert config_error(data).path == "$.seeds.tau_dual"

    def test_explicit_dual_seed(self):
        data = config_dict()
        data["seeds"]["tau"] = [[0.25, 1.0], [-0.25, 1.0]]
        data["seeds"]["tau_dual"] = [[0.25, 0.0], [-0.25, 0.0]]
        config = RunConfig(data)
        assert config.tau_dual_seed().roots == (0.25 + 0j, -0.25 + 0j)

    def test_contour_nodes(self):
        data = config_dict(contour={"n_nodes": 3})
        assert config_error(data).path == "$.contour.n_nodes"

    def test_tolerances(self):
        assert config_error(config_dict(solver={"tol": 0})).path == "$.solver.tol"
        assert config_error(config_dict(truncation={"n_max": 0})).path == "$.truncation.n_max"

    def test_outputs(self):
        assert config_error(config_dict(outputs={"emit_csv": "yes"})).path == "$.outputs.emit_csv"

    def test_rho_override(self):
        config = RunConfig({**config_dict(), "rho_override": 0})
        assert config.model_spec().rho_zero


class TestFiles:

    def test_from_json(self, write_config):
        config = RunConfig.from_json(write_config(config_dict()))
        assert config.contour_for().n_nodes == config.contour["n_nodes"]
        assert config.contour_for(dual=True).dual

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        with pytest.raises(ConfigError) as excinfo:
            RunConfig.from_json(str(path))
        assert excinfo.value.path == "$"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_json(str(tmp_path / "nowhere.json"))


class TestFingerprint:

    def test_stable(self):
        assert RunConfig(config_dict()).fingerprint() == RunConfig(config_dict()).fingerprint()

    def test_defaults_are_resolved(self):
        explicit = config_dict(contour={"n_nodes": 256})
        assert RunConfig(explicit).fingerprint() == RunConfig(config_dict()).fingerprint()

    def test_changes_with_settings(self):
        assert RunConfig(config_dict(contour={"n_nodes": 128})).fingerprint() != \
            RunConfig(config_dict()).fingerprint()


class TestThreads:

    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "6")
        assert thread_count(3) == 3

    def test_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "6")
        assert thread_count() == 6

    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert thread_count() == 2

    def test_invalid(self, monkeypatch):
        with pytest.raises(ConfigError):
            thread_count(0)
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        with pytest.raises(ConfigError):
            thread_count()
