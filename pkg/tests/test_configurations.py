"""
Tests for configuration generation and the JSON configuration format.
"""
import json

import pytest

from src.models.configurations import (
    ConfigurationGenerator,
    ConfigurationSet,
    GeneratorKind,
    GeneratorSpec,
    config_digest,
    dumps_config,
    gen_generic,
    gen_planted,
    gen_star,
    load_config,
    loads_config,
    save_config,
)
from src.models.errors import ConfigParseError, InvariantViolationError
from src.models.geometry4 import Flat2, Hyperplane3, Line4, flat2_in_hyperplane, line_in_flat2
from tests.conftest import e


class TestGenerators:
    @pytest.mark.unit
    def test_generic_sizes_and_integrality(self):
        cfg = gen_generic(20, 10, seed=7, coordinate_range=100)
        assert (cfg.L, cfg.S) == (20, 10)
        for ln in cfg.lines:
            assert all(c.denominator == 1 and abs(c) <= 100 for c in ln.base + ln.direction)
        assert cfg.provenance["generator"] == "gen_generic"

    @pytest.mark.unit
    def test_same_seed_same_configuration(self):
        assert dumps_config(gen_generic(10, 10, seed=11)) == dumps_config(gen_generic(10, 10, seed=11))
        assert config_digest(gen_generic(10, 10, seed=11)) != config_digest(gen_generic(10, 10, seed=12))

    @pytest.mark.unit
    def test_empty_configuration(self):
        cfg = gen_generic(0, 0, seed=1)
        assert cfg.lines == [] and cfg.planes == []

    @pytest.mark.unit
    def test_star_objects_share_the_center(self):
        center = (1, -2, 3, 5)
        cfg = gen_star(4, 3, center=center, seed=5)
        assert all(ln.contains_point(center) for ln in cfg.lines)
        assert all(fl.contains_point(center) for fl in cfg.planes)
        assert not any(line_in_flat2(ln, fl) for ln in cfg.lines for fl in cfg.planes)

    @pytest.mark.unit
    def test_planted_rich_flat(self):
        spec = GeneratorSpec(GeneratorKind.PLANTED_RICH_FLAT, L=12, S=4, planted_lines=6)
        cfg, truth = gen_planted(spec, seed=9)
        assert cfg.L == 12
        (planted,) = truth
        assert planted.members == tuple(range(6))
        assert all(line_in_flat2(cfg.lines[i], planted.flat) for i in planted.members)

    @pytest.mark.unit
    def test_planted_rich_hyperplane(self):
        spec = GeneratorSpec(GeneratorKind.PLANTED_RICH_HYPERPLANE, L=3, S=9, planted_planes=5)
        cfg, truth = gen_planted(spec, seed=9)
        (planted,) = truth
        assert isinstance(planted.flat, Hyperplane3)
        assert all(flat2_in_hyperplane(cfg.planes[i], planted.flat) for i in planted.members)

    @pytest.mark.unit
    def test_mixed_plants_both(self):
        spec = GeneratorSpec(GeneratorKind.MIXED, L=8, S=8, planted_lines=4, planted_planes=4)
        _, truth = ConfigurationGenerator(21).generate(spec)
        assert [type(t.flat) for t in truth] == [Flat2, Hyperplane3]

    @pytest.mark.unit
    def test_distinct_points(self):
        points = ConfigurationGenerator(3).gen_points(50, coordinate_range=3)
        assert len(set(points)) == 50

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"L": -1, "S": 0},
            {"L": 2, "S": 0, "planted_lines": 3},
            {"L": 0, "S": 1, "planted_planes": 2},
            {"L": 1, "S": 1, "coordinate_range": 1},
        ],
    )
    def test_invalid_generator_spec(self, kwargs):
        with pytest.raises(InvariantViolationError):
            GeneratorSpec(GeneratorKind.GENERIC, **kwargs)


class TestConfigurationSet:
    @pytest.mark.unit
    def test_duplicate_lines_rejected(self):
        with pytest.raises(InvariantViolationError):
            ConfigurationSet([Line4((0, 0, 0, 0), e(1)), Line4((3, 0, 0, 0), (2, 0, 0, 0))], [])

    @pytest.mark.unit
    def test_duplicate_flats_rejected(self):
        with pytest.raises(InvariantViolationError):
            ConfigurationSet([], [Flat2((0, 0, 0, 0), e(1), e(2)), Flat2((1, 1, 0, 0), e(2), e(1))])

    @pytest.mark.unit
    def test_seed_must_fit_64_bits(self):
        with pytest.raises(InvariantViolationError):
            ConfigurationSet([], [], seed=2 ** 64)


class TestSerialization:
    @pytest.mark.unit
    def test_sample_fixture(self, sample_config_path):
        cfg = load_config(sample_config_path)
        assert (cfg.L, cfg.S) == (2, 1)
        assert cfg.seed is None
        assert cfg.lines[0].base == (1, 2, -1, 0)

    @pytest.mark.unit
    def test_round_trip_is_byte_identical(self, tmp_path, generic_config):
        target = tmp_path / "cfg.json"
        save_config(generic_config, target)
        again = load_config(target)
        assert dumps_config(again) == target.read_text()
        assert config_digest(again) == config_digest(generic_config)

    @pytest.mark.unit
    def test_rationals_written_as_text(self):
        cfg = ConfigurationSet([Line4(("1/3", 0, 0, 0), (0, "-7/2", 0, 0))], [])
        data = json.loads(dumps_config(cfg))
        assert data["lines"][0] == {"p": ["1/3", "0", "0", "0"], "d": ["0", "-7/2", "0", "0"]}

    @pytest.mark.unit
    def test_malformed_json_reports_position(self):
        with pytest.raises(ConfigParseError) as info:
            loads_config('{"lines": [\n  {"p": [1, 2}\n]}')
        assert info.value.line == 2

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "payload",
        [
            {"lines": [{"p": ["0", "0", "0", "0"]}]},
            {"lines": [{"p": ["0", "0", "0"], "d": ["1", "0", "0", "0"]}]},
            {"lines": [{"p": ["x", "0", "0", "0"], "d": ["1", "0", "0", "0"]}]},
            {"lines": [{"p": [0.5, 0, 0, 0], "d": [1, 0, 0, 0]}]},
            {"lines": [{"p": [0, 0, 0, 0], "d": [True, 0, 0, 0]}]},
            {"planes": [{"q": [0, 0, 0, 0], "u": [1.0, 0, 0, 0], "v": [0, 1, 0, 0]}]},
            {"seed": True},
            {"seed": 7.0},
            {"seed": "seven"},
            [],
        ],
    )
    def test_bad_fields(self, payload):
        with pytest.raises(ConfigParseError):
            loads_config(json.dumps(payload))

    @pytest.mark.unit
    def test_zero_direction_is_an_invariant_violation(self):
        payload = {"lines": [{"p": ["0", "0", "0", "0"], "d": ["0", "0", "0", "0"]}]}
        with pytest.raises(InvariantViolationError):
            loads_config(json.dumps(payload))
