"""Simulation-study harness: configs, determinism, and table structure."""
import math

import numpy as np
import pytest

from garchsup import (ConfigError, FitError, GarchParams, StudyConfig,
                      power_study, scenario_params, size_study)
from garchsup.harness import StudyResult, _derive_seed


def quick_config(**overrides):
    base = dict(scenario="case_ii", n_list=(240,), delta_list=(0.90,),
                magnitude_list=(0.3,), span_list=(0.3,), tau1_star=0.5,
                replications=50, L=6, N=1500, seed=11)
    base.update(overrides)
    return StudyConfig(**base)


class TestScenarioParams:
    def test_case_i(self):
        theta, h = scenario_params("case_i")
        assert theta == GarchParams(0.3, (1.0,), (0.25,))
        assert tuple(h) == (0.0, 1.0, 0.0)

    def test_case_ii(self):
        theta, h = scenario_params("case_ii")
        assert theta == GarchParams(0.3, (0.4,), (0.6,))
        assert tuple(h) == (0.0, 1.0, 1.0)

    def test_projection_is_unity(self):
        for name in ("case_i", "case_ii"):
            theta, h = scenario_params(name)
            assert np.dot(h, theta.as_array()) == pytest.approx(1.0)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="case_i"):
            scenario_params("case_iii")


class TestStudyConfig:
    def test_json_roundtrip(self):
        cfg = quick_config(null_ref="complement", df=None)
        back = StudyConfig.from_json(cfg.to_json())
        assert back == cfg

    def test_json_roundtrip_numeric_null_ref(self):
        cfg = quick_config(null_ref=1.0)
        back = StudyConfig.from_json(cfg.to_json())
        assert back == cfg and back.null_ref == 1.0

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            StudyConfig.from_json('{"scenario": "case_ii", "bogus": 1}')

    @pytest.mark.parametrize("bad", [
        dict(scenario="nope"),
        dict(delta_list=(1.5,)),
        dict(magnitude_list=(-0.1,)),
        dict(span_list=(0.6,), tau1_star=0.5),
        dict(threads=0),
        dict(seed=-1),
        dict(null_ref="truth"),
        dict(L=2, kappa=0.4, kappa_prime=0.7),
        dict(innovation="cauchy"),
    ])
    def test_validation_errors(self, bad):
        with pytest.raises(ConfigError):
            quick_config(**bad)

    def test_derive_seed_pure(self):
        assert _derive_seed(3, 1, 4) == _derive_seed(3, 1, 4)
        assert _derive_seed(3, 1, 4) != _derive_seed(3, 1, 5)


class TestSizeStudy:
    def test_structure_and_reproducibility(self):
        cfg = quick_config()
        res = size_study(cfg)
        assert res.study == "size"
        assert len(res.cells) == 1
        cell = res.cells[0]
        assert cell.study == "size"
        assert cell.n == 240 and cell.delta == 0.90
        assert cell.magnitude == 0.0 and cell.span == 0.0
        assert 0.0 <= cell.rate <= 1.0
        assert cell.completed + cell.aborted == 50
        assert cell.se == pytest.approx(
            math.sqrt(cell.rate * (1 - cell.rate) / cell.completed))
        again = size_study(cfg)
        assert again.cells == res.cells

    def test_replication_floor(self):
        with pytest.raises(ConfigError, match="50"):
            size_study(quick_config(replications=20))

    def test_cell_grid_shape(self):
        cfg = quick_config(n_list=(240, 300), delta_list=(0.9, 0.95),
                           replications=50)
        res = size_study(cfg)
        assert len(res.cells) == 4
        assert [(c.n, c.delta) for c in res.cells] == \
            [(240, 0.9), (240, 0.95), (300, 0.9), (300, 0.95)]
        # One cv per (n, delta); acceptance rate non-increasing in delta is
        # NOT guaranteed, but rates at higher delta use a larger threshold:
        # rejection can only shrink, so acceptance is non-decreasing.
        assert res.cells[1].rate >= res.cells[0].rate - 1e-12


class TestPowerStudy:
    def test_structure_and_detection(self):
        cfg = quick_config()
        res = power_study(cfg)
        assert res.study == "power"
        cell = res.cells[0]
        assert cell.magnitude == 0.3 and cell.span == 0.3
        # A joint alpha+beta shock of 0.3 over 30% of n=240 is blatant.
        assert cell.rate > 0.5
        assert cell.completed + cell.aborted == 50

    def test_positive_magnitudes_required(self):
        with pytest.raises(ConfigError, match="positive"):
            power_study(quick_config(magnitude_list=(0.0, 0.2)))

    def test_thread_count_does_not_change_results(self):
        cfg1 = quick_config(replications=50)
        cfg2 = quick_config(replications=50, threads=2)
        r1 = power_study(cfg1)
        r2 = power_study(cfg2)
        assert [c.rate for c in r1.cells] == [c.rate for c in r2.cells]
        assert [c.completed for c in r1.cells] == \
            [c.completed for c in r2.cells]

    def test_all_replications_aborting_is_an_error(self):
        """case_i with an astronomically explosive shock overflows every
        replication; the study must fail loudly, not emit an empty cell."""
        cfg = quick_config(scenario="case_i", magnitude_list=(1e8,),
                           span_list=(0.45,))
        with pytest.raises(FitError, match="aborted"):
            power_study(cfg)


class TestStudyResultOutput:
    def test_csv_and_text(self, tmp_path):
        res = size_study(quick_config())
        csv_text = res.to_csv()
        lines = csv_text.strip().split("\n")
        assert lines[0].startswith("study,scenario,n,delta")
        assert len(lines) == 1 + len(res.cells)
        assert "acceptance rate" in res.to_text()
        csv_path, txt_path = res.save(str(tmp_path / "table"))
        with open(csv_path, encoding="utf-8") as fh:
            assert fh.read() == csv_text
        with open(txt_path, encoding="utf-8") as fh:
            assert fh.read() == res.to_text()
