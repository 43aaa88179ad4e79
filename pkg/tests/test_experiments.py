import dataclasses
import json

import numpy as np
import pytest

from dsce.errors import ConfigurationError
from dsce.experiments import (GroupSpec, ScenarioConfig, SnrSetting, asce,
                              config_from_dict, config_to_dict, emit_csv,
                              generate_trial_data, load_config, nmse, preset,
                              run_scenario, save_config)
from dsce.experiments.cli import main as cli_main
from dsce.signal_model import ArrayConfig, build_dictionary


def tiny_config(**overrides):
    base = dict(
        name="tiny",
        num_users=4,
        num_antennas=16,
        dict_size=24,
        t_list=(8, 12),
        snr_settings=(SnrSetting(per_user_db=(20.0,) * 4),),
        global_size=3,
        trials=4,
        master_seed=99,
    )
    base.update(overrides)
    return ScenarioConfig(**base).validate()


class TestAsce:
    def test_perfect_estimates(self):
        assert asce([[(1, 2), (3, 4)]], [(1, 2), (3, 4)]) == 0.0

    def test_fully_wrong_estimates(self):
        assert asce([[(5, 6), (7, 8)]], [(1, 2), (3, 4)]) == 1.0

    def test_half_overlap(self):
        assert asce([[(1, 2, 9, 10)]], [(1, 2, 3, 4)]) == pytest.approx(0.5)

    def test_per_trial_truths(self):
        estimates = [[(1,)], [(2,)]]
        truths = [[(1,)], [(3,)]]
        assert asce(estimates, truths) == pytest.approx(0.5)

    def test_empty_truth_rejected(self):
        with pytest.raises(ValueError):
            asce([[(1,)]], [()])

    def test_stays_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            est = [[tuple(rng.choice(20, 4, replace=False)) for _ in range(3)]]
            tru = [tuple(rng.choice(20, 4, replace=False)) for _ in range(3)]
            value = asce(est, tru)
            assert 0.0 <= value <= 1.0


class TestNmse:
    def test_perfect(self):
        h = [np.array([1.0, 2.0j]), np.array([3.0, 0.0])]
        assert nmse(h, h) == 0.0

    def test_zero_estimate_gives_one(self):
        h = [np.array([1.0, 2.0])]
        assert nmse([np.zeros(2)], h) == pytest.approx(1.0)

    def test_double_estimate_gives_one(self):
        h = [np.array([1.0 + 1j, -2.0])]
        assert nmse([2.0 * h[0]], h) == pytest.approx(1.0)

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            nmse([np.ones(2)], [np.zeros(2)])


class TestConfig:
    @pytest.mark.parametrize("name", ["exp1", "exp1_low", "exp2", "exp3"])
    def test_presets_validate(self, name):
        config = preset(name)
        assert config.num_users == 10
        assert config.num_antennas == 128
        assert config.dict_size == 200
        assert min(config.t_list) == 10 and max(config.t_list) == 40
        assert config.trials == 1000

    def test_exp3_sparsity_is_eight(self):
        assert preset("exp3").sparsity == 8

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            preset("exp9")

    def test_round_trip_through_json_file(self, tmp_path):
        config = preset("exp3")
        path = tmp_path / "exp3.json"
        save_config(config, path)
        assert load_config(path) == config

    def test_dict_round_trip(self):
        config = tiny_config(groups=(GroupSpec.of(2, (0, 1)),
                                     GroupSpec.of(2, (2, 3))))
        assert config_from_dict(config_to_dict(config)) == config

    def test_unknown_keys_rejected(self):
        data = config_to_dict(tiny_config())
        data["bandwidth"] = 1e6
        with pytest.raises(ConfigurationError):
            config_from_dict(data)

    def test_infeasible_sparsity(self):
        with pytest.raises(ConfigurationError):
            tiny_config(global_size=30)
        with pytest.raises(ConfigurationError):
            tiny_config(t_list=(2,))

    def test_uneven_user_sparsity_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(groups=(GroupSpec.of(2, (0, 1)),))

    def test_snr_setting_length_checked(self):
        with pytest.raises(ConfigurationError):
            tiny_config(snr_settings=(SnrSetting(per_user_db=(20.0,)),))

    def test_label_collision_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(snr_settings=(
                SnrSetting(per_user_db=(20.0,) * 4),
                SnrSetting(per_user_db=(20.0,) * 4),
            ))

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ConfigurationError):
            tiny_config(algorithms=("omp", "amp"))


class TestRunScenario:
    def test_determinism_and_csv_bytes(self, tmp_path):
        config = tiny_config()
        r1 = run_scenario(config)
        r2 = run_scenario(config)
        assert r1 == r2
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(r1, p1)
        emit_csv(r2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_row_accounting_two_settings(self):
        config = tiny_config(snr_settings=(
            SnrSetting(per_user_db=(20.0,) * 4),
            SnrSetting(per_user_db=(10.0,) * 4),
        ), trials=2)
        report = run_scenario(config)
        # homogeneous settings: one row per (algorithm, T, setting)
        assert len(report.rows) == 4 * 2 * 2
        assert set(report.snr_tags()) == {"20dB", "10dB"}

    def test_heterogeneous_breakdown_rows(self):
        config = tiny_config(snr_settings=(
            SnrSetting(per_user_db=(20.0, 20.0, 0.0, 0.0)),
        ), trials=2, shuffle_snr_per_trial=True)
        report = run_scenario(config)
        assert set(report.snr_tags()) == {"all", "20dB", "0dB"}
        assert len(report.rows) == 4 * 2 * 3

    def test_breakdown_is_membership_weighted_average(self):
        config = tiny_config(snr_settings=(
            SnrSetting(per_user_db=(20.0, 20.0, 20.0, 0.0)),
        ), trials=5, shuffle_snr_per_trial=True, algorithms=("omp",))
        report = run_scenario(config)
        for t in config.t_list:
            overall = report.row("omp", t, "all")
            high = report.row("omp", t, "20dB")
            low = report.row("omp", t, "0dB")
            combined = (3 * (1 - high.asce) + 1 * (1 - low.asce)) / 4
            assert overall.asce == pytest.approx(1 - combined, abs=1e-12)

    def test_fair_comparison_across_algorithm_subsets(self):
        full = run_scenario(tiny_config())
        for alg in ("omp", "somp", "diomp", "wdiomp"):
            solo = run_scenario(tiny_config(algorithms=(alg,)))
            for row in solo.rows:
                match = full.row(row.algorithm, row.num_slots, row.snr_tag)
                assert row == match

    def test_header_only_csv_for_no_algorithms(self, tmp_path):
        report = run_scenario(tiny_config(algorithms=()))
        path = tmp_path / "empty.csv"
        emit_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines == ["scenario,algorithm,T,snr_tag,asce,nmse,bits,trials"]

    def test_asce_bounds_and_bits_columns(self):
        report = run_scenario(tiny_config(trials=3))
        for row in report.rows:
            assert 0.0 <= row.asce <= 1.0
            assert row.nmse >= 0.0
            assert row.trials == 3
            if row.algorithm == "omp":
                assert row.bits == 0
            elif row.algorithm == "somp":
                assert row.bits == 2 * 4 * row.num_slots * 36 + 3 * 5
            else:
                assert row.bits == 4 * 3 * 5 * 9

    def test_monotone_trend_with_many_trials(self):
        # statistical invariant: more measurements never hurt on average
        config = tiny_config(
            num_users=6,
            num_antennas=32,
            dict_size=48,
            t_list=(8, 24),
            snr_settings=(SnrSetting(per_user_db=(20.0,) * 6),),
            trials=200,
        )
        report = run_scenario(config)
        for alg in config.algorithms:
            curve = report.asce_curve(alg, "20dB")
            assert curve[24] <= curve[8]

    def test_trace_sink_receives_protocol_runs(self):
        seen = []
        config = tiny_config(trials=2, t_list=(8,),
                             algorithms=("diomp", "wdiomp"))
        run_scenario(config, trace_sink=lambda *args: seen.append(args))
        assert len(seen) == 4  # 2 algorithms x 2 trials
        num_slots, label, trial, algorithm, trace = seen[0]
        assert num_slots == 8 and label == "20dB" and trial == 0
        assert algorithm in ("diomp", "wdiomp")
        assert trace.num_rounds == 3

    def test_fixed_profile_mode_reuses_supports(self):
        config = tiny_config(fixed_profile=True, trials=3)
        dictionary = build_dictionary(
            ArrayConfig(config.num_antennas,
                        config.element_spacing_over_wavelength),
            config.dict_size, config.grid_policy)
        from dsce.experiments.runner import trial_rng
        from dsce.signal_model import sample_profile
        rng = np.random.default_rng(
            np.random.SeedSequence([int(config.master_seed)]))
        fixed = sample_profile(rng, config.dict_size, config.num_users,
                               config.global_size, [], [],
                               config.overlap_policy)
        d1 = generate_trial_data(config, dictionary, 8, 0, 0, fixed)
        d2 = generate_trial_data(config, dictionary, 12, 2, 0, fixed)
        assert d1.true_supports() == d2.true_supports()

    def test_trial_data_is_deterministic_per_cell(self):
        config = tiny_config()
        dictionary = build_dictionary(
            ArrayConfig(config.num_antennas,
                        config.element_spacing_over_wavelength),
            config.dict_size, config.grid_policy)
        a = generate_trial_data(config, dictionary, 8, 1, 0)
        b = generate_trial_data(config, dictionary, 8, 1, 0)
        c = generate_trial_data(config, dictionary, 8, 2, 0)
        assert np.array_equal(a.measurements.per_user[0],
                              b.measurements.per_user[0])
        assert not np.array_equal(a.measurements.per_user[0],
                                  c.measurements.per_user[0])


class TestCli:
    def test_run_with_preset_and_overrides(self, tmp_path, capsys):
        out = tmp_path / "out.csv"
        code = cli_main([
            "run", "--preset", "exp1", "--out", str(out),
            "--trials", "2", "--t-list", "10,12",
            "--algorithms", "omp,somp",
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "scenario,algorithm,T,snr_tag,asce,nmse,bits,trials"
        assert len(lines) == 1 + 2 * 2 * 2

    def test_run_with_config_file_and_trace(self, tmp_path):
        config = tiny_config(trials=2, t_list=(8,),
                             algorithms=("omp", "wdiomp"))
        cfg_path = tmp_path / "cfg.json"
        save_config(config, cfg_path)
        out = tmp_path / "out.csv"
        trace = tmp_path / "trace.jsonl"
        code = cli_main(["run", "--config", str(cfg_path), "--out", str(out),
                         "--trace", str(trace)])
        assert code == 0
        records = [json.loads(line)
                   for line in trace.read_text().strip().splitlines()]
        assert len(records) == 2 * 3 * 4  # trials x rounds x users
        assert {r["algorithm"] for r in records} == {"wdiomp"}

    def test_sweep_overrides_t_list(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = cli_main([
            "sweep", "--preset", "exp1", "--out", str(out),
            "--trials", "1", "--t-start", "10", "--t-stop", "14",
            "--t-step", "2", "--algorithms", "omp",
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 3 * 2  # three T values, two SNR settings

    def test_trace_subcommand(self, tmp_path):
        config = tiny_config(algorithms=("diomp",))
        cfg_path = tmp_path / "cfg.json"
        save_config(config, cfg_path)
        out = tmp_path / "t.jsonl"
        code = cli_main(["trace", "--config", str(cfg_path), "--t", "8",
                         "--max-trials", "2", "--out", str(out)])
        assert code == 0
        records = [json.loads(line)
                   for line in out.read_text().strip().splitlines()]
        assert len(records) == 2 * 3 * 4
        assert all(r["T"] == 8 for r in records)

    def test_show_config(self, capsys):
        assert cli_main(["show-config", "--preset", "exp2"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["name"] == "exp2"
        assert data["shuffle_snr_per_trial"] is True

    def test_invalid_configuration_exits_nonzero(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli_main(["run", "--preset", "exp1", "--out",
                      str(tmp_path / "x.csv"), "--trials", "0"])
        assert exc.value.code == 2
