import json

import pytest

from swarmreid import config as cfg
from swarmreid.config import SimConfig, load_config, set_value, validate
from swarmreid.errors import ConfigError
from swarmreid.runner import RunArtifact, run_experiment, sweep, sweep_csv


def _tweak(base, pairs):
    for key, value in pairs:
        base = set_value(base, key, value)
    return base


def _small(seed=0, **extra):
    pairs = [("seed", seed), ("duration_ticks", 300)]
    pairs.extend(extra.items())
    return _tweak(SimConfig(), pairs)


class TestConfig:
    def test_defaults_are_valid(self):
        assert validate(SimConfig()) == []

    def test_override_strings_parse_as_yaml_scalars(self):
        c = cfg.apply_overrides(SimConfig(), [
            "robots.count=5", "communication_enabled=false",
            "thresholds.theta_local=0.75"])
        assert c.robots.count == 5
        assert c.communication_enabled is False
        assert c.thresholds.theta_local == 0.75

    def test_set_value_rejects_type_mismatch(self):
        with pytest.raises(ConfigError, match="robots.count"):
            set_value(SimConfig(), "robots.count", "5")
        c = set_value(SimConfig(), "robots.count", 5)
        assert c.robots.count == 5
        assert SimConfig().robots.count == 4  # frozen copies, not mutation

    def test_unknown_key_names_the_key(self):
        with pytest.raises(ConfigError, match="robots.wheels"):
            set_value(SimConfig(), "robots.wheels", 4)

    def test_validation_lists_every_offending_key(self):
        c = _tweak(SimConfig(), [("dt", -1.0), ("noise.p_drop", 2.0)])
        problems = validate(c)
        assert any(p.startswith("dt:") for p in problems)
        assert any(p.startswith("noise.p_drop:") for p in problems)
        with pytest.raises(ConfigError) as err:
            run_experiment(c)
        assert "dt" in str(err.value) and "noise.p_drop" in str(err.value)

    def test_load_config_yaml(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text(
            "people:\n  count: 50\nnoise:\n  p_drop: 0.1\n"
            "arena:\n  obstacles:\n  - [-4, -4, -1, -1]\n"
        )
        c = load_config(path)
        assert c.people.count == 50
        assert c.noise.p_drop == 0.1
        assert c.arena.obstacles == ((-4.0, -4.0, -1.0, -1.0),)
        assert c.robots.count == SimConfig().robots.count

    def test_fingerprint_tracks_config_content(self):
        base = SimConfig()
        assert cfg.fingerprint(base) == cfg.fingerprint(SimConfig())
        changed = set_value(base, "thresholds.theta_merge", 0.9)
        assert cfg.fingerprint(changed) != cfg.fingerprint(base)
        same = set_value(base, "thresholds.theta_merge",
                         base.thresholds.theta_merge)
        assert cfg.fingerprint(same) == cfg.fingerprint(base)


class TestRunExperiment:
    def test_small_scenario_shape(self):
        art = run_experiment(_small())
        assert len(art.databases) == 4
        assert [db.owner for db in art.databases] == [0, 1, 2, 3]
        assert art.fingerprint == cfg.fingerprint(art.config)
        assert art.metrics.config_fingerprint == art.fingerprint
        assert len(art.people) == 6
        assert art.metrics.detected_identity_count >= 1
        for db in art.databases:
            db.check_invariants()

    def test_duration_zero_reports_cleanly(self):
        art = run_experiment(_small(duration_ticks=0))
        assert all(not db.clusters for db in art.databases)
        assert art.metrics.cmc == ()
        assert art.metrics.map_score == 0.0
        assert art.metrics.avg_purity == 0.0
        assert art.metrics.detected_identity_count == 0

    def test_repeat_runs_byte_identical(self, tmp_path):
        a = run_experiment(_small(seed=3)).save(tmp_path / "a")
        b = run_experiment(_small(seed=3)).save(tmp_path / "b")
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_adding_a_robot_leaves_existing_streams_alone(self):
        base = _small(seed=5, communication_enabled=False)
        two = run_experiment(set_value(base, "robots.count", 2))
        three = run_experiment(set_value(base, "robots.count", 3))
        assert two.databases[0].to_json() == three.databases[0].to_json()
        assert two.databases[1].to_json() == three.databases[1].to_json()

    def test_no_free_space_rejected(self):
        c = _small(seed=0)
        c = set_value(c, "arena.width", 10.0)
        c = set_value(c, "arena.height", 10.0)
        c = set_value(c, "arena.obstacles", ((-5.0, -5.0, 5.0, 5.0),))
        with pytest.raises(ConfigError, match="no free space"):
            run_experiment(c)

    def test_event_log_shape(self):
        art = run_experiment(_small(seed=1))
        assert art.events, "expected at least one event"
        last_tick = 0
        types = set()
        for event in art.events:
            types.add(event["type"])
            assert event["tick"] >= last_tick
            last_tick = event["tick"]
            if event["type"] == "assign":
                assert set(event) == {"type", "tick", "robot", "track_id",
                                      "uid", "created"}
            elif event["type"] == "exchange":
                assert {"robots", "merged_into_a", "copied_to_a",
                        "records_added_to_a"} <= set(event)
            else:
                raise AssertionError(f"unexpected event type {event['type']}")
        assert "assign" in types

    def test_communication_off_emits_no_exchanges(self):
        art = run_experiment(_small(seed=1, communication_enabled=False))
        assert all(e["type"] != "exchange" for e in art.events)

    def test_description_period_gates_emissions(self):
        period = 25
        art = run_experiment(_tweak(_small(seed=2), [
            ("perception.description_period", period)]))
        ticks = {}
        for event in art.events:
            if event["type"] == "assign":
                ticks.setdefault((event["robot"], event["track_id"]),
                                 []).append(event["tick"])
        assert ticks
        for seq in ticks.values():
            assert all(b - a >= period for a, b in zip(seq, seq[1:]))


class TestArtifactIO:
    def test_saved_file_set(self, tmp_path):
        out = run_experiment(_small()).save(tmp_path / "run")
        expected = {"config.json", "people.json", "events.ndjson",
                    "metrics.json", "cmc.csv"}
        expected |= {f"db_robot_{i}.json" for i in range(4)}
        assert {p.name for p in out.iterdir()} == expected
        doc = json.loads((out / "config.json").read_text())
        assert set(doc) == {"config", "fingerprint"}
        header = (out / "cmc.csv").read_text().splitlines()[0]
        assert header == "rank,cmc"

    def test_round_trip_preserves_everything(self, tmp_path):
        art = run_experiment(_small(seed=4))
        out = art.save(tmp_path / "run")
        loaded = RunArtifact.load(out)
        assert loaded.config == art.config
        assert loaded.fingerprint == art.fingerprint
        assert loaded.people == art.people
        assert loaded.events == art.events
        assert loaded.metrics.to_json() == art.metrics.to_json()
        assert [db.to_json() for db in loaded.databases] == [
            db.to_json() for db in art.databases]
        again = loaded.save(tmp_path / "again")
        for p in out.iterdir():
            assert p.read_bytes() == (again / p.name).read_bytes(), p.name


class TestSweep:
    def test_communication_axis_two_rows(self):
        rows = sweep(_small(), "communication_enabled", [False, True],
                     seeds=[0, 1])
        assert [r.value for r in rows] == [False, True]
        assert all(r.n_runs == 2 for r in rows)
        for row in rows:
            assert 0.0 <= row.means["map"] <= 1.0
            assert row.stds["map"] >= 0.0

    def test_csv_shape_and_round_trip(self):
        rows = sweep(_small(), "thresholds.theta_merge", [0.8], seeds=[0])
        text = sweep_csv(rows)
        lines = text.splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["axis", "value", "n_runs"]
        assert "map_mean" in header and "map_std" in header
        fields = lines[1].split(",")
        idx = header.index("map_mean")
        assert float(fields[idx]) == rows[0].means["map"]

    def test_parallel_matches_serial(self):
        base = _small()
        serial = sweep(base, "people.count", [3, 6], seeds=[0, 1], workers=1)
        parallel = sweep(base, "people.count", [3, 6], seeds=[0, 1], workers=2)
        assert serial == parallel

    def test_unknown_axis_rejected(self):
        with pytest.raises(ConfigError):
            sweep(_small(), "robots.wings", [1], seeds=[0])
