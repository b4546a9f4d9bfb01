import pytest

from cavsim.scenario import (PolicyParams, RunControls, Scenario,
                             ScenarioError, ServerSpec, UserSpec,
                             bundled_names, load_bundled, parse_scenario,
                             render_scenario, with_overrides)

MINIMAL = """
[run]
end_time = 100.0

[router a]
service = deterministic
mean_service_time = 2.0

[user u]
path = a
"""


class TestParse:
    def test_bundled_case1(self):
        sc = load_bundled("case1")
        assert [r.name for r in sc.routers] == ["r1", "r2", "r3", "r4"]
        assert [r.mean_service_time for r in sc.routers] == [2.0, 5.0, 3.0, 4.0]
        assert sc.router("r3").propagation_delay == 62.5
        assert len(sc.users) == 1
        assert sc.users[0].path == ("r1", "r2", "r3", "r4")

    def test_bundled_case2_adds_triggered_user(self):
        sc = load_bundled("case2")
        u2 = sc.user("u2")
        assert u2.path == ("r1", "r2")
        assert u2.start_after_user == "u1"
        assert u2.start_after_packets == 200

    def test_bundled_names(self):
        assert {"case1", "case2", "mm1"} <= set(bundled_names())

    def test_unknown_bundled(self):
        with pytest.raises(ScenarioError):
            load_bundled("nope")

    def test_defaults_filled(self):
        sc = parse_scenario(MINIMAL)
        assert sc.run.seed == 0
        assert sc.params.cutoff == 0.5
        assert sc.params.decrease_factor == 0.875
        assert sc.params.capacity_factor == 0.9
        assert sc.users[0].speed == 1.0

    def test_undefined_router_reference(self):
        bad = MINIMAL.replace("path = a", "path = a ghost")
        with pytest.raises(ScenarioError, match="ghost"):
            parse_scenario(bad)

    def test_unknown_key_reports_line(self):
        bad = MINIMAL + "bogus = 1\n"
        with pytest.raises(ScenarioError, match=r"line \d+.*bogus"):
            parse_scenario(bad)

    def test_unknown_section(self):
        with pytest.raises(ScenarioError, match="unknown section"):
            parse_scenario("[nonsense]\n")

    def test_bad_value_reports_line(self):
        bad = MINIMAL.replace("end_time = 100.0", "end_time = soon")
        with pytest.raises(ScenarioError, match="line 2"):
            parse_scenario(bad.strip())

    def test_key_before_section(self):
        with pytest.raises(ScenarioError, match="before any section"):
            parse_scenario("end_time = 5\n")

    def test_duplicate_section(self):
        with pytest.raises(ScenarioError, match="duplicate"):
            parse_scenario(MINIMAL + "\n[user u]\npath = a\n")

    def test_fixed_mode_requires_window(self):
        bad = MINIMAL.replace("[run]", "[run]\nmode = fixed")
        with pytest.raises(ScenarioError, match="pinned window"):
            parse_scenario(bad)

    def test_parameter_ranges_checked(self):
        bad = MINIMAL + "\n[params]\ncutoff = 1.5\n"
        with pytest.raises(ScenarioError, match="cutoff"):
            parse_scenario(bad)

    def test_start_after_requires_both_fields(self):
        bad = MINIMAL.replace("path = a", "path = a\nstart_after_packets = 5")
        with pytest.raises(ScenarioError, match="start_after"):
            parse_scenario(bad)


class TestRoundTrip:
    def test_bundled_scenarios_round_trip(self):
        for name in bundled_names():
            sc = load_bundled(name)
            assert parse_scenario(render_scenario(sc)) == sc

    def test_all_optionals_round_trip(self):
        sc = Scenario(
            routers=[ServerSpec("q", "exponential", 1.5, 0.25)],
            users=[
                UserSpec("a", ("q",), start_time=2.0, w_max=9, speed=0.5,
                         window=3, packet_budget=77),
                UserSpec("b", ("q",), w_max=4,
                         start_after_user="a", start_after_packets=10),
            ],
            run=RunControls(end_time=512.0, seed=3, mode="fixed",
                            warmup_fraction=0.125, explicit_ack=True,
                            ack_delay=6.5, max_packets=1000),
            params=PolicyParams(cutoff=0.25, decrease_factor=0.75,
                                increase_amount=2.0, capacity_factor=0.8,
                                table_size=16),
        )
        sc.users[1].window = 1
        assert parse_scenario(render_scenario(sc)) == sc


class TestDerivedQuantities:
    def test_default_w_max_doubles_the_knee_window(self):
        sc = load_bundled("case1")
        sc.users[0].w_max = None
        # knee window 15.3 from the unloaded round trip and bottleneck rate
        assert sc.effective_w_max(sc.users[0]) == 31

    def test_knee_rates(self):
        det = ServerSpec("d", "deterministic", 5.0)
        assert det.knee_rate() == pytest.approx(0.2)
        assert det.knee_power() == pytest.approx(0.2 / 5.0)
        exp = ServerSpec("e", "exponential", 2.0)
        assert exp.knee_rate() == pytest.approx(0.25)
        assert exp.knee_response() == pytest.approx(4.0)

    def test_base_round_trip(self):
        sc = load_bundled("case1")
        assert sc.base_round_trip(sc.users[0].path) == pytest.approx(76.5)


class TestOverrides:
    def test_dotted_and_bare_keys(self):
        sc = load_bundled("case1")
        out = with_overrides(sc, {"run.end_time": "500", "cutoff": "0.4"})
        assert out.run.end_time == 500.0
        assert out.params.cutoff == 0.4
        assert sc.run.end_time == 12000.0  # original untouched

    def test_unknown_override(self):
        with pytest.raises(ScenarioError, match="unknown override"):
            with_overrides(load_bundled("case1"), {"run.bogus": "1"})

    def test_override_still_validated(self):
        with pytest.raises(ScenarioError):
            with_overrides(load_bundled("case1"), {"params.cutoff": "2.0"})
