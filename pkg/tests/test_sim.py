import json

import pytest

import oracles
import percosim as ps
from percosim.sim import EventKind


def tiny_graph():
    return ps.load_graph([(0, 1, 2), (1, 2, 2), (2, 3, 2)])


class TestEngine:
    def test_run_until_empty_queue(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        assert sim.run_until(100) == 0
        assert sim.clock == 100

    def test_same_tick_processed_in_schedule_order(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        order = []
        sim.schedule(5, lambda: order.append("a"))
        sim.schedule(5, lambda: order.append("b"))
        sim.schedule(3, lambda: order.append("first"))
        assert sim.run_until(10) == 3
        assert order == ["first", "a", "b"]

    def test_schedule_into_past_rejected(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        sim.run_until(10)
        with pytest.raises(ps.StateError):
            sim.schedule(9, lambda: None)

    def test_events_scheduled_during_run_still_fire(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        seen = []
        sim.schedule(2, lambda: sim.schedule(2, lambda: seen.append("nested")))
        sim.run_until(2)
        assert seen == ["nested"]

    def test_fresh_ids_are_sequential_per_category(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        assert [sim.fresh_id("x"), sim.fresh_id("x"), sim.fresh_id("y")] == [0, 1, 0]


class TestSendHop:
    def test_arrival_tick_is_latency_times_hops(self):
        sim = ps.Simulation(tiny_graph(), ps.LinkModel(latency=2), seed=0)
        arrivals = []

        def chain(at):
            def record():
                arrivals.append((at, sim.clock))
                if at < 3:
                    sim.send_hop(at, at + 1, key=f"p:{at}", action=chain(at + 1))
            return record

        sim.send_hop(0, 1, key="p:0", action=chain(1))
        sim.run_until(20)
        assert arrivals == [(1, 2), (2, 4), (3, 6)]

    def test_down_or_missing_links_refuse_sends(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        assert not sim.send_hop(0, 3, key="x", action=lambda: None)
        sim.graph.set_link_state(0, 1, False)
        assert not sim.send_hop(0, 1, key="x", action=lambda: None)

    def test_loss_one_drops_everything(self):
        sim = ps.Simulation(tiny_graph(), ps.LinkModel(loss=1.0), seed=0)
        assert not sim.send_hop(0, 1, key="x", action=lambda: None)

    def test_loss_is_keyed_not_sequential(self):
        sim = ps.Simulation(tiny_graph(), ps.LinkModel(loss=0.5), seed=3)
        rolls = [sim.loss_roll(f"pkt:{i}") for i in range(64)]
        assert rolls == [sim.loss_roll(f"pkt:{i}") for i in range(64)]
        assert any(rolls) and not all(rolls)


class TestJamming:
    def window(self, nodes, start, end):
        return ps.LinkModel(jam_windows=(ps.JamWindow(frozenset(nodes), start, end),))

    def test_no_event_executes_at_jammed_node(self):
        sim = ps.Simulation(tiny_graph(), self.window({1}, 0, 10), seed=0)
        ran, dropped = [], []
        sim.schedule(5, lambda: ran.append(1), kind=EventKind.PACKET_ARRIVAL, node=1,
                     on_dropped=lambda: dropped.append(1))
        sim.schedule(12, lambda: ran.append(2), kind=EventKind.PACKET_ARRIVAL, node=1)
        sim.run_until(20)
        assert ran == [2] and dropped == [1]

    def test_jammed_sender_refuses(self):
        sim = ps.Simulation(tiny_graph(), self.window({0}, 0, 10), seed=0)
        assert not sim.send_hop(0, 1, key="x", action=lambda: None)
        sim.run_until(10)  # window is [0, 10): tick 10 is clear
        assert sim.send_hop(0, 1, key="x", action=lambda: None)

    def test_window_end_exclusive(self):
        link = self.window({2}, 3, 7)
        assert link.jammed(2, 3) and link.jammed(2, 6)
        assert not link.jammed(2, 7) and not link.jammed(2, 2)
        assert not link.jammed(1, 5)


class TestChurnTimeline:
    def test_events_apply_at_their_tick(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        sim.apply_timeline([(5, ps.ChurnEvent.link_down(1, 2)),
                            (9, ps.ChurnEvent.leave(3))])
        sim.run_until(4)
        assert sim.graph.edge(1, 2).up
        sim.run_until(5)
        assert not sim.graph.edge(1, 2).up
        assert 2 not in sim.tables[1].neighbors  # neighbor re-query saw the outage
        sim.run_until(9)
        assert not sim.graph.has_node(3)
        assert 3 not in sim.tables

    def test_join_gets_fresh_table(self):
        sim = ps.Simulation(tiny_graph(), seed=0)
        sim.apply_timeline([(2, ps.ChurnEvent.join(9, ((0, 3),)))])
        sim.run_until(2)
        assert sim.tables[9].neighbors == [0]
        assert 9 in sim.tables[0].neighbors


class TestScenarios:
    def test_identical_config_identical_metrics(self):
        config = ps.load_config("configs/stub_iot.json")
        a = ps.run_scenario(config)
        b = ps.run_scenario(config)
        assert json.dumps(a.to_json()) == json.dumps(b.to_json())

    def test_relay_all_links_up_has_disjoint_paths(self):
        config = ps.parse_config({
            "scenario": "relay",
            "seed": 4,
            "relay": {"earth": 4, "moon": 3, "bandwidth": 4},
            "code": {"k": 16, "m": 8},
            "traffic": {"frames": 1},
        })
        sim = ps.Simulation(ps.build_relay_graph(config.relay), config.link, seed=config.seed)
        route = ps.run_routing_phase(sim, 0, 8, config.routing)
        assert oracles.vertex_disjoint_path_count(sim.graph, 0, 8) >= 2
        assert len(route.paths) >= 2
        interiors = [set(p.interior) for p in route.paths]
        for i, a in enumerate(interiors):
            for b in interiors[i + 1:]:
                assert not (a & b)

    def test_zero_flows_zero_transfers(self):
        config = ps.parse_config({
            "scenario": "stub_iot",
            "seed": 1,
            "topology": {"n": 10, "k": 2, "p": 0.0},
            "traffic": {"flows": 0},
        })
        metrics = ps.run_scenario(config)
        assert metrics.flows == 0 and metrics.transfers == 0
        assert metrics.delivery_rate is None and metrics.routing_success_rate is None

    def test_jam_cut_fails_then_clear_delivers(self):
        base = ps.load_config("configs/jamming.json")
        small = ps.parse_config({
            "scenario": "jamming",
            "seed": base.seed,
            "topology": {"edge_file": "pkg:three_paths.edges"},
            "code": {"k": 12, "m": 4},
            "link": {"latency": 1, "loss": 0.0,
                     "jam": [{"nodes": [1, 3, 5], "start": 9, "end": 100000}]},
            "traffic": {"flows": 1, "source": 0, "dest": 7, "give_up_factor": 10},
        })
        from dataclasses import replace

        jammed = ps.run_scenario(small)
        clear = ps.run_scenario(replace(small, link=ps.LinkModel()))
        assert jammed.deliveries == 0 and jammed.transfers == 1
        assert clear.deliveries == 1

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ps.ConfigError):
            ps.parse_config({"scenario": "warp", "seed": 1})

    def test_payload_bytes_bounded_by_block(self):
        with pytest.raises(ps.ConfigError, match="payload_bytes"):
            ps.parse_config({
                "scenario": "stub_iot",
                "seed": 1,
                "topology": {"n": 10, "k": 2, "p": 0.0},
                "code": {"k": 4, "m": 4},
                "traffic": {"payload_bytes": 99},
            })

    def test_aggregate_stats(self):
        rows = [
            ps.Metrics(scenario="s", seed=1, flows=2, routing_successes=1),
            ps.Metrics(scenario="s", seed=2, flows=2, routing_successes=2),
        ]
        agg = ps.aggregate(rows)
        assert agg["routing_success_rate"] == {"mean": 0.75, "min": 0.5, "max": 1.0, "count": 2}
        assert "storage_recovery_rate" not in agg
