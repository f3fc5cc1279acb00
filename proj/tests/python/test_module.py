import math

import pytest

import stagewire as sw


def test_message_round_trip():
    data = sw.encode_message("/mix/fader/3", [7, 0.5, "gain", b"\x01\x02\x03"])
    assert len(data) % 4 == 0
    assert sw.decode_message(data) == {"address": "/mix/fader/3", "args": [7, 0.5, "gain", b"\x01\x02\x03"]}
    assert sw.packet_to_string(data) == '/mix/fader/3 ,ifsb 7 0.5 "gain" blob[3]'


def test_known_bytes():
    assert sw.encode_message("/a", [1]) == b"/a\x00\x00,i\x00\x00\x00\x00\x00\x01"


def test_bundle_round_trip():
    packet = {
        "timetag": 1,
        "elements": [
            {"address": "/a", "args": [1]},
            {"timetag": 1, "elements": [{"address": "/b", "args": ["x"]}]},
        ],
    }
    assert sw.decode_packet(sw.encode_packet(packet)) == packet


def test_errors_carry_codes():
    with pytest.raises(sw.StagewireError) as err:
        sw.decode_packet(b"/a\x00")
    assert err.value.code == "BadAlignment"
    with pytest.raises(sw.StagewireError) as err:
        sw.encode_message("/a", [True])
    assert err.value.code == "InvalidArgument"
    with pytest.raises(sw.StagewireError) as err:
        sw.encode_message("/a", [b"x" * (sw.MAX_PACKET_SIZE + 1)])
    assert err.value.code == "Oversize"


def test_match_address():
    assert sw.match_address("/light/*/level", "/light/3/level")
    assert sw.match_address("/perc/{snare,kick}", "/perc/kick")
    assert not sw.match_address("/light/?", "/light/12")


def tuio_frame(fseq, objects):
    elements = [{"address": "/tuio/2Dobj", "args": ["alive"] + [o[0] for o in objects]}]
    for session, cls, x, y in objects:
        elements.append({"address": "/tuio/2Dobj", "args": ["set", session, cls, x, y, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]})
    elements.append({"address": "/tuio/2Dobj", "args": ["fseq", fseq]})
    return sw.encode_packet({"timetag": 1, "elements": elements})


def test_tracker_add_update_remove():
    tracker = sw.Tracker()
    events = tracker.apply(tuio_frame(1, [(5, 4, 0.25, 0.75)]))
    assert [(e[0], e[1], e[2]) for e in events] == [("add", 5, 4)]
    assert len(tracker) == 1
    assert tracker.apply(tuio_frame(1, [])) == []
    events = tracker.apply(tuio_frame(2, []))
    assert [(e[0], e[1]) for e in events] == [("remove", 5)]
    assert tracker.last_fseq == 2
    assert len(tracker) == 0


def test_synth_and_detect():
    samples, beats = sw.synth_ppg(bpm=75, duration_ms=20000, snr_db=20, seed=3)
    assert len(samples) == 2000
    assert beats[0] == pytest.approx(400.0)
    config = sw.DetectorConfig()
    detected = sw.detect(samples, config)
    bpm = sw.estimate_bpm([t for t, _ in detected])
    assert abs(bpm - 75) <= 2


def test_detect_rejects_time_going_backwards():
    with pytest.raises(sw.StagewireError) as err:
        sw.detect([(0.0, 1.0), (10.0, 1.0), (5.0, 1.0)])
    assert err.value.code == "NonMonotonicTime"


def test_router_emits_card_cue():
    rules = """[{"id": "card", "match": {"kind": "fiducial_add", "class": 4},
                 "emit": {"address": "/cue/card", "args": [{"int": "{session}"}]}}]"""
    router = sw.Router(rules)
    emissions, error = router.handle(tuio_frame(1, [(9, 4, 0.5, 0.5)]), 100.0)
    assert error is None
    assert len(emissions) == 1
    t, rule, message, line = emissions[0]
    assert (t, rule) == (100.0, "card")
    assert sw.decode_message(message) == {"address": "/cue/card", "args": [9]}
    emissions, error = router.handle(b"garbage", 101.0)
    assert emissions == [] and error


def test_bad_rules_raise():
    with pytest.raises(sw.StagewireError) as err:
        sw.Router('[{"id": "x", "match": {"kind": "nope"}, "emit": {"address": "/a"}}]')
    assert err.value.code in ("InvalidRule", "ParseError")


def test_run_choreography_keep_alive():
    frames = sw.run_choreography('{"frame_rate_hz": 10, "duration_ms": 500, "actions": []}')
    assert [t for t, _ in frames] == [0, 100, 200, 300, 400]
    decoded = sw.decode_packet(frames[0][1])
    assert [e["args"][0] for e in decoded["elements"]] == ["alive", "fseq"]


def test_sim_network_loss_is_deterministic():
    def run():
        net = sw.SimNetwork(latency_ms=2, jitter_ms=3, loss_rate=0.3, seed=11)
        pub = net.publisher("p")
        sub = net.subscribe("s")
        for i in range(200):
            pub.publish(sw.encode_message("/n", [i]))
        net.advance(10)
        return [sw.decode_message(d)["args"][0] for d, _ in sub.drain()]

    first = run()
    assert first == run()
    assert first == sorted(first)
    assert 100 < len(first) < 180


def test_sim_network_shutdown():
    net = sw.SimNetwork()
    sub = net.subscribe("s")
    assert sub.recv(1) is None
    net.shutdown()
    with pytest.raises(sw.StagewireError) as err:
        sub.recv(1)
    assert err.value.code == "Closed"


def test_parse_trace_reports_line():
    text = "0\tin\t2f610000\n5\tin\t2f62\n"
    with pytest.raises(sw.ParseError) as err:
        sw.parse_trace(text + "1\tin\t2f610000\n")
    assert err.value.line == 3
    assert sw.parse_trace("0\tout\t2f610000\n") == [(0, "out", b"/a\x00\x00")]
    with pytest.raises(sw.ParseError) as err:
        sw.parse_trace("0\tin\tzz\n")
    assert err.value.line == 1


def test_run_show_deterministic():
    samples, _ = sw.synth_ppg(bpm=80, duration_ms=6000, snr_db=30, seed=1)
    ppg = "".join(f"{t:.3f}\t{v:.9g}\n" for t, v in samples)
    script = """{"frame_rate_hz": 20, "duration_ms": 6000, "actions": [
        {"kind": "place", "t_ms": 1000, "session": 1, "class": 4, "x": 0.5, "y": 0.5}]}"""
    rules = """[{"id": "card", "match": {"kind": "fiducial_add", "class": 4},
                 "emit": {"address": "/cue/card", "args": [{"int": "{class}"}]}},
                {"id": "pulse", "match": {"kind": "heartbeat"},
                 "emit": {"address": "/viz/flash", "args": [{"float": "{value}"}]}}]"""
    log = sw.run_show(script, rules, ppg)
    assert log == sw.run_show(script, rules, ppg)
    lines = log.splitlines()
    assert lines[0].startswith("1000.000\tcard\t/cue/card ,i 4")
    beats = [l for l in lines if "\tpulse\t" in l]
    assert 4 <= len(beats) <= 8
    assert not math.isnan(float(lines[-1].split("\t")[0]))
