import os
import random
import re
import socket
import subprocess
import time
from pathlib import Path

import pytest

import stagewire as sw

CLI = os.environ.get("STAGEWIRE_CLI", "stagewire")
FIXTURES = Path(os.environ.get("STAGEWIRE_FIXTURES", "."))
SHOW_DIR = Path(os.environ.get("STAGEWIRE_SHOW_DIR", "data/show"))


def run(*args, timeout=30):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=timeout)


class Listener:
    """Starts a listening subcommand on a free port and waits until it is bound."""

    def __init__(self, *args):
        self.proc = subprocess.Popen([CLI, *map(str, args)], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        line = self.proc.stderr.readline()
        match = re.search(r"listening on port (\d+)", line)
        if not match:
            self.proc.kill()
            raise AssertionError(f"listener did not start: {line!r}")
        self.port = int(match.group(1))

    def wait(self, timeout=20):
        out, err = self.proc.communicate(timeout=timeout)
        return self.proc.returncode, out, err


def receiver():
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.bind(("127.0.0.1", 0))
    s.settimeout(5)
    return s


def recv_n(sock, n):
    return [sock.recvfrom(65536)[0] for _ in range(n)]


def sender():
    return socket.socket(socket.AF_INET, socket.SOCK_DGRAM)


def read_trace(path):
    return sw.parse_trace(Path(path).read_text())


def sample_packets(n):
    rng = random.Random(5)
    out = []
    for i in range(n):
        args = [i, rng.random(), "x" * rng.randint(0, 9), bytes(rng.randrange(256) for _ in range(rng.randint(0, 7)))]
        out.append(sw.encode_message(f"/probe/{i % 7}", args))
    return out


def write_json(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_sniff_then_replay_is_byte_identical(tmp_path):
    packets = sample_packets(40)
    first = tmp_path / "first.trace"
    sniff = Listener("sniff", "--port", 0, "--out", first, "--count", len(packets))
    tx = sender()
    for p in packets:
        tx.sendto(p, ("127.0.0.1", sniff.port))
        time.sleep(0.002)
    code, _, err = sniff.wait()
    assert code == 0, err
    recorded = read_trace(first)
    assert [p for _, _, p in recorded] == packets
    assert all(d == "in" for _, d, _ in recorded)
    assert [t for t, _, _ in recorded] == sorted(t for t, _, _ in recorded)

    second = tmp_path / "second.trace"
    again = Listener("sniff", "--port", 0, "--out", second, "--count", len(packets))
    result = run("replay", first, "--to", f"127.0.0.1:{again.port}")
    assert result.returncode == 0, result.stderr
    code, _, err = again.wait()
    assert code == 0, err
    assert [p for _, _, p in read_trace(second)] == packets


def test_replay_speed_scales_timing(tmp_path):
    trace = tmp_path / "spaced.trace"
    lines = [f"{t}\tin\t{sw.encode_message('/tick', [t]).hex()}\n" for t in range(0, 1001, 100)]
    trace.write_text("".join(lines))
    rx = receiver()
    arrivals = []
    proc = subprocess.Popen([CLI, "replay", str(trace), "--to", f"127.0.0.1:{rx.getsockname()[1]}", "--speed", "2.0"])
    for _ in range(11):
        rx.recvfrom(65536)
        arrivals.append(time.monotonic())
    assert proc.wait(timeout=10) == 0
    span_ms = (arrivals[-1] - arrivals[0]) * 1000
    assert 450 <= span_ms <= 550


def test_replay_reports_bad_line(tmp_path):
    good = [f"{t}\tin\t{sw.encode_message('/a', [t]).hex()}\n" for t in range(6)]
    trace = tmp_path / "bad.trace"
    trace.write_text("".join(good) + "6\tin\tnot-hex\n")
    rx = receiver()
    result = run("replay", trace, "--to", f"127.0.0.1:{rx.getsockname()[1]}")
    assert result.returncode == 1
    assert "ParseError" in result.stderr
    assert "line 7" in result.stderr


def test_bind_in_use_port_fails(tmp_path):
    busy = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    busy.bind(("0.0.0.0", 0))
    port = busy.getsockname()[1]
    result = run("sniff", "--port", port, "--out", tmp_path / "x.trace", "--count", 1)
    assert result.returncode != 0
    assert "BindFailure" in result.stderr
    busy.close()


def test_shared_sniffers_can_share_a_port(tmp_path):
    first = Listener("sniff", "--port", 0, "--shared", "--out", tmp_path / "a.trace", "--duration", 300)
    second = Listener("sniff", "--port", first.port, "--shared", "--out", tmp_path / "b.trace", "--duration", 300)
    assert first.wait()[0] == 0
    assert second.wait()[0] == 0


def test_relay_to_two_targets(tmp_path):
    a, b = receiver(), receiver()
    packets = sample_packets(25)
    relay = Listener("relay", "--listen", 0, "--to",
                     f"127.0.0.1:{a.getsockname()[1]},127.0.0.1:{b.getsockname()[1]}", "--count", len(packets))
    tx = sender()
    for p in packets:
        tx.sendto(p, ("127.0.0.1", relay.port))
        time.sleep(0.002)
    code, _, err = relay.wait()
    assert code == 0, err
    assert recv_n(a, len(packets)) == packets
    assert recv_n(b, len(packets)) == packets


CARD_RULES = """[{"id": "card", "match": {"kind": "fiducial_add", "class": 4},
                  "emit": {"address": "/cue/card", "args": [{"int": "{class}"}, {"int": "{session}"}]}}]"""

CARD_SCRIPT = """{"frame_rate_hz": 30, "duration_ms": 1500, "actions": [
  {"kind": "place", "t_ms": 300, "session": 12, "class": 4, "x": 0.4, "y": 0.6, "angle": 0},
  {"kind": "move_to", "t_start_ms": 500, "t_end_ms": 1000, "session": 12, "x": 0.6, "y": 0.6},
  {"kind": "lift", "t_ms": 1200, "session": 12}]}"""


def test_simulate_into_route_fires_one_cue(tmp_path):
    rules = write_json(tmp_path, "rules.json", CARD_RULES)
    script = write_json(tmp_path, "card.json", CARD_SCRIPT)
    cues = receiver()
    log = tmp_path / "route.log"
    route = Listener("route", rules, "--listen", 0, "--to", f"127.0.0.1:{cues.getsockname()[1]}",
                     "--log", log, "--duration", 2500)
    result = run("simulate", script, "--to", f"127.0.0.1:{route.port}")
    assert result.returncode == 0, result.stderr
    code, out, err = route.wait()
    assert code == 0, err
    lines = out.splitlines()
    assert len(lines) == 1
    assert lines[0].split("\t")[1:] == ["card", "/cue/card ,ii 4 12"]
    assert log.read_text().splitlines() == lines
    assert sw.decode_message(cues.recvfrom(65536)[0]) == {"address": "/cue/card", "args": [4, 12]}
    cues.settimeout(0.2)
    with pytest.raises(socket.timeout):
        cues.recvfrom(65536)


def test_simulate_empty_script_sends_keep_alive(tmp_path):
    script = write_json(tmp_path, "empty.json", '{"frame_rate_hz": 20, "duration_ms": 500, "actions": []}')
    rx = receiver()
    result = run("simulate", script, "--to", f"127.0.0.1:{rx.getsockname()[1]}", "--no-pace")
    assert result.returncode == 0, result.stderr
    frames = [sw.decode_packet(p) for p in recv_n(rx, 10)]
    for i, frame in enumerate(frames):
        assert [e["args"] for e in frame["elements"]] == [["alive"], ["fseq", i + 1]]
    rx.settimeout(0.2)
    with pytest.raises(socket.timeout):
        rx.recvfrom(65536)


def test_detect_fixture_bpm():
    result = run("detect", FIXTURES / "ppg_60bpm.tsv")
    assert result.returncode == 0, result.stderr
    last = result.stdout.splitlines()[-1].split("\t")
    assert last[0] == "bpm"
    assert abs(float(last[1]) - 60) <= 2


def test_detect_constant_input_has_no_estimate(tmp_path):
    flat = tmp_path / "flat.tsv"
    flat.write_text("".join(f"{t * 10}\t0.5\n" for t in range(3000)))
    result = run("detect", flat)
    assert result.returncode == 0, result.stderr
    assert result.stdout.splitlines() == ["bpm\tno estimate"]


def test_detect_shuffled_input_fails(tmp_path):
    lines = (FIXTURES / "ppg_60bpm.tsv").read_text().splitlines(keepends=True)
    random.Random(1).shuffle(lines)
    shuffled = tmp_path / "shuffled.tsv"
    shuffled.write_text("".join(lines))
    result = run("detect", shuffled)
    assert result.returncode == 1
    assert "NonMonotonicTime" in result.stderr


def test_sniff_records_undecodable_datagrams(tmp_path):
    out = tmp_path / "junk.trace"
    sniff = Listener("sniff", "--port", 0, "--out", out, "--count", 2)
    tx = sender()
    tx.sendto(b"\x01\x02\x03", ("127.0.0.1", sniff.port))
    time.sleep(0.01)
    tx.sendto(sw.encode_message("/ok", [1]), ("127.0.0.1", sniff.port))
    code, stdout, err = sniff.wait()
    assert code == 0, err
    assert [p for _, _, p in read_trace(out)] == [b"\x01\x02\x03", sw.encode_message("/ok", [1])]
    lines = stdout.splitlines()
    assert lines[0].split("\t")[2].startswith("!error ")
    assert lines[1].split("\t")[2] == "/ok ,i 1"


def test_show_matches_golden_log():
    result = run("show", "--script", SHOW_DIR / "choreography.json", "--rules", SHOW_DIR / "rules.json",
                 "--ppg", FIXTURES / "show_ppg.tsv", "--midi-rules", SHOW_DIR / "midi_rules.json",
                 "--midi-events", SHOW_DIR / "midi_events.tsv")
    assert result.returncode == 0, result.stderr
    assert result.stdout == (SHOW_DIR / "expected.log").read_text()


def test_usage_errors_exit_nonzero(tmp_path):
    assert run("replay").returncode != 0
    assert run("synth-ppg", "--out", tmp_path / "x", "--noise", 0.1, "--snr", 20).returncode != 0
    assert run("replay", tmp_path / "missing.trace", "--to", "127.0.0.1:9").returncode == 1
