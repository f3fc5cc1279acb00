#include <doctest.h>

#include <cmath>
#include <random>

#include "stagewire/pulse.hpp"
#include "stagewire/sim.hpp"
#include "support/detector_oracle.hpp"
#include "support/expect.hpp"

using namespace stagewire;
using namespace stagewire::pulse;
using support::code_of;

namespace {

std::vector<double> times(const std::vector<HeartbeatEvent>& events) {
  std::vector<double> out;
  for (const auto& e : events) out.push_back(e.t_ms);
  return out;
}

sim::PpgTrace ppg(double bpm, double amplitude, double snr_db, std::uint64_t seed, double duration_ms = 30000) {
  sim::PpgParams p;
  p.bpm = bpm;
  p.amplitude = amplitude;
  p.duration_ms = duration_ms;
  p.seed = seed;
  p.noise_rms = sim::noise_rms_for_snr(p, snr_db);
  return sim::synth_ppg(p);
}

std::vector<PulseSample> random_walk(std::uint64_t seed, std::size_t n, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, step);
  std::vector<PulseSample> out;
  double v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v += d(rng);
    out.push_back({static_cast<double>(i) * 10.0, v});
  }
  return out;
}

}  // namespace

TEST_CASE("windowed delta examples") {
  const std::vector<double> constant(50, 7.25);
  for (std::size_t n = 4; n < constant.size(); ++n) CHECK(windowed_delta(constant, n, 4) == 0.0);

  const std::vector<double> ramp = {0, 1, 2, 3};
  CHECK(windowed_delta(ramp, 3, 3) == 3.0);
}

TEST_CASE("windowed delta equals the literal sum of differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-512, 512);
  std::vector<double> s(1000);
  for (auto& v : s) v = d(rng);
  for (std::size_t w : {1u, 2u, 15u, 100u}) {
    for (std::size_t n = w; n < s.size(); ++n) {
      double literal = 0;
      for (std::size_t i = n - w + 1; i <= n; ++i) literal += s[i] - s[i - 1];
      CHECK(std::fabs(windowed_delta(s, n, w) - literal) <= 1e-9);
    }
  }
}

TEST_CASE("windowed delta needs history") {
  const std::vector<double> s = {1, 2, 3};
  CHECK(code_of([&] { windowed_delta(s, 1, 2); }) == Errc::InsufficientHistory);
  CHECK(code_of([&] { windowed_delta(s, 3, 1); }) == Errc::InsufficientHistory);
}

TEST_CASE("config validation") {
  DetectorConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.window_samples() == 15);
  for (double DetectorConfig::*field : {&DetectorConfig::sample_rate_hz, &DetectorConfig::window_ms, &DetectorConfig::gain,
                                        &DetectorConfig::baseline_halflife_ms, &DetectorConfig::refractory_ms,
                                        &DetectorConfig::warmup_ms}) {
    DetectorConfig bad;
    bad.*field = 0;
    CHECK(code_of([&] { Detector{bad}; }) == Errc::InvalidConfig);
  }
  DetectorConfig floor;
  floor.absolute_floor = -1;
  CHECK(code_of([&] { Detector{floor}; }) == Errc::InvalidConfig);
}

TEST_CASE("time must increase") {
  Detector d;
  d.process_sample({0, 1});
  d.process_sample({10, 1});
  CHECK(code_of([&] { d.process_sample({10, 2}); }) == Errc::NonMonotonicTime);
  CHECK(code_of([&] { d.process_sample({5, 2}); }) == Errc::NonMonotonicTime);
}

TEST_CASE("constant signals never beat") {
  for (double level : {0.0, 1.0, -300.0, 1023.0}) {
    std::vector<PulseSample> s;
    for (int i = 0; i < 12000; ++i) s.push_back({i * 10.0, level});
    CHECK(detect_all(s).empty());
  }
}

TEST_CASE("detector agrees with the batch oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    DetectorConfig c;
    c.invert = seed % 2 == 0;
    c.gain = 2.0 + static_cast<double>(seed) * 0.25;
    const auto noisy = ppg(40.0 + 15.0 * static_cast<double>(seed), 1.0, 10.0, seed, 8000);
    CHECK(times(detect_all(noisy.samples, c)) == support::oracle_detect(noisy.samples, c));

    const auto walk = random_walk(seed, 800, 1.0);
    CHECK(times(detect_all(walk, c)) == support::oracle_detect(walk, c));
  }
}

TEST_CASE("60 BPM synthetic run") {
  const auto trace = ppg(60, 1.0, 20, 3);
  const auto events = detect_all(trace.samples);
  CHECK(events.size() >= 28);
  CHECK(events.size() <= 31);
  const double mean_ibi = (events.back().t_ms - events.front().t_ms) / static_cast<double>(events.size() - 1);
  CHECK(std::fabs(mean_ibi - 1000.0) <= 20.0);
  CHECK(std::fabs(estimate_bpm(events) - 60.0) <= 2.0);
}

TEST_CASE("doubling the signal keeps every timestamp") {
  const auto trace = ppg(72, 1.0, 20, 5);
  auto doubled = trace.samples;
  for (auto& s : doubled) s.value *= 2.0;
  CHECK(times(detect_all(trace.samples)) == times(detect_all(doubled)));
}

TEST_CASE("scale and offset invariance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.05, 20.0), offset(-1000, 1000), bpm(45, 150);
  for (int run = 0; run < 20; ++run) {
    const auto trace = ppg(bpm(rng), 1.0, 20, static_cast<std::uint64_t>(run));
    const double a = scale(rng), c = offset(rng);
    auto moved = trace.samples;
    for (auto& s : moved) s.value = a * s.value + c;
    CAPTURE(a);
    CAPTURE(c);
    const auto base = detect_all(trace.samples);
    CHECK(!base.empty());
    CHECK(times(base) == times(detect_all(moved)));
  }
}

TEST_CASE("inverted input with invert set") {
  const auto trace = ppg(90, 1.0, 20, 8);
  auto flipped = trace.samples;
  for (auto& s : flipped) s.value = 500.0 - s.value;
  DetectorConfig c;
  c.invert = true;
  CHECK(times(detect_all(trace.samples)) == times(detect_all(flipped, c)));
}

TEST_CASE("refractory period holds on arbitrary input") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> refractory(20, 600);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    DetectorConfig c;
    c.refractory_ms = refractory(rng);
    c.gain = 0.5;
    c.warmup_ms = 1;
    std::vector<PulseSample> s = random_walk(seed, 3000, 5.0);
    if (seed % 3 == 0)
      for (std::size_t i = 0; i < s.size(); i += 7) s[i].value += 1000.0;
    const auto events = detect_all(s, c);
    CHECK(!events.empty());
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i].t_ms - events[i - 1].t_ms >= c.refractory_ms);
  }
}

TEST_CASE("nothing fires during warm-up") {
  const auto trace = ppg(120, 1.0, 20, 4, 10000);
  for (double warmup : {500.0, 2000.0, 4000.0}) {
    DetectorConfig c;
    c.warmup_ms = warmup;
    const auto events = detect_all(trace.samples, c);
    REQUIRE(!events.empty());
    CHECK(events.front().t_ms >= warmup);
  }
}

TEST_CASE("absolute floor suppresses small beats") {
  const auto trace = ppg(60, 1.0, 20, 2);
  DetectorConfig c;
  c.absolute_floor = 10.0;
  CHECK(detect_all(trace.samples, c).empty());
}

TEST_CASE("detection accuracy across heart rates and amplitudes") {
  for (double bpm : {50.0, 60.0, 90.0, 120.0}) {
    for (double amplitude : {0.5, 1.0, 2.0}) {
      CAPTURE(bpm);
      CAPTURE(amplitude);
      const auto trace = ppg(bpm, amplitude, 20, static_cast<std::uint64_t>(bpm * 10 + amplitude * 4));
      const auto events = detect_all(trace.samples);
      const auto m = support::match_beats(trace.beat_times_ms, times(events), 80.0, DetectorConfig{}.warmup_ms);
      CHECK(m.missed() <= 1);
      CHECK(m.spurious <= 1);
      CHECK(std::fabs(estimate_bpm(events) - bpm) <= 2.0);
    }
  }
}

TEST_CASE("estimate_bpm examples") {
  const std::vector<HeartbeatEvent> steady = {{0, 1}, {1000, 1}, {2000, 1}};
  CHECK(estimate_bpm(steady) == 60.0);
  const std::vector<HeartbeatEvent> fast = {{0, 1}, {500, 1}};
  CHECK(estimate_bpm(fast) == 120.0);

  std::vector<HeartbeatEvent> slowing = {{0, 1}, {100, 1}, {200, 1}};
  for (int i = 1; i <= 5; ++i) slowing.push_back({200.0 + i * 1000.0, 1});
  CHECK(estimate_bpm(slowing) == 60.0);
  CHECK(estimate_bpm(slowing, 2) == 60.0);
  CHECK(estimate_bpm(slowing, 7) == doctest::Approx(60000.0 / (5200.0 / 7.0)));

  CHECK(code_of([] { estimate_bpm(std::vector<HeartbeatEvent>{}); }) == Errc::InsufficientEvents);
  CHECK(code_of([] { estimate_bpm(std::vector<HeartbeatEvent>{{5, 1}}); }) == Errc::InsufficientEvents);
}

TEST_CASE("heartbeat message layout") {
  const auto m = heartbeat_message(7, {1234.0, 0.75});
  CHECK(m.address == "/lmtd/heartbeat");
  REQUIRE(m.args.size() == 2);
  CHECK(std::get<std::int32_t>(m.args[0]) == 7);
  CHECK(std::get<float>(m.args[1]) == 0.75f);
}

TEST_CASE("samples file") {
  const auto s = parse_samples("# header\n0\t1.5\n\n10\t-2\r\n20\t1e3\n");
  REQUIRE(s.size() == 3);
  CHECK(s[2] == PulseSample{20, 1000});
  CHECK(support::parse_error_line([] { parse_samples("0\t1\n10\t2\n20 3\n"); }) == 3);
  CHECK(support::parse_error_line([] { parse_samples("0\tx\n"); }) == 1);

  const auto trace = ppg(60, 1.0, 20, 9, 3000);
  CHECK(parse_samples(format_samples(trace.samples)) == trace.samples);
}
