#include "stagewire/show.hpp"

#include <algorithm>

#include "stagewire/bus.hpp"
#include "stagewire/error.hpp"

namespace stagewire::show {

Router::Router(std::vector<cue::CueRule> rules) : engine_(std::move(rules)) {}

Router::Result Router::handle(std::span<const std::uint8_t> datagram, double t_ms) {
  Result out;
  try {
    const osc::Packet packet = osc::decode_packet(datagram);
    if (packet.is_bundle() && tuio::is_2dobj_bundle(packet.bundle())) {
      handle_frame(tuio::parse_2dobj_bundle(packet.bundle()), t_ms, out);
      return out;
    }
    std::vector<const osc::Packet*> stack{&packet};
    std::vector<const osc::Message*> messages;
    while (!stack.empty()) {
      const osc::Packet* p = stack.back();
      stack.pop_back();
      if (p->is_message()) {
        messages.push_back(&p->message());
      } else {
        const auto& elems = p->bundle().elements;
        for (auto it = elems.rbegin(); it != elems.rend(); ++it) stack.push_back(&*it);
      }
    }
    for (const auto* m : messages) handle_message(*m, t_ms, out);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

void Router::handle_message(const osc::Message& m, double t_ms, Result& out) {
  auto append = [&](std::vector<cue::CueEmission> more) {
    out.emissions.insert(out.emissions.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  if (m.address == pulse::kHeartbeatAddress && m.args.size() == 2 && std::holds_alternative<std::int32_t>(m.args[0]) &&
      std::holds_alternative<float>(m.args[1])) {
    append(engine_.eval_event(pulse::HeartbeatEvent{t_ms, std::get<float>(m.args[1])}, t_ms));
  }
  append(engine_.eval_event(m, t_ms));
}

void Router::handle_frame(const tuio::SurfaceFrame& f, double t_ms, Result& out) {
  for (auto& event : tracker_.apply_frame(f)) {
    auto discrete = engine_.eval_event(event, t_ms);
    out.emissions.insert(out.emissions.end(), discrete.begin(), discrete.end());
    if (event.kind != tuio::EventKind::Remove) {
      auto continuous = engine_.eval_frame_continuous(event.state, t_ms);
      out.emissions.insert(out.emissions.end(), continuous.begin(), continuous.end());
    }
    out.surface_events.push_back(std::move(event));
  }
}

std::vector<cue::CueEmission> run_show(const ShowInputs& inputs) {
  struct Scheduled {
    double t_ms;
    int source;
    osc::Bytes payload;
  };
  std::vector<Scheduled> timeline;

  for (const auto& tf : sim::run_choreography(inputs.script)) timeline.push_back({tf.t_ms, 0, osc::encode_bundle(tuio::encode_2dobj_frame(tf.frame))});

  pulse::Detector detector(inputs.detector);
  std::int32_t beat = 0;
  for (const auto& s : inputs.ppg) {
    if (auto e = detector.process_sample(s)) timeline.push_back({e->t_ms, 1, osc::encode_message(pulse::heartbeat_message(beat++, *e))});
  }

  for (const auto& ev : inputs.midi_events) {
    if (auto m = sim::midi_to_osc(inputs.midi_rules, ev)) timeline.push_back({ev.t_ms, 2, osc::encode_message(*m)});
  }

  std::stable_sort(timeline.begin(), timeline.end(), [](const Scheduled& a, const Scheduled& b) {
    return a.t_ms != b.t_ms ? a.t_ms < b.t_ms : a.source < b.source;
  });

  bus::SimNetwork net;
  const std::unique_ptr<bus::SimPublisher> publishers[] = {net.publisher("surface"), net.publisher("pulse"), net.publisher("midi")};
  const auto router_sub = net.subscribe("router");
  Router router(inputs.rules);

  std::vector<cue::CueEmission> log;
  for (const auto& item : timeline) {
    net.advance_to(item.t_ms);
    publishers[item.source]->publish(item.payload);
    for (const auto& d : router_sub->drain()) {
      auto result = router.handle(d.payload, net.now());
      log.insert(log.end(), result.emissions.begin(), result.emissions.end());
    }
  }
  return log;
}

std::string format_log(std::span<const cue::CueEmission> emissions) {
  std::string out;
  for (const auto& e : emissions) out += cue::format_emission(e) + "\n";
  return out;
}

}  // namespace stagewire::show
