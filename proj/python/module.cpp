#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stagewire/bus.hpp"
#include "stagewire/cue.hpp"
#include "stagewire/error.hpp"
#include "stagewire/osc.hpp"
#include "stagewire/pulse.hpp"
#include "stagewire/show.hpp"
#include "stagewire/sim.hpp"
#include "stagewire/trace.hpp"
#include "stagewire/tuio.hpp"

namespace py = pybind11;
using namespace stagewire;

namespace {

py::bytes to_bytes(const osc::Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

osc::Bytes from_bytes(const py::bytes& b) {
  const std::string_view s = b;
  return osc::Bytes(s.begin(), s.end());
}

py::object arg_to_py(const osc::Arg& a) {
  return std::visit(
      [](const auto& v) -> py::object {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, osc::Blob>)
          return to_bytes(v.bytes);
        else
          return py::cast(v);
      },
      a);
}

osc::Arg arg_from_py(const py::handle& h) {
  if (py::isinstance<py::bool_>(h)) throw Error(Errc::InvalidArgument, "bool arguments are not supported");
  if (py::isinstance<py::int_>(h)) {
    const auto v = h.cast<long long>();
    if (v < INT32_MIN || v > INT32_MAX) throw Error(Errc::InvalidArgument, "int argument out of 32-bit range");
    return static_cast<std::int32_t>(v);
  }
  if (py::isinstance<py::float_>(h)) return static_cast<float>(h.cast<double>());
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<py::bytes>(h)) return osc::Blob{from_bytes(h.cast<py::bytes>())};
  throw Error(Errc::InvalidArgument, "arguments must be int, float, str or bytes");
}

osc::Message message_from_py(const std::string& address, const py::iterable& args) {
  osc::Message m{address};
  for (const auto& a : args) m.args.push_back(arg_from_py(a));
  return m;
}

py::object packet_to_py(const osc::Packet& p) {
  if (p.is_message()) {
    py::list args;
    for (const auto& a : p.message().args) args.append(arg_to_py(a));
    py::dict d;
    d["address"] = p.message().address;
    d["args"] = args;
    return d;
  }
  py::list elements;
  for (const auto& e : p.bundle().elements) elements.append(packet_to_py(e));
  py::dict d;
  d["timetag"] = p.bundle().timetag.ntp;
  d["elements"] = elements;
  return d;
}

osc::Packet packet_from_py(const py::dict& d) {
  if (d.contains("address")) {
    const py::iterable args = d.contains("args") ? py::iterable(d["args"]) : py::iterable(py::list());
    return osc::Packet{message_from_py(d["address"].cast<std::string>(), args)};
  }
  osc::Bundle b;
  if (d.contains("timetag")) b.timetag.ntp = d["timetag"].cast<std::uint64_t>();
  if (d.contains("elements"))
    for (const auto& e : d["elements"]) b.elements.push_back(packet_from_py(e.cast<py::dict>()));
  return osc::Packet{std::move(b)};
}

py::tuple event_to_py(const tuio::SurfaceEvent& e) {
  const auto& s = e.state;
  return py::make_tuple(tuio::to_string(e.kind), s.session_id, s.class_id, s.x, s.y, s.angle);
}

py::tuple emission_to_py(const cue::CueEmission& e) {
  return py::make_tuple(e.t_ms, e.rule_id, to_bytes(osc::encode_message(e.message)), cue::format_emission(e));
}

std::vector<pulse::PulseSample> samples_from_py(const std::vector<std::pair<double, double>>& samples) {
  std::vector<pulse::PulseSample> out;
  out.reserve(samples.size());
  for (const auto& [t, v] : samples) out.push_back({t, v});
  return out;
}

class PySimNetwork {
 public:
  PySimNetwork(double latency_ms, double jitter_ms, double loss_rate, std::uint64_t seed)
      : net_(bus::SimNetConfig{latency_ms, jitter_ms, loss_rate, seed}) {}

  bus::SimNetwork& net() { return net_; }

 private:
  bus::SimNetwork net_;
};

}  // namespace

PYBIND11_MODULE(_stagewire, m) {
  m.doc() = "OSC/TUIO show networking toolkit";

  static auto* error_type = new py::exception<Error>(m, "StagewireError", PyExc_RuntimeError);
  static auto* parse_error_type = new py::exception<ParseError>(m, "ParseError", error_type->ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::object err = py::reinterpret_borrow<py::object>(parse_error_type->ptr())(e.what());
      err.attr("code") = "ParseError";
      err.attr("line") = e.line();
      PyErr_SetObject(parse_error_type->ptr(), err.ptr());
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type->ptr())(e.what());
      err.attr("code") = errc_name(e.code());
      PyErr_SetObject(error_type->ptr(), err.ptr());
    }
  });

  // OSC
  m.attr("MAX_PACKET_SIZE") = osc::kMaxPacketSize;
  m.def(
      "encode_message", [](const std::string& address, const py::iterable& args) { return to_bytes(osc::encode_message(message_from_py(address, args))); },
      py::arg("address"), py::arg("args") = py::list());
  m.def("decode_message", [](const py::bytes& b) { return packet_to_py(osc::Packet{osc::decode_message(from_bytes(b))}); });
  m.def("encode_packet", [](const py::dict& d) { return to_bytes(osc::encode_packet(packet_from_py(d))); });
  m.def("decode_packet", [](const py::bytes& b) { return packet_to_py(osc::decode_packet(from_bytes(b))); });
  m.def("packet_to_string", [](const py::bytes& b) { return osc::to_string(osc::decode_packet(from_bytes(b))); });
  m.def("match_address", &osc::match_address, py::arg("pattern"), py::arg("address"));

  // TUIO
  py::class_<tuio::Tracker>(m, "Tracker")
      .def(py::init<>())
      .def(
          "apply",
          [](tuio::Tracker& t, const py::bytes& b) {
            const auto packet = osc::decode_packet(from_bytes(b));
            if (!packet.is_bundle()) throw Error(Errc::NotTuio, "expected a bundle");
            py::list out;
            for (const auto& e : t.apply_frame(tuio::parse_2dobj_bundle(packet.bundle()))) out.append(event_to_py(e));
            return out;
          },
          "Apply one encoded 2Dobj bundle; returns (kind, session, class, x, y, angle) tuples.")
      .def_property_readonly("last_fseq", &tuio::Tracker::last_fseq)
      .def("__len__", &tuio::Tracker::size);

  // pulse
  py::class_<pulse::DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("sample_rate_hz", &pulse::DetectorConfig::sample_rate_hz)
      .def_readwrite("window_ms", &pulse::DetectorConfig::window_ms)
      .def_readwrite("gain", &pulse::DetectorConfig::gain)
      .def_readwrite("baseline_halflife_ms", &pulse::DetectorConfig::baseline_halflife_ms)
      .def_readwrite("refractory_ms", &pulse::DetectorConfig::refractory_ms)
      .def_readwrite("warmup_ms", &pulse::DetectorConfig::warmup_ms)
      .def_readwrite("absolute_floor", &pulse::DetectorConfig::absolute_floor)
      .def_readwrite("invert", &pulse::DetectorConfig::invert);
  m.def(
      "detect",
      [](const std::vector<std::pair<double, double>>& samples, const pulse::DetectorConfig& config) {
        std::vector<std::pair<double, double>> out;
        for (const auto& e : pulse::detect_all(samples_from_py(samples), config)) out.emplace_back(e.t_ms, e.strength);
        return out;
      },
      py::arg("samples"), py::arg("config") = pulse::DetectorConfig{}, "Returns (t_ms, strength) per detected beat.");
  m.def(
      "estimate_bpm",
      [](const std::vector<double>& beat_times, int window_beats) {
        std::vector<pulse::HeartbeatEvent> events;
        for (double t : beat_times) events.push_back({t, 0});
        return pulse::estimate_bpm(events, window_beats);
      },
      py::arg("beat_times"), py::arg("window_beats") = 5);
  m.def(
      "synth_ppg",
      [](double bpm, double duration_ms, double sample_rate_hz, double pulse_width_ms, double amplitude, double drift,
         double noise_rms, std::optional<double> snr_db, std::uint64_t seed) {
        sim::PpgParams p{bpm, duration_ms, sample_rate_hz, pulse_width_ms, amplitude, drift, noise_rms, seed};
        if (snr_db) p.noise_rms = sim::noise_rms_for_snr(p, *snr_db);
        const auto trace = sim::synth_ppg(p);
        std::vector<std::pair<double, double>> samples;
        for (const auto& s : trace.samples) samples.emplace_back(s.t_ms, s.value);
        return py::make_tuple(samples, trace.beat_times_ms);
      },
      py::arg("bpm") = 60.0, py::arg("duration_ms") = 30000.0, py::arg("sample_rate_hz") = 100.0,
      py::arg("pulse_width_ms") = 120.0, py::arg("amplitude") = 1.0, py::arg("drift") = 0.0, py::arg("noise_rms") = 0.0,
      py::arg("snr_db") = py::none(), py::arg("seed") = 0, "Returns (samples, beat_times_ms).");

  // cues and routing
  py::class_<show::Router>(m, "Router")
      .def(py::init([](const std::string& rules_json) { return show::Router(cue::load_rules(rules_json)); }), py::arg("rules_json"))
      .def(
          "handle",
          [](show::Router& r, const py::bytes& datagram, double t_ms) {
            auto result = r.handle(from_bytes(datagram), t_ms);
            py::list out;
            for (const auto& e : result.emissions) out.append(emission_to_py(e));
            return py::make_tuple(out, result.error ? py::cast(*result.error) : py::none());
          },
          py::arg("datagram"), py::arg("t_ms"),
          "Returns ([(t_ms, rule_id, message_bytes, log_line)], error or None).");
  m.def(
      "run_choreography",
      [](const std::string& script_json) {
        py::list out;
        for (const auto& f : sim::run_choreography(sim::load_choreography(script_json)))
          out.append(py::make_tuple(f.t_ms, to_bytes(osc::encode_bundle(tuio::encode_2dobj_frame(f.frame)))));
        return out;
      },
      py::arg("script_json"), "Returns (t_ms, encoded frame) per tick.");
  m.def(
      "run_show",
      [](const std::string& script_json, const std::string& rules_json, const std::string& ppg_text,
         const std::string& midi_rules_json, const std::string& midi_events_text) {
        show::ShowInputs in;
        in.script = sim::load_choreography(script_json);
        in.rules = cue::load_rules(rules_json);
        in.ppg = pulse::parse_samples(ppg_text);
        if (!midi_rules_json.empty()) in.midi_rules = sim::load_midi_rules(midi_rules_json);
        if (!midi_events_text.empty()) in.midi_events = sim::parse_midi_events(midi_events_text);
        return show::format_log(show::run_show(in));
      },
      py::arg("script_json"), py::arg("rules_json"), py::arg("ppg_text"), py::arg("midi_rules_json") = "",
      py::arg("midi_events_text") = "", "Runs a show offline and returns its emission log.");
  m.def(
      "parse_trace",
      [](const std::string& text) {
        py::list out;
        for (const auto& p : trace::parse_trace(text))
          out.append(py::make_tuple(p.t_ms, p.direction == trace::Direction::In ? "in" : "out", to_bytes(p.payload)));
        return out;
      },
      py::arg("text"));

  // simulated network
  py::class_<bus::SimPublisher>(m, "SimPublisher")
      .def("publish", [](bus::SimPublisher& p, const py::bytes& b) { p.publish(from_bytes(b)); })
      .def_property_readonly("name", [](const bus::SimPublisher& p) { return p.config().name; })
      .def_property_readonly("config_hash", [](const bus::SimPublisher& p) { return p.config().hash(); });
  py::class_<bus::SimSubscription>(m, "SimSubscription")
      .def("drain",
           [](bus::SimSubscription& s) {
             py::list out;
             for (const auto& d : s.drain()) out.append(py::make_tuple(to_bytes(d.payload), d.sender));
             return out;
           })
      .def(
          "recv",
          [](bus::SimSubscription& s, double timeout_ms) -> py::object {
            std::optional<bus::Datagram> d;
            {
              py::gil_scoped_release release;
              d = s.recv(std::chrono::milliseconds(static_cast<std::int64_t>(timeout_ms)));
            }
            if (!d) return py::none();
            return py::make_tuple(to_bytes(d->payload), d->sender);
          },
          py::arg("timeout_ms"))
      .def_property_readonly("name", &bus::SimSubscription::name);
  py::class_<PySimNetwork>(m, "SimNetwork")
      .def(py::init<double, double, double, std::uint64_t>(), py::arg("latency_ms") = 0.0, py::arg("jitter_ms") = 0.0,
           py::arg("loss_rate") = 0.0, py::arg("seed") = 0)
      .def("publisher", [](PySimNetwork& n, const std::string& name) { return n.net().publisher(name); }, py::keep_alive<0, 1>())
      .def("subscribe", [](PySimNetwork& n, const std::string& name) { return n.net().subscribe(name); }, py::keep_alive<0, 1>())
      .def("advance", [](PySimNetwork& n, double dt) { n.net().advance(dt); })
      .def("advance_to", [](PySimNetwork& n, double t) { n.net().advance_to(t); })
      .def_property_readonly("now", [](PySimNetwork& n) { return n.net().now(); })
      .def("shutdown", [](PySimNetwork& n) { n.net().shutdown(); });
}
