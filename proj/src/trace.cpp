#include "stagewire/trace.hpp"

#include <charconv>

#include "stagewire/error.hpp"

namespace stagewire::trace {

std::string format_line(const TracePacket& p) {
  return std::to_string(p.t_ms) + (p.direction == Direction::In ? "\tin\t" : "\tout\t") + osc::to_hex(p.payload) + "\n";
}

std::vector<TracePacket> parse_trace(std::string_view text) {
  std::vector<TracePacket> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos)
      throw ParseError(line_no, "expected t_ms<TAB>direction<TAB>hex");

    TracePacket p;
    const auto t = line.substr(0, tab1);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), p.t_ms);
    if (ec != std::errc() || ptr != t.data() + t.size() || p.t_ms < 0) throw ParseError(line_no, "bad t_ms");

    const auto dir = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (dir == "in")
      p.direction = Direction::In;
    else if (dir == "out")
      p.direction = Direction::Out;
    else
      throw ParseError(line_no, "direction must be in or out");

    try {
      p.payload = osc::from_hex(line.substr(tab2 + 1));
    } catch (const ParseError& e) {
      throw ParseError(line_no, "bad payload hex");
    }
    if (!out.empty() && p.t_ms < out.back().t_ms) throw ParseError(line_no, "t_ms goes backwards");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace stagewire::trace
