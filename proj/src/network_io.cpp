// Canonical network JSON.
//
// {
//   "format": "monopf.network", "version": 1, "name": "case9", "voltage_base": 1.0,
//   "buses": [{"id": 1, "type": "slack", "v": 1.0}, ...],     // internal order, slack first
//   "edges": [{"from": 0, "to": 3, "y": [g, b]}, ...]          // series admittance g + jb
// }

#include <cstdint>
#include <cstdio>

#include <json.hpp>

#include "monopf/errors.hpp"
#include "monopf/grid.hpp"

namespace monopf {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "monopf.network";
constexpr int kVersion = 1;

json to_document(const Network& net) {
  json buses = json::array();
  for (const auto& b : net.buses()) buses.push_back({{"id", b.id}, {"type", to_string(b.type)}, {"v", b.v_set}});
  json edges = json::array();
  for (const auto& l : net.lines()) {
    edges.push_back({{"from", l.from}, {"to", l.to}, {"y", {l.y.real(), l.y.imag()}}});
  }
  return {{"format", kFormat},   {"version", kVersion}, {"name", net.name()},
          {"voltage_base", net.voltage_base()}, {"buses", buses}, {"edges", edges}};
}
}  // namespace

std::string network_to_json(const Network& net, int indent) { return to_document(net).dump(indent); }

Network network_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != kFormat) throw ParseError("not a monopf.network document");
    if (doc.at("version").get<int>() != kVersion) throw ParseError("unsupported network version");
    std::vector<Bus> buses;
    for (const auto& b : doc.at("buses")) {
      buses.push_back({b.at("id").get<int>(), bus_type_from_string(b.at("type").get<std::string>()),
                       b.at("v").get<double>()});
    }
    std::vector<Line> lines;
    for (const auto& e : doc.at("edges")) {
      const auto& y = e.at("y");
      lines.push_back({e.at("from").get<int>(), e.at("to").get<int>(), {y.at(0).get<double>(), y.at(1).get<double>()}});
    }
    return Network(doc.value("name", "network"), std::move(buses), std::move(lines),
                   doc.value("voltage_base", 1.0));
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
}

std::string network_fingerprint(const Network& net) {
  const std::string text = to_document(net).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace monopf
