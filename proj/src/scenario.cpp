#include "smapf/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smapf/pathing.hpp"

namespace smapf {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json cells_to_json(const std::vector<Cell>& cells) {
  auto arr = nlohmann::json::array();
  for (const auto& c : cells) arr.push_back({c.r, c.c});
  return arr;
}

std::vector<Cell> cells_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ParameterError(std::string("scenario field '") + field + "' must be an array");
  std::vector<Cell> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) {
      throw ParameterError(std::string("scenario field '") + field + "' must hold [r,c] pairs");
    }
    out.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return out;
}

}  // namespace

void validate(const Scenario& s) {
  const int n = s.num_agents();
  if (n < 1) throw GenerationError("scenario has no agents");
  if (s.goals.size() != s.starts.size()) throw GenerationError("starts/goals size mismatch");
  std::set<Cell> seen_s, seen_g;
  for (int i = 0; i < n; ++i) {
    if (!s.map.passable(s.starts[i])) throw GenerationError("start on obstacle or off-map");
    if (!s.map.passable(s.goals[i])) throw GenerationError("goal on obstacle or off-map");
    if (!seen_s.insert(s.starts[i]).second) throw GenerationError("duplicate start");
    if (!seen_g.insert(s.goals[i]).second) throw GenerationError("duplicate goal");
  }
  for (int i = 0; i < n; ++i) {
    const auto field = distance_field(s.map, s.goals[i]);
    if (!field.reachable(s.starts[i])) {
      throw GenerationError("goal of agent " + std::to_string(i) + " unreachable from its start");
    }
  }
}

std::string write_map(const GridMap& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size() + m.height()) + 48);
  out += "type octile\nheight " + std::to_string(m.height()) + "\nwidth " +
         std::to_string(m.width()) + "\nmap\n";
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) out += m.blocked({r, c}) ? '@' : '.';
    out += '\n';
  }
  return out;
}

GridMap read_map(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string line(text.substr(pos, nl - pos));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      pos = nl + 1;
    }
  }
  auto header_value = [&](std::size_t idx, const std::string& key) -> int {
    const int line_no = static_cast<int>(idx) + 1;
    if (idx >= lines.size()) throw ParseError("missing '" + key + "' header", line_no);
    std::istringstream ls(lines[idx]);
    std::string k;
    int v = 0;
    if (!(ls >> k >> v) || k != key) throw ParseError("expected '" + key + " <int>'", line_no);
    std::string rest;
    if (ls >> rest) throw ParseError("trailing text after '" + key + "'", line_no);
    return v;
  };
  if (lines.empty() || lines[0] != "type octile") throw ParseError("expected 'type octile'", 1);
  const int h = header_value(1, "height");
  const int w = header_value(2, "width");
  if (lines.size() < 4 || lines[3] != "map") throw ParseError("expected 'map'", 4);
  if (w < 2 || h < 2) throw ParseError("map dimensions must be at least 2x2", 2);
  std::vector<std::uint8_t> blocked(static_cast<std::size_t>(w) * h, 0);
  for (int r = 0; r < h; ++r) {
    const std::size_t idx = 4 + static_cast<std::size_t>(r);
    const int line_no = static_cast<int>(idx) + 1;
    if (idx >= lines.size()) throw ParseError("missing map row", line_no);
    const auto& row = lines[idx];
    if (static_cast<int>(row.size()) != w) throw ParseError("row length differs from width", line_no);
    for (int c = 0; c < w; ++c) {
      if (row[c] == '.') continue;
      if (row[c] == '@') {
        blocked[static_cast<std::size_t>(r) * w + c] = 1;
        continue;
      }
      throw ParseError(std::string("unknown glyph '") + row[c] + "'", line_no);
    }
  }
  for (std::size_t idx = 4 + static_cast<std::size_t>(h); idx < lines.size(); ++idx) {
    if (!lines[idx].empty()) throw ParseError("extra row after map", static_cast<int>(idx) + 1);
  }
  return GridMap(w, h, std::move(blocked));
}

GridMap load_map(const std::filesystem::path& path) { return read_map(read_file(path)); }

void save_map(const GridMap& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << write_map(m);
}

std::string scenario_to_json(const Scenario& s, const std::string& map_ref) {
  nlohmann::ordered_json j;
  j["map"] = map_ref.empty() ? write_map(s.map) : map_ref;
  j["starts"] = cells_to_json(s.starts);
  j["goals"] = cells_to_json(s.goals);
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(std::string_view json, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("scenario JSON: ") + e.what());
  }
  Scenario s;
  const auto map_field = j.at("map").get<std::string>();
  if (map_field.rfind("type octile", 0) == 0) {
    s.map = read_map(map_field);
  } else {
    std::filesystem::path p(map_field);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.map = load_map(p);
  }
  s.starts = cells_from_json(j.at("starts"), "starts");
  s.goals = cells_from_json(j.at("goals"), "goals");
  s.seed = j.value("seed", std::uint64_t{0});
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_file(path), path.parent_path());
}

}  // namespace smapf
