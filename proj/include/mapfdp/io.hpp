#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "core.hpp"

namespace mapfdp {

class ParseError : public Error
{
public:
  using Error::Error;
};

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text)
{
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string line(text.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(std::move(line));
    if (end == text.size()) {
      break;
    }
    pos = end + 1;
  }
  return lines;
}

inline std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
  const std::string t = trim(s);
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && !t.empty();
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = s.find(sep, pos);
    out.emplace_back(s.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) {
      break;
    }
    pos = end + 1;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << content;
}

}  // namespace detail

/*! Parse an ASCII grid: '.' is free, '@' and 'T' are blocked.

Accepts an optional leading `WIDTH HEIGHT` line, or the four-line
`type/height/width/map` header of the common benchmark format.
*/
inline Graph parse_map(std::string_view text)
{
  auto lines = detail::split_lines(text);
  while (!lines.empty() && detail::trim(lines.back()).empty()) {
    lines.pop_back();
  }
  std::size_t row0 = 0;
  int declared_w = -1;
  int declared_h = -1;

  if (!lines.empty() && lines[0].rfind("type", 0) == 0) {
    for (row0 = 1; row0 < lines.size(); ++row0) {
      const std::string line = detail::trim(lines[row0]);
      if (line == "map") {
        ++row0;
        break;
      }
      auto fields = detail::split(line, ' ');
      if (fields.size() == 2 && fields[0] == "height") {
        detail::parse_number(fields[1], declared_h);
      } else if (fields.size() == 2 && fields[0] == "width") {
        detail::parse_number(fields[1], declared_w);
      }
    }
  } else if (!lines.empty()) {
    auto fields = detail::split(detail::trim(lines[0]), ' ');
    int w = 0;
    int h = 0;
    if (fields.size() == 2 && detail::parse_number(fields[0], w) && detail::parse_number(fields[1], h)) {
      declared_w = w;
      declared_h = h;
      row0 = 1;
    }
  }

  std::vector<std::string> rows(lines.begin() + static_cast<std::ptrdiff_t>(std::min(row0, lines.size())), lines.end());
  if (rows.empty()) {
    throw ParseError("map: no grid rows");
  }
  const std::size_t width = rows[0].size();
  if (width == 0) {
    throw ParseError("map: empty first row");
  }
  std::vector<bool> blocked;
  blocked.reserve(width * rows.size());
  for (std::size_t y = 0; y < rows.size(); ++y) {
    if (rows[y].size() != width) {
      throw ParseError("map: ragged row " + std::to_string(y) + " (width " + std::to_string(rows[y].size()) +
                       ", expected " + std::to_string(width) + ")");
    }
    for (char c : rows[y]) {
      switch (c) {
        case '.':
          blocked.push_back(false);
          break;
        case '@':
        case 'T':
          blocked.push_back(true);
          break;
        default:
          throw ParseError(std::string("map: unknown cell character '") + c + "' in row " + std::to_string(y));
      }
    }
  }
  if ((declared_w >= 0 && static_cast<std::size_t>(declared_w) != width) ||
      (declared_h >= 0 && static_cast<std::size_t>(declared_h) != rows.size())) {
    throw ParseError("map: header dimensions do not match the grid");
  }
  if (std::none_of(blocked.begin(), blocked.end(), [](bool b) { return !b; })) {
    throw ParseError("map: no free cells");
  }
  return Graph::from_grid(static_cast<int>(width), static_cast<int>(rows.size()), blocked);
}

inline std::string serialize_map(const Graph& graph)
{
  if (!graph.grid()) {
    throw Error("serialize_map: graph has no grid metadata");
  }
  const GridInfo& g = *graph.grid();
  std::string out = std::to_string(g.width) + " " + std::to_string(g.height) + "\n";
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      out += g.blocked[static_cast<std::size_t>(y * g.width + x)] ? '@' : '.';
    }
    out += '\n';
  }
  return out;
}

inline std::string format_real(double value)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

//! One line per agent: id,start_x,start_y,goal_x,goal_y,delay_prob
inline std::string serialize_agents(const Instance& inst)
{
  if (!inst.graph.grid()) {
    throw Error("serialize_agents: graph has no grid metadata");
  }
  const GridInfo& g = *inst.graph.grid();
  std::string out;
  for (const AgentSpec& a : inst.agents) {
    auto [sx, sy] = g.coords(a.start);
    auto [gx, gy] = g.coords(a.goal);
    out += std::to_string(a.id) + "," + std::to_string(sx) + "," + std::to_string(sy) + "," + std::to_string(gx) +
           "," + std::to_string(gy) + "," + format_real(a.delay_prob) + "\n";
  }
  return out;
}

//! Parses the agents file against a grid graph and checks the instance.
inline Instance parse_agents(Graph graph, std::string_view text)
{
  if (!graph.grid()) {
    throw Error("parse_agents: graph has no grid metadata");
  }
  Instance inst;
  const GridInfo grid = *graph.grid();
  const auto lines = detail::split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line = detail::trim(lines[n]);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto fields = detail::split(line, ',');
    const std::string where = "agents line " + std::to_string(n + 1);
    if (fields.size() != 6) {
      throw ParseError(where + ": expected 6 comma-separated fields");
    }
    int id = 0;
    int sx = 0;
    int sy = 0;
    int gx = 0;
    int gy = 0;
    double p = 0.0;
    if (!detail::parse_number(fields[0], id) || !detail::parse_number(fields[1], sx) ||
        !detail::parse_number(fields[2], sy) || !detail::parse_number(fields[3], gx) ||
        !detail::parse_number(fields[4], gy) || !detail::parse_number(fields[5], p)) {
      throw ParseError(where + ": malformed number");
    }
    auto start = grid.vertex_at(sx, sy);
    auto goal = grid.vertex_at(gx, gy);
    if (!start || !goal) {
      throw ParseError(where + ": start or goal is outside the grid or blocked");
    }
    inst.agents.push_back({id, *start, *goal, p});
  }
  inst.graph = std::move(graph);
  check_instance(inst);
  return inst;
}

//! FNV-1a over the canonical map and agents text.
inline std::string instance_checksum(const Instance& inst)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  if (inst.graph.grid()) {
    feed(serialize_map(inst.graph));
    feed(serialize_agents(inst));
  } else {
    for (VertexId v = 0; v < inst.graph.num_vertices(); ++v) {
      feed(std::to_string(v) + ":");
      for (VertexId w : inst.graph.neighbors(v)) {
        feed(std::to_string(w) + ",");
      }
      feed("\n");
    }
    for (const AgentSpec& a : inst.agents) {
      feed(std::to_string(a.start) + "," + std::to_string(a.goal) + "," + format_real(a.delay_prob) + "\n");
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Instance load_instance(const std::filesystem::path& map_file, const std::filesystem::path& agents_file)
{
  return parse_agents(parse_map(detail::read_file(map_file)), detail::read_file(agents_file));
}

inline void save_instance(const Instance& inst, const std::filesystem::path& map_file,
                          const std::filesystem::path& agents_file)
{
  detail::write_file(map_file, serialize_map(inst.graph));
  detail::write_file(agents_file, serialize_agents(inst));
}

//! Contents of a plan file.
struct PlanFile
{
  Plan plan;
  std::string instance_checksum;
  std::string solver;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object(); //!< report, dependency stats, ...
};

inline std::string write_plan_json(const PlanFile& file)
{
  nlohmann::ordered_json doc;
  doc["format"] = "mapfdp-plan";
  doc["version"] = 1;
  doc["instance_checksum"] = file.instance_checksum;
  doc["solver"] = file.solver;
  auto paths = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < file.plan.paths.size(); ++i) {
    const Path& p = file.plan.paths[i];
    nlohmann::ordered_json entry;
    entry["agent"] = i;
    entry["vertices"] = p.vertices;
    if (!p.labels.empty()) {
      entry["labels"] = p.labels;
    }
    paths.push_back(std::move(entry));
  }
  doc["paths"] = std::move(paths);
  for (const auto& [key, value] : file.extra.items()) {
    doc[key] = value;
  }
  return doc.dump(2) + "\n";
}

inline PlanFile read_plan_json(std::string_view text)
{
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "mapfdp-plan") {
    throw ParseError("plan: not a mapfdp-plan document");
  }
  PlanFile file;
  try {
    file.instance_checksum = doc.value("instance_checksum", "");
    file.solver = doc.value("solver", "");
    const auto& paths = doc.at("paths");
    file.plan.paths.resize(paths.size());
    for (const auto& entry : paths) {
      const auto agent = entry.at("agent").get<std::size_t>();
      if (agent >= paths.size()) {
        throw ParseError("plan: agent index out of range");
      }
      Path& p = file.plan.paths[agent];
      p.vertices = entry.at("vertices").get<std::vector<VertexId>>();
      if (entry.contains("labels")) {
        p.labels = entry.at("labels").get<std::vector<double>>();
      }
    }
    for (const auto& [key, value] : doc.items()) {
      if (key != "format" && key != "version" && key != "instance_checksum" && key != "solver" && key != "paths") {
        file.extra[key] = value;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  return file;
}

}  // namespace mapfdp
