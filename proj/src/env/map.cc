#include "moba/env/map.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "moba/common/error.h"

namespace moba::env {

namespace {

// Same content as maps/lane.map.
constexpr const char* kBuiltinMap =
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "#######........##........#######\n"
    "#######..................#######\n"
    "#...........##....##...........#\n"
    "#...........##....##...........#\n"
    "#..............................#\n"
    "#..............................#\n"
    "#.S0.B0.....T0..........T1.....B1.S1.#\n"
    "#..............................#\n"
    "#...........##....##...........#\n"
    "#...........##....##...........#\n"
    "#######..................#######\n"
    "#######........##........#######\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n"
    "################################\n";

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  bool tokens = line.find_first_of(" \t") != std::string::npos;
  if (tokens) {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) cells.push_back(tok);
    return cells;
  }
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if ((c == 'S' || c == 'T' || c == 'B') && i + 1 < line.size()) {
      cells.push_back(line.substr(i, 2));
      ++i;
    } else {
      cells.emplace_back(1, c);
    }
  }
  return cells;
}

}  // namespace

GridMap GridMap::parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    rows.push_back(split_row(line));
  }
  if (rows.empty()) throw FormatError("map: no rows");
  GridMap m;
  m.height_ = static_cast<int>(rows.size());
  m.width_ = static_cast<int>(rows[0].size());
  m.obstacle_.assign(static_cast<size_t>(m.width_ * m.height_), 0);
  std::array<int, 6> seen{};
  for (int y = 0; y < m.height_; ++y) {
    if (static_cast<int>(rows[y].size()) != m.width_)
      throw FormatError("map: row " + std::to_string(y) + " has " + std::to_string(rows[y].size()) +
                        " cells, expected " + std::to_string(m.width_));
    for (int x = 0; x < m.width_; ++x) {
      const std::string& cell = rows[y][x];
      Cell c{x, y};
      if (cell == "#") {
        m.obstacle_[y * m.width_ + x] = 1;
      } else if (cell == ".") {
      } else if (cell.size() == 2 && (cell[1] == '0' || cell[1] == '1')) {
        int side = cell[1] - '0';
        switch (cell[0]) {
          case 'S': m.spawns_[side] = c; ++seen[0 + side]; break;
          case 'T': m.turrets_[side] = c; ++seen[2 + side]; break;
          case 'B': m.bases_[side] = c; ++seen[4 + side]; break;
          default: throw FormatError("map: unknown cell '" + cell + "'");
        }
      } else {
        throw FormatError("map: unknown cell '" + cell + "' at (" + std::to_string(x) + "," +
                          std::to_string(y) + ")");
      }
    }
  }
  for (int v : seen)
    if (v != 1) throw FormatError("map: each of S0 S1 T0 T1 B0 B1 must appear exactly once");
  return m;
}

GridMap GridMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("env.map", "cannot open map file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

GridMap GridMap::builtin() { return parse(kBuiltinMap); }

bool GridMap::mirror_symmetric() const {
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (blocked({x, y}) != blocked({width_ - 1 - x, y})) return false;
  for (int s = 0; s < kNumSides; ++s) {
    if (to_side(1, spawns_[s]) != spawns_[1 - s]) return false;
    if (to_side(1, turrets_[s]) != turrets_[1 - s]) return false;
    if (to_side(1, bases_[s]) != bases_[1 - s]) return false;
  }
  return true;
}

}  // namespace moba::env
