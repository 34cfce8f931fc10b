#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "moba/env/types.h"

namespace moba::env {

// Static terrain. Text format, one row per line (row 0 first):
//   '.' free, '#' obstacle, 'S0'/'S1' spawns, 'T0'/'T1' turrets,
//   'B0'/'B1' bases. Marker cells are free terrain. Rows are either compact
//   ("#..S0..#", a two-character marker occupies one cell) or
//   whitespace-separated tokens. Blank lines and lines starting with ';'
//   are ignored.
class GridMap {
 public:
  static GridMap parse(const std::string& text);
  static GridMap load(const std::filesystem::path& path);
  static GridMap builtin();

  int width() const { return width_; }
  int height() const { return height_; }
  bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  // Out-of-map cells count as obstacles.
  bool blocked(Cell c) const { return !inside(c) || obstacle_[c.y * width_ + c.x] != 0; }

  Cell spawn(int side) const { return spawns_[side]; }
  Cell turret(int side) const { return turrets_[side]; }
  Cell base(int side) const { return bases_[side]; }

  // True when the terrain and markers are invariant under x -> width-1-x
  // with sides swapped.
  bool mirror_symmetric() const;

  // Converts between world x and a side's own frame (identity for side 0).
  int to_side_x(int side, int x) const { return side == 0 ? x : width_ - 1 - x; }
  Cell to_side(int side, Cell c) const { return {to_side_x(side, c.x), c.y}; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> obstacle_;
  std::array<Cell, kNumSides> spawns_{};
  std::array<Cell, kNumSides> turrets_{};
  std::array<Cell, kNumSides> bases_{};
};

}  // namespace moba::env
