#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "moba/env/config.h"
#include "moba/env/map.h"
#include "moba/env/types.h"

namespace moba::env {

using ActionPair = std::array<ActionCommand, kNumSides>;

struct StepResult {
  WorldState state;
  std::array<RewardComponents, kNumSides> raw;
  bool terminal = false;
  // False when the input state was already terminal; `state` is then the
  // unchanged input.
  bool accepted = true;
};

// Flattened read-only view of any unit (hero or structure or creep), used for
// the per-side observable-unit registry.
struct UnitView {
  int id = 0;
  int serial = 0;
  UnitType unit_type = UnitType::kCreep;
  int side = 0;
  Cell position;
  int hp = 0;
  int max_hp = 1;
  int attack_range = 0;
  int attack_damage = 0;
  bool alive = true;
  const HeroState* hero = nullptr;
};

// Game rules for one map and configuration. Stateless apart from the
// immutable rules; every operation is a pure function of its arguments.
class Game {
 public:
  explicit Game(EnvConfig config);
  Game(EnvConfig config, GridMap map);

  const EnvConfig& config() const { return config_; }
  const GridMap& map() const { return map_; }

  WorldState reset(uint64_t seed, StartMode mode, bool randomize_positions) const;
  StepResult step(const WorldState& state, const ActionPair& actions) const;

  ActionMask legal_action_mask(const WorldState& state, int side) const;
  static bool is_legal(const ActionMask& mask, const ActionCommand& action);

  // Registry order: self hero, enemy hero, creeps (own first, by serial),
  // turrets (own, enemy), bases (own, enemy).
  std::vector<UnitView> observable_units(const WorldState& state, int side) const;
  bool attackable(const WorldState& state, int viewer_side, const UnitView& unit) const;

  ActionCommand scripted_bot_action(const WorldState& state, int side) const;

  // Step of a move bin along one axis: -1, 0 or +1.
  int move_step(int bin) const;
  // Move bin that yields the given axis step.
  int move_bin_for_step(int step) const;
  // Offset bin mapped to [-1, 1].
  double offset_value(int bin) const;

  int hero_damage(const HeroState& hero) const;
  int skill_damage(const HeroState& hero, int skill) const;
  const HeroStats& stats(const HeroState& hero) const;

 private:
  HeroState make_hero(int side) const;
  UnitState make_structure(UnitType type, int side) const;
  void spawn_wave(WorldState& state) const;
  Cell slide(Cell from, int dx, int dy) const;

  EnvConfig config_;
  GridMap map_;
};

// Lowest-index legal label on every head (noop on the button head).
ActionCommand first_legal(const ActionMask& mask);

RewardComponents reward_components(const WorldState& prev, const WorldState& next, int side);
// Zero-sum reward: weighted raw reward of `side` minus that of its opponent.
double compute_reward(const WorldState& prev, const WorldState& next, int side,
                      const RewardWeights& weights);

// Mirrors positions (x -> width-1-x) and swaps every side tag.
WorldState swap_sides(const WorldState& state, const GridMap& map);

// Order-sensitive digest of every field of the state.
uint64_t state_hash(const WorldState& state);

}  // namespace moba::env
