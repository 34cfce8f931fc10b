#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moba::env {

inline constexpr int kNumSides = 2;
inline constexpr int kNumSkills = 3;
// cooldowns[0..2] are skills, cooldowns[3] is the basic attack.
inline constexpr int kBasicAttackSlot = 3;

enum class UnitType : uint8_t { kHero = 0, kCreep = 1, kTurret = 2, kBase = 3 };
inline constexpr int kNumUnitTypes = 4;

enum class Button : uint8_t { kNoop = 0, kMove, kAttack, kSkill1, kSkill2, kSkill3 };
inline constexpr int kNumButtons = 6;

enum class Archetype : uint8_t { kWarrior = 0, kMage = 1 };

enum class StartMode : uint8_t { kZeroStart, kRandomInitialFrame };

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int chebyshev(Cell a, Cell b) {
  int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

struct HeroState {
  int side = 0;
  Archetype archetype = Archetype::kMage;
  Cell position;
  int hp = 0;
  int max_hp = 0;
  int mana = 0;
  int max_mana = 0;
  int gold = 0;
  int exp = 0;
  int level = 1;
  std::array<int, 4> cooldowns{};
  bool alive = true;
  int respawn_timer = 0;
  bool control_locked = false;
  int stun_ticks = 0;
  // Cumulative event counters; reward deltas are taken over these.
  int kills = 0;
  int deaths = 0;
  int last_hits = 0;

  friend bool operator==(const HeroState&, const HeroState&) = default;
};

struct UnitState {
  int id = 0;
  // Per-side spawn serial; mirrored units share a serial.
  int serial = 0;
  UnitType unit_type = UnitType::kCreep;
  int side = 0;
  Cell position;
  int hp = 0;
  int max_hp = 0;
  int attack_range = 1;
  int attack_damage = 0;
  int attack_cooldown = 0;

  friend bool operator==(const UnitState&, const UnitState&) = default;
};

struct WorldState {
  int tick = 0;
  std::array<HeroState, kNumSides> heroes;
  std::vector<UnitState> creeps;
  std::array<UnitState, kNumSides> turrets;
  std::array<UnitState, kNumSides> bases;
  uint64_t rng_state = 0;
  int next_unit_id = 0;
  std::array<int, kNumSides> next_serial{};
  int waves_spawned = 0;
  bool terminal = false;
  std::optional<int> winner;
  // Actions coerced to noop because they failed the legal mask.
  std::array<int, kNumSides> illegal_actions{};

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// Unit ids are stable for the lifetime of a unit.
inline constexpr int hero_id(int side) { return side; }
inline constexpr int turret_id(int side) { return 2 + side; }
inline constexpr int base_id(int side) { return 4 + side; }
inline constexpr int kFirstCreepId = 6;

// All action indices are in the acting side's own frame: x is mirrored for
// side 1 so that "toward the enemy base" is +x for both sides.
struct ActionCommand {
  Button button = Button::kNoop;
  int move_x = 0;
  int move_y = 0;
  int offset_x = 0;
  int offset_y = 0;
  int target_index = 0;

  friend bool operator==(const ActionCommand&, const ActionCommand&) = default;
};

// One boolean vector per action head. `target` is sized to the number of
// observable units for the side at this tick.
struct ActionMask {
  std::vector<uint8_t> button;
  std::vector<uint8_t> move_x;
  std::vector<uint8_t> move_y;
  std::vector<uint8_t> offset_x;
  std::vector<uint8_t> offset_y;
  std::vector<uint8_t> target;

  friend bool operator==(const ActionMask&, const ActionMask&) = default;
};

struct RewardWeights {
  double hp_point = 2.0;
  double tower_hp_point = 10.0;
  double money = 0.008;
  double ep_rate = 0.8;
  double death = -1.0;
  double kill = -0.5;
  double exp = 0.008;
  double last_hit = 0.5;
};

// Per-side raw deltas for one transition, before weighting.
struct RewardComponents {
  double hp_point = 0;        // delta of hp / max_hp
  double tower_hp_point = 0;  // delta of own turret + base hp fractions
  double money = 0;           // gold gained
  double ep_rate = 0;         // delta of mana / max_mana
  double death = 0;           // deaths this tick
  double kill = 0;            // kills this tick
  double exp = 0;             // experience gained
  double last_hit = 0;        // last hits this tick

  double weighted(const RewardWeights& w) const {
    return w.hp_point * hp_point + w.tower_hp_point * tower_hp_point + w.money * money +
           w.ep_rate * ep_rate + w.death * death + w.kill * kill + w.exp * exp +
           w.last_hit * last_hit;
  }
};

std::string to_string(Button b);
std::string to_string(Archetype a);
Archetype parse_archetype(const std::string& s);

}  // namespace moba::env
