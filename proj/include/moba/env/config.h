#pragma once

#include <array>
#include <string>

#include "moba/common/kv_config.h"
#include "moba/env/types.h"

namespace moba::env {

enum class SkillKind : uint8_t {
  kAimedArea,     // damage every enemy within `radius` of the aim point
  kTargetStun,    // damage + stun one enemy unit within `reach`
  kDash,          // move up to `reach` cells along the aim, then area damage
  kSelfAreaStun,  // area damage + stun around the caster
  kTargetStrike,  // heavy single-target hit that heals the caster
};

struct SkillSpec {
  SkillKind kind = SkillKind::kAimedArea;
  int cooldown = 10;
  int mana_cost = 0;
  int min_level = 1;
  int damage = 0;
  int damage_per_level = 0;
  int reach = 1;
  int radius = 0;
  int stun_ticks = 0;
  // Fraction of dealt damage returned as caster hp (kTargetStrike).
  double heal_fraction = 0.0;
};

struct HeroStats {
  int max_hp = 500;
  int hp_per_level = 50;
  int max_mana = 300;
  int mana_per_level = 20;
  int damage = 30;
  int damage_per_level = 4;
  int attack_range = 4;
  int attack_cooldown = 2;
  std::array<SkillSpec, kNumSkills> skills{};
};

struct StructureStats {
  int max_hp = 0;
  int damage = 0;
  int range = 0;
  int cooldown = 2;
};

struct EnvConfig {
  // Empty path selects the built-in lane map.
  std::string map_path;
  std::array<Archetype, kNumSides> heroes{Archetype::kMage, Archetype::kMage};
  int tick_cap = 9000;
  double tick_ms = 133.0;

  int move_bins = 8;
  int offset_bins = 8;

  int wave_period = 60;
  int creeps_per_wave = 3;
  // Multiplicative creep hp/damage growth per wave index.
  double creep_growth = 0.04;
  int creep_hp = 150;
  int creep_damage = 12;
  int creep_cooldown = 2;
  // Creeps advance one cell every `creep_move_period` ticks.
  int creep_move_period = 2;
  int creep_aggro = 3;
  // Creep damage multiplier against turrets and bases.
  double creep_siege_multiplier = 2.0;

  StructureStats turret{1500, 80, 4, 2};
  StructureStats base{2000, 50, 3, 2};

  // Late-game pressure: both bases lose `decay_per_tick` hp every tick from
  // `decay_start_tick` on, so every game ends before the tick cap.
  int decay_start_tick = 4000;
  int decay_per_tick = 2;

  int respawn_base = 20;
  int respawn_per_level = 3;
  int fountain_radius = 1;
  int exp_share_radius = 6;
  int exp_per_level = 150;
  int max_level = 10;
  int creep_gold = 25;
  int creep_exp = 30;
  int hero_kill_gold = 100;
  int hero_kill_exp = 120;
  int turret_gold = 200;
  int passive_gold = 2;
  int passive_gold_period = 10;
  double crit_chance = 0.1;
  double crit_multiplier = 1.5;

  // Spawn-position randomization radius for randomize_positions.
  int safe_zone_radius = 3;
  // random_initial_frame draws the start tick uniformly from [0, rif_max_tick].
  int rif_max_tick = 3000;

  RewardWeights reward;
  std::array<HeroStats, 2> archetypes = default_archetypes();

  static std::array<HeroStats, 2> default_archetypes();
  // Reads the [env], [reward] and [hero.warrior]/[hero.mage] sections.
  static EnvConfig from_kv(const KvConfig& kv);
  void validate() const;
};

}  // namespace moba::env
