#include "moba/env/config.h"

#include "moba/common/error.h"

namespace moba::env {

std::string to_string(Button b) {
  switch (b) {
    case Button::kNoop: return "noop";
    case Button::kMove: return "move";
    case Button::kAttack: return "attack";
    case Button::kSkill1: return "skill1";
    case Button::kSkill2: return "skill2";
    case Button::kSkill3: return "skill3";
  }
  return "?";
}

std::string to_string(Archetype a) { return a == Archetype::kWarrior ? "warrior" : "mage"; }

Archetype parse_archetype(const std::string& s) {
  if (s == "warrior") return Archetype::kWarrior;
  if (s == "mage") return Archetype::kMage;
  throw ConfigError("hero", "unknown archetype '" + s + "' (warrior|mage)");
}

std::array<HeroStats, 2> EnvConfig::default_archetypes() {
  HeroStats warrior;
  warrior.max_hp = 700;
  warrior.hp_per_level = 70;
  warrior.max_mana = 200;
  warrior.mana_per_level = 10;
  warrior.damage = 40;
  warrior.damage_per_level = 6;
  warrior.attack_range = 1;
  warrior.attack_cooldown = 2;
  warrior.skills[0] = {SkillKind::kDash, 16, 40, 1, 80, 8, 3, 1, 0, 0.0};
  warrior.skills[1] = {SkillKind::kSelfAreaStun, 40, 60, 1, 60, 6, 1, 1, 8, 0.0};
  warrior.skills[2] = {SkillKind::kTargetStrike, 80, 100, 4, 250, 20, 2, 0, 0, 0.3};

  HeroStats mage;
  mage.max_hp = 500;
  mage.hp_per_level = 50;
  mage.max_mana = 300;
  mage.mana_per_level = 20;
  mage.damage = 30;
  mage.damage_per_level = 4;
  mage.attack_range = 4;
  mage.attack_cooldown = 2;
  mage.skills[0] = {SkillKind::kAimedArea, 12, 40, 1, 90, 10, 4, 1, 0, 0.0};
  mage.skills[1] = {SkillKind::kTargetStun, 40, 70, 1, 40, 5, 5, 0, 10, 0.0};
  mage.skills[2] = {SkillKind::kAimedArea, 80, 120, 4, 220, 20, 5, 2, 0, 0.0};
  return {warrior, mage};
}

namespace {

void read_hero(const KvConfig& kv, const std::string& section, HeroStats& h) {
  auto key = [&](const char* k) { return section + "." + k; };
  h.max_hp = static_cast<int>(kv.get_int(key("max_hp"), h.max_hp));
  h.hp_per_level = static_cast<int>(kv.get_int(key("hp_per_level"), h.hp_per_level));
  h.max_mana = static_cast<int>(kv.get_int(key("max_mana"), h.max_mana));
  h.mana_per_level = static_cast<int>(kv.get_int(key("mana_per_level"), h.mana_per_level));
  h.damage = static_cast<int>(kv.get_int(key("damage"), h.damage));
  h.damage_per_level = static_cast<int>(kv.get_int(key("damage_per_level"), h.damage_per_level));
  h.attack_range = static_cast<int>(kv.get_int(key("attack_range"), h.attack_range));
  h.attack_cooldown = static_cast<int>(kv.get_int(key("attack_cooldown"), h.attack_cooldown));
  for (int i = 0; i < kNumSkills; ++i) {
    std::string p = "skill" + std::to_string(i + 1) + "_";
    SkillSpec& s = h.skills[i];
    s.cooldown = static_cast<int>(kv.get_int(key((p + "cooldown").c_str()), s.cooldown));
    s.mana_cost = static_cast<int>(kv.get_int(key((p + "mana").c_str()), s.mana_cost));
    s.damage = static_cast<int>(kv.get_int(key((p + "damage").c_str()), s.damage));
    s.min_level = static_cast<int>(kv.get_int(key((p + "min_level").c_str()), s.min_level));
  }
}

}  // namespace

EnvConfig EnvConfig::from_kv(const KvConfig& kv) {
  EnvConfig c;
  c.map_path = kv.get_string("env.map", c.map_path);
  c.heroes[0] = parse_archetype(kv.get_string("env.hero0", to_string(c.heroes[0])));
  c.heroes[1] = parse_archetype(kv.get_string("env.hero1", to_string(c.heroes[1])));
  c.tick_cap = static_cast<int>(kv.get_int("env.tick_cap", c.tick_cap));
  c.tick_ms = kv.get_double("env.tick_ms", c.tick_ms);
  c.move_bins = static_cast<int>(kv.get_int("env.move_bins", c.move_bins));
  c.offset_bins = static_cast<int>(kv.get_int("env.offset_bins", c.offset_bins));
  c.wave_period = static_cast<int>(kv.get_int("env.wave_period", c.wave_period));
  c.creeps_per_wave = static_cast<int>(kv.get_int("env.creeps_per_wave", c.creeps_per_wave));
  c.creep_growth = kv.get_double("env.creep_growth", c.creep_growth);
  c.crit_chance = kv.get_double("env.crit_chance", c.crit_chance);
  c.decay_start_tick = static_cast<int>(kv.get_int("env.decay_start_tick", c.decay_start_tick));
  c.decay_per_tick = static_cast<int>(kv.get_int("env.decay_per_tick", c.decay_per_tick));
  c.safe_zone_radius = static_cast<int>(kv.get_int("env.safe_zone_radius", c.safe_zone_radius));
  c.rif_max_tick = static_cast<int>(kv.get_int("env.rif_max_tick", c.rif_max_tick));

  RewardWeights& w = c.reward;
  w.hp_point = kv.get_double("reward.hp_point", w.hp_point);
  w.tower_hp_point = kv.get_double("reward.tower_hp_point", w.tower_hp_point);
  w.money = kv.get_double("reward.money", w.money);
  w.ep_rate = kv.get_double("reward.ep_rate", w.ep_rate);
  w.death = kv.get_double("reward.death", w.death);
  w.kill = kv.get_double("reward.kill", w.kill);
  w.exp = kv.get_double("reward.exp", w.exp);
  w.last_hit = kv.get_double("reward.last_hit", w.last_hit);

  read_hero(kv, "hero.warrior", c.archetypes[static_cast<int>(Archetype::kWarrior)]);
  read_hero(kv, "hero.mage", c.archetypes[static_cast<int>(Archetype::kMage)]);
  c.validate();
  return c;
}

void EnvConfig::validate() const {
  if (tick_cap < 1) throw ConfigError("env.tick_cap", "must be >= 1");
  if (move_bins < 2) throw ConfigError("env.move_bins", "must be >= 2");
  if (offset_bins < 2) throw ConfigError("env.offset_bins", "must be >= 2");
  if (wave_period < 1) throw ConfigError("env.wave_period", "must be >= 1");
  if (creeps_per_wave < 0) throw ConfigError("env.creeps_per_wave", "must be >= 0");
  if (crit_chance < 0 || crit_chance > 1) throw ConfigError("env.crit_chance", "must be in [0,1]");
  if (rif_max_tick < 0) throw ConfigError("env.rif_max_tick", "must be >= 0");
  for (const HeroStats& h : archetypes) {
    if (h.max_hp <= 0) throw ConfigError("hero.max_hp", "must be > 0");
    if (h.max_mana <= 0) throw ConfigError("hero.max_mana", "must be > 0");
    for (const SkillSpec& s : h.skills)
      if (s.cooldown < 1) throw ConfigError("hero.skill_cooldown", "must be >= 1");
  }
}

}  // namespace moba::env
