#include "moba/features/observation.h"

#include <algorithm>
#include <ostream>

namespace moba::features {

using env::UnitType;

double normalize_field(double raw, const FieldSpec& spec) {
  double t = (raw - spec.min) / (spec.max - spec.min);
  if (spec.clamp) t = std::clamp(t, 0.0, 1.0);
  return spec.range == Range::kUnit ? t : 2.0 * t - 1.0;
}

bool Observation::same_features(const Observation& o) const {
  return image_size == o.image_size && image == o.image && unit_width == o.unit_width &&
         units == o.units && unit_types == o.unit_types && global == o.global;
}

namespace {

enum UnitField {
  kIsSelf, kIsAlly, kIsEnemy, kTypeHero, kTypeCreep, kTypeTurret, kTypeBase, kHpFrac, kMaxHp,
  kRelX, kRelY, kPosX, kPosY, kDistance, kInMyRange, kThreatensMe, kAttackDamage, kAttackRange,
  kAttackable, kLevel, kManaFrac, kGold, kExp, kCooldown0, kCooldown1, kCooldown2, kCooldown3,
  kLocked, kRespawn, kAlive, kWarrior, kMage, kNumUnitFields
};

enum GlobalField {
  kTimeFrac, kOwnTurretDown, kEnemyTurretDown, kOwnBaseHp, kEnemyBaseHp, kOwnTurretHp,
  kEnemyTurretHp, kKillDiff, kGoldDiff, kExpDiff, kWavePhase, kCreepDiff, kDecayProgress,
  kNumGlobalFields
};

std::vector<FieldSpec> make_unit_fields() {
  std::vector<FieldSpec> f(kNumUnitFields);
  auto flag = [&](int i, const char* n) { f[i] = {n, 0, 1, Range::kUnit, true}; };
  flag(kIsSelf, "is_self");
  flag(kIsAlly, "is_ally");
  flag(kIsEnemy, "is_enemy");
  flag(kTypeHero, "type_hero");
  flag(kTypeCreep, "type_creep");
  flag(kTypeTurret, "type_turret");
  flag(kTypeBase, "type_base");
  flag(kHpFrac, "hp_frac");
  f[kMaxHp] = {"max_hp", 0, 2500, Range::kUnit, true};
  f[kRelX] = {"rel_x", -32, 32, Range::kSigned, true};
  f[kRelY] = {"rel_y", -32, 32, Range::kSigned, true};
  f[kPosX] = {"pos_x", 0, 31, Range::kUnit, true};
  f[kPosY] = {"pos_y", 0, 31, Range::kUnit, true};
  f[kDistance] = {"distance", 0, 32, Range::kUnit, true};
  flag(kInMyRange, "in_my_attack_range");
  flag(kThreatensMe, "threatens_me");
  f[kAttackDamage] = {"attack_damage", 0, 300, Range::kUnit, true};
  f[kAttackRange] = {"attack_range", 0, 8, Range::kUnit, true};
  flag(kAttackable, "attackable");
  f[kLevel] = {"level", 0, 10, Range::kUnit, true};
  flag(kManaFrac, "mana_frac");
  f[kGold] = {"gold", 0, 10000, Range::kUnit, true};
  f[kExp] = {"exp", 0, 2000, Range::kUnit, true};
  f[kCooldown0] = {"cooldown_skill1", 0, 100, Range::kUnit, true};
  f[kCooldown1] = {"cooldown_skill2", 0, 100, Range::kUnit, true};
  f[kCooldown2] = {"cooldown_skill3", 0, 100, Range::kUnit, true};
  f[kCooldown3] = {"cooldown_attack", 0, 10, Range::kUnit, true};
  flag(kLocked, "control_locked");
  f[kRespawn] = {"respawn_timer", 0, 60, Range::kUnit, true};
  flag(kAlive, "alive");
  flag(kWarrior, "archetype_warrior");
  flag(kMage, "archetype_mage");
  return f;
}

std::vector<FieldSpec> make_global_fields() {
  std::vector<FieldSpec> f(kNumGlobalFields);
  auto flag = [&](int i, const char* n) { f[i] = {n, 0, 1, Range::kUnit, true}; };
  flag(kTimeFrac, "time_frac");
  flag(kOwnTurretDown, "own_turret_destroyed");
  flag(kEnemyTurretDown, "enemy_turret_destroyed");
  flag(kOwnBaseHp, "own_base_hp_frac");
  flag(kEnemyBaseHp, "enemy_base_hp_frac");
  flag(kOwnTurretHp, "own_turret_hp_frac");
  flag(kEnemyTurretHp, "enemy_turret_hp_frac");
  f[kKillDiff] = {"kill_diff", -10, 10, Range::kSigned, true};
  f[kGoldDiff] = {"gold_diff", -3000, 3000, Range::kSigned, true};
  f[kExpDiff] = {"exp_diff", -2000, 2000, Range::kSigned, true};
  flag(kWavePhase, "wave_phase");
  f[kCreepDiff] = {"creep_diff", -12, 12, Range::kSigned, true};
  flag(kDecayProgress, "decay_progress");
  return f;
}

float norm(const std::vector<FieldSpec>& fields, int i, double raw) {
  return static_cast<float>(normalize_field(raw, fields[i]));
}

}  // namespace

const std::vector<FieldSpec>& FeatureExtractor::unit_fields() {
  static const std::vector<FieldSpec> fields = make_unit_fields();
  return fields;
}

const std::vector<FieldSpec>& FeatureExtractor::global_fields() {
  static const std::vector<FieldSpec> fields = make_global_fields();
  return fields;
}

FeatureExtractor::FeatureExtractor(const env::Game& game, int image_size)
    : game_(game), image_size_(image_size) {}

Observation FeatureExtractor::extract(const env::WorldState& state, int side) const {
  const env::GridMap& map = game_.map();
  const env::EnvConfig& cfg = game_.config();
  const auto& uf = unit_fields();
  const auto& gf = global_fields();
  Observation obs;

  const env::HeroState& self = state.heroes[side];
  const env::Cell me = map.to_side(side, self.position);

  obs.image_size = image_size_;
  obs.image.assign(static_cast<size_t>(Observation::kImageChannels * image_size_ * image_size_), 0.f);
  int half = image_size_ / 2;
  auto plane = [&](int c, int row, int col) -> float& {
    return obs.image[(static_cast<size_t>(c) * image_size_ + row) * image_size_ + col];
  };
  for (int row = 0; row < image_size_; ++row) {
    for (int col = 0; col < image_size_; ++col) {
      env::Cell side_cell{me.x - half + col, me.y - half + row};
      env::Cell world{map.to_side_x(side, side_cell.x), side_cell.y};
      plane(0, row, col) = map.blocked(world) ? 1.f : 0.f;
    }
  }
  for (const env::HeroState& h : state.heroes) {
    if (!h.alive) continue;
    env::Cell c = map.to_side(side, h.position);
    int col = c.x - me.x + half, row = c.y - me.y + half;
    if (row >= 0 && row < image_size_ && col >= 0 && col < image_size_) plane(1, row, col) = 1.f;
  }

  std::vector<env::UnitView> units = game_.observable_units(state, side);
  obs.unit_width = kNumUnitFields;
  obs.units.assign(units.size() * kNumUnitFields, 0.f);
  obs.unit_types.reserve(units.size());
  obs.unit_registry.reserve(units.size());
  const int my_range = game_.stats(self).attack_range;
  for (size_t slot = 0; slot < units.size(); ++slot) {
    const env::UnitView& u = units[slot];
    obs.unit_types.push_back(u.unit_type);
    obs.unit_registry.push_back(u.id);
    float* row = obs.units.data() + slot * kNumUnitFields;
    env::Cell p = map.to_side(side, u.position);
    int dist = env::chebyshev(p, me);
    bool ally = u.side == side;
    row[kIsSelf] = slot == 0;
    row[kIsAlly] = ally;
    row[kIsEnemy] = !ally;
    row[kTypeHero] = u.unit_type == UnitType::kHero;
    row[kTypeCreep] = u.unit_type == UnitType::kCreep;
    row[kTypeTurret] = u.unit_type == UnitType::kTurret;
    row[kTypeBase] = u.unit_type == UnitType::kBase;
    row[kHpFrac] = norm(uf, kHpFrac, static_cast<double>(std::max(u.hp, 0)) / u.max_hp);
    row[kMaxHp] = norm(uf, kMaxHp, u.max_hp);
    row[kRelX] = norm(uf, kRelX, p.x - me.x);
    row[kRelY] = norm(uf, kRelY, p.y - me.y);
    row[kPosX] = norm(uf, kPosX, p.x);
    row[kPosY] = norm(uf, kPosY, p.y);
    row[kDistance] = norm(uf, kDistance, dist);
    row[kInMyRange] = !ally && dist <= my_range;
    row[kThreatensMe] = !ally && u.alive && dist <= u.attack_range;
    row[kAttackDamage] = norm(uf, kAttackDamage, u.attack_damage);
    row[kAttackRange] = norm(uf, kAttackRange, u.attack_range);
    row[kAttackable] = game_.attackable(state, side, u);
    row[kAlive] = u.alive;
    if (u.hero != nullptr) {
      const env::HeroState& h = *u.hero;
      row[kLevel] = norm(uf, kLevel, h.level);
      // Enemy mana is hidden information.
      row[kManaFrac] = ally ? norm(uf, kManaFrac, static_cast<double>(h.mana) / h.max_mana) : 0.f;
      row[kGold] = norm(uf, kGold, h.gold);
      row[kExp] = norm(uf, kExp, h.exp);
      for (int k = 0; k < 4; ++k) row[kCooldown0 + k] = norm(uf, kCooldown0 + k, h.cooldowns[k]);
      row[kLocked] = h.control_locked;
      row[kRespawn] = norm(uf, kRespawn, h.respawn_timer);
      row[kWarrior] = h.archetype == env::Archetype::kWarrior;
      row[kMage] = h.archetype == env::Archetype::kMage;
    }
  }

  const int enemy = 1 - side;
  const env::HeroState& opp = state.heroes[enemy];
  auto frac = [](const env::UnitState& u) { return static_cast<double>(u.hp) / u.max_hp; };
  int own_creeps = 0, enemy_creeps = 0;
  for (const env::UnitState& c : state.creeps) (c.side == side ? own_creeps : enemy_creeps)++;
  obs.global.assign(kNumGlobalFields, 0.f);
  obs.global[kTimeFrac] = norm(gf, kTimeFrac, static_cast<double>(state.tick) / cfg.tick_cap);
  obs.global[kOwnTurretDown] = state.turrets[side].hp <= 0;
  obs.global[kEnemyTurretDown] = state.turrets[enemy].hp <= 0;
  obs.global[kOwnBaseHp] = norm(gf, kOwnBaseHp, frac(state.bases[side]));
  obs.global[kEnemyBaseHp] = norm(gf, kEnemyBaseHp, frac(state.bases[enemy]));
  obs.global[kOwnTurretHp] = norm(gf, kOwnTurretHp, frac(state.turrets[side]));
  obs.global[kEnemyTurretHp] = norm(gf, kEnemyTurretHp, frac(state.turrets[enemy]));
  obs.global[kKillDiff] = norm(gf, kKillDiff, self.kills - opp.kills);
  obs.global[kGoldDiff] = norm(gf, kGoldDiff, self.gold - opp.gold);
  obs.global[kExpDiff] = norm(gf, kExpDiff, self.exp - opp.exp);
  obs.global[kWavePhase] =
      norm(gf, kWavePhase, static_cast<double>(state.tick % cfg.wave_period) / cfg.wave_period);
  obs.global[kCreepDiff] = norm(gf, kCreepDiff, own_creeps - enemy_creeps);
  obs.global[kDecayProgress] =
      norm(gf, kDecayProgress,
           cfg.decay_start_tick > 0 ? static_cast<double>(state.tick) / cfg.decay_start_tick : 1.0);
  return obs;
}

void FeatureExtractor::write_manifest(std::ostream& out) const {
  out << "section,index,name,min,max,range\n";
  auto dump = [&](const char* section, const std::vector<FieldSpec>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      const FieldSpec& f = fields[i];
      out << section << ',' << i << ',' << f.name << ',' << f.min << ',' << f.max << ','
          << (f.range == Range::kUnit ? "unit" : "signed") << '\n';
    }
  };
  out << "image,0,obstacle," << 0 << ',' << 1 << ",binary\n";
  out << "image,1,hero_position," << 0 << ',' << 1 << ",binary\n";
  dump("unit", unit_fields());
  dump("global", global_fields());
}

}  // namespace moba::features
