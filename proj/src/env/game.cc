#include "moba/env/game.h"

#include <algorithm>
#include <cmath>

#include "moba/common/fnv.h"
#include "moba/common/rng.h"

namespace moba::env {

namespace {

int sign(int v) { return (v > 0) - (v < 0); }

struct Hit {
  int target_id;
  int amount;
  int source_hero;  // -1 for creeps and structures
};

struct Stun {
  int hero_side;
  int ticks;
};

UnitView view_of(const HeroState& h) {
  UnitView v;
  v.id = hero_id(h.side);
  v.serial = 0;
  v.unit_type = UnitType::kHero;
  v.side = h.side;
  v.position = h.position;
  v.hp = h.hp;
  v.max_hp = h.max_hp;
  v.alive = h.alive;
  v.hero = &h;
  return v;
}

UnitView view_of(const UnitState& u) {
  UnitView v;
  v.id = u.id;
  v.serial = u.serial;
  v.unit_type = u.unit_type;
  v.side = u.side;
  v.position = u.position;
  v.hp = u.hp;
  v.max_hp = u.max_hp;
  v.attack_range = u.attack_range;
  v.attack_damage = u.attack_damage;
  v.alive = u.hp > 0;
  return v;
}

// Target priority for creeps and structures: creeps, then heroes, then
// structures; nearer first, lower id breaks ties.
int priority(UnitType t) {
  switch (t) {
    case UnitType::kCreep: return 0;
    case UnitType::kHero: return 1;
    case UnitType::kTurret: return 2;
    case UnitType::kBase: return 3;
  }
  return 4;
}

}  // namespace

Game::Game(EnvConfig config)
    : Game(config, config.map_path.empty() ? GridMap::builtin() : GridMap::load(config.map_path)) {}

Game::Game(EnvConfig config, GridMap map) : config_(std::move(config)), map_(std::move(map)) {
  config_.validate();
}

const HeroStats& Game::stats(const HeroState& hero) const {
  return config_.archetypes[static_cast<int>(hero.archetype)];
}

int Game::hero_damage(const HeroState& hero) const {
  const HeroStats& s = stats(hero);
  return s.damage + s.damage_per_level * (hero.level - 1);
}

int Game::skill_damage(const HeroState& hero, int skill) const {
  const SkillSpec& s = stats(hero).skills[skill];
  return s.damage + s.damage_per_level * (hero.level - 1);
}

int Game::move_step(int bin) const {
  double v = -1.0 + 2.0 * bin / (config_.move_bins - 1);
  if (v >= 0.5) return 1;
  if (v <= -0.5) return -1;
  return 0;
}

int Game::move_bin_for_step(int step) const {
  if (step < 0) return 0;
  if (step > 0) return config_.move_bins - 1;
  for (int b = 0; b < config_.move_bins; ++b)
    if (move_step(b) == 0) return b;
  return 0;
}

double Game::offset_value(int bin) const { return -1.0 + 2.0 * bin / (config_.offset_bins - 1); }

HeroState Game::make_hero(int side) const {
  HeroState h;
  h.side = side;
  h.archetype = config_.heroes[side];
  const HeroStats& s = config_.archetypes[static_cast<int>(h.archetype)];
  h.position = map_.spawn(side);
  h.max_hp = h.hp = s.max_hp;
  h.max_mana = h.mana = s.max_mana;
  return h;
}

UnitState Game::make_structure(UnitType type, int side) const {
  const StructureStats& st = type == UnitType::kTurret ? config_.turret : config_.base;
  UnitState u;
  u.id = type == UnitType::kTurret ? turret_id(side) : base_id(side);
  u.unit_type = type;
  u.side = side;
  u.position = type == UnitType::kTurret ? map_.turret(side) : map_.base(side);
  u.max_hp = u.hp = st.max_hp;
  u.attack_range = st.range;
  u.attack_damage = st.damage;
  return u;
}

WorldState Game::reset(uint64_t seed, StartMode mode, bool randomize_positions) const {
  WorldState s;
  SplitMix64 rng(derive_seed(seed, 0x6d6f6261));
  for (int side = 0; side < kNumSides; ++side) {
    s.heroes[side] = make_hero(side);
    s.turrets[side] = make_structure(UnitType::kTurret, side);
    s.bases[side] = make_structure(UnitType::kBase, side);
  }
  s.next_unit_id = kFirstCreepId;
  if (randomize_positions) {
    for (int side = 0; side < kNumSides; ++side) {
      Cell spawn = map_.spawn(side);
      std::vector<Cell> free;
      int r = config_.safe_zone_radius;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          Cell c{spawn.x + dx, spawn.y + dy};
          if (!map_.blocked(c)) free.push_back(c);
        }
      s.heroes[side].position = free[rng.below(free.size())];
    }
  }
  // Separate stream so a random-initial-frame start is exactly the zero-start
  // game advanced by scripted play.
  uint64_t frame = 0;
  if (mode == StartMode::kRandomInitialFrame)
    frame = SplitMix64(derive_seed(seed, 0x726966)).below(static_cast<uint64_t>(config_.rif_max_tick) + 1);
  s.rng_state = rng.next();
  for (uint64_t t = 0; t < frame; ++t) {
    ActionPair a{scripted_bot_action(s, 0), scripted_bot_action(s, 1)};
    StepResult r = step(s, a);
    if (r.terminal) break;
    s = std::move(r.state);
  }
  return s;
}

std::vector<UnitView> Game::observable_units(const WorldState& state, int side) const {
  std::vector<UnitView> out;
  out.reserve(6 + state.creeps.size());
  out.push_back(view_of(state.heroes[side]));
  out.push_back(view_of(state.heroes[1 - side]));
  for (UnitView& v : out) {
    const HeroStats& st = stats(*v.hero);
    v.attack_range = st.attack_range;
    v.attack_damage = hero_damage(*v.hero);
  }
  size_t first_creep = out.size();
  for (const UnitState& c : state.creeps) out.push_back(view_of(c));
  std::sort(out.begin() + static_cast<long>(first_creep), out.end(),
            [side](const UnitView& a, const UnitView& b) {
              bool a_enemy = a.side != side, b_enemy = b.side != side;
              if (a_enemy != b_enemy) return !a_enemy;
              return a.serial < b.serial;
            });
  out.push_back(view_of(state.turrets[side]));
  out.push_back(view_of(state.turrets[1 - side]));
  out.push_back(view_of(state.bases[side]));
  out.push_back(view_of(state.bases[1 - side]));
  return out;
}

bool Game::attackable(const WorldState& state, int viewer_side, const UnitView& u) const {
  if (u.side == viewer_side || !u.alive || u.hp <= 0) return false;
  if (u.unit_type == UnitType::kBase && state.turrets[u.side].hp > 0) return false;
  return true;
}

ActionMask Game::legal_action_mask(const WorldState& state, int side) const {
  ActionMask m;
  const HeroState& h = state.heroes[side];
  std::vector<UnitView> units = observable_units(state, side);
  m.target.assign(units.size(), 0);
  for (size_t i = 0; i < units.size(); ++i) m.target[i] = attackable(state, side, units[i]);

  m.button.assign(kNumButtons, 0);
  m.button[static_cast<int>(Button::kNoop)] = 1;
  m.move_x.assign(config_.move_bins, 1);
  m.move_y.assign(config_.move_bins, 1);
  m.offset_x.assign(config_.offset_bins, 1);
  m.offset_y.assign(config_.offset_bins, 1);

  for (int b = 0; b < config_.move_bins; ++b) {
    int sx = move_step(b);
    if (sx != 0) {
      int wdx = side == 0 ? sx : -sx;
      if (map_.blocked({h.position.x + wdx, h.position.y})) m.move_x[b] = 0;
      if (map_.blocked({h.position.x, h.position.y + sx})) m.move_y[b] = 0;
    }
  }

  if (!h.alive || h.control_locked) return m;

  m.button[static_cast<int>(Button::kMove)] = 1;
  bool any_target = std::any_of(m.target.begin(), m.target.end(), [](uint8_t t) { return t; });
  m.button[static_cast<int>(Button::kAttack)] = any_target;
  const HeroStats& st = stats(h);
  for (int k = 0; k < kNumSkills; ++k) {
    const SkillSpec& sk = st.skills[k];
    bool ok = h.cooldowns[k] == 0 && h.mana >= sk.mana_cost && h.level >= sk.min_level;
    if (ok && (sk.kind == SkillKind::kTargetStun || sk.kind == SkillKind::kTargetStrike)) {
      ok = false;
      for (size_t i = 0; i < units.size(); ++i)
        if (m.target[i] && chebyshev(units[i].position, h.position) <= sk.reach) ok = true;
    }
    m.button[static_cast<int>(Button::kSkill1) + k] = ok;
  }
  return m;
}

ActionCommand first_legal(const ActionMask& mask) {
  auto first = [](const std::vector<uint8_t>& v) {
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i]) return static_cast<int>(i);
    return 0;
  };
  ActionCommand a;
  a.button = static_cast<Button>(first(mask.button));
  a.move_x = first(mask.move_x);
  a.move_y = first(mask.move_y);
  a.offset_x = first(mask.offset_x);
  a.offset_y = first(mask.offset_y);
  a.target_index = first(mask.target);
  return a;
}

bool Game::is_legal(const ActionMask& mask, const ActionCommand& a) {
  auto ok = [](const std::vector<uint8_t>& v, int i) {
    return i >= 0 && i < static_cast<int>(v.size()) && v[i] != 0;
  };
  return ok(mask.button, static_cast<int>(a.button)) && ok(mask.move_x, a.move_x) &&
         ok(mask.move_y, a.move_y) && ok(mask.offset_x, a.offset_x) &&
         ok(mask.offset_y, a.offset_y) && ok(mask.target, a.target_index);
}

Cell Game::slide(Cell from, int dx, int dy) const {
  if (dx == 0 && dy == 0) return from;
  Cell full{from.x + dx, from.y + dy};
  if (!map_.blocked(full)) return full;
  if (dx != 0 && !map_.blocked({from.x + dx, from.y})) return {from.x + dx, from.y};
  if (dy != 0 && !map_.blocked({from.x, from.y + dy})) return {from.x, from.y + dy};
  return from;
}

void Game::spawn_wave(WorldState& s) const {
  double growth = 1.0 + config_.creep_growth * s.waves_spawned;
  for (int side = 0; side < kNumSides; ++side) {
    Cell base = map_.base(side);
    int forward = side == 0 ? 1 : -1;
    for (int k = 0; k < config_.creeps_per_wave; ++k) {
      UnitState c;
      c.id = s.next_unit_id++;
      c.serial = s.next_serial[side]++;
      c.unit_type = UnitType::kCreep;
      c.side = side;
      int dy = (k % 3 == 0) ? 0 : (k % 3 == 1 ? -1 : 1);
      c.position = {base.x + forward, base.y + dy};
      if (map_.blocked(c.position)) c.position = {base.x + forward, base.y};
      c.max_hp = c.hp = static_cast<int>(std::lround(config_.creep_hp * growth));
      c.attack_range = 1;
      c.attack_damage = static_cast<int>(std::lround(config_.creep_damage * growth));
      s.creeps.push_back(c);
    }
  }
  ++s.waves_spawned;
}

StepResult Game::step(const WorldState& prev, const ActionPair& input) const {
  StepResult result;
  if (prev.terminal) {
    result.state = prev;
    result.terminal = true;
    result.accepted = false;
    return result;
  }
  WorldState s = prev;
  SplitMix64 rng(s.rng_state);

  std::array<std::vector<UnitView>, kNumSides> registry;
  ActionPair actions = input;
  for (int side = 0; side < kNumSides; ++side) {
    registry[side] = observable_units(prev, side);
    if (!is_legal(legal_action_mask(prev, side), actions[side])) {
      actions[side] = ActionCommand{};
      ++s.illegal_actions[side];
    }
  }

  std::vector<Hit> hits;
  std::vector<Stun> stuns;

  auto roll = [&](int base_damage) {
    bool crit = rng.bernoulli(config_.crit_chance);
    return crit ? static_cast<int>(std::lround(base_damage * config_.crit_multiplier)) : base_damage;
  };
  auto world_dx = [](int side, int sx) { return side == 0 ? sx : -sx; };

  // Heroes: movement first, then attacks and skills on post-move positions.
  struct PendingHeroAction {
    int kind = 0;  // 0 none, 1 basic attack, 2 skill
    int skill = 0;
    Cell aim;
    int target_id = -1;
  };
  std::array<PendingHeroAction, kNumSides> pending{};

  for (int side = 0; side < kNumSides; ++side) {
    HeroState& h = s.heroes[side];
    const ActionCommand& a = actions[side];
    if (!h.alive || h.control_locked) continue;
    const HeroStats& st = stats(h);
    switch (a.button) {
      case Button::kNoop: break;
      case Button::kMove:
        h.position = slide(h.position, world_dx(side, move_step(a.move_x)), move_step(a.move_y));
        break;
      case Button::kAttack: {
        const UnitView& t = registry[side][a.target_index];
        if (chebyshev(t.position, h.position) <= st.attack_range) {
          if (h.cooldowns[kBasicAttackSlot] == 0) {
            pending[side].kind = 1;
            pending[side].target_id = t.id;
            h.cooldowns[kBasicAttackSlot] = st.attack_cooldown;
          }
        } else {
          h.position = slide(h.position, sign(t.position.x - h.position.x),
                             sign(t.position.y - h.position.y));
        }
        break;
      }
      case Button::kSkill1:
      case Button::kSkill2:
      case Button::kSkill3: {
        int k = static_cast<int>(a.button) - static_cast<int>(Button::kSkill1);
        const SkillSpec& sk = st.skills[k];
        h.cooldowns[k] = sk.cooldown;
        h.mana -= sk.mana_cost;
        pending[side].kind = 2;
        pending[side].skill = k;
        double ox = offset_value(a.offset_x), oy = offset_value(a.offset_y);
        int ax = world_dx(side, static_cast<int>(std::lround(ox * sk.reach)));
        int ay = static_cast<int>(std::lround(oy * sk.reach));
        if (sk.kind == SkillKind::kDash) {
          int dx = sign(ax), dy = sign(ay);
          for (int i = 0; i < sk.reach; ++i) {
            Cell n = slide(h.position, dx, dy);
            if (n == h.position) break;
            h.position = n;
          }
          pending[side].aim = h.position;
        } else {
          pending[side].aim = {h.position.x + ax, h.position.y + ay};
        }
        if (sk.kind == SkillKind::kTargetStun || sk.kind == SkillKind::kTargetStrike) {
          const UnitView& t = registry[side][a.target_index];
          pending[side].target_id = t.id;
        }
        break;
      }
    }
  }

  // Current positions after hero movement, for target resolution.
  auto current_views = [&](int side) {
    std::vector<UnitView> v = observable_units(s, side);
    return v;
  };

  for (int side = 0; side < kNumSides; ++side) {
    const HeroState& h = s.heroes[side];
    const PendingHeroAction& p = pending[side];
    if (p.kind == 0) continue;
    if (p.kind == 1) {
      hits.push_back({p.target_id, roll(hero_damage(h)), side});
      continue;
    }
    const SkillSpec& sk = stats(h).skills[p.skill];
    int dmg = skill_damage(h, p.skill);
    std::vector<UnitView> units = current_views(side);
    switch (sk.kind) {
      case SkillKind::kAimedArea:
      case SkillKind::kDash:
      case SkillKind::kSelfAreaStun: {
        Cell center = sk.kind == SkillKind::kSelfAreaStun ? h.position : p.aim;
        int amount = roll(dmg);
        for (const UnitView& u : units) {
          if (!attackable(s, side, u) || chebyshev(u.position, center) > sk.radius) continue;
          hits.push_back({u.id, amount, side});
          if (u.unit_type == UnitType::kHero && sk.stun_ticks > 0)
            stuns.push_back({u.side, sk.stun_ticks});
        }
        break;
      }
      case SkillKind::kTargetStun:
      case SkillKind::kTargetStrike: {
        const UnitView* target = nullptr;
        for (const UnitView& u : units)
          if (u.id == p.target_id && attackable(s, side, u) &&
              chebyshev(u.position, h.position) <= sk.reach)
            target = &u;
        if (target == nullptr) {
          // Fall back to the nearest valid enemy in reach, heroes first.
          for (const UnitView& u : units) {
            if (!attackable(s, side, u) || chebyshev(u.position, h.position) > sk.reach) continue;
            if (target == nullptr) {
              target = &u;
              continue;
            }
            bool u_hero = u.unit_type == UnitType::kHero;
            bool t_hero = target->unit_type == UnitType::kHero;
            int du = chebyshev(u.position, h.position), dt = chebyshev(target->position, h.position);
            if ((u_hero && !t_hero) || (u_hero == t_hero && du < dt)) target = &u;
          }
        }
        if (target == nullptr) break;
        int amount = roll(dmg);
        hits.push_back({target->id, amount, side});
        if (target->unit_type == UnitType::kHero && sk.stun_ticks > 0)
          stuns.push_back({target->side, sk.stun_ticks});
        if (sk.heal_fraction > 0) {
          HeroState& caster = s.heroes[side];
          int heal = static_cast<int>(amount * sk.heal_fraction);
          caster.hp = std::min(caster.max_hp, caster.hp + heal);
        }
        break;
      }
    }
  }

  // Creeps decide against a frozen snapshot so resolution order is irrelevant.
  {
    const WorldState snap = s;
    std::array<std::vector<UnitView>, kNumSides> views{observable_units(snap, 0),
                                                        observable_units(snap, 1)};
    bool move_tick = snap.tick % config_.creep_move_period == 0;
    for (UnitState& c : s.creeps) {
      const UnitView* best = nullptr;
      const UnitView* nearest_aggro = nullptr;
      for (const UnitView& u : views[c.side]) {
        if (!attackable(snap, c.side, u)) continue;
        int d = chebyshev(u.position, c.position);
        if (d <= c.attack_range) {
          if (best == nullptr || priority(u.unit_type) < priority(best->unit_type) ||
              (priority(u.unit_type) == priority(best->unit_type) &&
               (d < chebyshev(best->position, c.position) ||
                (d == chebyshev(best->position, c.position) && u.serial < best->serial))))
            best = &u;
        } else if (d <= config_.creep_aggro) {
          if (nearest_aggro == nullptr || d < chebyshev(nearest_aggro->position, c.position))
            nearest_aggro = &u;
        }
      }
      if (best != nullptr) {
        if (c.attack_cooldown == 0) {
          int amount = c.attack_damage;
          if (best->unit_type == UnitType::kTurret || best->unit_type == UnitType::kBase)
            amount = static_cast<int>(std::lround(amount * config_.creep_siege_multiplier));
          hits.push_back({best->id, roll(amount), -1});
          c.attack_cooldown = config_.creep_cooldown;
        }
      } else if (move_tick) {
        Cell goal = nearest_aggro ? nearest_aggro->position : map_.base(1 - c.side);
        c.position = slide(c.position, sign(goal.x - c.position.x), sign(goal.y - c.position.y));
      }
    }
  }

  // Turrets and bases.
  for (int side = 0; side < kNumSides; ++side) {
    for (UnitState* st : {&s.turrets[side], &s.bases[side]}) {
      if (st->hp <= 0) continue;
      if (st->attack_cooldown > 0) continue;
      const UnitView* best = nullptr;
      for (const UnitView& u : observable_units(s, side)) {
        if (!attackable(s, side, u)) continue;
        if (u.unit_type != UnitType::kCreep && u.unit_type != UnitType::kHero) continue;
        int d = chebyshev(u.position, st->position);
        if (d > st->attack_range) continue;
        if (best == nullptr || priority(u.unit_type) < priority(best->unit_type) ||
            (priority(u.unit_type) == priority(best->unit_type) &&
             d < chebyshev(best->position, st->position)))
          best = &u;
      }
      if (best != nullptr) {
        hits.push_back({best->id, st->attack_damage, -1});
        int cd = st->unit_type == UnitType::kTurret ? config_.turret.cooldown : config_.base.cooldown;
        st->attack_cooldown = cd;
      }
    }
  }

  // Apply damage.
  std::vector<std::array<bool, kNumSides>> damaged_by_creep(s.creeps.size(), {false, false});
  std::array<std::array<bool, kNumSides>, kNumSides> hero_hit_by{};
  std::array<std::array<bool, kNumSides>, kNumSides> turret_hit_by{};
  std::array<int, kNumSides> base_hp_before{s.bases[0].hp, s.bases[1].hp};
  for (const Hit& hit : hits) {
    if (hit.target_id < 2) {
      HeroState& h = s.heroes[hit.target_id];
      h.hp -= hit.amount;
      if (hit.source_hero >= 0) hero_hit_by[hit.target_id][hit.source_hero] = true;
    } else if (hit.target_id < 4) {
      UnitState& t = s.turrets[hit.target_id - 2];
      t.hp -= hit.amount;
      if (hit.source_hero >= 0) turret_hit_by[hit.target_id - 2][hit.source_hero] = true;
    } else if (hit.target_id < 6) {
      s.bases[hit.target_id - 4].hp -= hit.amount;
    } else {
      for (size_t i = 0; i < s.creeps.size(); ++i) {
        if (s.creeps[i].id != hit.target_id) continue;
        s.creeps[i].hp -= hit.amount;
        if (hit.source_hero >= 0) damaged_by_creep[i][hit.source_hero] = true;
      }
    }
  }

  for (const Stun& st : stuns) {
    HeroState& h = s.heroes[st.hero_side];
    if (h.hp > 0) {
      h.stun_ticks = std::max(h.stun_ticks, st.ticks);
      h.control_locked = true;
    }
  }

  // Hero deaths.
  for (int side = 0; side < kNumSides; ++side) {
    HeroState& h = s.heroes[side];
    if (!h.alive || h.hp > 0) continue;
    h.hp = 0;
    h.alive = false;
    h.respawn_timer = config_.respawn_base + config_.respawn_per_level * h.level;
    h.stun_ticks = 0;
    h.control_locked = false;
    ++h.deaths;
    int killer = 1 - side;
    if (hero_hit_by[side][killer]) {
      HeroState& k = s.heroes[killer];
      ++k.kills;
      k.gold += config_.hero_kill_gold;
      k.exp += config_.hero_kill_exp;
    }
  }

  // Creep deaths: last hits, gold and shared experience.
  {
    std::vector<UnitState> alive;
    alive.reserve(s.creeps.size());
    for (size_t i = 0; i < s.creeps.size(); ++i) {
      const UnitState& c = s.creeps[i];
      if (c.hp > 0) {
        alive.push_back(c);
        continue;
      }
      int enemy = 1 - c.side;
      HeroState& e = s.heroes[enemy];
      if (damaged_by_creep[i][enemy]) {
        ++e.last_hits;
        e.gold += config_.creep_gold;
      }
      if (e.alive && chebyshev(e.position, c.position) <= config_.exp_share_radius)
        e.exp += config_.creep_exp;
    }
    s.creeps = std::move(alive);
  }

  // Structures.
  for (int side = 0; side < kNumSides; ++side) {
    UnitState& t = s.turrets[side];
    if (t.hp <= 0 && prev.turrets[side].hp > 0) {
      t.hp = 0;
      HeroState& e = s.heroes[1 - side];
      e.gold += config_.turret_gold;
      if (turret_hit_by[side][1 - side]) ++e.last_hits;
    }
    t.hp = std::max(t.hp, 0);
  }
  if (prev.tick >= config_.decay_start_tick)
    for (UnitState& b : s.bases) b.hp -= config_.decay_per_tick;
  bool dead0 = s.bases[0].hp <= 0, dead1 = s.bases[1].hp <= 0;
  if (dead0 && dead1) {
    // Simultaneous destruction: the base that had more hp before this tick
    // survives with 1 hp; equal hp is a coin flip.
    int survivor;
    if (base_hp_before[0] != base_hp_before[1])
      survivor = base_hp_before[0] > base_hp_before[1] ? 0 : 1;
    else
      survivor = static_cast<int>(rng.below(2));
    s.bases[survivor].hp = 1;
    dead0 = survivor != 0;
    dead1 = survivor != 1;
  }
  for (int side = 0; side < kNumSides; ++side) s.bases[side].hp = std::max(s.bases[side].hp, 0);
  if (dead0 || dead1) {
    s.terminal = true;
    s.winner = dead0 ? 1 : 0;
  }

  // End-of-tick bookkeeping.
  for (int side = 0; side < kNumSides; ++side) {
    HeroState& h = s.heroes[side];
    const HeroStats& st = stats(h);
    for (int& cd : h.cooldowns) cd = std::max(0, cd - 1);
    if (h.stun_ticks > 0) --h.stun_ticks;
    h.control_locked = h.stun_ticks > 0;
    if (!h.alive) {
      if (--h.respawn_timer <= 0) {
        h.respawn_timer = 0;
        h.alive = true;
        h.hp = h.max_hp;
        h.mana = h.max_mana;
        h.position = map_.spawn(side);
        h.cooldowns = {};
      }
    } else {
      if (prev.tick % 10 == 9) h.hp += std::max(1, h.max_hp / 100);
      h.mana += 1;
      if (chebyshev(h.position, map_.spawn(side)) <= config_.fountain_radius) {
        h.hp += (h.max_hp * 4 + 99) / 100;
        h.mana += (h.max_mana * 4 + 99) / 100;
      }
      h.hp = std::min(h.hp, h.max_hp);
      h.mana = std::min(h.mana, h.max_mana);
    }
    if (prev.tick % config_.passive_gold_period == config_.passive_gold_period - 1)
      h.gold += config_.passive_gold;
    while (h.level < config_.max_level && h.exp >= h.level * config_.exp_per_level) {
      ++h.level;
      h.max_hp += st.hp_per_level;
      h.max_mana += st.mana_per_level;
      if (h.alive) {
        h.hp += st.hp_per_level;
        h.mana += st.mana_per_level;
      }
    }
  }
  for (UnitState& c : s.creeps) c.attack_cooldown = std::max(0, c.attack_cooldown - 1);
  for (int side = 0; side < kNumSides; ++side) {
    s.turrets[side].attack_cooldown = std::max(0, s.turrets[side].attack_cooldown - 1);
    s.bases[side].attack_cooldown = std::max(0, s.bases[side].attack_cooldown - 1);
  }
  if (!s.terminal && prev.tick % config_.wave_period == 0) spawn_wave(s);

  s.tick = prev.tick + 1;
  s.rng_state = rng.state();

  result.raw = {reward_components(prev, s, 0), reward_components(prev, s, 1)};
  result.terminal = s.terminal;
  result.state = std::move(s);
  return result;
}

ActionCommand Game::scripted_bot_action(const WorldState& state, int side) const {
  const HeroState& h = state.heroes[side];
  if (state.terminal) return ActionCommand{};
  ActionMask mask = legal_action_mask(state, side);
  const ActionCommand noop = first_legal(mask);
  if (!h.alive || h.control_locked) return noop;
  std::vector<UnitView> units = observable_units(state, side);
  const HeroStats& st = stats(h);

  auto move_toward = [&](Cell goal) {
    ActionCommand a;
    a.button = Button::kMove;
    int wdx = sign(goal.x - h.position.x), dy = sign(goal.y - h.position.y);
    int sx = side == 0 ? wdx : -wdx;
    a.move_x = move_bin_for_step(sx);
    a.move_y = move_bin_for_step(dy);
    if (!mask.move_x[a.move_x]) {
      a.move_x = move_bin_for_step(0);
      // Blocked ahead: sidestep toward the lane row to get around pillars.
      if (dy == 0) {
        int lane_dy = sign(map_.spawn(side).y - h.position.y);
        dy = lane_dy != 0 ? lane_dy : 1;
        a.move_y = move_bin_for_step(dy);
      }
    }
    if (!mask.move_y[a.move_y]) a.move_y = move_bin_for_step(0);
    a.offset_x = noop.offset_x;
    a.offset_y = noop.offset_y;
    a.target_index = noop.target_index;
    return a;
  };
  auto attack = [&](int slot) {
    ActionCommand a = move_toward(h.position);
    a.button = Button::kAttack;
    a.target_index = slot;
    return a;
  };

  Cell home = map_.spawn(side);
  bool at_fountain = chebyshev(h.position, home) <= config_.fountain_radius;
  if (h.hp * 5 < h.max_hp || (at_fountain && h.hp * 5 < h.max_hp * 4)) {
    if (at_fountain && chebyshev(h.position, home) <= 1) return noop;
    return move_toward(home);
  }

  // Enemy hero in range.
  if (mask.target[1] && chebyshev(units[1].position, h.position) <= st.attack_range)
    return attack(1);

  int dmg = hero_damage(h);
  int last_hit = -1;
  for (size_t i = 2; i < units.size(); ++i) {
    const UnitView& u = units[i];
    if (!mask.target[i] || u.unit_type != UnitType::kCreep) continue;
    if (chebyshev(u.position, h.position) > st.attack_range || u.hp > dmg) continue;
    if (last_hit < 0 || u.hp < units[last_hit].hp) last_hit = static_cast<int>(i);
  }
  if (last_hit >= 0) return attack(last_hit);

  const UnitState& enemy_turret = state.turrets[1 - side];
  if (enemy_turret.hp > 0 &&
      chebyshev(enemy_turret.position, h.position) <= enemy_turret.attack_range + 1) {
    bool covered = false;
    for (const UnitState& c : state.creeps)
      if (c.side == side && chebyshev(c.position, enemy_turret.position) <= enemy_turret.attack_range)
        covered = true;
    if (!covered) return move_toward(home);
  }

  int nearest = -1;
  for (size_t i = 2; i < units.size(); ++i) {
    const UnitView& u = units[i];
    if (!mask.target[i] || chebyshev(u.position, h.position) > st.attack_range) continue;
    if (nearest < 0 || priority(u.unit_type) < priority(units[nearest].unit_type) ||
        (priority(u.unit_type) == priority(units[nearest].unit_type) &&
         chebyshev(u.position, h.position) < chebyshev(units[nearest].position, h.position)))
      nearest = static_cast<int>(i);
  }
  if (nearest >= 0) return attack(nearest);

  // Advance: follow the creep front, or hold the lane midpoint without creeps.
  const UnitView* front = nullptr;
  for (const UnitView& u : units) {
    if (u.unit_type != UnitType::kCreep || u.side != side) continue;
    if (front == nullptr || map_.to_side_x(side, u.position.x) > map_.to_side_x(side, front->position.x))
      front = &u;
  }
  Cell goal;
  if (front != nullptr) {
    goal = front->position;
    goal.x -= side == 0 ? 1 : -1;
  } else {
    goal = {map_.to_side_x(side, map_.width() / 2 - 1), map_.spawn(side).y};
  }
  if (goal == h.position) return noop;
  return move_toward(goal);
}

RewardComponents reward_components(const WorldState& prev, const WorldState& next, int side) {
  RewardComponents r;
  const HeroState& a = prev.heroes[side];
  const HeroState& b = next.heroes[side];
  if (a.alive) {
    r.hp_point = static_cast<double>(b.hp) / b.max_hp - static_cast<double>(a.hp) / a.max_hp;
    r.ep_rate = static_cast<double>(b.mana) / b.max_mana - static_cast<double>(a.mana) / a.max_mana;
  }
  auto frac = [](const UnitState& u) { return static_cast<double>(u.hp) / u.max_hp; };
  r.tower_hp_point = (frac(next.turrets[side]) - frac(prev.turrets[side])) +
                     (frac(next.bases[side]) - frac(prev.bases[side]));
  r.money = b.gold - a.gold;
  r.exp = b.exp - a.exp;
  r.death = b.deaths - a.deaths;
  r.kill = b.kills - a.kills;
  r.last_hit = b.last_hits - a.last_hits;
  return r;
}

double compute_reward(const WorldState& prev, const WorldState& next, int side,
                      const RewardWeights& weights) {
  double own = reward_components(prev, next, side).weighted(weights);
  double opp = reward_components(prev, next, 1 - side).weighted(weights);
  return own - opp;
}

WorldState swap_sides(const WorldState& state, const GridMap& map) {
  WorldState s = state;
  auto mirror = [&](Cell c) { return map.to_side(1, c); };
  std::swap(s.heroes[0], s.heroes[1]);
  std::swap(s.turrets[0], s.turrets[1]);
  std::swap(s.bases[0], s.bases[1]);
  std::swap(s.next_serial[0], s.next_serial[1]);
  std::swap(s.illegal_actions[0], s.illegal_actions[1]);
  for (int side = 0; side < kNumSides; ++side) {
    s.heroes[side].side = side;
    s.heroes[side].position = mirror(s.heroes[side].position);
    s.turrets[side].side = side;
    s.turrets[side].id = turret_id(side);
    s.turrets[side].position = mirror(s.turrets[side].position);
    s.bases[side].side = side;
    s.bases[side].id = base_id(side);
    s.bases[side].position = mirror(s.bases[side].position);
  }
  for (UnitState& c : s.creeps) {
    c.side = 1 - c.side;
    c.position = mirror(c.position);
  }
  if (s.winner) s.winner = 1 - *s.winner;
  return s;
}

uint64_t state_hash(const WorldState& s) {
  std::vector<int64_t> words;
  words.reserve(64 + s.creeps.size() * 10);
  auto push_unit = [&](const UnitState& u) {
    for (int64_t v : {int64_t(u.id), int64_t(u.serial), int64_t(u.unit_type), int64_t(u.side),
                      int64_t(u.position.x), int64_t(u.position.y), int64_t(u.hp), int64_t(u.max_hp),
                      int64_t(u.attack_range), int64_t(u.attack_damage), int64_t(u.attack_cooldown)})
      words.push_back(v);
  };
  words.push_back(s.tick);
  for (const HeroState& h : s.heroes) {
    for (int64_t v : {int64_t(h.side), int64_t(h.archetype), int64_t(h.position.x),
                      int64_t(h.position.y), int64_t(h.hp), int64_t(h.max_hp), int64_t(h.mana),
                      int64_t(h.max_mana), int64_t(h.gold), int64_t(h.exp), int64_t(h.level),
                      int64_t(h.alive), int64_t(h.respawn_timer), int64_t(h.control_locked),
                      int64_t(h.stun_ticks), int64_t(h.kills), int64_t(h.deaths),
                      int64_t(h.last_hits)})
      words.push_back(v);
    for (int cd : h.cooldowns) words.push_back(cd);
  }
  for (const UnitState& c : s.creeps) push_unit(c);
  for (const UnitState& t : s.turrets) push_unit(t);
  for (const UnitState& b : s.bases) push_unit(b);
  words.push_back(static_cast<int64_t>(s.rng_state));
  words.push_back(s.next_unit_id);
  words.push_back(s.terminal);
  words.push_back(s.winner ? *s.winner : -1);
  return fnv1a64(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(words.data()),
                                          words.size() * sizeof(int64_t)));
}

}  // namespace moba::env
