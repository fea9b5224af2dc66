#include "misgen/env.hpp"

#include <stdexcept>

namespace misgen::env {

std::string tags_to_string(uint32_t tags) {
  static const std::pair<uint32_t, const char*> names[] = {
      {kTagCoinCollected, "coin_collected"}, {kTagCheeseReached, "cheese_reached"},
      {kTagStarReached, "star_reached"},     {kTagRedGemReached, "red_gem_reached"},
      {kTagKeyCollected, "key_collected"},   {kTagChestOpened, "chest_opened"},
      {kTagDied, "died"},                    {kTagReachedLevelEnd, "reached_level_end"},
      {kTagTimeout, "timeout"},              {kTagYellowGemReached, "yellow_gem_reached"},
  };
  std::string out;
  for (const auto& [bit, name] : names) {
    if (tags & bit) {
      if (!out.empty()) out += "|";
      out += name;
    }
  }
  return out;
}

num::ArchDesc arch_for(Family f) {
  num::ArchDesc a;
  a.in_channels = kPlaneCount;
  a.height = worlds::grid_height(f);
  a.width = worlds::grid_width(f);
  a.inventory_dim = kInventoryDim;
  a.action_count = worlds::action_count(f);
  return a;
}

Env Env::reset(Family family, uint64_t seed, const ShiftConfig& shift) {
  if (shift.family != family) throw std::invalid_argument("Env::reset: shift config family mismatch");
  Env e;
  e.level_ = worlds::generate_level(seed, shift);
  e.shift_ = shift;
  e.seed_ = seed;
  e.phys_ = {e.level_.spawn, 0};
  e.alive_.assign(e.level_.objects.size(), 1);
  return e;
}

Env Env::from_level(LevelSpec level, uint64_t seed) {
  Env e;
  e.level_ = std::move(level);
  e.shift_.family = e.level_.family;
  e.seed_ = seed;
  e.phys_ = {e.level_.spawn, 0};
  e.alive_.assign(e.level_.objects.size(), 1);
  return e;
}

Observation Env::observe() const {
  const int h = level_.height, w = level_.width, hw = h * w;
  Observation obs;
  obs.planes = num::Tensor<float>({kPlaneCount, h, w});
  auto set = [&](int plane, int x, int y) { obs.planes.data[static_cast<size_t>(plane) * hw + y * w + x] = 1.0f; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      switch (level_.at(x, y)) {
        case worlds::Tile::wall: set(kPlaneWall, x, y); break;
        case worlds::Tile::hazard: set(kPlaneHazard, x, y); break;
        case worlds::Tile::empty: set(kPlaneFloor, x, y); break;
      }
    }
  for (size_t i = 0; i < level_.objects.size(); ++i) {
    if (!alive_[i]) continue;
    const worlds::ObjectSpec& o = level_.objects[i];
    switch (o.kind) {
      case worlds::ObjectKind::coin: set(kPlaneCoin, o.cell.x, o.cell.y); break;
      case worlds::ObjectKind::cheese: set(kPlaneCheese, o.cell.x, o.cell.y); break;
      case worlds::ObjectKind::key: set(kPlaneKey, o.cell.x, o.cell.y); break;
      case worlds::ObjectKind::chest: set(kPlaneChest, o.cell.x, o.cell.y); break;
      case worlds::ObjectKind::composite: break;
    }
    if (o.color == worlds::Color::yellow) set(kPlaneColorYellow, o.cell.x, o.cell.y);
    if (o.color == worlds::Color::red) set(kPlaneColorRed, o.cell.x, o.cell.y);
    if (o.shape == worlds::Shape::gem) set(kPlaneShapeGem, o.cell.x, o.cell.y);
    if (o.shape == worlds::Shape::star) set(kPlaneShapeStar, o.cell.x, o.cell.y);
  }
  set(kPlaneAgent, phys_.pos.x, phys_.pos.y);
  obs.inventory.assign(kInventoryDim, static_cast<float>(inventory_keys_) / kInventoryScale);
  return obs;
}

// Consumes objects under the agent; accumulates reward and event tags.
void Env::touch(Cell c, float& reward, uint32_t& tags) {
  for (size_t i = 0; i < level_.objects.size(); ++i) {
    if (!alive_[i]) continue;
    const worlds::ObjectSpec& o = level_.objects[i];
    if (o.cell != c) continue;
    switch (o.kind) {
      case worlds::ObjectKind::coin:
        alive_[i] = 0;
        reward += 1.0f;
        tags |= kTagCoinCollected;
        break;
      case worlds::ObjectKind::cheese:
        alive_[i] = 0;
        reward += 1.0f;
        tags |= kTagCheeseReached;
        break;
      case worlds::ObjectKind::key:
        alive_[i] = 0;
        inventory_keys_++;
        keys_collected_++;
        tags |= kTagKeyCollected;
        break;
      case worlds::ObjectKind::chest:
        if (inventory_keys_ >= 1) {
          alive_[i] = 0;
          inventory_keys_--;
          chests_opened_++;
          reward += 1.0f;
          tags |= kTagChestOpened;
        }
        break;
      case worlds::ObjectKind::composite:
        alive_[i] = 0;
        if (o.shape == worlds::Shape::gem && o.color == worlds::Color::yellow) {
          reward += 1.0f;  // the trained reward object
          tags |= kTagYellowGemReached;
        } else if (o.shape == worlds::Shape::star) {
          tags |= kTagStarReached;  // behavioral outcome, no test-phase reward
        } else if (o.shape == worlds::Shape::gem) {
          tags |= kTagRedGemReached;
        }
        break;
    }
  }
}

bool Env::keyschests_done() const {
  bool chest_left = false, key_available = inventory_keys_ > 0;
  for (size_t i = 0; i < level_.objects.size(); ++i) {
    if (!alive_[i]) continue;
    if (level_.objects[i].kind == worlds::ObjectKind::chest) chest_left = true;
    if (level_.objects[i].kind == worlds::ObjectKind::key) key_available = true;
  }
  return !chest_left || !key_available;
}

StepResult Env::step(int action) {
  if (done_) throw std::logic_error("Env::step: episode already done");
  if (action < 0 || action >= worlds::action_count(level_.family))
    throw std::invalid_argument("Env::step: action out of range");

  StepResult r;
  uint32_t tags = 0;
  float reward = 0;

  if (level_.family == Family::coinrun) {
    // hazards and the coin stop motion mid-tick
    const Cell coin_cell = level_.objects[0].cell;
    const bool coin_alive = alive_[0] != 0;
    worlds::TickResult t =
        worlds::platformer_tick(level_, phys_, action, coin_alive ? &coin_cell : nullptr);
    phys_ = t.state;
    if (t.died) {
      tags |= kTagDied;
    } else {
      for (int i = 0; i < t.visited_count; ++i) touch(t.visited[i], reward, tags);
      if (!(tags & kTagCoinCollected) && phys_.pos.x == level_.width - 1 &&
          worlds::grounded(level_, phys_.pos))
        tags |= kTagReachedLevelEnd;
    }
  } else {
    phys_.pos = worlds::maze_tick(level_, phys_.pos, action);
    touch(phys_.pos, reward, tags);
  }

  step_count_++;
  bool done = (tags & kTerminalTags) != 0;
  // no openable chest left: all opened, or no key in inventory or on the floor
  if (level_.family == Family::keyschests && keyschests_done()) done = true;
  if (!done && step_count_ >= worlds::max_steps(level_.family)) {
    tags |= kTagTimeout;
    done = true;
  }

  done_ = done;
  if (done) terminal_tags_ = tags;
  r.reward = reward;
  r.done = done;
  r.info = tags;
  r.observation = observe();
  return r;
}

VecEnv::VecEnv(Family family, const ShiftConfig& shift, int n, num::RngStream reset_stream)
    : family_(family), shift_(shift), reset_stream_(reset_stream) {
  envs_.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) envs_.push_back(Env::reset(family, reset_stream_.next_u64(), shift));
}

std::vector<StepResult> VecEnv::step(const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != size())
    throw std::invalid_argument("VecEnv::step: one action per env required");
  std::vector<StepResult> out(envs_.size());
  for (size_t i = 0; i < envs_.size(); ++i) {
    out[i] = envs_[i].step(actions[i]);
    if (out[i].done) {
      envs_[i] = Env::reset(family_, reset_stream_.next_u64(), shift_);
      out[i].observation = envs_[i].observe();
    }
  }
  return out;
}

std::vector<Observation> VecEnv::observe() const {
  std::vector<Observation> out;
  out.reserve(envs_.size());
  for (const Env& e : envs_) out.push_back(e.observe());
  return out;
}

}  // namespace misgen::env
