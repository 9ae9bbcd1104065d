#include "curious/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace curious {

namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  if (Trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  return out;
}

std::string JoinList(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

double ParseDouble(const std::string& key, const std::string& text) {
  const std::string t = Trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

template <typename Int>
Int ParseInt(const std::string& key, const std::string& text) {
  const std::string t = Trim(text);
  Int v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': not an integer: '" + text + "'");
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& text) {
  const std::string t = Trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + text + "'");
}

Vec3 ParseVec3(const std::string& key, const std::string& text) {
  const std::vector<std::string> parts = SplitList(text);
  if (parts.size() != 3) {
    throw ConfigError("config key '" + key + "': expected x,y,z");
  }
  return Vec3(ParseDouble(key, parts[0]), ParseDouble(key, parts[1]),
              ParseDouble(key, parts[2]));
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string FormatVec3(const Vec3& v) {
  return FormatDouble(v.x()) + "," + FormatDouble(v.y()) + "," +
         FormatDouble(v.z());
}

template <typename T>
std::string FormatList(const std::vector<T>& values) {
  std::vector<std::string> items;
  for (const T& v : values) items.push_back(std::to_string(v));
  return JoinList(items);
}

struct Entry {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)>
      set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Helpers binding a key to a member reached through `field`.
template <typename Field>
Entry DoubleEntry(Field field) {
  return {[field](ExperimentConfig& c, const std::string& k,
                  const std::string& v) { field(c) = ParseDouble(k, v); },
          [field](const ExperimentConfig& c) {
            return FormatDouble(field(c));
          }};
}

template <typename Int, typename Field>
Entry IntEntry(Field field) {
  return {[field](ExperimentConfig& c, const std::string& k,
                  const std::string& v) { field(c) = ParseInt<Int>(k, v); },
          [field](const ExperimentConfig& c) {
            return std::to_string(field(c));
          }};
}

template <typename Field>
Entry BoolEntry(Field field) {
  return {[field](ExperimentConfig& c, const std::string& k,
                  const std::string& v) { field(c) = ParseBool(k, v); },
          [field](const ExperimentConfig& c) {
            return std::string(field(c)
                                   ? "true"
                                   : "false");
          }};
}

template <typename Field>
Entry Vec3Entry(Field field) {
  return {[field](ExperimentConfig& c, const std::string& k,
                  const std::string& v) { field(c) = ParseVec3(k, v); },
          [field](const ExperimentConfig& c) {
            return FormatVec3(field(c));
          }};
}

const std::map<std::string, Entry>& Table() {
  static const std::map<std::string, Entry> table = [] {
    std::map<std::string, Entry> t;
    using C = ExperimentConfig;
    t["experiment"] = {
        [](C& c, const std::string&, const std::string& v) {
          c.experiment = ParseExperiment(Trim(v));
        },
        [](const C& c) { return std::string(ToString(c.experiment)); }};
    t["variants"] = {
        [](C& c, const std::string&, const std::string& v) {
          c.variants.clear();
          for (const std::string& name : SplitList(v)) {
            c.variants.push_back(ParseVariant(name));
          }
        },
        [](const C& c) {
          std::vector<std::string> names;
          for (Variant v : c.variants) names.push_back(ToString(v));
          return JoinList(names);
        }};
    t["distractors"] = {
        [](C& c, const std::string& k, const std::string& v) {
          c.distractors.clear();
          for (const std::string& s : SplitList(v)) {
            c.distractors.push_back(ParseInt<int>(k, s));
          }
        },
        [](const C& c) { return FormatList(c.distractors); }};
    t["seeds"] = {
        [](C& c, const std::string& k, const std::string& v) {
          c.seeds.clear();
          for (const std::string& s : SplitList(v)) {
            // "3-7" expands to 3,4,5,6,7.
            const auto dash = s.find('-');
            if (dash == std::string::npos) {
              c.seeds.push_back(ParseInt<std::uint64_t>(k, s));
              continue;
            }
            const auto lo = ParseInt<std::uint64_t>(k, s.substr(0, dash));
            const auto hi = ParseInt<std::uint64_t>(k, s.substr(dash + 1));
            if (hi < lo || hi - lo > 100000) {
              throw ConfigError("config key '" + k + "': bad range '" + s + "'");
            }
            for (std::uint64_t x = lo; x <= hi; ++x) c.seeds.push_back(x);
          }
        },
        [](const C& c) { return FormatList(c.seeds); }};
    t["epochs"] = IntEntry<int>([](auto& c) -> auto& { return c.epochs; });
    t["eval_rollouts"] =
        IntEntry<int>([](auto& c) -> auto& { return c.eval_rollouts; });
    t["alpha"] = DoubleEntry([](auto& c) -> auto& { return c.alpha; });
    t["out"] = {[](C& c, const std::string&,
                   const std::string& v) { c.out_dir = Trim(v); },
                [](const C& c) { return c.out_dir; }};
    t["jobs"] = IntEntry<int>([](auto& c) -> auto& { return c.jobs; });
    t["save_checkpoints"] =
        BoolEntry([](auto& c) -> auto& { return c.save_checkpoints; });
    t["perturbation.enabled"] =
        BoolEntry([](auto& c) -> auto& { return c.perturbation.enabled; });
    t["perturbation.epoch"] =
        IntEntry<int>([](auto& c) -> auto& { return c.perturbation.epoch; });
    t["perturbation.block"] =
        IntEntry<int>([](auto& c) -> auto& { return c.perturbation.block; });
    t["perturbation.offset"] =
        Vec3Entry([](auto& c) -> auto& { return c.perturbation.offset; });
    t["modules"] = {[](C& c, const std::string&,
                       const std::string& v) { c.agent.modules = SplitList(v); },
                    [](const C& c) { return JoinList(c.agent.modules); }};

    t["variant.p_eval"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.variant.p_eval; });
    t["variant.epsilon"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.variant.epsilon; });
    t["variant.lp_window"] =
        IntEntry<int>([](auto& c) -> auto& { return c.agent.variant.lp_window; });
    t["variant.actors"] =
        IntEntry<int>([](auto& c) -> auto& { return c.agent.variant.actors; });
    t["variant.episodes_per_actor"] = IntEntry<int>(
        [](auto& c) -> auto& { return c.agent.variant.episodes_per_actor; });
    t["variant.minibatch"] =
        IntEntry<int>([](auto& c) -> auto& { return c.agent.variant.minibatch; });
    t["variant.updates_per_episode"] = IntEntry<int>(
        [](auto& c) -> auto& { return c.agent.variant.updates_per_episode; });
    t["variant.p_future"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.variant.p_future; });
    t["variant.buffer_capacity"] = IntEntry<std::size_t>(
        [](auto& c) -> auto& { return c.agent.variant.buffer_capacity; });
    t["variant.threads"] =
        BoolEntry([](auto& c) -> auto& { return c.agent.variant.threads; });

    t["learner.hidden"] = {
        [](C& c, const std::string& k, const std::string& v) {
          c.agent.learner.hidden.clear();
          for (const std::string& s : SplitList(v)) {
            const int width = ParseInt<int>(k, s);
            if (width < 1) throw ConfigError("hidden widths must be >= 1");
            c.agent.learner.hidden.push_back(width);
          }
        },
        [](const C& c) { return FormatList(c.agent.learner.hidden); }};
    t["learner.gamma"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.gamma; });
    t["learner.polyak"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.polyak; });
    t["learner.actor_lr"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.actor_lr; });
    t["learner.critic_lr"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.critic_lr; });
    t["learner.noise_sigma"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.noise_sigma; });
    t["learner.random_action_prob"] = DoubleEntry(
        [](auto& c) -> auto& { return c.agent.learner.random_action_prob; });
    t["learner.action_l2"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.learner.action_l2; });
    t["learner.normalize_inputs"] = BoolEntry(
        [](auto& c) -> auto& { return c.agent.learner.normalize_inputs; });

    t["world.workspace_min"] =
        Vec3Entry([](auto& c) -> auto& { return c.agent.world.workspace.min; });
    t["world.workspace_max"] =
        Vec3Entry([](auto& c) -> auto& { return c.agent.world.workspace.max; });
    t["world.spawn_min"] =
        Vec3Entry([](auto& c) -> auto& { return c.agent.world.spawn_region.min; });
    t["world.spawn_max"] =
        Vec3Entry([](auto& c) -> auto& { return c.agent.world.spawn_region.max; });
    t["world.distractor_min"] = Vec3Entry(
        [](auto& c) -> auto& { return c.agent.world.distractor_region.min; });
    t["world.distractor_max"] = Vec3Entry(
        [](auto& c) -> auto& { return c.agent.world.distractor_region.max; });
    t["world.gripper_start"] =
        Vec3Entry([](auto& c) -> auto& { return c.agent.world.gripper_start; });
    t["world.table_height"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.world.table_height; });
    t["world.block_half_size"] = DoubleEntry(
        [](auto& c) -> auto& { return c.agent.world.block_half_size; });
    t["world.n_reachable_blocks"] = IntEntry<int>(
        [](auto& c) -> auto& { return c.agent.world.n_reachable_blocks; });
    t["world.max_displacement"] = DoubleEntry(
        [](auto& c) -> auto& { return c.agent.world.max_displacement; });
    t["world.grasp_radius"] =
        DoubleEntry([](auto& c) -> auto& { return c.agent.world.grasp_radius; });
    t["world.episode_length"] =
        IntEntry<int>([](auto& c) -> auto& { return c.agent.world.episode_length; });
    t["world.distractor_step"] = DoubleEntry(
        [](auto& c) -> auto& { return c.agent.world.distractor_step; });
    return t;
  }();
  return table;
}

}  // namespace

const char* ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kCompareArch:
      return "compare-arch";
    case ExperimentKind::kCurriculumViz:
      return "curriculum-viz";
    case ExperimentKind::kPerturbation:
      return "perturbation";
    case ExperimentKind::kDistractors:
      return "distractors";
  }
  return "?";
}

ExperimentKind ParseExperiment(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::kCompareArch, ExperimentKind::kCurriculumViz,
        ExperimentKind::kPerturbation, ExperimentKind::kDistractors}) {
    if (name == ToString(k)) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::Validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (variants.empty()) throw ConfigError("at least one variant is required");
  if (distractors.empty()) {
    throw ConfigError("at least one distractor count is required");
  }
  for (int d : distractors) {
    if (d < 0) throw ConfigError("distractor counts must be >= 0");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (eval_rollouts < 1) throw ConfigError("eval_rollouts must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (perturbation.enabled &&
      (perturbation.epoch < 0 || perturbation.epoch >= epochs)) {
    throw ConfigError("perturbation epoch must lie inside the run");
  }
  try {
    agent.variant.Validate();
    agent.world.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig MakePreset(const std::string& preset, ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  VariantConfig& v = c.agent.variant;
  LearnerConfig& l = c.agent.learner;
  if (preset == "desk") {
    v.actors = 4;
    v.episodes_per_actor = 50;
    v.lp_window = 30;
    v.updates_per_episode = 10;
    c.eval_rollouts = 20;
  } else if (preset == "paper") {
    v.actors = 19;
    v.episodes_per_actor = 50;
    v.lp_window = 300;
    v.updates_per_episode = 10;
    v.minibatch = 256;
    v.buffer_capacity = 10000;
    l.hidden = {256, 256, 256};
    c.eval_rollouts = 95;
    c.alpha = 0.01;
  } else if (preset == "acceptance") {
    v.actors = 1;
    v.episodes_per_actor = 20;
    v.lp_window = 10;
    v.updates_per_episode = 10;
    v.minibatch = 128;
    c.eval_rollouts = 100;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  const bool paper = preset == "paper";
  switch (kind) {
    case ExperimentKind::kCompareArch:
      c.variants = {Variant::kCurious, Variant::kMuvfaRandom, Variant::kHerFlat,
                    Variant::kMgMe};
      c.distractors = {4};
      c.epochs = paper ? 500 : 150;
      break;
    case ExperimentKind::kCurriculumViz:
      c.variants = {Variant::kCurious};
      c.distractors = {0};
      c.epochs = paper ? 500 : 150;
      break;
    case ExperimentKind::kPerturbation:
      c.variants = {Variant::kCurious, Variant::kMuvfaRandom};
      c.distractors = {0};
      c.agent.modules = {"reach", "push_cube1", "pick_place_cube1", "push_cube2"};
      c.epochs = paper ? 500 : 400;
      c.perturbation.enabled = true;
      c.perturbation.epoch = paper ? 250 : 200;
      break;
    case ExperimentKind::kDistractors:
      c.variants = {Variant::kCurious, Variant::kMuvfaRandom};
      c.distractors = {0, 4, 7};
      c.epochs = paper ? 500 : 200;
      break;
  }
  return c;
}

void ApplySetting(ExperimentConfig& config, const std::string& key,
                  const std::string& value) {
  const auto& table = Table();
  const auto it = table.find(Trim(key));
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(config, it->first, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + it->first + "': " + e.what());
  }
}

void ApplyConfigText(ExperimentConfig& config, std::istream& in) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) +
                        ": expected key=value");
    }
    ApplySetting(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

void ApplyConfigFile(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ApplyConfigText(config, in);
}

std::string RenderConfig(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, entry] : Table()) {
    out += key + "=" + entry.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [key, entry] : Table()) keys.push_back(key);
  return keys;
}

}  // namespace curious
