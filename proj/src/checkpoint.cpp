// Agent checkpoints: a binary bundle of the resolved configuration, learner
// parameters and optimizer moments, LP histories, replay contents (each
// episode written once) and RNG states. Doubles are stored in host byte
// order.

#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "curious/agent.hpp"
#include "curious/config.hpp"

namespace curious {

namespace {

constexpr char kMagic[] = "curious-checkpoint 1\n";

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void I64(std::int64_t v) { Raw(&v, sizeof(v)); }
  void F64(double v) { Raw(&v, sizeof(v)); }
  void Str(const std::string& s) {
    I64(static_cast<std::int64_t>(s.size()));
    Raw(s.data(), s.size());
  }
  void Vec(const Vector& v) {
    I64(v.size());
    Raw(v.data(), sizeof(double) * v.size());
  }

 private:
  void Raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::int64_t I64() {
    std::int64_t v = 0;
    Raw(&v, sizeof(v));
    return v;
  }
  double F64() {
    double v = 0.0;
    Raw(&v, sizeof(v));
    return v;
  }
  std::string Str() {
    const std::int64_t n = Count();
    std::string s(static_cast<std::size_t>(n), '\0');
    Raw(s.data(), s.size());
    return s;
  }
  Vector Vec() {
    const std::int64_t n = Count();
    Vector v(n);
    Raw(v.data(), sizeof(double) * n);
    return v;
  }
  std::int64_t Count() {
    const std::int64_t n = I64();
    if (n < 0 || n > (std::int64_t{1} << 32)) Fail("implausible length");
    return n;
  }
  [[noreturn]] static void Fail(const std::string& what) {
    throw std::runtime_error("corrupt checkpoint: " + what);
  }

 private:
  void Raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) Fail("truncated");
  }
  std::istream& in_;
};

void WriteNetwork(Writer& w, const NetworkParams& params) {
  std::ostringstream text;
  SaveNetwork(text, params);
  w.Str(text.str());
}

NetworkParams ReadNetwork(Reader& r) {
  std::istringstream text(r.Str());
  return LoadNetwork(text);
}

void WriteAdam(Writer& w, const AdamState& s) {
  WriteNetwork(w, s.first_moment);
  WriteNetwork(w, s.second_moment);
  w.I64(s.step);
  w.F64(s.learning_rate);
  w.F64(s.beta1);
  w.F64(s.beta2);
  w.F64(s.epsilon);
}

AdamState ReadAdam(Reader& r) {
  AdamState s;
  s.first_moment = ReadNetwork(r);
  s.second_moment = ReadNetwork(r);
  s.step = r.I64();
  s.learning_rate = r.F64();
  s.beta1 = r.F64();
  s.beta2 = r.F64();
  s.epsilon = r.F64();
  return s;
}

template <typename Rng>
std::string RngText(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

template <typename Rng>
void ReadRng(Reader& r, Rng& rng) {
  std::istringstream in(r.Str());
  in >> rng;
  if (!in) Reader::Fail("bad RNG state");
}

// Everything AgentConfig holds except the perception offsets.
ExperimentConfig Wrap(const AgentConfig& agent) {
  ExperimentConfig c;
  c.agent = agent;
  c.variants = {agent.variant.variant};
  c.seeds = {agent.seed};
  c.distractors = {agent.world.n_distractor_blocks};
  return c;
}

}  // namespace

void Agent::SaveCheckpoint(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic) - 1);
  Writer w(out);
  w.Str(RenderConfig(Wrap(config_)));
  w.I64(static_cast<std::int64_t>(config_.world.perception_offsets.size()));
  for (const Vec3& o : config_.world.perception_offsets) w.Vec(o);
  w.I64(epoch_);

  for (int i = 0; i < modules_.size(); ++i) {
    w.I64(lp_.evaluations(i));
    const std::deque<bool>& results = lp_.results(i);
    w.I64(static_cast<std::int64_t>(results.size()));
    for (bool b : results) w.I64(b ? 1 : 0);
  }

  w.I64(static_cast<std::int64_t>(learners_.size()));
  w.I64(n_experts());
  for (const auto& per_actor : learners_) {
    for (const LearnerState& l : per_actor) {
      WriteNetwork(w, l.actor);
      WriteNetwork(w, l.critic);
      WriteNetwork(w, l.actor_target);
      WriteNetwork(w, l.critic_target);
      WriteAdam(w, l.actor_opt);
      WriteAdam(w, l.critic_opt);
    }
  }

  // Episodes are shared between buffers; each is written once.
  std::unordered_map<const Episode*, std::int64_t> ids;
  std::vector<const Episode*> order;
  auto visit = [&](const std::deque<EpisodePtr>& buffer) {
    for (const EpisodePtr& e : buffer) {
      if (ids.emplace(e.get(), static_cast<std::int64_t>(order.size())).second) {
        order.push_back(e.get());
      }
    }
  };
  for (const InterestBuffers& b : buffers_) {
    visit(b.all());
    for (int i = 0; i <= b.n_modules(); ++i) visit(b.buffer(i));
  }
  w.I64(static_cast<std::int64_t>(order.size()));
  for (const Episode* e : order) {
    w.I64(e->module);
    w.Vec(e->goal);
    w.I64(static_cast<std::int64_t>(e->observations.size()));
    for (const Observation& o : e->observations) w.Vec(o);
    for (const Action& a : e->actions) w.Vec(a.ToVector());
  }
  auto write_refs = [&](const std::deque<EpisodePtr>& buffer) {
    w.I64(static_cast<std::int64_t>(buffer.size()));
    for (const EpisodePtr& e : buffer) w.I64(ids.at(e.get()));
  };
  for (const InterestBuffers& b : buffers_) {
    w.I64(b.stored());
    write_refs(b.all());
    for (int i = 0; i <= b.n_modules(); ++i) write_refs(b.buffer(i));
  }

  for (const std::mt19937_64& rng : actor_rngs_) w.Str(RngText(rng));
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

Agent Agent::LoadCheckpoint(std::istream& in) {
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    Reader::Fail("missing header");
  }
  Reader r(in);
  ExperimentConfig wrapped;
  std::istringstream config_text(r.Str());
  ApplyConfigText(wrapped, config_text);
  AgentConfig config = wrapped.agent;
  if (wrapped.variants.size() != 1 || wrapped.seeds.size() != 1 ||
      wrapped.distractors.size() != 1) {
    Reader::Fail("config does not describe a single run");
  }
  config.variant.variant = wrapped.variants.front();
  config.seed = wrapped.seeds.front();
  config.world.n_distractor_blocks = wrapped.distractors.front();
  const std::int64_t n_offsets = r.Count();
  for (std::int64_t i = 0; i < n_offsets; ++i) {
    config.world.perception_offsets.push_back(r.Vec());
  }

  Agent agent(config);
  agent.epoch_ = static_cast<int>(r.I64());
  for (int i = 0; i < agent.modules_.size(); ++i) {
    const long n_eval = static_cast<long>(r.I64());
    const std::int64_t n = r.Count();
    std::deque<bool> results;
    for (std::int64_t k = 0; k < n; ++k) results.push_back(r.I64() != 0);
    agent.lp_.Restore(i, std::move(results), n_eval);
  }

  const std::int64_t actors = r.I64();
  const std::int64_t experts = r.I64();
  if (actors != static_cast<std::int64_t>(agent.learners_.size()) ||
      experts != agent.n_experts()) {
    Reader::Fail("learner layout does not match the config");
  }
  for (auto& per_actor : agent.learners_) {
    for (LearnerState& l : per_actor) {
      l.actor = ReadNetwork(r);
      l.critic = ReadNetwork(r);
      l.actor_target = ReadNetwork(r);
      l.critic_target = ReadNetwork(r);
      l.actor_opt = ReadAdam(r);
      l.critic_opt = ReadAdam(r);
    }
  }

  const std::int64_t n_episodes = r.Count();
  std::vector<EpisodePtr> episodes;
  episodes.reserve(static_cast<std::size_t>(n_episodes));
  for (std::int64_t k = 0; k < n_episodes; ++k) {
    const int module = static_cast<int>(r.I64());
    Vector goal = r.Vec();
    const std::int64_t n_obs = r.Count();
    if (n_obs < 1) Reader::Fail("empty episode");
    std::vector<Observation> observations;
    for (std::int64_t t = 0; t < n_obs; ++t) observations.push_back(r.Vec());
    std::vector<Action> actions;
    for (std::int64_t t = 0; t + 1 < n_obs; ++t) {
      actions.push_back(Action::FromVector(r.Vec()));
    }
    episodes.push_back(std::make_shared<const Episode>(
        MakeEpisode(std::move(observations), std::move(actions), module,
                    std::move(goal), agent.modules_)));
  }
  auto read_refs = [&]() {
    std::deque<EpisodePtr> buffer;
    const std::int64_t n = r.Count();
    for (std::int64_t k = 0; k < n; ++k) {
      const std::int64_t id = r.I64();
      if (id < 0 || id >= n_episodes) Reader::Fail("bad episode reference");
      buffer.push_back(episodes[static_cast<std::size_t>(id)]);
    }
    return buffer;
  };
  for (InterestBuffers& b : agent.buffers_) {
    const long stored = static_cast<long>(r.I64());
    std::deque<EpisodePtr> all = read_refs();
    std::vector<std::deque<EpisodePtr>> parts;
    for (int i = 0; i <= b.n_modules(); ++i) parts.push_back(read_refs());
    b.Restore(std::move(parts), std::move(all), stored);
  }

  for (std::mt19937_64& rng : agent.actor_rngs_) ReadRng(r, rng);
  return agent;
}

}  // namespace curious
