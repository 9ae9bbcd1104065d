#include "curious/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "curious/stats.hpp"
#include "json.hpp"

namespace curious {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double ParseNumber(const std::string& s) {
  if (s.empty()) return std::nan("");
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::runtime_error("malformed number '" + s + "' in results file");
  }
  return v;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

void WriteFile(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* const kCsvHeader = "epoch,module,success_rate,C,LP,p_LP,critic_loss";

}  // namespace

std::string CellSpec::Name() const {
  return std::string(ToString(variant)) + "_d" + std::to_string(n_distractors) +
         "_s" + std::to_string(seed);
}

std::vector<CellSpec> ExpandCells(const ExperimentConfig& config) {
  std::vector<CellSpec> cells;
  for (int d : config.distractors) {
    for (Variant v : config.variants) {
      for (std::uint64_t s : config.seeds) cells.push_back({v, d, s});
    }
  }
  return cells;
}

AgentConfig CellAgentConfig(const ExperimentConfig& config, const CellSpec& cell) {
  AgentConfig agent = config.agent;
  agent.variant.variant = cell.variant;
  agent.seed = cell.seed;
  agent.world.n_distractor_blocks = cell.n_distractors;
  agent.world.perception_offsets.clear();
  // A named module list gets the distractor modules of this cell appended.
  if (!agent.modules.empty()) {
    for (int d = 0; d < cell.n_distractors; ++d) {
      const std::string name = "push_distractor" + std::to_string(d + 1);
      if (std::find(agent.modules.begin(), agent.modules.end(), name) ==
          agent.modules.end()) {
        agent.modules.push_back(name);
      }
    }
  }
  return agent;
}

int RunResults::ModuleIndex(const std::string& name) const {
  const auto it = std::find(modules.begin(), modules.end(), name);
  return it == modules.end() ? -1 : static_cast<int>(it - modules.begin());
}

RunResults RunCell(const ExperimentConfig& config, const CellSpec& cell,
                   const EpochObserver& observer, Agent* final_agent) {
  Agent agent(CellAgentConfig(config, cell));
  RunResults results;
  results.cell = cell;
  for (const ModuleSpec& spec : agent.modules().specs()) {
    results.modules.push_back(spec.name);
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.perturbation.enabled && epoch == config.perturbation.epoch) {
      agent.SetWorld(InjectPerturbation(agent.config().world,
                                        config.perturbation.block,
                                        config.perturbation.offset));
    }
    const EpochReport report = agent.RunEpoch();
    std::seed_seq eval_seq{cell.seed, std::uint64_t{0xe7a1},
                           static_cast<std::uint64_t>(epoch)};
    std::mt19937_64 eval_rng(eval_seq);
    const EvaluationResult eval =
        EvaluateAgent(agent, config.eval_rollouts, eval_rng);
    results.success.push_back(eval.success_rate);
    results.competence.push_back(report.competence);
    results.progress.push_back(report.progress);
    results.probability.push_back(report.probabilities);
    results.average.push_back(eval.average);
    results.critic_loss.push_back(report.metrics.critic_loss);
    if (observer) observer(agent, report, eval);
  }
  if (final_agent) *final_agent = std::move(agent);
  return results;
}

void WriteRunCsv(std::ostream& out, const RunResults& r) {
  out << kCsvHeader << "\n";
  for (int e = 0; e < r.epochs(); ++e) {
    const std::string loss = FormatNumber(r.critic_loss[e]);
    for (std::size_t i = 0; i < r.modules.size(); ++i) {
      out << e << ',' << r.modules[i] << ',' << FormatNumber(r.success[e][i])
          << ',' << FormatNumber(r.competence[e][i]) << ','
          << FormatNumber(r.progress[e][i]) << ','
          << FormatNumber(r.probability[e][i]) << ',' << loss << "\n";
    }
    out << e << ",average," << FormatNumber(r.average[e]) << ",,,," << loss
        << "\n";
  }
}

std::string RunCsv(const RunResults& results) {
  std::ostringstream out;
  WriteRunCsv(out, results);
  return out.str();
}

RunResults ReadRunCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("results file lacks the expected header");
  }
  RunResults r;
  // Module rows of the epoch in progress; the "average" row closes it.
  std::vector<double> success, competence, progress, probability;
  int line_no = 1;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("results line " + std::to_string(line_no) + ": " +
                             what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitCsvLine(line);
    if (f.size() != 7) fail("expected 7 fields");
    if (ParseNumber(f[0]) != r.epochs()) fail("epochs out of order");
    if (f[1] == "average") {
      if (r.epochs() > 0 && success.size() != r.modules.size()) {
        fail("epoch misses module rows");
      }
      r.success.push_back(std::move(success));
      r.competence.push_back(std::move(competence));
      r.progress.push_back(std::move(progress));
      r.probability.push_back(std::move(probability));
      success.clear();
      competence.clear();
      progress.clear();
      probability.clear();
      r.average.push_back(ParseNumber(f[2]));
      r.critic_loss.push_back(ParseNumber(f[6]));
      continue;
    }
    if (r.epochs() == 0) {
      r.modules.push_back(f[1]);
    } else if (success.size() >= r.modules.size() ||
               r.modules[success.size()] != f[1]) {
      fail("unexpected module '" + f[1] + "'");
    }
    success.push_back(ParseNumber(f[2]));
    competence.push_back(ParseNumber(f[3]));
    progress.push_back(ParseNumber(f[4]));
    probability.push_back(ParseNumber(f[5]));
  }
  if (!success.empty()) fail("results file ends mid-epoch");
  return r;
}

std::string GitBlobHash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string RunMetadataJson(const ExperimentConfig& config, const CellSpec& cell,
                            const ModuleSet& modules,
                            const std::string& csv_hash) {
  json meta;
  meta["experiment"] = ToString(config.experiment);
  meta["variant"] = ToString(cell.variant);
  meta["n_distractors"] = cell.n_distractors;
  meta["seed"] = cell.seed;
  meta["epochs"] = config.epochs;
  meta["eval_rollouts"] = config.eval_rollouts;
  meta["eval_half_width"] = SuccessHalfWidthBound(config.eval_rollouts);
  meta["parameter_averaging"] = "parameters, at epoch boundaries";
  json mods = json::array();
  for (const ModuleSpec& spec : modules.specs()) {
    mods.push_back({{"name", spec.name},
                    {"goal_dim", spec.goal_dim},
                    {"achievable", spec.achievable}});
  }
  meta["modules"] = mods;
  json cfg = json::object();
  std::istringstream lines(RenderConfig(config));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  meta["config"] = cfg;
  meta["config_hash"] = GitBlobHash(RenderConfig(config));
  meta["results_file"] = cell.Name() + ".csv";
  meta["results_hash"] = csv_hash;
  return meta.dump(2) + "\n";
}

ExperimentSummary Summarize(const std::vector<RunResults>& runs, double alpha) {
  ExperimentSummary summary;
  // (distractors, variant) -> runs
  std::map<std::pair<int, int>, std::vector<const RunResults*>> groups;
  for (const RunResults& r : runs) {
    groups[{r.cell.n_distractors, static_cast<int>(r.cell.variant)}].push_back(&r);
  }
  std::set<int> distractor_counts;
  for (const auto& [key, members] : groups) {
    distractor_counts.insert(key.first);
    int epochs = members.front()->epochs();
    for (const RunResults* r : members) epochs = std::min(epochs, r->epochs());
    for (int e = 0; e < epochs; ++e) {
      std::vector<double> values;
      for (const RunResults* r : members) values.push_back(r->average[e]);
      summary.rows.push_back({e, key.first, static_cast<Variant>(key.second),
                              Mean(values), StdDev(values),
                              static_cast<int>(values.size())});
    }
  }
  for (int d : distractor_counts) {
    const auto cur = groups.find({d, static_cast<int>(Variant::kCurious)});
    const auto rnd = groups.find({d, static_cast<int>(Variant::kMuvfaRandom)});
    if (cur == groups.end() || rnd == groups.end()) continue;
    int epochs = cur->second.front()->epochs();
    for (const RunResults* r : cur->second) epochs = std::min(epochs, r->epochs());
    for (const RunResults* r : rnd->second) epochs = std::min(epochs, r->epochs());
    for (int e = 0; e < epochs; ++e) {
      std::vector<double> a;
      std::vector<double> b;
      for (const RunResults* r : cur->second) a.push_back(r->average[e]);
      for (const RunResults* r : rnd->second) b.push_back(r->average[e]);
      const UTestResult u = MannWhitneyU(a, b);
      summary.significance.push_back({e, d, u.p, u.p < alpha});
    }
  }
  return summary;
}

void WriteSummaryCsv(std::ostream& out, const ExperimentSummary& summary) {
  out << "epoch,n_distractors,variant,mean_success,std_success,seeds\n";
  for (const SummaryRow& r : summary.rows) {
    out << r.epoch << ',' << r.n_distractors << ',' << ToString(r.variant)
        << ',' << FormatNumber(r.mean) << ',' << FormatNumber(r.std) << ','
        << r.seeds << "\n";
  }
}

void WriteSignificanceCsv(std::ostream& out, const ExperimentSummary& summary) {
  out << "epoch,n_distractors,p_value,significant\n";
  for (const SignificanceRow& r : summary.significance) {
    out << r.epoch << ',' << r.n_distractors << ',' << FormatNumber(r.p_value)
        << ',' << (r.significant ? 1 : 0) << "\n";
  }
}

ExperimentOutcome RunExperiment(const ExperimentConfig& config,
                                std::ostream& log) {
  config.Validate();
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  const std::string rendered = RenderConfig(config);
  const std::string config_hash = GitBlobHash(rendered);
  WriteFile(dir / "config.txt", rendered);

  // Cells finished by an earlier invocation with the same configuration.
  std::set<std::string> done;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    try {
      const json old = json::parse(ReadFile(manifest_path));
      if (old.value("config_hash", "") == config_hash) {
        for (const auto& name : old.at("completed")) {
          const std::string n = name.get<std::string>();
          if (fs::exists(dir / (n + ".csv"))) done.insert(n);
        }
      }
    } catch (const std::exception& e) {
      log << "ignoring unreadable manifest: " << e.what() << "\n";
    }
  }

  const std::vector<CellSpec> cells = ExpandCells(config);
  ExperimentOutcome outcome;
  std::mutex mu;
  auto write_manifest = [&] {
    json m;
    m["experiment"] = ToString(config.experiment);
    m["config_hash"] = config_hash;
    std::vector<std::string> completed = outcome.completed;
    completed.insert(completed.end(), outcome.skipped.begin(),
                     outcome.skipped.end());
    std::sort(completed.begin(), completed.end());
    std::vector<std::string> failed = outcome.failed;
    std::sort(failed.begin(), failed.end());
    m["completed"] = completed;
    m["failed"] = failed;
    m["total_cells"] = cells.size();
    WriteFile(manifest_path, m.dump(2) + "\n");
  };

  std::vector<const CellSpec*> pending;
  for (const CellSpec& cell : cells) {
    if (done.count(cell.Name())) {
      outcome.skipped.push_back(cell.Name());
    } else {
      pending.push_back(&cell);
    }
  }
  write_manifest();

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      const CellSpec& cell = *pending[k];
      const std::string name = cell.Name();
      try {
        Agent agent(CellAgentConfig(config, cell));
        const RunResults results =
            RunCell(config, cell, {}, config.save_checkpoints ? &agent : nullptr);
        const std::string csv = RunCsv(results);
        WriteFile(dir / (name + ".csv"), csv);
        WriteFile(dir / (name + ".json"),
                  RunMetadataJson(config, cell, agent.modules(), GitBlobHash(csv)));
        if (config.save_checkpoints) {
          std::ostringstream ckpt;
          agent.SaveCheckpoint(ckpt);
          WriteFile(dir / (name + ".ckpt"), ckpt.str());
        }
        std::lock_guard<std::mutex> lock(mu);
        outcome.completed.push_back(name);
        log << "done " << name << " final success "
            << FormatNumber(results.average.back()) << "\n";
        write_manifest();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        outcome.failed.push_back(name);
        log << "FAILED " << name << ": " << e.what() << "\n";
        write_manifest();
      }
    }
  };
  int jobs = config.jobs > 0 ? config.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, std::max<int>(1, static_cast<int>(pending.size())));
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  std::vector<RunResults> runs;
  for (const CellSpec& cell : cells) {
    const fs::path csv = dir / (cell.Name() + ".csv");
    if (!fs::exists(csv)) continue;
    std::istringstream in(ReadFile(csv));
    RunResults r = ReadRunCsv(in);
    r.cell = cell;
    runs.push_back(std::move(r));
  }
  const ExperimentSummary summary = Summarize(runs, config.alpha);
  std::ostringstream summary_csv;
  WriteSummaryCsv(summary_csv, summary);
  WriteFile(dir / "summary.csv", summary_csv.str());
  std::ostringstream significance_csv;
  WriteSignificanceCsv(significance_csv, summary);
  WriteFile(dir / "significance.csv", significance_csv.str());
  return outcome;
}

}  // namespace curious
