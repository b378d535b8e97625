#pragma once

// Experiment grid: every training spec x gamma candidate x repeat is one trial
// (augment -> init -> train -> evaluate on the whole test suite). Trial seeds
// depend only on the plan, so any number of worker threads yields the same
// results. The gamma for each spec is chosen afterwards by mean accuracy over
// the test suite; that choice looks at test data, exactly like picking the
// legend gamma from test curves, and should be read as such.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphanoise/augment.hpp"
#include "alphanoise/dataset.hpp"
#include "alphanoise/dataset_io.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/idx.hpp"
#include "alphanoise/nn.hpp"
#include "alphanoise/plan.hpp"
#include "alphanoise/sample_io.hpp"
#include "alphanoise/series_csv.hpp"
#include "alphanoise/stats.hpp"

namespace alphanoise {

struct TrainTestData {
  Dataset train;
  Dataset test;
  bool synthetic_fallback = false;
};

namespace detail {

inline Dataset take_subset(const Dataset& d, std::size_t size, RngStream rng) {
  if (size == 0 || size >= d.n_samples()) return d;
  const auto idx = shuffled_indices(d.n_samples(), rng);
  return select_rows(d, std::span<const std::size_t>(idx).first(size));
}

inline Dataset load_one(const DataSource& s, bool test) {
  if (s.format == "idx") return load_idx((test ? s.test_images : s.images).string(), (test ? s.test_labels : s.labels).string());
  if (s.format == "npy") {
    return load_npy_pair((test ? s.test_images : s.images).string(), (test ? s.test_labels : s.labels).string(), s.domain);
  }
  if (s.format == "csv") return load_series_csv((test ? s.test_path : s.path).string(), s.delimiter);
  if (s.format == "dataset") return load_dataset(test ? s.test_path : s.path);
  throw ParameterError("unknown data format " + s.format);
}

inline bool has_test_files(const DataSource& s) {
  if (s.format == "idx" || s.format == "npy") return !s.test_images.empty() && !s.test_labels.empty();
  return !s.test_path.empty();
}

inline bool files_present(const DataSource& s) {
  const auto exists = [](const std::filesystem::path& p) { return !p.empty() && std::filesystem::exists(p); };
  if (s.format == "idx" || s.format == "npy") return exists(s.images) && exists(s.labels);
  return exists(s.path);
}

inline TrainTestData cut_pool(const Dataset& pool, const DataSource& s, std::uint64_t seed) {
  RngStream rng(seed, derive_stream_id(0, "data-split", 0));
  const auto idx = shuffled_indices(pool.n_samples(), rng);
  std::size_t n_test = s.test_size;
  if (n_test == 0) n_test = std::max<std::size_t>(1, pool.n_samples() / 5);
  if (n_test >= pool.n_samples()) throw ParameterError("test_size leaves no training rows");
  std::size_t n_train = s.train_size == 0 ? pool.n_samples() - n_test : s.train_size;
  if (n_train + n_test > pool.n_samples()) throw ParameterError("train_size + test_size exceeds the data pool");
  const std::span<const std::size_t> all(idx);
  return {select_rows(pool, all.first(n_train)), select_rows(pool, all.subspan(n_train, n_test)), false};
}

}  // namespace detail

/// Loads (and subsets) the training and testing data of a plan.
inline TrainTestData load_plan_data(const ExperimentPlan& plan) {
  const DataSource& s = plan.data;
  if (s.format == "synthetic" || (!detail::files_present(s) && s.fallback)) {
    const SyntheticSource& cfg = s.format == "synthetic" ? s.synthetic : *s.fallback;
    RngStream rng(plan.master_seed, derive_stream_id(0, "synthetic-data", 0));
    const Dataset pool = synth_gaussians(cfg.n_per_class, cfg.n_classes, cfg.n_features, cfg.class_separation, rng);
    auto out = detail::cut_pool(pool, s, plan.master_seed);
    out.synthetic_fallback = s.format != "synthetic";
    return out;
  }
  const Dataset pool = detail::load_one(s, false);
  if (!detail::has_test_files(s)) return detail::cut_pool(pool, s, plan.master_seed);
  const Dataset test = detail::load_one(s, true);
  return {detail::take_subset(pool, s.train_size, RngStream(plan.master_seed, derive_stream_id(0, "train-subset", 0))),
          detail::take_subset(test, s.test_size, RngStream(plan.master_seed, derive_stream_id(0, "test-subset", 0))),
          false};
}

/// Noisy evaluation sets built from the plan's test alphas and gammas.
/// A plan built in code with no test alphas evaluates on the clean set only.
inline std::vector<LabeledDataset> plan_test_suite(const ExperimentPlan& plan, const Dataset& test) {
  if (plan.test_alphas.empty()) return {{"clean", test}};
  return make_test_suite(test, plan.test_alphas, plan.test_gammas,
                         RngStream(plan.master_seed, derive_stream_id(0, "test-suite", 0)), plan.gamma_convention);
}

struct TrialKey {
  std::size_t spec = 0;
  std::size_t gamma_index = 0;
  std::size_t repeat = 0;
};

struct TrialResult {
  std::string spec_label;
  double gamma = std::nan("");
  std::size_t gamma_index = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> accuracies;  // one per test set, empty when failed
  double sparsity = std::nan("");
  std::vector<double> epoch_loss;
  std::size_t train_rows = 0;
  bool inactive_at_init = false;  // some hidden layer silent on the whole training pool

  nlohmann::json to_json(const std::vector<std::string>& test_labels) const {
    nlohmann::json j;
    j["spec"] = spec_label;
    j["gamma"] = std::isnan(gamma) ? nlohmann::json(nullptr) : nlohmann::json(gamma);
    j["gamma_index"] = gamma_index;
    j["repeat"] = repeat;
    j["seed"] = seed;
    j["status"] = ok ? "ok" : "failed";
    if (!ok) j["error"] = error;
    j["train_rows"] = train_rows;
    j["inactive_layer_at_init"] = inactive_at_init;
    nlohmann::json acc = nlohmann::json::object();
    for (std::size_t i = 0; i < accuracies.size(); ++i) acc[test_labels[i]] = accuracies[i];
    j["accuracy"] = acc;
    j["sparsity"] = std::isnan(sparsity) ? nlohmann::json(nullptr) : nlohmann::json(sparsity);
    j["epoch_loss"] = epoch_loss;
    return j;
  }
};

inline std::string gamma_tag(double gamma) { return std::isnan(gamma) ? "none" : format_g17(gamma); }

/// Seed of one trial: a hash of (master seed, spec label, gamma, repeat).
inline std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& spec_label, double gamma,
                                std::size_t repeat) {
  return derive_stream_id(master_seed, "trial:" + spec_label + ":" + gamma_tag(gamma), repeat);
}

/// Runs one trial. Divergence and numeric failures are recorded, not thrown.
inline TrialResult run_trial(const ExperimentPlan& plan, const Dataset& train, const std::vector<LabeledDataset>& suite,
                             const TrainingSpecPlan& spec, std::size_t gamma_index, std::size_t repeat) {
  TrialResult r;
  r.spec_label = spec.label;
  r.gamma = spec.candidates()[gamma_index];
  r.gamma_index = gamma_index;
  r.repeat = repeat;
  r.seed = trial_seed(plan.master_seed, spec.label, r.gamma, repeat);
  try {
    const NoiseSpec noise = spec.materialize(std::isnan(r.gamma) ? 1.0 : r.gamma, plan.gamma_convention);
    const AugmentedDataset aug = augment(train, noise, RngStream(r.seed, derive_stream_id(0, "augment", 0)));
    r.train_rows = aug.data.n_samples();
    nn::ModelConfig mc{plan.width, plan.depth, train.n_features(), train.n_classes(),
                       derive_stream_id(r.seed, "init", 0)};
    nn::TrainConfig tc = plan.train;
    tc.shuffle_seed = derive_stream_id(r.seed, "shuffle", 0);
    const nn::DenseModel start = nn::init(mc);
    r.inactive_at_init = nn::has_inactive_layer(start, train);
    auto trained = nn::train(start, aug.data, tc);
    r.epoch_loss = std::move(trained.epoch_loss);
    for (const auto& t : suite) r.accuracies.push_back(nn::accuracy(trained.model, t.data));
    r.sparsity = nn::sparsity(trained.model);
    r.ok = true;
  } catch (const TrainingError& e) {
    r.error = e.what();
  } catch (const NumericError& e) {
    r.error = e.what();
  }
  if (!r.ok) r.accuracies.clear();
  return r;
}

/// Mean accuracy per test set for one gamma candidate, over its successful repeats.
struct GammaCandidate {
  double gamma = std::nan("");
  std::vector<double> mean_accuracy;  // per test set; empty when every repeat failed
};

/// Candidate maximizing the uniform average over test sets; ties go to the smaller gamma.
inline double gamma_select(const std::vector<GammaCandidate>& candidates) {
  if (candidates.empty()) throw ParameterError("gamma_select needs at least one candidate");
  std::optional<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.mean_accuracy.empty()) continue;
    const double score = mean(c.mean_accuracy);
    const bool better = !best || score > best_score ||
                        (score == best_score && c.gamma < candidates[*best].gamma);
    if (better) {
      best = i;
      best_score = score;
    }
  }
  if (!best) return candidates.front().gamma;
  return candidates[*best].gamma;
}

struct Cell {
  double mean = std::nan("");
  double std = std::nan("");
  std::size_t n_trials = 0;  // successful
  std::size_t n_failed = 0;
  std::vector<double> accuracies;
};

inline Cell aggregate(std::vector<double> accuracies, std::size_t failed) {
  Cell c;
  c.n_failed = failed;
  c.n_trials = accuracies.size();
  if (!accuracies.empty()) {
    c.mean = mean(accuracies);
    c.std = std::sqrt(sample_variance(accuracies));
  }
  c.accuracies = std::move(accuracies);
  return c;
}

/// Mean +- std accuracy per (training spec at its chosen gamma) x (test set).
struct EvalMatrix {
  std::vector<std::string> rows;
  std::vector<double> row_gamma;  // NaN where the training spec has no gamma
  std::vector<std::string> cols;
  std::vector<double> col_alpha;  // NaN for the clean set
  std::vector<double> col_gamma;
  std::vector<std::vector<Cell>> cells;

  std::size_t row_index(const std::string& label) const {
    const auto it = std::find(rows.begin(), rows.end(), label);
    if (it == rows.end()) throw ParameterError("no training spec labeled '" + label + "'");
    return static_cast<std::size_t>(it - rows.begin());
  }

  const Cell& at(const std::string& row, const std::string& col) const {
    const auto it = std::find(cols.begin(), cols.end(), col);
    if (it == cols.end()) throw ParameterError("no test set labeled '" + col + "'");
    return cells[row_index(row)][static_cast<std::size_t>(it - cols.begin())];
  }

  nlohmann::json to_json() const {
    const auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json j;
    j["rows"] = rows;
    j["cols"] = cols;
    j["row_gamma"] = nlohmann::json::array();
    for (double g : row_gamma) j["row_gamma"].push_back(num(g));
    j["col_alpha"] = nlohmann::json::array();
    for (double a : col_alpha) j["col_alpha"].push_back(num(a));
    j["col_gamma"] = nlohmann::json::array();
    for (double g : col_gamma) j["col_gamma"].push_back(num(g));
    j["cells"] = nlohmann::json::array();
    for (const auto& row : cells) {
      nlohmann::json jr = nlohmann::json::array();
      for (const auto& c : row) {
        jr.push_back({{"mean", num(c.mean)},
                      {"std", num(c.std)},
                      {"n_trials", c.n_trials},
                      {"n_failed", c.n_failed},
                      {"accuracies", c.accuracies}});
      }
      j["cells"].push_back(jr);
    }
    return j;
  }

  static EvalMatrix from_json(const nlohmann::json& j) {
    const auto num = [](const nlohmann::json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
    try {
      EvalMatrix m;
      m.rows = j.at("rows").get<std::vector<std::string>>();
      m.cols = j.at("cols").get<std::vector<std::string>>();
      for (const auto& v : j.at("row_gamma")) m.row_gamma.push_back(num(v));
      for (const auto& v : j.at("col_alpha")) m.col_alpha.push_back(num(v));
      for (const auto& v : j.at("col_gamma")) m.col_gamma.push_back(num(v));
      for (const auto& jr : j.at("cells")) {
        std::vector<Cell> row;
        for (const auto& jc : jr) {
          Cell c;
          c.mean = num(jc.at("mean"));
          c.std = num(jc.at("std"));
          c.n_trials = jc.at("n_trials").get<std::size_t>();
          c.n_failed = jc.at("n_failed").get<std::size_t>();
          c.accuracies = jc.at("accuracies").get<std::vector<double>>();
          row.push_back(std::move(c));
        }
        m.cells.push_back(std::move(row));
      }
      if (m.cells.size() != m.rows.size()) throw FormatError("matrix: cell rows differ from row labels");
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("matrix: ") + e.what());
    }
  }
};

/// Uniform average of a row's cell means across all test sets.
inline double average_accuracy(const EvalMatrix& m, const std::string& row) {
  const auto& cells = m.cells[m.row_index(row)];
  double s = 0.0;
  for (const auto& c : cells) {
    if (std::isnan(c.mean)) throw NumericError("row '" + row + "' has a cell without successful trials");
    s += c.mean;
  }
  return s / static_cast<double>(cells.size());
}

/// Relative improvement (percent) of the subject's average accuracy over the baseline's.
inline double improvement_table(const EvalMatrix& m, const std::string& subject, const std::string& baseline) {
  const double base = average_accuracy(m, baseline);
  if (base == 0.0) throw NumericError("baseline average accuracy is zero");
  return 100.0 * (average_accuracy(m, subject) - base) / base;
}

struct SparsityRow {
  std::string spec;
  double gamma = std::nan("");
  std::vector<double> values;  // per successful trial
  double mean = std::nan("");
  double std = std::nan("");
};

struct ExperimentResult {
  EvalMatrix matrix;
  std::vector<SparsityRow> sparsity;
  std::vector<TrialResult> trials;
  std::vector<std::string> test_labels;
  std::vector<std::vector<GammaCandidate>> gamma_search;  // per spec
  bool synthetic_fallback = false;
};

inline std::string trial_file_name(const TrialResult& t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "trial-%016llx.json", static_cast<unsigned long long>(t.seed));
  return buf;
}

/// Executes the whole grid. When `out_dir` is given, each trial's raw record is
/// written to out_dir/raw before any aggregation happens.
inline ExperimentResult run(const ExperimentPlan& plan, unsigned jobs = 1,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                            const std::function<void(const TrialResult&)>& on_trial = {}) {
  const TrainTestData data = load_plan_data(plan);
  const auto suite = plan_test_suite(plan, data.test);
  std::vector<std::string> labels;
  for (const auto& t : suite) labels.push_back(t.label);

  std::vector<TrialKey> keys;
  for (std::size_t s = 0; s < plan.specs.size(); ++s) {
    for (std::size_t g = 0; g < plan.specs[s].candidates().size(); ++g) {
      for (std::size_t r = 0; r < plan.repeats; ++r) keys.push_back({s, g, r});
    }
  }

  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir / "raw", ec);
    if (ec) throw IoError("cannot create " + (*out_dir / "raw").string() + ": " + ec.message());
  }

  std::vector<TrialResult> results(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      try {
        const auto& k = keys[i];
        results[i] = run_trial(plan, data.train, suite, plan.specs[k.spec], k.gamma_index, k.repeat);
        if (out_dir) {
          detail::write_text_file(*out_dir / "raw" / trial_file_name(results[i]),
                                  results[i].to_json(labels).dump(2) + "\n");
        }
        if (on_trial) {
          std::lock_guard lock(callback_mutex);
          on_trial(results[i]);
        }
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next = keys.size();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(keys.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.trials = results;
  out.test_labels = labels;
  out.synthetic_fallback = data.synthetic_fallback;
  auto& m = out.matrix;
  m.cols = labels;
  m.col_alpha.push_back(std::nan(""));
  m.col_gamma.push_back(std::nan(""));
  for (double a : plan.test_alphas) {
    for (double g : plan.test_gammas) {
      m.col_alpha.push_back(a);
      m.col_gamma.push_back(g);
    }
  }

  for (std::size_t s = 0; s < plan.specs.size(); ++s) {
    const auto& spec = plan.specs[s];
    const auto candidates = spec.candidates();
    std::vector<GammaCandidate> search;
    for (std::size_t g = 0; g < candidates.size(); ++g) {
      GammaCandidate c{candidates[g], {}};
      std::size_t ok = 0;
      std::vector<double> sums(labels.size(), 0.0);
      for (const auto& t : results) {
        if (t.spec_label != spec.label || t.gamma_index != g || !t.ok) continue;
        ++ok;
        for (std::size_t j = 0; j < labels.size(); ++j) sums[j] += t.accuracies[j];
      }
      if (ok > 0) {
        for (double& v : sums) v /= static_cast<double>(ok);
        c.mean_accuracy = std::move(sums);
      }
      search.push_back(std::move(c));
    }
    const double chosen = gamma_select(search);
    std::size_t chosen_index = 0;
    for (std::size_t g = 0; g < candidates.size(); ++g) {
      if (candidates[g] == chosen || (std::isnan(chosen) && std::isnan(candidates[g]))) chosen_index = g;
    }
    out.gamma_search.push_back(std::move(search));

    std::vector<Cell> row;
    SparsityRow sp{spec.label, chosen, {}, std::nan(""), std::nan("")};
    for (std::size_t j = 0; j < labels.size(); ++j) {
      std::vector<double> acc;
      std::size_t failed = 0;
      for (const auto& t : results) {
        if (t.spec_label != spec.label || t.gamma_index != chosen_index) continue;
        if (t.ok) acc.push_back(t.accuracies[j]);
        else ++failed;
      }
      row.push_back(aggregate(std::move(acc), failed));
    }
    for (const auto& t : results) {
      if (t.spec_label == spec.label && t.gamma_index == chosen_index && t.ok) sp.values.push_back(t.sparsity);
    }
    if (!sp.values.empty()) {
      sp.mean = mean(sp.values);
      sp.std = std::sqrt(sample_variance(sp.values));
    }
    m.rows.push_back(spec.label);
    m.row_gamma.push_back(chosen);
    m.cells.push_back(std::move(row));
    out.sparsity.push_back(std::move(sp));
  }
  return out;
}

}  // namespace alphanoise
