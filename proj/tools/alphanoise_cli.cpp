// alphanoise: command-line front end for sampling, augmentation, training,
// evaluation and the experiment harness.
//
// Exit codes: 0 success, 1 usage or parameter error, 2 data/format/I-O error,
// 3 numeric or training failure. Randomized subcommands default to --seed 0.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "alphanoise/alphanoise.hpp"

namespace an = alphanoise;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

bool g_json = false;

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json num_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

// Prefixes library parameter errors with the flag they came from.
template <class F>
auto with_flag(const std::string& flag, F&& f) {
  try {
    return f();
  } catch (const an::ParameterError& e) {
    throw an::ParameterError(flag + ": " + e.what());
  }
}

an::StableParams law_from_flags(double alpha, double gamma, double delta, an::GammaConvention conv) {
  with_flag("--alpha", [&] { an::check_alpha(alpha); });
  return with_flag("--gamma", [&] { return an::make_params(alpha, gamma, conv, delta); });
}

struct InputFlags {
  std::string input;
  std::string labels;
  std::string format = "idx";
  std::string domain = "image";
  char delimiter = ',';

  void add(CLI::App* app, const std::string& default_format) {
    format = default_format;
    app->add_option("--input", input, "Input file (idx images, csv, npy features) or dataset directory")->required();
    app->add_option("--labels", labels, "Label file for idx and npy input");
    app->add_option("--input-format", format, "idx | csv | npy | dataset")
        ->check(CLI::IsMember({"idx", "csv", "npy", "dataset"}))
        ->capture_default_str();
    app->add_option("--domain", domain, "Domain of npy input")->check(CLI::IsMember({"image", "series"}));
    app->add_option("--delimiter", delimiter, "CSV delimiter");
  }

  an::Dataset load() const {
    if ((format == "idx" || format == "npy") && labels.empty()) {
      throw an::ParameterError("--labels is required for " + format + " input");
    }
    if (format == "idx") return an::load_idx(input, labels);
    if (format == "csv") return an::load_series_csv(input, delimiter);
    if (format == "npy") return an::load_npy_pair(input, labels, an::parse_domain(domain));
    return an::load_dataset(input);
  }
};

void add_convention(CLI::App* app, std::string& conv) {
  app->add_option("--gamma-convention", conv, "dispersion (phi = exp{-gamma|t|^alpha}) or scale (exp{-|gamma t|^alpha})")
      ->check(CLI::IsMember({"dispersion", "scale"}))
      ->capture_default_str();
}

// ---- sample ----

struct SampleOpts {
  double alpha = 2.0, gamma = 1.0, delta = 0.0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out, format = "txt", convention = "dispersion";
};

int cmd_sample(const SampleOpts& o) {
  const auto law = law_from_flags(o.alpha, o.gamma, o.delta, an::parse_gamma_convention(o.convention));
  an::RngStream rng(o.seed, an::derive_stream_id(0, "sample", 0));
  const auto x = an::sample(law, o.n, rng);
  an::write_samples(o.out, x, o.format == "f64le" ? an::SampleFormat::f64le : an::SampleFormat::text);

  double med = std::nan(""), proxy = std::nan("");
  if (!x.empty()) {
    med = an::median(x);
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v), 0.25);
    proxy = s / static_cast<double>(x.size());
  }
  if (g_json) {
    std::cout << json{{"n", x.size()}, {"median", num_json(med)}, {"mean_abs_quarter", num_json(proxy)}}.dump() << "\n";
  } else {
    std::cout << "n=" << x.size() << " median=" << num(med) << " mean|x|^0.25=" << num(proxy) << "\n";
  }
  return kOk;
}

// ---- pdf ----

struct PdfOpts {
  double alpha = 2.0, gamma = 1.0, delta = 0.0;
  std::vector<double> xs;
  double from = -5.0, to = 5.0;
  std::size_t points = 0;
  std::string convention = "dispersion";
};

int cmd_pdf(const PdfOpts& o) {
  const auto law = law_from_flags(o.alpha, o.gamma, o.delta, an::parse_gamma_convention(o.convention));
  std::vector<double> xs = o.xs;
  if (o.points > 0) {
    if (!(o.to >= o.from)) throw an::ParameterError("--to must not be below --from");
    for (std::size_t i = 0; i < o.points; ++i) {
      xs.push_back(o.points == 1 ? o.from
                                 : o.from + (o.to - o.from) * static_cast<double>(i) / static_cast<double>(o.points - 1));
    }
  }
  if (xs.empty()) throw an::ParameterError("give --x or --points");
  json rows = json::array();
  for (double x : xs) {
    const double f = an::pdf(law, x);
    if (g_json) {
      rows.push_back({{"x", x}, {"pdf", f}});
    } else {
      std::cout << an::format_g17(x) << "\t" << an::format_g17(f) << "\n";
    }
  }
  if (g_json) std::cout << rows.dump() << "\n";
  return kOk;
}

// ---- augment ----

struct AugmentOpts {
  InputFlags in;
  std::string mode = "clean", convention = "dispersion", out_dir;
  std::vector<double> alphas, gammas, weights;
  std::size_t replication = 10, copies_per_law = 2;
  bool no_clean = false;
  std::uint64_t seed = 0;
  std::size_t shard_bytes = std::size_t{1} << 30;
};

an::NoiseSpec spec_from_flags(const AugmentOpts& o) {
  const auto kind = an::parse_noise_kind(o.mode);
  const auto conv = an::parse_gamma_convention(o.convention);
  if (kind == an::NoiseKind::clean) {
    if (!o.alphas.empty() || !o.gammas.empty()) throw an::ParameterError("clean mode takes no --alpha or --gamma");
    return an::NoiseSpec::clean();
  }
  if (kind == an::NoiseKind::single && o.alphas.size() != 1) {
    throw an::ParameterError("single mode takes exactly one alpha");
  }
  std::vector<double> alphas = o.alphas;
  if (alphas.empty()) alphas = an::kCombinedAlphas;
  if (o.gammas.empty()) throw an::ParameterError("--gamma is required for " + o.mode + " mode");
  if (o.gammas.size() != 1 && o.gammas.size() != alphas.size()) {
    throw an::ParameterError("--gamma takes one value or one per --alpha");
  }
  std::vector<an::StableParams> laws;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    laws.push_back(law_from_flags(alphas[i], o.gammas.size() == 1 ? o.gammas[0] : o.gammas[i], 0.0, conv));
  }
  an::NoiseSpec s;
  switch (kind) {
    case an::NoiseKind::single: s = an::NoiseSpec::single(laws[0], o.replication, !o.no_clean); break;
    case an::NoiseKind::multiple: s = an::NoiseSpec::multiple(laws, o.copies_per_law, !o.no_clean); break;
    default: s = an::NoiseSpec::mixture(laws, o.replication, !o.no_clean, o.weights); break;
  }
  s.validate();
  return s;
}

int cmd_augment(const AugmentOpts& o) {
  const auto spec = spec_from_flags(o);
  const auto base = o.in.load();
  an::write_augmented(o.out_dir, base, spec, an::RngStream(o.seed, an::derive_stream_id(0, "augment", 0)),
                      o.shard_bytes);
  const std::size_t rows = spec.total_rows(base.n_samples());
  if (g_json) {
    std::cout << json{{"samples", rows}, {"out_dir", o.out_dir}, {"noise_spec", spec.to_json()}}.dump() << "\n";
  } else {
    std::cout << rows << "\n";
  }
  return kOk;
}

// ---- train ----

struct TrainOpts {
  InputFlags in;
  std::size_t width = 3, depth = 3;
  an::nn::TrainConfig tc;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_train(const TrainOpts& o) {
  const auto data = o.in.load();
  an::nn::ModelConfig mc{o.width, o.depth, data.n_features(), data.n_classes(), an::derive_stream_id(o.seed, "init", 0)};
  an::nn::TrainConfig tc = o.tc;
  tc.shuffle_seed = an::derive_stream_id(o.seed, "shuffle", 0);
  const auto result = an::nn::train(an::nn::init(mc), data, tc);
  an::nn::save_model(o.out, result.model);
  const double loss = result.epoch_loss.empty() ? std::nan("") : result.epoch_loss.back();
  const double acc = an::nn::accuracy(result.model, data);
  if (g_json) {
    std::cout << json{{"samples", data.n_samples()},
                      {"final_loss", num_json(loss)},
                      {"train_accuracy", acc},
                      {"sparsity", an::nn::sparsity(result.model)}}
                     .dump()
              << "\n";
  } else {
    std::cout << "samples=" << data.n_samples() << " final_loss=" << num(loss) << " train_accuracy=" << num(acc)
              << " sparsity=" << num(an::nn::sparsity(result.model)) << "\n";
  }
  return kOk;
}

// ---- eval ----

struct EvalOpts {
  InputFlags in;
  std::string model, convention = "dispersion";
  std::vector<double> alphas, gammas;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalOpts& o) {
  const auto model = an::nn::load_model(o.model);
  const auto data = o.in.load();
  if (!o.alphas.empty() && o.gammas.empty()) throw an::ParameterError("--alpha needs at least one --gamma");
  for (double a : o.alphas) with_flag("--alpha", [&] { an::check_alpha(a); });
  const auto suite = an::make_test_suite(data, o.alphas, o.gammas,
                                         an::RngStream(o.seed, an::derive_stream_id(0, "test-suite", 0)),
                                         an::parse_gamma_convention(o.convention));
  json sets = json::array();
  for (const auto& t : suite) {
    const double acc = an::nn::accuracy(model, t.data);
    if (g_json) {
      sets.push_back({{"test_set", t.label}, {"accuracy", acc}});
    } else {
      std::cout << t.label << "\t" << num(acc) << "\n";
    }
  }
  const double sp = an::nn::sparsity(model);
  if (g_json) {
    std::cout << json{{"accuracy", sets}, {"sparsity", sp}}.dump() << "\n";
  } else {
    std::cout << "sparsity\t" << num(sp) << "\n";
  }
  return kOk;
}

// ---- experiment ----

struct ExperimentOpts {
  std::string plan, out_dir;
  unsigned jobs = 1;
  bool quiet = false;
};

int cmd_experiment(const ExperimentOpts& o) {
  const auto plan = an::load_plan(o.plan);
  std::size_t done = 0;
  const auto on_trial = [&](const an::TrialResult& t) {
    ++done;
    if (o.quiet) return;
    std::cerr << "[" << done << "] " << t.spec_label << " gamma=" << an::gamma_tag(t.gamma) << " repeat=" << t.repeat
              << (t.ok ? "" : " FAILED: " + t.error) << "\n";
  };
  const auto result = an::run(plan, o.jobs, fs::path(o.out_dir), on_trial);
  an::write_results(o.out_dir, plan, result);
  const auto& m = result.matrix;
  if (g_json) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      rows.push_back({{"spec", m.rows[r]},
                      {"gamma", num_json(m.row_gamma[r])},
                      {"average_accuracy", num_json(an::average_accuracy(m, m.rows[r]))}});
    }
    std::cout << json{{"out_dir", o.out_dir}, {"trials", result.trials.size()}, {"specs", rows}}.dump() << "\n";
  } else {
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      std::cout << m.rows[r] << "\tgamma=" << an::detail::gamma_cell(m.row_gamma[r])
                << "\taverage=" << num(an::average_accuracy(m, m.rows[r])) << "\n";
    }
    std::cout << "results in " << o.out_dir << "\n";
  }
  return kOk;
}

// ---- report ----

struct ReportOpts {
  std::string results, out_dir, baseline;
};

int cmd_report(const ReportOpts& o) {
  const auto stored = an::read_results(o.results);
  const auto& m = stored.matrix;
  if (m.rows.empty()) throw an::FormatError("results contain an empty matrix");
  if (!o.out_dir.empty()) an::write_tables(o.out_dir, m, stored.sparsity);
  const std::string baseline = o.baseline.empty() ? m.rows.front() : o.baseline;
  m.row_index(baseline);
  json rows = json::array();
  for (const auto& label : m.rows) {
    const double avg = an::average_accuracy(m, label);
    const double imp = an::improvement_table(m, label, baseline);
    if (g_json) {
      rows.push_back({{"spec", label}, {"average_accuracy", num_json(avg)}, {"improvement_percent", num_json(imp)}});
    } else {
      std::cout << label << "\taverage=" << num(avg) << "\timprovement_vs_" << baseline << "=" << num(imp) << "%\n";
    }
  }
  if (g_json) std::cout << json{{"baseline", baseline}, {"specs", rows}}.dump() << "\n";
  return kOk;
}

int guarded(const std::function<int()>& f) {
  try {
    return f();
  } catch (const an::PlanError& e) {
    std::cerr << "error: invalid plan\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kUsage;
  } catch (const an::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const an::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const an::TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alpha-stable noise augmentation toolkit"};
  app.require_subcommand(1);
  app.add_flag("--json", g_json, "Machine-readable output on stdout");

  SampleOpts so;
  auto* sample = app.add_subcommand("sample", "Draw symmetric alpha-stable variates");
  sample->add_option("--alpha", so.alpha, "Characteristic exponent, 0 < alpha <= 2")->required();
  sample->add_option("--gamma", so.gamma, "Dispersion")->capture_default_str();
  sample->add_option("--delta", so.delta, "Location")->capture_default_str();
  sample->add_option("--n", so.n, "Number of draws")->capture_default_str();
  sample->add_option("--seed", so.seed, "Seed")->capture_default_str();
  sample->add_option("--out", so.out, "Output file")->required();
  sample->add_option("--format", so.format, "txt | f64le")->check(CLI::IsMember({"txt", "f64le"}))->capture_default_str();
  add_convention(sample, so.convention);

  PdfOpts po;
  auto* pdf = app.add_subcommand("pdf", "Evaluate the density");
  pdf->add_option("--alpha", po.alpha, "Characteristic exponent")->required();
  pdf->add_option("--gamma", po.gamma, "Dispersion")->capture_default_str();
  pdf->add_option("--delta", po.delta, "Location")->capture_default_str();
  pdf->add_option("--x", po.xs, "Evaluation point (repeatable)");
  pdf->add_option("--from", po.from, "Grid start")->capture_default_str();
  pdf->add_option("--to", po.to, "Grid end")->capture_default_str();
  pdf->add_option("--points", po.points, "Evenly spaced grid size");
  add_convention(pdf, po.convention);

  AugmentOpts ao;
  auto* augment = app.add_subcommand("augment", "Write a noise-augmented copy of a dataset");
  ao.in.add(augment, "idx");
  augment->add_option("--mode", ao.mode, "clean | single | multiple | mixture")
      ->check(CLI::IsMember({"clean", "single", "multiple", "mixture"}))
      ->capture_default_str();
  augment->add_option("--alpha", ao.alphas, "Noise exponent (repeatable)");
  augment->add_option("--gamma", ao.gammas, "Dispersion: one value, or one per --alpha");
  augment->add_option("--weight", ao.weights, "Mixture weight per --alpha (default equal)");
  augment->add_option("--replication", ao.replication, "Noisy copies for single and mixture")->capture_default_str();
  augment->add_option("--copies-per-law", ao.copies_per_law, "Copies per law in multiple mode")->capture_default_str();
  augment->add_flag("--no-clean", ao.no_clean, "Leave the clean block out");
  augment->add_option("--seed", ao.seed, "Seed")->capture_default_str();
  augment->add_option("--out-dir", ao.out_dir, "Output directory")->required();
  augment->add_option("--shard-bytes", ao.shard_bytes, "Write per-copy shards above this size")->capture_default_str();
  add_convention(augment, ao.convention);

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Train a dense ReLU classifier");
  to.in.add(train, "dataset");
  train->add_option("--width", to.width, "Hidden units per layer")->capture_default_str();
  train->add_option("--depth", to.depth, "Hidden layers")->capture_default_str();
  train->add_option("--epochs", to.tc.epochs, "Epochs")->capture_default_str();
  train->add_option("--steps", to.tc.steps, "Fixed number of updates (0: use --epochs)")->capture_default_str();
  train->add_option("--batch-size", to.tc.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--lr", to.tc.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--momentum", to.tc.momentum, "Momentum, 0 for plain SGD")->capture_default_str();
  train->add_option("--seed", to.seed, "Seed for init and shuffling")->capture_default_str();
  train->add_option("--out", to.out, "Model JSON")->required();

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "Accuracy on a clean set and optional noisy copies");
  eo.in.add(eval, "dataset");
  eval->add_option("--model", eo.model, "Model JSON")->required();
  eval->add_option("--alpha", eo.alphas, "Test noise exponent (repeatable)");
  eval->add_option("--gamma", eo.gammas, "Test dispersion (repeatable)");
  eval->add_option("--seed", eo.seed, "Seed")->capture_default_str();
  add_convention(eval, eo.convention);

  ExperimentOpts xo;
  auto* experiment = app.add_subcommand("experiment", "Run a plan file");
  experiment->add_option("--plan", xo.plan, "Plan JSON")->required();
  experiment->add_option("--out-dir", xo.out_dir, "Results directory")->required();
  experiment->add_option("--jobs", xo.jobs, "Parallel trials")->capture_default_str()->check(CLI::PositiveNumber);
  experiment->add_flag("--quiet", xo.quiet, "No per-trial progress on stderr");

  ReportOpts ro;
  auto* report = app.add_subcommand("report", "Summarize a results directory, optionally regenerating tables");
  report->add_option("--results", ro.results, "Results directory")->required();
  report->add_option("--out-dir", ro.out_dir, "Where to regenerate matrix.csv, sparsity.csv and plotdata/");
  report->add_option("--baseline", ro.baseline, "Spec label for the improvement column (default: first row)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    std::cerr << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.back()->help());
    return kUsage;
  }

  if (*sample) return guarded([&] { return cmd_sample(so); });
  if (*pdf) return guarded([&] { return cmd_pdf(po); });
  if (*augment) return guarded([&] { return cmd_augment(ao); });
  if (*train) return guarded([&] { return cmd_train(to); });
  if (*eval) return guarded([&] { return cmd_eval(eo); });
  if (*experiment) return guarded([&] { return cmd_experiment(xo); });
  return guarded([&] { return cmd_report(ro); });
}
