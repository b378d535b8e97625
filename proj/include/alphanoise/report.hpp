#pragma once

// Results directory layout:
//   plan.json            the plan as given
//   raw/trial-<seed>.json  one record per trial (written by run())
//   matrix.csv           train_spec, gamma, test_set, mean, std, n_trials, n_failed
//   matrix.json          plan echo + full matrix + sparsity + gamma search
//   sparsity.csv         per spec at its chosen gamma
//   gamma_search.csv     average accuracy of every gamma candidate
//   plotdata/<spec>.tsv  per spec: clean first, then test alpha descending

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphanoise/errors.hpp"
#include "alphanoise/harness.hpp"

namespace alphanoise {

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string fixed6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string gamma_cell(double g) { return std::isnan(g) ? "-" : format_number(g); }

inline std::string file_stem(const std::string& label) {
  std::string s;
  for (char c : label) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return s.empty() ? "spec" : s;
}

}  // namespace detail

inline std::string matrix_csv(const EvalMatrix& m) {
  std::ostringstream out;
  out << "train_spec,gamma,test_set,mean,std,n_trials,n_failed\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      const Cell& cell = m.cells[r][c];
      out << detail::csv_field(m.rows[r]) << ',' << detail::gamma_cell(m.row_gamma[r]) << ','
          << detail::csv_field(m.cols[c]) << ',' << detail::fixed6(cell.mean) << ','
          << (cell.n_trials == 0 ? "NA" : detail::fixed6(cell.std)) << ',' << cell.n_trials << ',' << cell.n_failed
          << '\n';
    }
  }
  return out.str();
}

inline std::string sparsity_csv(const std::vector<SparsityRow>& rows) {
  std::ostringstream out;
  out << "train_spec,gamma,mean_sparsity,std_sparsity,n_models\n";
  for (const auto& s : rows) {
    out << detail::csv_field(s.spec) << ',' << detail::gamma_cell(s.gamma) << ',' << detail::fixed6(s.mean) << ','
        << detail::fixed6(s.std) << ',' << s.values.size() << '\n';
  }
  return out.str();
}

/// Column order for plots: the clean set, then alpha descending, then gamma ascending.
inline std::vector<std::size_t> plot_order(const EvalMatrix& m) {
  std::vector<std::size_t> idx(m.cols.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const bool ca = std::isnan(m.col_alpha[a]);
    const bool cb = std::isnan(m.col_alpha[b]);
    if (ca != cb) return ca;
    if (ca) return false;
    if (m.col_alpha[a] != m.col_alpha[b]) return m.col_alpha[a] > m.col_alpha[b];
    return m.col_gamma[a] < m.col_gamma[b];
  });
  return idx;
}

inline std::string plot_tsv(const EvalMatrix& m, std::size_t row) {
  std::ostringstream out;
  out << "test_set\ttest_alpha\ttest_gamma\tmean\tstd\tn_trials\n";
  for (std::size_t c : plot_order(m)) {
    const Cell& cell = m.cells[row][c];
    out << m.cols[c] << '\t' << (std::isnan(m.col_alpha[c]) ? "clean" : format_number(m.col_alpha[c])) << '\t'
        << detail::gamma_cell(m.col_gamma[c]) << '\t' << detail::fixed6(cell.mean) << '\t'
        << (cell.n_trials == 0 ? "NA" : detail::fixed6(cell.std)) << '\t' << cell.n_trials << '\n';
  }
  return out.str();
}

inline std::string gamma_search_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "train_spec,gamma,average_accuracy,selected\n";
  for (std::size_t s = 0; s < r.gamma_search.size(); ++s) {
    for (const auto& c : r.gamma_search[s]) {
      const double avg = c.mean_accuracy.empty() ? std::nan("") : mean(c.mean_accuracy);
      const bool selected = c.gamma == r.matrix.row_gamma[s] || (std::isnan(c.gamma) && std::isnan(r.matrix.row_gamma[s]));
      out << detail::csv_field(r.matrix.rows[s]) << ',' << detail::gamma_cell(c.gamma) << ',' << detail::fixed6(avg)
          << ',' << (selected ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json sparsity_json(const std::vector<SparsityRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  const auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  for (const auto& s : rows) {
    j.push_back({{"spec", s.spec}, {"gamma", num(s.gamma)}, {"values", s.values}, {"mean", num(s.mean)}, {"std", num(s.std)}});
  }
  return j;
}

inline std::vector<SparsityRow> sparsity_from_json(const nlohmann::json& j) {
  const auto num = [](const nlohmann::json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  std::vector<SparsityRow> rows;
  for (const auto& s : j) {
    rows.push_back({s.at("spec").get<std::string>(), num(s.at("gamma")), s.at("values").get<std::vector<double>>(),
                    num(s.at("mean")), num(s.at("std"))});
  }
  return rows;
}

/// CSV, plot data and sparsity table for a matrix (the parts `report` can regenerate).
inline void write_tables(const std::filesystem::path& dir, const EvalMatrix& m, const std::vector<SparsityRow>& sparsity) {
  if (m.rows.empty() || m.cols.empty()) throw ParameterError("cannot report an empty matrix");
  std::error_code ec;
  std::filesystem::create_directories(dir / "plotdata", ec);
  if (ec) throw IoError("cannot create " + (dir / "plotdata").string() + ": " + ec.message());
  detail::write_text_file(dir / "matrix.csv", matrix_csv(m));
  detail::write_text_file(dir / "sparsity.csv", sparsity_csv(sparsity));
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    detail::write_text_file(dir / "plotdata" / (detail::file_stem(m.rows[r]) + ".tsv"), plot_tsv(m, r));
  }
}

inline void write_results(const std::filesystem::path& dir, const ExperimentPlan& plan, const ExperimentResult& r) {
  write_tables(dir, r.matrix, r.sparsity);
  detail::write_text_file(dir / "plan.json", plan.source.dump(2) + "\n");
  detail::write_text_file(dir / "gamma_search.csv", gamma_search_csv(r));
  nlohmann::json doc;
  doc["plan"] = plan.source;
  doc["matrix"] = r.matrix.to_json();
  doc["sparsity"] = sparsity_json(r.sparsity);
  doc["synthetic_fallback"] = r.synthetic_fallback;
  detail::write_text_file(dir / "matrix.json", doc.dump(2) + "\n");
}

struct StoredResults {
  EvalMatrix matrix;
  std::vector<SparsityRow> sparsity;
  nlohmann::json plan;
};

inline StoredResults read_results(const std::filesystem::path& dir) {
  std::ifstream in(dir / "matrix.json");
  if (!in) throw IoError("cannot open " + (dir / "matrix.json").string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "matrix.json").string() + ": " + e.what());
  }
  try {
    return {EvalMatrix::from_json(doc.at("matrix")), sparsity_from_json(doc.value("sparsity", nlohmann::json::array())),
            doc.value("plan", nlohmann::json())};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "matrix.json").string() + ": " + e.what());
  }
}

}  // namespace alphanoise
