#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "model.hpp"

namespace advkit {

/// Which label a fooling rate is measured against.
enum class LabelSource {
  clean_prediction,  // argmax F(x), the default everywhere
  ground_truth,      // dataset labels, for accuracy-style reporting
};

inline std::vector<std::size_t> clean_predictions(const Classifier& model, const LabeledDataset& data) {
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(model, data.inputs[i]);
  return out;
}

inline std::vector<std::size_t> reference_labels(const Classifier& model, const LabeledDataset& data,
                                                 LabelSource source) {
  return source == LabelSource::clean_prediction ? clean_predictions(model, data) : data.labels;
}

/// FR_k: fraction of samples whose reference label is outside the Top-k of F(x_i + r_i).
inline double fooling_rate(const Classifier& model, const LabeledDataset& samples,
                           const std::vector<Vector>& perturbations, std::size_t k,
                           LabelSource source = LabelSource::clean_prediction) {
  if (perturbations.size() != samples.size())
    throw Error(ErrorKind::pairing, std::to_string(perturbations.size()) + " perturbations for " +
                                        std::to_string(samples.size()) + " samples");
  if (samples.empty()) throw Error(ErrorKind::data, "fooling rate of an empty dataset");
  const auto ref = reference_labels(model, samples, source);
  std::size_t fooled = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vector logits = forward_logits(model, add(samples.inputs[i], perturbations[i]));
    fooled += !in_top_k(logits, ref[i], k);
  }
  return static_cast<double>(fooled) / static_cast<double>(samples.size());
}

/// rho_p: mean of ||r(x)||_p / ||x||_p.
inline double relative_norm(const LabeledDataset& samples, const std::vector<Vector>& perturbations, Norm p) {
  if (perturbations.size() != samples.size())
    throw Error(ErrorKind::pairing, std::to_string(perturbations.size()) + " perturbations for " +
                                        std::to_string(samples.size()) + " samples");
  if (samples.empty()) throw Error(ErrorKind::data, "relative norm of an empty dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double xn = norm(samples.inputs[i], p);
    if (xn == 0.0)
      throw Error(ErrorKind::degenerate, "sample " + std::to_string(i) + " has zero norm; relative norm undefined");
    sum += norm(perturbations[i], p) / xn;
  }
  return sum / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
  std::string attack_name;
  std::map<std::size_t, double> fr_table;  // k -> FR_k
  double rho2 = 0.0;
  double rhoinf = 0.0;
  std::optional<double> ufr;
  double mean_iterations = 0.0;
  double mean_time_s = 0.0;
  std::size_t n_samples = 0;
  std::size_t failures = 0;  // results not flagged successful at their own target k
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
};

/// Assemble FR_k for every requested k plus rho_2, rho_inf and mean iteration/time.
/// All samples count towards rho, including ones the attack failed on.
inline EvalReport build_report(const Classifier& model, const LabeledDataset& samples,
                               const std::vector<PerturbationResult>& results, const std::vector<std::size_t>& k_values,
                               std::string attack_name = {}, std::uint64_t seed = 0) {
  if (results.empty()) throw Error(ErrorKind::data, "cannot build a report from zero results");
  if (results.size() != samples.size())
    throw Error(ErrorKind::pairing, std::to_string(results.size()) + " results for " +
                                        std::to_string(samples.size()) + " samples");
  std::vector<Vector> rs;
  rs.reserve(results.size());
  EvalReport rep;
  rep.attack_name = std::move(attack_name);
  rep.seed = seed;
  rep.n_samples = results.size();
  for (const auto& r : results) {
    rs.push_back(r.r);
    rep.mean_iterations += static_cast<double>(r.iterations);
    rep.mean_time_s += r.elapsed_s;
    rep.failures += !r.success;
  }
  rep.mean_iterations /= static_cast<double>(results.size());
  rep.mean_time_s /= static_cast<double>(results.size());
  for (std::size_t k : k_values) rep.fr_table[k] = fooling_rate(model, samples, rs, k);
  rep.rho2 = relative_norm(samples, rs, Norm::L2);
  rep.rhoinf = relative_norm(samples, rs, Norm::Linf);
  return rep;
}

/// One row of the report CSV: attack,k,FR,rho2,rhoinf,mean_iter,mean_time_s,n_samples,seed
struct ReportRow {
  std::string attack;
  std::size_t k = 0;
  double fr = 0.0;
  double rho2 = 0.0;
  double rhoinf = 0.0;
  double mean_iter = 0.0;
  double mean_time_s = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  bool operator==(const ReportRow&) const = default;
};

inline constexpr std::string_view kReportHeader = "attack,k,FR,rho2,rhoinf,mean_iter,mean_time_s,n_samples,seed";

inline std::vector<ReportRow> report_rows(const EvalReport& rep) {
  std::vector<ReportRow> rows;
  for (const auto& [k, fr] : rep.fr_table)
    rows.push_back({rep.attack_name, k, fr, rep.rho2, rep.rhoinf, rep.mean_iterations, rep.mean_time_s,
                    rep.n_samples, rep.seed});
  return rows;
}

/// Shortest round-trip decimal for a double.
inline std::string format_real(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  std::string s = os.str();
  // Prefer the shortest representation that still round-trips.
  for (int prec = 1; prec < std::numeric_limits<double>::max_digits10; ++prec) {
    std::ostringstream t;
    t.imbue(std::locale::classic());
    t << std::setprecision(prec) << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return s;
}

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows)
    out << r.attack << ',' << r.k << ',' << format_real(r.fr) << ',' << format_real(r.rho2) << ','
        << format_real(r.rhoinf) << ',' << format_real(r.mean_iter) << ',' << format_real(r.mean_time_s) << ','
        << r.n_samples << ',' << r.seed << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

/// Parses a report CSV. Errors carry the 1-based line number.
inline std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) throw Error(ErrorKind::parse, "line 1: unexpected header '" + line + "'");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 9)
      throw Error(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected 9 fields, got " +
                                        std::to_string(c.size()));
    try {
      std::size_t pos = 0;
      auto real = [&](const std::string& s) {
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      };
      auto count = [&](const std::string& s) {
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      };
      rows.push_back({c[0], count(c[1]), real(c[2]), real(c[3]), real(c[4]), real(c[5]), real(c[6]),
                      count(c[7]), count(c[8])});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse, "line " + std::to_string(lineno) + ": malformed numeric field");
    }
  }
  return rows;
}

}  // namespace advkit
