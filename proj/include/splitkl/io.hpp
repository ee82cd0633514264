#pragma once

// Text formats: sample files, loss and evaluation CSVs, sweep CSV output.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "splitkl/simulation.hpp"
#include "splitkl/tandem.hpp"

namespace splitkl {

/// Malformed input; `line` is 1-based (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// 12 significant digits; "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// x rounded to 12 significant digits.
inline double round12(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_real(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(line, "expected a number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) throw ParseError(line, "not a finite number: '" + t + "'");
  return v;
}

inline std::int64_t parse_integer(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError(line, "expected an integer");
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno != 0) throw ParseError(line, "not an integer: '" + t + "'");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header '" + header + "'");
  if (trim(line) != header) throw ParseError(1, "expected header '" + header + "'");
}

}  // namespace detail

/// A sample with its declared range and split point.
struct SampleFile {
  std::vector<double> values;
  double lo = 0.0;
  double hi = 1.0;
  double mu = 0.5;
};

/// One real per line; an optional `# lo=<a> hi=<b> mu=<m>` line sets the
/// range (defaults [0,1], mu = midpoint). Blank lines are skipped.
inline SampleFile read_sample_file(std::istream& in) {
  SampleFile sf;
  bool mu_set = false;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::stringstream ss(t.substr(1));
      std::string token;
      while (ss >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ParseError(number, "header entries must be key=value");
        const std::string key = token.substr(0, eq);
        const double value = detail::parse_real(token.substr(eq + 1), number);
        if (key == "lo") {
          sf.lo = value;
        } else if (key == "hi") {
          sf.hi = value;
        } else if (key == "mu") {
          sf.mu = value;
          mu_set = true;
        } else {
          throw ParseError(number, "unknown header key '" + key + "'");
        }
      }
      continue;
    }
    sf.values.push_back(detail::parse_real(t, number));
  }
  if (sf.values.empty()) throw ParseError(0, "sample file contains no values");
  if (!mu_set) sf.mu = 0.5 * (sf.lo + sf.hi);
  return sf;
}

/// Loss CSV `hypothesis_id,example_id,loss,oob`. Ids are mapped to dense
/// indices in increasing order; absent (hypothesis, example) cells are
/// treated as not out-of-bag.
inline PredictionLossMatrix read_loss_csv(std::istream& in) {
  detail::expect_header(in, "hypothesis_id,example_id,loss,oob");
  struct Entry {
    std::int64_t h, e;
    int loss, oob;
  };
  std::vector<Entry> entries;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::string line;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ParseError(number, "expected 4 fields");
    Entry e{detail::parse_integer(f[0], number), detail::parse_integer(f[1], number),
            static_cast<int>(detail::parse_integer(f[2], number)), static_cast<int>(detail::parse_integer(f[3], number))};
    if ((e.loss != 0 && e.loss != 1) || (e.oob != 0 && e.oob != 1)) throw ParseError(number, "loss and oob must be 0 or 1");
    if (!seen.insert({e.h, e.e}).second) throw ParseError(number, "duplicate (hypothesis_id, example_id)");
    entries.push_back(e);
  }
  if (entries.empty()) throw ParseError(0, "loss CSV contains no rows");
  std::map<std::int64_t, std::size_t> h_index, e_index;
  for (const auto& e : entries) {
    h_index.emplace(e.h, 0);
    e_index.emplace(e.e, 0);
  }
  std::size_t k = 0;
  for (auto& [id, idx] : h_index) idx = k++;
  k = 0;
  for (auto& [id, idx] : e_index) idx = k++;
  PredictionLossMatrix plm(h_index.size(), e_index.size());
  for (std::size_t h = 0; h < plm.hypotheses(); ++h) {
    auto row = plm.oob.row(h);
    std::fill(row.begin(), row.end(), std::uint8_t{0});
  }
  for (const auto& e : entries) {
    const std::size_t h = h_index[e.h];
    const std::size_t i = e_index[e.e];
    plm.loss(h, i) = static_cast<std::uint8_t>(e.loss);
    plm.oob(h, i) = static_cast<std::uint8_t>(e.oob);
  }
  return plm;
}

inline void write_loss_csv(std::ostream& out, const PredictionLossMatrix& plm) {
  out << "hypothesis_id,example_id,loss,oob\n";
  for (std::size_t h = 0; h < plm.hypotheses(); ++h) {
    for (std::size_t i = 0; i < plm.examples(); ++i) {
      out << h << ',' << i << ',' << int{plm.loss(h, i)} << ',' << int{plm.oob(h, i)} << '\n';
    }
  }
}

/// Evaluation CSV `hypothesis_id,example_id,prediction,label`; every
/// (hypothesis, example) cell must be present and an example's label must be
/// the same on all its rows.
inline EvalMatrix read_eval_csv(std::istream& in) {
  detail::expect_header(in, "hypothesis_id,example_id,prediction,label");
  std::map<std::pair<std::int64_t, std::int64_t>, int> predictions;
  std::map<std::int64_t, int> labels;
  std::set<std::int64_t> hyps;
  std::string line;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ParseError(number, "expected 4 fields");
    const auto h = detail::parse_integer(f[0], number);
    const auto e = detail::parse_integer(f[1], number);
    const auto pred = static_cast<int>(detail::parse_integer(f[2], number));
    const auto label = static_cast<int>(detail::parse_integer(f[3], number));
    if (!predictions.emplace(std::make_pair(h, e), pred).second) {
      throw ParseError(number, "duplicate (hypothesis_id, example_id)");
    }
    const auto [it, inserted] = labels.emplace(e, label);
    if (!inserted && it->second != label) throw ParseError(number, "inconsistent label for example");
    hyps.insert(h);
  }
  if (predictions.empty()) throw ParseError(0, "evaluation CSV contains no rows");
  if (predictions.size() != hyps.size() * labels.size()) throw ParseError(0, "evaluation CSV is not a full matrix");
  EvalMatrix em;
  em.predictions = Matrix<int>(hyps.size(), labels.size());
  std::size_t h_idx = 0;
  for (auto h : hyps) {
    std::size_t e_idx = 0;
    for (const auto& [e, label] : labels) em.predictions(h_idx, e_idx++) = predictions.at({h, e});
    ++h_idx;
  }
  for (const auto& [e, label] : labels) em.labels.push_back(label);
  return em;
}

inline void write_eval_csv(std::ostream& out, const EvalMatrix& em) {
  out << "hypothesis_id,example_id,prediction,label\n";
  for (std::size_t h = 0; h < em.hypotheses(); ++h) {
    for (std::size_t i = 0; i < em.examples(); ++i) {
      out << h << ',' << i << ',' << em.predictions(h, i) << ',' << em.labels[i] << '\n';
    }
  }
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param,bound,gap_mean,gap_std,repeats,n,delta,seed\n";
  for (const auto& r : rows) {
    out << format_number(r.param) << ',' << r.bound << ',' << format_number(r.gap_mean) << ','
        << format_number(r.gap_std) << ',' << r.repeats << ',' << r.n << ',' << format_number(r.delta) << ','
        << r.seed << '\n';
  }
}

}  // namespace splitkl
