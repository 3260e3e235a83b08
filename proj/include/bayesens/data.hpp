#pragma once

// LIBSVM-format datasets, train/eval splits and seeded stream orderings.
//
// Grammar (one record per line, whitespace separated):
//
//   <label> (<index>:<value>)*  [# comment]
//
// Labels +1/1 map to +1; -1/0/2 map to -1; anything else is rejected.
// Indices are 1-based and strictly increasing within a line. Absent
// features are zero. Blank and comment-only lines are skipped.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bayesens/errors.hpp"
#include "bayesens/rng.hpp"

namespace bayesens {

using FeatureIndex = std::uint32_t;

struct Feature {
  FeatureIndex index;
  double value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Binary label, always +1 or -1.
enum class Label : int { negative = -1, positive = 1 };

constexpr int sign_of(Label y) noexcept { return static_cast<int>(y); }
constexpr Label flip(Label y) noexcept { return y == Label::positive ? Label::negative : Label::positive; }

struct Sample {
  Label label = Label::positive;
  std::vector<Feature> features;  // strictly increasing indices

  FeatureIndex max_index() const noexcept { return features.empty() ? 0 : features.back().index; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  FeatureIndex dimension = 0;
  std::string name;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dimension == b.dimension && a.samples == b.samples;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline Label parse_label(std::string_view tok, std::size_t line) {
  double v = 0.0;
  if (!parse_double(tok, v)) throw ParseError(line, "non-numeric label '" + std::string(tok) + "'");
  if (v == 1.0) return Label::positive;
  if (v == -1.0 || v == 0.0 || v == 2.0) return Label::negative;
  throw ParseError(line, "unsupported label '" + std::string(tok) + "'");
}

inline Feature parse_feature(std::string_view tok, std::size_t line) {
  const auto colon = tok.find(':');
  if (colon == std::string_view::npos)
    throw ParseError(line, "expected index:value, got '" + std::string(tok) + "'");
  const auto idx_tok = tok.substr(0, colon);
  const auto val_tok = tok.substr(colon + 1);

  std::uint64_t idx = 0;
  const auto [p, ec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
  if (ec != std::errc{} || p != idx_tok.data() + idx_tok.size() || idx_tok.empty())
    throw ParseError(line, "non-numeric feature index '" + std::string(idx_tok) + "'");
  if (idx < 1 || idx > UINT32_MAX) throw ParseError(line, "feature index out of range: " + std::string(idx_tok));

  double value = 0.0;
  if (!parse_double(val_tok, value))
    throw ParseError(line, "non-numeric feature value '" + std::string(val_tok) + "'");
  if (!std::isfinite(value)) throw ParseError(line, "non-finite feature value '" + std::string(val_tok) + "'");
  return {static_cast<FeatureIndex>(idx), value};
}

}  // namespace detail

/// Parses one record. Returns false for blank/comment-only lines.
inline bool parse_libsvm_line(std::string_view raw, std::size_t line_no, Sample& out) {
  if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
  std::string_view rest = detail::trim(raw);
  if (rest.empty()) return false;

  auto next_token = [&rest]() {
    const auto end = rest.find_first_of(" \t");
    const auto tok = rest.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : detail::trim(rest.substr(end));
    return tok;
  };

  out.label = detail::parse_label(next_token(), line_no);
  out.features.clear();
  while (!rest.empty()) {
    const Feature f = detail::parse_feature(next_token(), line_no);
    if (!out.features.empty()) {
      const auto prev = out.features.back().index;
      if (f.index == prev) throw ParseError(line_no, "duplicate feature index " + std::to_string(f.index));
      if (f.index < prev) throw ParseError(line_no, "non-increasing feature index " + std::to_string(f.index));
    }
    out.features.push_back(f);
  }
  return true;
}

inline Dataset parse_libsvm(std::istream& in, std::string name = {}) {
  Dataset ds;
  ds.name = std::move(name);
  std::string line;
  std::size_t line_no = 0;
  Sample s;
  while (std::getline(in, line)) {
    ++line_no;
    if (!parse_libsvm_line(line, line_no, s)) continue;
    ds.dimension = std::max(ds.dimension, s.max_index());
    ds.samples.push_back(std::move(s));
    s = Sample{};
  }
  if (ds.samples.empty()) throw ParseError(0, "empty dataset" + (ds.name.empty() ? std::string{} : " '" + ds.name + "'"));
  return ds;
}

inline Dataset parse_libsvm(std::string_view text, std::string name = {}) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, std::move(name));
}

/// Canonical text: "+1"/"-1" labels, values in shortest round-trip form.
inline std::string to_libsvm(const Dataset& ds) {
  std::string out;
  char buf[64];
  for (const auto& s : ds.samples) {
    out += s.label == Label::positive ? "+1" : "-1";
    for (const auto& f : s.features) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, f.value);
      out += ' ';
      out += std::to_string(f.index);
      out += ':';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

/// Dataset restricted to `indices`, in that order; dimension is inherited.
inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, std::string name) {
  Dataset out;
  out.dimension = ds.dimension;
  out.name = std::move(name);
  out.samples.reserve(indices.size());
  for (auto i : indices) out.samples.push_back(ds.samples.at(i));
  return out;
}

struct SplitPlan {
  double train_fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t trial_count = 5;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction <= 0.1))
      throw ConfigError("train_fraction must lie in (0, 0.1], got " + std::to_string(train_fraction));
    if (trial_count < 1) throw ConfigError("trial_count must be >= 1");
  }
};

struct Split {
  Dataset train;
  Dataset eval;
};

/// Unstratified split: a seeded permutation of all rows; the first
/// floor(train_fraction * N) go to train (in permuted order), the rest to eval
/// (in original file order; the stream order comes from ordering()).
inline Split split(const Dataset& ds, const SplitPlan& plan, std::size_t trial_index) {
  plan.validate();
  if (trial_index >= plan.trial_count)
    throw ConfigError("trial_index " + std::to_string(trial_index) + " outside [0, " +
                      std::to_string(plan.trial_count) + ")");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::floor(plan.train_fraction * static_cast<double>(n)));
  if (n_train == 0) throw ConfigError("training split is empty (N=" + std::to_string(n) + ")");

  SplitMix64 rng(plan.seed, Stream::split, trial_index);
  auto perm = random_permutation(n, rng);
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> eval_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(eval_idx.begin(), eval_idx.end());
  return {subset(ds, train_idx, ds.name + "/train"), subset(ds, eval_idx, ds.name + "/eval")};
}

/// Stream order for one trial: a uniform permutation of eval indices.
inline std::vector<std::size_t> ordering(const Dataset& eval, std::uint64_t seed, std::size_t trial_index) {
  SplitMix64 rng(seed, Stream::ordering, trial_index);
  return random_permutation(eval.size(), rng);
}

/// Reusable dense view of a sparse sample, indexed by feature index
/// (slot 0 unused). Only the touched slots are reset between samples.
class DenseRow {
 public:
  explicit DenseRow(FeatureIndex dimension) : values_(static_cast<std::size_t>(dimension) + 1, 0.0) {}

  void load(const Sample& s) {
    for (auto i : touched_) values_[i] = 0.0;
    touched_.clear();
    for (const auto& f : s.features) {
      if (f.index < values_.size()) {
        values_[f.index] = f.value;
        touched_.push_back(f.index);
      }
    }
  }

  std::span<const double> values() const noexcept { return values_; }
  double operator[](FeatureIndex i) const noexcept { return i < values_.size() ? values_[i] : 0.0; }

 private:
  std::vector<double> values_;
  std::vector<FeatureIndex> touched_;
};

}  // namespace bayesens
