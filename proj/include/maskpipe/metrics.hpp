// Copyright 2026 The maskpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace maskpipe {

/// Square confusion matrix; rows are actual classes, columns predicted.
class ConfusionCounts {
 public:
  explicit ConfusionCounts(std::vector<std::string> class_names);

  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t classes() const { return class_names_.size(); }

  void update(std::size_t actual, std::size_t predicted);
  /// Cell-wise sum of another shard with the same class list.
  void merge(const ConfusionCounts& other);

  std::uint64_t at(std::size_t actual, std::size_t predicted) const;
  void set(std::size_t actual, std::size_t predicted, std::uint64_t count);
  std::uint64_t total() const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;

 private:
  std::vector<std::string> class_names_;
  std::vector<std::uint64_t> cells_;
};

struct BinaryRates {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

/// Precision, recall, accuracy and F1 from binary outcome counts; 0/0 yields 0.
BinaryRates binary_rates(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn);

struct ClassRow {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::vector<ClassRow> rows;
  double accuracy = 0.0;
  ClassRow macro_avg;     // name "macro avg"
  ClassRow weighted_avg;  // name "weighted avg"
  std::uint64_t total = 0;
  std::vector<std::vector<double>> normalized;
  std::vector<std::vector<std::uint64_t>> counts;
};

/// One-vs-rest rates per class plus accuracy and macro/weighted averages.
EvalReport build_report(const ConfusionCounts& counts);

/// Each row divided by its sum; all-zero rows stay zero.
std::vector<std::vector<double>> normalize(const ConfusionCounts& counts);

/// Two decimals, half-up.
std::string format_rate(double value);

/// Plain-text classification report in the usual precision/recall/f1-score/support layout.
std::string render_report_text(const EvalReport& report);
/// Normalized confusion matrix, one row per line, two decimals.
std::string render_matrix_text(const std::vector<std::vector<double>>& matrix);

/// Full-precision values plus a "rendered" block holding the two-decimal strings.
nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace maskpipe
