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
#include "maskpipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "maskpipe/errors.hpp"

namespace maskpipe {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

ConfusionCounts::ConfusionCounts(std::vector<std::string> class_names)
    : class_names_(std::move(class_names)), cells_(class_names_.size() * class_names_.size(), 0) {
  if (class_names_.empty()) throw ParameterError("confusion counts need at least one class");
}

void ConfusionCounts::update(std::size_t actual, std::size_t predicted) {
  if (actual >= classes() || predicted >= classes()) {
    throw ParameterError("class index (" + std::to_string(actual) + ", " +
                         std::to_string(predicted) + ") out of range for " +
                         std::to_string(classes()) + " classes");
  }
  ++cells_[actual * classes() + predicted];
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.class_names_ != class_names_) {
    throw ParameterError("cannot merge confusion counts over different class lists");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
}

std::uint64_t ConfusionCounts::at(std::size_t actual, std::size_t predicted) const {
  if (actual >= classes() || predicted >= classes()) throw ParameterError("class index out of range");
  return cells_[actual * classes() + predicted];
}

void ConfusionCounts::set(std::size_t actual, std::size_t predicted, std::uint64_t count) {
  if (actual >= classes() || predicted >= classes()) throw ParameterError("class index out of range");
  cells_[actual * classes() + predicted] = count;
}

std::uint64_t ConfusionCounts::total() const {
  std::uint64_t sum = 0;
  for (const auto v : cells_) sum += v;
  return sum;
}

std::uint64_t ConfusionCounts::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < classes(); ++i) sum += cells_[i * classes() + i];
  return sum;
}

BinaryRates binary_rates(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  if (tp + tn + fp + fn == 0) throw ParameterError("binary_rates: all counts are zero");
  BinaryRates r;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

EvalReport build_report(const ConfusionCounts& counts) {
  const std::uint64_t total = counts.total();
  if (total == 0) throw ParameterError("build_report: no samples counted");
  const std::size_t k = counts.classes();

  EvalReport report;
  report.total = total;
  report.accuracy = ratio(counts.trace(), total);
  report.macro_avg.name = "macro avg";
  report.weighted_avg.name = "weighted avg";
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t tp = counts.at(c, c), fn = 0, fp = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == c) continue;
      fn += counts.at(c, j);
      fp += counts.at(j, c);
    }
    const std::uint64_t tn = total - tp - fn - fp;
    const BinaryRates r = binary_rates(tp, tn, fp, fn);
    report.rows.push_back(ClassRow{counts.class_names()[c], r.precision, r.recall, r.f1, tp + fn});
  }
  double wp = 0, wr = 0, wf = 0;
  for (const ClassRow& row : report.rows) {
    report.macro_avg.precision += row.precision;
    report.macro_avg.recall += row.recall;
    report.macro_avg.f1 += row.f1;
    const auto s = static_cast<double>(row.support);
    wp += s * row.precision;
    wr += s * row.recall;
    wf += s * row.f1;
  }
  const auto kd = static_cast<double>(k);
  const auto td = static_cast<double>(total);
  report.macro_avg.precision /= kd;
  report.macro_avg.recall /= kd;
  report.macro_avg.f1 /= kd;
  report.macro_avg.support = total;
  report.weighted_avg = ClassRow{"weighted avg", wp / td, wr / td, wf / td, total};

  report.normalized = normalize(counts);
  report.counts.assign(k, std::vector<std::uint64_t>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) report.counts[i][j] = counts.at(i, j);
  }
  return report;
}

std::vector<std::vector<double>> normalize(const ConfusionCounts& counts) {
  const std::size_t k = counts.classes();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < k; ++j) row += counts.at(i, j);
    for (std::size_t j = 0; j < k; ++j) m[i][j] = ratio(counts.at(i, j), row);
  }
  return m;
}

std::string format_rate(double value) {
  // Rates are ratios of integers; the nudge keeps decimal ties (x.xx5) rounding up
  // despite binary representation error.
  const double hundredths = std::floor(value * 100.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", hundredths / 100.0);
  return buf;
}

std::string render_report_text(const EvalReport& report) {
  std::size_t name_width = std::string("weighted avg").size();
  for (const auto& row : report.rows) name_width = std::max(name_width, row.name.size());
  constexpr std::size_t kCol = 10;

  std::ostringstream out;
  out << std::string(name_width, ' ') << pad_left("precision", kCol) << pad_left("recall", kCol)
      << pad_left("f1-score", kCol) << pad_left("support", kCol) << "\n\n";
  auto line = [&](const ClassRow& row) {
    out << pad_left(row.name, name_width) << pad_left(format_rate(row.precision), kCol)
        << pad_left(format_rate(row.recall), kCol) << pad_left(format_rate(row.f1), kCol)
        << pad_left(std::to_string(row.support), kCol) << "\n";
  };
  for (const auto& row : report.rows) line(row);
  out << "\n"
      << pad_left("accuracy", name_width) << std::string(2 * kCol, ' ')
      << pad_left(format_rate(report.accuracy), kCol)
      << pad_left(std::to_string(report.total), kCol) << "\n";
  line(report.macro_avg);
  line(report.weighted_avg);
  return out.str();
}

std::string render_matrix_text(const std::vector<std::vector<double>>& matrix) {
  std::ostringstream out;
  for (const auto& row : matrix) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << '\t';
      out << format_rate(row[j]);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  using ojson = nlohmann::ordered_json;
  auto row_json = [](const ClassRow& r) {
    return ojson{{"precision", r.precision},
                 {"recall", r.recall},
                 {"f1", r.f1},
                 {"support", r.support}};
  };
  auto row_rendered = [](const ClassRow& r) {
    return ojson{{"precision", format_rate(r.precision)},
                 {"recall", format_rate(r.recall)},
                 {"f1", format_rate(r.f1)},
                 {"support", r.support}};
  };
  ojson classes = ojson::object();
  ojson rendered_classes = ojson::object();
  for (const auto& row : report.rows) {
    classes[row.name] = row_json(row);
    rendered_classes[row.name] = row_rendered(row);
  }
  ojson rendered_matrix = ojson::array();
  for (const auto& row : report.normalized) {
    ojson r = ojson::array();
    for (const double v : row) r.push_back(format_rate(v));
    rendered_matrix.push_back(std::move(r));
  }
  return ojson{
      {"classes", std::move(classes)},
      {"accuracy", report.accuracy},
      {"macro_avg", row_json(report.macro_avg)},
      {"weighted_avg", row_json(report.weighted_avg)},
      {"total", report.total},
      {"confusion_matrix", report.counts},
      {"normalized_confusion_matrix", report.normalized},
      {"rendered",
       {{"classes", std::move(rendered_classes)},
        {"accuracy", format_rate(report.accuracy)},
        {"macro_avg", row_rendered(report.macro_avg)},
        {"weighted_avg", row_rendered(report.weighted_avg)},
        {"normalized_confusion_matrix", std::move(rendered_matrix)}}},
  };
}

}  // namespace maskpipe
