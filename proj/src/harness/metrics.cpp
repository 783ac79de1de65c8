// Copyright 2026 The flexconv Authors
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

#include <ostream>
#include <string>

#include "flexconv/core/cloud_io.hpp"
#include "flexconv/core/error.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> labels, std::size_t classes) {
  require(predicted.size() == labels.size(), ErrorKind::ShapeMismatch, "prediction and label counts differ");
  require(!labels.empty(), ErrorKind::EmptyInput, "nothing to evaluate");
  require(classes >= 1, ErrorKind::ConfigInvalid, "need at least one class");
  Metrics m;
  m.classes = classes;
  m.confusion.assign(classes * classes, 0);
  auto check = [classes](int v, const char* what) {
    if (v < 0 || static_cast<std::size_t>(v) >= classes)
      fail(ErrorKind::IndexOutOfRange,
           std::string(what) + " " + std::to_string(v) + " outside [0, " + std::to_string(classes) + ")");
  };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check(labels[i], "label");
    check(predicted[i], "prediction");
    ++m.confusion[static_cast<std::size_t>(labels[i]) * classes + static_cast<std::size_t>(predicted[i])];
    correct += labels[i] == predicted[i] ? 1 : 0;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  m.iou.assign(classes, 0.0);
  m.present.assign(classes, false);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t support = 0, predicted_c = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      support += m.at(c, o);
      predicted_c += m.at(o, c);
    }
    const std::size_t tp = m.at(c, c);
    const std::size_t uni = support + predicted_c - tp;  // TP + FN + FP
    m.iou[c] = uni == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(uni);
    if (support > 0) {
      m.present[c] = true;
      sum += m.iou[c];
      ++present;
    }
  }
  m.miou = present == 0 ? 0.0 : sum / static_cast<double>(present);
  return m;
}

Metrics evaluate(const Matrix& logits, std::span<const int> labels) {
  const std::vector<int> predicted = argmax_rows(logits);
  return evaluate_predictions(predicted, labels, logits.cols());
}

void write_metrics_csv(std::ostream& out, const Metrics& m) {
  out << "metric,value\n";
  out << "accuracy," << format_real(m.accuracy) << '\n';
  out << "miou," << format_real(m.miou) << '\n';
  for (std::size_t c = 0; c < m.classes; ++c) out << "iou_" << c << ',' << format_real(m.iou[c]) << '\n';
}

}  // namespace flexconv
