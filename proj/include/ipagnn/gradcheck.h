// Copyright 2026 The ipagnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "ipagnn/autodiff.h"
#include "ipagnn/params.h"

namespace ipagnn {

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_parameter;
  std::int64_t worst_index = -1;
  double analytic = 0;
  double numeric = 0;
  std::int64_t coordinates = 0;
};

// Compares reverse-mode gradients at f64 against central differences over
// every coordinate of every parameter in `store`:
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
//
// `loss_fn(tape, params)` must be generic over the scalar type. The analytic
// pass runs on Tape<double> with `store`; the central differences evaluate
// the same function in extended precision on a copy of `store`, so their
// rounding noise stays far below the gradients being checked.
template <typename LossFn>
GradCheckReport grad_check(LossFn&& loss_fn, ParameterStore<double>& store,
                           double h = 1e-5) {
  using Wide = long double;
  store.zero_grad();
  {
    ad::Tape<double> tape;
    tape.backward(loss_fn(tape, store));
  }
  ParameterStore<Wide> wide;
  for (const auto& p : store.all()) {
    wide.add(p.name, p.shape, {p.value.begin(), p.value.end()});
  }
  auto eval = [&] {
    ad::Tape<Wide> tape;
    return loss_fn(tape, wide).item();
  };
  GradCheckReport report;
  for (const auto& p : store.all()) {
    auto& w = wide.get(p.name).value;
    for (size_t i = 0; i < p.value.size(); ++i) {
      const Wide saved = w[i];
      w[i] = saved + h;
      const Wide up = eval();
      w[i] = saved - h;
      const Wide down = eval();
      w[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2 * h));
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++report.coordinates;
      if (rel > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = rel;
        report.worst_parameter = p.name;
        report.worst_index = static_cast<std::int64_t>(i);
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ipagnn
