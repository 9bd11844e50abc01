// Copyright 2026 The rangeseg Authors.
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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "rangeseg/pipeline.hpp"
#include "rangeseg/rng.hpp"
#include "rangeseg/synthetic.hpp"

namespace rangeseg {
namespace {

constexpr int kAuditClasses = 4;
constexpr double kStep = 1e-6;
constexpr double kTolerance = 1e-4;

Matrix random_logits(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2.0, 2.0);
  return m;
}

std::vector<int> random_targets(Rng& rng, std::size_t n, int classes) {
  std::vector<int> t(n);
  for (int& v : t) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  return t;
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||), central differences.
double fd_residual(const Matrix& x, const Matrix& analytic,
                   const std::function<double(const Matrix&)>& loss) {
  Matrix numeric(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + kStep;
    const double up = loss(probe);
    probe.data()[i] = orig - kStep;
    const double down = loss(probe);
    probe.data()[i] = orig;
    numeric.data()[i] = (up - down) / (2.0 * kStep);
  }
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale == 0.0 ? 0.0 : (analytic - numeric).norm() / scale;
}

ClassStats audit_stats(Rng& rng) {
  const ClassConfig cfg = synthetic_class_config(kAuditClasses, 2);
  std::vector<double> f(kAuditClasses + 1, 0.0), sem(kAuditClasses + 1, 0.0),
      ins(kAuditClasses + 1, 0.0);
  double total = 0.0;
  for (int c = 1; c <= kAuditClasses; ++c) {
    f[static_cast<std::size_t>(c)] = std::pow(10.0, rng.uniform(-4.0, -0.5));
    total += f[static_cast<std::size_t>(c)];
  }
  for (int c = 1; c <= kAuditClasses; ++c) {
    const auto k = static_cast<std::size_t>(c);
    f[k] /= total;
    sem[k] = std::floor(rng.uniform(100.0, 1000.0));
    ins[k] = std::floor(sem[k] * rng.uniform(1.0, 5.0));
  }
  return stats_from_frequencies(f, sem, ins, kDefaultEps, cfg);
}

}  // namespace

bool AuditReport::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const AuditLine& l) { return l.pass; });
}

std::string AuditReport::text() const {
  std::ostringstream os;
  char buf[128];
  for (const AuditLine& l : lines) {
    std::snprintf(buf, sizeof buf, "%-24s residual %.3e  tol %.0e  %s\n", l.name.c_str(),
                  l.residual, l.tolerance, l.pass ? "PASS" : "FAIL");
    os << buf;
  }
  return os.str();
}

AuditReport cmd_loss_audit(const PipelineConfig& config, int instances, bool flip_focal_sign) {
  Rng rng(config.seed);
  const ClassStats stats = audit_stats(rng);
  const double gamma = config.loss.gamma;
  const int theta = config.loss.boundary_theta;

  struct Check {
    std::string name;
    std::function<double(Rng&)> run;  // returns the residual of one instance
  };
  std::vector<Check> checks;
  const std::pair<const char*, BalanceStrategy> strategies[] = {
      {"N", BalanceStrategy::kNone}, {"C", BalanceStrategy::kClass},
      {"U", BalanceStrategy::kUnified}};
  for (const auto& [label, strategy] : strategies) {
    const std::vector<double> weights = focal_class_weights(stats, strategy);
    checks.push_back({std::string("focal/") + label, [=](Rng& r) {
                        const auto h = static_cast<Eigen::Index>(1 + r.below(8));
                        const auto w = static_cast<Eigen::Index>(1 + r.below(8));
                        const Matrix probs = softmax_rows(random_logits(r, h * w, kAuditClasses));
                        const auto targets = random_targets(r, static_cast<std::size_t>(h * w),
                                                            kAuditClasses);
                        Matrix grad = weighted_focal_loss(probs, targets, gamma, weights).grad;
                        if (flip_focal_sign) grad = -grad;
                        return fd_residual(probs, grad, [&](const Matrix& p) {
                          return weighted_focal_loss(p, targets, gamma, weights).value;
                        });
                      }});
  }
  checks.push_back({"classification", [&](Rng& r) {
                      const auto q = static_cast<Eigen::Index>(1 + r.below(8));
                      const Matrix logits = random_logits(r, q, kAuditClasses + 1);
                      const auto targets =
                          random_targets(r, static_cast<std::size_t>(q), kAuditClasses + 1);
                      const double eos = config.loss.no_object_weight;
                      return fd_residual(logits, classification_loss(logits, targets, eos).grad,
                                         [&](const Matrix& l) {
                                           return classification_loss(l, targets, eos).value;
                                         });
                    }});
  checks.push_back({"lovasz", [&](Rng& r) {
                      const auto n = static_cast<Eigen::Index>(1 + r.below(64));
                      const Matrix probs = softmax_rows(random_logits(r, n, kAuditClasses));
                      const auto targets =
                          random_targets(r, static_cast<std::size_t>(n), kAuditClasses);
                      return fd_residual(probs, lovasz_softmax(probs, targets).grad,
                                         [&](const Matrix& p) {
                                           return lovasz_softmax(p, targets).value;
                                         });
                    }});
  checks.push_back({"boundary", [&](Rng& r) {
                      const int h = 1 + static_cast<int>(r.below(8));
                      const int w = 1 + static_cast<int>(r.below(8));
                      const Matrix probs =
                          softmax_rows(random_logits(r, static_cast<Eigen::Index>(h) * w,
                                                     kAuditClasses));
                      const auto targets =
                          random_targets(r, static_cast<std::size_t>(h * w), kAuditClasses);
                      return fd_residual(probs, boundary_loss(probs, targets, h, w, theta).grad,
                                         [&](const Matrix& p) {
                                           return boundary_loss(p, targets, h, w, theta).value;
                                         });
                    }});

  AuditReport report;
  for (const Check& check : checks) {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) worst = std::max(worst, check.run(rng));
    report.lines.push_back({check.name, worst, kTolerance, worst < kTolerance});
  }

  double gap = 0.0;
  for (int i = 0; i < instances; ++i) {
    const Matrix probs = softmax_rows(random_logits(rng, 16, kAuditClasses));
    const auto targets = random_targets(rng, 16, kAuditClasses);
    const double focal = weighted_focal_loss(probs, targets, 0.0, {}).value;
    gap = std::max(gap, std::abs(focal - cross_entropy(probs, targets).value));
  }
  report.lines.push_back({"focal(gamma=0,N) vs CE", gap, 1e-10, gap <= 1e-10});
  return report;
}

}  // namespace rangeseg
