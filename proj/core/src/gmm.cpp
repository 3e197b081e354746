// Copyright 2026 The netal Authors.
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

#include "netal/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace netal {
namespace {

double component_log_density(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                             const auto& x) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double s = 0.0;
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double d = x[j] - mean[j];
    s += log_2pi + std::log(var[j]) + d * d / var[j];
  }
  return -0.5 * s;
}

// log sum_k w_k N(x | k), filling per-component log terms into `terms`.
double mixture_log_terms(const GaussianMixture& g, const auto& x, std::vector<double>& terms) {
  terms.resize(g.components());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.components(); ++k) {
    terms[k] = g.weights[k] > 0.0
                   ? std::log(g.weights[k]) + component_log_density(g.means[k], g.variances[k], x)
                   : -std::numeric_limits<double>::infinity();
    best = std::max(best, terms[k]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

}  // namespace

double GaussianMixture::log_density(const Eigen::VectorXd& x) const {
  std::vector<double> terms;
  return mixture_log_terms(*this, x, terms);
}

double gmm_log_likelihood(const GaussianMixture& gmm, const FeatureMatrix& points) {
  std::vector<double> terms;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) ll += mixture_log_terms(gmm, points.col(i), terms);
  return ll;
}

GmmFit fit_gmm(const FeatureMatrix& points, std::size_t components, std::size_t em_iters,
               std::uint64_t rng_seed) {
  const auto n = static_cast<std::size_t>(points.cols());
  const Eigen::Index dim = points.rows();
  if (components == 0) throw ConfigError("fit_gmm: need at least one component");
  if (n < components) {
    throw DataError("fit_gmm: " + std::to_string(n) + " points cannot support " +
                    std::to_string(components) + " components");
  }

  Rng rng(rng_seed);
  GmmFit fit;
  auto& g = fit.model;

  // k-means++ seeding.
  std::vector<std::size_t> centers;
  centers.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < components) {
    const auto& c = points.col(static_cast<Eigen::Index>(centers.back()));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.col(static_cast<Eigen::Index>(i)) - c).squaredNorm());
      total += d2[i];
    }
    std::size_t next = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
      next = pick(rng);
    } else {
      next = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(next);
  }

  const Eigen::VectorXd global_mean = points.rowwise().mean();
  Eigen::VectorXd global_var =
      (points.colwise() - global_mean).array().square().rowwise().mean().matrix();
  global_var = global_var.cwiseMax(GaussianMixture::kVarianceFloor);
  for (std::size_t k = 0; k < components; ++k) {
    g.weights.push_back(1.0 / static_cast<double>(components));
    g.means.push_back(points.col(static_cast<Eigen::Index>(centers[k])));
  }

  // Starting spreads come from a hard nearest-center split; one shared global
  // variance lets well-separated clusters stall in a merged saddle.
  std::vector<Eigen::VectorXd> sq(components, Eigen::VectorXd::Zero(dim));
  std::vector<std::size_t> count(components, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = points.col(static_cast<Eigen::Index>(i));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < components; ++k) {
      const double d = (x - g.means[k]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    sq[best] += (x - g.means[best]).cwiseAbs2();
    ++count[best];
  }
  for (std::size_t k = 0; k < components; ++k) {
    g.variances.push_back(count[k] >= 2
                              ? (sq[k] / static_cast<double>(count[k]))
                                    .cwiseMax(GaussianMixture::kVarianceFloor)
                                    .eval()
                              : global_var);
  }

  std::vector<double> terms;
  Eigen::MatrixXd resp(static_cast<Eigen::Index>(components), static_cast<Eigen::Index>(n));
  auto e_step = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lse = mixture_log_terms(g, points.col(static_cast<Eigen::Index>(i)), terms);
      ll += lse;
      for (std::size_t k = 0; k < components; ++k) {
        resp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = std::exp(terms[k] - lse);
      }
    }
    return ll;
  };

  double ll = e_step();
  fit.log_likelihood.push_back(ll);
  for (std::size_t it = 0; it < em_iters; ++it) {
    for (std::size_t k = 0; k < components; ++k) {
      const auto r = resp.row(static_cast<Eigen::Index>(k));
      const double nk = r.sum();
      g.weights[k] = nk / static_cast<double>(n);
      if (nk <= 0.0) continue;
      Eigen::VectorXd mean = (points * r.transpose()) / nk;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        var += r[ii] * (points.col(ii) - mean).cwiseAbs2();
      }
      g.means[k] = std::move(mean);
      g.variances[k] = (var / nk).cwiseMax(GaussianMixture::kVarianceFloor);
    }
    const double next = e_step();
    fit.log_likelihood.push_back(next);
    ++fit.iterations;
    const double gain = (next - ll) / static_cast<double>(n);
    ll = next;
    if (gain < 1e-6) break;
  }
  return fit;
}

FeatureMatrix sample_gmm(const GaussianMixture& gmm, std::size_t n, std::uint64_t rng_seed,
                         std::vector<std::size_t>* component_of) {
  const auto dim = static_cast<Eigen::Index>(gmm.dimension());
  FeatureMatrix out(dim, static_cast<Eigen::Index>(n));
  if (component_of) component_of->assign(n, 0);
  if (n == 0) return out;
  if (gmm.components() == 0) throw DataError("sample_gmm: empty mixture");
  Rng rng(rng_seed);
  std::discrete_distribution<std::size_t> pick(gmm.weights.begin(), gmm.weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    if (component_of) (*component_of)[i] = k;
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(j, static_cast<Eigen::Index>(i)) =
          gmm.means[k][j] + std::sqrt(gmm.variances[k][j]) * normal(rng);
    }
  }
  return out;
}

}  // namespace netal
