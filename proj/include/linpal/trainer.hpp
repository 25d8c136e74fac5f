#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "linpal/core.hpp"
#include "linpal/error.hpp"
#include "linpal/featurizer.hpp"
#include "linpal/model.hpp"

namespace linpal {

/// Featurized rows with binary click labels.
struct Dataset {
  FeatureSchema schema;
  HashConfig hash_config;
  FeatureBatch features;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
};

inline Dataset make_dataset(const ImpressionLog& log, const Priors& priors, const HashConfig& cfg) {
  Dataset out;
  out.schema = log.schema();
  out.hash_config = cfg;
  out.features = featurize_batch(log, priors, cfg);
  out.labels.assign(log.clicks().begin(), log.clicks().end());
  return out;
}

struct TrainConfig {
  double c_value = 1e-5;  // inverse regularization strength
  int max_iterations = 500;
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(c_value > 0.0) || !std::isfinite(c_value)) fail(ErrorKind::config, "C must be a positive finite number");
    if (!(convergence_tol > 0.0)) fail(ErrorKind::config, "convergence_tol must be > 0");
    if (max_iterations < 0) fail(ErrorKind::config, "max_iterations must be >= 0");
  }
};

/// Weights at or below this magnitude are dropped from fitted and stored models.
inline constexpr double kWeightEpsilon = 1e-12;

struct FitReport {
  int iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  bool converged = false;
};

namespace detail {

// log(1 + e^z) - y z without overflow.
inline double log_loss(double z, double y) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

inline void require_finite(double value, const char* what, int iteration) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::numeric, std::string("non-finite ") + what + " at iteration " + std::to_string(iteration));
  }
}

template <typename Map>
double squared_norm_sorted(const Map& weights) {
  std::vector<std::pair<InteractionId, double>> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  double out = 0.0;
  for (const auto& [id, w] : sorted) out += w * w;
  return out;
}

/// The dataset re-indexed onto contiguous columns (sorted by id) so the solver
/// works on dense vectors.
struct CompactProblem {
  std::vector<InteractionId> columns;
  std::vector<std::uint32_t> cells;  // row-major, `width` per row
  std::vector<double> labels;
  std::size_t width = 0;

  std::size_t rows() const { return labels.size(); }

  explicit CompactProblem(const Dataset& data) : width(data.features.width()) {
    const auto ids = data.features.ids();
    columns.assign(ids.begin(), ids.end());
    std::sort(columns.begin(), columns.end());
    columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
    std::unordered_map<InteractionId, std::uint32_t> index;
    index.reserve(columns.size() * 2);
    for (std::size_t j = 0; j < columns.size(); ++j) index.emplace(columns[j], static_cast<std::uint32_t>(j));
    cells.resize(ids.size());
    for (std::size_t e = 0; e < ids.size(); ++e) cells[e] = index.at(ids[e]);
    labels.assign(data.labels.begin(), data.labels.end());
  }

  void margins(double intercept, const std::vector<double>& w, std::vector<double>& z) const {
    z.resize(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      double s = intercept;
      const std::uint32_t* row = cells.data() + i * width;
      for (std::size_t e = 0; e < width; ++e) s += w[row[e]];
      z[i] = s;
    }
  }
};

}  // namespace detail

/// Sum of log-losses plus ||w||^2 / (2C); the intercept is not penalized.
inline double objective(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) fail(ErrorKind::empty_input, "objective of an empty dataset");
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double z = model.intercept;
    for (InteractionId id : data.features.row(i)) z += model.weight(id);
    loss += detail::log_loss(z, data.labels[i]);
  }
  const double total = loss + detail::squared_norm_sorted(model.weights) / (2.0 * model.c_value);
  detail::require_finite(total, "objective", 0);
  return total;
}

struct Gradient {
  double intercept = 0.0;
  std::map<InteractionId, double> weights;
};

/// d objective / d(intercept, w): sum_i (sigma(z_i) - y_i) x_i + w / C.
inline Gradient gradient(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) fail(ErrorKind::empty_input, "gradient of an empty dataset");
  Gradient g;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.features.row(i);
    double z = model.intercept;
    for (InteractionId id : row) z += model.weight(id);
    const double residual = sigmoid(z) - data.labels[i];
    g.intercept += residual;
    for (InteractionId id : row) g.weights[id] += residual;
  }
  for (const auto& [id, w] : model.weights) g.weights[id] += w / model.c_value;
  detail::require_finite(g.intercept, "gradient", 0);
  for (const auto& [id, v] : g.weights) detail::require_finite(v, "gradient", 0);
  return g;
}

/// Minimizes objective() from zero weights. Directions come from limited-memory
/// BFGS (10 pairs) seeded with the inverse diagonal Hessian; steps use Armijo
/// backtracking (halving, c1 = 1e-4). Stops when the relative objective
/// improvement drops below convergence_tol or after max_iterations.
inline LinearModel fit(const Dataset& data, const TrainConfig& config, FitReport* report = nullptr) {
  config.validate();
  if (data.size() == 0) fail(ErrorKind::empty_input, "cannot fit on an empty dataset");
  const auto positives = std::count(data.labels.begin(), data.labels.end(), std::uint8_t{1});
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size())) {
    fail(ErrorKind::degenerate_label, "training labels contain a single class");
  }

  const detail::CompactProblem problem(data);
  const std::size_t n = problem.rows();
  const std::size_t p = problem.columns.size();
  const std::size_t dim = p + 1;  // slot 0 is the intercept
  const std::size_t width = problem.width;
  const double inv_c = 1.0 / config.c_value;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  constexpr std::size_t kMemory = 10;

  std::vector<double> x(dim, 0.0), grad(dim), diag(dim), dir(dim);
  std::vector<double> x_prev, grad_prev;
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist, alpha(kMemory);
  std::vector<double> z(n, 0.0), dz(n), trial(n);

  auto data_loss = [&](const std::vector<double>& margins) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += detail::log_loss(margins[i], problem.labels[i]);
    return s;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
  };
  double w_norm2 = 0.0;
  double f = data_loss(z);
  FitReport local;
  local.initial_objective = f;

  int iteration = 0;
  for (; iteration < config.max_iterations; ++iteration) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(diag.begin(), diag.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(z[i]);
      const double r = prob - problem.labels[i];
      const double h = prob * (1.0 - prob);
      grad[0] += r;
      diag[0] += h;
      const std::uint32_t* row = problem.cells.data() + i * width;
      for (std::size_t e = 0; e < width; ++e) {
        grad[row[e] + 1] += r;
        diag[row[e] + 1] += h;
      }
    }
    diag[0] = std::max(diag[0], 1e-12);
    for (std::size_t j = 1; j < dim; ++j) {
      grad[j] += x[j] * inv_c;
      diag[j] += inv_c;
    }

    if (!x_prev.empty()) {
      std::vector<double> s(dim), y(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        s[j] = x[j] - x_prev[j];
        y[j] = grad[j] - grad_prev[j];
      }
      const double sy = dot(s, y);
      if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
        if (s_hist.size() == kMemory) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
          rho_hist.erase(rho_hist.begin());
        }
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
      }
    }

    // Two-loop recursion.
    dir = grad;
    for (std::size_t m = s_hist.size(); m-- > 0;) {
      alpha[m] = rho_hist[m] * dot(s_hist[m], dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] -= alpha[m] * y_hist[m][j];
    }
    for (std::size_t j = 0; j < dim; ++j) dir[j] /= diag[j];
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double beta = rho_hist[m] * dot(y_hist[m], dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] += (alpha[m] - beta) * s_hist[m][j];
    }
    for (double& d : dir) d = -d;

    double slope = dot(grad, dir);
    detail::require_finite(slope, "gradient", iteration);
    if (slope >= 0.0) {
      // Curvature memory went stale; fall back to the scaled gradient.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < dim; ++j) dir[j] = -grad[j] / diag[j];
      slope = dot(grad, dir);
      if (slope >= 0.0) {
        local.converged = true;
        break;
      }
    }
    double w_dot_d = 0.0;
    double d_norm2 = 0.0;
    for (std::size_t j = 1; j < dim; ++j) {
      w_dot_d += x[j] * dir[j];
      d_norm2 += dir[j] * dir[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = dir[0];
      const std::uint32_t* row = problem.cells.data() + i * width;
      for (std::size_t e = 0; e < width; ++e) s += dir[row[e] + 1];
      dz[i] = s;
    }

    double t = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = z[i] + t * dz[i];
      const double penalty = 0.5 * inv_c * (w_norm2 + 2.0 * t * w_dot_d + t * t * d_norm2);
      f_new = data_loss(trial) + penalty;
      detail::require_finite(f_new, "objective", iteration);
      if (f_new <= f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (-slope <= 1e-12 * std::max(1.0, std::abs(f))) {
        local.converged = true;
        break;
      }
      fail(ErrorKind::optimization, "line search exhausted at iteration " + std::to_string(iteration) +
                                        " (objective " + std::to_string(f) + ")");
    }

    x_prev = x;
    grad_prev = grad;
    w_norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) x[j] += t * dir[j];
    for (std::size_t j = 1; j < dim; ++j) w_norm2 += x[j] * x[j];
    z.swap(trial);
    const double improvement = (f - f_new) / std::max(1.0, std::abs(f));
    f = f_new;
    if (improvement < config.convergence_tol) {
      local.converged = true;
      ++iteration;
      break;
    }
  }
  const double b = x[0];
  const std::vector<double> w(x.begin() + 1, x.end());
  // Recompute margins from the accumulated weights so the reported objective is exact.
  problem.margins(b, w, z);
  local.final_objective = data_loss(z) + 0.5 * inv_c * w_norm2;
  local.iterations = iteration;

  LinearModel model;
  model.schema = data.schema;
  model.hash_config = data.hash_config;
  model.c_value = config.c_value;
  model.intercept = b;
  model.weights.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (std::abs(w[j]) > kWeightEpsilon) model.weights.emplace(problem.columns[j], w[j]);
  }
  if (report) *report = local;
  return model;
}

}  // namespace linpal
