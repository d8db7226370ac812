#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "perch/error.hpp"
#include "perch/fusion.hpp"
#include "perch/geometry.hpp"
#include "perch/rng.hpp"

namespace perch {

struct CalibSample {
  Pose4 gt;
  Pose4 p1;  // large marker
  Pose4 p2;  // small marker
};

enum CalibAxis : int { kAxisX = 0, kAxisY, kAxisZ, kAxisPsi };

struct CalibResult {
  SigmaSet sigma;
  std::array<double, 4> unclamped{};
  std::array<double, 4> per_axis_residual_rms{};
  std::array<bool, 4> indeterminate{};
  std::size_t n_samples = 0;
};

namespace detail {

/// Regression pair for one axis: target d = gt - p2, regressor x = p1 - p2.
/// Yaw differences are wrapped.
inline std::pair<double, double> calib_pair(const CalibSample &s, int axis) {
  switch (axis) {
    case kAxisX: return {s.gt.x - s.p2.x, s.p1.x - s.p2.x};
    case kAxisY: return {s.gt.y - s.p2.y, s.p1.y - s.p2.y};
    case kAxisZ: return {s.gt.z - s.p2.z, s.p1.z - s.p2.z};
    default: return {wrap_angle(s.gt.yaw - s.p2.yaw), wrap_angle(s.p1.yaw - s.p2.yaw)};
  }
}

inline void set_sigma(SigmaSet &s, int axis, double v) {
  switch (axis) {
    case kAxisX: s.x = v; break;
    case kAxisY: s.y = v; break;
    case kAxisZ: s.z = v; break;
    default: s.psi = v; break;
  }
}

inline double residual_rms(const std::vector<CalibSample> &samples, int axis, double sigma) {
  double acc = 0.0;
  for (const auto &s : samples) {
    const auto [d, x] = calib_pair(s, axis);
    const double e = d - sigma * x;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

inline void validate_samples(const std::vector<CalibSample> &samples) {
  if (samples.size() < 2) throw Error(ErrorCode::kInvalidArgument, "calibration needs at least 2 samples");
  for (const auto &s : samples) {
    for (const Pose4 *p : {&s.gt, &s.p1, &s.p2}) {
      if (!std::isfinite(p->x) || !std::isfinite(p->y) || !std::isfinite(p->z) || !std::isfinite(p->yaw)) {
        throw Error(ErrorCode::kInvalidArgument, "calibration sample is not finite");
      }
    }
  }
}

}  // namespace detail

/// Least-squares minimizer of the mean squared blend error, per axis:
/// sigma = sum(d x) / sum(x^2), clamped to [0, 1].
inline CalibResult fit_sigma_closed_form(const std::vector<CalibSample> &samples) {
  detail::validate_samples(samples);
  CalibResult out;
  out.n_samples = samples.size();
  for (int axis = 0; axis < 4; ++axis) {
    double sxd = 0.0;
    double sxx = 0.0;
    for (const auto &s : samples) {
      const auto [d, x] = detail::calib_pair(s, axis);
      sxd += d * x;
      sxx += x * x;
    }
    double sigma = 0.5;
    if (sxx > 1e-12) {
      sigma = sxd / sxx;
    } else {
      out.indeterminate[axis] = true;
    }
    out.unclamped[axis] = sigma;
    sigma = std::clamp(sigma, 0.0, 1.0);
    detail::set_sigma(out.sigma, axis, sigma);
    out.per_axis_residual_rms[axis] = detail::residual_rms(samples, axis, sigma);
  }
  return out;
}

/// Stochastic LMS: sigma <- sigma + mu * e * x per sample, sigma starting at
/// 0.5, samples reshuffled each epoch. Throws kStepSize when the epoch cost
/// rises three epochs in a row or goes non-finite.
inline CalibResult fit_sigma_lms(const std::vector<CalibSample> &samples, double mu, int epochs, std::uint64_t seed) {
  detail::validate_samples(samples);
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::kInvalidArgument, "fit_sigma_lms: mu must be >= 0");
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "fit_sigma_lms: epochs must be >= 0");

  CalibResult out;
  out.n_samples = samples.size();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::array<double, 4> sigma{0.5, 0.5, 0.5, 0.5};
  std::array<double, 4> sxx{};
  for (const auto &s : samples) {
    for (int axis = 0; axis < 4; ++axis) {
      const double x = detail::calib_pair(s, axis).second;
      sxx[axis] += x * x;
    }
  }

  std::array<double, 4> start_cost{};
  for (int axis = 0; axis < 4; ++axis) start_cost[axis] = detail::residual_rms(samples, axis, 0.5);

  Rng rng(seed);
  std::array<double, 4> prev_cost{};
  std::array<int, 4> rising{};
  prev_cost.fill(std::numeric_limits<double>::infinity());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the portable generator.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      for (int axis = 0; axis < 4; ++axis) {
        const auto [d, x] = detail::calib_pair(samples[idx], axis);
        const double e = d - sigma[axis] * x;
        sigma[axis] += mu * e * x;
      }
    }
    for (int axis = 0; axis < 4; ++axis) {
      const double cost = detail::residual_rms(samples, axis, sigma[axis]);
      if (!std::isfinite(cost)) {
        throw Error(ErrorCode::kStepSize, "fit_sigma_lms: iteration diverged (non-finite cost)");
      }
      // Stochastic jitter near the optimum can rise a few epochs in a row; only a
      // climb that has also left the starting cost behind counts.
      const bool rose = cost > 1e-12 && cost > prev_cost[axis] * (1.0 + 1e-6) && cost > 2.0 * start_cost[axis];
      rising[axis] = rose ? rising[axis] + 1 : 0;
      if (rising[axis] >= 3) {
        throw Error(ErrorCode::kStepSize, "fit_sigma_lms: cost increased for 3 consecutive epochs; reduce mu");
      }
      prev_cost[axis] = cost;
    }
  }

  for (int axis = 0; axis < 4; ++axis) {
    out.indeterminate[axis] = !(sxx[axis] > 1e-12);
    out.unclamped[axis] = sigma[axis];
    const double clamped = std::clamp(sigma[axis], 0.0, 1.0);
    detail::set_sigma(out.sigma, axis, clamped);
    out.per_axis_residual_rms[axis] = detail::residual_rms(samples, axis, clamped);
  }
  return out;
}

}  // namespace perch
