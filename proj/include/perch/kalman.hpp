#pragma once

#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Core>
#include <Eigen/LU>

#include "perch/error.hpp"
#include "perch/geometry.hpp"

namespace perch {

using KfVector = Eigen::Matrix<double, 8, 1>;
using KfMatrix = Eigen::Matrix<double, 8, 8>;
using KfMeasurement = Eigen::Matrix<double, 4, 1>;
using KfObservation = Eigen::Matrix<double, 4, 8>;

/// State layout: (psi, psi_dot, tx, tx_dot, ty, ty_dot, tz, tz_dot).
enum KfIndex : int { kPsi = 0, kPsiDot, kTx, kTxDot, kTy, kTyDot, kTz, kTzDot };

struct KfConfig {
  double k1 = 1e-4;  // R = k1 * I4
  double k2 = 1e-5;  // Q = k2 * I8
  double alpha = 0.85;
  int n_max = 8;
  double init_pos_var = 1e-4;
  double init_vel_var = 1e-2;
  /// Off by default. When set, replaces k1 * I4 with diag(psi, x, y, z).
  std::optional<std::array<double, 4>> r_diag;
  /// Coast order: decay the velocity before propagating the position with it.
  /// Default (false) propagates with the pre-decay velocity, then decays.
  bool decay_before_propagate = false;

  void validate() const {
    if (!(k1 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf: k1 must be positive");
    if (!(k2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf: k2 must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "kf: alpha must lie in (0, 1]");
    if (n_max < 1) throw Error(ErrorCode::kInvalidArgument, "kf: n_max must be >= 1");
    if (!(init_pos_var > 0.0 && init_vel_var > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "kf: initial variances must be positive");
    }
    if (r_diag) {
      for (double v : *r_diag) {
        if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf: r_diag entries must be positive");
      }
    }
  }
};

struct KfState {
  KfVector x = KfVector::Zero();
  KfMatrix p = KfMatrix::Identity();
  int miss_count = 0;
  double last_time = 0.0;

  Pose4 pose() const { return {x(kTx), x(kTy), x(kTz), x(kPsi)}; }
};

inline KfMatrix kf_transition(double dt) {
  KfMatrix f = KfMatrix::Identity();
  for (int i = 0; i < 8; i += 2) f(i, i + 1) = dt;
  return f;
}

inline KfObservation kf_observation() {
  KfObservation h = KfObservation::Zero();
  h(0, kPsi) = 1.0;
  h(1, kTx) = 1.0;
  h(2, kTy) = 1.0;
  h(3, kTz) = 1.0;
  return h;
}

inline Eigen::Matrix4d kf_measurement_noise(const KfConfig &cfg) {
  if (cfg.r_diag) {
    const auto &d = *cfg.r_diag;
    return Eigen::Vector4d(d[0], d[1], d[2], d[3]).asDiagonal();
  }
  return cfg.k1 * Eigen::Matrix4d::Identity();
}

/// Measurement vector in H order: (psi, x, y, z).
inline KfMeasurement to_measurement(const Pose4 &z) { return {z.yaw, z.x, z.y, z.z}; }

inline KfState kf_init(const Pose4 &z, const KfConfig &cfg, double t) {
  if (!std::isfinite(z.x) || !std::isfinite(z.y) || !std::isfinite(z.z) || !std::isfinite(z.yaw)) {
    throw Error(ErrorCode::kInvalidArgument, "kf_init: non-finite measurement");
  }
  KfState s;
  s.x.setZero();
  s.x(kPsi) = wrap_angle(z.yaw);
  s.x(kTx) = z.x;
  s.x(kTy) = z.y;
  s.x(kTz) = z.z;
  s.p.setZero();
  for (int i = 0; i < 8; i += 2) {
    s.p(i, i) = cfg.init_pos_var;
    s.p(i + 1, i + 1) = cfg.init_vel_var;
  }
  s.miss_count = 0;
  s.last_time = t;
  return s;
}

/// x <- F x, P <- F P F^T + k2 I. The mean is propagated componentwise so the
/// velocity entries pass through untouched.
inline KfState kf_predict(KfState s, double dt, const KfConfig &cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf_predict: dt must be positive");
  for (int i = 0; i < 8; i += 2) s.x(i) += s.x(i + 1) * dt;
  s.x(kPsi) = wrap_angle(s.x(kPsi));
  const KfMatrix f = kf_transition(dt);
  s.p = f * s.p * f.transpose() + cfg.k2 * KfMatrix::Identity();
  s.p = (0.5 * (s.p + s.p.transpose())).eval();
  s.last_time += dt;
  return s;
}

/// Measurement update with H selecting (psi, tx, ty, tz); yaw innovation is
/// wrapped; Joseph-form covariance.
inline KfState kf_update(KfState s, const Pose4 &z, const KfConfig &cfg) {
  const KfObservation h = kf_observation();
  const Eigen::Matrix4d r = kf_measurement_noise(cfg);
  KfMeasurement innov = to_measurement(z) - h * s.x;
  if (!innov.allFinite()) throw Error(ErrorCode::kInvalidArgument, "kf_update: non-finite measurement");
  innov(0) = wrap_angle(innov(0));

  const Eigen::Matrix4d sm = h * s.p * h.transpose() + r;
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(sm);
  if (!lu.isInvertible()) throw Error(ErrorCode::kNumerical, "kf_update: innovation covariance is singular");
  const Eigen::Matrix<double, 8, 4> gain = s.p * h.transpose() * lu.inverse();

  s.x += gain * innov;
  s.x(kPsi) = wrap_angle(s.x(kPsi));
  const KfMatrix ikh = KfMatrix::Identity() - gain * h;
  s.p = ikh * s.p * ikh.transpose() + gain * r * gain.transpose();
  s.p = (0.5 * (s.p + s.p.transpose())).eval();
  s.miss_count = 0;
  return s;
}

/// Prediction without a measurement, followed by exponential velocity decay.
/// Returns nullopt (track lost) once more than n_max consecutive frames were
/// missed.
inline std::optional<KfState> kf_coast(KfState s, double dt, const KfConfig &cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf_coast: dt must be positive");
  if (s.miss_count + 1 > cfg.n_max) return std::nullopt;
  auto decay = [&](KfState &st) {
    for (int i = 1; i < 8; i += 2) st.x(i) *= cfg.alpha;
  };
  if (cfg.decay_before_propagate) {
    decay(s);
    s = kf_predict(s, dt, cfg);
  } else {
    s = kf_predict(s, dt, cfg);
    decay(s);
  }
  s.miss_count += 1;
  return s;
}

enum class KfEvent { kIdle, kInitialized, kUpdated, kCoasted, kTrackLost };

inline const char *to_string(KfEvent e) {
  switch (e) {
    case KfEvent::kIdle: return "idle";
    case KfEvent::kInitialized: return "init";
    case KfEvent::kUpdated: return "update";
    case KfEvent::kCoasted: return "coast";
    case KfEvent::kTrackLost: return "lost";
  }
  return "?";
}

struct KfStepResult {
  std::optional<KfState> state;
  KfEvent event = KfEvent::kIdle;

  std::optional<Pose4> pose() const {
    if (!state) return std::nullopt;
    return state->pose();
  }
};

/// One frame of a per-marker track: init, predict+update, or coast.
inline KfStepResult kf_step(const std::optional<KfState> &s, const std::optional<Pose4> &z, double t,
                            const KfConfig &cfg) {
  if (!s) {
    if (!z) return {std::nullopt, KfEvent::kIdle};
    return {kf_init(*z, cfg, t), KfEvent::kInitialized};
  }
  const double dt = t - s->last_time;
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kf_step: timestamps must increase");
  if (z) {
    KfState next = kf_update(kf_predict(*s, dt, cfg), *z, cfg);
    next.last_time = t;
    return {next, KfEvent::kUpdated};
  }
  auto next = kf_coast(*s, dt, cfg);
  if (!next) return {std::nullopt, KfEvent::kTrackLost};
  next->last_time = t;
  return {next, KfEvent::kCoasted};
}

}  // namespace perch
