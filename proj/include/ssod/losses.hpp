#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ssod/geometry.hpp"

namespace ssod {

enum class ClsLoss { CE, WCE, FL };

/// Loss configuration shared by the supervised and unsupervised branches.
/// cls_kind selects the classification loss for the unlabeled branch (the
/// labeled branch always uses plain CE); lambda_r balances classification
/// against box regression; lambda_u balances supervised against unsupervised.
struct LossConfig {
  ClsLoss cls_kind = ClsLoss::FL;
  double focal_gamma = 2.0;
  bool use_reg_on_unlabeled = false;
  double lambda_u = 2.0;
  double lambda_r = 1.0;

  void validate() const {
    if (!(focal_gamma >= 0)) throw std::invalid_argument("focal_gamma must be >= 0");
    if (!std::isfinite(lambda_u) || lambda_u < 0)
      throw std::invalid_argument("lambda_u must be finite and >= 0");
    if (!std::isfinite(lambda_r) || lambda_r < 0)
      throw std::invalid_argument("lambda_r must be finite and >= 0");
  }
};

// Probabilities are floored here before every log.
constexpr double kProbFloor = 1e-12;

inline void check_target(const std::vector<double>& probs, int target) {
  if (target < 0 || target >= static_cast<int>(probs.size()))
    throw std::invalid_argument("cls loss: target class out of range");
}

inline double ce(const std::vector<double>& probs, int target) {
  check_target(probs, target);
  return -std::log(std::max(probs[target], kProbFloor));
}

inline double weighted_ce(const std::vector<double>& probs, int target,
                          double weight) {
  if (weight < 0) throw std::invalid_argument("weighted_ce: negative weight");
  return weight * ce(probs, target);
}

inline double focal(const std::vector<double>& probs, int target, double gamma) {
  check_target(probs, target);
  const double pt = probs[target];
  return -std::pow(1.0 - pt, gamma) * std::log(std::max(pt, kProbFloor));
}

/// Dispatch on the configured classification loss. weight only matters for
/// WCE; CE and FL ignore it.
inline double cls_loss(const std::vector<double>& probs, int target,
                       double weight, ClsLoss kind, double gamma) {
  switch (kind) {
    case ClsLoss::CE: return ce(probs, target);
    case ClsLoss::WCE: return weighted_ce(probs, target, weight);
    case ClsLoss::FL: return focal(probs, target, gamma);
  }
  throw std::logic_error("cls_loss: bad kind");
}

/// d(loss)/d(probs[target]) for the same dispatch; used by backprop.
inline double cls_loss_dprob(const std::vector<double>& probs, int target,
                             double weight, ClsLoss kind, double gamma) {
  const double pt = probs[target];
  const double floored = std::max(pt, kProbFloor);
  const double dlog = pt > kProbFloor ? -1.0 / pt : 0.0;
  switch (kind) {
    case ClsLoss::CE: return dlog;
    case ClsLoss::WCE: return weight * dlog;
    case ClsLoss::FL: {
      const double one_m = 1.0 - pt;
      double g = std::pow(one_m, gamma) * dlog;
      if (gamma > 0.0)
        g += gamma * std::pow(std::max(one_m, 0.0), gamma - 1.0) *
             std::log(floored);
      return g;
    }
  }
  throw std::logic_error("cls_loss_dprob: bad kind");
}

/// Huber-style generalized L1 over the four delta coordinates:
/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
inline double smooth_l1(const BoxDelta& pred, const BoxDelta& target) {
  if (!pred.finite() || !target.finite())
    throw std::invalid_argument("smooth_l1: non-finite delta");
  auto g = [](double d) {
    const double a = std::abs(d);
    return a < 1.0 ? 0.5 * d * d : a - 0.5;
  };
  return g(pred.dx - target.dx) + g(pred.dy - target.dy) +
         g(pred.dw - target.dw) + g(pred.dh - target.dh);
}

/// Derivative of smooth_l1 w.r.t. each predicted coordinate.
inline BoxDelta smooth_l1_grad(const BoxDelta& pred, const BoxDelta& target) {
  auto g = [](double d) {
    return std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0);
  };
  return {g(pred.dx - target.dx), g(pred.dy - target.dy),
          g(pred.dw - target.dw), g(pred.dh - target.dh)};
}

/// Per-image-pass loss terms: classification part and regression part,
/// each already averaged over its assigned targets.
struct DetectionLossTerms {
  double cls = 0.0;
  double reg = 0.0;
};

/// Supervised batch loss: each labeled image contributes its strongly- and
/// weakly-augmented copies averaged together, cls + lambda_r * reg.
inline double supervised_loss(
    const std::vector<std::pair<DetectionLossTerms, DetectionLossTerms>>&
        per_image_strong_weak,
    const LossConfig& cfg) {
  if (per_image_strong_weak.empty())
    throw std::invalid_argument("supervised_loss: empty batch");
  double total = 0.0;
  for (const auto& [s, w] : per_image_strong_weak) {
    total += 0.5 * (s.cls + w.cls) + cfg.lambda_r * 0.5 * (s.reg + w.reg);
  }
  return total / static_cast<double>(per_image_strong_weak.size());
}

/// Unsupervised batch loss over strongly-augmented unlabeled images. The
/// regression part enters only when use_reg_on_unlabeled is set.
inline double unsupervised_loss(const std::vector<DetectionLossTerms>& per_image,
                                const LossConfig& cfg) {
  if (per_image.empty())
    throw std::invalid_argument("unsupervised_loss: empty batch");
  double total = 0.0;
  for (const DetectionLossTerms& t : per_image) {
    total += t.cls;
    if (cfg.use_reg_on_unlabeled) total += cfg.lambda_r * t.reg;
  }
  return total / static_cast<double>(per_image.size());
}

inline double combined_loss(double ls, double lu, double lambda_u) {
  if (!std::isfinite(ls) || !std::isfinite(lu) || !std::isfinite(lambda_u))
    throw std::invalid_argument("combined_loss: non-finite input");
  return ls + lambda_u * lu;
}

}  // namespace ssod
