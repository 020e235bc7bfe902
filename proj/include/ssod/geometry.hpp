#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssod {

/// Axis-aligned box, (x1,y1) top-left and (x2,y2) bottom-right, in
/// continuous pixel coordinates.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  BBox() = default;
  BBox(double x1_, double y1_, double x2_, double y2_)
      : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {}

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 < x2 && y1 < y2;
  }
};

inline void validate_box(const BBox& b, const char* what = "box") {
  if (!b.valid()) {
    throw std::invalid_argument(std::string(what) +
                                " is degenerate or non-finite");
  }
}

/// Intersection over union. Both boxes must have positive area.
inline double iou(const BBox& a, const BBox& b) {
  validate_box(a, "iou: a");
  validate_box(b, "iou: b");
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

/// Center-offset / log-size box parameterization relative to a reference box.
struct BoxDelta {
  double dx = 0, dy = 0, dw = 0, dh = 0;

  bool finite() const {
    return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dw) &&
           std::isfinite(dh);
  }
};

inline BoxDelta encode_delta(const BBox& target, const BBox& ref) {
  validate_box(target, "encode_delta: target");
  validate_box(ref, "encode_delta: ref");
  BoxDelta d;
  d.dx = (target.cx() - ref.cx()) / ref.width();
  d.dy = (target.cy() - ref.cy()) / ref.height();
  d.dw = std::log(target.width() / ref.width());
  d.dh = std::log(target.height() / ref.height());
  return d;
}

inline BBox decode_delta(const BoxDelta& d, const BBox& ref) {
  if (!d.finite()) throw std::invalid_argument("decode_delta: non-finite delta");
  validate_box(ref, "decode_delta: ref");
  const double cx = ref.cx() + d.dx * ref.width();
  const double cy = ref.cy() + d.dy * ref.height();
  const double w = ref.width() * std::exp(d.dw);
  const double h = ref.height() * std::exp(d.dh);
  return BBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
}

/// Decode and clip to [0,W]x[0,H]. A box squashed onto the border keeps a
/// minimal extent so the result is always a valid BBox.
inline BBox decode_delta_clamped(const BoxDelta& d, const BBox& ref, double W,
                                 double H) {
  BBox b = decode_delta(d, ref);
  constexpr double kMinSize = 1e-3;
  auto clip_axis = [](double lo, double hi, double bound, double& o1,
                      double& o2) {
    o1 = std::clamp(lo, 0.0, bound);
    o2 = std::clamp(hi, 0.0, bound);
    if (o2 - o1 < kMinSize) {
      const double c =
          std::clamp(0.5 * (lo + hi), 0.5 * kMinSize, bound - 0.5 * kMinSize);
      o1 = c - 0.5 * kMinSize;
      o2 = c + 0.5 * kMinSize;
    }
  };
  BBox out;
  clip_axis(b.x1, b.x2, W, out.x1, out.x2);
  clip_axis(b.y1, b.y2, H, out.y1, out.y2);
  return out;
}

/// One detector output: a box, a probability vector over {background,
/// class 1..C}, and the foreground score (max non-background probability).
struct Detection {
  BBox box;
  std::vector<double> class_probs;  // size C+1, index 0 = background
  double foreground_score = 0;

  /// Most probable non-background class (ties broken by lower index).
  int argmax_class() const {
    int best = 1;
    for (int c = 2; c < static_cast<int>(class_probs.size()); ++c) {
      if (class_probs[c] > class_probs[best]) best = c;
    }
    return best;
  }
};

/// Greedy class-wise non-maximum suppression. Detections of different
/// classes never suppress each other; score ties break by lower input index.
/// Output is sorted by descending score.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double iou_thresh) {
  if (iou_thresh < 0.0 || iou_thresh > 1.0) {
    throw std::invalid_argument("nms: iou_thresh outside [0,1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].foreground_score > dets[b].foreground_score;
  });
  std::vector<Detection> kept;
  std::vector<int> kept_class;
  for (std::size_t idx : order) {
    const Detection& cand = dets[idx];
    const int cls = cand.argmax_class();
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (kept_class[k] != cls) continue;
      if (iou(kept[k].box, cand.box) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(cand);
      kept_class.push_back(cls);
    }
  }
  return kept;
}

}  // namespace ssod
