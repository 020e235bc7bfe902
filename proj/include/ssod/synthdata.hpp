#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssod/geometry.hpp"
#include "ssod/image.hpp"
#include "ssod/rng.hpp"

namespace ssod {

struct LabeledBox {
  int class_id = 0;  // 1..C, never 0 (0 is background)
  BBox box;
};

struct GroundTruth {
  std::vector<LabeledBox> boxes;

  bool empty() const { return boxes.empty(); }
  std::size_t size() const { return boxes.size(); }
};

/// Configuration of the synthetic layered-scene generator. Scenes are
/// horizontal intensity bands (a crude layered-tissue look) with 1..max
/// lesions. Each class has a fixed appearance family, assigned round-robin:
/// bright blob, dark blob, horizontal streak, vertical notch. With
/// position_coupling on, each class is confined to its own vertical stratum
/// so class identity is partly inferable from y-position.
struct SceneConfig {
  int width = 96;
  int height = 96;
  int num_classes = 4;
  int min_lesions = 1;
  int max_lesions = 3;
  bool position_coupling = true;
  double noise_sigma = 0.02;

  // Appearance size ranges (pixels). Blob sides and the long/short sides of
  // the thin shapes are chosen so that a default small-scale Cutout rectangle
  // can never fully cover a lesion, and so that the detector's single
  // 24 px anchor reaches IoU >= 0.3 on every lesion.
  double blob_min = 22.0, blob_max = 30.0;
  double thin_long_min = 32.0, thin_long_max = 42.0;
  double thin_short_min = 10.0, thin_short_max = 14.0;

  void validate() const {
    if (width < 32 || height < 32)
      throw std::invalid_argument("SceneConfig: image size must be >= 32x32");
    if (num_classes < 2 || num_classes > 9)
      throw std::invalid_argument("SceneConfig: num_classes must be in [2..9]");
    if (min_lesions < 1 || max_lesions < min_lesions)
      throw std::invalid_argument("SceneConfig: bad lesion count range");
    if (noise_sigma < 0)
      throw std::invalid_argument("SceneConfig: noise_sigma must be >= 0");
  }
};

namespace detail {

// Appearance family per class, round-robin over the four shapes.
enum class LesionFamily { BrightBlob, DarkBlob, HStreak, VNotch };

inline LesionFamily family_of(int class_id) {
  switch ((class_id - 1) % 4) {
    case 0: return LesionFamily::BrightBlob;
    case 1: return LesionFamily::DarkBlob;
    case 2: return LesionFamily::HStreak;
    default: return LesionFamily::VNotch;
  }
}

inline void sample_lesion_size(LesionFamily fam, const SceneConfig& cfg,
                               Rng& rng, double& w, double& h) {
  switch (fam) {
    case LesionFamily::BrightBlob:
    case LesionFamily::DarkBlob:
      w = rng.uniform(cfg.blob_min, cfg.blob_max);
      h = rng.uniform(cfg.blob_min, cfg.blob_max);
      break;
    case LesionFamily::HStreak:
      w = rng.uniform(cfg.thin_long_min, cfg.thin_long_max);
      h = rng.uniform(cfg.thin_short_min, cfg.thin_short_max);
      break;
    case LesionFamily::VNotch:
      w = rng.uniform(cfg.thin_short_min, cfg.thin_short_max);
      h = rng.uniform(cfg.thin_long_min, cfg.thin_long_max);
      break;
  }
}

inline void render_lesion(Image& img, const BBox& b, LesionFamily fam,
                          double amp) {
  const int x0 = std::max(0, static_cast<int>(std::floor(b.x1)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(b.x2)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b.y1)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(b.y2)));
  const double cx = b.cx(), cy = b.cy();
  const double hw = 0.5 * b.width(), hh = 0.5 * b.height();
  const bool blob =
      fam == LesionFamily::BrightBlob || fam == LesionFamily::DarkBlob;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double f = 0.0;
      if (blob) {
        const double dx = (px - cx) / hw, dy = (py - cy) / hh;
        const double d2 = dx * dx + dy * dy;
        if (d2 < 1.0) f = std::pow(1.0 - d2, 0.7);
      } else {
        // Rectangle with a ~2 px soft edge on each side.
        const double ex = std::clamp((hw - std::abs(px - cx)) / 2.0, 0.0, 1.0);
        const double ey = std::clamp((hh - std::abs(py - cy)) / 2.0, 0.0, 1.0);
        f = ex * ey;
      }
      if (f > 0.0) img.at(x, y) += amp * f;
    }
  }
}

}  // namespace detail

/// Render one scene deterministically from (seed, cfg). If lesion placement
/// cannot be satisfied after bounded retries the scene is regenerated with an
/// incremented sub-seed, so generation never fails.
inline std::pair<Image, GroundTruth> generate_scene(std::uint64_t seed,
                                                    const SceneConfig& cfg) {
  cfg.validate();
  const int W = cfg.width, H = cfg.height;
  for (std::uint64_t sub = 0;; ++sub) {
    Rng rng(seed, /*stream=*/0x5ce9e5ULL, sub);
    Image img(W, H);

    // Layered background: vertical gradient plus smooth horizontal bands.
    const double g_top = rng.uniform(0.10, 0.30);
    const double g_bot = rng.uniform(0.25, 0.50);
    struct Band {
      double y, amp, sigma;
    };
    std::vector<Band> bands;
    for (double depth : {0.18, 0.50, 0.82}) {
      bands.push_back({(depth + rng.uniform(-0.05, 0.05)) * H,
                       rng.uniform(0.10, 0.22), rng.uniform(1.5, 3.0)});
    }
    for (int y = 0; y < H; ++y) {
      double v = g_top + (g_bot - g_top) * (y + 0.5) / H;
      for (const Band& b : bands) {
        const double d = (y + 0.5) - b.y;
        v += b.amp * std::exp(-0.5 * d * d / (b.sigma * b.sigma));
      }
      for (int x = 0; x < W; ++x) img.at(x, y) = v;
    }

    // Lesions.
    const int n_lesions =
        cfg.min_lesions +
        static_cast<int>(rng.uniform_int(cfg.max_lesions - cfg.min_lesions + 1));
    GroundTruth gt;
    bool placement_failed = false;
    for (int i = 0; i < n_lesions; ++i) {
      const int class_id = 1 + static_cast<int>(rng.uniform_int(cfg.num_classes));
      const auto fam = detail::family_of(class_id);
      bool placed = false;
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        double w, h;
        detail::sample_lesion_size(fam, cfg, rng, w, h);
        const double x_lo = 0.5 * w + 1.0, x_hi = W - 0.5 * w - 1.0;
        double y_lo = 0.5 * h + 1.0, y_hi = H - 0.5 * h - 1.0;
        if (cfg.position_coupling) {
          const double stratum = static_cast<double>(H) / cfg.num_classes;
          y_lo = std::max(y_lo, (class_id - 1) * stratum);
          y_hi = std::min(y_hi, class_id * stratum);
        }
        if (x_lo >= x_hi || y_lo >= y_hi) continue;
        const double cx = rng.uniform(x_lo, x_hi);
        const double cy = rng.uniform(y_lo, y_hi);
        BBox box(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
        bool overlaps = false;
        for (const LabeledBox& prev : gt.boxes) {
          if (iou(prev.box, box) > 0.25) {
            overlaps = true;
            break;
          }
        }
        if (overlaps) continue;
        const bool dark = fam == detail::LesionFamily::DarkBlob ||
                          fam == detail::LesionFamily::VNotch;
        const double amp =
            dark ? rng.uniform(-0.28, -0.18) : rng.uniform(0.20, 0.30);
        detail::render_lesion(img, box, fam, amp);
        gt.boxes.push_back({class_id, box});
        placed = true;
      }
      if (!placed) {
        placement_failed = true;
        break;
      }
    }
    if (placement_failed) continue;

    for (double& p : img.pixels) p += rng.normal(0.0, cfg.noise_sigma);
    img.clamp01();
    return {std::move(img), std::move(gt)};
  }
}

struct DatasetSplit {
  std::vector<std::pair<Image, GroundTruth>> labeled;
  std::vector<Image> unlabeled;
  std::vector<std::pair<Image, GroundTruth>> test;

  // Ground truth of the unlabeled scenes. Never used for training; kept so
  // pseudo-label precision can be audited.
  std::vector<GroundTruth> unlabeled_audit;

  // Scene seeds per split (disjoint by construction).
  std::vector<std::uint64_t> labeled_seeds, unlabeled_seeds, test_seeds;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter) {
  return splitmix64(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ULL)) ^
                    counter);
}

/// Build labeled / unlabeled / test splits from disjoint scene-seed ranges.
inline DatasetSplit make_dataset(std::uint64_t seed, int n_labeled,
                                 int n_unlabeled, int n_test,
                                 const SceneConfig& cfg) {
  if (n_labeled < 0 || n_unlabeled < 0 || n_test < 0)
    throw std::invalid_argument("make_dataset: negative split size");
  DatasetSplit ds;
  for (int i = 0; i < n_labeled; ++i) {
    const std::uint64_t s = derive_seed(seed, 1, static_cast<std::uint64_t>(i));
    ds.labeled_seeds.push_back(s);
    ds.labeled.push_back(generate_scene(s, cfg));
  }
  for (int i = 0; i < n_unlabeled; ++i) {
    const std::uint64_t s = derive_seed(seed, 2, static_cast<std::uint64_t>(i));
    ds.unlabeled_seeds.push_back(s);
    auto [img, gt] = generate_scene(s, cfg);
    ds.unlabeled.push_back(std::move(img));
    ds.unlabeled_audit.push_back(std::move(gt));
  }
  for (int i = 0; i < n_test; ++i) {
    const std::uint64_t s = derive_seed(seed, 3, static_cast<std::uint64_t>(i));
    ds.test_seeds.push_back(s);
    ds.test.push_back(generate_scene(s, cfg));
  }
  return ds;
}

/// Dump a split as 16-bit PGM files plus one annotation file with one line
/// per box: "<image-id> <class-id> <x1> <y1> <x2> <y2>". Unlabeled audit
/// boxes go to a separate audit.txt in the same format.
inline void dump_dataset(const DatasetSplit& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream ann(fs::path(dir) / "annotations.txt");
  std::ofstream audit(fs::path(dir) / "audit.txt");
  if (!ann || !audit)
    throw std::runtime_error("dump_dataset: cannot write annotation files");
  ann.precision(17);
  audit.precision(17);
  auto write_boxes = [](std::ofstream& out, const std::string& id,
                        const GroundTruth& gt) {
    for (const LabeledBox& lb : gt.boxes) {
      out << id << " " << lb.class_id << " " << lb.box.x1 << " " << lb.box.y1
          << " " << lb.box.x2 << " " << lb.box.y2 << "\n";
    }
  };
  auto image_id = [](const char* prefix, std::size_t i) {
    std::ostringstream ss;
    ss << prefix << "_";
    ss.width(5);
    ss.fill('0');
    ss << i;
    return ss.str();
  };
  for (std::size_t i = 0; i < ds.labeled.size(); ++i) {
    const std::string id = image_id("labeled", i);
    write_pgm(ds.labeled[i].first, (fs::path(dir) / (id + ".pgm")).string());
    write_boxes(ann, id, ds.labeled[i].second);
  }
  for (std::size_t i = 0; i < ds.unlabeled.size(); ++i) {
    const std::string id = image_id("unlabeled", i);
    write_pgm(ds.unlabeled[i], (fs::path(dir) / (id + ".pgm")).string());
    if (i < ds.unlabeled_audit.size()) write_boxes(audit, id, ds.unlabeled_audit[i]);
  }
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const std::string id = image_id("test", i);
    write_pgm(ds.test[i].first, (fs::path(dir) / (id + ".pgm")).string());
    write_boxes(ann, id, ds.test[i].second);
  }
}

inline DatasetSplit load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  auto read_boxes = [](const fs::path& p) {
    std::map<std::string, GroundTruth> m;
    std::ifstream in(p);
    std::string id;
    LabeledBox lb;
    while (in >> id >> lb.class_id >> lb.box.x1 >> lb.box.y1 >> lb.box.x2 >>
           lb.box.y2) {
      m[id].boxes.push_back(lb);
    }
    return m;
  };
  const auto ann = read_boxes(fs::path(dir) / "annotations.txt");
  const auto audit = read_boxes(fs::path(dir) / "audit.txt");
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".pgm") stems.push_back(e.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  DatasetSplit ds;
  auto gt_of = [](const std::map<std::string, GroundTruth>& m,
                  const std::string& id) {
    auto it = m.find(id);
    return it == m.end() ? GroundTruth{} : it->second;
  };
  for (const std::string& id : stems) {
    Image img = read_pgm((fs::path(dir) / (id + ".pgm")).string());
    if (id.rfind("labeled_", 0) == 0) {
      ds.labeled.emplace_back(std::move(img), gt_of(ann, id));
    } else if (id.rfind("unlabeled_", 0) == 0) {
      ds.unlabeled.push_back(std::move(img));
      ds.unlabeled_audit.push_back(gt_of(audit, id));
    } else if (id.rfind("test_", 0) == 0) {
      ds.test.emplace_back(std::move(img), gt_of(ann, id));
    }
  }
  return ds;
}

}  // namespace ssod
