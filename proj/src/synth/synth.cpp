#include "arspl/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"

namespace arspl::synth {

namespace {

constexpr double kPi = std::numbers::pi;

struct Segment {
  double x0, y0, x1, y1;
  double width;
  double opacity;
};

double distance_to_segment(double px, double py, const Segment& s) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - s.x0) * dx + (py - s.y0) * dy) / len2, 0.0, 1.0);
  const double cx = s.x0 + t * dx - px;
  const double cy = s.y0 + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

// Smooth 1-D profile in [0,1] used for the separable background factors.
double smooth_factor(double t, double freq, double phase) {
  return 0.5 + 0.5 * std::sin(2.0 * kPi * freq * t + phase);
}

GrayImage make_background(const SynthConfig& cfg, Rng& rng) {
  const int w = cfg.width, h = cfg.height;
  GrayImage bg(w, h, 0.0);
  // Separable smooth fields: rank `background_rank` as an H x W matrix.
  for (int r = 0; r < cfg.background_rank; ++r) {
    const double amp = r == 0 ? 0.25 : 0.08;
    const double fx = rng.uniform(0.2, 1.0), px = rng.uniform(0.0, 2.0 * kPi);
    const double fy = rng.uniform(0.2, 1.0), py = rng.uniform(0.0, 2.0 * kPi);
    for (int y = 0; y < h; ++y) {
      const double vy = smooth_factor((y + 0.5) / h, fy, py);
      for (int x = 0; x < w; ++x) {
        bg.at(x, y) += amp * smooth_factor((x + 0.5) / w, fx, px) * vy;
      }
    }
  }
  // Vignette and base level.
  const double cx = 0.5 * w, cy = 0.5 * h;
  const double r2 = 0.5 * (cx * cx + cy * cy);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      bg.at(x, y) += 0.55 - 0.12 * (dx * dx + dy * dy) / r2;
    }
  }
  // Rib-like arcs: wide, faint, curvilinear and static.
  const int ribs = 2;
  for (int k = 0; k < ribs; ++k) {
    const double y0 = rng.uniform(0.15, 0.85) * h;
    const double curv = rng.uniform(-1.5, 1.5) / w;
    const double half = rng.uniform(2.5, 4.0);
    const double depth = rng.uniform(0.04, 0.07);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double xc = x + 0.5 - cx;
        const double d = std::abs(y + 0.5 - (y0 + curv * xc * xc)) / half;
        if (d < 1.0) bg.at(x, y) -= depth * (1.0 - d * d);
      }
    }
  }
  return bg;
}

void grow_branch(double x, double y, double angle, double length, double width, double opacity,
                 int depth, const SynthConfig& cfg, Rng& rng, std::vector<Segment>& out) {
  const double step = 1.5;
  const int n_steps = std::max(1, static_cast<int>(length / step));
  std::vector<std::pair<double, double>> points{{x, y}};
  std::vector<double> angles{angle};
  for (int i = 0; i < n_steps; ++i) {
    angle += 0.18 * rng.normal();
    const double nx = x + step * std::cos(angle);
    const double ny = y + step * std::sin(angle);
    if (nx < -2 || ny < -2 || nx > cfg.width + 2 || ny > cfg.height + 2) break;
    out.push_back({x, y, nx, ny, width, opacity});
    x = nx;
    y = ny;
    points.emplace_back(x, y);
    angles.push_back(angle);
  }
  if (depth >= 2 || points.size() < 4) return;
  const int children = depth == 0 ? cfg.vessel_branches : 2;
  for (int c = 0; c < children; ++c) {
    const std::size_t at = 1 + rng.below(points.size() - 2);
    const double side = (c % 2 == 0) ? 1.0 : -1.0;
    const double child_angle = angles[at] + side * rng.uniform(0.45, 1.0);
    const double child_width = std::max(1.0, width * rng.uniform(0.55, 0.7));
    const double child_opacity = opacity * cfg.branch_opacity_ratio * rng.uniform(0.85, 1.0);
    grow_branch(points[at].first, points[at].second, child_angle, length * rng.uniform(0.45, 0.65),
                child_width, child_opacity, depth + 1, cfg, rng, out);
  }
}

std::vector<Segment> make_vessel_tree(const SynthConfig& cfg, Rng& rng) {
  std::vector<Segment> segments;
  if (cfg.vessel_branches == 0) return segments;
  // The trunk enters from a random point on the top edge, heading down.
  const double x = rng.uniform(0.25, 0.75) * cfg.width;
  const double angle = 0.5 * kPi + rng.uniform(-0.4, 0.4);
  const double length = 0.8 * std::max(cfg.width, cfg.height);
  grow_branch(x, -1.0, angle, length, cfg.max_vessel_width, rng.uniform(0.26, 0.32), 0, cfg, rng,
              segments);
  return segments;
}

}  // namespace

std::vector<double> default_contrast_profile(int n_frames) {
  std::vector<double> profile(n_frames);
  const int key = n_frames / 2;
  const double sigma = std::max(1.0, n_frames / 6.0);
  for (int t = 0; t < n_frames; ++t) {
    const double d = (t - key) / sigma;
    profile[t] = std::exp(-0.5 * d * d);
  }
  return profile;
}

void validate(const SynthConfig& c) {
  auto fail = [](const char* m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (c.width < 8 || c.height < 8) fail("synthetic image must be at least 8x8");
  if (c.n_frames < 1) fail("n_frames must be >= 1");
  if (c.vessel_branches < 0) fail("vessel_branches must be >= 0");
  if (c.max_vessel_width < 1.0) fail("max_vessel_width must be >= 1");
  if (!(c.branch_opacity_ratio > 0.0 && c.branch_opacity_ratio <= 1.0)) fail("branch_opacity_ratio must lie in (0, 1]");
  if (c.background_rank < 1) fail("background_rank must be >= 1");
  if (!(c.noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!c.contrast_profile.empty()) {
    if (static_cast<int>(c.contrast_profile.size()) != c.n_frames) {
      fail("contrast_profile length must equal n_frames");
    }
    for (double v : c.contrast_profile) {
      if (!(v >= 0.0 && v <= 1.0)) fail("contrast_profile values must lie in [0,1]");
    }
  }
}

SynthSample generate_sequence(const SynthConfig& config) {
  validate(config);
  const std::vector<double> profile =
      config.contrast_profile.empty() ? default_contrast_profile(config.n_frames) : config.contrast_profile;
  const int key = static_cast<int>(std::max_element(profile.begin(), profile.end()) - profile.begin());

  // Independent sub-streams so that, e.g., the noise level does not change
  // the vessel tree.
  Rng bg_rng(derive_seed(config.seed, {1}));
  Rng tree_rng(derive_seed(config.seed, {2}));
  Rng noise_rng(derive_seed(config.seed, {3}));

  const int w = config.width, h = config.height;
  GrayImage background = make_background(config, bg_rng);
  const std::vector<Segment> segments = make_vessel_tree(config, tree_rng);

  // Vessel darkness: a cylinder profile (chord length) so edges are fainter
  // than centre lines. Ground truth: pixel centre inside the tube.
  GrayImage darkness(w, h, 0.0);
  LabelGrid truth(w, h, 0);
  for (const Segment& s : segments) {
    const double radius = 0.5 * s.width;
    const double outer = radius + 0.5;
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(s.x0, s.x1) - outer - 1)));
    const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(std::max(s.x0, s.x1) + outer + 1)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(s.y0, s.y1) - outer - 1)));
    const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(std::max(s.y0, s.y1) + outer + 1)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double d = distance_to_segment(x + 0.5, y + 0.5, s);
        if (d >= outer) continue;
        const double q = d / outer;
        const double v = s.opacity * std::sqrt(1.0 - q * q);
        double& cell = darkness.at(x, y);
        cell = std::max(cell, v);
        if (d <= radius) truth.labels[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }

  std::vector<GrayImage> frames;
  frames.reserve(config.n_frames);
  for (int t = 0; t < config.n_frames; ++t) {
    GrayImage frame(w, h);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      double v = background.data[i] - profile[t] * darkness.data[i];
      if (config.noise_sigma > 0.0) v += config.noise_sigma * noise_rng.normal();
      frame.data[i] = std::clamp(v, 0.0, 1.0);
    }
    frames.push_back(std::move(frame));
  }
  return {GraySequence(std::move(frames), key), std::move(truth), std::move(background)};
}

}  // namespace arspl::synth
