#include "arspl/superpixel/slic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "arspl/core/error.hpp"

namespace arspl::superpixel {

namespace {

struct Center {
  double x, y, intensity;
};

struct Component {
  int label;
  int size;
  int first_pixel;
};

double gradient_energy(const GrayImage& img, int x, int y) {
  const int xl = std::max(0, x - 1), xr = std::min(img.width - 1, x + 1);
  const int yu = std::max(0, y - 1), yd = std::min(img.height - 1, y + 1);
  const double gx = img.at(xr, y) - img.at(xl, y);
  const double gy = img.at(x, yd) - img.at(x, yu);
  return gx * gx + gy * gy;
}

// Splits every label into 4-connected components; returns the component id
// per pixel.
std::vector<int> label_components(int w, int h, const std::vector<int>& labels,
                                  std::vector<Component>& comps) {
  std::vector<int> comp_of(labels.size(), -1);
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
    if (comp_of[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    const int label = labels[start];
    int size = 0;
    comp_of[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++size;
      const int x = p % w, y = p / w;
      const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nbrs) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int q = n[1] * w + n[0];
        if (comp_of[q] < 0 && labels[q] == label) {
          comp_of[q] = id;
          stack.push_back(q);
        }
      }
    }
    comps.push_back({label, size, start});
  }
  return comp_of;
}

// Keeps the largest fragment of each label and merges every other fragment
// into the adjacent retained superpixel with the most pixels.
std::vector<int> enforce_connectivity(int w, int h, const std::vector<int>& labels) {
  std::vector<Component> comps;
  const std::vector<int> comp_of = label_components(w, h, labels, comps);

  int max_label = 0;
  for (const auto& c : comps) max_label = std::max(max_label, c.label);
  std::vector<int> keeper(max_label + 1, -1);
  for (int i = 0; i < static_cast<int>(comps.size()); ++i) {
    int& k = keeper[comps[i].label];
    if (k < 0 || comps[i].size > comps[k].size) k = i;
  }

  std::vector<int> final_label(comps.size(), -1);
  std::vector<long> label_size(max_label + 1, 0);
  for (int i = 0; i < static_cast<int>(comps.size()); ++i) {
    if (keeper[comps[i].label] == i) {
      final_label[i] = comps[i].label;
      label_size[comps[i].label] += comps[i].size;
    }
  }

  // Pixels per component, for adjacency scans.
  std::vector<std::vector<int>> pixels(comps.size());
  for (int p = 0; p < static_cast<int>(comp_of.size()); ++p) pixels[comp_of[p]].push_back(p);

  bool pending = true;
  while (pending) {
    pending = false;
    for (int i = 0; i < static_cast<int>(comps.size()); ++i) {
      if (final_label[i] >= 0) continue;
      int best = -1;
      for (int p : pixels[i]) {
        const int x = p % w, y = p / w;
        const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& n : nbrs) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
          const int l = final_label[comp_of[n[1] * w + n[0]]];
          if (l < 0) continue;
          if (best < 0 || label_size[l] > label_size[best] || (label_size[l] == label_size[best] && l < best)) {
            best = l;
          }
        }
      }
      if (best < 0) {
        pending = true;
        continue;
      }
      final_label[i] = best;
      label_size[best] += comps[i].size;
    }
  }

  std::vector<int> out(labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) out[p] = final_label[comp_of[p]];
  return out;
}

}  // namespace

int default_superpixel_count(int width, int height) {
  const double count = 3000.0 * width * height / (512.0 * 512.0);
  return std::max(1, static_cast<int>(std::lround(count)));
}

SuperpixelPartition partition_from_assignment(int width, int height, std::vector<int> assignment) {
  if (assignment.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment length does not match dimensions");
  }
  // Dense relabelling in order of first appearance.
  std::vector<int> remap;
  int max_id = -1;
  for (int id : assignment) {
    if (id < 0) throw Error(ErrorCode::kInvalidArgument, "negative superpixel id");
    max_id = std::max(max_id, id);
  }
  remap.assign(max_id + 1, -1);
  int next = 0;
  for (int& id : assignment) {
    if (remap[id] < 0) remap[id] = next++;
    id = remap[id];
  }
  SuperpixelPartition out;
  out.width = width;
  out.height = height;
  out.n_superpixels = next;
  out.members.assign(next, {});
  for (int p = 0; p < static_cast<int>(assignment.size()); ++p) out.members[assignment[p]].push_back(p);
  out.assignment = std::move(assignment);
  return out;
}

SuperpixelPartition slic(const GrayImage& image, int target_count, double compactness, int iterations) {
  const int w = image.width, h = image.height;
  const int n = w * h;
  if (target_count < 1 || target_count > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "superpixel target " + std::to_string(target_count) + " outside [1, " + std::to_string(n) + "]");
  }
  if (!(compactness >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "compactness must be >= 0");
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "SLIC needs at least one iteration");

  const double grid = std::sqrt(static_cast<double>(n) / target_count);
  const int nx = std::clamp(static_cast<int>(std::lround(w / grid)), 1, w);
  const int ny = std::clamp(static_cast<int>(std::lround(h / grid)), 1, h);
  const double step_x = static_cast<double>(w) / nx;
  const double step_y = static_cast<double>(h) / ny;
  const double interval = std::sqrt(step_x * step_y);

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * step_x, cy = (j + 0.5) * step_y;
      int px = std::min(w - 1, static_cast<int>(cx));
      int py = std::min(h - 1, static_cast<int>(cy));
      // Move the seed off edges: lowest gradient in the 3x3 neighbourhood.
      double best = gradient_energy(image, px, py);
      int bx = px, by = py;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx, qy = py + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const double g = gradient_energy(image, qx, qy);
          if (g < best) {
            best = g;
            bx = qx;
            by = qy;
          }
        }
      }
      if (bx != px || by != py) {
        cx = bx + 0.5;
        cy = by + 0.5;
      }
      centers.push_back({cx, cy, image.at(bx, by)});
    }
  }

  const double spatial = compactness / interval;
  const double spatial2 = spatial * spatial;
  const int reach = static_cast<int>(std::ceil(std::max(step_x, step_y)));
  std::vector<int> label(n, -1);
  std::vector<double> dist(n);

  auto distance2 = [&](const Center& c, int x, int y) {
    const double di = image.at(x, y) - c.intensity;
    const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
    return di * di + spatial2 * (dx * dx + dy * dy);
  };

  for (int it = 0; it < iterations; ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(label.begin(), label.end(), -1);
    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - reach);
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x)) + reach);
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - reach);
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y)) + reach);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = distance2(c, x, y);
          const int p = y * w + x;
          if (d < dist[p]) {
            dist[p] = d;
            label[p] = k;
          }
        }
      }
    }
    // Pixels outside every search window fall back to the nearest centre.
    for (int p = 0; p < n; ++p) {
      if (label[p] >= 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
        const double d = distance2(centers[k], p % w, p / w);
        if (d < best) {
          best = d;
          label[p] = k;
        }
      }
    }
    std::vector<double> sx(centers.size(), 0.0), sy(centers.size(), 0.0), si(centers.size(), 0.0);
    std::vector<int> count(centers.size(), 0);
    for (int p = 0; p < n; ++p) {
      const int k = label[p];
      sx[k] += p % w + 0.5;
      sy[k] += p / w + 0.5;
      si[k] += image.data[p];
      ++count[k];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (count[k] == 0) continue;
      centers[k] = {sx[k] / count[k], sy[k] / count[k], si[k] / count[k]};
    }
  }

  return partition_from_assignment(w, h, enforce_connectivity(w, h, label));
}

SuperpixelPartition slic(const GrayImage& image, const SlicConfig& config) {
  const int target = config.target_count > 0 ? config.target_count
                                             : default_superpixel_count(image.width, image.height);
  return slic(image, target, config.compactness, config.iterations);
}

void save_partition(const SuperpixelPartition& partition, const std::filesystem::path& path) {
  if (partition.n_superpixels > 65536) {
    throw Error(ErrorCode::kInvalidArgument, "partition has too many superpixels for 16-bit ids");
  }
  std::string bytes;
  bytes.reserve(partition.assignment.size() * 2);
  for (int id : partition.assignment) {
    bytes.push_back(static_cast<char>(id & 0xff));
    bytes.push_back(static_cast<char>((id >> 8) & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

  std::ofstream side(path.string() + ".json", std::ios::trunc);
  if (!side) throw Error(ErrorCode::kIo, "cannot write sidecar for " + path.string());
  side << nlohmann::json{{"n_superpixels", partition.n_superpixels},
                         {"width", partition.width},
                         {"height", partition.height}}
              .dump()
       << "\n";
}

SuperpixelPartition load_partition(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw Error(ErrorCode::kIo, "missing sidecar for " + path.string());
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, std::string("bad partition sidecar: ") + e.what());
  }
  const int w = meta.at("width").get<int>();
  const int h = meta.at("height").get<int>();
  const int n = meta.at("n_superpixels").get<int>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorCode::kTruncatedPayload, "partition grid is truncated");
  }
  std::vector<int> assignment(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < assignment.size(); ++i) assignment[i] = bytes[2 * i] | (bytes[2 * i + 1] << 8);
  SuperpixelPartition out = partition_from_assignment(w, h, std::move(assignment));
  if (out.n_superpixels != n) throw Error(ErrorCode::kMalformedHeader, "sidecar superpixel count mismatch");
  return out;
}

}  // namespace arspl::superpixel
