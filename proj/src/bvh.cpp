#include "cadsynth/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace cadsynth {

TriangleData TriangleData::from_points(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriangleData t;
  t.p0 = a.cast<float>();
  const Vec3f pb = b.cast<float>();
  const Vec3f pc = c.cast<float>();
  t.e1 = pb - t.p0;
  t.e2 = pc - t.p0;
  const Vec3 n = cross(b - a, c - a);
  if (!(dot(n, n) > 1e-30) || cross(t.e1, t.e2) == Vec3f{}) {
    t.e1 = {};
    t.e2 = {};
  }
  return t;
}

namespace {

constexpr std::uint32_t kLeafSize = 2;
constexpr std::uint32_t kMaxLeafSize = 8;
constexpr int kBins = 16;
constexpr float kTraversalCost = 1.0f;
constexpr float kIntersectCost = 1.5f;
constexpr int kMaxSahDepth = 40;  // median split below this keeps the traversal stack bounded

struct Bounds {
  Vec3f lo{std::numeric_limits<float>::infinity(), std::numeric_limits<float>::infinity(),
           std::numeric_limits<float>::infinity()};
  Vec3f hi{-std::numeric_limits<float>::infinity(), -std::numeric_limits<float>::infinity(),
           -std::numeric_limits<float>::infinity()};

  void expand(const Vec3f& p) {
    lo = vmin(lo, p);
    hi = vmax(hi, p);
  }
  void merge(const Bounds& b) {
    lo = vmin(lo, b.lo);
    hi = vmax(hi, b.hi);
  }
  float area() const {
    if (lo.x > hi.x) return 0.0f;
    const Vec3f d = hi - lo;
    return d.x * d.y + d.y * d.z + d.z * d.x;
  }
};

// Pad boxes so that float rounding in the slab test never culls a triangle
// that intersect_triangle would report.
void pad(float lo[3], float hi[3]) {
  float extent = 0;
  for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo[a]);
  const float eps = extent * 1e-5f + 1e-6f;
  for (int a = 0; a < 3; ++a) {
    const float mag = std::max(std::abs(lo[a]), std::abs(hi[a]));
    const float e = eps + mag * 1e-6f;
    lo[a] -= e;
    hi[a] += e;
  }
}

struct RayPrecomp {
  float org_inv[3];  // origin * inv
  float inv[3];
  int near[3];  // index into a node's {lo, hi} pair per axis
};

RayPrecomp precompute(const Ray& ray) {
  RayPrecomp p{};
  const float o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const float d[3] = {ray.dir.x, ray.dir.y, ray.dir.z};
  for (int a = 0; a < 3; ++a) {
    const float da = d[a] == 0.0f ? 1e-30f : d[a];  // keeps (plane - origin) * inv free of NaN
    p.inv[a] = 1.0f / da;
    p.org_inv[a] = o[a] * p.inv[a];
    p.near[a] = p.inv[a] < 0.0f;
  }
  return p;
}

inline bool slab(const float lo[3], const float hi[3], const Ray& ray, const RayPrecomp& rp, float tmax, float& tnear) {
  const float* b[2] = {lo, hi};
  const float tx0 = b[rp.near[0]][0] * rp.inv[0] - rp.org_inv[0];
  const float tx1 = b[1 - rp.near[0]][0] * rp.inv[0] - rp.org_inv[0];
  const float ty0 = b[rp.near[1]][1] * rp.inv[1] - rp.org_inv[1];
  const float ty1 = b[1 - rp.near[1]][1] * rp.inv[1] - rp.org_inv[1];
  const float tz0 = b[rp.near[2]][2] * rp.inv[2] - rp.org_inv[2];
  const float tz1 = b[1 - rp.near[2]][2] * rp.inv[2] - rp.org_inv[2];
  const float t0 = std::max(std::max(tx0, ty0), std::max(tz0, ray.tmin));
  const float t1 = std::min(std::min(tx1, ty1), std::min(tz1, tmax));
  tnear = t0;
  return t0 <= t1;
}

}  // namespace

Bvh::Bvh(std::vector<TriangleData> triangles) : triangles_(std::move(triangles)) {
  const auto n = static_cast<std::uint32_t>(triangles_.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  if (n == 0) return;
  std::vector<Vec3f> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const TriangleData& t = triangles_[i];
    centroids[i] = t.p0 + (t.e1 + t.e2) * (1.0f / 3.0f);
  }
  nodes_.reserve(2 * n / kLeafSize + 1);
  build(0, n, centroids, 0);
  leaf_triangles_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) leaf_triangles_[i] = triangles_[order_[i]];
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3f>& centroids, int depth) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Node node{};
  Bounds box, cbox;
  for (std::uint32_t i = begin; i < end; ++i) {
    const TriangleData& t = triangles_[order_[i]];
    box.expand(t.p0);
    box.expand(t.p0 + t.e1);
    box.expand(t.p0 + t.e2);
    cbox.expand(centroids[order_[i]]);
  }
  for (int a = 0; a < 3; ++a) {
    node.lo[a] = box.lo[a];
    node.hi[a] = box.hi[a];
  }
  pad(node.lo, node.hi);

  const std::uint32_t count = end - begin;
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (cbox.hi[a] - cbox.lo[a] > cbox.hi[axis] - cbox.lo[axis]) axis = a;
  const float span = cbox.hi[axis] - cbox.lo[axis];
  if ((count <= kLeafSize || span <= 0.0f) && count <= 0xffff) {
    node.first = begin;
    node.count = static_cast<std::uint16_t>(count);
    nodes_[index] = node;
    return index;
  }

  std::uint32_t mid = begin + count / 2;
  auto less = [&](std::uint32_t x, std::uint32_t y) {
    const float cx = centroids[x][axis], cy = centroids[y][axis];
    return cx < cy || (cx == cy && x < y);
  };
  bool split = false;
  if (depth < kMaxSahDepth && span > 0.0f) {
    // Binned surface area heuristic along the widest centroid axis.
    Bounds bins[kBins];
    std::uint32_t counts[kBins] = {};
    const float scale = kBins / span;
    auto bin_of = [&](std::uint32_t prim) {
      const int b = static_cast<int>((centroids[prim][axis] - cbox.lo[axis]) * scale);
      return std::clamp(b, 0, kBins - 1);
    };
    for (std::uint32_t i = begin; i < end; ++i) {
      const std::uint32_t prim = order_[i];
      const TriangleData& t = triangles_[prim];
      const int b = bin_of(prim);
      ++counts[b];
      bins[b].expand(t.p0);
      bins[b].expand(t.p0 + t.e1);
      bins[b].expand(t.p0 + t.e2);
    }
    float right_area[kBins] = {};
    std::uint32_t right_count[kBins] = {};
    Bounds acc;
    std::uint32_t n = 0;
    for (int b = kBins - 1; b > 0; --b) {
      acc.merge(bins[b]);
      n += counts[b];
      right_area[b] = acc.area();
      right_count[b] = n;
    }
    float best_cost = std::numeric_limits<float>::infinity();
    int best_bin = -1;
    acc = Bounds{};
    n = 0;
    for (int b = 0; b < kBins - 1; ++b) {
      acc.merge(bins[b]);
      n += counts[b];
      if (n == 0 || right_count[b + 1] == 0) continue;
      const float cost = acc.area() * n + right_area[b + 1] * right_count[b + 1];
      if (cost < best_cost) {
        best_cost = cost;
        best_bin = b;
      }
    }
    best_cost = box.area() * kTraversalCost + best_cost * kIntersectCost;
    const float leaf_cost = box.area() * count * kIntersectCost;
    if (best_bin >= 0) {
      if (count <= kMaxLeafSize && leaf_cost <= best_cost) {
        node.first = begin;
        node.count = static_cast<std::uint16_t>(count);
        nodes_[index] = node;
        return index;
      }
      const auto it = std::partition(order_.begin() + begin, order_.begin() + end,
                                     [&](std::uint32_t prim) { return bin_of(prim) <= best_bin; });
      mid = static_cast<std::uint32_t>(it - order_.begin());
      split = mid > begin && mid < end;
      // Deterministic order inside each side.
      if (split) {
        std::sort(order_.begin() + begin, order_.begin() + mid);
        std::sort(order_.begin() + mid, order_.begin() + end);
      }
    }
  }
  if (!split) {
    mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);
  }
  node.axis = static_cast<std::uint8_t>(axis);
  node.count = 0;
  build(begin, mid, centroids, depth + 1);
  node.first = build(mid, end, centroids, depth + 1);
  nodes_[index] = node;
  return index;
}

Hit Bvh::closest(const Ray& ray) const {
  Hit best;
  best.t = ray.tmax;
  if (nodes_.empty()) return best;
  const RayPrecomp rp = precompute(ray);
  struct Entry {
    std::uint32_t node;
    float tnear;
  };
  Entry stack[64];
  int sp = 0;
  std::uint32_t current = 0;
  float tnear;
  if (!slab(nodes_[0].lo, nodes_[0].hi, ray, rp, best.t, tnear)) return Hit{};
  while (true) {
    const Node& node = nodes_[current];
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        float t, u, v;
        if (intersect_triangle(ray, leaf_triangles_[i], t, u, v) && closer(t, order_[i], best)) {
          best.t = t;
          best.u = u;
          best.v = v;
          best.prim = order_[i];
        }
      }
    } else {
      std::uint32_t first = current + 1, second = node.first;
      float t_first, t_second;
      const bool hit_first = slab(nodes_[first].lo, nodes_[first].hi, ray, rp, best.t, t_first);
      const bool hit_second = slab(nodes_[second].lo, nodes_[second].hi, ray, rp, best.t, t_second);
      if (hit_first && hit_second) {
        if (t_second < t_first) {
          std::swap(first, second);
          std::swap(t_first, t_second);
        }
        stack[sp++] = {second, t_second};
        current = first;
        continue;
      }
      if (hit_first) {
        current = first;
        continue;
      }
      if (hit_second) {
        current = second;
        continue;
      }
    }
    // Boxes entered beyond the current best can only hold farther hits; equal
    // distances stay for the index tie rule.
    while (sp > 0 && stack[sp - 1].tnear > best.t) --sp;
    if (sp == 0) break;
    current = stack[--sp].node;
  }
  if (!best.valid()) return Hit{};
  return best;
}

bool Bvh::occluded(const Ray& ray) const {
  if (nodes_.empty()) return false;
  const RayPrecomp rp = precompute(ray);
  std::uint32_t stack[64];
  int sp = 0;
  std::uint32_t current = 0;
  float tnear;
  if (!slab(nodes_[0].lo, nodes_[0].hi, ray, rp, ray.tmax, tnear)) return false;
  while (true) {
    const Node& node = nodes_[current];
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        float t, u, v;
        if (intersect_triangle(ray, leaf_triangles_[i], t, u, v)) return true;
      }
    } else {
      std::uint32_t first = current + 1, second = node.first;
      float t_first, t_second;
      const bool hit_first = slab(nodes_[first].lo, nodes_[first].hi, ray, rp, ray.tmax, t_first);
      const bool hit_second = slab(nodes_[second].lo, nodes_[second].hi, ray, rp, ray.tmax, t_second);
      if (hit_first && hit_second) {
        if (t_second < t_first) std::swap(first, second);
        stack[sp++] = second;
        current = first;
        continue;
      }
      if (hit_first || hit_second) {
        current = hit_first ? first : second;
        continue;
      }
    }
    if (sp == 0) return false;
    current = stack[--sp];
  }
}

}  // namespace cadsynth
