#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "cadsynth/geometry.hpp"

namespace cadsynth {

struct Ray {
  Vec3f origin;
  Vec3f dir;
  float tmin = 0.0f;
  float tmax = std::numeric_limits<float>::infinity();
};

// Triangle stored as p0 + u*e1 + v*e2. A degenerate triangle has e1 = e2 = 0
// and is never hit.
struct TriangleData {
  Vec3f p0;
  Vec3f e1;
  Vec3f e2;

  static TriangleData from_points(const Vec3& a, const Vec3& b, const Vec3& c);
  bool degenerate() const { return e1 == Vec3f{} && e2 == Vec3f{}; }
};

struct Hit {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  float t = std::numeric_limits<float>::infinity();
  float u = 0;
  float v = 0;
  std::uint32_t prim = kNone;

  bool valid() const { return prim != kNone; }
};

// Moller-Trumbore, double sided. Accepts tmin < t < tmax.
inline bool intersect_triangle(const Ray& ray, const TriangleData& tri, float& t, float& u, float& v) {
  const Vec3f pvec = cross(ray.dir, tri.e2);
  const float det = dot(tri.e1, pvec);
  if (det == 0.0f) return false;
  const float inv_det = 1.0f / det;
  const Vec3f tvec = ray.origin - tri.p0;
  u = dot(tvec, pvec) * inv_det;
  if (u < 0.0f || u > 1.0f) return false;
  const Vec3f qvec = cross(tvec, tri.e1);
  v = dot(ray.dir, qvec) * inv_det;
  if (v < 0.0f || u + v > 1.0f) return false;
  t = dot(tri.e2, qvec) * inv_det;
  return t > ray.tmin && t < ray.tmax;
}

// Nearest-hit ordering shared by every traversal: smaller t wins, equal t goes
// to the smaller primitive index.
inline bool closer(float t, std::uint32_t prim, const Hit& best) {
  return t < best.t || (t == best.t && prim < best.prim);
}

// Binary BVH over triangles: binned SAH splits on the widest centroid axis,
// falling back to a median split.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(std::vector<TriangleData> triangles);

  Hit closest(const Ray& ray) const;
  bool occluded(const Ray& ray) const;

  const std::vector<TriangleData>& triangles() const { return triangles_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    float lo[3];
    float hi[3];
    std::uint32_t first;  // leaf: first index into order_; inner: right child
    std::uint16_t count;  // 0 for inner nodes
    std::uint8_t axis;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3f>& centroids, int depth);

  std::vector<TriangleData> triangles_;  // caller order; prim ids index this
  std::vector<TriangleData> leaf_triangles_;  // traversal order
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace cadsynth
