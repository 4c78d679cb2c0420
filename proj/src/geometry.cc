#include "bevsim/geometry.h"

#include <algorithm>
#include <limits>
#include <string>

namespace bevsim {
namespace {

constexpr double kCoincidentEps = 1e-9;
constexpr double kBoundaryEps = 1e-12;

bool SegmentsIntersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = (b - a).Cross(c - a);
    return (v > 0.0) - (v < 0.0);
  };
  auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

double NormalizeAngle(double angle) {
  if (angle > -kPi && angle <= kPi) return angle;
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

Mat2 RotationMatrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {{{c, -s}, {s, c}}};
}

Vec2 Rotate(const Vec2& v, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Pose2 Compose(const Pose2& parent, const Pose2& local) {
  const Vec2 offset = Rotate(local.position(), parent.theta);
  return {parent.x + offset.x, parent.y + offset.y, NormalizeAngle(parent.theta + local.theta)};
}

Pose2 Inverse(const Pose2& pose) {
  const Vec2 back = Rotate(pose.position() * -1.0, -pose.theta);
  return {back.x, back.y, NormalizeAngle(-pose.theta)};
}

Vec2 TransformPoint(const Pose2& pose, const Vec2& local) {
  return pose.position() + Rotate(local, pose.theta);
}

OrientedBox OrientedBox::Make(const Pose2& center, double half_length, double half_width) {
  if (!(half_length > 0.0) || !(half_width > 0.0) || !std::isfinite(half_length) ||
      !std::isfinite(half_width)) {
    throw InvalidArgument("box extents must be positive");
  }
  return {center, half_length, half_width};
}

std::array<Vec2, 4> OrientedBox::Corners() const {
  const Vec2 f = UnitVector(center.theta) * half_length;
  const Vec2 n = UnitVector(center.theta + kPi / 2.0) * half_width;
  const Vec2 c = center.position();
  return {c + f + n, c - f + n, c - f - n, c + f - n};
}

OrientedBox TransformBox(const Pose2& pose, const OrientedBox& box) {
  return {Compose(pose, box.center), box.half_length, box.half_width};
}

double SupportExtent(const OrientedBox& box, const Vec2& u) {
  const Vec2 f = UnitVector(box.center.theta);
  const Vec2 n{-f.y, f.x};
  return box.half_length * std::abs(u.Dot(f)) + box.half_width * std::abs(u.Dot(n));
}

SatCertificate SeparatingAxisTest(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 fa = UnitVector(a.center.theta);
  const Vec2 fb = UnitVector(b.center.theta);
  const std::array<Vec2, 4> axes{fa, Vec2{-fa.y, fa.x}, fb, Vec2{-fb.y, fb.x}};
  const Vec2 d = b.center.position() - a.center.position();

  SatCertificate cert;
  cert.min_overlap = std::numeric_limits<double>::infinity();
  for (const Vec2& u : axes) {
    const double overlap = SupportExtent(a, u) + SupportExtent(b, u) - std::abs(d.Dot(u));
    if (overlap < cert.min_overlap) {
      cert.min_overlap = overlap;
      cert.axis = u;
    }
  }
  cert.separated = cert.min_overlap < -kContactTolerance;
  return cert;
}

bool BoxesCollide(const OrientedBox& a, const OrientedBox& b) {
  return !SeparatingAxisTest(a, b).separated;
}

double CenterLineGap(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 d = b.center.position() - a.center.position();
  const double dist = d.Norm();
  if (dist == 0.0) {
    return -(std::min(a.half_width, a.half_length) + std::min(b.half_width, b.half_length));
  }
  const Vec2 u = d * (1.0 / dist);
  return dist - SupportExtent(a, u) - SupportExtent(b, u);
}

// ---------------------------------------------------------------------------
// Polyline

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("polyline needs at least two points");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = Distance(points_[i - 1], points_[i]);
    if (!(len > kCoincidentEps)) {
      throw InvalidArgument("polyline has coincident consecutive points at index " +
                            std::to_string(i));
    }
    cumulative_.push_back(cumulative_.back() + len);
  }
}

std::size_t Polyline::SegmentAt(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  if (it == cumulative_.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Polyline::Projection Polyline::Project(const Vec2& p) const {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t last = points_.size() - 2;
  for (std::size_t i = 0; i <= last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 seg = points_[i + 1] - a;
    const double len = cumulative_[i + 1] - cumulative_[i];
    const Vec2 dir = seg * (1.0 / len);
    double u = (p - a).Dot(dir);
    if (i != 0) u = std::max(u, 0.0);
    if (i != last) u = std::min(u, len);
    const Vec2 foot = a + dir * u;
    const double dist = Distance(p, foot);
    if (dist < best_dist) {
      best_dist = dist;
      best.s = cumulative_[i] + u;
      best.lateral = dir.Cross(p - a);
      best.heading = std::atan2(dir.y, dir.x);
      best.segment = i;
    }
  }
  return best;
}

Vec2 Polyline::ToCartesian(double s, double lateral) const {
  const std::size_t i = SegmentAt(s);
  const Vec2 a = points_[i];
  const Vec2 seg = points_[i + 1] - a;
  const Vec2 dir = seg * (1.0 / (cumulative_[i + 1] - cumulative_[i]));
  const Vec2 normal{-dir.y, dir.x};
  return a + dir * (s - cumulative_[i]) + normal * lateral;
}

double Polyline::HeadingAt(double s) const {
  const std::size_t i = SegmentAt(s);
  const Vec2 seg = points_[i + 1] - points_[i];
  return std::atan2(seg.y, seg.x);
}

double Polyline::DistanceTo(const Vec2& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    best = std::min(best, PointSegmentDistance(p, points_[i], points_[i + 1]));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Polygon

double SignedArea(std::span<const Vec2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    twice += ring[i].Cross(ring[(i + 1) % ring.size()]);
  }
  return 0.5 * twice;
}

bool IsSimpleRing(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (Distance(ring[i], ring[(i + 1) % n]) <= kCoincidentEps) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (SegmentsIntersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) {
        return false;
      }
    }
  }
  // Adjacent edges may only share their common vertex (no folding back).
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 prev = ring[(i + n - 1) % n];
    const Vec2 cur = ring[i];
    const Vec2 next = ring[(i + 1) % n];
    const Vec2 e1 = cur - prev;
    const Vec2 e2 = next - cur;
    if (std::abs(e1.Cross(e2)) <= kBoundaryEps * e1.Norm() * e2.Norm() && e1.Dot(e2) < 0.0) {
      return false;
    }
  }
  return true;
}

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw InvalidArgument("polygon needs at least three vertices");
  if (!IsSimpleRing(vertices_)) throw InvalidArgument("polygon is not simple");
  if (!(bevsim::SignedArea(vertices_) > 0.0)) {
    throw InvalidArgument("polygon must wind counter-clockwise");
  }
}

double Polygon::SignedArea() const { return bevsim::SignedArea(vertices_); }

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.Dot(ab);
  if (len2 == 0.0) return Distance(p, a);
  const double u = std::clamp((p - a).Dot(ab) / len2, 0.0, 1.0);
  return Distance(p, a + ab * u);
}

bool PointInPolygon(const Vec2& p, const Polygon& poly) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (PointSegmentDistance(p, v[i], v[(i + 1) % n]) <= kBoundaryEps) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = v[i];
    const Vec2& b = v[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

// ---------------------------------------------------------------------------

double MinClearance(std::span<const TimedPoint> path_a, std::span<const TimedPoint> path_b) {
  if (path_a.empty() || path_b.empty() ||
      path_a.back().t < path_b.front().t - kTimeTolerance ||
      path_b.back().t < path_a.front().t - kTimeTolerance) {
    throw EmptyOverlap("paths do not overlap in time");
  }
  double best = std::numeric_limits<double>::infinity();
  bool matched = false;
  std::size_t j = 0;
  for (const TimedPoint& a : path_a) {
    while (j < path_b.size() && path_b[j].t < a.t - kTimeTolerance) ++j;
    if (j == path_b.size()) break;
    if (std::abs(path_b[j].t - a.t) <= kTimeTolerance) {
      matched = true;
      best = std::min(best, Distance(a.p, path_b[j].p));
    }
  }
  if (!matched) throw EmptyOverlap("paths share no timestamp");
  return best;
}

}  // namespace bevsim
