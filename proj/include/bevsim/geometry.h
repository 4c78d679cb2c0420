#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "bevsim/errors.h"

namespace bevsim {

inline constexpr double kPi = std::numbers::pi;
// Two timestamps closer than this are treated as the same grid instant.
inline constexpr double kTimeTolerance = 1e-9;
// Boxes whose projections miss by less than this are treated as touching.
inline constexpr double kContactTolerance = 1e-9;

// Wraps an angle into (-pi, pi]. Angles already in range are returned
// unchanged (bitwise).
double NormalizeAngle(double angle);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double Dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double Cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double Norm() const { return std::hypot(x, y); }

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 UnitVector(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline double Distance(const Vec2& a, const Vec2& b) { return (a - b).Norm(); }

// Planar rigid pose. theta is the counter-clockwise heading in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

using Mat2 = std::array<std::array<double, 2>, 2>;

// Standard counter-clockwise rotation [[c, -s], [s, c]].
Mat2 RotationMatrix(double theta);
Vec2 Rotate(const Vec2& v, double theta);

// Pose of `local` (expressed in `parent`'s frame) in the frame `parent` lives in.
Pose2 Compose(const Pose2& parent, const Pose2& local);
Pose2 Inverse(const Pose2& pose);
Vec2 TransformPoint(const Pose2& pose, const Vec2& local);

struct OrientedBox {
  Pose2 center;
  double half_length = 0.0;
  double half_width = 0.0;

  // Throws InvalidArgument unless both extents are positive and finite.
  static OrientedBox Make(const Pose2& center, double half_length, double half_width);

  // Counter-clockwise starting at front-left.
  std::array<Vec2, 4> Corners() const;

  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

OrientedBox TransformBox(const Pose2& pose, const OrientedBox& box);

// Result of the separating-axis test over the four face normals.
struct SatCertificate {
  bool separated = false;
  // Axis with the smallest projected overlap (or the separating axis).
  Vec2 axis;
  // Smallest projected overlap over all axes; below -kContactTolerance when
  // separated.
  double min_overlap = 0.0;
};

SatCertificate SeparatingAxisTest(const OrientedBox& a, const OrientedBox& b);

// Touching boxes count as colliding.
bool BoxesCollide(const OrientedBox& a, const OrientedBox& b);

// Half-extent of `box` projected on the unit direction `u`.
double SupportExtent(const OrientedBox& box, const Vec2& u);

// Gap between two footprints measured along their center-to-center line:
// ||c_a - c_b|| - support_a(u) - support_b(u). A positive gap certifies the
// boxes are disjoint.
double CenterLineGap(const OrientedBox& a, const OrientedBox& b);

class Polyline {
 public:
  struct Projection {
    double s = 0.0;        // arc length of the foot point
    double lateral = 0.0;  // signed offset, left of travel direction positive
    double heading = 0.0;  // tangent heading at the foot point
    std::size_t segment = 0;
  };

  Polyline() = default;
  // Throws InvalidArgument on fewer than two points or coincident neighbors.
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  double Length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  // The first and last segments are extended to infinity so Project and
  // ToCartesian stay inverse to each other beyond the ends.
  Projection Project(const Vec2& p) const;
  Vec2 ToCartesian(double s, double lateral) const;
  double HeadingAt(double s) const;
  double DistanceTo(const Vec2& p) const;

  friend bool operator==(const Polyline& a, const Polyline& b) { return a.points_ == b.points_; }

 private:
  std::size_t SegmentAt(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

// Simple, counter-clockwise polygon.
class Polygon {
 public:
  Polygon() = default;
  // Throws InvalidArgument unless the ring is simple and counter-clockwise.
  explicit Polygon(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  double SignedArea() const;

  friend bool operator==(const Polygon& a, const Polygon& b) { return a.vertices_ == b.vertices_; }

 private:
  std::vector<Vec2> vertices_;
};

double SignedArea(std::span<const Vec2> ring);
bool IsSimpleRing(std::span<const Vec2> ring);

// Inside or on the boundary.
bool PointInPolygon(const Vec2& p, const Polygon& poly);

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b);

struct TimedPoint {
  double t = 0.0;
  Vec2 p;
};
using TimedPath = std::vector<TimedPoint>;

class EmptyOverlap : public Error {
 public:
  using Error::Error;
};

// Minimum center distance over the timestamps shared by both paths (matched
// within kTimeTolerance). Throws EmptyOverlap when no timestamp is shared.
double MinClearance(std::span<const TimedPoint> path_a, std::span<const TimedPoint> path_b);

}  // namespace bevsim
