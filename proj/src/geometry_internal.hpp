#pragma once

#include <cmath>
#include <vector>

#include "steklov/geometry_mesh.hpp"

namespace steklov::detail {

/// One analytic piece of the boundary of the computational region,
/// parametrized over t in [0, 1].
struct Curve {
    enum class Kind { Line, Arc } kind = Kind::Line;
    BoundaryTag tag = BoundaryTag::Inner;
    Vec2 p0, p1;               // Line
    Vec2 c;                    // Arc: c + (ra cos phi, rb sin phi)
    double ra = 0.0, rb = 0.0;
    double phi0 = 0.0, phi1 = 0.0;
    bool domain_left = true;   // which side of the direction of travel is meshed

    Vec2 at(double t) const;
    /// Upper bound of |d at / dt|.
    double max_speed() const;
    double length() const;
    /// Integral of x ds (the axisymmetric surface density).
    double moment_x() const;
};

std::vector<Curve> boundary_curves(const DomainSpec& spec);

inline double cross(Vec2 a, Vec2 b, Vec2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}
inline double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace steklov::detail
