#include <algorithm>
#include <cmath>

#include "geometry_internal.hpp"
#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"

namespace steklov {

using detail::Curve;

const char* to_string(Ambient a) { return a == Ambient::Planar2D ? "planar2D" : "axisym3D"; }

Ambient ambient_from_string(const std::string& s) {
    if (s == "planar2D") return Ambient::Planar2D;
    if (s == "axisym3D") return Ambient::Axisym3D;
    throw DomainError("unknown ambient '" + s + "'");
}

const char* to_string(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::Inner: return "INNER";
        case BoundaryTag::Outer: return "OUTER";
        case BoundaryTag::Axis: return "AXIS";
    }
    return "?";
}

DomainSpec DomainSpec::disk(double R, Vec2 center, double L) {
    DomainSpec s;
    s.kind = ObstacleKind::Disk;
    s.a = s.b = R;
    s.center_offset = center;
    s.L = L;
    s.canonical = "disk";
    return s;
}

DomainSpec DomainSpec::ellipse(double a, double b, Vec2 center, double L) {
    DomainSpec s;
    s.kind = ObstacleKind::Ellipse;
    s.a = a;
    s.b = b;
    s.center_offset = center;
    s.L = L;
    s.canonical = "ellipse";
    return s;
}

DomainSpec DomainSpec::polygon(std::vector<Vec2> vertices, double L) {
    DomainSpec s;
    s.kind = ObstacleKind::Polygon;
    s.vertices = std::move(vertices);
    s.L = L;
    return s;
}

DomainSpec DomainSpec::square(double side, double L) {
    const double h = 0.5 * side;
    DomainSpec s = polygon({{-h, -h}, {h, -h}, {h, h}, {-h, h}}, L);
    s.a = side;
    s.canonical = "square";
    return s;
}

DomainSpec DomainSpec::triangle(double side, double L) {
    const double x0 = -side / 3.0;
    DomainSpec s = polygon({{x0, -0.5 * side}, {x0 + 0.5 * std::sqrt(3.0) * side, 0.0}, {x0, 0.5 * side}}, L);
    s.a = side;
    s.canonical = "triangle";
    return s;
}

DomainSpec DomainSpec::spheroid(double a_radial, double b_axial, double L) {
    DomainSpec s;
    s.ambient = Ambient::Axisym3D;
    s.kind = ObstacleKind::Spheroid;
    s.a = a_radial;
    s.b = b_axial;
    s.L = L;
    return s;
}

DomainSpec DomainSpec::capped_cylinder(double radius, double height, double L) {
    DomainSpec s;
    s.ambient = Ambient::Axisym3D;
    s.kind = ObstacleKind::CappedCylinder;
    s.a = radius;
    s.b = height;
    s.L = L;
    return s;
}

DomainSpec DomainSpec::rotated_polygon(std::vector<Vec2> profile, double L) {
    DomainSpec s;
    s.ambient = Ambient::Axisym3D;
    s.kind = ObstacleKind::RotatedPolygon;
    s.vertices = std::move(profile);
    s.L = L;
    return s;
}

DomainSpec DomainSpec::ball(Ambient ambient, double R, double L) {
    if (ambient == Ambient::Planar2D) return disk(R, {0.0, 0.0}, L);
    DomainSpec s = spheroid(R, R, L);
    s.canonical = "sphere";
    return s;
}

namespace {

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = detail::cross(a, b, c), d2 = detail::cross(a, b, d);
    const double d3 = detail::cross(c, d, a), d4 = detail::cross(c, d, b);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

// Simple and counterclockwise; `closed_by_axis` closes the chain with the axis.
void check_simple_ccw(const std::vector<Vec2>& v, const char* what) {
    const int n = int(v.size());
    double area2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 p = v[i], q = v[(i + 1) % n];
        area2 += p.x * q.y - q.x * p.y;
        if (detail::dist(p, q) == 0.0) throw GeometryError(std::string(what) + ": repeated vertex");
    }
    if (!(area2 > 0.0)) throw GeometryError(std::string(what) + ": vertices must be counterclockwise");
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                throw GeometryError(std::string(what) + ": edges " + std::to_string(i) + " and " +
                                    std::to_string(j) + " intersect");
        }
    }
}

double gauss_integral(const Curve& c, double (*f)(const Curve&, double)) {
    static const GaussRule rule = gauss_legendre(8);
    const int panels = c.kind == Curve::Kind::Line ? 1 : 256;
    double s = 0.0;
    for (int k = 0; k < panels; ++k) {
        for (std::size_t j = 0; j < rule.x.size(); ++j) {
            const double t = (k + 0.5 * (rule.x[j] + 1.0)) / panels;
            s += 0.5 * rule.w[j] / panels * f(c, t);
        }
    }
    return s;
}

double speed(const Curve& c, double t) {
    if (c.kind == Curve::Kind::Line) return detail::dist(c.p0, c.p1);
    const double phi = c.phi0 + t * (c.phi1 - c.phi0);
    return std::abs(c.phi1 - c.phi0) * std::hypot(c.ra * std::sin(phi), c.rb * std::cos(phi));
}

}  // namespace

namespace detail {

Vec2 Curve::at(double t) const {
    if (kind == Kind::Line) {
        if (t == 1.0) return p1;
        return {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
    }
    const double phi = phi0 + t * (phi1 - phi0);
    double cs = std::cos(phi), sn = std::sin(phi);
    // exact values at the quarter points keep axis endpoints on r = 0
    if (std::abs(std::abs(phi) - 0.5 * kPi) < 1e-15) cs = 0.0;
    if (std::abs(std::abs(phi) - kPi) < 1e-15) sn = 0.0;
    return {c.x + ra * cs, c.y + rb * sn};
}

double Curve::max_speed() const {
    if (kind == Kind::Line) return dist(p0, p1);
    return std::abs(phi1 - phi0) * std::max(ra, rb);
}

double Curve::length() const { return gauss_integral(*this, speed); }

double Curve::moment_x() const {
    return gauss_integral(*this, [](const Curve& c, double t) { return c.at(t).x * speed(c, t); });
}

std::vector<Curve> boundary_curves(const DomainSpec& spec) {
    std::vector<Curve> out;
    const Vec2 off = spec.center_offset;
    auto line = [&](Vec2 p, Vec2 q, BoundaryTag tag, bool left) {
        Curve c;
        c.kind = Curve::Kind::Line;
        c.tag = tag;
        c.p0 = p;
        c.p1 = q;
        c.domain_left = left;
        out.push_back(c);
    };
    auto arc = [&](Vec2 ctr, double ra, double rb, double f0, double f1, BoundaryTag tag, bool left) {
        Curve c;
        c.kind = Curve::Kind::Arc;
        c.tag = tag;
        c.c = ctr;
        c.ra = ra;
        c.rb = rb;
        c.phi0 = f0;
        c.phi1 = f1;
        c.domain_left = left;
        out.push_back(c);
    };
    auto polygon = [&](const std::vector<Vec2>& v, bool closed) {
        const int n = int(v.size());
        const int m = closed ? n : n - 1;
        for (int i = 0; i < m; ++i) {
            const Vec2 p{v[i].x + off.x, v[i].y + off.y};
            const Vec2 q{v[(i + 1) % n].x + off.x, v[(i + 1) % n].y + off.y};
            line(p, q, BoundaryTag::Inner, false);
        }
    };
    if (spec.ambient == Ambient::Planar2D) {
        switch (spec.kind) {
            case ObstacleKind::Disk:
            case ObstacleKind::Ellipse:
                arc(off, spec.a, spec.kind == ObstacleKind::Disk ? spec.a : spec.b, -kPi, kPi, BoundaryTag::Inner,
                    false);
                break;
            case ObstacleKind::Polygon: polygon(spec.vertices, true); break;
            default: throw GeometryError("obstacle kind not available in the planar setting");
        }
        arc({0.0, 0.0}, spec.L, spec.L, -kPi, kPi, BoundaryTag::Outer, true);
        return out;
    }
    double z_south = 0.0, z_north = 0.0;
    switch (spec.kind) {
        case ObstacleKind::Spheroid:
            arc(off, spec.a, spec.b, -0.5 * kPi, 0.5 * kPi, BoundaryTag::Inner, false);
            z_south = off.y - spec.b;
            z_north = off.y + spec.b;
            break;
        case ObstacleKind::CappedCylinder: {
            const double h = 0.5 * spec.b;
            polygon({{0.0, -h}, {spec.a, -h}, {spec.a, h}, {0.0, h}}, false);
            z_south = off.y - h;
            z_north = off.y + h;
            break;
        }
        case ObstacleKind::RotatedPolygon:
            polygon(spec.vertices, false);
            z_south = spec.vertices.front().y + off.y;
            z_north = spec.vertices.back().y + off.y;
            break;
        default: throw GeometryError("obstacle kind not available in the axisymmetric setting");
    }
    line({0.0, -spec.L}, {0.0, z_south}, BoundaryTag::Axis, false);
    line({0.0, z_north}, {0.0, spec.L}, BoundaryTag::Axis, false);
    arc({0.0, 0.0}, spec.L, spec.L, -0.5 * kPi, 0.5 * kPi, BoundaryTag::Outer, true);
    return out;
}

}  // namespace detail

void DomainSpec::validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw GeometryError("truncation radius L must be positive");
    const bool planar = ambient == Ambient::Planar2D;
    switch (kind) {
        case ObstacleKind::Disk:
        case ObstacleKind::Ellipse:
            if (!planar) throw GeometryError("disk/ellipse obstacles are planar; use spheroid");
            if (!(a > 0.0) || !(b > 0.0)) throw GeometryError("semi-axes must be positive");
            break;
        case ObstacleKind::Polygon:
            if (!planar) throw GeometryError("polygon obstacles are planar; use rotated_polygon");
            if (vertices.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
            check_simple_ccw(vertices, "polygon");
            break;
        case ObstacleKind::Spheroid:
        case ObstacleKind::CappedCylinder:
            if (planar) throw GeometryError("spheroid/capped cylinder obstacles are axisymmetric");
            if (!(a > 0.0) || !(b > 0.0)) throw GeometryError("obstacle dimensions must be positive");
            break;
        case ObstacleKind::RotatedPolygon: {
            if (planar) throw GeometryError("rotated polygons are axisymmetric");
            if (vertices.size() < 3) throw GeometryError("profile needs at least 3 vertices");
            if (vertices.front().x != 0.0 || vertices.back().x != 0.0)
                throw GeometryError("profile must start and end on the axis r = 0");
            if (!(vertices.front().y < vertices.back().y))
                throw GeometryError("profile must run from south (low z) to north (high z)");
            for (std::size_t i = 1; i + 1 < vertices.size(); ++i)
                if (!(vertices[i].x > 0.0))
                    throw GeometryError("profile touches the axis at interior vertex " + std::to_string(i));
            check_simple_ccw(vertices, "profile");
            break;
        }
    }
    if (!planar && center_offset.x != 0.0) throw GeometryError("axisymmetric obstacles can only move along z");
    const double rc = circumradius();
    if (!(rc < L))
        throw GeometryError("obstacle not strictly inside B_L: circumradius " + std::to_string(rc) +
                            " >= L = " + std::to_string(L));
}

double DomainSpec::circumradius() const {
    double r = 0.0;
    for (const Curve& c : detail::boundary_curves(*this)) {
        if (c.tag != BoundaryTag::Inner) continue;
        const int n = c.kind == Curve::Kind::Line ? 1 : 4096;
        for (int j = 0; j <= n; ++j) {
            const Vec2 p = c.at(double(j) / n);
            r = std::max(r, std::hypot(p.x, p.y));
        }
        if (c.kind == Curve::Kind::Arc) r += 1e-6 * std::max(c.ra, c.rb);  // sampling slack
    }
    return r;
}

double DomainSpec::boundary_measure() const {
    double s = 0.0;
    for (const Curve& c : detail::boundary_curves(*this)) {
        if (c.tag != BoundaryTag::Inner) continue;
        s += ambient == Ambient::Planar2D ? c.length() : 2.0 * kPi * c.moment_x();
    }
    return s;
}

std::optional<ShapeForCapacity> capacity_shape(const DomainSpec& spec) {
    if (spec.ambient != Ambient::Planar2D) return std::nullopt;
    if (spec.kind == ObstacleKind::Disk) return ShapeForCapacity::disk(spec.a);
    if (spec.kind == ObstacleKind::Ellipse) return ShapeForCapacity::ellipse(spec.a, spec.b);
    if (spec.canonical == "square") return ShapeForCapacity::square(spec.a);
    if (spec.canonical == "triangle") return ShapeForCapacity::triangle(spec.a);
    return std::nullopt;
}

}  // namespace steklov
