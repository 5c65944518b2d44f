#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "steklov/special_functions.hpp"

namespace steklov {

/// Planar point; (r, z) in the axisymmetric half-plane.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Ambient { Planar2D, Axisym3D };

const char* to_string(Ambient a);
/// "planar2D" / "axisym3D"; DomainError on anything else.
Ambient ambient_from_string(const std::string& s);

enum class ObstacleKind { Disk, Ellipse, Polygon, Spheroid, CappedCylinder, RotatedPolygon };

/// The compact obstacle and the truncation radius L of the computational ball.
///
/// Disk: radius a. Ellipse: semi-axes a (along x) and b (along y).
/// Polygon: counterclockwise vertex list. Spheroid: semi-axis a along r and
/// b along the symmetry axis z. CappedCylinder: radius a, height b.
/// RotatedPolygon: profile in r >= 0 running from a point on the axis to a
/// point on the axis (south to north), rotated about the z axis.
/// The obstacle is displaced by `center_offset` (along z only when axisymmetric).
struct DomainSpec {
    Ambient ambient = Ambient::Planar2D;
    ObstacleKind kind = ObstacleKind::Disk;
    double a = 1.0;
    double b = 1.0;
    std::vector<Vec2> vertices;
    Vec2 center_offset;
    double L = 2.0;
    /// Set by the square/triangle factories so that the capacity is known.
    std::string canonical;

    static DomainSpec disk(double R, Vec2 center, double L);
    static DomainSpec ellipse(double a, double b, Vec2 center, double L);
    static DomainSpec polygon(std::vector<Vec2> vertices, double L);
    /// Axis-aligned square centred at the origin.
    static DomainSpec square(double side, double L);
    /// Equilateral triangle with a vertical left side at x = -side/3 and apex on +x.
    static DomainSpec triangle(double side, double L);
    static DomainSpec spheroid(double a_radial, double b_axial, double L);
    static DomainSpec capped_cylinder(double radius, double height, double L);
    static DomainSpec rotated_polygon(std::vector<Vec2> profile, double L);
    /// Ball of radius R (disk in 2D, sphere in the axisymmetric setting).
    static DomainSpec ball(Ambient ambient, double R, double L);

    /// Throws GeometryError when an invariant fails.
    void validate() const;
    /// Largest distance from the origin to the obstacle boundary.
    double circumradius() const;
    /// Perimeter (planar) or surface area (axisymmetric) of the obstacle.
    double boundary_measure() const;
};

/// Capacity lookup for the four canonical planar shapes.
std::optional<ShapeForCapacity> capacity_shape(const DomainSpec& spec);

enum class BoundaryTag { Inner, Outer, Axis };

const char* to_string(BoundaryTag t);

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    BoundaryTag tag = BoundaryTag::Inner;
};

struct Mesh {
    Ambient ambient = Ambient::Planar2D;
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    double h_max = 0.0;  // longest edge
    double L = 0.0;      // radius of the OUTER boundary

    double area() const;
    double min_angle_degrees() const;
    /// Recomputes h_max and L from the data.
    void update_metrics();
};

/// Checks every mesh invariant; throws GeometryError naming the first violation.
void validate_mesh(const Mesh& mesh);

/// Conforming Delaunay triangulation of the region between the obstacle and
/// |x| = L (its r >= 0 half for axisymmetric specs), refined to edges <= h_max
/// and angles >= 20 degrees.
Mesh build_mesh(const DomainSpec& spec, double h_max);

struct BoundaryPath {
    std::vector<int> nodes;  // closed loops do not repeat the first node
    std::vector<double> s;   // cumulative arclength at each node, s[0] = 0
    double length = 0.0;
    bool closed = false;
};

/// Planar loops are ordered counterclockwise starting at the node closest in
/// polar angle to -pi. Open chains (axisymmetric) run from low to high z.
BoundaryPath boundary_arclength(const Mesh& mesh, BoundaryTag tag);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);
/// FNV-1a hash of the serialized text.
std::uint64_t mesh_checksum(const Mesh& mesh);

}  // namespace steklov
