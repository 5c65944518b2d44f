#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "geometry_internal.hpp"
#include "steklov/errors.hpp"

namespace steklov {

using detail::cross;
using detail::dist;

double Mesh::area() const {
    double a = 0.0;
    for (const auto& t : triangles) a += 0.5 * cross(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    return a;
}

double Mesh::min_angle_degrees() const {
    double worst = 180.0;
    for (const auto& t : triangles) {
        for (int i = 0; i < 3; ++i) {
            const Vec2 p = nodes[t[i]], q = nodes[t[(i + 1) % 3]], r = nodes[t[(i + 2) % 3]];
            const double ux = q.x - p.x, uy = q.y - p.y, vx = r.x - p.x, vy = r.y - p.y;
            const double ang = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
            worst = std::min(worst, ang * 180.0 / kPi);
        }
    }
    return worst;
}

void Mesh::update_metrics() {
    h_max = 0.0;
    for (const auto& t : triangles)
        for (int i = 0; i < 3; ++i) h_max = std::max(h_max, dist(nodes[t[i]], nodes[t[(i + 1) % 3]]));
    double r = 0.0;
    for (const auto& e : boundary_edges) {
        if (e.tag != BoundaryTag::Outer) continue;
        r = std::max({r, std::hypot(nodes[e.a].x, nodes[e.a].y), std::hypot(nodes[e.b].x, nodes[e.b].y)});
    }
    L = r;
}

namespace {

[[noreturn]] void violation(const std::string& what) { throw GeometryError("invariant violation: " + what); }

std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

struct Chains {
    int components = 0;
    bool all_closed = true;
    std::vector<int> endpoints;  // degree-1 nodes
    bool branching = false;
};

Chains analyse_chains(const std::vector<BoundaryEdge>& edges) {
    std::map<int, std::vector<int>> adj;
    for (const auto& e : edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    Chains c;
    for (const auto& [v, nb] : adj) {
        if (nb.size() == 1) c.endpoints.push_back(v);
        if (nb.size() > 2) c.branching = true;
    }
    c.all_closed = c.endpoints.empty();
    std::map<int, bool> seen;
    for (const auto& [v, nb] : adj) {
        if (seen[v]) continue;
        ++c.components;
        std::vector<int> stack{v};
        seen[v] = true;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int w : adj[u])
                if (!seen[w]) {
                    seen[w] = true;
                    stack.push_back(w);
                }
        }
    }
    return c;
}

}  // namespace

void validate_mesh(const Mesh& mesh) {
    const int n = int(mesh.nodes.size());
    if (n == 0 || mesh.triangles.empty()) violation("empty mesh");
    double L = 0.0;
    for (const auto& e : mesh.boundary_edges) {
        if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n || e.a == e.b) violation("boundary edge index out of range");
        if (e.tag == BoundaryTag::Outer) L = std::max(L, std::hypot(mesh.nodes[e.a].x, mesh.nodes[e.a].y));
    }
    if (!(L > 0.0)) violation("no OUTER boundary");
    for (const auto& p : mesh.nodes)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) violation("non-finite node coordinate");

    // orientation and conformity
    std::map<std::uint64_t, int> edge_count;
    for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
        const auto& t = mesh.triangles[k];
        for (int v : t)
            if (v < 0 || v >= n) violation("triangle index out of range");
        if (!(cross(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) > 0.0))
            violation("triangle " + std::to_string(k) + " is not positively oriented");
        for (int i = 0; i < 3; ++i) ++edge_count[key(t[i], t[(i + 1) % 3])];
    }
    std::map<std::uint64_t, int> bcount;
    for (const auto& e : mesh.boundary_edges) {
        if (++bcount[key(e.a, e.b)] > 1) violation("duplicate boundary edge");
        const auto it = edge_count.find(key(e.a, e.b));
        if (it == edge_count.end() || it->second != 1)
            violation("boundary edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                      " is not the side of exactly one triangle");
    }
    for (const auto& [k, c] : edge_count) {
        if (c > 2) violation("edge shared by more than two triangles");
        if (c == 1 && !bcount.count(k)) violation("untagged boundary edge");
    }

    // duplicate nodes
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return mesh.nodes[a].x < mesh.nodes[b].x; });
    const double tol = 1e-12 * L;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n && mesh.nodes[order[j]].x - mesh.nodes[order[i]].x < tol; ++j)
            if (dist(mesh.nodes[order[i]], mesh.nodes[order[j]]) < tol) violation("duplicate nodes");
    }

    std::vector<BoundaryEdge> inner, outer, axis;
    for (const auto& e : mesh.boundary_edges) {
        (e.tag == BoundaryTag::Inner ? inner : e.tag == BoundaryTag::Outer ? outer : axis).push_back(e);
    }
    if (inner.empty()) violation("no INNER (Steklov) boundary edges");
    for (const auto& e : outer) {
        for (int v : {e.a, e.b})
            if (std::abs(std::hypot(mesh.nodes[v].x, mesh.nodes[v].y) - L) > 1e-10 * L)
                violation("OUTER node off the circle |x| = L");
    }
    const Chains ci = analyse_chains(inner), co = analyse_chains(outer);
    if (ci.branching || co.branching) violation("boundary chain branches");
    if (mesh.ambient == Ambient::Planar2D) {
        if (!axis.empty()) violation("AXIS edges in a planar mesh");
        if (ci.components != 1 || !ci.all_closed) violation("INNER edges do not form one closed loop");
        if (co.components != 1 || !co.all_closed) violation("OUTER edges do not form one closed loop");
        return;
    }
    for (const auto& p : mesh.nodes)
        if (p.x < -1e-14) violation("node with r < 0");
    for (const auto& e : axis)
        if (mesh.nodes[e.a].x > 1e-10 * L || mesh.nodes[e.b].x > 1e-10 * L) violation("AXIS edge off r = 0");
    if (ci.components != 1 || ci.endpoints.size() != 2) violation("INNER edges do not form one chain");
    if (co.components != 1 || co.endpoints.size() != 2) violation("OUTER edges do not form one chain");
    auto on_axis = [&](int v) {
        for (const auto& e : axis)
            if (e.a == v || e.b == v) return true;
        return false;
    };
    for (int v : ci.endpoints)
        if (!on_axis(v)) violation("INNER chain endpoint not on the AXIS");
    for (int v : co.endpoints)
        if (!on_axis(v)) violation("OUTER chain endpoint not on the AXIS");
}

BoundaryPath boundary_arclength(const Mesh& mesh, BoundaryTag tag) {
    std::map<int, std::vector<int>> adj;
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != tag) continue;
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    if (adj.empty()) throw DomainError(std::string("boundary tag ") + to_string(tag) + " absent from mesh");
    BoundaryPath path;
    int start = -1;
    for (const auto& [v, nb] : adj)
        if (nb.size() == 1 && (start < 0 || mesh.nodes[v].y < mesh.nodes[start].y)) start = v;
    path.closed = start < 0;
    if (path.closed) start = adj.begin()->first;
    // walk
    std::vector<int> order{start};
    int prev = -1, cur = start;
    for (;;) {
        int next = -1;
        for (int w : adj[cur])
            if (w != prev && !(path.closed && w == start && order.size() < 3)) {
                next = w;
                break;
            }
        if (next < 0 || next == start) break;
        order.push_back(next);
        prev = cur;
        cur = next;
    }
    if (path.closed) {
        double area2 = 0.0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Vec2 p = mesh.nodes[order[i]], q = mesh.nodes[order[(i + 1) % order.size()]];
            area2 += p.x * q.y - q.x * p.y;
        }
        if (area2 < 0.0) std::reverse(order.begin(), order.end());
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Vec2 p = mesh.nodes[order[i]];
            // angular distance to -pi; on a tie prefer the lower half-plane
            const double d = kPi - std::abs(std::atan2(p.y, p.x)) + (p.y > 0.0 ? 1e-14 : 0.0);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        std::rotate(order.begin(), order.begin() + long(best), order.end());
    }
    path.nodes = order;
    path.s.assign(order.size(), 0.0);
    for (std::size_t i = 1; i < order.size(); ++i)
        path.s[i] = path.s[i - 1] + dist(mesh.nodes[order[i - 1]], mesh.nodes[order[i]]);
    path.length = path.s.back() + (path.closed ? dist(mesh.nodes[order.back()], mesh.nodes[order.front()]) : 0.0);
    return path;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
    char buf[128];
    out << "steklov-mesh v1 " << to_string(mesh.ambient) << "\n";
    out << "nodes " << mesh.nodes.size() << "\n";
    for (const auto& p : mesh.nodes) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
        out << buf;
    }
    out << "tris " << mesh.triangles.size() << "\n";
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    out << "bedges " << mesh.boundary_edges.size() << "\n";
    for (const auto& e : mesh.boundary_edges) out << e.a << ' ' << e.b << ' ' << to_string(e.tag) << "\n";
}

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}
    std::istringstream next(const char* expecting) {
        std::string s;
        while (std::getline(in_, s)) {
            ++line_;
            if (s.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(s);
        }
        throw ParseError(std::string("unexpected end of file, expecting ") + expecting, line_ + 1);
    }
    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

std::size_t read_count(LineReader& r, const std::string& word) {
    auto ls = r.next(word.c_str());
    std::string w;
    long long count = -1;
    if (!(ls >> w >> count) || w != word || count < 0) throw ParseError("expected '" + word + " <count>'", r.line());
    std::string extra;
    if (ls >> extra) throw ParseError("trailing characters after count", r.line());
    return std::size_t(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
    LineReader r(in);
    Mesh mesh;
    {
        auto ls = r.next("header");
        std::string magic, version, ambient;
        if (!(ls >> magic >> version >> ambient) || magic != "steklov-mesh" || version != "v1")
            throw ParseError("expected header 'steklov-mesh v1 <ambient>'", r.line());
        if (ambient == "planar2D")
            mesh.ambient = Ambient::Planar2D;
        else if (ambient == "axisym3D")
            mesh.ambient = Ambient::Axisym3D;
        else
            throw ParseError("unknown ambient '" + ambient + "'", r.line());
    }
    const std::size_t nn = read_count(r, "nodes");
    for (std::size_t i = 0; i < nn; ++i) {
        auto ls = r.next("node coordinates");
        Vec2 p;
        std::string extra;
        if (!(ls >> p.x >> p.y) || (ls >> extra)) throw ParseError("expected 'x y'", r.line());
        mesh.nodes.push_back(p);
    }
    const std::size_t nt = read_count(r, "tris");
    for (std::size_t i = 0; i < nt; ++i) {
        auto ls = r.next("triangle");
        std::array<int, 3> t{};
        std::string extra;
        if (!(ls >> t[0] >> t[1] >> t[2]) || (ls >> extra)) throw ParseError("expected 'i j k'", r.line());
        for (int v : t)
            if (v < 0 || v >= int(nn)) throw ParseError("node index out of range", r.line());
        mesh.triangles.push_back(t);
    }
    const std::size_t nb = read_count(r, "bedges");
    for (std::size_t i = 0; i < nb; ++i) {
        auto ls = r.next("boundary edge");
        BoundaryEdge e;
        std::string tag, extra;
        if (!(ls >> e.a >> e.b >> tag) || (ls >> extra)) throw ParseError("expected 'i j TAG'", r.line());
        if (e.a < 0 || e.a >= int(nn) || e.b < 0 || e.b >= int(nn))
            throw ParseError("node index out of range", r.line());
        if (tag == "INNER")
            e.tag = BoundaryTag::Inner;
        else if (tag == "OUTER")
            e.tag = BoundaryTag::Outer;
        else if (tag == "AXIS")
            e.tag = BoundaryTag::Axis;
        else
            throw ParseError("unknown boundary tag '" + tag + "'", r.line());
        mesh.boundary_edges.push_back(e);
    }
    std::string rest;
    while (std::getline(in, rest)) {
        if (rest.find_first_not_of(" \t\r") != std::string::npos)
            throw ParseError("unexpected content after the boundary edges", r.line() + 1);
    }
    mesh.update_metrics();
    validate_mesh(mesh);
    return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_mesh(out, mesh);
    if (!out) throw Error("write to '" + path + "' failed");
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GeometryError("cannot open mesh file '" + path + "'");
    return read_mesh(in);
}

std::uint64_t mesh_checksum(const Mesh& mesh) {
    std::ostringstream os;
    write_mesh(os, mesh);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace steklov
