// Conforming Delaunay mesher: Bowyer-Watson insertion, boundary recovery by
// splitting encroached segments, Ruppert refinement of bad triangles.
// Triangles outside the region stay in the triangulation until extraction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <unordered_map>

#include "geometry_internal.hpp"
#include "steklov/errors.hpp"

namespace steklov {

namespace {

using detail::cross;
using detail::Curve;
using detail::dist;

constexpr int kUnknown = -1;
constexpr int kOutside = 0;
constexpr int kInside = 1;

struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> n{};  // n[i] is across the edge opposite v[i]
    int region = kUnknown;
    bool alive = true;
};

struct Seg {
    int a = 0, b = 0;
    int curve = 0;
    double ta = 0.0, tb = 0.0;
    bool alive = true;
};

struct BoundaryEdgeRec {
    int a, b, nb, region;
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

// (sin 20 deg) * 2, slightly padded so that accepted triangles clear 20 degrees
const double kRatioBound = 2.0 * std::sin((20.0 + 0.05) * kPi / 180.0);

class Refiner {
public:
    Refiner(const DomainSpec& spec, double h_max) : spec_(spec), h_(h_max), L_(spec.L) {
        curves_ = detail::boundary_curves(spec);
    }

    Mesh run();

private:
    const DomainSpec& spec_;
    double h_;
    double L_;
    std::vector<Curve> curves_;

    std::vector<Vec2> pts_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> v2t_;
    std::vector<unsigned> mark_;
    unsigned stamp_ = 0;
    int last_ = 0;

    std::vector<Seg> segs_;
    std::unordered_map<std::uint64_t, int> edge_seg_;
    std::deque<int> queue_;
    std::size_t vertex_cap_ = 0;

    // ---- predicates -------------------------------------------------------
    double incircle(int t, Vec2 p) const {
        const Vec2 a = pts_[tris_[t].v[0]], b = pts_[tris_[t].v[1]], c = pts_[tris_[t].v[2]];
        const double adx = a.x - p.x, ady = a.y - p.y;
        const double bdx = b.x - p.x, bdy = b.y - p.y;
        const double cdx = c.x - p.x, cdy = c.y - p.y;
        return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
               (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    }

    double edge_orient(int t, int i, Vec2 p) const {
        const Tri& T = tris_[t];
        return cross(pts_[T.v[(i + 1) % 3]], pts_[T.v[(i + 2) % 3]], p);
    }

    static bool in_diametral(Vec2 a, Vec2 b, Vec2 x) {
        return (a.x - x.x) * (b.x - x.x) + (a.y - x.y) * (b.y - x.y) < 0.0;
    }

    bool in_cavity(int t) const { return t >= 0 && mark_[t] == stamp_; }

    // ---- triangulation ----------------------------------------------------
    int new_tri() {
        if (!free_.empty()) {
            const int t = free_.back();
            free_.pop_back();
            tris_[t] = Tri{};
            return t;
        }
        tris_.push_back(Tri{});
        mark_.push_back(0);
        return int(tris_.size()) - 1;
    }

    void init_super() {
        const double M = 100.0 * L_;
        pts_ = {{-3.0 * M, -M}, {3.0 * M, -M}, {0.0, 3.0 * M}};
        v2t_ = {0, 0, 0};
        tris_.clear();
        mark_.clear();
        const int t = new_tri();
        tris_[t].v = {0, 1, 2};
        tris_[t].n = {-1, -1, -1};
        tris_[t].region = kOutside;
        last_ = t;
    }

    int locate(Vec2 p, int hint) const {
        int t = (hint >= 0 && hint < int(tris_.size()) && tris_[hint].alive) ? hint : last_;
        if (!tris_[t].alive) {
            for (t = 0; t < int(tris_.size()) && !tris_[t].alive; ++t) {}
        }
        const std::size_t max_steps = 4 * tris_.size() + 16;
        for (std::size_t step = 0; step < max_steps; ++step) {
            bool moved = false;
            for (int j = 0; j < 3; ++j) {
                const int i = int((j + step) % 3);
                if (edge_orient(t, i, p) < 0.0) {
                    t = tris_[t].n[i];
                    if (t < 0) return -1;
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        // walk cycled (degenerate input); fall back to a scan
        for (int s = 0; s < int(tris_.size()); ++s) {
            if (!tris_[s].alive) continue;
            if (edge_orient(s, 0, p) >= 0 && edge_orient(s, 1, p) >= 0 && edge_orient(s, 2, p) >= 0) return s;
        }
        return -1;
    }

    // Triangles whose circumcircle strictly contains p, connected to t0 and
    // shrunk until every boundary edge sees p on its interior side.
    std::vector<int> cavity(Vec2 p, int t0) {
        ++stamp_;
        std::vector<int> cav{t0};
        mark_[t0] = stamp_;
        std::vector<int> forced{t0};
        for (int i = 0; i < 3; ++i) {
            const int nb = tris_[t0].n[i];
            if (nb >= 0 && edge_orient(t0, i, p) == 0.0 && mark_[nb] != stamp_) {
                mark_[nb] = stamp_;
                cav.push_back(nb);
                forced.push_back(nb);
            }
        }
        for (std::size_t k = 0; k < cav.size(); ++k) {
            for (int i = 0; i < 3; ++i) {
                const int nb = tris_[cav[k]].n[i];
                if (nb < 0 || mark_[nb] == stamp_) continue;
                if (incircle(nb, p) > 0.0) {
                    mark_[nb] = stamp_;
                    cav.push_back(nb);
                }
            }
        }
        for (;;) {
            int bad = -1;
            for (int t : cav) {
                if (std::find(forced.begin(), forced.end(), t) != forced.end()) continue;
                for (int i = 0; i < 3 && bad < 0; ++i) {
                    if (in_cavity(tris_[t].n[i])) continue;
                    if (edge_orient(t, i, p) <= 0.0) bad = t;
                }
                if (bad >= 0) break;
            }
            if (bad < 0) break;
            // drop `bad`, keep what is still connected to the forced core
            for (int t : cav) mark_[t] = 0;
            std::vector<int> keep;
            std::vector<int> old = cav;
            ++stamp_;
            const unsigned candidate = stamp_;
            for (int t : old)
                if (t != bad) mark_[t] = candidate;
            ++stamp_;
            for (int t : forced) {
                mark_[t] = stamp_;
                keep.push_back(t);
            }
            for (std::size_t k = 0; k < keep.size(); ++k) {
                for (int i = 0; i < 3; ++i) {
                    const int nb = tris_[keep[k]].n[i];
                    if (nb >= 0 && mark_[nb] == candidate) {
                        mark_[nb] = stamp_;
                        keep.push_back(nb);
                    }
                }
            }
            for (int t : old)
                if (mark_[t] == candidate) mark_[t] = 0;
            cav = std::move(keep);
        }
        return cav;
    }

    // Replaces the cavity by the star of a new vertex at p.
    // region >= 0 is assigned to all new triangles, kUnknown marks them unknown.
    int commit(Vec2 p, const std::vector<int>& cav, int region) {
        const int v = int(pts_.size());
        pts_.push_back(p);
        v2t_.push_back(-1);
        std::vector<BoundaryEdgeRec> edges;
        for (int t : cav) {
            for (int i = 0; i < 3; ++i) {
                const int nb = tris_[t].n[i];
                if (in_cavity(nb)) continue;
                edges.push_back({tris_[t].v[(i + 1) % 3], tris_[t].v[(i + 2) % 3], nb, tris_[t].region});
            }
        }
        for (int t : cav) {
            tris_[t].alive = false;
            mark_[t] = 0;
            free_.push_back(t);
        }
        std::vector<int> made(edges.size());
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const int t = new_tri();
            made[k] = t;
            Tri& T = tris_[t];
            T.v = {v, edges[k].a, edges[k].b};
            T.n = {edges[k].nb, -1, -1};
            T.region = region;
            T.alive = true;
            if (edges[k].nb >= 0) {
                Tri& N = tris_[edges[k].nb];
                for (int j = 0; j < 3; ++j) {
                    if (N.v[j] != edges[k].a && N.v[j] != edges[k].b) N.n[j] = t;
                }
            }
            v2t_[edges[k].a] = t;
            v2t_[edges[k].b] = t;
        }
        for (std::size_t k = 0; k < edges.size(); ++k) {
            for (std::size_t m = 0; m < edges.size(); ++m) {
                if (edges[m].b == edges[k].a) tris_[made[k]].n[2] = made[m];  // edge (v, a)
                if (edges[m].a == edges[k].b) tris_[made[k]].n[1] = made[m];  // edge (b, v)
            }
        }
        v2t_[v] = made.front();
        last_ = made.front();
        return v;
    }

    int insert(Vec2 p, int hint, int region) {
        const int t0 = locate(p, hint);
        if (t0 < 0) throw MeshingError("point outside the triangulation bounds");
        for (int j = 0; j < 3; ++j)
            if (dist(pts_[tris_[t0].v[j]], p) < 1e-12 * L_) return tris_[t0].v[j];
        const std::vector<int> cav = cavity(p, t0);
        return commit(p, cav, region);
    }

    // Triangle and local index i such that the edge opposite v[i] joins a and b.
    std::pair<int, int> find_edge(int a, int b) const {
        const int start = v2t_[a];
        int t = start;
        do {
            const Tri& T = tris_[t];
            int k = 0;
            while (T.v[k] != a) ++k;
            if (T.v[(k + 1) % 3] == b) return {t, (k + 2) % 3};
            if (T.v[(k + 2) % 3] == b) return {t, (k + 1) % 3};
            t = T.n[(k + 1) % 3];
        } while (t >= 0 && t != start);
        return {-1, -1};
    }

    // Triangle having a -> b as a counterclockwise edge, or -1.
    int find_left(int a, int b) const {
        const int start = v2t_[a];
        int t = start;
        do {
            const Tri& T = tris_[t];
            int k = 0;
            while (T.v[k] != a) ++k;
            if (T.v[(k + 1) % 3] == b) return t;
            t = T.n[(k + 1) % 3];
        } while (t >= 0 && t != start);
        return -1;
    }

    bool is_super(int v) const { return v < 3; }

    // ---- segments -----------------------------------------------------------
    int add_seg(int a, int b, int curve, double ta, double tb) {
        segs_.push_back({a, b, curve, ta, tb, true});
        const int id = int(segs_.size()) - 1;
        edge_seg_[edge_key(a, b)] = id;
        queue_.push_back(id);
        return id;
    }

    int seg_of_edge(int a, int b) const {
        const auto it = edge_seg_.find(edge_key(a, b));
        return it == edge_seg_.end() ? -1 : it->second;
    }

    bool encroached(int s) const {
        const Seg& S = segs_[s];
        const auto [t, i] = find_edge(S.a, S.b);
        if (t < 0) return true;
        const Vec2 a = pts_[S.a], b = pts_[S.b];
        if (in_diametral(a, b, pts_[tris_[t].v[i]])) return true;
        const int nb = tris_[t].n[i];
        if (nb < 0) return false;
        for (int j = 0; j < 3; ++j) {
            const int w = tris_[nb].v[j];
            if (w != S.a && w != S.b) return in_diametral(a, b, pts_[w]);
        }
        return false;
    }

    // Segments that inserting a vertex at p over this cavity would remove or encroach.
    std::vector<int> threatened(Vec2 p, const std::vector<int>& cav, int skip) const {
        std::vector<int> out;
        for (int t : cav) {
            for (int i = 0; i < 3; ++i) {
                const int a = tris_[t].v[(i + 1) % 3], b = tris_[t].v[(i + 2) % 3];
                const int s = seg_of_edge(a, b);
                if (s < 0 || s == skip) continue;
                const bool interior = in_cavity(tris_[t].n[i]);
                if (interior || in_diametral(pts_[a], pts_[b], p)) {
                    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
                }
            }
        }
        return out;
    }

    void split(int s) {
        if (curves_[segs_[s].curve].tag == BoundaryTag::Outer) {
            // keep the outer ring equi-angular: refine all of it at once
            std::vector<int> ring;
            for (int k = 0; k < int(segs_.size()); ++k)
                if (segs_[k].alive && curves_[segs_[k].curve].tag == BoundaryTag::Outer) ring.push_back(k);
            for (int k : ring) split_one(k);
            return;
        }
        split_one(s);
    }

    void split_one(int s) {
        const Seg S = segs_[s];
        const Curve& C = curves_[S.curve];
        const double tm = 0.5 * (S.ta + S.tb);
        const Vec2 p = C.at(tm);
        const int t0 = locate(p, v2t_[S.a]);
        if (t0 < 0) throw MeshingError("segment split point left the triangulation");
        const std::vector<int> cav = cavity(p, t0);
        for (int k : threatened(p, cav, s)) queue_.push_back(k);
        const int v = commit(p, cav, kUnknown);
        segs_[s].alive = false;
        edge_seg_.erase(edge_key(S.a, S.b));
        add_seg(S.a, v, S.curve, S.ta, tm);
        add_seg(v, S.b, S.curve, tm, S.tb);
        check_growth();
    }

    void process_queue() {
        while (!queue_.empty()) {
            const int s = queue_.front();
            queue_.pop_front();
            if (!segs_[s].alive) continue;
            if (encroached(s)) split(s);
        }
    }

    void check_growth() const {
        if (pts_.size() > vertex_cap_)
            throw MeshingError("refinement did not terminate (vertex budget exceeded near the obstacle boundary)");
    }

    // ---- regions ------------------------------------------------------------
    void flood_regions() {
        for (Tri& T : tris_)
            if (T.alive) T.region = kOutside;
        std::vector<int> stack;
        ++stamp_;
        for (const Seg& S : segs_) {
            if (!S.alive) continue;
            const auto [t, i] = find_edge(S.a, S.b);
            if (t < 0) throw MeshingError("boundary segment missing from the triangulation");
            const bool t_left = tris_[t].v[(i + 1) % 3] == S.a;
            const int seed = (t_left == curves_[S.curve].domain_left) ? t : tris_[t].n[i];
            if (seed >= 0 && mark_[seed] != stamp_) {
                mark_[seed] = stamp_;
                stack.push_back(seed);
            }
        }
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            Tri& T = tris_[t];
            T.region = kInside;
            for (int i = 0; i < 3; ++i) {
                if (is_super(T.v[i])) throw MeshingError("region leak: boundary is not closed");
                const int nb = T.n[i];
                if (nb < 0 || mark_[nb] == stamp_) continue;
                if (seg_of_edge(T.v[(i + 1) % 3], T.v[(i + 2) % 3]) >= 0) continue;
                mark_[nb] = stamp_;
                stack.push_back(nb);
            }
        }
        ++stamp_;
    }

    bool bad_triangle(int t, Vec2* centre) const {
        const Tri& T = tris_[t];
        const Vec2 a = pts_[T.v[0]], b = pts_[T.v[1]], c = pts_[T.v[2]];
        const double la = dist(b, c), lb = dist(c, a), lc = dist(a, b);
        const double area2 = cross(a, b, c);
        const double R = la * lb * lc / (2.0 * area2);
        const double shortest = std::min({la, lb, lc});
        const bool bad = std::max({la, lb, lc}) > h_ || shortest < kRatioBound * R;
        if (bad && centre) {
            const double bx = b.x - a.x, by = b.y - a.y, cx = c.x - a.x, cy = c.y - a.y;
            const double d = 2.0 * (bx * cy - by * cx);
            const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
            *centre = {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
        }
        return bad;
    }

    void refine() {
        for (int phase = 0;; ++phase) {
            if (phase > 200) throw MeshingError("quality refinement did not converge");
            std::vector<std::array<int, 3>> bad;
            for (int t = 0; t < int(tris_.size()); ++t) {
                if (tris_[t].alive && tris_[t].region == kInside && bad_triangle(t, nullptr)) bad.push_back(tris_[t].v);
            }
            if (bad.empty()) return;
            for (const auto& vs : bad) {
                // the triangle may have been destroyed by an earlier insertion
                const int t = find_left(vs[0], vs[1]);
                if (t < 0) continue;
                const Tri& T = tris_[t];
                if (std::find(T.v.begin(), T.v.end(), vs[2]) == T.v.end() || T.region != kInside) continue;
                Vec2 c;
                if (!bad_triangle(t, &c)) continue;
                const int loc = locate(c, t);
                if (loc < 0) continue;
                const std::vector<int> cav = cavity(c, loc);
                const std::vector<int> hit = threatened(c, cav, -1);
                if (!hit.empty()) {
                    ++stamp_;
                    for (int s : hit)
                        if (segs_[s].alive) split(s);
                    process_queue();
                    continue;
                }
                commit(c, cav, kInside);
                check_growth();
                if (!queue_.empty()) process_queue();
            }
            flood_regions();
        }
    }

    // ---- initial point sets ----------------------------------------------------
    void insert_boundary() {
        const double spacing = 0.75 * h_;
        std::vector<std::pair<Vec2, int>> corner_ids;
        auto node_at = [&](Vec2 p, int hint) {
            for (const auto& [q, id] : corner_ids)
                if (dist(p, q) < 1e-12 * L_) return id;
            const int id = insert(p, hint, kUnknown);
            corner_ids.push_back({p, id});
            return id;
        };
        for (int c = 0; c < int(curves_.size()); ++c) {
            const Curve& C = curves_[c];
            const int n = std::max(C.tag == BoundaryTag::Outer ? 8 : 1, int(std::ceil(C.max_speed() / spacing)));
            int prev = node_at(C.at(0.0), last_);
            for (int j = 1; j <= n; ++j) {
                const double t = double(j) / n;
                const int id = (j == n) ? node_at(C.at(1.0), v2t_[prev]) : insert(C.at(t), v2t_[prev], kUnknown);
                add_seg(prev, id, c, double(j - 1) / n, t);
                prev = id;
            }
        }
    }

    void insert_lattice() {
        const double s = 0.8 * h_;
        const double margin = 0.55 * s;
        const double dy = 0.5 * std::sqrt(3.0) * s;
        // bucket grid of boundary segments for distance queries
        const double cell = s;
        const double x_lo = spec_.ambient == Ambient::Planar2D ? -L_ : 0.0;
        const int nx = int(std::ceil((L_ - x_lo) / cell)) + 2;
        const int ny = int(std::ceil(2.0 * L_ / cell)) + 2;
        std::vector<std::vector<int>> grid(std::size_t(nx) * ny);
        auto cell_of = [&](double x, double y) {
            const int i = std::clamp(int(std::floor((x - x_lo) / cell)) + 1, 0, nx - 1);
            const int j = std::clamp(int(std::floor((y + L_) / cell)) + 1, 0, ny - 1);
            return std::pair{i, j};
        };
        for (int k = 0; k < int(segs_.size()); ++k) {
            const Vec2 a = pts_[segs_[k].a], b = pts_[segs_[k].b];
            const auto [i0, j0] = cell_of(std::min(a.x, b.x) - margin, std::min(a.y, b.y) - margin);
            const auto [i1, j1] = cell_of(std::max(a.x, b.x) + margin, std::max(a.y, b.y) + margin);
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j) grid[std::size_t(i) * ny + j].push_back(k);
        }
        auto near_boundary = [&](Vec2 p) {
            const auto [i, j] = cell_of(p.x, p.y);
            for (int k : grid[std::size_t(i) * ny + j]) {
                const Vec2 a = pts_[segs_[k].a], b = pts_[segs_[k].b];
                const double ex = b.x - a.x, ey = b.y - a.y;
                const double t = std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / (ex * ex + ey * ey), 0.0, 1.0);
                if (std::hypot(a.x + t * ex - p.x, a.y + t * ey - p.y) < margin) return true;
            }
            return false;
        };
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> jitter(-0.04 * s, 0.04 * s);
        const int rows = int(2.0 * L_ / dy) + 1;
        for (int r = 0; r <= rows; ++r) {
            const double y = -L_ + r * dy;
            // crossings of the horizontal line with the boundary polyline (even-odd rule)
            std::vector<double> xs;
            for (const Seg& S : segs_) {
                const Vec2 a = pts_[S.a], b = pts_[S.b];
                if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            std::sort(xs.begin(), xs.end());
            std::vector<Vec2> row;
            const double x0 = x_lo + ((r % 2) ? 0.5 * s : 0.0);
            for (double x = x0; x <= L_; x += s) {
                const Vec2 p{x + jitter(rng), y + jitter(rng)};
                const auto above = xs.end() - std::upper_bound(xs.begin(), xs.end(), p.x);
                if (above % 2 == 0) continue;
                if (std::hypot(p.x, p.y) > L_ - margin) continue;
                if (near_boundary(p)) continue;
                row.push_back(p);
            }
            if (r % 2) std::reverse(row.begin(), row.end());
            for (const Vec2& p : row) insert(p, last_, kUnknown);
        }
    }

    Mesh extract() const;
};

Mesh Refiner::run() {
    const double area_estimate = (spec_.ambient == Ambient::Planar2D ? kPi : 0.5 * kPi) * L_ * L_;
    vertex_cap_ = std::size_t(50.0 * area_estimate / (h_ * h_)) + 100000;
    init_super();
    insert_boundary();
    insert_lattice();
    process_queue();
    flood_regions();
    refine();
    return extract();
}

Mesh Refiner::extract() const {
    Mesh mesh;
    mesh.ambient = spec_.ambient;
    std::vector<int> id(pts_.size(), -1);
    for (const Tri& T : tris_) {
        if (!T.alive || T.region != kInside) continue;
        for (int v : T.v) id[v] = 0;
    }
    for (const Seg& S : segs_) {
        if (S.alive) id[S.a] = id[S.b] = 0;
    }
    for (std::size_t v = 0; v < pts_.size(); ++v) {
        if (id[v] < 0) continue;
        id[v] = int(mesh.nodes.size());
        mesh.nodes.push_back(pts_[v]);
    }
    for (const Tri& T : tris_) {
        if (!T.alive || T.region != kInside) continue;
        mesh.triangles.push_back({id[T.v[0]], id[T.v[1]], id[T.v[2]]});
    }
    for (const Seg& S : segs_) {
        if (!S.alive) continue;
        mesh.boundary_edges.push_back({id[S.a], id[S.b], curves_[S.curve].tag});
    }
    mesh.update_metrics();
    mesh.L = L_;
    return mesh;
}

}  // namespace

Mesh build_mesh(const DomainSpec& spec, double h_max) {
    spec.validate();
    if (!(h_max > 0.0) || !(h_max < 0.25 * spec.L))
        throw DomainError("h_max must satisfy 0 < h_max < L/4");
    Refiner refiner(spec, h_max);
    Mesh mesh = refiner.run();
    validate_mesh(mesh);
    return mesh;
}

}  // namespace steklov
