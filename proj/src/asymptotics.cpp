#include "steklov/asymptotics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <exception>
#include <json.hpp>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "steklov/ball_spectrum.hpp"
#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"
#include "steklov/threads.hpp"

namespace steklov {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::Log2D: return "Log2D";
        case Regime::PLogP2D: return "PLogP2D";
        case Regime::Linear: return "Linear";
        case Regime::Sqrt3D: return "Sqrt3D";
        case Regime::PLogP4D: return "PLogP4D";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int dim_of(const SteklovSpectrum& s) { return s.mode.is_axisym() ? 3 : 2; }

// One eigenfunction, possibly a rotated combination of several columns.
struct ModeData {
    double mu = 0.0;
    Eigen::VectorXd field;  // all nodes
    Eigen::VectorXd outer;  // modal coefficients on |x| = L
};

ModeData mode_of(const SteklovSpectrum& s, int k) {
    if (k < 0 || k >= s.size()) throw DomainError("eigenfunction index out of range");
    return {s.eigenvalues[k], s.fields.col(k), s.outer_coeffs.col(k)};
}

double boundary_measure(const SteklovSpectrum& s) {
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.system().B.rows());
    return one.dot(s.system().B * one);
}

double boundary_integral(const SteklovSpectrum& s, const ModeData& md) { return (s.system().B * md.field).sum(); }

// Truncated exterior expansion of one mode data at a point with |y| >= L.
double exterior_value(const SteklovSpectrum& s, const Eigen::VectorXd& outer, Vec2 y) {
    const BallSpec ball{dim_of(s), s.L};
    // points on |x| = L may land a rounding error inside
    const double r = std::max(std::hypot(y.x, y.y), s.L);
    double v = 0.0;
    for (int j = 0; j < outer.size(); ++j) {
        if (outer[j] == 0.0) continue;
        v += outer[j] * radial_profile(ball, s.tbc.degree[j], s.p, r) * s.tbc.mode_value(j, y);
    }
    return v;
}

void require_planar(const SteklovSpectrum& s) {
    if (s.mode.is_axisym()) throw DomainError("coefficient defined for planar spectra only");
}

void check_eval_radius(const SteklovSpectrum& s, double L_eval) {
    if (!(L_eval >= s.L * (1.0 - 1e-12))) throw DomainError("evaluation radius must be >= L");
}

int trapezoid_points(const SteklovSpectrum& s) { return std::max(8 * s.n_max, 64); }

double c_of(const SteklovSpectrum& s, const ModeData& md, double L_eval) {
    const int N = trapezoid_points(s);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
        const double th = 2.0 * kPi * i / N;
        sum += exterior_value(s, md.outer, {L_eval * std::cos(th), L_eval * std::sin(th)});
    }
    return sum / N;
}

double d_of(const SteklovSpectrum& s, const ModeData& md, double L_eval) {
    const int N = trapezoid_points(s);
    double A = 0.0, B = 0.0;
    for (int i = 0; i < N; ++i) {
        const double th = 2.0 * kPi * i / N;
        const double v = exterior_value(s, md.outer, {L_eval * std::cos(th), L_eval * std::sin(th)});
        A += v * std::cos(th);
        B += v * std::sin(th);
    }
    A *= 2.0 * kPi / N;
    B *= 2.0 * kPi / N;
    return L_eval * L_eval / kPi * (A * A + B * B);
}

// Obstacle boundary edges with the normal pointing out of the computational
// region (into the obstacle).
struct ObstacleEdge {
    int a, b;
    double nx, ny, len;
};

std::vector<ObstacleEdge> obstacle_edges(const Mesh& mesh) {
    std::map<std::pair<int, int>, int> third;
    for (const auto& t : mesh.triangles)
        for (int i = 0; i < 3; ++i) {
            const int u = t[i], v = t[(i + 1) % 3];
            third[{std::min(u, v), std::max(u, v)}] = t[(i + 2) % 3];
        }
    std::vector<ObstacleEdge> out;
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != BoundaryTag::Inner) continue;
        const Vec2 A = mesh.nodes[e.a], B = mesh.nodes[e.b];
        const double len = std::hypot(B.x - A.x, B.y - A.y);
        double nx = (B.y - A.y) / len, ny = -(B.x - A.x) / len;
        const Vec2 C = mesh.nodes[third.at({std::min(e.a, e.b), std::max(e.a, e.b)})];
        if ((C.x - A.x) * nx + (C.y - A.y) * ny > 0.0) {
            nx = -nx;
            ny = -ny;
        }
        out.push_back({e.a, e.b, nx, ny, len});
    }
    return out;
}

// Integral over the obstacle boundary of v * f(x, n), three Gauss points per
// edge, with the azimuthal weight for axisymmetric meshes.
template <class F>
double edge_integral(const SteklovSpectrum& s, const std::vector<ObstacleEdge>& edges, const Eigen::VectorXd& field,
                     F&& f) {
    static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    const Mesh& mesh = s.mesh();
    const bool ax = s.mode.is_axisym();
    double sum = 0.0;
    for (const auto& e : edges) {
        const Vec2 A = mesh.nodes[e.a], B = mesh.nodes[e.b];
        for (int q = 0; q < 3; ++q) {
            const double t = gx[q];
            const Vec2 x{A.x + t * (B.x - A.x), A.y + t * (B.y - A.y)};
            const double v = (1 - t) * field[e.a] + t * field[e.b];
            double w = gw[q] * e.len;
            if (ax) w *= 2.0 * kPi * x.x;
            sum += w * v * f(x, Vec2{e.nx, e.ny});
        }
    }
    return sum;
}

double d_boundary_of(const SteklovSpectrum& s, const ModeData& md) {
    const auto edges = obstacle_edges(s.mesh());
    const double X = edge_integral(s, edges, md.field, [&](Vec2 x, Vec2 n) { return md.mu * x.x - n.x; });
    const double Y = edge_integral(s, edges, md.field, [&](Vec2 x, Vec2 n) { return md.mu * x.y - n.y; });
    return (X * X + Y * Y) / (4.0 * kPi);
}

NormSplit norm_split_of(const SteklovSpectrum& s, const ModeData& md) {
    NormSplit ns;
    ns.interior = md.field.dot(s.system().M * md.field);
    const int d = dim_of(s);
    const BallSpec ball{d, s.L};
    const int first = d == 2 ? 2 : 1;
    std::map<int, double> per_degree;
    for (int j = 0; j < md.outer.size(); ++j) {
        const int n = s.tbc.degree[j];
        if (n < first) continue;
        const double t = md.outer[j] * md.outer[j] * q_norm(ball, n, 0.0);
        ns.tail += t;
        per_degree[n] += t;
    }
    if (per_degree.size() >= 2) {
        const double last = std::prev(per_degree.end())->second;
        const double prev = std::prev(per_degree.end(), 2)->second;
        const double ratio = prev > 0.0 ? last / prev : 1.0;
        ns.remainder = ratio < 1.0 ? last * ratio / (1.0 - ratio) : last * double(s.n_max);
    }
    return ns;
}

ClassifyInputs inputs_of(const SteklovSpectrum& s, const ModeData& md, int k, double bm) {
    ClassifyInputs in;
    in.k = k;
    in.d = dim_of(s);
    in.mu0 = md.mu;
    in.boundary_integral = boundary_integral(s, md);
    in.boundary_measure = bm;
    if (in.d == 2) {
        in.c = c_of(s, md, s.L);
        in.d_coef = d_of(s, md, s.L);
    }
    return in;
}

}  // namespace

// ---------------------------------------------------------------------------

double SmallPReport::predict(double p) const {
    if (p <= 0.0) return 0.0;
    const double lsp = std::log(std::sqrt(p));
    switch (regime) {
        case Regime::Log2D:
            if (k == 0 && capacity_radius)
                return -2.0 * kPi / (boundary_measure * (std::log(*capacity_radius * std::sqrt(p) / 2.0) + kEulerGamma));
            return -a / lsp;
        case Regime::PLogP2D: return -p * lsp * d_coef;
        case Regime::Sqrt3D: return a * std::sqrt(p);
        case Regime::PLogP4D: return -p * lsp * a;
        case Regime::Linear: return std::isfinite(b) ? b * p : std::numeric_limits<double>::quiet_NaN();
    }
    return 0.0;
}

SmallPReport classify(const ClassifyInputs& in, const ClassifyOptions& opt) {
    if (in.d < 2) throw DomainError("dimension must be >= 2");
    if (!(in.boundary_measure > 0.0)) throw DomainError("boundary measure must be positive");
    SmallPReport r;
    r.k = in.k;
    r.d = in.d;
    r.mu0 = in.mu0;
    r.c = in.c;
    r.d_coef = in.d_coef;
    r.boundary_integral = in.boundary_integral;
    r.boundary_measure = in.boundary_measure;
    r.capacity_radius = opt.capacity_radius;
    const double sq = std::sqrt(in.boundary_measure);
    auto near = [](double v, double tol) { return v > tol / 3.0 && v < tol * 3.0; };
    if (in.d == 2) {
        const double cn = std::abs(in.c) * sq;
        r.a = 2.0 * kPi * in.c * in.c;
        if (cn > opt.tol_c) {
            r.regime = Regime::Log2D;
            r.alternative = in.d_coef > opt.tol_d ? Regime::PLogP2D : Regime::Linear;
            r.ambiguous = near(cn, opt.tol_c);
        } else if (in.d_coef > opt.tol_d) {
            r.regime = Regime::PLogP2D;
            r.alternative = near(cn, opt.tol_c) ? Regime::Log2D : Regime::Linear;
            r.ambiguous = near(cn, opt.tol_c) || near(in.d_coef, opt.tol_d);
        } else {
            r.regime = Regime::Linear;
            r.alternative = near(cn, opt.tol_c) ? Regime::Log2D : Regime::PLogP2D;
            r.ambiguous = near(cn, opt.tol_c) || near(in.d_coef, opt.tol_d);
        }
    } else if (in.d <= 4) {
        const double In = std::abs(in.boundary_integral) / sq;
        const Regime strong = in.d == 3 ? Regime::Sqrt3D : Regime::PLogP4D;
        const double scale = in.d == 3 ? 4.0 * kPi : 8.0 * kPi * kPi;
        r.a = in.mu0 * in.mu0 / scale * in.boundary_integral * in.boundary_integral;
        r.regime = In > opt.tol_a ? strong : Regime::Linear;
        r.alternative = r.regime == strong ? Regime::Linear : strong;
        r.ambiguous = near(In, opt.tol_a);
        if (in.d == 3 && r.a > in.mu0 * in.mu0 * in.boundary_measure / (4.0 * kPi) * (1.0 + 1e-9))
            throw SolverError("a-coefficient exceeds its Cauchy-Schwarz bound");
    } else {
        r.regime = Regime::Linear;
        r.alternative = Regime::Linear;
    }
    if (std::isfinite(in.b)) {
        if (r.regime != Regime::Linear) throw DomainError("finite norm given for a mode whose norm diverges");
        r.b = in.b;
    } else {
        r.b = kInf;
    }
    return r;
}

double coeff_c(const SteklovSpectrum& s0, int k, double L_eval) {
    require_planar(s0);
    check_eval_radius(s0, L_eval);
    return c_of(s0, mode_of(s0, k), L_eval);
}

double coeff_d(const SteklovSpectrum& s0, int k, double L_eval) {
    require_planar(s0);
    check_eval_radius(s0, L_eval);
    return d_of(s0, mode_of(s0, k), L_eval);
}

double coeff_d_boundary(const SteklovSpectrum& s0, int k) {
    require_planar(s0);
    return d_boundary_of(s0, mode_of(s0, k));
}

double coeff_a(const SteklovSpectrum& s0, int k) {
    const ModeData md = mode_of(s0, k);
    if (dim_of(s0) == 2) {
        const double c = c_of(s0, md, s0.L);
        return 2.0 * kPi * c * c;
    }
    const double I = boundary_integral(s0, md);
    const double a = md.mu * md.mu / (4.0 * kPi) * I * I;
    if (a > md.mu * md.mu * boundary_measure(s0) / (4.0 * kPi) * (1.0 + 1e-9))
        throw SolverError("a-coefficient exceeds its Cauchy-Schwarz bound");
    return a;
}

NormSplit norm_split(const SteklovSpectrum& s0, int k) { return norm_split_of(s0, mode_of(s0, k)); }

double coeff_b(const SteklovSpectrum& s0, int k, const ClassifyOptions& opt) {
    const ModeData md = mode_of(s0, k);
    const SmallPReport r = classify(inputs_of(s0, md, k, boundary_measure(s0)), opt);
    if (r.regime != Regime::Linear) return kInf;
    return norm_split_of(s0, md).total();
}

std::vector<SmallPReport> small_p_reports(const SteklovSpectrum& s0, int count, const ClassifyOptions& opt) {
    if (s0.p != 0.0) throw DomainError("small-p reports need the p = 0 spectrum");
    count = std::min(count, s0.size());
    const double bm = boundary_measure(s0);
    const int d = dim_of(s0);
    std::vector<SmallPReport> out;
    int k = 0;
    while (k < count) {
        int e = k + 1;
        while (e < s0.size() &&
               std::abs(s0.eigenvalues[e] - s0.eigenvalues[k]) <= opt.cluster_rel * std::max(1.0, s0.eigenvalues[k]))
            ++e;
        std::vector<ModeData> modes;
        for (int j = k; j < e; ++j) modes.push_back(mode_of(s0, j));
        const int m = e - k;
        if (m > 1) {
            // rotate within the cluster to diagonalize the leading coefficient form
            Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
            std::vector<double> lead(m);
            for (int i = 0; i < m; ++i)
                lead[i] = d == 2 ? c_of(s0, modes[i], s0.L) : boundary_integral(s0, modes[i]);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) F(i, j) = lead[i] * lead[j];
            const double tol = d == 2 ? opt.tol_c : opt.tol_a;
            if (d == 2 && F.trace() * bm <= tol * tol) {
                // far-field dipole form
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) {
                        double v = 0.0;
                        for (int q = 0; q < modes[i].outer.size(); ++q)
                            if (s0.tbc.degree[q] == 1) v += modes[i].outer[q] * modes[j].outer[q];
                        F(i, j) = s0.L * v;
                    }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F);
            std::vector<ModeData> rot(m);
            for (int i = 0; i < m; ++i) {
                const Eigen::VectorXd q = es.eigenvectors().col(m - 1 - i);  // descending
                rot[i].mu = 0.0;
                rot[i].field = Eigen::VectorXd::Zero(modes[0].field.size());
                rot[i].outer = Eigen::VectorXd::Zero(modes[0].outer.size());
                for (int j = 0; j < m; ++j) {
                    rot[i].mu += q[j] * q[j] * modes[j].mu;
                    rot[i].field += q[j] * modes[j].field;
                    rot[i].outer += q[j] * modes[j].outer;
                }
                if (boundary_integral(s0, rot[i]) < 0.0) {
                    rot[i].field = -rot[i].field;
                    rot[i].outer = -rot[i].outer;
                }
            }
            modes = std::move(rot);
        }
        for (int i = 0; i < m && k + i < count; ++i) {
            const ModeData& md = modes[i];
            ClassifyInputs in = inputs_of(s0, md, k + i, bm);
            in.mu0 = s0.eigenvalues[k + i];
            SmallPReport r = classify(in, opt);
            if (d == 2) r.d_boundary = d_boundary_of(s0, md);
            const NormSplit ns = norm_split_of(s0, md);
            r.b_interior = ns.interior;
            r.b_tail = ns.tail;
            r.b_tail_remainder = ns.remainder;
            if (r.regime == Regime::Linear) r.b = ns.total();
            r.cluster_size = m;
            out.push_back(r);
        }
        k = e;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> SweepResult::curve(int branch) const {
    std::vector<double> c;
    for (const auto& row : rows)
        if (row.branch == branch) c.push_back(row.dmu);
    return c;
}

SweepResult p_sweep(const Mesh& mesh, FemMode mode, int n_max, const std::vector<double>& p_grid,
                    const SweepOptions& opt, const ClassifyOptions& copt) {
    if (p_grid.empty()) throw DomainError("empty p grid");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (!(p_grid[i] > 0.0) || !std::isfinite(p_grid[i])) throw DomainError("p grid values must be positive");
        if (i > 0 && !(p_grid[i] < p_grid[i - 1])) throw DomainError("p grid must be strictly descending");
    }
    if (opt.k_max < 1 || opt.extra < 0) throw DomainError("bad sweep sizes");
    const int ktot = opt.k_max + opt.extra;
    const int np = int(p_grid.size());

    struct Point {
        std::vector<double> mu;
        Eigen::MatrixXd traces;
    };
    std::vector<Point> pts(np);
    SweepResult res;
    res.p_grid = p_grid;

    SteklovSolver base(mesh, mode, n_max);
    const SteklovSpectrum s0 = base.solve(0.0, ktot);
    res.mu0 = s0.eigenvalues;
    res.reports = small_p_reports(s0, opt.k_max, copt);

    const int nthreads = std::max(1, std::min(opt.threads > 0 ? opt.threads : worker_threads(), np));
    std::exception_ptr failure;
    std::mutex fail_mutex;
    auto work = [&](int t, SteklovSolver* solver) {
        try {
            std::unique_ptr<SteklovSolver> own;
            if (!solver) {
                own = std::make_unique<SteklovSolver>(mesh, mode, n_max);
                solver = own.get();
            }
            for (int i = t; i < np; i += nthreads) {
                const SteklovSpectrum s = solver->solve(p_grid[i], ktot);
                pts[i] = {s.eigenvalues, s.traces};
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(fail_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (nthreads == 1) {
        work(0, &base);
    } else {
        std::vector<std::thread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(work, t, nullptr);
        work(0, &base);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    // B restricted to the obstacle nodes, in trace order
    const AssembledSystem& S = s0.system();
    const int nb = int(S.inner_nodes.size());
    Eigen::SparseMatrix<double> Bb(nb, nb);
    {
        std::vector<int> pos(mesh.nodes.size(), -1);
        for (int i = 0; i < nb; ++i) pos[S.inner_nodes[i]] = i;
        std::vector<Eigen::Triplet<double>> t;
        for (int c = 0; c < S.B.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(S.B, c); it; ++it)
                if (pos[it.row()] >= 0 && pos[c] >= 0) t.emplace_back(pos[it.row()], pos[c], it.value());
        Bb.setFromTriplets(t.begin(), t.end());
    }

    // follow branches from p = 0 upward
    const int kcols = int(s0.traces.cols());
    Eigen::MatrixXd prev = s0.traces;
    std::vector<std::vector<SweepRow>> by_point(np);
    for (int i = np - 1; i >= 0; --i) {
        const Point& P = pts[i];
        const int nn = int(P.traces.cols());
        const Eigen::MatrixXd G = prev.transpose() * (Bb * P.traces);
        // cluster-aware overlap: eigenvectors inside a near-degenerate cluster rotate freely
        std::vector<int> cl(nn);
        for (int j = 0; j < nn; ++j)
            cl[j] = (j > 0 && std::abs(P.mu[j] - P.mu[j - 1]) <= copt.cluster_rel * std::max(1.0, P.mu[j]))
                        ? cl[j - 1]
                        : j;
        Eigen::MatrixXd O(kcols, nn);
        for (int a = 0; a < kcols; ++a)
            for (int j = 0; j < nn; ++j) {
                double s2 = 0.0;
                for (int q = 0; q < nn; ++q)
                    if (cl[q] == cl[j]) s2 += G(a, q) * G(a, q);
                O(a, j) = std::sqrt(s2);
            }
        std::vector<int> assign(kcols, -1);
        std::vector<char> used(nn, 0);
        for (int step = 0; step < std::min(kcols, nn); ++step) {
            double best = -1.0;
            int ba = -1, bj = -1;
            for (int a = 0; a < kcols; ++a) {
                if (assign[a] >= 0) continue;
                for (int j = 0; j < nn; ++j) {
                    if (used[j]) continue;
                    const double score = O(a, j) + 1e-3 * std::abs(G(a, j)) - 1e-9 * std::abs(a - j);
                    if (score > best) {
                        best = score;
                        ba = a;
                        bj = j;
                    }
                }
            }
            assign[ba] = bj;
            used[bj] = 1;
        }
        Eigen::MatrixXd next = prev;
        for (int a = 0; a < kcols; ++a) {
            const int j = assign[a];
            if (j < 0) continue;
            next.col(a) = P.traces.col(j) * (G(a, j) < 0.0 ? -1.0 : 1.0);
            if (a < opt.k_max) {
                SweepRow row;
                row.p = p_grid[i];
                row.branch = a;
                row.mu = P.mu[j];
                row.dmu = P.mu[j] - s0.eigenvalues[a];
                row.overlap = O(a, j);
                row.flagged = row.overlap < opt.overlap_threshold;
                if (a < int(res.reports.size())) row.predicted = res.reports[a].predict(p_grid[i]);
                by_point[i].push_back(row);
            }
        }
        prev = next;
    }
    for (int i = 0; i < np; ++i) {
        std::sort(by_point[i].begin(), by_point[i].end(),
                  [](const SweepRow& x, const SweepRow& y) { return x.branch < y.branch; });
        for (const auto& row : by_point[i]) {
            res.min_overlap = std::min(res.min_overlap, row.overlap);
            res.any_flagged = res.any_flagged || row.flagged;
            res.rows.push_back(row);
        }
    }
    return res;
}

LawFit fit_law(const SmallPReport& r, const std::vector<double>& p, const std::vector<double>& dmu) {
    if (p.size() != dmu.size()) throw DomainError("fit inputs differ in length");
    LawFit f;
    if (p.size() < 2) return f;
    auto basis = [&](double q) -> std::pair<double, double> {
        const double l = std::log(std::sqrt(q));
        switch (r.regime) {
            case Regime::Log2D: return {-1.0 / l, 1.0 / (l * l)};
            case Regime::PLogP2D:
            case Regime::PLogP4D: return {-q * l, q};
            case Regime::Sqrt3D: return {std::sqrt(q), q};
            case Regime::Linear: return {q, q * std::sqrt(q)};
        }
        return {0.0, 0.0};
    };
    Eigen::MatrixXd A(p.size(), 2);
    Eigen::VectorXd y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto [f1, f2] = basis(p[i]);
        // relative weighting: every point counts equally across decades
        const double w = 1.0 / std::max(std::abs(dmu[i]), 1e-300);
        A(i, 0) = f1 * w;
        A(i, 1) = f2 * w;
        y[i] = dmu[i] * w;
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
    f.valid = true;
    f.leading = x[0];
    f.next = x[1];
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double law = r.predict(p[i]);
        f.max_rel_dev = std::max(f.max_rel_dev, std::abs(dmu[i] - law) / std::abs(law));
    }
    return f;
}

// ---------------------------------------------------------------------------

std::vector<IdentityResidual> check_identities(const SteklovSpectrum& sp, const SteklovSpectrum& s0,
                                               SteklovSolver* solver, int count) {
    if (s0.p != 0.0) throw DomainError("second spectrum must be at p = 0");
    if (sp.mode.ambient != s0.mode.ambient || sp.mode.m != s0.mode.m || sp.L != s0.L ||
        sp.fields.rows() != s0.fields.rows() || sp.tbc.degree != s0.tbc.degree)
        throw DomainError("spectra come from different discretizations");
    if (count < 0) count = std::min(sp.size(), s0.size());
    count = std::min({count, sp.size(), s0.size()});
    const int d = dim_of(sp);
    const double p = sp.p;
    const BallSpec ballL{d, sp.L};
    const double bm = boundary_measure(sp);
    const auto edges = obstacle_edges(sp.mesh());
    const AssembledSystem& S = sp.system();

    std::vector<double> fd(count, std::numeric_limits<double>::quiet_NaN());
    if (solver && p > 0.0) {
        const double h = 1e-3 * p;
        const SteklovSpectrum up = solver->solve(p + h, count + 2);
        const SteklovSpectrum dn = solver->solve(p - h, count + 2);
        for (int k = 0; k < count; ++k) fd[k] = (up.eigenvalues[k] - dn.eigenvalues[k]) / (2.0 * h);
    }

    // modes of the ball |x| < L used by the boundary relation: n = 0 and n = 1
    struct Probe {
        int j;
        int n;
        char axis;  // 'x', 'y', 'z' for n = 1
    };
    std::vector<Probe> probes;
    for (int j = 0; j < int(sp.tbc.degree.size()); ++j) {
        const int n = sp.tbc.degree[j];
        if (n > 1 || sp.mode.m != 0) continue;
        char axis = 0;
        if (n == 1) axis = d == 2 ? (sp.tbc.sine[j] ? 'y' : 'x') : 'z';
        probes.push_back({j, n, axis});
    }

    std::vector<IdentityResidual> out;
    for (int k = 0; k < count; ++k) {
        IdentityResidual r;
        r.k = k;
        const double mu = sp.eigenvalues[k];
        const Eigen::VectorXd V = sp.fields.col(k);
        const Eigen::VectorXd V0 = s0.fields.col(k);

        if (sp.mode.m == 0) {
            const double lhs = mu * sp.boundary_integral(k);
            const double t1 = p * sp.domain_integral(k);
            const double t2 = mu_exterior(ballL, 0, p) * sp.outer_integral(k);
            r.identity1_abs = std::abs(lhs - t1 - t2);
            const double scale = std::max({std::abs(lhs), std::abs(t1), std::abs(t2), 1e-12 * (mu + 1.0) * std::sqrt(bm)});
            r.identity1 = r.identity1_abs / scale;
        }
        {
            const double e = sp.gradient_energy(k) + p * sp.domain_norm2(k) + sp.tbc_energy(k);
            r.rayleigh = std::abs(mu - e) / std::max(std::abs(mu), 1e-12);
        }
        {
            const double overlap = V0.dot(S.B * V);
            const double lhs = (mu - s0.eigenvalues[k]) * overlap;
            const double t1 = p * V0.dot(S.M * V);
            double t2 = 0.0;
            for (int j = 0; j < int(sp.tbc.mu.size()); ++j)
                t2 += s0.outer_coeffs(j, k) * (sp.tbc.mu[j] - s0.tbc.mu[j]) * sp.outer_coeffs(j, k);
            const double scale = std::max({std::abs(lhs), std::abs(t1), std::abs(t2), 1e-14});
            r.identity3 = std::abs(lhs - t1 - t2) / scale;
        }
        for (const Probe& pr : probes) {
            const double C = sp.tbc.mode_value(pr.j, pr.axis == 'y' ? Vec2{0.0, 1.0}
                                                     : pr.axis == 'x' ? Vec2{1.0, 0.0}
                                                     : d == 3 ? Vec2{0.0, 1.0}
                                                              : Vec2{1.0, 0.0});
            // value and gradient of the interior ball eigenfunction equal to psi_j on |x| = L
            auto hat = [&](Vec2 x, double& val, Vec2& grad) {
                const double rho = std::hypot(x.x, x.y);
                const double g = interior_profile(ballL, pr.n, p, rho);
                const double gp = interior_profile_dr(ballL, pr.n, p, rho);
                if (pr.n == 0) {
                    val = C * g;
                    grad = {C * gp * x.x / rho, C * gp * x.y / rho};
                    return;
                }
                const double w = (pr.axis == 'x') ? x.x : x.y;  // axisymmetric z is the second coordinate
                const double h = g / rho, hp = (gp * rho - g) / (rho * rho);
                val = C * w * h;
                grad = {C * w * hp * x.x / rho, C * w * hp * x.y / rho};
                if (pr.axis == 'x') grad.x += C * h;
                else grad.y += C * h;
            };
            auto integrand = [&](Vec2 x, Vec2 n) {
                double val;
                Vec2 g;
                hat(x, val, g);
                return mu * val - (g.x * n.x + g.y * n.y);
            };
            const double rhs = edge_integral(sp, edges, V, integrand);
            const double lhs = (mu_exterior(ballL, pr.n, p) + mu_interior(ballL, pr.n, p)) * sp.outer_coeffs(pr.j, k);
            // Cauchy-Schwarz scale of the boundary side (v has unit norm)
            Eigen::VectorXd dummy = Eigen::VectorXd::Ones(V.size());
            const double norm2 = edge_integral(sp, edges, dummy, [&](Vec2 x, Vec2 n) {
                const double f = integrand(x, n);
                return f * f;
            });
            const double scale = std::max({std::abs(lhs), std::abs(rhs), std::sqrt(norm2), 1e-14});
            r.identity4 = std::max(r.identity4, std::abs(lhs - rhs) / scale);
        }
        if (!std::isnan(fd[k])) {
            const double an = sp.domain_norm2(k) + sp.tbc_p_derivative(k);
            r.derivative = std::abs(fd[k] - an) / std::max(std::abs(an), 1e-14);
        }
        out.push_back(r);
    }
    return out;
}

EnvelopeCheck decay_envelope_check(const SteklovSpectrum& s, int k, const std::vector<Vec2>& ray) {
    if (k < 0 || k >= s.size()) throw DomainError("eigenfunction index out of range");
    EnvelopeCheck ec;
    const int d = dim_of(s);
    const double vmax = s.traces.col(k).cwiseAbs().maxCoeff();
    const std::vector<double> vals = extend_exterior(s, k, ray);
    const double sp = std::sqrt(s.p);
    const BesselOrder nu = d == 2 ? BesselOrder::integer(0) : BesselOrder::half(1);
    double C = 0.0;
    for (std::size_t i = 0; i < ray.size(); ++i) {
        const double r = std::hypot(ray[i].x, ray[i].y);
        double H;
        if (s.p > 0.0) {
            H = std::pow(r / s.L, 1.0 - 0.5 * d) *
                std::exp(log_bessel_k_scaled(nu, r * sp) - r * sp - log_bessel_k_scaled(nu, s.L * sp) + s.L * sp);
        } else {
            H = d == 2 ? 1.0 : s.L / r;
        }
        const double bound = vmax * H;
        const double v = std::abs(vals[i]);
        ec.values.push_back(v);
        ec.bound.push_back(bound);
        const double margin = bound > 0.0 ? (bound - v) / bound : (v == 0.0 ? 0.0 : -kInf);
        ec.min_margin = std::min(ec.min_margin, margin);
        if (i == 0) C = v * std::exp(sp * r);
        else if (v > C * std::exp(-sp * r) * (1.0 + 1e-9) + 1e-300) ec.fitted_exp_pass = false;
    }
    ec.pass = ec.min_margin >= -1e-6;
    return ec;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    out.precision(17);
    out << "p,branch,mu,mu_minus_mu0,predicted,overlap,flagged\n";
    for (const auto& row : r.rows)
        out << row.p << ',' << row.branch << ',' << row.mu << ',' << row.dmu << ',' << row.predicted << ','
            << row.overlap << ',' << (row.flagged ? 1 : 0) << '\n';
}

void write_reports_json(std::ostream& out, const std::vector<SmallPReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["k"] = r.k;
        j["d"] = r.d;
        j["regime"] = to_string(r.regime);
        j["ambiguous"] = r.ambiguous;
        if (r.ambiguous) j["alternative"] = to_string(r.alternative);
        j["mu0"] = r.mu0;
        j["c"] = r.c;
        j["d_coef"] = r.d_coef;
        j["d_boundary"] = r.d_boundary;
        j["a"] = r.a;
        j["b"] = std::isfinite(r.b) ? nlohmann::json(r.b) : nlohmann::json("inf");
        j["b_interior"] = r.b_interior;
        j["b_tail"] = r.b_tail;
        j["b_tail_remainder"] = r.b_tail_remainder;
        j["boundary_integral"] = r.boundary_integral;
        j["boundary_measure"] = r.boundary_measure;
        j["cluster_size"] = r.cluster_size;
        if (r.capacity_radius) j["capacity_radius"] = *r.capacity_radius;
        if (r.fit) {
            j["fit"] = {{"leading", r.fit->leading}, {"next", r.fit->next}, {"max_rel_dev", r.fit->max_rel_dev}};
        }
        arr.push_back(j);
    }
    out << arr.dump(1) << '\n';
}

}  // namespace steklov
