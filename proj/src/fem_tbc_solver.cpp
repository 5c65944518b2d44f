#include "steklov/fem_tbc_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "steklov/ball_spectrum.hpp"
#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"

namespace steklov {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Degree-4 rule on the reference triangle (barycentric points, weights sum to 1).
struct TriPoint {
    double l0, l1, l2, w;
};
const TriPoint kSixPoint[6] = {
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
};

void check_mode(const Mesh& mesh, FemMode mode) {
    if (mode.ambient != mesh.ambient) throw DomainError("mode ambient does not match the mesh");
    if (mode.m < 0) throw DomainError("azimuthal index must be >= 0");
    if (mode.m > 0 && !mode.is_axisym()) throw DomainError("azimuthal index requires an axisymmetric mesh");
}

int dimension(FemMode mode) { return mode.is_axisym() ? 3 : 2; }

// Polar angle used by the modes: planar atan2(y, x); axisymmetric angle from +z.
double mode_angle(FemMode mode, Vec2 q) {
    return mode.is_axisym() ? std::atan2(q.x, q.y) : std::atan2(q.y, q.x);
}

}  // namespace

std::string FemMode::name() const {
    return is_axisym() ? "axisym3D_m" + std::to_string(m) : std::string("planar2D");
}

SpMat AssembledSystem::bilinear() const {
    SpMat A = K + p * M;
    if (mode.m > 0) A += double(mode.m) * double(mode.m) * M_hat;
    return A;
}

AssembledSystem assemble(const Mesh& mesh, FemMode mode, double p) {
    check_mode(mesh, mode);
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("p must be finite and >= 0");
    const int n = int(mesh.nodes.size());
    AssembledSystem s;
    s.mode = mode;
    s.p = p;
    const bool ax = mode.is_axisym();
    const double tau = 2.0 * kPi;

    std::vector<Trip> tk, tm, th;
    tk.reserve(mesh.triangles.size() * 9);
    tm.reserve(mesh.triangles.size() * 9);
    for (const auto& t : mesh.triangles) {
        const Vec2 P[3] = {mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
        const double area2 = (P[1].x - P[0].x) * (P[2].y - P[0].y) - (P[2].x - P[0].x) * (P[1].y - P[0].y);
        const double area = 0.5 * area2;
        double gx[3], gy[3];
        for (int i = 0; i < 3; ++i) {
            const Vec2 a = P[(i + 1) % 3], b = P[(i + 2) % 3];
            gx[i] = (a.y - b.y) / area2;
            gy[i] = (b.x - a.x) / area2;
        }
        const double rbar = ax ? (P[0].x + P[1].x + P[2].x) / 3.0 : 1.0;
        const double wk = ax ? tau * rbar * area : area;
        double mloc[3][3] = {}, hloc[3][3] = {};
        if (ax) {
            for (const auto& q : kSixPoint) {
                const double l[3] = {q.l0, q.l1, q.l2};
                const double r = q.l0 * P[0].x + q.l1 * P[1].x + q.l2 * P[2].x;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        mloc[i][j] += q.w * area * tau * r * l[i] * l[j];
                        if (mode.m > 0) hloc[i][j] += q.w * area * tau / r * l[i] * l[j];
                    }
            }
        } else {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) mloc[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                tk.emplace_back(t[i], t[j], wk * (gx[i] * gx[j] + gy[i] * gy[j]));
                tm.emplace_back(t[i], t[j], mloc[i][j]);
                if (mode.m > 0) th.emplace_back(t[i], t[j], hloc[i][j]);
            }
    }
    s.K.resize(n, n);
    s.K.setFromTriplets(tk.begin(), tk.end());
    s.M.resize(n, n);
    s.M.setFromTriplets(tm.begin(), tm.end());
    s.M_hat.resize(n, n);
    if (mode.m > 0) s.M_hat.setFromTriplets(th.begin(), th.end());

    // boundary mass on the obstacle; the axisymmetric integrand r phi_i phi_j is
    // cubic along an edge, so two Gauss points are exact
    std::vector<Trip> tb;
    const double g = 0.5 / std::sqrt(3.0);
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != BoundaryTag::Inner) continue;
        const Vec2 a = mesh.nodes[e.a], b = mesh.nodes[e.b];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        double loc[2][2] = {};
        if (ax) {
            for (double t : {0.5 - g, 0.5 + g}) {
                const double r = (1 - t) * a.x + t * b.x;
                const double phi[2] = {1 - t, t};
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) loc[i][j] += 0.5 * len * tau * r * phi[i] * phi[j];
            }
        } else {
            loc[0][0] = loc[1][1] = len / 3.0;
            loc[0][1] = loc[1][0] = len / 6.0;
        }
        const int v[2] = {e.a, e.b};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) tb.emplace_back(v[i], v[j], loc[i][j]);
    }
    s.B.resize(n, n);
    s.B.setFromTriplets(tb.begin(), tb.end());

    s.dirichlet.assign(n, 0);
    if (mode.m > 0) {
        for (const auto& e : mesh.boundary_edges)
            if (e.tag == BoundaryTag::Axis) s.dirichlet[e.a] = s.dirichlet[e.b] = 1;
    }
    s.inner_nodes = boundary_arclength(mesh, BoundaryTag::Inner).nodes;
    s.outer_nodes = boundary_arclength(mesh, BoundaryTag::Outer).nodes;
    return s;
}

Eigen::MatrixXd TbcMatrix::dense() const { return W * mu.asDiagonal() * W.transpose(); }

double TbcMatrix::mode_value(int j, Vec2 direction) const {
    const double th = mode_angle(mode, direction);
    const int n = degree[j];
    if (!mode.is_axisym()) {
        if (n == 0) return 1.0 / std::sqrt(2.0 * kPi * L);
        return (sine[j] ? std::sin(n * th) : std::cos(n * th)) / std::sqrt(kPi * L);
    }
    return legendre_normalized_all(mode.m, n, std::cos(th)).back() / L;
}

TbcMatrix tbc_matrix(const Mesh& mesh, double p, int n_max, FemMode mode) {
    check_mode(mesh, mode);
    if (n_max < 0) throw DomainError("n_max must be >= 0");
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("p must be finite and >= 0");
    TbcMatrix T;
    T.mode = mode;
    T.L = mesh.L;
    const double L = mesh.L;
    const BoundaryPath path = boundary_arclength(mesh, BoundaryTag::Outer);
    T.outer_nodes = path.nodes;
    const int no = int(path.nodes.size());
    const bool ax = mode.is_axisym();

    if (ax) {
        if (n_max < mode.m) throw DomainError("n_max must be >= m");
        for (int n = mode.m; n <= n_max; ++n) {
            T.degree.push_back(n);
            T.sine.push_back(0);
        }
    } else {
        T.degree.push_back(0);
        T.sine.push_back(0);
        for (int n = 1; n <= n_max; ++n)
            for (int sn : {0, 1}) {
                T.degree.push_back(n);
                T.sine.push_back(sn);
            }
    }
    const int J = int(T.degree.size());
    if (J > no) throw DomainError("n_max exceeds the angular resolution of the outer boundary (" + std::to_string(J) +
                                  " modes, " + std::to_string(no) + " outer nodes)");
    T.mu.resize(J);
    const BallSpec ball{dimension(mode), L};
    for (int j = 0; j < J; ++j) T.mu[j] = mu_exterior(ball, T.degree[j], p);

    T.W = Eigen::MatrixXd::Zero(no, J);
    T.surface = Eigen::VectorXd::Zero(no);
    const GaussRule gr = gauss_legendre(8);
    const int n_edges = path.closed ? no : no - 1;
    std::vector<double> vals(J);
    for (int e = 0; e < n_edges; ++e) {
        const int ia = e, ib = (e + 1) % no;
        const double ta = mode_angle(mode, mesh.nodes[path.nodes[ia]]);
        double tb = mode_angle(mode, mesh.nodes[path.nodes[ib]]);
        if (!ax) {
            while (tb < ta) tb += 2.0 * kPi;  // counterclockwise
        }
        const double dth = tb - ta;
        // the modes oscillate at most like n_max theta: keep that phase per piece small
        const int pieces = std::max(1, int(std::ceil(std::abs(dth) * (n_max + 1) / 0.5)));
        for (int pc = 0; pc < pieces; ++pc) {
            for (std::size_t q = 0; q < gr.x.size(); ++q) {
                const double t = (pc + 0.5 * (gr.x[q] + 1.0)) / pieces;
                const double wq = 0.5 * gr.w[q] / pieces;
                const double th = ta + t * dth;
                double ds;
                if (ax) {
                    ds = 2.0 * kPi * L * L * std::sin(th) * std::abs(dth) * wq;
                    const std::vector<double> P = legendre_normalized_all(mode.m, n_max, std::cos(th));
                    for (int j = 0; j < J; ++j) vals[j] = P[j] / L;
                } else {
                    ds = L * dth * wq;
                    vals[0] = 1.0 / std::sqrt(2.0 * kPi * L);
                    const double c = 1.0 / std::sqrt(kPi * L);
                    for (int j = 1; j < J; ++j)
                        vals[j] = c * (T.sine[j] ? std::sin(T.degree[j] * th) : std::cos(T.degree[j] * th));
                }
                const double phi[2] = {1.0 - t, t};
                const int rows[2] = {ia, ib};
                for (int k = 0; k < 2; ++k) {
                    T.surface[rows[k]] += phi[k] * ds;
                    for (int j = 0; j < J; ++j) T.W(rows[k], j) += phi[k] * ds * vals[j];
                }
            }
        }
    }
    return T;
}

// ---------------------------------------------------------------------------

double SteklovSpectrum::boundary_integral(int k) const {
    const auto& S = system();
    const Eigen::VectorXd v = fields.col(k);
    return (S.B * v).sum();
}

double SteklovSpectrum::domain_integral(int k) const { return (system().M * fields.col(k)).sum(); }

double SteklovSpectrum::domain_norm2(int k) const {
    const Eigen::VectorXd v = fields.col(k);
    return v.dot(system().M * v);
}

double SteklovSpectrum::gradient_energy(int k) const {
    const auto& S = system();
    const Eigen::VectorXd v = fields.col(k);
    double e = v.dot(S.K * v);
    if (mode.m > 0) e += double(mode.m) * mode.m * v.dot(S.M_hat * v);
    return e;
}

double SteklovSpectrum::outer_integral(int k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < tbc.outer_nodes.size(); ++i) s += tbc.surface[i] * fields(tbc.outer_nodes[i], k);
    return s;
}

double SteklovSpectrum::tbc_energy(int k) const {
    double s = 0.0;
    for (int j = 0; j < int(tbc.mu.size()); ++j) s += tbc.mu[j] * outer_coeffs(j, k) * outer_coeffs(j, k);
    return s;
}

double SteklovSpectrum::tbc_p_derivative(int k) const {
    const BallSpec ball{dimension(mode), L};
    double s = 0.0;
    for (int j = 0; j < int(tbc.mu.size()); ++j) {
        const double c2 = outer_coeffs(j, k) * outer_coeffs(j, k);
        if (c2 == 0.0) continue;
        s += q_norm(ball, tbc.degree[j], p) * c2;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Unknowns are ordered [interior (fill-reducing order), TBC multipliers,
// obstacle boundary]. The symmetric quasi-definite matrix
//   [ A_II  U   A_IG ]
//   [ U^T  -I   0    ]
//   [ A_GI  0   A_GG ]
// with U = W sqrt(mu) has as its Schur complement onto the obstacle boundary
// exactly the discrete Dirichlet-to-Neumann matrix of K + pM + T, so the
// trailing block of one sparse LDL^T factorization is all the eigensolver needs.
// The inverse form uses U = W and -diag(1/mu) instead, which eliminates to the
// same operator.

struct SteklovSolver::Impl {
    std::shared_ptr<const SolveContext> ctx;
    FemMode mode;
    int n_max = 0;
    bool inverse = false;
    TbcMatrix tbc0;              // W and mode layout; mu refreshed per p
    std::vector<int> index;      // node -> unknown, -1 for Dirichlet nodes
    std::vector<int> gamma_nodes;  // obstacle unknowns in inner path order
    int nI = 0, J = 0, nG = 0;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt;
    bool analyzed = false;
    SpMat Bg;  // boundary mass on the obstacle unknowns

    void setup(const Mesh& mesh) {
        const AssembledSystem& S = ctx->system;
        const int n = int(mesh.nodes.size());
        std::vector<char> on_gamma(n, 0);
        for (int v : S.inner_nodes)
            if (!S.dirichlet[v]) on_gamma[v] = 1;
        std::vector<int> interior;
        for (int v = 0; v < n; ++v)
            if (!S.dirichlet[v] && !on_gamma[v]) interior.push_back(v);
        nI = int(interior.size());
        J = int(tbc0.degree.size());
        for (int v : S.inner_nodes)
            if (on_gamma[v]) gamma_nodes.push_back(v);
        nG = int(gamma_nodes.size());
        if (nG == 0) throw SolverError("no free unknowns on the obstacle boundary");

        // fill-reducing order of the interior block
        std::vector<int> local(n, -1);
        for (int i = 0; i < nI; ++i) local[interior[i]] = i;
        std::vector<Trip> pat;
        const SpMat A = S.K + S.M;
        for (int c = 0; c < A.outerSize(); ++c)
            for (SpMat::InnerIterator it(A, c); it; ++it) {
                const int a = local[it.row()], b = local[c];
                if (a >= 0 && b >= 0) pat.emplace_back(a, b, 1.0);
            }
        SpMat P(nI, nI);
        P.setFromTriplets(pat.begin(), pat.end());
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
        Eigen::AMDOrdering<int> amd;
        amd(P, perm);
        // perm.indices()[new] = old (the convention of Eigen's own Cholesky)
        index.assign(n, -1);
        for (int k = 0; k < nI; ++k) index[interior[perm.indices()[k]]] = k;
        for (int g = 0; g < nG; ++g) index[gamma_nodes[g]] = nI + J + g;

        std::vector<Trip> tb;
        for (int c = 0; c < S.B.outerSize(); ++c)
            for (SpMat::InnerIterator it(S.B, c); it; ++it) {
                const int a = index[it.row()], b = index[c];
                if (a >= nI + J && b >= nI + J) tb.emplace_back(a - nI - J, b - nI - J, it.value());
            }
        Bg.resize(nG, nG);
        Bg.setFromTriplets(tb.begin(), tb.end());
    }

    SpMat augmented(double p, const Eigen::VectorXd& mu) const {
        const AssembledSystem& S = ctx->system;
        const int N = nI + J + nG;
        SpMat A0 = S.K + p * S.M;
        if (mode.m > 0) A0 += double(mode.m) * mode.m * S.M_hat;
        std::vector<Trip> t;
        t.reserve(A0.nonZeros() / 2 + std::size_t(J) * tbc0.outer_nodes.size() + J);
        for (int c = 0; c < A0.outerSize(); ++c)
            for (SpMat::InnerIterator it(A0, c); it; ++it) {
                const int a = index[it.row()], b = index[c];
                if (a < 0 || b < 0 || a < b) continue;
                t.emplace_back(a, b, it.value());
            }
        for (int j = 0; j < J; ++j) {
            const double scale = inverse ? 1.0 : std::sqrt(mu[j]);
            for (std::size_t i = 0; i < tbc0.outer_nodes.size(); ++i) {
                const int a = index[tbc0.outer_nodes[i]];
                if (a < 0) continue;
                // explicit zeros keep the pattern independent of p
                t.emplace_back(nI + j, a, scale * tbc0.W(i, j));
            }
            t.emplace_back(nI + j, nI + j, inverse ? -1.0 / mu[j] : -1.0);
        }
        SpMat A(N, N);
        A.setFromTriplets(t.begin(), t.end());
        return A;
    }
};

SteklovSolver::SteklovSolver(const Mesh& mesh, FemMode mode, int n_max, bool inverse_tbc)
    : impl_(std::make_unique<Impl>()) {
    auto ctx = std::make_shared<SolveContext>();
    ctx->mesh = std::make_shared<const Mesh>(mesh);
    ctx->system = assemble(mesh, mode, 0.0);
    ctx->n_max = n_max;
    impl_->mode = mode;
    impl_->n_max = n_max;
    impl_->inverse = inverse_tbc;
    impl_->tbc0 = tbc_matrix(mesh, 0.0, n_max, mode);
    impl_->ctx = ctx;
    impl_->setup(mesh);
}

SteklovSolver::~SteklovSolver() = default;

const Mesh& SteklovSolver::mesh() const { return *impl_->ctx->mesh; }

SteklovSpectrum SteklovSolver::solve(double p, int k_max) {
    Impl& im = *impl_;
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("p must be finite and >= 0");
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    const Mesh& mesh = *im.ctx->mesh;
    TbcMatrix tbc = im.tbc0;
    const BallSpec ball{dimension(im.mode), mesh.L};
    for (int j = 0; j < im.J; ++j) tbc.mu[j] = mu_exterior(ball, tbc.degree[j], p);
    if (im.inverse && tbc.mu.minCoeff() <= 0.0)
        throw DomainError("the inverse form of the TBC needs every retained exterior eigenvalue to be positive");

    const SpMat A = im.augmented(p, tbc.mu);
    if (!im.analyzed) {
        im.ldlt.analyzePattern(A);
        im.analyzed = true;
    }
    im.ldlt.factorize(A);
    if (im.ldlt.info() != Eigen::Success) throw SolverError("sparse factorization failed");

    // trailing block of the factor: Schur complement onto the obstacle unknowns
    const int off = im.nI + im.J, nG = im.nG;
    const SpMat& Lf = im.ldlt.matrixL().nestedExpression();
    Eigen::MatrixXd Lg = Eigen::MatrixXd::Identity(nG, nG);
    for (int c = off; c < off + nG; ++c)
        for (SpMat::InnerIterator it(Lf, c); it; ++it)
            if (it.row() > c) Lg(it.row() - off, c - off) = it.value();
    const Eigen::VectorXd Dg = im.ldlt.vectorD().tail(nG);
    Eigen::MatrixXd Sg = Lg * Dg.asDiagonal() * Lg.transpose();
    Sg = 0.5 * (Sg + Sg.transpose()).eval();

    const Eigen::MatrixXd Bd = Eigen::MatrixXd(im.Bg);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Sg, Bd);
    if (ges.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");

    const int k = std::min(k_max, nG);
    SteklovSpectrum out;
    out.p = p;
    out.mode = im.mode;
    out.n_max = im.n_max;
    out.L = mesh.L;
    out.context = im.ctx;
    const int n = int(mesh.nodes.size());
    out.fields = Eigen::MatrixXd::Zero(n, k);
    const AssembledSystem& S = im.ctx->system;
    out.traces = Eigen::MatrixXd::Zero(int(S.inner_nodes.size()), k);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nG);
    const Eigen::VectorXd Bones = im.Bg * ones;
    // The leading block of the factor factors the interior + auxiliary system,
    // which stays nonsingular when the Schur complement does not (2D, p = 0).
    const SpMat L11 = Lf.topLeftCorner(off, off);
    const Eigen::VectorXd D1 = im.ldlt.vectorD().head(off);
    const SpMat A_gr = A.bottomLeftCorner(nG, off);
    Eigen::MatrixXd U(nG, k);
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd u = ges.eigenvectors().col(c);
        u /= std::sqrt(u.dot(im.Bg * u));
        const double integral = Bones.dot(u);
        bool flip = integral < 0.0;
        if (std::abs(integral) < 1e-9) {
            const double big = u.cwiseAbs().maxCoeff();
            for (int i = 0; i < nG; ++i)
                if (std::abs(u[i]) > 1e-8 * big) {
                    flip = u[i] < 0.0;
                    break;
                }
        }
        if (flip) u = -u;
        out.eigenvalues.push_back(ges.eigenvalues()[c]);
        U.col(c) = u;
    }
    Eigen::MatrixXd X = -(A_gr.transpose() * U);
    L11.triangularView<Eigen::UnitLower>().solveInPlace(X);
    X = D1.cwiseInverse().asDiagonal() * X;
    L11.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(X);
    for (int v = 0; v < n; ++v) {
        const int a = im.index[v];
        if (a < 0) continue;
        out.fields.row(v) = a >= off ? U.row(a - off) : X.row(a);
    }
    for (std::size_t i = 0; i < S.inner_nodes.size(); ++i) out.traces.row(int(i)) = out.fields.row(S.inner_nodes[i]);
    Eigen::MatrixXd outer(tbc.outer_nodes.size(), k);
    for (std::size_t i = 0; i < tbc.outer_nodes.size(); ++i) outer.row(int(i)) = out.fields.row(tbc.outer_nodes[i]);
    out.outer_coeffs = tbc.W.transpose() * outer;
    out.tbc = std::move(tbc);
    return out;
}

SteklovSpectrum steklov_solve(const Mesh& mesh, FemMode mode, double p, const SolveOptions& options) {
    SteklovSolver solver(mesh, mode, options.n_max, options.inverse_tbc);
    return solver.solve(p, options.k_max);
}

std::vector<double> extend_exterior(const SteklovSpectrum& s, int k, const std::vector<Vec2>& points) {
    if (k < 0 || k >= s.size()) throw DomainError("eigenfunction index out of range");
    const BallSpec ball{dimension(s.mode), s.L};
    std::vector<double> out;
    out.reserve(points.size());
    for (const Vec2& y : points) {
        double r = std::hypot(y.x, y.y);
        if (r < s.L * (1.0 - 1e-12)) throw DomainError("point lies inside the truncation ball");
        r = std::max(r, s.L);
        double v = 0.0;
        for (int j = 0; j < int(s.tbc.degree.size()); ++j) {
            const double c = s.outer_coeffs(j, k);
            if (c == 0.0) continue;
            v += c * radial_profile(ball, s.tbc.degree[j], s.p, r) * s.tbc.mode_value(j, y);
        }
        out.push_back(v);
    }
    return out;
}

BallValidationReport validate_against_ball(int d, double R, Vec2 center_offset, double L, double h_max, int n_max,
                                           double p, int k_max) {
    if (d != 2 && d != 3) throw DomainError("validation supports d = 2 and d = 3");
    const auto t0 = std::chrono::steady_clock::now();
    DomainSpec spec = DomainSpec::ball(d == 2 ? Ambient::Planar2D : Ambient::Axisym3D, R, L);
    spec.center_offset = center_offset;
    const Mesh mesh = build_mesh(spec, h_max);
    const FemMode mode = d == 2 ? FemMode::planar() : FemMode::axisym(0);
    SteklovSolver solver(mesh, mode, n_max);
    const SteklovSpectrum s = solver.solve(p, k_max);

    BallValidationReport rep;
    rep.d = d;
    rep.p = p;
    // exact spectrum with multiplicity, and the degree of each entry
    std::vector<int> deg;
    for (int n = 0; int(deg.size()) < k_max; ++n) {
        const int mult = (d == 2 && n > 0) ? 2 : 1;
        for (int i = 0; i < mult && int(deg.size()) < k_max; ++i) deg.push_back(n);
    }
    const BallSpec obstacle{d, R};
    const AssembledSystem& S = s.system();
    const std::vector<int>& nodes = S.inner_nodes;
    const int nb = int(nodes.size());
    Eigen::SparseMatrix<double> Bsub(nb, nb);
    {
        std::vector<int> pos(mesh.nodes.size(), -1);
        for (int i = 0; i < nb; ++i) pos[nodes[i]] = i;
        std::vector<Trip> t;
        for (int c = 0; c < S.B.outerSize(); ++c)
            for (SpMat::InnerIterator it(S.B, c); it; ++it)
                if (pos[it.row()] >= 0 && pos[c] >= 0) t.emplace_back(pos[it.row()], pos[c], it.value());
        Bsub.setFromTriplets(t.begin(), t.end());
    }
    auto reference = [&](int n, int sine) {
        Eigen::VectorXd e(nb);
        for (int i = 0; i < nb; ++i) {
            const Vec2 q{mesh.nodes[nodes[i]].x - center_offset.x, mesh.nodes[nodes[i]].y - center_offset.y};
            if (d == 2) {
                const double th = std::atan2(q.y, q.x);
                e[i] = n == 0 ? 1.0 / std::sqrt(2.0 * kPi * R)
                              : (sine ? std::sin(n * th) : std::cos(n * th)) / std::sqrt(kPi * R);
            } else {
                e[i] = legendre_normalized_all(0, n, std::cos(std::atan2(q.x, q.y))).back() / R;
            }
        }
        return e;
    };
    for (int k = 0; k < std::min(k_max, s.size()); ++k) {
        const double ex = mu_exterior(obstacle, deg[k], p);
        rep.exact.push_back(ex);
        rep.computed.push_back(s.eigenvalues[k]);
        rep.rel_error.push_back(std::abs(s.eigenvalues[k] - ex) / std::max(ex, 1.0));
        // project onto the exact eigenspace of this degree (B inner product)
        std::vector<Eigen::VectorXd> basis{reference(deg[k], 0)};
        if (d == 2 && deg[k] > 0) basis.push_back(reference(deg[k], 1));
        const int nbasis = int(basis.size());
        Eigen::MatrixXd E(nb, nbasis);
        for (int j = 0; j < nbasis; ++j) E.col(j) = basis[j];
        const Eigen::MatrixXd BE = Bsub * E;
        const Eigen::VectorXd v = s.traces.col(k);
        const Eigen::VectorXd coef = (E.transpose() * BE).ldlt().solve(BE.transpose() * v);
        const Eigen::VectorXd r = v - E * coef;
        rep.rmse.push_back(std::sqrt(r.squaredNorm() / nb));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

void write_spectrum_json(std::ostream& out, const SteklovSpectrum& s) {
    nlohmann::json j;
    j["p"] = s.p;
    j["mode"] = s.mode.name();
    j["m"] = s.mode.m;
    j["n_max"] = s.n_max;
    j["L"] = s.L;
    j["eigenvalues"] = s.eigenvalues;
    j["sign_convention"] = s.sign_convention;
    const Mesh& mesh = s.mesh();
    const BoundaryPath path = boundary_arclength(mesh, BoundaryTag::Inner);
    j["arclength"] = path.s;
    std::vector<std::array<double, 2>> xy;
    for (int v : path.nodes) xy.push_back({mesh.nodes[v].x, mesh.nodes[v].y});
    j["boundary_points"] = xy;
    nlohmann::json tr = nlohmann::json::array();
    for (int k = 0; k < s.size(); ++k) {
        std::vector<double> col(s.traces.rows());
        for (int i = 0; i < int(col.size()); ++i) col[i] = s.traces(i, k);
        tr.push_back(col);
    }
    j["traces"] = tr;
    nlohmann::json oc = nlohmann::json::array();
    for (int k = 0; k < s.size(); ++k) {
        std::vector<double> col(s.outer_coeffs.rows());
        for (int i = 0; i < int(col.size()); ++i) col[i] = s.outer_coeffs(i, k);
        oc.push_back(col);
    }
    j["outer_coefficients"] = oc;
    j["outer_mode_degree"] = s.tbc.degree;
    if (!s.mode.is_axisym()) j["outer_mode_is_sine"] = s.tbc.sine;
    std::vector<double> bint;
    for (int k = 0; k < s.size(); ++k) bint.push_back(s.boundary_integral(k));
    j["boundary_integrals"] = bint;
    out << j.dump(1) << '\n';
}

void write_spectrum_csv(std::ostream& out, const SteklovSpectrum& s) {
    out << "k,mu\n";
    out.precision(17);
    for (int k = 0; k < s.size(); ++k) out << k << ',' << s.eigenvalues[k] << '\n';
}

void write_traces_csv(std::ostream& out, const SteklovSpectrum& s) {
    const Mesh& mesh = s.mesh();
    const BoundaryPath path = boundary_arclength(mesh, BoundaryTag::Inner);
    out << "s,x,y";
    for (int k = 0; k < s.size(); ++k) out << ",v" << k;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
        const Vec2 q = mesh.nodes[path.nodes[i]];
        out << path.s[i] << ',' << q.x << ',' << q.y;
        for (int k = 0; k < s.size(); ++k) out << ',' << s.traces(int(i), k);
        out << '\n';
    }
}

}  // namespace steklov
