#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "steklov/asymptotics.hpp"
#include "steklov/ball_spectrum.hpp"
#include "steklov/errors.hpp"
#include "steklov/fem_tbc_solver.hpp"

using namespace steklov;

namespace {

const Mesh& disk_mesh() {
    static const Mesh m = build_mesh(DomainSpec::disk(1.0, {0.0, 0.25}, 2.0), 0.05);
    return m;
}

const Mesh& sphere_mesh() {
    static const Mesh m = build_mesh(DomainSpec::ball(Ambient::Axisym3D, 1.0, 2.0), 0.05);
    return m;
}

double quad(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& u) { return u.dot(A * u); }

}  // namespace

TEST_CASE("assembled matrices integrate constants") {
    const Mesh& m = disk_mesh();
    const AssembledSystem S = assemble(m, FemMode::planar(), 0.0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(Eigen::Index(m.nodes.size()));
    CHECK(std::abs(quad(S.K, one)) < 1e-10);
    CHECK(quad(S.B, one) == doctest::Approx(2.0 * kPi).epsilon(1e-3));
    // annulus area between the offset unit disk and the circle of radius 2
    CHECK(quad(S.M, one) == doctest::Approx(3.0 * kPi).epsilon(1e-3));
    CHECK((S.K - Eigen::SparseMatrix<double>(S.K.transpose())).norm() < 1e-12 * S.K.norm());

    const AssembledSystem A = assemble(sphere_mesh(), FemMode::axisym(0), 0.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Eigen::Index(sphere_mesh().nodes.size()));
    CHECK(std::abs(quad(A.K, ones)) < 1e-10);
    CHECK(quad(A.B, ones) == doctest::Approx(4.0 * kPi).epsilon(1e-3));
    CHECK(quad(A.M, ones) == doctest::Approx(4.0 * kPi / 3.0 * (8.0 - 1.0)).epsilon(1e-3));
}

TEST_CASE("axis nodes are constrained for nonzero azimuthal index") {
    const AssembledSystem A = assemble(sphere_mesh(), FemMode::axisym(1), 0.0);
    int axis = 0;
    for (std::size_t v = 0; v < sphere_mesh().nodes.size(); ++v)
        if (sphere_mesh().nodes[v].x < 1e-12) {
            CHECK(A.dirichlet[v]);
            ++axis;
        }
    CHECK(axis > 0);
    CHECK(A.M_hat.nonZeros() > 0);
    CHECK_THROWS_AS(assemble(disk_mesh(), FemMode{Ambient::Planar2D, 1}, 0.0), DomainError);
    CHECK_THROWS_AS(assemble(disk_mesh(), FemMode::axisym(0), 0.0), DomainError);
}

TEST_CASE("TBC matrix is positive semidefinite with the expected constant response") {
    for (double p : {0.0, 0.3}) {
        const TbcMatrix T = tbc_matrix(disk_mesh(), p, 30, FemMode::planar());
        const Eigen::MatrixXd D = T.dense();
        CHECK((D - D.transpose()).norm() <= 1e-12 * D.norm());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(D.rows());
        const double response = one.dot(D * one);
        // constants only excite the n = 0 mode: mu_0 * (circumference)
        const double expected = mu_exterior(BallSpec{2, 2.0}, 0, p) * 4.0 * kPi;
        CHECK(response == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
        if (p == 0.0) CHECK((D * one).norm() < 1e-12);
    }
    const TbcMatrix T3 = tbc_matrix(sphere_mesh(), 0.0, 20, FemMode::axisym(0));
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(T3.W.rows());
    // mu_0 = 1/L on |x| = L = 2, sphere area 16 pi
    CHECK(one.dot(T3.dense() * one) == doctest::Approx(1.0 / 2.0 * 16.0 * kPi).epsilon(1e-9));
    CHECK(T3.W.cols() == 21);
}

TEST_CASE("too many retained modes for the OUTER resolution is rejected") {
    const Mesh coarse = build_mesh(DomainSpec::disk(1.0, {0.0, 0.0}, 2.0), 0.45);
    CHECK_THROWS_AS(tbc_matrix(coarse, 0.0, 200, FemMode::planar()), DomainError);
}

TEST_CASE("disk spectrum against closed forms") {
    SteklovSolver solver(disk_mesh(), FemMode::planar(), 30);
    const SteklovSpectrum s0 = solver.solve(0.0, 11);
    CHECK(std::abs(s0.eigenvalues[0]) < 1e-8);
    const double exact[11] = {0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5};
    for (int k = 1; k < 11; ++k) CHECK(s0.eigenvalues[k] == doctest::Approx(exact[k]).epsilon(1e-2));
    for (int k = 1; k < 11; ++k) CHECK(s0.eigenvalues[k] >= s0.eigenvalues[k - 1]);

    const SteklovSpectrum s1 = solver.solve(1.0, 11);
    CHECK(s1.eigenvalues[0] == doctest::Approx(mu_exterior(BallSpec{2, 1.0}, 0, 1.0)).epsilon(2e-3));
    CHECK(s1.eigenvalues[0] == doctest::Approx(1.4296).epsilon(2e-3));

    const BallValidationReport r = validate_against_ball(2, 1.0, {0.0, 0.25}, 2.0, 0.05, 30, 0.0, 11);
    for (int k = 1; k < 11; ++k) {
        CHECK(r.rel_error[k] < 1e-2);
        CHECK(r.rmse[k] < 5e-3);
    }
}

TEST_CASE("sphere spectrum in the axisymmetric modes") {
    SteklovSolver m0(sphere_mesh(), FemMode::axisym(0), 20);
    const SteklovSpectrum s = m0.solve(0.25, 3);
    CHECK(s.eigenvalues[0] == doctest::Approx(1.5).epsilon(1e-3));
    const SteklovSpectrum z = m0.solve(0.0, 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(z.eigenvalues[k] > 0.0);
        CHECK(z.eigenvalues[k] == doctest::Approx(mu_exterior(BallSpec{3, 1.0}, k, 0.0)).epsilon(5e-3));
    }
    // m = 1 starts at n = 1
    SteklovSolver m1(sphere_mesh(), FemMode::axisym(1), 20);
    const SteklovSpectrum w = m1.solve(0.0, 3);
    for (int k = 0; k < 3; ++k) CHECK(w.eigenvalues[k] == doctest::Approx(double(k + 2)).epsilon(5e-3));
}

TEST_CASE("spectrum is B-orthonormal with consistent traces and signs") {
    for (FemMode mode : {FemMode::planar(), FemMode::axisym(0), FemMode::axisym(2)}) {
        const Mesh& m = mode.is_axisym() ? sphere_mesh() : disk_mesh();
        const SteklovSpectrum s = steklov_solve(m, mode, 0.5, SolveOptions{20, 8, false});
        const auto& S = s.system();
        Eigen::MatrixXd G(s.size(), s.size());
        Eigen::MatrixXd F = s.fields;
        for (int i = 0; i < s.size(); ++i)
            for (int j = 0; j < s.size(); ++j) G(i, j) = F.col(i).dot(S.B * F.col(j));
        CHECK((G - Eigen::MatrixXd::Identity(s.size(), s.size())).cwiseAbs().maxCoeff() < 1e-8);
        for (std::size_t i = 0; i < S.inner_nodes.size(); ++i)
            CHECK(s.traces.row(int(i)) == s.fields.row(S.inner_nodes[i]));
        for (int k = 0; k < s.size(); ++k) CHECK(s.boundary_integral(k) >= -1e-9);
    }
}

TEST_CASE("discrete eigenpairs satisfy the assembled pencil") {
    const SteklovSpectrum s = steklov_solve(disk_mesh(), FemMode::planar(), 0.0, SolveOptions{30, 6, false});
    const auto& S = s.system();
    const Eigen::MatrixXd T = s.tbc.dense();
    for (int k = 0; k < s.size(); ++k) {
        Eigen::VectorXd V = s.fields.col(k);
        Eigen::VectorXd r = S.K * V - s.eigenvalues[k] * (S.B * V);
        Eigen::VectorXd outer(Eigen::Index(s.tbc.outer_nodes.size()));
        for (std::size_t i = 0; i < s.tbc.outer_nodes.size(); ++i) outer[Eigen::Index(i)] = V[s.tbc.outer_nodes[i]];
        const Eigen::VectorXd To = T * outer;
        for (std::size_t i = 0; i < s.tbc.outer_nodes.size(); ++i) r[s.tbc.outer_nodes[i]] += To[Eigen::Index(i)];
        CHECK(r.norm() < 1e-9 * (1.0 + s.eigenvalues[k]));
    }
    // the principal planar eigenfunction at p = 0 is constant everywhere
    const Eigen::VectorXd v0 = s.fields.col(0);
    CHECK(v0.maxCoeff() - v0.minCoeff() < 1e-10);
    CHECK(v0[0] == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-3));
}

TEST_CASE("inverse TBC form agrees with the direct form") {
    SteklovSolver direct(disk_mesh(), FemMode::planar(), 30, false);
    SteklovSolver inverse(disk_mesh(), FemMode::planar(), 30, true);
    const SteklovSpectrum a = direct.solve(1.0, 8);
    const SteklovSpectrum b = inverse.solve(1.0, 8);
    for (int k = 0; k < 8; ++k) CHECK(a.eigenvalues[k] == doctest::Approx(b.eigenvalues[k]).epsilon(1e-9));
    // mu_0 vanishes in the plane at p = 0, so its inverse does not exist
    CHECK_THROWS_AS(inverse.solve(0.0, 4), DomainError);
    SteklovSolver inv3(sphere_mesh(), FemMode::axisym(0), 20, true);
    SteklovSolver dir3(sphere_mesh(), FemMode::axisym(0), 20, false);
    const SteklovSpectrum c = inv3.solve(0.0, 4);
    const SteklovSpectrum d = dir3.solve(0.0, 4);
    for (int k = 0; k < 4; ++k) CHECK(c.eigenvalues[k] == doctest::Approx(d.eigenvalues[k]).epsilon(1e-9));
}

TEST_CASE("eigenvalues do not depend on the truncation radius") {
    const Mesh a = build_mesh(DomainSpec::square(2.0, 2.0), 0.04);
    const Mesh b = build_mesh(DomainSpec::square(2.0, 2.5), 0.04);
    const SolveOptions opt{30, 9, false};
    const SteklovSpectrum sa = steklov_solve(a, FemMode::planar(), 0.0, opt);
    const SteklovSpectrum sb = steklov_solve(b, FemMode::planar(), 0.0, opt);
    for (int k = 1; k < 9; ++k) CHECK(std::abs(sa.eigenvalues[k] - sb.eigenvalues[k]) <= 5e-3 * sa.eigenvalues[k]);
}

TEST_CASE("repeated solves are bit-identical") {
    SteklovSolver s1(disk_mesh(), FemMode::planar(), 30);
    SteklovSolver s2(disk_mesh(), FemMode::planar(), 30);
    const SteklovSpectrum a = s1.solve(0.7, 6);
    s1.solve(0.1, 6);
    const SteklovSpectrum b = s1.solve(0.7, 6);
    const SteklovSpectrum c = s2.solve(0.7, 6);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.eigenvalues == c.eigenvalues);
    CHECK(a.fields == b.fields);
    CHECK(a.fields == c.fields);
}

TEST_CASE("exterior extension") {
    SteklovSolver solver(disk_mesh(), FemMode::planar(), 30);
    for (double p : {0.0, 1.0}) {
        const SteklovSpectrum s = solver.solve(p, 6);
        std::vector<Vec2> pts;
        for (int v : s.tbc.outer_nodes) pts.push_back(disk_mesh().nodes[v]);
        for (int k = 0; k < 6; ++k) {
            const auto e = extend_exterior(s, k, pts);
            double diff = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                diff = std::max(diff, std::abs(e[i] - s.fields(s.tbc.outer_nodes[i], k)));
                scale = std::max(scale, std::abs(e[i]));
            }
            // P1 trace versus its band-limited modal sum
            CHECK(diff <= 1e-3 * scale);
        }
    }
    const SteklovSpectrum s = solver.solve(0.0, 3);
    CHECK_THROWS_AS(extend_exterior(s, 0, {{0.5, 0.5}}), DomainError);
    CHECK_THROWS_AS(extend_exterior(s, 7, {{3.0, 0.0}}), DomainError);
    // k = 0 at p = 0 is the constant 1/sqrt(|boundary|) everywhere
    const auto far = extend_exterior(s, 0, {{10.0, 0.0}, {0.0, -50.0}});
    for (double v : far) CHECK(v == doctest::Approx(s.fields(0, 0)).epsilon(1e-12));
}

TEST_CASE("spectrum writers") {
    const SteklovSpectrum s = steklov_solve(disk_mesh(), FemMode::planar(), 0.5, SolveOptions{10, 3, false});
    std::ostringstream js, csv;
    write_spectrum_json(js, s);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j.at("p").get<double>() == 0.5);
    CHECK(j.at("eigenvalues").size() == 3);
    CHECK(j.at("traces").size() == 3);
    CHECK(j.at("traces")[0].size() == s.system().inner_nodes.size());
    write_spectrum_csv(csv, s);
    CHECK(csv.str().find("k,mu") == 0);
}

TEST_CASE("invalid solve requests") {
    SteklovSolver solver(disk_mesh(), FemMode::planar(), 10);
    CHECK_THROWS_AS(solver.solve(-1.0, 3), DomainError);
    CHECK_THROWS_AS(solver.solve(std::nan(""), 3), DomainError);
    CHECK_THROWS_AS(solver.solve(0.0, 0), DomainError);
}
