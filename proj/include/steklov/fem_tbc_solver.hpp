#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "steklov/geometry_mesh.hpp"

namespace steklov {

/// Planar problem, or the azimuthal Fourier mode e^{i m phi} of an
/// axisymmetric one.
struct FemMode {
    Ambient ambient = Ambient::Planar2D;
    int m = 0;

    static FemMode planar() { return {Ambient::Planar2D, 0}; }
    static FemMode axisym(int m = 0) { return {Ambient::Axisym3D, m}; }
    bool is_axisym() const { return ambient == Ambient::Axisym3D; }
    std::string name() const;
};

/// P1 matrices over all mesh nodes. Axisymmetric matrices carry the full
/// azimuthal weight 2 pi r, so integrals are true three-dimensional ones.
struct AssembledSystem {
    FemMode mode;
    double p = 0.0;
    Eigen::SparseMatrix<double> K;      // stiffness
    Eigen::SparseMatrix<double> M;      // mass
    Eigen::SparseMatrix<double> M_hat;  // (1/r) mass, axisymmetric m >= 1 only
    Eigen::SparseMatrix<double> B;      // mass on the INNER boundary
    std::vector<char> dirichlet;        // axis nodes when m >= 1
    std::vector<int> inner_nodes;       // boundary_arclength order
    std::vector<int> outer_nodes;       // boundary_arclength order

    /// K + p M + m^2 M_hat.
    Eigen::SparseMatrix<double> bilinear() const;
};

AssembledSystem assemble(const Mesh& mesh, FemMode mode, double p);

/// Truncated exterior Dirichlet-to-Neumann map on |x| = L in Galerkin form,
/// T = W diag(mu) W^T, where W(i, j) is the integral over the circle/sphere of
/// the i-th OUTER hat function against the j-th normalized mode.
struct TbcMatrix {
    std::vector<int> outer_nodes;
    Eigen::MatrixXd W;
    Eigen::VectorXd mu;
    std::vector<int> degree;     // n of each mode
    std::vector<int> sine;       // planar: 1 for the sin(n theta) member of a pair
    Eigen::VectorXd surface;     // integral of each OUTER hat function over the sphere/circle
    double L = 0.0;
    FemMode mode;

    Eigen::MatrixXd dense() const;
    /// Normalized mode j at a direction given by a point on or outside |x| = L.
    double mode_value(int j, Vec2 direction) const;
};

TbcMatrix tbc_matrix(const Mesh& mesh, double p, int n_max, FemMode mode);

/// Shared, immutable data of a solve; kept alive by every spectrum.
struct SolveContext {
    std::shared_ptr<const Mesh> mesh;
    AssembledSystem system;
    int n_max = 0;
};

struct SteklovSpectrum {
    double p = 0.0;
    FemMode mode;
    int n_max = 0;
    double L = 0.0;
    std::vector<double> eigenvalues;
    Eigen::MatrixXd traces;        // INNER nodes (system.inner_nodes order) x k
    Eigen::MatrixXd fields;        // all mesh nodes x k
    Eigen::MatrixXd outer_coeffs;  // modes x k
    TbcMatrix tbc;
    std::string sign_convention =
        "integral of v_k over the obstacle boundary >= 0; if below 1e-9 in magnitude, first nonzero trace value > 0";
    std::shared_ptr<const SolveContext> context;

    int size() const { return int(eigenvalues.size()); }
    const Mesh& mesh() const { return *context->mesh; }
    const AssembledSystem& system() const { return context->system; }

    /// Integral of v_k over the obstacle boundary.
    double boundary_integral(int k) const;
    /// Integral of V_k over the computational region.
    double domain_integral(int k) const;
    /// Integral of V_k^2 over the computational region.
    double domain_norm2(int k) const;
    /// Integral of |grad V_k|^2 (+ m^2/r^2 V_k^2) over the computational region.
    double gradient_energy(int k) const;
    /// Integral of V_k over |x| = L.
    double outer_integral(int k) const;
    /// Sum over modes of mu_n |<V_k, psi_n>|^2.
    double tbc_energy(int k) const;
    /// Sum over modes of (d mu_n / dp) |<V_k, psi_n>|^2: the exterior part of d mu_k / dp.
    double tbc_p_derivative(int k) const;
};

struct SolveOptions {
    int n_max = 30;
    int k_max = 10;
    /// Impose the TBC through its inverse (requires mu_0^{(p,L)} > 0).
    bool inverse_tbc = false;
};

/// Assembles once; each `solve` refactors only the p-dependent values.
class SteklovSolver {
public:
    SteklovSolver(const Mesh& mesh, FemMode mode, int n_max, bool inverse_tbc = false);
    ~SteklovSolver();
    SteklovSolver(const SteklovSolver&) = delete;
    SteklovSolver& operator=(const SteklovSolver&) = delete;

    SteklovSpectrum solve(double p, int k_max);
    const Mesh& mesh() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SteklovSpectrum steklov_solve(const Mesh& mesh, FemMode mode, double p, const SolveOptions& options);

/// V_k at points with |x| >= L from the truncated modal expansion.
std::vector<double> extend_exterior(const SteklovSpectrum& spectrum, int k, const std::vector<Vec2>& points);

struct BallValidationReport {
    int d = 2;
    double p = 0.0;
    std::vector<double> exact;
    std::vector<double> computed;
    std::vector<double> rel_error;  // |computed - exact| / max(exact, 1)
    std::vector<double> rmse;       // trace error after projection onto the exact eigenspace
    double seconds = 0.0;
};

/// Solves the exterior of a disk (d = 2) or sphere (d = 3, axisymmetric,
/// offset along z) of radius R and compares with the closed forms.
BallValidationReport validate_against_ball(int d, double R, Vec2 center_offset, double L, double h_max, int n_max,
                                           double p, int k_max = 11);

void write_spectrum_json(std::ostream& out, const SteklovSpectrum& s);
/// (k, mu_k) table.
void write_spectrum_csv(std::ostream& out, const SteklovSpectrum& s);
/// Boundary traces along the obstacle arclength, one column per k.
void write_traces_csv(std::ostream& out, const SteklovSpectrum& s);

}  // namespace steklov
