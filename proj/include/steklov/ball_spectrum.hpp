#pragma once

#include <vector>

namespace steklov {

/// Ball of radius L in R^d, d in {2,3,4,5}.
struct BallSpec {
    int d = 3;
    double L = 1.0;
};

enum class BallRegime { Log2D_n0, Log2D_n1, Sqrt3D, PLogP4D, Linear };

const char* to_string(BallRegime r);

/// Leading small-p behaviour of mu_n^{(p,L)} - mu_n^{(0,L)}.
struct SmallPLaw {
    BallRegime regime = BallRegime::Linear;
    double mu0 = 0.0;
    /// Log2D_n0: unused (mu0 = 0, law below). Log2D_n1 and PLogP4D: L.
    /// Sqrt3D: 1. Linear: L/(2n+d-4).
    double coefficient = 0.0;
    double L = 1.0;

    /// The closed-form approximation of mu at rate p.
    double predict(double p) const;
};

double mu_exterior(const BallSpec& ball, int n, double p);
/// g(r) = k_{n,d}(sqrt(p) r) / k_{n,d}(sqrt(p) L); (L/r)^{n+d-2} at p = 0.
double radial_profile(const BallSpec& ball, int n, double p, double r);
/// Q_n = d mu_n / dp; +infinity at p = 0 when 2n + d <= 4.
double q_norm(const BallSpec& ball, int n, double p);
double mu_interior(const BallSpec& ball, int n, double p);
SmallPLaw small_p_law(const BallSpec& ball, int n);

/// Interior ball radial profile i_{n,d}(sqrt(p) r) / i_{n,d}(sqrt(p) L); (r/L)^n at p = 0,
/// and its r-derivative.
double interior_profile(const BallSpec& ball, int n, double p, double r);
double interior_profile_dr(const BallSpec& ball, int n, double p, double r);
/// r-derivative of radial_profile.
double radial_profile_dr(const BallSpec& ball, int n, double p, double r);

/// Action of the exterior Dirichlet-to-Neumann operator on samples of f on the
/// sphere |x| = L. d = 2: `samples` on the uniform grid theta_j = 2 pi j / N,
/// needs N >= 2 n_max + 1. d = 3 (axisymmetric): samples at the Gauss-Legendre
/// nodes x_j = cos(theta_j) of `gauss_legendre(N)`, needs N >= n_max + 1.
std::vector<double> dtn_apply_ball(const BallSpec& ball, double p, int n_max,
                                   const std::vector<double>& samples);

}  // namespace steklov
