#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "steklov/asymptotics.hpp"

namespace steklov {

/// One term of the spectral sums: starting value and boundary integral of a
/// p = 0 eigenfunction, with its limit eigenvalue and sqrt(p) coefficient.
struct FptMode {
    int k = 0;
    double mu = 0.0;
    double a = 0.0;         // zero for modes outside the sqrt(p) regime
    double v_x0 = 0.0;
    double integral = 0.0;  // of v over the obstacle boundary
    double weight() const { return v_x0 * integral; }
};

struct FptModes {
    std::vector<FptMode> modes;
    int available = 0;           // modes in the source spectrum
    bool truncation_reached = true;  // false when the default cutoff ran past the spectrum
    int x0_node = -1;
    Vec2 x0{0.0, 0.0};           // the snapped starting point
    double x0_distance = 0.0;
};

/// Terms for a three-dimensional p = 0 spectrum. x0 is snapped to the nearest
/// obstacle node and must lie within h_max of the boundary. K < 0 keeps every
/// mode with mu_k <= 3 (mu_0 + q).
FptModes fpt_modes(const SteklovSpectrum& s0, Vec2 x0, double q, int K = -1, const ClassifyOptions& opt = {});

/// Closed-form terms for a sphere of radius L started on its surface: only
/// n = 0 has a nonzero boundary integral.
FptModes sphere_fpt_modes(double L, int n_modes = 8);

struct FptCurve {
    std::string kind;  // "U", "Hq", "Sq"
    std::vector<double> t;
    std::vector<double> values;
    double last_mode_ratio = 0.0;  // max over the grid of |last term| / |sum|
    bool flagged = false;          // sign or monotonicity violated beyond truncation tolerance
    int modes_used = 0;
};

struct MgfResult {
    double value = 0.0;
    double last_ratio = 0.0;
    bool truncation_warning = false;  // last term above 1e-6 of the sum
};

/// <exp(-p T_ell)> from a spectrum solved at rate p/D, started at the obstacle
/// node nearest x0.
MgfResult mgf_U(const SteklovSpectrum& sp, Vec2 x0, double ell);

FptCurve pdf_U_longtime(const FptModes& m, double D, double ell, const std::vector<double>& t);
/// Coefficient C of the t^{-3/2} tail, U ~ C t^{-3/2}.
double pdf_U_tail(const FptModes& m, double D, double ell);
FptCurve pdf_Hq_longtime(const FptModes& m, double D, double q, const std::vector<double>& t);
double pdf_Hq_tail(const FptModes& m, double D, double q);
FptCurve survival_Sq(const FptModes& m, double D, double q, const std::vector<double>& t);
/// Throws ToleranceError when the truncated sum leaves [0, 1] by more than 1e-3.
double survival_Sq_infinity(const FptModes& m, double q);

// Sphere of radius L, start on the surface; exact at every t.
double sphere_mgf_U(double L, double D, double p, double ell);
double sphere_U(double L, double D, double ell, double t);
double sphere_U_cdf(double L, double D, double ell, double t);
double sphere_Hq(double L, double D, double q, double t);
double sphere_Sq(double L, double D, double q, double t);
double sphere_Sq_infinity(double L, double q);

struct McOptions {
    double L = 1.0;
    double q = 1.0;
    double ell = 1.0;
    double D = 1.0;
    long walkers = 100000;
    double dt = 1e-4;           // smallest step, in units of L^2/D
    double t_max = 50.0;        // histogram window, in units of L^2/D
    double far_radius = 10.0;   // in units of L
    std::uint64_t seed = 1;
    int threads = 0;            // 0: worker_threads()
};

struct McReport {
    McOptions options;
    long escaped = 0;
    long reacted = 0;
    double escape_fraction = 0.0;
    double escape_sigma = 0.0;      // binomial standard error
    double escape_exact = 0.0;      // S_q(infinity)
    double escape_z = 0.0;          // (fraction - exact) / sigma
    double ks_U = 0.0;              // sup |empirical - exact| CDF of T_ell on [0, t_max]
    double ks_Hq = 0.0;             // same for the reaction time
    std::vector<double> t_grid;
    std::vector<double> cdf_U, cdf_U_exact, cdf_Hq, cdf_Hq_exact;
    long steps = 0;
    double seconds = 0.0;

    bool escape_ok() const { return std::abs(escape_z) <= 3.0; }
};

/// Reflected Brownian motion outside a sphere, started on its surface, with the
/// boundary local time accumulated per step from the exact half-space bridge
/// minimum; reaction when the local time exceeds an Exp(q) threshold.
/// Results depend only on the seed, not on the thread count.
McReport mc_validate_sphere(const McOptions& opt);

void write_fpt_csv(std::ostream& out, const FptCurve& c);

}  // namespace steklov
