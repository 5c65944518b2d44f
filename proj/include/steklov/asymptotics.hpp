#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "steklov/fem_tbc_solver.hpp"

namespace steklov {

/// Leading small-p law of mu_k(p) - mu_k(0).
enum class Regime { Log2D, PLogP2D, Linear, Sqrt3D, PLogP4D };
const char* to_string(Regime r);

struct LawFit {
    bool valid = false;
    double leading = 0.0;     // fitted coefficient of the regime's leading term
    double next = 0.0;        // fitted coefficient of the next-order term
    double max_rel_dev = 0.0; // max |data - law| / |law| over the fitted points (law without refit)
};

struct SmallPReport {
    int k = 0;
    int d = 2;
    Regime regime = Regime::Linear;
    bool ambiguous = false;   // coefficient within a factor 3 of its threshold
    Regime alternative = Regime::Linear;
    double mu0 = 0.0;
    double c = 0.0;           // angular mean of the far field (real: eigenfunctions are real)
    double d_coef = 0.0;      // circle-moment route
    double d_boundary = 0.0;  // boundary-integral route
    double a = 0.0;
    double b = std::numeric_limits<double>::infinity();
    double b_interior = 0.0;
    double b_tail = 0.0;
    double b_tail_remainder = 0.0;
    double boundary_integral = 0.0;
    double boundary_measure = 0.0;
    std::optional<double> capacity_radius;  // used by the k = 0 planar law
    int cluster_size = 1;
    std::optional<LawFit> fit;

    /// Predicted mu_k(p) - mu_k(0).
    double predict(double p) const;
};

struct ClassifyOptions {
    double tol_c = 1e-3;   // on |c| sqrt(|boundary|)
    double tol_a = 1e-3;   // on |integral of v| / sqrt(|boundary|)
    double tol_d = 1e-3;
    /// Eigenvalues closer than this (relative) form one cluster whose basis is
    /// rotated to diagonalize the leading coefficient form.
    double cluster_rel = 1e-4;
    std::optional<double> capacity_radius;
};

/// Inputs of the classification, so that closed-form spectra can be classified too.
struct ClassifyInputs {
    int k = 0;
    int d = 2;
    double mu0 = 0.0;
    double c = 0.0;
    double d_coef = 0.0;
    double boundary_integral = 0.0;
    double boundary_measure = 1.0;
    double b = std::numeric_limits<double>::infinity();
};
SmallPReport classify(const ClassifyInputs& in, const ClassifyOptions& opt = {});

// Coefficients of a single eigenfunction of a p = 0 spectrum (no cluster rotation).
double coeff_c(const SteklovSpectrum& s0, int k, double L_eval);
double coeff_d(const SteklovSpectrum& s0, int k, double L_eval);
double coeff_d_boundary(const SteklovSpectrum& s0, int k);
double coeff_a(const SteklovSpectrum& s0, int k);
struct NormSplit {
    double interior = 0.0;
    double tail = 0.0;
    double remainder = 0.0;  // estimate of the tail beyond n_max
    double total() const { return interior + tail; }
};
/// Squared norm over the whole exterior, ignoring regime gating; the tail
/// skips the modes whose exterior norm diverges.
NormSplit norm_split(const SteklovSpectrum& s0, int k);
/// +infinity unless the mode is Linear.
double coeff_b(const SteklovSpectrum& s0, int k, const ClassifyOptions& opt = {});

/// Reports for k = 0 .. count-1 with degenerate clusters rotated.
std::vector<SmallPReport> small_p_reports(const SteklovSpectrum& s0, int count, const ClassifyOptions& opt = {});

// ---------------------------------------------------------------------------

struct SweepOptions {
    int k_max = 10;
    int extra = 4;                 // additional pairs solved so branches can be followed
    double overlap_threshold = 0.9;
    int threads = 0;               // 0: worker_threads()
};

struct SweepRow {
    double p = 0.0;
    int branch = 0;
    double mu = 0.0;
    double dmu = 0.0;
    double overlap = 1.0;
    bool flagged = false;
    double predicted = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::vector<double> p_grid;        // as given (descending)
    std::vector<double> mu0;           // branch values at p = 0
    std::vector<SweepRow> rows;        // p descending, branch ascending
    double min_overlap = 1.0;
    bool any_flagged = false;
    std::vector<SmallPReport> reports;

    /// mu_branch(p) - mu_branch(0) in p_grid order.
    std::vector<double> curve(int branch) const;
};

SweepResult p_sweep(const Mesh& mesh, FemMode mode, int n_max, const std::vector<double>& p_grid,
                    const SweepOptions& opt = {}, const ClassifyOptions& copt = {});

/// Least squares of dmu on the regime's leading and next-order terms.
LawFit fit_law(const SmallPReport& r, const std::vector<double>& p, const std::vector<double>& dmu);

// ---------------------------------------------------------------------------

struct IdentityResidual {
    int k = 0;
    double identity1 = 0.0;    // mu int v = p int V + mu_0^{(p,L)} int_{|x|=L} V
    double rayleigh = 0.0;     // mu = energy + exterior sum
    double identity3 = 0.0;    // pair (p, 0)
    double identity4 = 0.0;    // largest over the n = 0, 1 modes, relative to the Cauchy-Schwarz size of the boundary side
    double derivative = std::numeric_limits<double>::quiet_NaN();  // needs a solver
    double identity1_abs = 0.0;
};

/// Residuals, each normalized by the dominant term of its relation.
/// `solver` (same mesh) enables the finite-difference derivative check.
std::vector<IdentityResidual> check_identities(const SteklovSpectrum& sp, const SteklovSpectrum& s0,
                                               SteklovSolver* solver = nullptr, int count = -1);

struct EnvelopeCheck {
    bool pass = true;
    double min_margin = 1.0;     // min over points of (bound - |V|) / bound
    bool fitted_exp_pass = true; // |V| <= C e^{-sqrt(p)|x|} with C from the first point
    std::vector<double> values;
    std::vector<double> bound;
};

/// |V_k(x)| <= max|v_k| * H(|x|), the radial exterior solution equal to one on |x| = L.
EnvelopeCheck decay_envelope_check(const SteklovSpectrum& s, int k, const std::vector<Vec2>& ray);

void write_sweep_csv(std::ostream& out, const SweepResult& r);
void write_reports_json(std::ostream& out, const std::vector<SmallPReport>& reports);

}  // namespace steklov
