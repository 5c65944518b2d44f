#include "steklov/first_passage.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "steklov/ball_spectrum.hpp"
#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"
#include "steklov/threads.hpp"

namespace steklov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrtPi = std::sqrt(kPi);

// 1/sqrt(pi) - x erfcx(x), which cancels badly for large x.
double erfcx_gap(double x) {
    if (x < 30.0) return 1.0 / kSqrtPi - x * erfcx(x);
    const double u = 1.0 / (2.0 * x * x);
    // alternating asymptotic series, terms (2n-1)!! u^n
    double term = u, sum = 0.0;
    for (int n = 1; n <= 6; ++n) {
        sum += term;
        term *= -(2.0 * n + 1.0) * u;
    }
    return sum / kSqrtPi;
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

void check_nonneg(double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be finite and >= 0");
}

void check_grid(const std::vector<double>& t) {
    for (double v : t) check_positive(v, "time");
}

int nearest_inner_node(const SteklovSpectrum& s, Vec2 x0, double& dist) {
    const auto& inner = s.system().inner_nodes;
    int best = -1;
    dist = kInf;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const Vec2 q = s.mesh().nodes[inner[i]];
        const double d = std::hypot(q.x - x0.x, q.y - x0.y);
        if (d < dist) {
            dist = d;
            best = int(i);
        }
    }
    if (best < 0) throw SolverError("spectrum has no obstacle nodes");
    if (dist > s.mesh().h_max) throw DomainError("starting point is not on the obstacle boundary (distance " +
                                                 std::to_string(dist) + " exceeds h_max)");
    return best;
}

template <class Term>
FptCurve sum_curve(const char* kind, const FptModes& m, const std::vector<double>& t, int used, Term term,
                   double offset = 0.0) {
    FptCurve c;
    c.kind = kind;
    c.t = t;
    c.modes_used = used;
    for (double ti : t) {
        double s = 0.0, last = 0.0;
        for (const FptMode& md : m.modes) {
            last = term(md, ti);
            s += last;
        }
        const double v = offset + s;
        c.values.push_back(v);
        if (v != 0.0) c.last_mode_ratio = std::max(c.last_mode_ratio, std::abs(last) / std::abs(v));
    }
    return c;
}

}  // namespace

FptModes fpt_modes(const SteklovSpectrum& s0, Vec2 x0, double q, int K, const ClassifyOptions& opt) {
    if (!s0.mode.is_axisym())
        throw DomainError("first-passage expansions are implemented for three-dimensional domains only");
    if (s0.mode.m != 0) throw DomainError("first-passage sums need the axisymmetric m = 0 spectrum");
    if (s0.p != 0.0) throw DomainError("first-passage sums need the p = 0 spectrum");
    check_nonneg(q, "q");
    FptModes out;
    out.available = s0.size();
    const int node = nearest_inner_node(s0, x0, out.x0_distance);
    out.x0_node = s0.system().inner_nodes[node];
    out.x0 = s0.mesh().nodes[out.x0_node];

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s0.fields.rows());
    const double bm = ones.dot(s0.system().B * ones);
    int count = s0.size();
    if (K >= 0) {
        count = std::min(K, s0.size());
    } else {
        const double cut = 3.0 * (s0.eigenvalues[0] + q);
        count = 0;
        while (count < s0.size() && s0.eigenvalues[count] <= cut) ++count;
        out.truncation_reached = count < s0.size();
    }
    for (int k = 0; k < count; ++k) {
        FptMode md;
        md.k = k;
        md.mu = s0.eigenvalues[k];
        md.v_x0 = s0.traces(node, k);
        md.integral = s0.boundary_integral(k);
        ClassifyInputs in;
        in.k = k;
        in.d = 3;
        in.mu0 = md.mu;
        in.boundary_integral = md.integral;
        in.boundary_measure = bm;
        const SmallPReport r = classify(in, opt);
        md.a = r.regime == Regime::Sqrt3D ? r.a : 0.0;
        out.modes.push_back(md);
    }
    return out;
}

FptModes sphere_fpt_modes(double L, int n_modes) {
    check_positive(L, "L");
    if (n_modes < 1) throw DomainError("need at least one mode");
    FptModes out;
    out.available = n_modes;
    out.x0 = {0.0, L};
    const double v0 = 1.0 / std::sqrt(4.0 * kPi * L * L);
    for (int n = 0; n < n_modes; ++n) {
        FptMode md;
        md.k = n;
        md.mu = mu_exterior(BallSpec{3, L}, n, 0.0);
        if (n == 0) {
            md.a = small_p_law(BallSpec{3, L}, 0).coefficient;
            md.v_x0 = v0;
            md.integral = 4.0 * kPi * L * L * v0;
        } else {
            // Legendre modes at the pole, orthogonal to constants
            md.v_x0 = std::sqrt((2.0 * n + 1.0) / (4.0 * kPi)) / L;
        }
        out.modes.push_back(md);
    }
    return out;
}

MgfResult mgf_U(const SteklovSpectrum& sp, Vec2 x0, double ell) {
    check_nonneg(ell, "ell");
    double dist;
    const int node = nearest_inner_node(sp, x0, dist);
    MgfResult r;
    double last = 0.0;
    for (int k = 0; k < sp.size(); ++k) {
        last = sp.traces(node, k) * std::exp(-sp.eigenvalues[k] * ell) * sp.boundary_integral(k);
        r.value += last;
    }
    r.last_ratio = r.value != 0.0 ? std::abs(last) / std::abs(r.value) : 0.0;
    r.truncation_warning = r.last_ratio > 1e-6;
    return r;
}

FptCurve pdf_U_longtime(const FptModes& m, double D, double ell, const std::vector<double>& t) {
    check_positive(D, "D");
    check_nonneg(ell, "ell");
    check_grid(t);
    FptModes kept;
    for (const FptMode& md : m.modes)
        if (md.a > 0.0) kept.modes.push_back(md);
    if (kept.modes.empty()) throw DomainError("no mode has a nonzero sqrt(p) coefficient; the long-time law does not apply");
    FptCurve c = sum_curve("U", kept, t, int(kept.modes.size()), [&](const FptMode& md, double ti) {
        return md.a * ell / std::sqrt(4.0 * kPi * D * ti * ti * ti) *
               std::exp(-md.mu * ell - md.a * md.a * ell * ell / (4.0 * D * ti)) * md.weight();
    });
    double vmax = 0.0;
    for (double v : c.values) vmax = std::max(vmax, std::abs(v));
    for (double v : c.values)
        if (v < -1e-9 * vmax) c.flagged = true;
    return c;
}

double pdf_U_tail(const FptModes& m, double D, double ell) {
    check_positive(D, "D");
    double s = 0.0;
    for (const FptMode& md : m.modes)
        if (md.a > 0.0) s += md.a * ell * std::exp(-md.mu * ell) * md.weight();
    return s / std::sqrt(4.0 * kPi * D);
}

FptCurve pdf_Hq_longtime(const FptModes& m, double D, double q, const std::vector<double>& t) {
    check_positive(D, "D");
    check_nonneg(q, "q");
    check_grid(t);
    FptModes kept;
    for (const FptMode& md : m.modes)
        if (md.a > 0.0) kept.modes.push_back(md);
    if (kept.modes.empty()) throw DomainError("no mode has a nonzero sqrt(p) coefficient; the long-time law does not apply");
    FptCurve c = sum_curve("Hq", kept, t, int(kept.modes.size()), [&](const FptMode& md, double ti) {
        if (q == 0.0) return 0.0;
        const double sDt = std::sqrt(D * ti);
        const double x = sDt * (md.mu + q) / md.a;
        return q * D * erfcx_gap(x) / sDt * md.weight() / md.a;
    });
    double vmax = 0.0;
    for (double v : c.values) vmax = std::max(vmax, std::abs(v));
    for (double v : c.values)
        if (v < -1e-9 * vmax) c.flagged = true;
    return c;
}

double pdf_Hq_tail(const FptModes& m, double D, double q) {
    check_positive(D, "D");
    double s = 0.0;
    for (const FptMode& md : m.modes)
        if (md.a > 0.0) s += md.a / ((md.mu + q) * (md.mu + q)) * md.weight();
    return q / std::sqrt(4.0 * kPi * D) * s;
}

FptCurve survival_Sq(const FptModes& m, double D, double q, const std::vector<double>& t) {
    check_positive(D, "D");
    check_nonneg(q, "q");
    check_grid(t);
    FptCurve c = sum_curve(
        "Sq", m, t, int(m.modes.size()),
        [&](const FptMode& md, double ti) {
            if (q == 0.0 || md.weight() == 0.0) return 0.0;
            const double ex = md.a > 0.0 ? erfcx(std::sqrt(D * ti) * (md.mu + q) / md.a) : 0.0;
            return -q * (1.0 - ex) * md.weight() / (md.mu + q);
        },
        1.0);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (c.values[i] < -1e-9 || c.values[i] > 1.0 + 1e-9) c.flagged = true;
        if (i > 0 && c.t[i] > c.t[i - 1] && c.values[i] > c.values[i - 1] + 1e-9) c.flagged = true;
    }
    return c;
}

double survival_Sq_infinity(const FptModes& m, double q) {
    check_nonneg(q, "q");
    double s = 1.0;
    for (const FptMode& md : m.modes) s -= q * md.weight() / (md.mu + q);
    if (s < -1e-3 || s > 1.0 + 1e-3)
        throw ToleranceError("truncated survival limit " + std::to_string(s) + " lies outside [0, 1]; more modes are needed");
    return s;
}

double sphere_mgf_U(double L, double D, double p, double ell) {
    check_positive(L, "L");
    check_positive(D, "D");
    check_nonneg(p, "p");
    check_nonneg(ell, "ell");
    return std::exp(-(1.0 / L + std::sqrt(p / D)) * ell);
}

double sphere_U(double L, double D, double ell, double t) {
    check_positive(t, "t");
    return ell * std::exp(-ell / L - ell * ell / (4.0 * D * t)) / std::sqrt(4.0 * kPi * D * t * t * t);
}

double sphere_U_cdf(double L, double D, double ell, double t) {
    if (t <= 0.0) return ell == 0.0 ? 1.0 : 0.0;
    return std::exp(-ell / L) * std::erfc(ell / (2.0 * std::sqrt(D * t)));
}

double sphere_Hq(double L, double D, double q, double t) {
    check_positive(t, "t");
    const double sDt = std::sqrt(D * t);
    return q * D * erfcx_gap(sDt * (1.0 / L + q)) / sDt;
}

double sphere_Sq(double L, double D, double q, double t) {
    if (t <= 0.0) return 1.0;
    const double k = 1.0 / L + q;
    return 1.0 - q / k * (1.0 - erfcx(std::sqrt(D * t) * k));
}

double sphere_Sq_infinity(double L, double q) { return 1.0 - q / (1.0 / L + q); }

// ---------------------------------------------------------------------------

namespace {

struct WalkerResult {
    double t_ell = kInf;
    double t_react = kInf;
    bool escaped = false;
    long steps = 0;
};

WalkerResult walk(const McOptions& o, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unif;
    const double L = o.L, D = o.D;
    const double dt0 = o.dt * L * L / D;
    const double tmax = o.t_max * L * L / D;
    const double rfar = o.far_radius * L;
    const double smin = std::sqrt(2.0 * D * dt0);

    WalkerResult w;
    const double threshold = o.q > 0.0 ? expo(rng) / o.q : kInf;
    if (o.ell == 0.0) w.t_ell = 0.0;
    double x[3] = {0.0, 0.0, L};
    double t = 0.0, ell = 0.0;
    bool reacted = false;
    for (;;) {
        if (reacted && (w.t_ell < kInf || t >= tmax)) break;
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r > rfar && t >= tmax) {
            // returns to the sphere with probability L / r; only the radius matters
            if (unif(rng) < L / r) {
                for (double& c : x) c *= L / r;
                continue;
            }
            w.escaped = true;
            break;
        }
        const double y = r - L;
        const double sigma = std::max(smin, y / 5.0);
        double xn[3];
        for (int i = 0; i < 3; ++i) xn[i] = x[i] + sigma * gauss(rng);
        const double rn = std::sqrt(xn[0] * xn[0] + xn[1] * xn[1] + xn[2] * xn[2]);
        const double yn = rn - L;
        if (y < 6.0 * sigma || yn < 6.0 * sigma) {
            // minimum of the normal-coordinate Brownian bridge from y to yn
            const double e = expo(rng);
            const double m = 0.5 * (y + yn - std::sqrt((yn - y) * (yn - y) + 2.0 * sigma * sigma * e));
            if (m < 0.0) {
                ell -= m;
                const double target = L + yn - m;
                if (rn > 0.0)
                    for (double& c : xn) c *= target / rn;
            }
        }
        std::copy(xn, xn + 3, x);
        t += sigma * sigma / (2.0 * D);
        ++w.steps;
        if (w.t_ell == kInf && ell > o.ell) w.t_ell = t;
        if (!reacted && ell > threshold) {
            reacted = true;
            w.t_react = t;
        }
    }
    return w;
}

double ks_distance(std::vector<double> samples, long n, double tmax, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    double d = 0.0;
    long i = 0;
    for (double s : samples) {
        if (s > tmax) break;
        const double f = cdf(s);
        d = std::max({d, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
        ++i;
    }
    return std::max(d, std::abs(cdf(tmax) - double(i) / n));
}

}  // namespace

McReport mc_validate_sphere(const McOptions& o) {
    check_positive(o.L, "L");
    check_positive(o.D, "D");
    check_nonneg(o.q, "q");
    check_nonneg(o.ell, "ell");
    check_positive(o.dt, "dt");
    check_positive(o.t_max, "t_max");
    if (o.walkers < 1) throw DomainError("need at least one walker");
    if (!(o.far_radius > 1.0)) throw DomainError("far radius must exceed the sphere radius");
    if (o.dt > 1e-2) throw DomainError("dt above 1e-2 L^2/D is too coarse for the local-time estimator");
    const auto t0 = std::chrono::steady_clock::now();

    const int nt = std::max(1, int(std::min<long>(o.threads > 0 ? o.threads : worker_threads(), o.walkers)));
    struct Part {
        std::vector<double> t_ell, t_react;
        long escaped = 0, reacted = 0, steps = 0;
    };
    std::vector<Part> parts(nt);
    auto run = [&](int id) {
        Part& P = parts[id];
        const long lo = o.walkers * id / nt, hi = o.walkers * (id + 1) / nt;
        for (long i = lo; i < hi; ++i) {
            std::seed_seq seq{std::uint32_t(o.seed), std::uint32_t(o.seed >> 32), std::uint32_t(i),
                              std::uint32_t(std::uint64_t(i) >> 32)};
            std::mt19937_64 rng(seq);
            const WalkerResult w = walk(o, rng);
            P.steps += w.steps;
            if (w.t_ell < kInf) P.t_ell.push_back(w.t_ell);
            if (w.t_react < kInf) {
                P.t_react.push_back(w.t_react);
                ++P.reacted;
            }
            if (w.escaped) ++P.escaped;
        }
    };
    std::vector<std::thread> pool;
    for (int id = 1; id < nt; ++id) pool.emplace_back(run, id);
    run(0);
    for (auto& th : pool) th.join();

    McReport rep;
    rep.options = o;
    std::vector<double> t_ell, t_react;
    for (const Part& P : parts) {
        rep.escaped += P.escaped;
        rep.reacted += P.reacted;
        rep.steps += P.steps;
        t_ell.insert(t_ell.end(), P.t_ell.begin(), P.t_ell.end());
        t_react.insert(t_react.end(), P.t_react.begin(), P.t_react.end());
    }
    const double n = double(o.walkers);
    rep.escape_exact = sphere_Sq_infinity(o.L, o.q);
    rep.escape_fraction = rep.escaped / n;
    rep.escape_sigma = std::sqrt(std::max(rep.escape_exact * (1.0 - rep.escape_exact), 1.0 / n) / n);
    rep.escape_z = (rep.escape_fraction - rep.escape_exact) / rep.escape_sigma;

    const double tmax = o.t_max * o.L * o.L / o.D;
    auto cdf_u = [&](double t) { return sphere_U_cdf(o.L, o.D, o.ell, t); };
    auto cdf_h = [&](double t) { return 1.0 - sphere_Sq(o.L, o.D, o.q, t); };
    rep.ks_U = ks_distance(t_ell, o.walkers, tmax, cdf_u);
    rep.ks_Hq = ks_distance(t_react, o.walkers, tmax, cdf_h);

    std::sort(t_ell.begin(), t_ell.end());
    std::sort(t_react.begin(), t_react.end());
    const double tmin = 10.0 * o.dt * o.L * o.L / o.D;
    const int ng = 100;
    for (int i = 0; i < ng; ++i) {
        const double t = tmin * std::pow(tmax / tmin, double(i) / (ng - 1));
        rep.t_grid.push_back(t);
        rep.cdf_U.push_back(double(std::upper_bound(t_ell.begin(), t_ell.end(), t) - t_ell.begin()) / n);
        rep.cdf_Hq.push_back(double(std::upper_bound(t_react.begin(), t_react.end(), t) - t_react.begin()) / n);
        rep.cdf_U_exact.push_back(cdf_u(t));
        rep.cdf_Hq_exact.push_back(cdf_h(t));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

void write_fpt_csv(std::ostream& out, const FptCurve& c) {
    out.precision(17);
    out << "t," << c.kind << '\n';
    for (std::size_t i = 0; i < c.t.size(); ++i) out << c.t[i] << ',' << c.values[i] << '\n';
}

}  // namespace steklov
