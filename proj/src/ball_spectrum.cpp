#include "steklov/ball_spectrum.hpp"

#include <cmath>
#include <limits>

#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"

namespace steklov {

namespace {

void check_ball(const BallSpec& ball) {
    if (ball.d < 2 || ball.d > 5) throw DomainError("ball: dimension must be 2..5");
    if (!(ball.L > 0.0)) throw DomainError("ball: radius must be positive");
}

void check_rate(double p) {
    if (!(p >= 0.0)) throw DomainError("ball: rate p must be nonnegative");
}

// k_{n-1,d}(z) / k_{n,d}(z) = K_{nu-1}(z)/K_nu(z) with nu = n - 1 + d/2.
double k_ratio(int n, int d, double z) {
    return bessel_k_ratio(BesselOrder{2 * n - 2 + d}, z);
}

}  // namespace

const char* to_string(BallRegime r) {
    switch (r) {
        case BallRegime::Log2D_n0: return "Log2D_n0";
        case BallRegime::Log2D_n1: return "Log2D_n1";
        case BallRegime::Sqrt3D: return "Sqrt3D";
        case BallRegime::PLogP4D: return "PLogP4D";
        case BallRegime::Linear: return "Linear";
    }
    return "?";
}

double mu_exterior(const BallSpec& ball, int n, double p) {
    check_ball(ball);
    check_rate(p);
    if (n < 0) throw DomainError("mu_exterior: negative degree");
    const double base = (n + ball.d - 2) / ball.L;
    if (p == 0.0) return base;
    const double a = std::sqrt(p);
    return base + a * k_ratio(n, ball.d, a * ball.L);
}

double radial_profile(const BallSpec& ball, int n, double p, double r) {
    check_ball(ball);
    check_rate(p);
    if (r < ball.L) throw DomainError("radial_profile: r < L");
    if (p == 0.0) return std::pow(ball.L / r, n + ball.d - 2);
    const double a = std::sqrt(p);
    const BesselOrder order{2 * n - 2 + ball.d};
    const double log_ratio = log_bessel_k_scaled(order, a * r) - log_bessel_k_scaled(order, a * ball.L);
    return std::pow(r / ball.L, 1.0 - 0.5 * ball.d) * std::exp(log_ratio - a * (r - ball.L));
}

double radial_profile_dr(const BallSpec& ball, int n, double p, double r) {
    const double g = radial_profile(ball, n, p, r);
    if (p == 0.0) return -(n + ball.d - 2) / r * g;
    const double a = std::sqrt(p);
    const double z = a * r;
    return a * (-k_ratio(n, ball.d, z) - (n + ball.d - 2) / z) * g;
}

double q_norm(const BallSpec& ball, int n, double p) {
    check_ball(ball);
    check_rate(p);
    if (p == 0.0) {
        const int den = 2 * n + ball.d - 4;
        if (den <= 0) return std::numeric_limits<double>::infinity();
        return ball.L / den;
    }
    const double a = std::sqrt(p);
    const double rho = k_ratio(n, ball.d, a * ball.L);
    return ((2 * n + ball.d - 2) * rho + a * ball.L * (rho * rho - 1.0)) / (2.0 * a);
}

double mu_interior(const BallSpec& ball, int n, double p) {
    check_ball(ball);
    check_rate(p);
    if (n < 0) throw DomainError("mu_interior: negative degree");
    if (p == 0.0) return n / ball.L;
    const double a = std::sqrt(p);
    return a * bessel_i_ratio(BesselOrder{2 * n - 2 + ball.d}, a * ball.L) - (n + ball.d - 2) / ball.L;
}

double interior_profile(const BallSpec& ball, int n, double p, double r) {
    check_ball(ball);
    check_rate(p);
    if (r < 0.0 || r > ball.L * (1.0 + 1e-12)) throw DomainError("interior_profile: r outside [0, L]");
    if (p == 0.0) return n == 0 ? 1.0 : std::pow(r / ball.L, n);
    const double a = std::sqrt(p);
    const BesselOrder order{2 * n - 2 + ball.d};
    if (r == 0.0) {
        if (n > 0) return 0.0;
        const double nu = order.value();
        const double at0 = std::pow(0.5, nu) / std::tgamma(nu + 1.0);
        return at0 / (std::pow(a * ball.L, 1.0 - 0.5 * ball.d) * bessel_i(order, a * ball.L));
    }
    const double ratio = bessel_i_scaled(order, a * r) / bessel_i_scaled(order, a * ball.L);
    return std::pow(r / ball.L, 1.0 - 0.5 * ball.d) * ratio * std::exp(a * (r - ball.L));
}

double interior_profile_dr(const BallSpec& ball, int n, double p, double r) {
    if (p == 0.0) return n == 0 ? 0.0 : n / r * std::pow(r / ball.L, n);
    const double a = std::sqrt(p);
    const double z = a * r;
    const double lead = bessel_i_ratio(BesselOrder{2 * n - 2 + ball.d}, z) - (n + ball.d - 2) / z;
    return a * lead * interior_profile(ball, n, p, r);
}

double SmallPLaw::predict(double p) const {
    if (p == 0.0) return mu0;
    const double lg = std::log(std::sqrt(p) * L / 2.0) + kEulerGamma;
    switch (regime) {
        case BallRegime::Log2D_n0: return -1.0 / (L * lg);
        case BallRegime::Log2D_n1: return mu0 - coefficient * p * lg;
        case BallRegime::Sqrt3D: return mu0 + coefficient * std::sqrt(p);
        case BallRegime::PLogP4D: return mu0 - coefficient * p * lg;
        case BallRegime::Linear: return mu0 + coefficient * p;
    }
    return mu0;
}

SmallPLaw small_p_law(const BallSpec& ball, int n) {
    check_ball(ball);
    if (n < 0) throw DomainError("small_p_law: negative degree");
    SmallPLaw law;
    law.L = ball.L;
    law.mu0 = (n + ball.d - 2) / ball.L;
    if (ball.d == 2 && n == 0) {
        law.regime = BallRegime::Log2D_n0;
        law.coefficient = 1.0;
    } else if (ball.d == 2 && n == 1) {
        law.regime = BallRegime::Log2D_n1;
        law.coefficient = ball.L;
    } else if (ball.d == 3 && n == 0) {
        law.regime = BallRegime::Sqrt3D;
        law.coefficient = 1.0;
    } else if (ball.d == 4 && n == 0) {
        law.regime = BallRegime::PLogP4D;
        law.coefficient = ball.L;
    } else {
        law.regime = BallRegime::Linear;
        law.coefficient = ball.L / (2 * n + ball.d - 4);
    }
    return law;
}

std::vector<double> dtn_apply_ball(const BallSpec& ball, double p, int n_max,
                                   const std::vector<double>& samples) {
    check_ball(ball);
    check_rate(p);
    const int N = int(samples.size());
    if (n_max < 0) throw DomainError("dtn_apply_ball: negative truncation order");
    std::vector<double> out(samples.size(), 0.0);
    if (ball.d == 2) {
        if (N < 2 * n_max + 1) throw DomainError("dtn_apply_ball: grid too coarse for the truncation order");
        for (int n = 0; n <= n_max; ++n) {
            double c = 0.0;
            double s = 0.0;
            for (int j = 0; j < N; ++j) {
                const double t = 2.0 * kPi * j / N;
                c += samples[j] * std::cos(n * t);
                s += samples[j] * std::sin(n * t);
            }
            const double scale = (n == 0 ? 1.0 : 2.0) / N;
            const double mu = mu_exterior(ball, n, p);
            for (int j = 0; j < N; ++j) {
                const double t = 2.0 * kPi * j / N;
                out[j] += mu * scale * (c * std::cos(n * t) + s * std::sin(n * t));
            }
        }
        return out;
    }
    if (ball.d == 3) {
        if (N < n_max + 1) throw DomainError("dtn_apply_ball: grid too coarse for the truncation order");
        const GaussRule rule = gauss_legendre(N);
        std::vector<std::vector<double>> P(N);
        for (int j = 0; j < N; ++j) P[j] = legendre_all(n_max, rule.x[j]);
        for (int n = 0; n <= n_max; ++n) {
            double c = 0.0;
            for (int j = 0; j < N; ++j) c += rule.w[j] * samples[j] * P[j][n];
            c *= 0.5 * (2 * n + 1);
            const double mu = mu_exterior(ball, n, p);
            for (int j = 0; j < N; ++j) out[j] += mu * c * P[j][n];
        }
        return out;
    }
    throw DomainError("dtn_apply_ball: only d = 2 and axisymmetric d = 3 grids are supported");
}

}  // namespace steklov
