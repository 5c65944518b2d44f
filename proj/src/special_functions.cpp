#include "steklov/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "steklov/errors.hpp"

namespace steklov {

namespace {

constexpr double kEps = 1e-16;

void require_positive(double z, const char* who) {
    if (!(z > 0.0)) throw DomainError(std::string(who) + ": argument must be positive");
}

// e^z K_0(z) and e^z K_1(z). Temme's series below 2, Steed's continued
// fraction above (both as in the classic bessik routine, specialised to mu = 0).
void k01_scaled(double x, double& k0, double& k1) {
    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double d = -std::log(x2);
        // mu = 0: gam1 = -gamma, gam2 = 1, 1/Gamma(1 +- mu) = 1.
        double ff = -kEulerGamma + d;
        double sum = ff;
        double p = 0.5;
        double q = 0.5;
        double c = 1.0;
        const double dd = x2 * x2;
        double sum1 = p;
        for (int i = 1; i < 500; ++i) {
            ff = (i * ff + p + q) / (double(i) * i);
            c *= dd / i;
            p /= i;
            q /= i;
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        const double e = std::exp(x);
        k0 = sum * e;
        k1 = sum1 * (2.0 / x) * e;
        return;
    }
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 100000; ++i) {
        a -= 2 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    h = a1 * h;
    k0 = std::sqrt(kPi / (2.0 * x)) / s;
    k1 = k0 * (x + 0.5 - h) / x;
}

// I_nu / I_{nu-1} by the continued fraction 1/(2nu/z + 1/(2(nu+1)/z + ...)), modified Lentz.
double i_forward_ratio(double nu, double z) {
    const double tiny = 1e-300;
    double f = tiny;
    double C = f;
    double D = 0.0;
    for (int j = 0; j < 200000; ++j) {
        const double bj = 2.0 * (nu + j) / z;
        D = bj + D;
        if (D == 0.0) D = tiny;
        C = bj + 1.0 / C;
        if (C == 0.0) C = tiny;
        D = 1.0 / D;
        const double delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return f;
}

double i_series_scaled(double nu, double z) {
    const double half = 0.5 * z;
    const double q = half * half;
    double term = std::pow(half, nu) / std::tgamma(nu + 1.0);
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < sum * kEps) break;
    }
    return sum * std::exp(-z);
}

// Miller's downward recurrence. Integer orders normalise with
// e^{-z}(I_0 + 2 sum I_k) = 1, half-integer orders with the closed form of I_{1/2}.
double i_miller_scaled(int twice_nu, double z) {
    const bool half = (twice_nu & 1) != 0;
    const double nu = 0.5 * twice_nu;
    const double big = std::max(nu, z);
    const int top = int(big + 40.0 + 10.0 * std::sqrt(big)) + 2;
    const double base = half ? 0.5 : 0.0;
    double b_next = 0.0;
    double b = 1.0;
    double sum = 0.0;
    double wanted = 0.0;
    for (int k = top; k >= 1; --k) {
        const double order = base + k;
        if (std::abs(order - nu) < 0.25) wanted = b;
        if (!half) sum += 2.0 * b;
        const double b_prev = (2.0 * order / z) * b + b_next;
        b_next = b;
        b = b_prev;
        if (std::abs(b) > 1e200) {
            b *= 1e-200;
            b_next *= 1e-200;
            sum *= 1e-200;
            wanted *= 1e-200;
        }
    }
    // b now holds order `base`.
    if (std::abs(base - nu) < 0.25) wanted = b;
    if (!half) {
        sum += b;
        return wanted / sum;
    }
    const double i_half = std::sqrt(2.0 / (kPi * z)) * 0.5 * (-std::expm1(-2.0 * z));
    return wanted / b * i_half;
}

}  // namespace

double ScaledValue::value() const {
    return mantissa * std::exp(-exponent_shift);
}

double bessel_k_scaled(BesselOrder order, double z) {
    require_positive(z, "bessel_k_scaled");
    int t = std::abs(order.twice_nu);
    double prev;
    double cur;
    double nu;
    if (t & 1) {
        prev = std::sqrt(kPi / (2.0 * z));  // K_{-1/2}
        cur = prev;                          // K_{1/2}
        nu = 0.5;
    } else {
        k01_scaled(z, prev, cur);  // K_0, K_1
        if (t == 0) return prev;
        nu = 1.0;
    }
    while (2.0 * nu < t - 0.5) {
        const double next = prev + (2.0 * nu / z) * cur;
        prev = cur;
        cur = next;
        nu += 1.0;
    }
    if (!std::isfinite(cur)) throw OverflowError("bessel_k_scaled: overflow");
    return cur;
}

double bessel_k(BesselOrder order, double z) {
    const double s = bessel_k_scaled(order, z);
    const double v = s * std::exp(-z);
    if (!std::isfinite(v)) throw OverflowError("bessel_k: value not representable");
    if (v == 0.0) throw OverflowError("bessel_k: value underflows");
    return v;
}

double bessel_k_ratio(BesselOrder order, double z) {
    require_positive(z, "bessel_k_ratio");
    const int t = order.twice_nu;
    if (t < 0) {
        // K_{nu-1}/K_nu with nu < 0 equals K_{|nu|+1}/K_{|nu|}.
        return 1.0 / bessel_k_ratio(BesselOrder{-t + 2}, z);
    }
    double r;
    double nu;
    if (t & 1) {
        r = 1.0;  // K_{-1/2}/K_{1/2}
        nu = 0.5;
    } else {
        double k0;
        double k1;
        k01_scaled(z, k0, k1);
        if (t == 0) return k1 / k0;
        r = k0 / k1;
        nu = 1.0;
    }
    // r_{nu+1} = K_nu/K_{nu+1} = 1/(r_nu + 2nu/z)
    while (2.0 * nu < t - 0.5) {
        r = 1.0 / (r + 2.0 * nu / z);
        nu += 1.0;
    }
    return r;
}

double log_bessel_k_scaled(BesselOrder order, double z) {
    require_positive(z, "log_bessel_k_scaled");
    const int t = std::abs(order.twice_nu);
    double logk;
    double r;
    double nu;
    if (t & 1) {
        logk = 0.5 * std::log(kPi / (2.0 * z));
        r = 1.0;
        nu = 0.5;
    } else {
        double k0;
        double k1;
        k01_scaled(z, k0, k1);
        if (t == 0) return std::log(k0);
        logk = std::log(k1);
        r = k0 / k1;
        nu = 1.0;
    }
    while (2.0 * nu < t - 0.5) {
        r = 1.0 / (r + 2.0 * nu / z);  // K_nu / K_{nu+1}
        logk -= std::log(r);
        nu += 1.0;
    }
    return logk;
}

double bessel_i_scaled(BesselOrder order, double z) {
    require_positive(z, "bessel_i_scaled");
    const int t = std::abs(order.twice_nu);
    if (t == 1) {
        if (order.twice_nu == -1) return std::sqrt(2.0 / (kPi * z)) * 0.5 * (1.0 + std::exp(-2.0 * z));
        return std::sqrt(2.0 / (kPi * z)) * 0.5 * (-std::expm1(-2.0 * z));
    }
    if (order.twice_nu < 0 && (t & 1)) {
        throw DomainError("bessel_i_scaled: negative half-integer orders other than -1/2 are not supported");
    }
    if (z <= 1.0) return i_series_scaled(0.5 * t, z);
    return i_miller_scaled(t, z);
}

double bessel_i(BesselOrder order, double z) {
    const double v = bessel_i_scaled(order, z) * std::exp(z);
    if (!std::isfinite(v)) throw OverflowError("bessel_i: value not representable");
    return v;
}

double bessel_i_ratio(BesselOrder order, double z) {
    require_positive(z, "bessel_i_ratio");
    const double nu = order.value();
    if (order.twice_nu == 0) return i_forward_ratio(1.0, z);  // I_{-1}/I_0 = I_1/I_0
    if (nu < 0.0) throw DomainError("bessel_i_ratio: negative order");
    return 1.0 / i_forward_ratio(nu, z);
}

namespace {
void check_dim(int d, const char* who) {
    if (d < 2 || d > 5) throw DomainError(std::string(who) + ": dimension must be 2..5");
}
}  // namespace

ScaledValue k_nd(int n, int d, double z) {
    check_dim(d, "k_nd");
    require_positive(z, "k_nd");
    if (n < -1) throw DomainError("k_nd: degree below -1");
    const BesselOrder order{2 * n - 2 + d};
    return {std::pow(z, 1.0 - 0.5 * d) * bessel_k_scaled(order, z), z};
}

ScaledValue k_nd_prime(int n, int d, double z) {
    if (n < 0) throw DomainError("k_nd_prime: degree must be nonnegative");
    const ScaledValue km1 = k_nd(n - 1, d, z);
    const ScaledValue k = k_nd(n, d, z);
    return {-km1.mantissa - (n + d - 2) / z * k.mantissa, z};
}

ScaledValue i_nd(int n, int d, double z) {
    check_dim(d, "i_nd");
    require_positive(z, "i_nd");
    if (n < -1) throw DomainError("i_nd: degree below -1");
    const int t = 2 * n - 2 + d;
    // I_{-1} = I_1 for the integer case; I_{-1/2} handled in bessel_i_scaled.
    return {std::pow(z, 1.0 - 0.5 * d) * bessel_i_scaled(BesselOrder{t}, z), -z};
}

ScaledValue i_nd_prime(int n, int d, double z) {
    if (n < 0) throw DomainError("i_nd_prime: degree must be nonnegative");
    const ScaledValue im1 = i_nd(n - 1, d, z);
    const ScaledValue i = i_nd(n, d, z);
    return {im1.mantissa - (n + d - 2) / z * i.mantissa, -z};
}

double erfcx(double z) {
    if (!(z >= 0.0)) throw DomainError("erfcx: argument must be nonnegative");
    if (z < 10.0) return std::exp(z * z) * std::erfc(z);
    // erfc(z) e^{z^2} sqrt(pi) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))), Lentz.
    const double tiny = 1e-300;
    double f = z;
    double C = f;
    double D = 0.0;
    for (int j = 1; j < 1000; ++j) {
        const double a = 0.5 * j;
        D = z + a * D;
        if (D == 0.0) D = tiny;
        C = z + a / C;
        if (C == 0.0) C = tiny;
        D = 1.0 / D;
        const double delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return 1.0 / (f * std::sqrt(kPi));
}

double legendre_p(int n, double x) {
    if (!(std::abs(x) <= 1.0)) throw DomainError("legendre_p: |x| > 1");
    if (n < 0) throw DomainError("legendre_p: negative degree");
    double p0 = 1.0;
    if (n == 0) return p0;
    double p1 = x;
    for (int k = 1; k < n; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
    }
    if (std::abs(p1) > 1.0 + 1e-12) throw Error("legendre_p: recurrence left [-1, 1]");
    return p1;
}

std::vector<double> legendre_all(int n_max, double x) {
    if (!(std::abs(x) <= 1.0)) throw DomainError("legendre_all: |x| > 1");
    std::vector<double> p(std::size_t(n_max) + 1);
    p[0] = 1.0;
    if (n_max >= 1) p[1] = x;
    for (int k = 1; k < n_max; ++k) p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
    return p;
}

std::vector<double> legendre_normalized_all(int m, int n_max, double x) {
    if (!(std::abs(x) <= 1.0)) throw DomainError("legendre_normalized_all: |x| > 1");
    if (m < 0 || n_max < m) throw DomainError("legendre_normalized_all: need 0 <= m <= n_max");
    std::vector<double> out(std::size_t(n_max - m) + 1);
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = std::sqrt(1.0 / (4.0 * kPi));
    for (int i = 1; i <= m; ++i) pmm *= std::sqrt((2.0 * i + 1.0) / (2.0 * i)) * s;
    out[0] = pmm;
    if (n_max == m) return out;
    out[1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int n = m + 2; n <= n_max; ++n) {
        const double nn = n;
        const double a = std::sqrt((4.0 * nn * nn - 1.0) / (nn * nn - double(m) * m));
        const double b = std::sqrt(((nn - 1.0) * (nn - 1.0) - double(m) * m) / (4.0 * (nn - 1.0) * (nn - 1.0) - 1.0));
        out[n - m] = a * (x * out[n - m - 1] - b * out[n - m - 2]);
    }
    return out;
}

GaussRule gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 1; k < n; ++k) {
            const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.x[i] = -x;
        rule.x[n - 1 - i] = x;
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    return rule;
}

double log_capacity(const ShapeForCapacity& shape) {
    if (!(shape.a > 0.0)) throw DomainError("log_capacity: lengths must be positive");
    switch (shape.kind) {
        case ShapeForCapacity::Kind::disk:
            return shape.a;
        case ShapeForCapacity::Kind::ellipse:
            if (!(shape.b > 0.0)) throw DomainError("log_capacity: lengths must be positive");
            return 0.5 * (shape.a + shape.b);
        case ShapeForCapacity::Kind::square: {
            const double g = std::tgamma(0.25);
            return g * g / (4.0 * std::pow(kPi, 1.5)) * shape.a;
        }
        case ShapeForCapacity::Kind::equilateral_triangle: {
            // Schwarz-Christoffel value for the regular 3-gon: sqrt(3) Gamma(1/3)^3 / (8 pi^2).
            const double g = std::tgamma(1.0 / 3.0);
            return std::sqrt(3.0) * g * g * g / (8.0 * kPi * kPi) * shape.a;
        }
    }
    return 0.0;
}

}  // namespace steklov
