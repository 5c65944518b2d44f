#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>

#include "steklov/errors.hpp"
#include "steklov/special_functions.hpp"

using namespace steklov;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// e^z K_nu(z) = int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt. The integrand is even
// and decays double-exponentially, so the trapezoid rule converges geometrically.
double k_scaled_quadrature(double nu, double z) {
    const double h = 1e-3;
    double sum = 0.5;  // t = 0 term, weight 1/2
    for (int i = 1;; ++i) {
        const double t = i * h;
        const double term = std::exp(-z * (std::cosh(t) - 1.0) + nu * t) * 0.5 * (1.0 + std::exp(-2.0 * nu * t));
        sum += term;
        if (term < 1e-18 * sum && z * (std::cosh(t) - 1.0) > 50.0) break;
    }
    return sum * h;
}

// e^{z^2} erfc(z) = (2/sqrt(pi)) int_0^inf exp(-u^2 - 2 z u) du, composite Gauss on [0, 12].
double erfcx_quadrature(double z) {
    const GaussRule g = gauss_legendre(20);
    double sum = 0.0;
    const int panels = 400;
    const double a = 0.0;
    const double b = 12.0;
    const double w = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = a + (k + 0.5) * w;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double u = c + 0.5 * w * g.x[i];
            sum += 0.5 * w * g.w[i] * std::exp(-u * u - 2.0 * z * u);
        }
    }
    return 2.0 / std::sqrt(kPi) * sum;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const GaussRule g = gauss_legendre(12);
    double s0 = 0.0;
    double s22 = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        s0 += g.w[i];
        s22 += g.w[i] * std::pow(g.x[i], 22);
    }
    CHECK(s0 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s22 == doctest::Approx(2.0 / 23.0).epsilon(1e-13));
}

TEST_CASE("K half-integer closed form") {
    CHECK(bessel_k_scaled(BesselOrder{1}, 2.0) == doctest::Approx(std::sqrt(kPi / 4.0)).epsilon(1e-15));
    // K_{3/2}(z) = K_{1/2}(z)(1 + 1/z)
    CHECK(rel(bessel_k_scaled(BesselOrder{3}, 0.7), std::sqrt(kPi / 1.4) * (1.0 + 1.0 / 0.7)) < 1e-14);
}

TEST_CASE("K ratio at z=1 reproduces the disk exterior value 1.4296") {
    const double r = bessel_k_scaled(BesselOrder::integer(1), 1.0) / bessel_k_scaled(BesselOrder::integer(0), 1.0);
    CHECK(r == doctest::Approx(1.4296).epsilon(1e-4));
    CHECK(rel(bessel_k_ratio(BesselOrder::integer(0), 1.0), r) < 1e-14);
}

TEST_CASE("K against reference values and the integral representation") {
    struct Case { int twice_nu; double z; double ref; };
    // 20-digit references from an arbitrary-precision library.
    const Case cases[] = {
        {0, 1.0, 1.1444630798068950147},   {2, 1.0, 1.6361534862632582465},
        {6, 0.1, 8830.3293732133213085},   {0, 1e-8, 18.536612444976901911},
        {2, 1e-8, 100000000.99999990772},  {0, 700.0, 0.047362369454613572112},
        {10, 700.0, 0.048215104912462455463}, {5, 0.3, 101.44477830906773847},
        {0, 2.0, 0.84156821507077141792},  {2, 2.0, 1.0334768470686885732},
        {0, 1.999, 0.84176019018918333711}, {14, 3.3, 189.61848198833792572},
    };
    for (const Case& c : cases) {
        INFO("twice_nu=" << c.twice_nu << " z=" << c.z);
        CHECK(rel(bessel_k_scaled(BesselOrder{c.twice_nu}, c.z), c.ref) < 1e-12);
    }
    for (int t : {0, 1, 2, 3, 5, 6, 9}) {
        for (double z : {0.1, 0.5, 1.5, 2.5, 7.0, 30.0}) {
            INFO("twice_nu=" << t << " z=" << z);
            CHECK(rel(bessel_k_scaled(BesselOrder{t}, z), k_scaled_quadrature(0.5 * t, z)) < 1e-12);
        }
    }
}

TEST_CASE("K is increasing in the order") {
    for (double z : {1e-3, 0.1, 1.0, 5.0, 50.0}) {
        double prev = bessel_k_scaled(BesselOrder{1}, z);
        for (int t = 2; t <= 40; ++t) {
            const double v = bessel_k_scaled(BesselOrder{t}, z);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("log K agrees with K and survives overflow") {
    CHECK(std::abs(log_bessel_k_scaled(BesselOrder{14}, 3.3) - std::log(189.61848198833792572)) < 1e-13);
    CHECK(std::isfinite(log_bessel_k_scaled(BesselOrder{400}, 1e-4)));
    CHECK_THROWS_AS(bessel_k_scaled(BesselOrder{400}, 1e-4), OverflowError);
}

TEST_CASE("K rejects nonpositive arguments") {
    CHECK_THROWS_AS(bessel_k_scaled(BesselOrder{0}, 0.0), DomainError);
    CHECK_THROWS_AS(bessel_k_scaled(BesselOrder{0}, -1.0), DomainError);
    CHECK_THROWS_AS(bessel_i_scaled(BesselOrder{0}, 0.0), DomainError);
}

TEST_CASE("I reference values") {
    CHECK(rel(bessel_i_scaled(BesselOrder{1}, 1.0), std::exp(-1.0) * std::sqrt(2.0 / kPi) * std::sinh(1.0)) < 1e-14);
    CHECK(rel(bessel_i_scaled(BesselOrder{1}, 1.0), 0.34495131388824462599) < 1e-13);
    CHECK(bessel_i_scaled(BesselOrder{0}, 1e-10) == doctest::Approx(1.0).epsilon(1e-9));
    struct Case { int twice_nu; double z; double ref; };
    const Case cases[] = {
        {0, 1e-4, 0.99990000749958335156}, {4, 5.0, 0.1179519058315114103},
        {7, 20.0, 0.065622315147244113064}, {20, 100.0, 0.024176682718258828365},
        {2, 700.0, 0.015070519444716846949},
    };
    for (const Case& c : cases) {
        INFO("twice_nu=" << c.twice_nu << " z=" << c.z);
        CHECK(rel(bessel_i_scaled(BesselOrder{c.twice_nu}, c.z), c.ref) < 1e-12);
    }
}

TEST_CASE("Wronskian I_nu K_{nu+1} + I_{nu+1} K_nu = 1/z") {
    for (int t = 0; t <= 12; ++t) {
        for (double z : {1e-4, 1e-2, 0.3, 1.0, 2.0, 5.0, 17.0, 60.0, 100.0}) {
            const double w = bessel_i_scaled(BesselOrder{t}, z) * bessel_k_scaled(BesselOrder{t + 2}, z) +
                             bessel_i_scaled(BesselOrder{t + 2}, z) * bessel_k_scaled(BesselOrder{t}, z);
            INFO("twice_nu=" << t << " z=" << z);
            CHECK(std::abs(w * z - 1.0) < 1e-11);
        }
    }
}

TEST_CASE("I ratio matches the ratio of scaled values") {
    for (int t = 1; t <= 9; ++t) {
        for (double z : {0.05, 1.0, 8.0, 40.0}) {
            const double direct = bessel_i_scaled(BesselOrder{t - 2}, z) / bessel_i_scaled(BesselOrder{t}, z);
            CHECK(rel(bessel_i_ratio(BesselOrder{t}, z), direct) < 1e-12);
        }
    }
}

TEST_CASE("k_nd kernels") {
    // k_{0,3}(z) = sqrt(pi/2) e^{-z}/z and -k'/k = 1 + 1/z
    for (double z : {0.2, 1.0, 4.0}) {
        const ScaledValue k = k_nd(0, 3, z);
        CHECK(rel(k.value(), std::sqrt(kPi / 2.0) * std::exp(-z) / z) < 1e-14);
        const ScaledValue kp = k_nd_prime(0, 3, z);
        CHECK(rel(-kp.mantissa / k.mantissa, 1.0 + 1.0 / z) < 1e-14);
    }
    // direct composition
    CHECK(rel(k_nd(1, 4, 0.3).value(), bessel_k(BesselOrder::integer(2), 0.3) / 0.3) < 1e-12);
}

TEST_CASE("k_nd satisfies its ODE") {
    for (int d = 2; d <= 5; ++d) {
        for (int n = 0; n <= 6; ++n) {
            for (double z : {0.4, 1.7, 6.0}) {
                // second derivative: twice Richardson-extrapolated centered difference of k'
                auto kp = [&](double x) { return k_nd_prime(n, d, x).value(); };
                auto D = [&](double h) { return (kp(z + h) - kp(z - h)) / (2.0 * h); };
                auto R = [&](double h) { return (4.0 * D(0.5 * h) - D(h)) / 3.0; };
                const double h = 3e-3 * z;
                const double k2 = (16.0 * R(0.5 * h) - R(h)) / 15.0;
                const double k = k_nd(n, d, z).value();
                const double t1 = (d - 1) / z * kp(z);
                const double t2 = (1.0 + n * (n + d - 2) / (z * z)) * k;
                const double res = k2 + t1 - t2;
                const double scale = std::max({std::abs(k2), std::abs(t1), std::abs(t2)});
                INFO("d=" << d << " n=" << n << " z=" << z);
                CHECK(std::abs(res) < 1e-9 * scale);
            }
        }
    }
}

TEST_CASE("erfcx") {
    CHECK(erfcx(0.0) == 1.0);
    CHECK(erfcx(100.0) * 100.0 * std::sqrt(kPi) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rel(erfcx(1.0), 0.42758357615580700441) < 1e-13);
    CHECK(rel(erfcx(12.0), 0.04685422101489376262) < 1e-13);
    for (double z : {0.1, 1.0, 3.0, 9.9, 10.1}) CHECK(rel(erfcx(z), erfcx_quadrature(z)) < 1e-10);
    double prev = erfcx(0.0);
    for (int i = 1; i < 2000; ++i) {
        const double v = erfcx(0.05 * i);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(erfcx(-0.1), DomainError);
}

TEST_CASE("Legendre polynomials") {
    for (int n = 0; n <= 64; ++n) CHECK(legendre_p(n, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(legendre_p(2, 0.5) == doctest::Approx(-0.125).epsilon(1e-15));
    const GaussRule g = gauss_legendre(10);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * legendre_p(3, g.x[i]) * legendre_p(5, g.x[i]);
    CHECK(std::abs(s) < 1e-12);
    CHECK_THROWS_AS(legendre_p(2, 1.5), DomainError);
}

TEST_CASE("normalized associated Legendre functions are orthonormal") {
    const GaussRule g = gauss_legendre(60);
    for (int m = 0; m <= 3; ++m) {
        std::vector<std::vector<double>> vals;
        for (double x : g.x) vals.push_back(legendre_normalized_all(m, 20, x));
        for (int a = 0; a <= 20 - m; ++a) {
            for (int b = 0; b <= 20 - m; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * vals[i][a] * vals[i][b];
                CHECK(std::abs(2.0 * kPi * s - (a == b ? 1.0 : 0.0)) < 1e-12);
            }
        }
    }
}

TEST_CASE("logarithmic capacities") {
    // 30-digit reference constants
    const double gamma_quarter = 3.62560990822190831193068515587;
    const double gamma_third = 2.67893853470774763365569294097;
    CHECK(rel(std::tgamma(0.25), gamma_quarter) < 1e-14);
    CHECK(rel(std::tgamma(1.0 / 3.0), gamma_third) < 1e-14);
    CHECK(log_capacity(ShapeForCapacity::disk(1.0)) == 1.0);
    CHECK(log_capacity(ShapeForCapacity::ellipse(1.0, 0.5)) == doctest::Approx(0.75));
    CHECK(rel(log_capacity(ShapeForCapacity::square(2.0)), 1.18034059901609622604533794056) < 1e-10);
    CHECK(log_capacity(ShapeForCapacity::square(2.0)) == doctest::Approx(1.1804).epsilon(1e-4));
    // Regular 3-gon through the Schwarz-Christoffel side-length integral
    // side = 2^{2/3} (2/3) int_0^pi sin^{2/3} u du for unit capacity.
    const GaussRule g = gauss_legendre(40);
    double I = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double a = kPi * k / 200.0;
        const double w = kPi / 200.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double u = a + 0.5 * w * (1.0 + g.x[i]);
            I += 0.5 * w * g.w[i] * std::pow(std::sin(u), 2.0 / 3.0);
        }
    }
    const double side_for_unit_capacity = std::pow(2.0, 2.0 / 3.0) * (2.0 / 3.0) * I;
    CHECK(rel(log_capacity(ShapeForCapacity::triangle(1.0)), 1.0 / side_for_unit_capacity) < 1e-6);
    CHECK_THROWS_AS(log_capacity(ShapeForCapacity::disk(0.0)), DomainError);
}
