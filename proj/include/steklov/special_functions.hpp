#pragma once

#include <vector>

namespace steklov {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Bessel order stored as twice its value so that half-integers are exact.
struct BesselOrder {
    int twice_nu = 0;

    static constexpr BesselOrder integer(int n) { return {2 * n}; }
    static constexpr BesselOrder half(int twice) { return {twice}; }
    double value() const { return 0.5 * twice_nu; }
    bool is_half_integer() const { return (twice_nu & 1) != 0; }
};

/// e^z K_nu(z). Negative orders fold through K_{-nu} = K_nu.
double bessel_k_scaled(BesselOrder order, double z);
/// K_nu(z); throws OverflowError when the value is not representable.
double bessel_k(BesselOrder order, double z);
/// K_{nu-1}(z) / K_nu(z), evaluated without forming either factor.
double bessel_k_ratio(BesselOrder order, double z);
/// log(e^z K_nu(z)); finite where bessel_k_scaled would overflow.
double log_bessel_k_scaled(BesselOrder order, double z);

/// e^{-z} I_nu(z).
double bessel_i_scaled(BesselOrder order, double z);
double bessel_i(BesselOrder order, double z);
/// I_{nu-1}(z) / I_nu(z).
double bessel_i_ratio(BesselOrder order, double z);

/// A value held as mantissa * e^{-z}; the kernels below report this pair
/// because e^{-z} underflows long before the ratios we need lose meaning.
struct ScaledValue {
    double mantissa;
    double exponent_shift;  // true value = mantissa * exp(-exponent_shift)
    double value() const;
};

/// k_{n,d}(z) = z^{1-d/2} K_{n-1+d/2}(z), d in {2,3,4,5}, n >= -1.
ScaledValue k_nd(int n, int d, double z);
/// k'_{n,d}(z) = -k_{n-1,d}(z) - (n+d-2)/z k_{n,d}(z).
ScaledValue k_nd_prime(int n, int d, double z);
/// i_{n,d}(z) = z^{1-d/2} I_{n-1+d/2}(z); exponent_shift is -z.
ScaledValue i_nd(int n, int d, double z);
/// i'_{n,d}(z) = i_{n-1,d}(z) - (n+d-2)/z i_{n,d}(z).
ScaledValue i_nd_prime(int n, int d, double z);

/// e^{z^2} erfc(z) for z >= 0.
double erfcx(double z);

/// Legendre polynomial P_n(x).
double legendre_p(int n, double x);
/// P_0(x) ... P_nmax(x).
std::vector<double> legendre_all(int n_max, double x);
/// Associated Legendre P_n^m(x) normalized so that
/// 2 pi * int_{-1}^{1} (Pbar_n^m)^2 dx = 1, n = m ... n_max (no Condon-Shortley phase).
std::vector<double> legendre_normalized_all(int m, int n_max, double x);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
GaussRule gauss_legendre(int n);

struct ShapeForCapacity {
    enum class Kind { disk, ellipse, square, equilateral_triangle };
    Kind kind = Kind::disk;
    double a = 1.0;  // radius, first semi-axis, or side
    double b = 0.0;  // second semi-axis (ellipse only)

    static ShapeForCapacity disk(double r) { return {Kind::disk, r, 0.0}; }
    static ShapeForCapacity ellipse(double a, double b) { return {Kind::ellipse, a, b}; }
    static ShapeForCapacity square(double side) { return {Kind::square, side, 0.0}; }
    static ShapeForCapacity triangle(double side) { return {Kind::equilateral_triangle, side, 0.0}; }
};

/// Logarithmic capacity R_c of the shape (a length; R for a disk of radius R).
double log_capacity(const ShapeForCapacity& shape);

}  // namespace steklov
