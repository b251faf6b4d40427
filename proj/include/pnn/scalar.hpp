// Scalar types shared by every module: doubles, exact rationals, a prime
// field, and forward-mode dual numbers. Algorithms are templated over the
// scalar so that one code path serves float sweeps and exact certificates.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <boost/multiprecision/cpp_int.hpp>

namespace pnn {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Element of the prime field Z/pZ with p = 2^31 - 1.
class Fp {
 public:
  static constexpr std::uint64_t kModulus = 2147483647ULL;

  constexpr Fp() = default;
  constexpr Fp(long long v)  // NOLINT(google-explicit-constructor)
      : v_(static_cast<std::uint32_t>(((v % static_cast<long long>(kModulus)) +
                                       static_cast<long long>(kModulus)) %
                                      static_cast<long long>(kModulus))) {}

  static constexpr Fp from_raw(std::uint64_t raw) {
    Fp f;
    f.v_ = static_cast<std::uint32_t>(raw % kModulus);
    return f;
  }

  [[nodiscard]] constexpr std::uint32_t value() const { return v_; }

  friend constexpr Fp operator+(Fp a, Fp b) { return from_raw(std::uint64_t{a.v_} + b.v_); }
  friend constexpr Fp operator-(Fp a, Fp b) {
    return from_raw(std::uint64_t{a.v_} + kModulus - b.v_);
  }
  friend constexpr Fp operator*(Fp a, Fp b) { return from_raw(std::uint64_t{a.v_} * b.v_); }
  friend Fp operator/(Fp a, Fp b) { return a * b.inverse(); }
  constexpr Fp operator-() const { return from_raw(kModulus - v_); }
  Fp& operator+=(Fp o) { return *this = *this + o; }
  Fp& operator-=(Fp o) { return *this = *this - o; }
  Fp& operator*=(Fp o) { return *this = *this * o; }
  Fp& operator/=(Fp o) { return *this = *this / o; }
  friend constexpr bool operator==(Fp a, Fp b) { return a.v_ == b.v_; }

  [[nodiscard]] Fp pow(std::uint64_t e) const {
    Fp base = *this;
    Fp acc(1);
    while (e != 0) {
      if ((e & 1U) != 0) acc *= base;
      base *= base;
      e >>= 1U;
    }
    return acc;
  }

  [[nodiscard]] Fp inverse() const {
    if (v_ == 0) throw std::domain_error("Fp: inverse of zero");
    return pow(kModulus - 2);
  }

 private:
  std::uint32_t v_ = 0;
};

/// First-order dual number a + b*eps, eps^2 = 0. Used to differentiate the
/// symbolic coefficient expansion along one weight direction.
template <class T>
struct Dual {
  T value{};
  T deriv{};

  Dual() = default;
  Dual(long long v) : value(v), deriv(0) {}  // NOLINT(google-explicit-constructor)
  Dual(T v, T d) : value(std::move(v)), deriv(std::move(d)) {}

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.deriv + b.deriv}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.deriv - b.deriv}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.value * b.deriv + a.deriv * b.value};
  }
  Dual operator-() const { return {-value, -deriv}; }
  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.value == b.value && a.deriv == b.deriv; }
};

template <class T>
struct is_exact : std::false_type {};
template <>
struct is_exact<Rational> : std::true_type {};
template <>
struct is_exact<Fp> : std::true_type {};
template <class T>
inline constexpr bool is_exact_v = is_exact<T>::value;

/// Integer power by repeated squaring; pow_int(x, 0) == 1 for every x.
template <class T>
T pow_int(const T& base, std::uint64_t e) {
  T acc(1);
  T b = base;
  while (e != 0) {
    if ((e & 1U) != 0) acc *= b;
    e >>= 1U;
    if (e != 0) b *= b;
  }
  return acc;
}

template <class T>
bool is_zero(const T& v) {
  return v == T(0);
}

template <class T>
double to_double(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else if constexpr (std::is_same_v<T, Rational>) {
    return v.template convert_to<double>();
  } else if constexpr (std::is_same_v<T, Fp>) {
    return static_cast<double>(v.value());
  } else {
    return static_cast<double>(v);
  }
}

template <class T>
double magnitude(const T& v) {
  if constexpr (std::is_same_v<T, Fp>) {
    return v == Fp(0) ? 0.0 : 1.0;
  } else {
    return std::abs(to_double(v));
  }
}

/// splitmix64 step; derives independent child seeds from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31U);
}

using Rng = std::mt19937_64;

/// Parses "3", "-2/7", "0.125", "1e-3" into an exact rational.
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& q);
std::string to_string(const Fp& f);
std::string to_string(double d);

/// Checked unsigned arithmetic; throws std::overflow_error instead of wrapping.
std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b);
std::uint64_t checked_add(std::uint64_t a, std::uint64_t b);
/// binom(n, k) with overflow detection.
std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k);
BigInt binomial_big(long long n, long long k);

}  // namespace pnn
