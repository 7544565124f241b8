#pragma once

// Truncated Taylor arithmetic. A Jet stores the normalized Taylor
// coefficients c_k = f^(k)(x0) / k! of a function around x0, so pushing a
// seed jet (x0, 1, 0, ...) through an expression yields every derivative up
// to kJetCapacity - 1 without finite-difference error.

#include <array>
#include <cmath>
#include <cstddef>

namespace hslab {

inline constexpr int kJetCapacity = 12;

class Jet {
 public:
  Jet() { c_.fill(0.0); }
  explicit Jet(double constant) : Jet() { c_[0] = constant; }

  /// Identity jet at x0: value x0, first derivative 1.
  static Jet variable(double x0) {
    Jet j(x0);
    j.c_[1] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }
  double coefficient(int k) const { return c_[static_cast<std::size_t>(k)]; }
  double& coefficient(int k) { return c_[static_cast<std::size_t>(k)]; }

  /// k-th derivative, k! * c_k.
  double derivative(int k) const {
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return fact * c_[static_cast<std::size_t>(k)];
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < kJetCapacity; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < kJetCapacity; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a += -s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < kJetCapacity; ++k) {
      double s = 0.0;
      for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
      r.c_[k] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < kJetCapacity; ++k) {
      double s = a.c_[k];
      for (int i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }

  friend Jet exp(const Jet& a) {
    Jet r;
    r.c_[0] = std::exp(a.c_[0]);
    for (int k = 1; k < kJetCapacity; ++k) {
      double s = 0.0;
      for (int i = 1; i <= k; ++i) s += i * a.c_[i] * r.c_[k - i];
      r.c_[k] = s / k;
    }
    return r;
  }

  friend Jet log(const Jet& a) {
    Jet r;
    r.c_[0] = std::log(a.c_[0]);
    for (int k = 1; k < kJetCapacity; ++k) {
      double s = k * a.c_[k];
      for (int i = 1; i < k; ++i) s -= i * r.c_[i] * a.c_[k - i];
      r.c_[k] = s / (k * a.c_[0]);
    }
    return r;
  }

 private:
  std::array<double, kJetCapacity> c_;
};

}  // namespace hslab
