#include "qtc/formulas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qtc::formulas {

namespace {

int dim(std::span<const double> c) { return static_cast<int>(c.size()); }

double cs(std::span<const double> c, int i) {
  const int d = dim(c);
  return c[static_cast<std::size_t>(((i % d) + d) % d)];
}

double a2(std::span<const cplx> alpha, int i) {
  const int d = static_cast<int>(alpha.size());
  return std::norm(alpha[static_cast<std::size_t>(((i % d) + d) % d)]);
}

void check_sizes(std::span<const cplx> alpha, std::span<const double> c) {
  if (alpha.size() != c.size() || c.size() < 2)
    throw std::invalid_argument("formulas: alpha and c must both have d >= 2 entries");
}

double moment(int j, int k, int d) {
  return (j == k ? 2.0 : 1.0) / (static_cast<double>(d) * (d + 1));
}

// sum_k |alpha_k|^2 c_{k+m}
double overlap(std::span<const cplx> alpha, std::span<const double> c, int m) {
  double s = 0;
  for (int k = 0; k < dim(c); ++k) s += a2(alpha, k) * cs(c, k + m);
  return s;
}

double c_min(std::span<const double> c) { return *std::min_element(c.begin(), c.end()); }

double c_min_nonzero(std::span<const double> c, int* count) {
  double best = std::numeric_limits<double>::infinity();
  int n = 0;
  for (double v : c)
    if (v > 1e-14) {
      ++n;
      best = std::min(best, v);
    }
  if (count) *count = n;
  return best;
}

double qubit_bracket(cplx a, cplx b, double c1, double c2) {
  const double aa = std::norm(a), bb = std::norm(b);
  return 5 * aa * aa * c1 * c1 + 5 * bb * bb * c2 * c2 + aa * bb * (1 + 8 * c1 * c2);
}

double qubit_norm2(cplx a, cplx b, double c1, double c2) {
  const double den = std::norm(a) * c1 * c1 + std::norm(b) * c2 * c2;
  if (den <= 0) throw std::domain_error("qubit form: vanishing normalization");
  return 2.0 / den;
}

}  // namespace

double f_opt(int d, int m) {
  if (d < 2 || m < 1) throw std::invalid_argument("f_opt: need d >= 2, M >= 1");
  return (2.0 * m + d - 1) / (static_cast<double>(m) + static_cast<double>(m) * d);
}

double f_est(int d) {
  if (d < 2) throw std::invalid_argument("f_est: need d >= 2");
  return 2.0 / (d + 1);
}

double p_m(std::span<const cplx> alpha, std::span<const double> c, int m) {
  check_sizes(alpha, c);
  double s = 0;
  for (int j = 0; j < dim(c); ++j) s += a2(alpha, j) * cs(c, j + m) * cs(c, j + m);
  return s;
}

double f_pe_m(std::span<const cplx> alpha, std::span<const double> c, int m) {
  const double pm = p_m(alpha, c, m);
  if (pm <= 0) throw std::domain_error("f_pe_m: P_m == 0");
  const int d = dim(c);
  const double o = overlap(alpha, c, m);
  return 1.0 / (2.0 * (d + 1)) + (2.0 + d) / (2.0 * (d + 1)) * o * o / pm;
}

double f_pe_avg(std::span<const cplx> alpha, std::span<const double> c) {
  check_sizes(alpha, c);
  const int d = dim(c);
  double s = 0;
  for (int m = 0; m < d; ++m) {
    const double o = overlap(alpha, c, m);
    s += o * o;
  }
  return 1.0 / (2.0 * (d + 1)) + (2.0 + d) / (2.0 * (d + 1)) * s;
}

double f_pe_qubit_printed(cplx a, cplx b, double c1, double c2) {
  return qubit_norm2(a, b, c1, c2) / 12.0 * qubit_bracket(a, b, c1, c2);
}

double p_usd(std::span<const double> c) {
  const double cm = c_min(c);
  if (cm <= 0) throw std::domain_error("p_usd: rank-deficient channel");
  return dim(c) * cm * cm;
}

double fail_weight(std::span<const cplx> alpha, std::span<const double> c, int m, FailWeight w) {
  if (w == FailWeight::kProjection) return p_m(alpha, c, m);
  const double cm2 = c_min(c) * c_min(c);
  double s = 0;
  for (int j = 0; j < dim(c); ++j) s += a2(alpha, j) * (cs(c, j + m) * cs(c, j + m) - cm2);
  return s;
}

double f_fail_m(std::span<const cplx> alpha, std::span<const double> c, int m, FailWeight w) {
  check_sizes(alpha, c);
  if (c_min(c) <= 0) throw std::domain_error("f_fail_m: rank-deficient channel");
  const int d = dim(c);
  const double weight = fail_weight(alpha, c, m, w);
  if (weight <= 0) throw std::domain_error("f_fail_m: vanishing branch weight");
  const double cm2 = c_min(c) * c_min(c);
  double s = 0;
  for (int j = 0; j < d; ++j)
    s += a2(alpha, j + m) * a2(alpha, j) * (2.0 + d) * (cs(c, j + m) * cs(c, j + m) - cm2);
  return 1.0 / (2.0 * (d + 1)) + 1.0 / (2.0 * (d + 1)) * s / weight;
}

double f_fail_avg(int d) { return 1.0 / d; }

double f_fail_avg_haar(std::span<const double> c, FailWeight w) {
  const int d = dim(c);
  const double cm2 = c_min(c) * c_min(c);
  if (c_min(c) <= 0) throw std::domain_error("f_fail_avg_haar: rank-deficient channel");
  // sum_m int W_m F_m = int sum_m W_m / (2(d+1)) + (d+2)/(2(d+1)) sum_{m,j} int |a_{j+m}|^2|a_j|^2 (c_{j+m}^2 - cm2)
  double weight_integral = 0;
  for (int m = 0; m < d; ++m)
    for (int j = 0; j < d; ++j) {
      const double cw = (w == FailWeight::kProjection) ? cs(c, j + m) * cs(c, j + m)
                                                       : cs(c, j + m) * cs(c, j + m) - cm2;
      weight_integral += cw / d;  // int |a_j|^2 = 1/d
    }
  double quartic = 0;
  for (int m = 0; m < d; ++m)
    for (int j = 0; j < d; ++j)
      quartic += moment((j + m) % d, j, d) * (cs(c, j + m) * cs(c, j + m) - cm2);
  const double total = weight_integral / (2.0 * (d + 1)) + (2.0 + d) / (2.0 * (d + 1)) * quartic;
  if (w == FailWeight::kProjection) return total;
  const double fail_probability = 1.0 - d * cm2;
  if (fail_probability <= 0) throw std::domain_error("f_fail_avg_haar: failure branch is empty");
  return total / fail_probability;
}

double f_av(int d, double p_d, int m) { return f_opt(d, m) * p_d + (1.0 - p_d) / d; }

double cmin2_threshold(int d) {
  if (d < 2) throw std::invalid_argument("cmin2_threshold: need d >= 2");
  return 2.0 / (static_cast<double>(d) * (d + 2));
}

double f_me_m(std::span<const cplx> alpha, std::span<const double> c, int m) {
  const double pm = p_m(alpha, c, m);
  if (pm <= 0) throw std::domain_error("f_me_m: P_m == 0");
  const int d = dim(c);
  const double d3 = static_cast<double>(d) * d * d;
  const double o = overlap(alpha, c, m);
  return 1.0 / (2.0 * (d + 1)) / d3 + (2.0 + d) / (2.0 * (d + 1)) / pm / d3 * o * o;
}

double f_me_avg(std::span<const cplx> alpha, std::span<const double> c) {
  check_sizes(alpha, c);
  const int d = dim(c);
  const double d3 = static_cast<double>(d) * d * d;
  double s = 0;
  for (int m = 0; m < d; ++m) {
    const double o = overlap(alpha, c, m);
    s += o * o;
  }
  return 1.0 / (2.0 * (d + 1)) / d3 + (2.0 + d) / (2.0 * (d + 1)) / d3 * s;
}

double f_me_qubit_printed(cplx a, cplx b, double c1, double c2) {
  return qubit_norm2(a, b, c1, c2) / 96.0 * qubit_bracket(a, b, c1, c2);
}

double f_sep_m(std::span<const cplx> alpha, std::span<const double> target, int m) {
  if (c_min(target) <= 0) throw std::invalid_argument("f_sep_m: zero target coefficient");
  return f_pe_m(alpha, target, m);
}

double f_sep_avg(std::span<const cplx> alpha, std::span<const double> target) {
  if (c_min(target) <= 0) throw std::invalid_argument("f_sep_avg: zero target coefficient");
  return f_pe_avg(alpha, target);
}

double f_sep_qubit_printed(cplx a, cplx b, double t1, double t2) {
  return f_pe_qubit_printed(a, b, t1, t2);
}

double p_sep(std::span<const double> c, std::span<const double> target) {
  const double tm = c_min(target);
  if (tm <= 0) throw std::invalid_argument("p_sep: zero target coefficient");
  return c_min(c) * c_min(c) / (tm * tm);
}

double p_sep_orth_paper(std::span<const double> c) { return c_min(c) * c_min(c) / dim(c); }

double mc_confidence(std::span<const double> c) {
  int n = 0;
  c_min_nonzero(c, &n);
  if (n < 2 || n == dim(c)) throw std::invalid_argument("mc_confidence: need 2 <= N < d");
  return static_cast<double>(n) / dim(c);
}

double mc_inconclusive(std::span<const double> c) {
  int n = 0;
  const double cm = c_min_nonzero(c, &n);
  if (n < 2 || n == dim(c)) throw std::invalid_argument("mc_inconclusive: need 2 <= N < d");
  return 1.0 - n * cm * cm;
}

double f_pe_avg_haar(std::span<const double> c) {
  const int d = dim(c);
  double s = 0;
  for (int m = 0; m < d; ++m)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) s += cs(c, j + m) * cs(c, k + m) * moment(j, k, d);
  return 1.0 / (2.0 * (d + 1)) + (2.0 + d) / (2.0 * (d + 1)) * s;
}

}  // namespace qtc::formulas
