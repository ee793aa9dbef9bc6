#include "qtc/symmetric_subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qtc {

// ------------------------------------------------------------------- Channel

Channel::Channel(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() < 2) throw std::invalid_argument("channel needs d >= 2 coefficients");
  double s = 0;
  for (double c : coeffs_) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw std::invalid_argument("channel coefficients must be real and non-negative");
    s += c * c;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw std::invalid_argument("channel coefficients are not normalized");
}

Channel Channel::maximal(int d) {
  return Channel(std::vector<double>(static_cast<std::size_t>(d), 1.0 / std::sqrt(d)));
}

Channel Channel::rank1(int d) {
  std::vector<double> c(static_cast<std::size_t>(d), 0.0);
  c.at(0) = 1.0;
  return Channel(std::move(c));
}

Channel Channel::normalized(std::vector<double> coeffs, bool* renormalized) {
  double s = 0;
  for (double c : coeffs) s += c * c;
  if (s <= 0) throw std::invalid_argument("channel coefficients are all zero");
  if (renormalized) *renormalized = std::abs(s - 1.0) > 1e-6;
  const double n = std::sqrt(s);
  for (double& c : coeffs) c /= n;
  // re-normalize once more so that the 1e-12 invariant holds after rounding
  s = 0;
  for (double c : coeffs) s += c * c;
  for (double& c : coeffs) c /= std::sqrt(s);
  return Channel(std::move(coeffs));
}

double Channel::operator[](int j) const {
  const int d = this->d();
  return coeffs_[static_cast<std::size_t>(((j % d) + d) % d)];
}

int Channel::rank() const {
  return static_cast<int>(std::count_if(coeffs_.begin(), coeffs_.end(),
                                        [](double c) { return c > kZeroCoefficient; }));
}

bool Channel::is_maximal(double tol) const {
  const double target = 1.0 / std::sqrt(d());
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [&](double c) { return std::abs(c - target) <= tol; });
}

double Channel::c_min() const { return *std::min_element(coeffs_.begin(), coeffs_.end()); }

double Channel::c_min_nonzero() const {
  double best = std::numeric_limits<double>::infinity();
  for (double c : coeffs_)
    if (c > kZeroCoefficient) best = std::min(best, c);
  return best;
}

Channel parse_channel(std::string_view text, int d, std::ostream* warn) {
  if (text == "maximal") return Channel::maximal(d);
  if (text == "rank1") return Channel::rank1(d);
  std::string s(text);
  if (s.rfind("c=", 0) == 0) s = s.substr(2);
  s.erase(std::remove_if(s.begin(), s.end(), [](char ch) { return ch == '[' || ch == ']' || ch == ' '; }),
          s.end());
  std::vector<double> coeffs;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::invalid_argument("channel: empty coefficient in '" + std::string(text) + "'");
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("channel: cannot parse '" + std::string(text) + "'");
    }
    if (used != tok.size()) throw std::invalid_argument("channel: cannot parse '" + std::string(text) + "'");
    coeffs.push_back(v);
  }
  if (static_cast<int>(coeffs.size()) != d) {
    std::ostringstream os;
    os << "channel: expected " << d << " coefficients, got " << coeffs.size();
    throw std::invalid_argument(os.str());
  }
  bool renormalized = false;
  Channel ch = Channel::normalized(std::move(coeffs), &renormalized);
  if (renormalized && warn)
    *warn << "warning: channel coefficients renormalized to " << to_string(ch) << "\n";
  return ch;
}

std::string to_string(const Channel& channel) {
  std::ostringstream os;
  os.precision(17);
  os << "c=[";
  for (int j = 0; j < channel.d(); ++j) os << (j ? "," : "") << channel[j];
  os << "]";
  return os.str();
}

// ----------------------------------------------------------- symmetric basis

std::uint64_t dim_sym(int d, int m) {
  if (d < 2 || m < 1) throw std::invalid_argument("dim_sym: need d >= 2 and M >= 1");
  // binomial(d+M-1, M) built incrementally; each partial product is exact.
  const std::uint64_t n = static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(m) - 1;
  const std::uint64_t k = std::min<std::uint64_t>(static_cast<std::uint64_t>(m), n - static_cast<std::uint64_t>(m));
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n-k+i) is divisible by i; cancel gcd(r, i) first to stay in range.
    const std::uint64_t g = std::gcd(r, i);
    const std::uint64_t factor = (n - k + i) / (i / g);
    if (__builtin_mul_overflow(r / g, factor, &r)) throw std::overflow_error("dim_sym: result exceeds 64 bits");
  }
  return r;
}

namespace {

std::uint64_t ipow(int d, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(d))
      throw MemoryBudgetError("register size overflows 64 bits");
    r *= static_cast<std::uint64_t>(d);
  }
  return r;
}

// Non-decreasing tuples of length m over {0..d-1}, lexicographic.
std::vector<std::vector<int>> multisets(int d, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(m), 0);
  while (true) {
    out.push_back(cur);
    int i = m - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == d - 1) --i;
    if (i < 0) break;
    const int v = cur[static_cast<std::size_t>(i)] + 1;
    for (int k = i; k < m; ++k) cur[static_cast<std::size_t>(k)] = v;
  }
  return out;
}

std::size_t flat_index(const std::vector<int>& digits, int d) {
  std::size_t idx = 0;
  for (int v : digits) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(v);
  return idx;
}

// Amplitude vector of the symmetrized state for one occupation tuple.
CVector symmetrize(const std::vector<int>& occupation, int d) {
  std::vector<int> perm = occupation;
  std::vector<std::size_t> idx;
  do {
    idx.push_back(flat_index(perm, d));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CVector v = CVector::Zero(static_cast<Eigen::Index>(ipow(d, static_cast<int>(occupation.size()))));
  const double a = 1.0 / std::sqrt(static_cast<double>(idx.size()));
  for (auto i : idx) v(static_cast<Eigen::Index>(i)) = a;
  return v;
}

}  // namespace

SymBasis sym_basis(int d, int m, const std::vector<std::string>& labels) {
  const std::uint64_t count = dim_sym(d, m);
  check_memory_budget(static_cast<std::size_t>(ipow(d, m)) * count, "sym_basis");
  std::vector<std::string> names = labels;
  if (names.empty())
    for (int i = 0; i < m; ++i) names.push_back("S" + std::to_string(i + 1));
  if (static_cast<int>(names.size()) != m) throw DimensionError("sym_basis: wrong label count");

  SymBasis basis{d, m, {}, multisets(d, m)};
  for (const auto& occ : basis.occupations)
    basis.states.emplace_back(std::vector<int>(static_cast<std::size_t>(m), d), names, symmetrize(occ, d));
  return basis;
}

std::vector<std::string> ancilla_labels(int m) {
  std::vector<std::string> out;
  for (int i = 1; i < m; ++i) out.push_back("A" + std::to_string(i));
  return out;
}

std::vector<std::string> clone_labels(int m) {
  std::vector<std::string> out;
  for (int i = 1; i <= m; ++i) out.push_back("C" + std::to_string(i));
  return out;
}

CloneBasis clone_basis(int d, int m) {
  const std::uint64_t dm = dim_sym(d, m);
  const std::uint64_t ac_size = ipow(d, 2 * m - 1);
  check_memory_budget(static_cast<std::size_t>(ac_size) * static_cast<std::size_t>(d), "clone_basis");
  const auto sym = sym_basis(d, m);
  const std::size_t a_size = static_cast<std::size_t>(ipow(d, m - 1));
  const std::size_t c_size = static_cast<std::size_t>(ipow(d, m));
  const double prefactor = std::sqrt(static_cast<double>(d) / static_cast<double>(dm));

  std::vector<std::string> labels = ancilla_labels(m);
  for (auto& l : clone_labels(m)) labels.push_back(l);
  const std::vector<int> dims(static_cast<std::size_t>(2 * m - 1), d);

  CloneBasis out{d, m, {}};
  for (int j = 0; j < d; ++j) {
    CVector phi = CVector::Zero(static_cast<Eigen::Index>(ac_size));
    for (const auto& xi : sym.states) {
      // <j|_P on the first slot of the PA register leaves the A part.
      const auto a_part = xi.amps().segment(static_cast<Eigen::Index>(static_cast<std::size_t>(j) * a_size),
                                            static_cast<Eigen::Index>(a_size));
      for (std::size_t a = 0; a < a_size; ++a) {
        const cplx amp = a_part(static_cast<Eigen::Index>(a));
        if (amp == cplx{}) continue;
        phi.segment(static_cast<Eigen::Index>(a * c_size), static_cast<Eigen::Index>(c_size)) +=
            prefactor * amp * xi.amps();
      }
    }
    out.phi.emplace_back(dims, labels, std::move(phi), false);
  }
  return out;
}

StateVector build_channel_state(const Channel& channel, const CloneBasis& basis) {
  if (channel.d() != basis.d) throw DimensionError("channel and clone basis dimensions differ");
  const int d = basis.d;
  const auto& phi0 = basis.phi.front();
  const std::size_t ac = phi0.size();
  check_memory_budget(ac * static_cast<std::size_t>(d), "channel state");
  CVector amps(static_cast<Eigen::Index>(ac * static_cast<std::size_t>(d)));
  for (int j = 0; j < d; ++j)
    amps.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(j) * ac), static_cast<Eigen::Index>(ac)) =
        channel[j] * basis.phi[static_cast<std::size_t>(j)].amps();
  std::vector<int> dims{d};
  dims.insert(dims.end(), phi0.dims().begin(), phi0.dims().end());
  std::vector<std::string> labels{"P"};
  labels.insert(labels.end(), phi0.labels().begin(), phi0.labels().end());
  return StateVector(std::move(dims), std::move(labels), std::move(amps), false);
}

StateVector build_channel_state(const Channel& channel, int m) {
  return build_channel_state(channel, clone_basis(channel.d(), m));
}

}  // namespace qtc
