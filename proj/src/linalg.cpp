#include "qtc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace qtc {

namespace {

std::size_t product(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<std::size_t> positions_of(const StateVector& state,
                                      std::span<const std::string> labels) {
  std::vector<std::size_t> pos;
  pos.reserve(labels.size());
  for (const auto& l : labels) {
    std::size_t p = state.position(l);
    if (std::find(pos.begin(), pos.end(), p) != pos.end())
      throw DimensionError("repeated target label '" + l + "'");
    pos.push_back(p);
  }
  return pos;
}

// targets x rest view of the amplitudes.
CMatrix gather(const CVector& amps, const detail::IndexSplit& split) {
  const auto rows = static_cast<Eigen::Index>(split.target_offsets.size());
  const auto cols = static_cast<Eigen::Index>(split.rest_offsets.size());
  CMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      m(r, c) = amps(static_cast<Eigen::Index>(split.rest_offsets[c] +
                                               split.target_offsets[r]));
  return m;
}

CVector scatter(const CMatrix& m, const detail::IndexSplit& split,
                std::size_t size) {
  CVector amps = CVector::Zero(static_cast<Eigen::Index>(size));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      amps(static_cast<Eigen::Index>(split.rest_offsets[c] +
                                     split.target_offsets[r])) = m(r, c);
  return amps;
}

// Modified Gram-Schmidt step with one re-orthogonalization pass.
void orthogonalize(CVector& v, const std::vector<CVector>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) v -= q.dot(v) * q;
}

}  // namespace

std::size_t memory_budget() {
  if (const char* env = std::getenv("QTC_MEM_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultMemoryBudget;
}

void check_memory_budget(std::size_t amplitudes, const std::string& what) {
  if (amplitudes > memory_budget()) {
    std::ostringstream os;
    os << what << " needs " << amplitudes << " amplitudes, budget is "
       << memory_budget();
    throw MemoryBudgetError(os.str());
  }
}

// ---------------------------------------------------------------- StateVector

StateVector::StateVector(std::vector<int> dims, std::vector<std::string> labels,
                         CVector amps, bool require_normalized)
    : dims_(std::move(dims)), labels_(std::move(labels)), amps_(std::move(amps)) {
  if (dims_.size() != labels_.size())
    throw DimensionError("StateVector: dims and labels differ in length");
  for (int d : dims_)
    if (d < 2) throw DimensionError("StateVector: subsystem dimension < 2");
  std::set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size())
    throw DimensionError("StateVector: duplicate labels");
  if (product(dims_) != static_cast<std::size_t>(amps_.size()))
    throw DimensionError("StateVector: amplitude count does not match dims");
  if (require_normalized && !is_normalized())
    throw std::invalid_argument("StateVector: state is not normalized");
}

StateVector StateVector::basis(int d, int index, std::string label) {
  if (index < 0 || index >= d) throw std::out_of_range("basis index out of range");
  CVector amps = CVector::Zero(d);
  amps(index) = 1.0;
  return StateVector({d}, {std::move(label)}, std::move(amps));
}

StateVector StateVector::single(std::span<const cplx> amps, std::string label,
                                bool normalize) {
  CVector v(static_cast<Eigen::Index>(amps.size()));
  for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = amps[i];
  if (normalize) {
    const double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
    v /= n;
  }
  return StateVector({static_cast<int>(amps.size())}, {std::move(label)}, std::move(v));
}

bool StateVector::is_normalized(double tol) const {
  return std::abs(amps_.norm() - 1.0) <= tol;
}

std::size_t StateVector::position(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DimensionError("unknown subsystem label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

bool StateVector::has_label(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

StateVector StateVector::normalized() const {
  const double n = amps_.norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
  return StateVector(dims_, labels_, amps_ / n);
}

StateVector StateVector::relabeled(std::vector<std::string> labels) const {
  return StateVector(dims_, std::move(labels), amps_, false);
}

// ------------------------------------------------------------------- Operator

Operator::Operator(std::vector<int> d, CMatrix m) : dims(std::move(d)), matrix(std::move(m)) {
  const auto n = static_cast<Eigen::Index>(product(dims));
  if (matrix.rows() != n || matrix.cols() != n)
    throw DimensionError("Operator: matrix shape does not match dims");
}

Operator Operator::identity(std::vector<int> dims) {
  const auto n = static_cast<Eigen::Index>(product(dims));
  return Operator(std::move(dims), CMatrix::Identity(n, n));
}

Operator Operator::operator*(const Operator& rhs) const {
  if (dims != rhs.dims) throw DimensionError("Operator product: dims differ");
  return Operator(dims, matrix * rhs.matrix);
}

bool Operator::is_unitary(double tol) const {
  const CMatrix id = CMatrix::Identity(matrix.rows(), matrix.cols());
  return (matrix.adjoint() * matrix - id).cwiseAbs().maxCoeff() <= tol;
}

bool is_kraus_complete(std::span<const Operator> family, double tol) {
  if (family.empty()) return false;
  CMatrix sum = CMatrix::Zero(family[0].matrix.rows(), family[0].matrix.cols());
  for (const auto& k : family) {
    if (k.dims != family[0].dims) return false;
    sum += k.matrix.adjoint() * k.matrix;
  }
  return (sum - CMatrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() <= tol;
}

// -------------------------------------------------------------- DensityMatrix

bool DensityMatrix::is_hermitian(double tol) const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix);
  return es.eigenvalues().minCoeff();
}

// ----------------------------------------------------------------- operations

namespace detail {

IndexSplit split_index(const std::vector<int>& dims,
                       const std::vector<std::size_t>& target_positions) {
  const std::size_t n = dims.size();
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = n; i-- > 1;) stride[i - 1] = stride[i] * static_cast<std::size_t>(dims[i]);

  auto enumerate = [&](const std::vector<std::size_t>& pos) {
    std::vector<std::size_t> offsets{0};
    for (std::size_t p : pos) {
      std::vector<std::size_t> next;
      next.reserve(offsets.size() * static_cast<std::size_t>(dims[p]));
      for (std::size_t base : offsets)
        for (int v = 0; v < dims[p]; ++v) next.push_back(base + static_cast<std::size_t>(v) * stride[p]);
      offsets = std::move(next);
    }
    return offsets;
  };

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (std::find(target_positions.begin(), target_positions.end(), i) == target_positions.end())
      rest.push_back(i);
  return {enumerate(target_positions), enumerate(rest)};
}

}  // namespace detail

StateVector tensor(const StateVector& a, const StateVector& b) {
  for (const auto& l : b.labels())
    if (a.has_label(l)) throw DimensionError("tensor: label collision on '" + l + "'");
  check_memory_budget(a.size() * b.size(), "tensor");
  CVector amps(static_cast<Eigen::Index>(a.size() * b.size()));
  const auto nb = static_cast<Eigen::Index>(b.size());
  for (Eigen::Index i = 0; i < a.amps().size(); ++i)
    amps.segment(i * nb, nb) = a.amps()(i) * b.amps();
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  std::vector<std::string> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  return StateVector(std::move(dims), std::move(labels), std::move(amps), false);
}

StateVector apply(const Operator& op, const StateVector& state,
                  std::span<const std::string> targets) {
  const auto pos = positions_of(state, targets);
  if (pos.size() != op.dims.size())
    throw DimensionError("apply: operator arity does not match target count");
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (state.dims()[pos[i]] != op.dims[i])
      throw DimensionError("apply: dimension mismatch on '" + targets[i] + "'");
  const auto split = detail::split_index(state.dims(), pos);
  CMatrix out = op.matrix * gather(state.amps(), split);
  return StateVector(state.dims(), state.labels(), scatter(out, split, state.size()), false);
}

StateVector apply(const Operator& op, const StateVector& state,
                  std::initializer_list<std::string> targets) {
  std::vector<std::string> t(targets);
  return apply(op, state, std::span<const std::string>(t));
}

std::vector<MeasurementBranch> measure_projective(
    const StateVector& state, std::span<const std::string> targets,
    std::span<const StateVector> basis) {
  const auto pos = positions_of(state, targets);
  const auto split = detail::split_index(state.dims(), pos);
  const auto tdim = static_cast<Eigen::Index>(split.target_offsets.size());
  if (basis.size() != static_cast<std::size_t>(tdim))
    throw std::invalid_argument("measure_projective: basis does not span the targets");

  CMatrix b(tdim, tdim);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != static_cast<std::size_t>(tdim))
      throw DimensionError("measure_projective: basis vector has wrong dimension");
    b.col(static_cast<Eigen::Index>(i)) = basis[i].amps();
  }
  const CMatrix gram = b.adjoint() * b;
  if ((gram - CMatrix::Identity(tdim, tdim)).cwiseAbs().maxCoeff() > kTol)
    throw std::invalid_argument("measure_projective: basis is not orthonormal");

  const CMatrix m = gather(state.amps(), split);
  const double total = m.squaredNorm();
  std::vector<MeasurementBranch> out;
  out.reserve(basis.size());
  for (Eigen::Index i = 0; i < tdim; ++i) {
    MeasurementBranch br;
    br.outcome = static_cast<std::size_t>(i);
    // rest-space remainder of the projection onto basis vector i
    Eigen::RowVectorXcd rest = b.col(i).adjoint() * m;
    br.probability = rest.squaredNorm() / (total > 0 ? total : 1.0);
    br.zero = br.probability < kZeroProbability;
    if (!br.zero) {
      CMatrix collapsed = b.col(i) * rest;
      collapsed /= std::sqrt(rest.squaredNorm());
      br.post_state = StateVector(state.dims(), state.labels(),
                                  scatter(collapsed, split, state.size()), false);
    }
    out.push_back(std::move(br));
  }
  return out;
}

std::vector<MeasurementBranch> measure_computational(const StateVector& state,
                                                     const std::string& target) {
  const int d = state.dim_of(target);
  std::vector<StateVector> basis;
  for (int k = 0; k < d; ++k) basis.push_back(StateVector::basis(d, k, target));
  const std::string t[] = {target};
  return measure_projective(state, t, basis);
}

DensityMatrix partial_trace(const StateVector& state,
                            std::span<const std::string> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep list");
  const auto pos = positions_of(state, keep);
  const auto split = detail::split_index(state.dims(), pos);
  const CMatrix m = gather(state.amps(), split);
  CMatrix rho = m * m.adjoint();
  const double tr = rho.trace().real();
  if (tr > 0) rho /= tr;
  std::vector<int> dims;
  for (auto p : pos) dims.push_back(state.dims()[p]);
  return {dims, {keep.begin(), keep.end()}, rho};
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            std::span<const std::string> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep list");
  std::vector<std::size_t> pos;
  for (const auto& l : keep) {
    auto it = std::find(rho.labels.begin(), rho.labels.end(), l);
    if (it == rho.labels.end()) throw DimensionError("unknown subsystem label '" + l + "'");
    pos.push_back(static_cast<std::size_t>(it - rho.labels.begin()));
  }
  const auto split = detail::split_index(rho.dims, pos);
  const auto k = static_cast<Eigen::Index>(split.target_offsets.size());
  CMatrix out = CMatrix::Zero(k, k);
  for (std::size_t r : split.rest_offsets)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        out(i, j) += rho.matrix(static_cast<Eigen::Index>(r + split.target_offsets[i]),
                                static_cast<Eigen::Index>(r + split.target_offsets[j]));
  std::vector<int> dims;
  for (auto p : pos) dims.push_back(rho.dims[p]);
  return {dims, {keep.begin(), keep.end()}, out};
}

DensityMatrix projector(const StateVector& psi) {
  return {psi.dims(), psi.labels(), psi.amps() * psi.amps().adjoint()};
}

double fidelity(const StateVector& psi, const DensityMatrix& rho) {
  if (static_cast<Eigen::Index>(psi.size()) != rho.matrix.rows())
    throw DimensionError("fidelity: dimension mismatch");
  return psi.amps().dot(rho.matrix * psi.amps()).real();
}

Operator complete_unitary(
    std::span<const std::pair<StateVector, StateVector>> prescribed, double tol) {
  if (prescribed.empty()) throw std::invalid_argument("complete_unitary: nothing prescribed");
  const std::vector<int> dims = prescribed.front().first.dims();
  const auto n = static_cast<Eigen::Index>(prescribed.front().first.size());
  for (const auto& [in, out] : prescribed)
    if (in.dims() != dims || out.dims() != dims)
      throw DimensionError("complete_unitary: inconsistent dimensions");
  if (prescribed.size() > static_cast<std::size_t>(n))
    throw std::invalid_argument("complete_unitary: rank deficiency (too many inputs)");

  for (std::size_t i = 0; i < prescribed.size(); ++i)
    for (std::size_t j = i; j < prescribed.size(); ++j) {
      const cplx gin = prescribed[i].first.amps().dot(prescribed[j].first.amps());
      const cplx gout = prescribed[i].second.amps().dot(prescribed[j].second.amps());
      if (std::abs(gin - gout) > tol)
        throw std::invalid_argument("complete_unitary: inner-product mismatch, no unitary exists");
    }

  // Orthonormalize inputs; the same linear combinations of outputs are their images.
  std::vector<CVector> qin, qout;
  for (const auto& [in, out] : prescribed) {
    CVector v = in.amps();
    CVector w = out.amps();
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < qin.size(); ++k) {
        const cplx c = qin[k].dot(v);
        v -= c * qin[k];
        w -= c * qout[k];
      }
    const double nv = v.norm();
    if (nv < 1e-8) throw std::invalid_argument("complete_unitary: rank deficiency in prescribed inputs");
    qin.push_back(v / nv);
    qout.push_back(w / nv);
  }
  // Clean up accumulated drift on the image side.
  for (std::size_t k = 0; k < qout.size(); ++k) {
    std::vector<CVector> prev(qout.begin(), qout.begin() + static_cast<std::ptrdiff_t>(k));
    orthogonalize(qout[k], prev);
    qout[k].normalize();
  }

  auto complete = [n](std::vector<CVector>& q) {
    for (Eigen::Index e = 0; e < n && static_cast<Eigen::Index>(q.size()) < n; ++e) {
      CVector v = CVector::Unit(n, e);
      orthogonalize(v, q);
      if (v.norm() > 1e-6) q.push_back(v.normalized());
    }
  };
  complete(qin);
  complete(qout);

  CMatrix a(n, n), b(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a.col(k) = qin[static_cast<std::size_t>(k)];
    b.col(k) = qout[static_cast<std::size_t>(k)];
  }
  return Operator(dims, b * a.adjoint());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

StateVector haar_random_state(int d, std::uint64_t seed, std::string label) {
  if (d < 2) throw DimensionError("haar_random_state: d < 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector v(d);
  for (int i = 0; i < d; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = cplx(re, im);
  }
  v.normalize();
  return StateVector({d}, {std::move(label)}, std::move(v));
}

int numerical_rank(std::span<const StateVector> vectors, double tol) {
  if (vectors.empty()) return 0;
  CMatrix m(static_cast<Eigen::Index>(vectors.front().size()),
            static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = vectors[i].amps();
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  return static_cast<int>((s.array() > tol).count());
}

}  // namespace qtc
