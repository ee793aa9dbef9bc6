// Dense complex linear algebra over labeled multi-qudit registers.
//
// Amplitudes are stored row-major in mixed radix: the first label is the most
// significant digit. Every operation is a pure function on immutable values.
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qtc {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Default absolute tolerance for structural comparisons.
inline constexpr double kTol = 1e-10;
/// Branches below this probability are flagged as zero, never dropped.
inline constexpr double kZeroProbability = 1e-14;
/// Default amplitude-count budget (2^26), overridable with QTC_MEM_BUDGET.
inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 26;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MemoryBudgetError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Amplitude budget in effect (QTC_MEM_BUDGET or the default).
std::size_t memory_budget();
/// Throws MemoryBudgetError when `amplitudes` exceeds memory_budget().
void check_memory_budget(std::size_t amplitudes, const std::string& what);

class StateVector {
 public:
  StateVector() = default;
  /// Validates dims/labels/size. Normalization is only enforced when
  /// `require_normalized` is set.
  StateVector(std::vector<int> dims, std::vector<std::string> labels,
              CVector amps, bool require_normalized = true);

  /// Computational basis state |index> of a single qudit.
  static StateVector basis(int d, int index, std::string label);
  /// Single-qudit state from explicit amplitudes (normalized on request).
  static StateVector single(std::span<const cplx> amps, std::string label,
                            bool normalize = false);

  const std::vector<int>& dims() const { return dims_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const CVector& amps() const { return amps_; }
  std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }
  cplx operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amps_.norm(); }
  bool is_normalized(double tol = 1e-12) const;
  /// Position of `label` in the register; throws on unknown labels.
  std::size_t position(const std::string& label) const;
  bool has_label(const std::string& label) const;
  int dim_of(const std::string& label) const { return dims_[position(label)]; }

  StateVector normalized() const;
  StateVector relabeled(std::vector<std::string> labels) const;

 private:
  std::vector<int> dims_;
  std::vector<std::string> labels_;
  CVector amps_;
};

/// Square operator acting on an ordered list of subsystems.
struct Operator {
  std::vector<int> dims;
  CMatrix matrix;

  Operator() = default;
  Operator(std::vector<int> dims, CMatrix matrix);

  static Operator identity(std::vector<int> dims);
  Operator adjoint() const { return {dims, matrix.adjoint()}; }
  Operator operator*(const Operator& rhs) const;
  bool is_unitary(double tol = kTol) const;
};

/// Sum K_i^dagger K_i == I within tol.
bool is_kraus_complete(std::span<const Operator> family, double tol = kTol);

struct DensityMatrix {
  std::vector<int> dims;
  std::vector<std::string> labels;
  CMatrix matrix;

  double trace() const { return matrix.trace().real(); }
  bool is_hermitian(double tol = 1e-12) const;
  double min_eigenvalue() const;
};

/// Kronecker product; labels of `a` precede labels of `b`.
StateVector tensor(const StateVector& a, const StateVector& b);

/// Applies `op` to `targets` (in the order of op.dims), identity elsewhere.
StateVector apply(const Operator& op, const StateVector& state,
                  std::span<const std::string> targets);
StateVector apply(const Operator& op, const StateVector& state,
                  std::initializer_list<std::string> targets);

struct MeasurementBranch {
  std::size_t outcome = 0;
  double probability = 0.0;
  /// True when probability < kZeroProbability; post_state is then empty.
  bool zero = false;
  /// Full register with targets collapsed onto the basis vector, renormalized.
  std::optional<StateVector> post_state;
};

/// Projective measurement of `targets` in an orthonormal basis spanning them.
std::vector<MeasurementBranch> measure_projective(
    const StateVector& state, std::span<const std::string> targets,
    std::span<const StateVector> basis);

/// Computational-basis measurement of a single subsystem.
std::vector<MeasurementBranch> measure_computational(const StateVector& state,
                                                     const std::string& target);

/// Reduced density matrix on `keep` (in the given order).
DensityMatrix partial_trace(const StateVector& state,
                            std::span<const std::string> keep);
DensityMatrix partial_trace(const DensityMatrix& rho,
                            std::span<const std::string> keep);

DensityMatrix projector(const StateVector& psi);

/// <psi|rho|psi>.
double fidelity(const StateVector& psi, const DensityMatrix& rho);

/// Unitary matching every (input, output) prescription, completed on the
/// orthogonal complement. Throws when no unitary exists.
Operator complete_unitary(
    std::span<const std::pair<StateVector, StateVector>> prescribed,
    double tol = kTol);

/// Haar-random single-qudit state (normalized complex Gaussian amplitudes).
StateVector haar_random_state(int d, std::uint64_t seed,
                              std::string label = "X");
/// Seed for sample `index` of a stream rooted at `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Numerical rank of the matrix whose columns are the given vectors.
int numerical_rank(std::span<const StateVector> vectors, double tol = 1e-8);

namespace detail {

/// Flat amplitude offsets splitting a register into targets x rest.
struct IndexSplit {
  std::vector<std::size_t> target_offsets;
  std::vector<std::size_t> rest_offsets;
};

IndexSplit split_index(const std::vector<int>& dims,
                       const std::vector<std::size_t>& target_positions);

}  // namespace detail
}  // namespace qtc
