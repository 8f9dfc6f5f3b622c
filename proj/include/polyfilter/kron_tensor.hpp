// Kronecker-power algebra, stack operators, symmetric-monomial bookkeeping
// and PSD factorization.
//
// Kronecker slots follow the lexicographic multi-index order produced by
// repeated products: for v (x) w the entry (i, j) lives at i * dim(w) + j.
// vec() stacks columns (column-major), so vec(a * b^T) == b (x) a.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "polyfilter/errors.hpp"

namespace polyfilter {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer power for small dimensions (m^J with m^J well inside int range).
constexpr int ipow(int base, int exp) {
    int out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

/// Binomial coefficient C(n, k) for the small arguments used here.
constexpr long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long out = 1;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

/// J-fold Kronecker power of a base vector, with its shape metadata.
template <typename Scalar>
struct KronVector {
    VectorX<Scalar> data;
    int base_dim = 0;
    int order = 0;

    /// Entry at multi-index (i_1, ..., i_J).
    Scalar at(std::span<const int> index) const {
        Eigen::Index flat = 0;
        for (int i : index) flat = flat * base_dim + i;
        return data(flat);
    }
};

/// Writes v (x) v (x) ... (x) v (J factors) into out, which must have size m^J.
template <typename Derived, typename OutDerived>
void kron_power_into(const Eigen::MatrixBase<Derived>& v, int order,
                     Eigen::MatrixBase<OutDerived>& out) {
    const Eigen::Index m = v.size();
    out(0) = typename Derived::Scalar(1);
    Eigen::Index len = 1;
    for (int j = 0; j < order; ++j) {
        // Expand in place from the back so earlier entries are not overwritten.
        for (Eigen::Index i = len - 1; i >= 0; --i) {
            const auto head = out(i);
            for (Eigen::Index k = m - 1; k >= 0; --k) out(i * m + k) = head * v(k);
        }
        len *= m;
    }
}

template <typename Derived>
KronVector<typename Derived::Scalar> kron_power(const Eigen::MatrixBase<Derived>& v, int order) {
    if (order < 1) throw InvalidArgument("kron_power: order must be >= 1");
    using Scalar = typename Derived::Scalar;
    KronVector<Scalar> out;
    out.base_dim = static_cast<int>(v.size());
    out.order = order;
    out.data.resize(ipow(out.base_dim, order));
    kron_power_into(v, order, out.data);
    return out;
}

/// Kronecker product of two matrices.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
    MatrixX<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-major stack operator.
template <typename Derived>
VectorX<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& m) {
    const MatrixX<typename Derived::Scalar> dense = m;
    return Eigen::Map<const VectorX<typename Derived::Scalar>>(dense.data(), dense.size());
}

/// Inverse of vec(): reshapes a vector of length rows * cols column-major.
template <typename Derived>
MatrixX<typename Derived::Scalar> mat(const Eigen::MatrixBase<Derived>& v, Eigen::Index rows,
                                      Eigen::Index cols) {
    if (v.size() != rows * cols) throw DimensionMismatch("mat: length != rows * cols");
    const VectorX<typename Derived::Scalar> dense = v;
    return Eigen::Map<const MatrixX<typename Derived::Scalar>>(dense.data(), rows, cols);
}

/// Maps each of the m^J Kronecker slots to its symmetric monomial.
///
/// Unique monomials are numbered by their nondecreasing multi-index in
/// lexicographic order, so (m=2, J=2) gives {y1^2, y1 y2, y2^2}.
struct DedupMap {
    int base_dim = 0;
    int order = 0;
    int unique_count = 0;
    std::vector<int> forward;         // slot -> unique id
    std::vector<int> multiplicity;    // unique id -> number of slots
    std::vector<int> representative;  // unique id -> first slot

    int slot_count() const { return static_cast<int>(forward.size()); }

    /// Picks one slot per monomial from a symmetric Kronecker vector.
    template <typename Derived>
    VectorX<typename Derived::Scalar> compress(const Eigen::MatrixBase<Derived>& full) const {
        VectorX<typename Derived::Scalar> out(unique_count);
        for (int u = 0; u < unique_count; ++u) out(u) = full(representative[u]);
        return out;
    }

    /// Copies each monomial value back to every slot it occupies.
    template <typename Derived>
    VectorX<typename Derived::Scalar> expand(const Eigen::MatrixBase<Derived>& unique) const {
        VectorX<typename Derived::Scalar> out(slot_count());
        for (int s = 0; s < slot_count(); ++s) out(s) = unique(forward[s]);
        return out;
    }
};

DedupMap dedup_map(int base_dim, int order);

/// Tolerances of the symmetrize-then-Cholesky factorization.
struct PsdPolicy {
    double indefinite_rel = 1e-12;  // eps_psd = indefinite_rel * trace / n
    double max_jitter_rel = 1e-8;   // jitter stops doubling at max_jitter_rel * trace / n
};

/// Returns C with C C^T == P. Exactly zero rows/columns stay zero in C.
/// Throws IndefiniteMatrix when P cannot be factored after jitter escalation.
Eigen::MatrixXd spd_factor(const Eigen::MatrixXd& P, const PsdPolicy& policy = {});

/// Symmetrizes P and lifts small negative eigenvalues with diagonal jitter.
/// Throws IndefiniteMatrix when the most negative eigenvalue is below
/// -policy.max_jitter_rel * trace / n.
Eigen::MatrixXd enforce_psd(const Eigen::MatrixXd& P, const PsdPolicy& policy = {});

} // namespace polyfilter
