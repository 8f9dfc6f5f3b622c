#include "polyfilter/kron_tensor.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>

namespace polyfilter {

DedupMap dedup_map(int base_dim, int order) {
    if (base_dim < 1 || order < 1) throw InvalidArgument("dedup_map: base_dim and order must be >= 1");

    DedupMap map;
    map.base_dim = base_dim;
    map.order = order;

    // Nondecreasing multi-indices in lexicographic order define the ids.
    std::map<std::vector<int>, int> ids;
    std::vector<int> tuple(order, 0);
    while (true) {
        ids.emplace(tuple, static_cast<int>(ids.size()));
        int pos = order - 1;
        while (pos >= 0 && tuple[pos] == base_dim - 1) --pos;
        if (pos < 0) break;
        ++tuple[pos];
        for (int k = pos + 1; k < order; ++k) tuple[k] = tuple[pos];
    }
    map.unique_count = static_cast<int>(ids.size());
    map.multiplicity.assign(map.unique_count, 0);
    map.representative.assign(map.unique_count, -1);

    const int slots = ipow(base_dim, order);
    map.forward.resize(slots);
    std::vector<int> index(order);
    for (int s = 0; s < slots; ++s) {
        int rest = s;
        for (int k = order - 1; k >= 0; --k) {
            index[k] = rest % base_dim;
            rest /= base_dim;
        }
        std::vector<int> key = index;
        std::sort(key.begin(), key.end());
        const int id = ids.at(key);
        map.forward[s] = id;
        if (map.multiplicity[id]++ == 0) map.representative[id] = s;
    }
    return map;
}

Eigen::MatrixXd spd_factor(const Eigen::MatrixXd& P, const PsdPolicy& policy) {
    if (P.rows() != P.cols()) throw DimensionMismatch("spd_factor: matrix must be square");
    const Eigen::Index n = P.rows();
    const Eigen::MatrixXd sym = 0.5 * (P + P.transpose());

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(sym.row(i).array() == 0.0).all()) active.push_back(i);

    Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(n, n);
    if (active.empty()) return factor;

    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = sym(active[i], active[j]);

    const double scale = sub.trace() / static_cast<double>(k);
    if (!(scale > 0.0)) throw IndefiniteMatrix("spd_factor: non-positive trace");
    const double eps = policy.indefinite_rel * scale;
    const double max_jitter = policy.max_jitter_rel * scale;

    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) {
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                   sub, Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .minCoeff();
        if (min_eig < -eps) {
            char msg[96];
            std::snprintf(msg, sizeof msg, "spd_factor: eigenvalue %.3g below tolerance", min_eig);
            throw IndefiniteMatrix(msg);
        }
        bool ok = false;
        for (double jitter = eps; jitter <= max_jitter; jitter *= 2.0) {
            llt.compute(sub + jitter * Eigen::MatrixXd::Identity(k, k));
            if (llt.info() == Eigen::Success) {
                ok = true;
                break;
            }
        }
        if (!ok) throw IndefiniteMatrix("spd_factor: jitter escalation exhausted");
    }

    const Eigen::MatrixXd L = llt.matrixL();
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) factor(active[i], active[j]) = L(i, j);
    return factor;
}

Eigen::MatrixXd enforce_psd(const Eigen::MatrixXd& P, const PsdPolicy& policy) {
    if (P.rows() != P.cols()) throw DimensionMismatch("enforce_psd: matrix must be square");
    Eigen::MatrixXd sym = 0.5 * (P + P.transpose());
    const Eigen::Index n = sym.rows();
    if (n == 0) return sym;
    if (!sym.allFinite()) throw IndefiniteMatrix("enforce_psd: non-finite covariance");

    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig >= 0.0) return sym;

    const double scale = std::max(sym.trace(), 0.0) / static_cast<double>(n);
    if (min_eig < -policy.max_jitter_rel * scale)
    {
        char msg[96];
        std::snprintf(msg, sizeof msg, "enforce_psd: eigenvalue %.3g cannot be rescued", min_eig);
        throw IndefiniteMatrix(msg);
    }
    sym.diagonal().array() += -min_eig + policy.indefinite_rel * scale;
    return sym;
}

} // namespace polyfilter
