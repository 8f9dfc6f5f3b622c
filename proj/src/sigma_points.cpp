#include "polyfilter/sigma_points.hpp"

#include <cmath>
#include <string>

#include "polyfilter/errors.hpp"
#include "polyfilter/kron_tensor.hpp"

namespace polyfilter {

std::string to_string(RuleKind kind) {
    switch (kind) {
    case RuleKind::UT: return "UT";
    case RuleKind::CUT4: return "CUT4";
    case RuleKind::CUT6: return "CUT6";
    case RuleKind::CUT8: return "CUT8";
    }
    return "?";
}

RuleKind cut_kind(int order) {
    switch (order) {
    case 4: return RuleKind::CUT4;
    case 6: return RuleKind::CUT6;
    case 8: return RuleKind::CUT8;
    default: throw UnsupportedOrder("CUT order must be 4, 6 or 8, got " + std::to_string(order));
    }
}

int cut_order(RuleKind kind) {
    switch (kind) {
    case RuleKind::CUT4: return 4;
    case RuleKind::CUT6: return 6;
    case RuleKind::CUT8: return 8;
    default: return 0;
    }
}

std::string to_string(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::Axis: return "axis";
    case FamilyKind::Diag2: return "diag2";
    case FamilyKind::Diag3: return "diag3";
    case FamilyKind::Pair: return "pair";
    case FamilyKind::Corner: return "corner";
    }
    return "?";
}

FamilyKind family_from_string(const std::string& name) {
    if (name == "axis") return FamilyKind::Axis;
    if (name == "diag2") return FamilyKind::Diag2;
    if (name == "diag3") return FamilyKind::Diag3;
    if (name == "pair") return FamilyKind::Pair;
    if (name == "corner") return FamilyKind::Corner;
    throw InvalidArgument("unknown CUT family '" + name + "'");
}

long long family_size(FamilyKind kind, int n) {
    switch (kind) {
    case FamilyKind::Axis: return 2LL * n;
    case FamilyKind::Diag2: return 4 * binomial(n, 2);
    case FamilyKind::Diag3: return 8 * binomial(n, 3);
    case FamilyKind::Pair: return 4LL * n * (n - 1);
    case FamilyKind::Corner: return n >= 62 ? -1 : (1LL << n);
    }
    return 0;
}

int CutRule::point_count() const {
    long long total = 1;
    for (const auto& f : families) total += family_size(f.kind, dim);
    return static_cast<int>(total);
}

bool CutRule::has_negative_weight() const {
    if (center_weight < 0.0) return true;
    for (const auto& f : families)
        if (f.weight < 0.0) return true;
    return false;
}

namespace {

// Appends p and -p as adjacent columns.
void push_pair(std::vector<Eigen::VectorXd>& cols, const Eigen::VectorXd& p) {
    cols.push_back(p);
    cols.push_back(-p);
}

// Representatives of each conjugate pair: the first nonzero coordinate is positive.
void family_pairs(const CutFamily& f, int n, std::vector<Eigen::VectorXd>& cols) {
    const double r = f.radius;
    switch (f.kind) {
    case FamilyKind::Axis:
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
            p(i) = r;
            push_pair(cols, p);
        }
        break;
    case FamilyKind::Diag2:
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (double s : {1.0, -1.0}) {
                    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
                    p(i) = r;
                    p(j) = s * r;
                    push_pair(cols, p);
                }
        break;
    case FamilyKind::Diag3:
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k)
                    for (double sj : {1.0, -1.0})
                        for (double sk : {1.0, -1.0}) {
                            Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
                            p(i) = r;
                            p(j) = sj * r;
                            p(k) = sk * r;
                            push_pair(cols, p);
                        }
        break;
    case FamilyKind::Pair:
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                for (double s : {1.0, -1.0}) {
                    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
                    p(i) = r;
                    p(j) = f.radius2;
                    // Positive sign on the leading coordinate, free sign on the other.
                    if (i < j) p(j) *= s;
                    else p(i) *= s;
                    push_pair(cols, p);
                }
            }
        break;
    case FamilyKind::Corner: {
        const long long half = 1LL << (n - 1);
        for (long long mask = 0; mask < half; ++mask) {
            Eigen::VectorXd p = Eigen::VectorXd::Constant(n, r);
            for (int k = 1; k < n; ++k)
                if ((mask >> (k - 1)) & 1LL) p(k) = -r;
            push_pair(cols, p);
        }
        break;
    }
    }
}

} // namespace

SigmaSet ut_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const UTParams& params) {
    const int n = static_cast<int>(mean.size());
    if (cov.rows() != n || cov.cols() != n) throw DimensionMismatch("ut_points: cov shape does not match mean");
    if (!(params.alpha > 0.0)) throw InvalidArgument("ut_points: alpha must be positive");
    const double lambda = params.lambda(n);
    if (!(n + lambda > 0.0)) throw InvalidArgument("ut_points: lambda must exceed -n");

    const Eigen::MatrixXd C = spd_factor((n + lambda) * cov);
    SigmaSet set;
    set.rule = RuleKind::UT;
    set.points.resize(n, 2 * n + 1);
    set.w_mean.resize(2 * n + 1);
    set.w_cov.resize(2 * n + 1);
    set.points.col(0) = mean;
    set.w_mean(0) = lambda / (n + lambda);
    set.w_cov(0) = set.w_mean(0) + (1.0 - params.alpha * params.alpha + params.beta);
    const double wing = 1.0 / (2.0 * (n + lambda));
    for (int i = 0; i < n; ++i) {
        set.points.col(1 + 2 * i) = mean + C.col(i);
        set.points.col(2 + 2 * i) = mean - C.col(i);
    }
    set.w_mean.tail(2 * n).setConstant(wing);
    set.w_cov.tail(2 * n).setConstant(wing);
    set.generating_mean = mean;
    set.generating_cov = cov;
    return set;
}

SigmaSet rule_points(const CutRule& rule) {
    const int n = rule.dim;
    std::vector<Eigen::VectorXd> cols;
    std::vector<double> weights;
    cols.push_back(Eigen::VectorXd::Zero(n));
    weights.push_back(rule.center_weight);
    for (const auto& f : rule.families) {
        family_pairs(f, n, cols);
        weights.resize(cols.size(), f.weight);
    }
    SigmaSet set;
    set.rule = cut_kind(rule.order);
    set.points.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) set.points.col(static_cast<Eigen::Index>(i)) = cols[i];
    set.w_mean = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    set.w_cov = set.w_mean;
    set.generating_mean = Eigen::VectorXd::Zero(n);
    set.generating_cov = Eigen::MatrixXd::Identity(n, n);
    return set;
}

SigmaSet scale_points(const SigmaSet& canonical, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::Index n = canonical.points.rows();
    if (mean.size() != n || cov.rows() != n || cov.cols() != n)
        throw DimensionMismatch("scale_points: dimension mismatch");
    const Eigen::MatrixXd C = spd_factor(cov);
    SigmaSet out = canonical;
    out.points = (C * canonical.points).colwise() + mean;
    out.generating_mean = mean;
    out.generating_cov = cov;
    return out;
}

AugmentedPrior augment(const Eigen::VectorXd& state_mean, const Eigen::MatrixXd& state_cov,
                       const Eigen::MatrixXd& process_cov, const Eigen::MatrixXd& meas_cov) {
    const Eigen::Index nx = state_mean.size();
    const Eigen::Index nm = process_cov.rows();
    const Eigen::Index ne = meas_cov.rows();
    if (state_cov.rows() != nx || state_cov.cols() != nx || process_cov.cols() != nm || meas_cov.cols() != ne)
        throw DimensionMismatch("augment: block shapes are inconsistent");
    AugmentedPrior out;
    out.state_dim = static_cast<int>(nx);
    out.process_dim = static_cast<int>(nm);
    out.meas_dim = static_cast<int>(ne);
    const Eigen::Index na = nx + nm + ne;
    out.mean = Eigen::VectorXd::Zero(na);
    out.mean.head(nx) = state_mean;
    out.cov = Eigen::MatrixXd::Zero(na, na);
    out.cov.topLeftCorner(nx, nx) = state_cov;
    out.cov.block(nx, nx, nm, nm) = process_cov;
    out.cov.bottomRightCorner(ne, ne) = meas_cov;
    return out;
}

Eigen::VectorXd weighted_mean(const SigmaSet& set, const Eigen::MatrixXd& transformed) {
    if (transformed.cols() != set.size()) throw DimensionMismatch("weighted_mean: column count mismatch");
    Eigen::VectorXd out = set.w_mean(0) * transformed.col(0);
    Eigen::Index i = 1;
    for (; i + 1 < transformed.cols(); i += 2)
        out += set.w_mean(i) * transformed.col(i) + set.w_mean(i + 1) * transformed.col(i + 1);
    if (i < transformed.cols()) out += set.w_mean(i) * transformed.col(i);
    return out;
}

Eigen::MatrixXd weighted_cov(const SigmaSet& set, const Eigen::MatrixXd& centered_a,
                             const Eigen::MatrixXd& centered_b) {
    if (centered_a.cols() != set.size() || centered_b.cols() != set.size())
        throw DimensionMismatch("weighted_cov: column count mismatch");
    // One GEMM: A diag(w) B^T. Pairwise grouping is implicit in the column order.
    return (centered_a * set.w_cov.asDiagonal()) * centered_b.transpose();
}

double raw_moment(const SigmaSet& set, const std::vector<int>& exponents) {
    if (static_cast<int>(exponents.size()) != set.dim()) throw DimensionMismatch("raw_moment: exponent count");
    auto term = [&](Eigen::Index i) {
        double v = set.w_mean(i);
        for (int k = 0; k < set.dim(); ++k)
            for (int e = 0; e < exponents[k]; ++e) v *= set.points(k, i);
        return v;
    };
    double total = term(0);
    Eigen::Index i = 1;
    for (; i + 1 < set.size(); i += 2) total += term(i) + term(i + 1);
    if (i < set.size()) total += term(i);
    return total;
}

} // namespace polyfilter
