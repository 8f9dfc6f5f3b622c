// Offline solver for CUT radii and weights.
//
// Every family is invariant under coordinate permutations and sign flips, so
// the weighted moment of a monomial prod x_k^(2 lambda_k) only depends on the
// partition lambda. One equation per partition with |lambda| <= c/2 and at
// most n parts fixes the whole moment hierarchy; odd moments vanish through
// conjugate pairing.
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "polyfilter/errors.hpp"
#include "polyfilter/kron_tensor.hpp"
#include "polyfilter/sigma_points.hpp"

namespace polyfilter {

namespace {

using Partition = std::vector<int>;

void partitions_rec(int remaining, int max_part, int max_len, Partition& cur, std::vector<Partition>& out) {
    out.push_back(cur);
    if (static_cast<int>(cur.size()) == max_len) return;
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
        cur.push_back(p);
        partitions_rec(remaining - p, p, max_len, cur, out);
        cur.pop_back();
    }
}

// All partitions of total <= half_order with at most n parts (including the empty one).
std::vector<Partition> moment_equations(int n, int half_order) {
    std::vector<Partition> out;
    Partition cur;
    partitions_rec(half_order, half_order, n, cur, out);
    return out;
}

double gaussian_value(const Partition& lambda) {
    double v = 1.0;
    for (int part : lambda)
        for (int k = 2 * part - 1; k > 1; k -= 2) v *= k;
    return v;
}

// sum over the family of a^(2 alpha) b^(2 beta) terms for one equation.
struct Term {
    int alpha;
    int beta;
    double coef;
};

int family_arity(FamilyKind kind, int n) {
    switch (kind) {
    case FamilyKind::Axis: return 1;
    case FamilyKind::Diag2: return 2;
    case FamilyKind::Diag3: return 3;
    case FamilyKind::Pair: return 2;
    case FamilyKind::Corner: return n;
    }
    return 0;
}

// Exponents sit on the first len coordinates. Each support of k nonzero
// coordinates carries 2^k sign patterns.
std::vector<Term> family_terms(FamilyKind kind, int n, const Partition& lambda) {
    std::vector<Term> terms;
    auto add = [&](int alpha, int beta, double coef) {
        for (auto& t : terms)
            if (t.alpha == alpha && t.beta == beta) {
                t.coef += coef;
                return;
            }
        terms.push_back({alpha, beta, coef});
    };
    const int len = static_cast<int>(lambda.size());
    const int k = family_arity(kind, n);
    const double signs = std::ldexp(1.0, k);

    if (kind == FamilyKind::Pair) {
        // Ordered placements (i, j) carrying magnitudes (a, b).
        std::vector<int> symbol(n, 0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                std::fill(symbol.begin(), symbol.end(), 0);
                symbol[i] = 1;
                symbol[j] = 2;
                int alpha = 0;
                int beta = 0;
                bool alive = true;
                for (int p = 0; p < len && alive; ++p) {
                    if (symbol[p] == 0) alive = false;
                    else (symbol[p] == 1 ? alpha : beta) += lambda[p];
                }
                if (alive) add(alpha, beta, signs);
            }
        return terms;
    }
    // Equal magnitudes: the support must cover every exponent-carrying
    // coordinate; the rest of the support is free among the n - len others.
    if (k >= len) {
        int total = 0;
        for (int part : lambda) total += part;
        const double count = static_cast<double>(binomial(n - len, k - len));
        if (count > 0.0) add(total, 0, signs * count);
    }
    return terms;
}

struct System {
    int n = 0;
    int order = 0;
    std::vector<FamilyKind> kinds;
    std::vector<Partition> equations;
    Eigen::VectorXd rhs;
    std::vector<std::vector<std::vector<Term>>> terms;  // [family][equation]

    int param_count() const {
        int q = 0;
        for (auto k : kinds) q += k == FamilyKind::Pair ? 2 : 1;
        return q;
    }

    // Columns: center, then one per family. Parameters are log squared magnitudes.
    Eigen::MatrixXd design(const Eigen::VectorXd& theta) const {
        const auto E = static_cast<Eigen::Index>(equations.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(E, static_cast<Eigen::Index>(kinds.size()) + 1);
        for (Eigen::Index e = 0; e < E; ++e) A(e, 0) = equations[e].empty() ? 1.0 : 0.0;
        int q = 0;
        for (std::size_t f = 0; f < kinds.size(); ++f) {
            const double la = theta(q);
            const double lb = kinds[f] == FamilyKind::Pair ? theta(q + 1) : 0.0;
            q += kinds[f] == FamilyKind::Pair ? 2 : 1;
            for (Eigen::Index e = 0; e < E; ++e) {
                double s = 0.0;
                for (const auto& t : terms[f][e]) s += t.coef * std::exp(t.alpha * la + t.beta * lb);
                A(e, static_cast<Eigen::Index>(f) + 1) = s;
            }
        }
        return A;
    }

    Eigen::VectorXd weights(const Eigen::MatrixXd& A) const {
        return A.completeOrthogonalDecomposition().solve(rhs);
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& theta) const {
        const Eigen::MatrixXd A = design(theta);
        return A * weights(A) - rhs;
    }
};

System build_system(int n, int order, const std::vector<FamilyKind>& kinds) {
    System sys;
    sys.n = n;
    sys.order = order;
    sys.kinds = kinds;
    sys.equations = moment_equations(n, order / 2);
    sys.rhs.resize(static_cast<Eigen::Index>(sys.equations.size()));
    for (std::size_t e = 0; e < sys.equations.size(); ++e)
        sys.rhs(static_cast<Eigen::Index>(e)) = gaussian_value(sys.equations[e]);
    for (auto kind : kinds) {
        std::vector<std::vector<Term>> per_eq;
        for (const auto& eq : sys.equations) per_eq.push_back(family_terms(kind, n, eq));
        sys.terms.push_back(std::move(per_eq));
    }
    return sys;
}

// Levenberg-Marquardt on the projected residual with central differences.
Eigen::VectorXd levenberg_marquardt(const System& sys, Eigen::VectorXd theta, double tol) {
    const Eigen::Index q = theta.size();
    Eigen::VectorXd r = sys.residual(theta);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    for (int iter = 0; iter < 400 && cost > tol * tol; ++iter) {
        Eigen::MatrixXd J(r.size(), q);
        for (Eigen::Index k = 0; k < q; ++k) {
            const double h = 1e-6;
            Eigen::VectorXd tp = theta, tm = theta;
            tp(k) += h;
            tm(k) -= h;
            J.col(k) = (sys.residual(tp) - sys.residual(tm)) / (2.0 * h);
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        bool improved = false;
        while (mu < 1e12) {
            Eigen::MatrixXd H = JtJ;
            H.diagonal() += mu * (JtJ.diagonal().array() + 1e-12).matrix();
            const Eigen::VectorXd step = H.ldlt().solve(-g);
            Eigen::VectorXd trial = theta + step.cwiseMax(-2.0).cwiseMin(2.0);
            const Eigen::VectorXd rt = sys.residual(trial);
            const double ct = rt.squaredNorm();
            if (std::isfinite(ct) && ct < cost) {
                theta = trial;
                r = rt;
                cost = ct;
                mu = std::max(mu * 0.3, 1e-12);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if (!improved) break;
    }
    return theta;
}

CutRule make_rule(const System& sys, const Eigen::VectorXd& theta) {
    const Eigen::MatrixXd A = sys.design(theta);
    const Eigen::VectorXd w = sys.weights(A);
    CutRule rule;
    rule.order = sys.order;
    rule.dim = sys.n;
    rule.center_weight = w(0);
    int q = 0;
    for (std::size_t f = 0; f < sys.kinds.size(); ++f) {
        CutFamily fam;
        fam.kind = sys.kinds[f];
        fam.radius = std::exp(0.5 * theta(q));
        if (fam.kind == FamilyKind::Pair) {
            fam.radius2 = std::exp(0.5 * theta(q + 1));
            q += 2;
        } else {
            q += 1;
        }
        fam.weight = w(static_cast<Eigen::Index>(f) + 1);
        rule.families.push_back(fam);
    }
    rule.residual = cut_moment_residual(rule);
    return rule;
}

double negative_mass(const CutRule& rule) {
    double mass = std::max(0.0, -rule.center_weight);
    for (const auto& f : rule.families)
        mass += std::max(0.0, -f.weight) * static_cast<double>(family_size(f.kind, rule.dim));
    return mass;
}

double max_radius(const CutRule& rule) {
    double r = 0.0;
    for (const auto& f : rule.families) r = std::max({r, f.radius, f.radius2});
    return r;
}

bool admissible(const CutRule& rule, const CutSolveOptions& opt) {
    if (!(rule.residual <= 1e-10)) return false;
    for (const auto& f : rule.families) {
        if (f.radius < opt.min_radius || f.radius > opt.max_radius) return false;
        if (f.kind == FamilyKind::Pair) {
            if (f.radius2 < opt.min_radius || f.radius2 > opt.max_radius) return false;
            if (std::abs(f.radius - f.radius2) < 1e-3 * f.radius) return false;
        }
        if (std::abs(f.weight) > 1e3) return false;
    }
    return true;
}

// Least negative weight mass, with a mild pull towards compact point sets
// so that near-zero negative weights do not push families to the radius bound.
double score(const CutRule& rule) {
    const double r = max_radius(rule);
    return negative_mass(rule) + 2e-3 * r * r;
}

bool better(const CutRule& a, const CutRule& b) {
    const double sa = score(a), sb = score(b);
    if (std::abs(sa - sb) > 1e-12) return sa < sb;
    return a.point_count() < b.point_count();
}

} // namespace

std::vector<std::vector<FamilyKind>> cut_family_candidates(int n, int order) {
    using F = FamilyKind;
    cut_kind(order);
    if (n < 1) throw InvalidArgument("cut_family_candidates: dimension must be >= 1");
    std::vector<std::vector<FamilyKind>> out;
    switch (order) {
    case 4:
        if (n == 1) out.push_back({F::Axis});
        else out.push_back({F::Axis, F::Diag2});
        if (n >= 3) out.push_back({F::Axis, F::Corner});
        break;
    case 6:
        if (n == 1) out.push_back({F::Axis, F::Axis});
        else if (n == 2) out.push_back({F::Axis, F::Axis, F::Diag2});
        else {
            out.push_back({F::Axis, F::Diag2, F::Diag3});
            out.push_back({F::Axis, F::Axis, F::Diag2, F::Diag3});
        }
        if (n >= 4) {
            out.push_back({F::Axis, F::Diag2, F::Corner});
            out.push_back({F::Axis, F::Axis, F::Diag2, F::Corner});
        }
        break;
    case 8:
        if (n == 1) out.push_back({F::Axis, F::Axis});
        else if (n == 2) out.push_back({F::Axis, F::Axis, F::Diag2, F::Pair});
        else if (n == 3) out.push_back({F::Axis, F::Axis, F::Diag2, F::Pair, F::Diag3});
        else out.push_back({F::Axis, F::Axis, F::Diag2, F::Pair, F::Diag3, F::Corner});
        break;
    }
    return out;
}

double cut_moment_residual(const CutRule& rule) {
    std::vector<FamilyKind> kinds;
    for (const auto& f : rule.families) kinds.push_back(f.kind);
    const System sys = build_system(rule.dim, rule.order, kinds);
    double worst = 0.0;
    for (std::size_t e = 0; e < sys.equations.size(); ++e) {
        double s = sys.equations[e].empty() ? rule.center_weight : 0.0;
        for (std::size_t f = 0; f < kinds.size(); ++f) {
            const double a2 = rule.families[f].radius * rule.families[f].radius;
            const double b2 = rule.families[f].radius2 * rule.families[f].radius2;
            double fam = 0.0;
            for (const auto& t : sys.terms[f][e]) fam += t.coef * std::pow(a2, t.alpha) * std::pow(b2, t.beta);
            s += rule.families[f].weight * fam;
        }
        worst = std::max(worst, std::abs(s - sys.rhs(static_cast<Eigen::Index>(e))));
    }
    return worst;
}

std::optional<CutRule> solve_cut_rule(int n, int order, const CutSolveOptions& options) {
    std::optional<CutRule> best;
    for (const auto& kinds : cut_family_candidates(n, order)) {
        const System sys = build_system(n, order, kinds);
        std::mt19937_64 rng(options.seed ^ (static_cast<std::uint64_t>(n) * 1000003ULL + order));
        std::uniform_real_distribution<double> start(std::log(0.1), std::log(12.0));
        for (int s = 0; s < options.starts; ++s) {
            Eigen::VectorXd theta(sys.param_count());
            for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) = start(rng);
            theta = levenberg_marquardt(sys, theta, options.tolerance);
            CutRule rule = make_rule(sys, theta);
            if (!admissible(rule, options)) continue;
            if (!best || better(rule, *best)) best = rule;
        }
    }
    return best;
}

} // namespace polyfilter
