// Deterministic point sets: scaled unscented transform (UT) and conjugate
// unscented transforms (CUT) of orders 4, 6 and 8.
//
// Every set stores its center at column 0 followed by conjugate pairs
// (p, -p) in adjacent columns, so odd moments of canonical sets cancel
// exactly when summed pairwise.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polyfilter {

struct UTParams {
    double alpha = 1.0;
    double beta = 2.0;
    std::optional<double> kappa;  // defaults to 3 - n

    double kappa_for(int n) const { return kappa ? *kappa : 3.0 - n; }
    double lambda(int n) const { return alpha * alpha * (n + kappa_for(n)) - n; }
};

enum class RuleKind { UT, CUT4, CUT6, CUT8 };

std::string to_string(RuleKind kind);
RuleKind cut_kind(int order);
int cut_order(RuleKind kind);

struct SigmaSet {
    Eigen::MatrixXd points;  // n x P, columns are points
    Eigen::VectorXd w_mean;
    Eigen::VectorXd w_cov;
    RuleKind rule = RuleKind::UT;
    Eigen::VectorXd generating_mean;
    Eigen::MatrixXd generating_cov;

    int dim() const { return static_cast<int>(points.rows()); }
    int size() const { return static_cast<int>(points.cols()); }
};

/// Direction pattern of a CUT point family.
enum class FamilyKind {
    Axis,    // r e_i
    Diag2,   // r (e_i + e_j), all sign combinations
    Diag3,   // r (e_i + e_j + e_k)
    Pair,    // a e_i + b e_j with a != b, ordered (i, j)
    Corner,  // r (1, ..., 1), all 2^n sign patterns
};

std::string to_string(FamilyKind kind);
FamilyKind family_from_string(const std::string& name);

struct CutFamily {
    FamilyKind kind = FamilyKind::Axis;
    double radius = 1.0;   // per-coordinate magnitude
    double radius2 = 0.0;  // second magnitude (Pair only)
    double weight = 0.0;   // weight of each point in the family
};

struct CutRule {
    int order = 4;
    int dim = 1;
    double center_weight = 0.0;
    std::vector<CutFamily> families;
    double residual = 0.0;  // max abs error of the moment equations

    int point_count() const;
    bool has_negative_weight() const;
};

/// Number of points generated by one family in dimension n.
long long family_size(FamilyKind kind, int n);

/// 2n+1 scaled UT points around mean. Throws InvalidArgument when lambda <= -n.
SigmaSet ut_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const UTParams& params = {});

/// Canonical CUT set for N(0, I_n). Throws UnsupportedOrder or UnsupportedDimension.
SigmaSet cut_points(int dim, int order);

/// Points of an explicit rule (canonical, zero mean and identity covariance).
SigmaSet rule_points(const CutRule& rule);

/// Registry lookup; loads the shipped table on first use and solves missing entries.
const CutRule& cut_rule(int dim, int order);

/// x = mean + C xi with C C^T = cov; weights are kept.
SigmaSet scale_points(const SigmaSet& canonical, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// Block-diagonal stacking [x; mu; eta] with zero noise means.
struct AugmentedPrior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    int state_dim = 0;
    int process_dim = 0;
    int meas_dim = 0;
};

AugmentedPrior augment(const Eigen::VectorXd& state_mean, const Eigen::MatrixXd& state_cov,
                       const Eigen::MatrixXd& process_cov, const Eigen::MatrixXd& meas_cov);

/// Sum of w_mean-weighted columns, accumulated per conjugate pair.
Eigen::VectorXd weighted_mean(const SigmaSet& set, const Eigen::MatrixXd& transformed);

/// Sum of w_cov-weighted outer products a_i b_i^T, accumulated per conjugate pair.
Eigen::MatrixXd weighted_cov(const SigmaSet& set, const Eigen::MatrixXd& centered_a,
                             const Eigen::MatrixXd& centered_b);

/// Weighted raw moment sum_i w_i prod_k x_k^e_k using w_mean.
double raw_moment(const SigmaSet& set, const std::vector<int>& exponents);

// CUT constraint solver.

/// Family lists tried for (n, c).
std::vector<std::vector<FamilyKind>> cut_family_candidates(int dim, int order);

/// Max abs violation of the Gaussian moment equations up to degree c.
double cut_moment_residual(const CutRule& rule);

struct CutSolveOptions {
    int starts = 48;
    std::uint64_t seed = 0x5eed5eedULL;
    double tolerance = 1e-12;
    double min_radius = 0.05;
    double max_radius = 10.0;
};

/// Solves the moment equations; empty when no admissible solution is found.
std::optional<CutRule> solve_cut_rule(int dim, int order, const CutSolveOptions& options = {});

// Versioned rule table.

std::string format_cut_table(const std::vector<CutRule>& rules);
std::vector<CutRule> parse_cut_table(const std::string& text);
std::vector<CutRule> load_cut_table(const std::string& path);
void save_cut_table(const std::string& path, const std::vector<CutRule>& rules);

/// Path of the shipped rule table the registry reads (fixed at build time).
std::string default_cut_table_path();

} // namespace polyfilter
