#include "polyfilter/moments.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "polyfilter/errors.hpp"
#include "polyfilter/kron_tensor.hpp"

namespace polyfilter {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

} // namespace

NoiseMoments NoiseMoments::zero(int dim) {
    NoiseMoments out;
    out.dim = dim;
    out.mean = Eigen::VectorXd::Zero(dim);
    out.cov = Eigen::MatrixXd::Zero(dim, dim);
    out.skew = Eigen::MatrixXd::Zero(dim, dim * dim);
    out.kurt = Eigen::MatrixXd::Zero(dim * dim, dim * dim);
    return out;
}

NoiseMoments gaussian_moments(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols()) throw DimensionMismatch("gaussian_moments: covariance must be square");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("gaussian_moments: covariance is not symmetric");

    const int n = static_cast<int>(cov.rows());
    NoiseMoments out = NoiseMoments::zero(n);
    out.cov = symmetrized(cov);
    const Eigen::MatrixXd& P = out.cov;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s)
                    out.kurt(p * n + q, r * n + s) = P(p, q) * P(r, s) + P(p, r) * P(q, s) + P(p, s) * P(q, r);
    return out;
}

NoiseMoments discrete_moments(const std::vector<Eigen::VectorXd>& values,
                              const std::vector<double>& probs) {
    if (values.empty() || values.size() != probs.size())
        throw InvalidProbs("discrete_moments: values and probs must be non-empty and equal length");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw InvalidProbs("discrete_moments: probabilities must sum to 1");
    for (double p : probs)
        if (!(p >= 0.0)) throw InvalidProbs("discrete_moments: negative probability");

    const int n = static_cast<int>(values.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    double max_abs = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != n) throw DimensionMismatch("discrete_moments: ragged values");
        mean += probs[i] * values[i];
        max_abs = std::max(max_abs, values[i].cwiseAbs().maxCoeff());
    }
    if (mean.cwiseAbs().maxCoeff() > 1e-15 * max_abs)
        throw NonZeroMean("discrete_moments: weighted mean is not zero");

    NoiseMoments out = NoiseMoments::zero(n);
    Eigen::VectorXd square(n * n);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Eigen::VectorXd& v = values[i];
        kron_power_into(v, 2, square);
        out.cov.noalias() += probs[i] * v * v.transpose();
        out.skew.noalias() += probs[i] * v * square.transpose();
        out.kurt.noalias() += probs[i] * square * square.transpose();
    }
    out.cov = symmetrized(out.cov);
    out.kurt = symmetrized(out.kurt);
    return out;
}

DiscreteDistribution iid_discrete(const std::vector<double>& values, const std::vector<double>& probs,
                                  int channels) {
    if (channels < 1) throw InvalidArgument("iid_discrete: channels must be >= 1");
    if (values.size() != probs.size() || values.empty())
        throw InvalidProbs("iid_discrete: values and probs must be non-empty and equal length");
    DiscreteDistribution out;
    const int k = static_cast<int>(values.size());
    const int combos = ipow(k, channels);
    for (int c = 0; c < combos; ++c) {
        Eigen::VectorXd v(channels);
        double p = 1.0;
        int rest = c;
        for (int ch = channels - 1; ch >= 0; --ch) {
            v(ch) = values[rest % k];
            p *= probs[rest % k];
            rest /= k;
        }
        out.values.push_back(v);
        out.probs.push_back(p);
    }
    return out;
}

Eigen::VectorXd sample_discrete(const std::vector<Eigen::VectorXd>& values, const std::vector<double>& probs,
                                std::mt19937_64& rng) {
    if (values.empty() || values.size() != probs.size())
        throw InvalidProbs("sample_discrete: values and probs must be non-empty and equal length");
    // Inverse-CDF on a 53-bit uniform keeps draws identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) return values[i];
    }
    return values.back();
}

CompoundedMoments compound_measurement_moments(const Eigen::MatrixXd& Pyy_bar, const Eigen::MatrixXd& Pyy2_bar,
                                               const Eigen::MatrixXd& Py2y2_bar, const NoiseMoments& noise) {
    const Eigen::Index m = Pyy_bar.rows();
    const Eigen::Index m2 = m * m;
    if (Pyy_bar.cols() != m || Pyy2_bar.rows() != m || Pyy2_bar.cols() != m2 || Py2y2_bar.rows() != m2 ||
        Py2y2_bar.cols() != m2 || noise.dim != m)
        throw DimensionMismatch("compound_measurement_moments: inconsistent dimensions");

    const Eigen::MatrixXd& Pee = noise.cov;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd vbar = vec(Pyy_bar);
    const Eigen::VectorXd vnoise = vec(Pee);

    CompoundedMoments out;
    out.Pyy = Pyy_bar + Pee;
    out.Pyy2 = Pyy2_bar + noise.skew;

    // m((v(A) (x) I) B^T): the transposed-pair terms E[(a (x) b)(b (x) a)^T].
    const Eigen::MatrixXd cross_bar = mat(vec(kron(vbar, I) * Pee.transpose()), m2, m2);
    const Eigen::MatrixXd cross_noise = mat(vec(kron(vnoise, I) * Pyy_bar.transpose()), m2, m2);

    out.Py2y2 = Py2y2_bar + noise.kurt + kron(Pyy_bar, Pee) + cross_bar + kron(Pee, Pyy_bar) + cross_noise +
                vbar * vnoise.transpose() + vnoise * vbar.transpose();
    return out;
}

} // namespace polyfilter
