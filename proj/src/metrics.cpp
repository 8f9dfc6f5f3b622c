#include "polyfilter/metrics.hpp"

#include <cmath>
#include <iostream>

#include "polyfilter/errors.hpp"

namespace polyfilter {

double rmse(const Eigen::VectorXd& errors) {
    if (errors.size() == 0) throw InvalidArgument("rmse: empty input");
    return std::sqrt(errors.squaredNorm() / static_cast<double>(errors.size()));
}

Eigen::VectorXd per_run_rmse(const MCResult& result, std::size_t filter) {
    Eigen::VectorXd out(result.runs);
    for (int run = 0; run < result.runs; ++run) {
        const FilterRun& r = result.data[filter][run];
        if (r.failed) {
            out(run) = std::nan("");
            continue;
        }
        double acc = 0.0;
        for (int c : result.primary) acc += r.errors.col(c).squaredNorm();
        out(run) = std::sqrt(acc / static_cast<double>(result.steps * result.primary.size()));
    }
    return out;
}

double filter_rmse(const MCResult& result, std::size_t filter) {
    double acc = 0.0;
    long count = 0;
    for (int run = 0; run < result.runs; ++run) {
        const FilterRun& r = result.data[filter][run];
        if (r.failed) continue;
        for (int c : result.primary) acc += r.errors.col(c).squaredNorm();
        count += static_cast<long>(result.steps) * static_cast<long>(result.primary.size());
    }
    if (count == 0) return std::nan("");
    return std::sqrt(acc / static_cast<double>(count));
}

double effective_sigma(const Eigen::MatrixXd& ensemble) {
    if (ensemble.rows() == 0) throw InvalidArgument("effective_sigma: empty ensemble");
    const Eigen::RowVectorXd mean = ensemble.colwise().mean();
    const Eigen::MatrixXd centered = ensemble.rowwise() - mean;
    return std::sqrt(centered.squaredNorm() / static_cast<double>(ensemble.rows()));
}

std::vector<SigmaCurve> sigma_curves(const MCResult& result) {
    std::vector<SigmaCurve> out;
    for (std::size_t f = 0; f < result.filters.size(); ++f) {
        std::vector<int> runs;
        for (int run = 0; run < result.runs; ++run)
            if (!result.excluded(f, run)) runs.push_back(run);
        if (runs.size() < 2)
            throw InvalidArgument("sigma_curves: filter " + result.filters[f] + " has fewer than two usable runs");
        for (std::size_t g = 0; g < result.groups.size(); ++g) {
            const auto& comps = result.groups[g].components;
            SigmaCurve curve;
            curve.filter = result.filters[f];
            curve.group = result.groups[g].name;
            curve.included_runs = static_cast<int>(runs.size());
            curve.est.resize(result.steps);
            curve.eff.resize(result.steps);
            Eigen::MatrixXd ensemble(static_cast<Eigen::Index>(runs.size()), static_cast<Eigen::Index>(comps.size()));
            for (int k = 0; k < result.steps; ++k) {
                double var = 0.0;
                for (std::size_t i = 0; i < runs.size(); ++i) {
                    const FilterRun& r = result.data[f][runs[i]];
                    var += r.group_vars(k, static_cast<Eigen::Index>(g));
                    for (std::size_t c = 0; c < comps.size(); ++c)
                        ensemble(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r.errors(k, comps[c]);
                }
                curve.est(k) = std::sqrt(var / static_cast<double>(runs.size()));
                curve.eff(k) = effective_sigma(ensemble);
            }
            out.push_back(std::move(curve));
        }
    }
    return out;
}

namespace {

Eigen::RowVectorXd regressors(const Eigen::VectorXd& dy, const MonomialBasis& basis) {
    Eigen::RowVectorXd row(1 + basis.unique_width());
    row(0) = 1.0;
    row.tail(basis.unique_width()) = basis.compress(build_psi(dy, basis)).transpose();
    return row;
}

} // namespace

Eigen::VectorXd PolynomialFit::predict(const Eigen::VectorXd& y) const {
    return coefficients * regressors(y - y_mean, basis).transpose();
}

PolynomialFit fit_polynomial_mmse(const Eigen::MatrixXd& samples_x, const Eigen::MatrixXd& samples_y, int order) {
    const Eigen::Index N = samples_x.rows();
    if (samples_y.rows() != N) throw DimensionMismatch("fit_polynomial_mmse: sample counts differ");
    const int m = static_cast<int>(samples_y.cols());

    PolynomialFit fit;
    fit.order = order;
    fit.basis = MonomialBasis(m, order);
    if (N <= 2 * (1 + fit.basis.unique_width()))
        throw InvalidArgument("fit_polynomial_mmse: too few samples for the basis size");
    fit.y_mean = samples_y.colwise().mean().transpose();
    const Eigen::MatrixXd dy = samples_y.rowwise() - fit.y_mean.transpose();

    // Sample centering so that psi has zero sample mean.
    for (int J = 2; J <= order; ++J) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(ipow(m, J));
        Eigen::VectorXd buf(ipow(m, J));
        for (Eigen::Index i = 0; i < N; ++i) {
            kron_power_into(dy.row(i).transpose(), J, buf);
            acc += buf;
        }
        fit.basis.centering[J - 1] = acc / static_cast<double>(N);
    }

    Eigen::MatrixXd A(N, 1 + fit.basis.unique_width());
    for (Eigen::Index i = 0; i < N; ++i) A.row(i) = regressors(dy.row(i).transpose(), fit.basis);
    const Eigen::VectorXd scale = A.colwise().norm().transpose().cwiseMax(1e-300).cwiseInverse();
    const Eigen::MatrixXd As = A * scale.asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
    Eigen::MatrixXd coef_scaled;
    if (qr.rank() < As.cols()) {
        std::cerr << "polyfilter: warning: rank-deficient order-" << order << " fit, using a ridge solve\n";
        fit.regularized = true;
        Eigen::MatrixXd H = As.transpose() * As;
        H.diagonal().array() += 1e-10 * H.trace() / static_cast<double>(H.rows());
        coef_scaled = H.ldlt().solve(As.transpose() * samples_x);
    } else {
        coef_scaled = qr.solve(samples_x);
    }
    fit.coefficients = (scale.asDiagonal() * coef_scaled).transpose();
    const Eigen::MatrixXd resid = samples_x - A * fit.coefficients.transpose();
    fit.rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    return fit;
}

} // namespace polyfilter
