// Textbook additive-noise UKF written independently of the library: plain
// loops, Cholesky square root, sequential sums.
#pragma once

#include <Eigen/Dense>

#include <functional>

namespace refukf {

struct Params {
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;
};

struct Points {
    Eigen::MatrixXd X;
    Eigen::VectorXd wm;
    Eigen::VectorXd wc;
};

inline Points sigma_points(const Eigen::VectorXd& x, const Eigen::MatrixXd& P, const Params& p) {
    const int n = static_cast<int>(x.size());
    const double lambda = p.alpha * p.alpha * (n + p.kappa) - n;
    const Eigen::MatrixXd S = Eigen::LLT<Eigen::MatrixXd>((n + lambda) * P).matrixL();
    Points out;
    out.X.resize(n, 2 * n + 1);
    out.wm.resize(2 * n + 1);
    out.wc.resize(2 * n + 1);
    out.X.col(0) = x;
    out.wm(0) = lambda / (n + lambda);
    out.wc(0) = out.wm(0) + 1.0 - p.alpha * p.alpha + p.beta;
    for (int i = 0; i < n; ++i) {
        out.X.col(1 + i) = x + S.col(i);
        out.X.col(1 + n + i) = x - S.col(i);
        out.wm(1 + i) = out.wm(1 + n + i) = 0.5 / (n + lambda);
        out.wc(1 + i) = out.wc(1 + n + i) = 0.5 / (n + lambda);
    }
    return out;
}

using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Estimate {
    Eigen::VectorXd x;
    Eigen::MatrixXd P;
};

/// x' = f(x) + G mu, mu ~ N(0, Q).
inline Estimate predict(const Estimate& e, const Map& f, const Eigen::MatrixXd& G, const Eigen::MatrixXd& Q,
                        const Params& p) {
    const Points s = sigma_points(e.x, e.P, p);
    const int P = static_cast<int>(s.X.cols());
    Eigen::MatrixXd F(e.x.size(), P);
    for (int i = 0; i < P; ++i) F.col(i) = f(s.X.col(i));
    Estimate out;
    out.x = Eigen::VectorXd::Zero(e.x.size());
    for (int i = 0; i < P; ++i) out.x += s.wm(i) * F.col(i);
    out.P = G * Q * G.transpose();
    for (int i = 0; i < P; ++i) {
        const Eigen::VectorXd d = F.col(i) - out.x;
        out.P += s.wc(i) * d * d.transpose();
    }
    return out;
}

/// y = h(x) + eta, eta ~ N(0, R).
inline Estimate update(const Estimate& e, const Map& h, const Eigen::MatrixXd& R, const Eigen::VectorXd& y,
                       const Params& p) {
    const Points s = sigma_points(e.x, e.P, p);
    const int P = static_cast<int>(s.X.cols());
    const int m = static_cast<int>(y.size());
    Eigen::MatrixXd Y(m, P);
    for (int i = 0; i < P; ++i) Y.col(i) = h(s.X.col(i));
    Eigen::VectorXd yhat = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < P; ++i) yhat += s.wm(i) * Y.col(i);
    Eigen::MatrixXd Pyy = R;
    Eigen::MatrixXd Pxy = Eigen::MatrixXd::Zero(e.x.size(), m);
    for (int i = 0; i < P; ++i) {
        const Eigen::VectorXd dy = Y.col(i) - yhat;
        Pyy += s.wc(i) * dy * dy.transpose();
        Pxy += s.wc(i) * (s.X.col(i) - e.x) * dy.transpose();
    }
    const Eigen::MatrixXd K = Pxy * Pyy.inverse();
    return {e.x + K * (y - yhat), e.P - K * Pyy * K.transpose()};
}

} // namespace refukf
