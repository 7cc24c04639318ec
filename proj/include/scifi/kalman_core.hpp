#pragma once

// Linear-Gaussian state estimation: the standard Kalman filter and the
// colored-measurement-noise variant built on Bryson measurement differencing.
//
// All routines are templated on the state size N and measurement size M.
// Fixed sizes give allocation-free 2x2 arithmetic for the attenuation filter;
// Eigen::Dynamic works for randomized tests of arbitrary dimension.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>

#include "scifi/errors.hpp"

namespace scifi::kf {

template <int N>
using Vector = Eigen::Matrix<double, N, 1>;

template <int Rows, int Cols>
using Matrix = Eigen::Matrix<double, Rows, Cols>;

/// Mean and covariance of a Gaussian state estimate at step k.
template <int N>
struct GaussianEstimate {
    Vector<N> mean;
    Matrix<N, N> cov;
    long time_index = 0;
    double timestamp = 0.0; ///< seconds
};

/// One transition of a white-noise linear system:
///   x_k = A x_{k-1} + w,  w ~ N(0, Q)
///   y_k = C x_k + v,      v ~ N(0, R)
template <int N, int M>
struct WhiteSystemStep {
    Matrix<N, N> A;
    Matrix<N, N> Q;
    Matrix<M, N> C;
    Matrix<M, M> R;
    double dt = 1.0; ///< time advanced by the transition, seconds
};

/// One transition of a system observed through AR(1) colored noise:
///   x_k = A x_{k-1} + w,        w ~ N(0, Q)
///   y_k = C_now x_k + n_k
///   n_k = F n_{k-1} + eps,      eps ~ N(0, R)
/// Every matrix governs the interval ending at step k.
template <int N, int M>
struct ColoredSystemStep {
    Matrix<N, N> A;
    Matrix<N, N> Q;
    Matrix<M, N> C_now;
    Matrix<M, N> C_prev;
    Matrix<M, M> F;
    Matrix<M, M> R;
    double dt = 1.0;
};

template <int M>
struct Innovation {
    Vector<M> value;
    Matrix<M, M> cov;
};

template <int N, int M>
struct UpdateResult {
    GaussianEstimate<N> posterior;
    Innovation<M> innovation;
};

/// How the colored filter removes the correlation between process noise and
/// pseudo-measurement noise before propagating to step k.
enum class GainMode {
    /// J = Q C^T R~^-1 and cov(xi) = Q - J R~ J^T. Exact MMSE recursion.
    decorrelated,
    /// J = P_xi R~^-1 with the "+ J R~ J^T" covariance term, as historically
    /// published for this filter. Kept for comparison only.
    paper_faithful,
};

inline const char* to_string(GainMode mode) {
    return mode == GainMode::decorrelated ? "decorrelated" : "paper_faithful";
}

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError("dimension mismatch: " + what);
    }
}

template <typename Mat>
void symmetrize(Mat& P) {
    P = (0.5 * (P + P.transpose())).eval();
}

/// Symmetrize, then clip small negative eigenvalues produced by round-off.
/// Eigenvalues below -1e-9 * max(trace, scale) indicate real divergence and
/// throw. `scale` is the trace of the operands the result was formed from, so
/// a posterior that collapses to zero is judged against the prior it came from.
template <typename Mat>
void repair_covariance(Mat& P, const char* where, double scale = 0.0) {
    symmetrize(P);
    if (!P.allFinite()) {
        throw NumericalError(std::string(where) + ": covariance is not finite");
    }
    Eigen::LLT<Mat> llt(P);
    if (llt.info() == Eigen::Success) {
        return;
    }
    // The iterative solver, not computeDirect: the closed-form 2x2/3x3 path
    // loses the small eigenvalues of badly scaled covariances such as the
    // attenuation/slope pair, whose diagonal spans eight decades.
    Eigen::SelfAdjointEigenSolver<Mat> eig(P);
    const double lowest = eig.eigenvalues().minCoeff();
    if (lowest >= 0.0) {
        return;
    }
    const double tolerance = 1e-9 * std::max({P.trace(), scale, 0.0});
    if (lowest < -tolerance) {
        std::ostringstream msg;
        msg << where << ": covariance lost positive semidefiniteness (min eigenvalue "
            << lowest << ", trace " << P.trace() << ")";
        throw NumericalError(msg.str());
    }
    P = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
        eig.eigenvectors().transpose();
    symmetrize(P);
}

template <typename Mat>
Eigen::LLT<Mat> factor_innovation(const Mat& S, const char* where) {
    if (!S.allFinite()) {
        throw SingularInnovationError(std::string(where) + ": innovation covariance is not finite");
    }
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovationError(std::string(where) +
                                      ": innovation covariance is not positive definite "
                                      "(degenerate R and C P C^T)");
    }
    return llt;
}

template <int N>
void check_estimate(const GaussianEstimate<N>& est) {
    require(est.cov.rows() == est.mean.size() && est.cov.cols() == est.mean.size(),
            "estimate covariance does not match mean");
}

} // namespace detail

/// Prediction with explicit dynamics: mean' = A mean, cov' = A cov A^T + Q.
template <int N>
GaussianEstimate<N> kf_predict(const GaussianEstimate<N>& prev, const Matrix<N, N>& A,
                               const Matrix<N, N>& Q, double dt) {
    detail::check_estimate(prev);
    const auto n = prev.mean.size();
    detail::require(A.rows() == n && A.cols() == n, "A must be n x n");
    detail::require(Q.rows() == n && Q.cols() == n, "Q must be n x n");

    GaussianEstimate<N> out;
    out.mean = A * prev.mean;
    out.cov = A * prev.cov * A.transpose() + Q;
    detail::repair_covariance(out.cov, "kf_predict");
    out.time_index = prev.time_index + 1;
    out.timestamp = prev.timestamp + dt;
    return out;
}

template <int N, int M>
GaussianEstimate<N> kf_predict(const GaussianEstimate<N>& prev, const WhiteSystemStep<N, M>& step) {
    return kf_predict<N>(prev, step.A, step.Q, step.dt);
}

/// Measurement update of a predicted estimate.
template <int N, int M>
UpdateResult<N, M> kf_update(const GaussianEstimate<N>& prior, const Vector<M>& y,
                             const WhiteSystemStep<N, M>& step) {
    detail::check_estimate(prior);
    const auto n = prior.mean.size();
    const auto m = y.size();
    detail::require(step.C.rows() == m && step.C.cols() == n, "C must be m x n");
    detail::require(step.R.rows() == m && step.R.cols() == m, "R must be m x m");

    UpdateResult<N, M> out;
    out.innovation.value = y - step.C * prior.mean;
    Matrix<M, M> S = step.R + step.C * prior.cov * step.C.transpose();
    detail::symmetrize(S);
    out.innovation.cov = S;

    const auto llt = detail::factor_innovation(S, "kf_update");
    const Matrix<N, M> PCt = prior.cov * step.C.transpose();
    const Matrix<N, M> K = llt.solve(PCt.transpose()).transpose();

    out.posterior.mean = prior.mean + K * out.innovation.value;
    const Matrix<N, N> I = Matrix<N, N>::Identity(n, n);
    out.posterior.cov = (I - K * step.C) * prior.cov;
    detail::repair_covariance(out.posterior.cov, "kf_update", prior.cov.trace());
    out.posterior.time_index = prior.time_index;
    out.posterior.timestamp = prior.timestamp;
    return out;
}

/// Bryson pseudo-measurement z_k = y_k - F y_{k-1}.
template <int M>
Vector<M> pseudo_measurement(const Vector<M>& y_now, const Vector<M>& y_prev, const Matrix<M, M>& F) {
    detail::require(y_now.size() == y_prev.size(), "y_now and y_prev differ in size");
    detail::require(F.rows() == y_now.size() && F.cols() == y_now.size(), "F must be m x m");
    return y_now - F * y_prev;
}

/// Output of the first half of a colored-noise step: the estimate of x_{k-1}
/// refined with the pseudo-measurement z_k, plus the quantities the
/// propagation half needs.
template <int N, int M>
struct GainStage {
    GaussianEstimate<N> smoothed;     ///< x_{k-1|k}, P_{k-1|k}
    Innovation<M> innovation;         ///< i_k, S_k
    Matrix<N, M> cross_cov;           ///< P_xi = P_{k-1|k-1} G^T
    Matrix<M, M> pseudo_noise_cov;    ///< R~ = C Q C^T + R
    Matrix<M, N> pseudo_observation;  ///< G = C_now A - F C_prev
};

template <int N, int M>
void check_colored_step(const GaussianEstimate<N>& est, const ColoredSystemStep<N, M>& step) {
    detail::check_estimate(est);
    const auto n = est.mean.size();
    const auto m = step.F.rows();
    detail::require(step.A.rows() == n && step.A.cols() == n, "A must be n x n");
    detail::require(step.Q.rows() == n && step.Q.cols() == n, "Q must be n x n");
    detail::require(step.C_now.rows() == m && step.C_now.cols() == n, "C_now must be m x n");
    detail::require(step.C_prev.rows() == m && step.C_prev.cols() == n, "C_prev must be m x n");
    detail::require(step.F.cols() == m, "F must be square");
    detail::require(step.R.rows() == m && step.R.cols() == m, "R must be m x m");
}

template <int N, int M>
GainStage<N, M> ckf_gain_stage(const GaussianEstimate<N>& prev, const Vector<M>& z,
                               const ColoredSystemStep<N, M>& step) {
    check_colored_step(prev, step);
    detail::require(z.size() == step.F.rows(), "z must have m entries");

    GainStage<N, M> out;
    out.pseudo_observation = step.C_now * step.A - step.F * step.C_prev;
    out.pseudo_noise_cov = step.C_now * step.Q * step.C_now.transpose() + step.R;
    detail::symmetrize(out.pseudo_noise_cov);

    const auto& G = out.pseudo_observation;
    out.innovation.value = z - G * prev.mean;
    Matrix<M, M> S = G * prev.cov * G.transpose() + out.pseudo_noise_cov;
    detail::symmetrize(S);
    out.innovation.cov = S;
    out.cross_cov = prev.cov * G.transpose();

    const auto llt = detail::factor_innovation(S, "ckf_gain_stage");
    const Matrix<N, M> K = llt.solve(out.cross_cov.transpose()).transpose();

    out.smoothed.mean = prev.mean + K * out.innovation.value;
    out.smoothed.cov = prev.cov - K * S * K.transpose();
    detail::repair_covariance(out.smoothed.cov, "ckf_gain_stage", prev.cov.trace());
    out.smoothed.time_index = prev.time_index;
    out.smoothed.timestamp = prev.timestamp;
    return out;
}

template <int N, int M>
GaussianEstimate<N> ckf_propagate(const GainStage<N, M>& stage, const Vector<M>& z,
                                  const ColoredSystemStep<N, M>& step, GainMode mode) {
    check_colored_step(stage.smoothed, step);

    const auto& Rt = stage.pseudo_noise_cov;
    if (!Rt.allFinite()) {
        throw DegeneratePseudoNoiseError("ckf_propagate: pseudo-noise covariance is not finite");
    }
    Eigen::LLT<Matrix<M, M>> llt(Rt);
    if (llt.info() != Eigen::Success) {
        throw DegeneratePseudoNoiseError(
            "ckf_propagate: pseudo-noise covariance C Q C^T + R is singular");
    }

    const Matrix<N, M> cross = mode == GainMode::paper_faithful
                                   ? stage.cross_cov
                                   : Matrix<N, M>(step.Q * step.C_now.transpose());
    const Matrix<N, M> J = llt.solve(cross.transpose()).transpose();
    const Matrix<N, N> Ft = step.A - J * stage.pseudo_observation;
    const Matrix<N, N> JRJt = J * Rt * J.transpose();

    GaussianEstimate<N> out;
    out.mean = Ft * stage.smoothed.mean + J * z;
    if (mode == GainMode::paper_faithful) {
        out.cov = Ft * stage.smoothed.cov * Ft.transpose() + step.Q + JRJt;
    } else {
        // cov(w - J e) = Q - J R~ J^T once J R~ equals cov(w, e) = Q C^T.
        out.cov = Ft * stage.smoothed.cov * Ft.transpose() + step.Q - JRJt;
    }
    detail::repair_covariance(out.cov, "ckf_propagate",
                              (Ft * stage.smoothed.cov * Ft.transpose()).trace() + step.Q.trace());
    out.time_index = stage.smoothed.time_index + 1;
    out.timestamp = stage.smoothed.timestamp + step.dt;
    return out;
}

template <int N, int M>
UpdateResult<N, M> ckf_step(const GaussianEstimate<N>& prev, const Vector<M>& y_now,
                            const Vector<M>& y_prev, const ColoredSystemStep<N, M>& step,
                            GainMode mode = GainMode::decorrelated) {
    if (!(step.dt > 0.0)) {
        throw ConfigError("ckf_step: time step must be strictly positive");
    }
    const Vector<M> z = pseudo_measurement<M>(y_now, y_prev, step.F);
    const auto stage = ckf_gain_stage(prev, z, step);
    return {ckf_propagate(stage, z, step, mode), stage.innovation};
}

// --- augmented-state reformulation -----------------------------------------
//
// Stacking [x; n] turns the colored system into a white one with zero
// measurement noise. Running the standard filter on it yields the exact MMSE
// estimate and serves as an independent reference for the colored recursion.

constexpr int augmented_size(int n, int m) {
    return (n == Eigen::Dynamic || m == Eigen::Dynamic) ? Eigen::Dynamic : n + m;
}

template <int N, int M>
using AugmentedEstimate = GaussianEstimate<augmented_size(N, M)>;

/// Augmented prior that carries no information on n_0 besides y_0 = C x_0 + n_0,
/// which is the information state implied by differencing from y_0 onward.
template <int N, int M>
AugmentedEstimate<N, M> augment_prior(const GaussianEstimate<N>& prior, const Vector<M>& y0,
                                      const Matrix<M, N>& C0) {
    constexpr int NA = augmented_size(N, M);
    const auto n = prior.mean.size();
    const auto m = y0.size();
    detail::require(C0.rows() == m && C0.cols() == n, "C0 must be m x n");

    AugmentedEstimate<N, M> aug;
    aug.mean = Vector<NA>::Zero(n + m);
    aug.mean.head(n) = prior.mean;
    aug.mean.tail(m) = y0 - C0 * prior.mean;
    aug.cov = Matrix<NA, NA>::Zero(n + m, n + m);
    aug.cov.topLeftCorner(n, n) = prior.cov;
    aug.cov.topRightCorner(n, m) = -prior.cov * C0.transpose();
    aug.cov.bottomLeftCorner(m, n) = -C0 * prior.cov;
    aug.cov.bottomRightCorner(m, m) = C0 * prior.cov * C0.transpose();
    detail::symmetrize(aug.cov);
    aug.time_index = prior.time_index;
    aug.timestamp = prior.timestamp;
    return aug;
}

template <int N, int M>
GaussianEstimate<N> state_marginal(const AugmentedEstimate<N, M>& aug, Eigen::Index n) {
    GaussianEstimate<N> out;
    out.mean = aug.mean.head(n);
    out.cov = aug.cov.topLeftCorner(n, n);
    out.time_index = aug.time_index;
    out.timestamp = aug.timestamp;
    return out;
}

template <int N, int M>
UpdateResult<augmented_size(N, M), M> augmented_oracle_step(const AugmentedEstimate<N, M>& prev_aug,
                                                           const Vector<M>& y,
                                                           const ColoredSystemStep<N, M>& step) {
    constexpr int NA = augmented_size(N, M);
    const auto n = step.A.rows();
    const auto m = step.F.rows();
    detail::require(prev_aug.mean.size() == n + m, "augmented estimate must have n + m entries");

    WhiteSystemStep<NA, M> aug;
    aug.A = Matrix<NA, NA>::Zero(n + m, n + m);
    aug.A.topLeftCorner(n, n) = step.A;
    aug.A.bottomRightCorner(m, m) = step.F;
    aug.Q = Matrix<NA, NA>::Zero(n + m, n + m);
    aug.Q.topLeftCorner(n, n) = step.Q;
    aug.Q.bottomRightCorner(m, m) = step.R;
    aug.C = Matrix<M, NA>::Zero(m, n + m);
    aug.C.leftCols(n) = step.C_now;
    aug.C.rightCols(m) = Matrix<M, M>::Identity(m, m);
    aug.R = Matrix<M, M>::Zero(m, m);
    aug.dt = step.dt;

    const auto prior = kf_predict(prev_aug, aug);
    try {
        return kf_update(prior, y, aug);
    } catch (const SingularInnovationError&) {
        std::cerr << "warning: augmented innovation covariance singular, retrying with 1e-12 jitter\n";
        aug.R = 1e-12 * Matrix<M, M>::Identity(m, m);
        return kf_update(prior, y, aug);
    }
}

} // namespace scifi::kf
