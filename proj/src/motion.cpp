#include "tubetrack/motion.hpp"

#include <cmath>
#include <stdexcept>

#include "tubetrack/errors.hpp"

namespace tubetrack {

void TimeBasis::validate() const {
    if (n_frames < 2)
        throw ConfigError("basis.n_frames: must be >= 2");
    if (!(dtau > 0) || !std::isfinite(dtau) || !std::isfinite(tau0))
        throw ConfigError("basis.dtau: must be finite and positive");
}

TimeBasis TimeBasis::normalized(int n_frames) {
    TimeBasis b;
    b.n_frames = n_frames;
    b.tau0 = 0.0;
    b.dtau = 1.0 / (n_frames - 1);
    b.validate();
    return b;
}

TimeBasis TimeBasis::frame_index(int n_frames) {
    TimeBasis b;
    b.n_frames = n_frames;
    b.tau0 = 0.0;
    b.dtau = 1.0;
    b.validate();
    return b;
}

EncodedBox eval_encoded(const MotionParams& p, double tau) {
    if (!p.allFinite() || !std::isfinite(tau))
        throw std::invalid_argument("eval_encoded: non-finite input");
    const Eigen::Vector3d basis(tau * tau, tau, 1.0);
    const Eigen::Vector4d v = p * basis;
    EncodedBox g;
    g.g_w = v(0);
    g.g_h = v(1);
    g.g_cx = v(2);
    g.g_cy = v(3);
    return g;
}

BBox eval_absolute(const MotionParams& p, const BBox& anchor, double tau) {
    return decode(anchor, eval_encoded(p, tau));
}

BoxSeq decode_tube(const MotionParams& p, const AnchorTube& anchor, const TimeBasis& basis) {
    basis.validate();
    BoxSeq seq;
    seq.boxes.reserve(basis.n_frames);
    for (int k = 0; k < basis.n_frames; ++k)
        seq.boxes.push_back(eval_absolute(p, anchor.box, basis.tau(k)));
    seq.visibility.assign(basis.n_frames, 1.0);
    return seq;
}

FitResult fit(const MaskedEncodedSeq& encoded, const TimeBasis& basis, int n_coeffs) {
    basis.validate();
    if (n_coeffs < 1 || n_coeffs > 3)
        throw std::invalid_argument("fit: n_coeffs must be 1, 2 or 3");
    if (encoded.size() > static_cast<std::size_t>(basis.n_frames))
        throw std::invalid_argument("fit: more samples than frames in the basis");

    int n_used = 0;
    for (const auto& g : encoded)
        if (g)
            ++n_used;
    if (n_used < std::max(n_coeffs, 3))
        throw UnderdeterminedError("fit: " + std::to_string(n_used) +
                                   " unmasked samples; need at least " +
                                   std::to_string(std::max(n_coeffs, 3)));

    // Design columns ordered (tau^2, tau, 1), trimmed to the low-order
    // n_coeffs columns so params always land in MotionParams layout.
    Eigen::MatrixXd design(n_used, n_coeffs);
    Eigen::MatrixXd rhs(n_used, 4);
    int row = 0;
    for (std::size_t k = 0; k < encoded.size(); ++k) {
        if (!encoded[k])
            continue;
        const double tau = basis.tau(static_cast<int>(k));
        for (int c = 0; c < n_coeffs; ++c) {
            const int power = n_coeffs - 1 - c;
            design(row, c) = std::pow(tau, power);
        }
        rhs(row, 0) = encoded[k]->g_w;
        rhs(row, 1) = encoded[k]->g_h;
        rhs(row, 2) = encoded[k]->g_cx;
        rhs(row, 3) = encoded[k]->g_cy;
        ++row;
    }

    const Eigen::MatrixXd normal = design.transpose() * design;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();

    Eigen::MatrixXd sol;  // n_coeffs x 4
    if (lmin > 0 && lmax / lmin <= 1e12) {
        sol = normal.ldlt().solve(design.transpose() * rhs);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < n_coeffs)
            throw UnderdeterminedError("fit: rank-deficient design (fewer than " +
                                       std::to_string(n_coeffs) + " distinct tau values)");
        sol = qr.solve(rhs);
    }

    FitResult result;
    result.n_used = n_used;
    result.params.setZero();
    for (int c = 0; c < n_coeffs; ++c)
        result.params.col(3 - n_coeffs + c) = sol.row(c).transpose();
    result.residual = (design * sol - rhs).cwiseAbs().maxCoeff();
    return result;
}

}  // namespace tubetrack
