#pragma once

#include <Eigen/Dense>

#include "tubetrack/anchors.hpp"

namespace tubetrack {

// Quadratic motion coefficients of one encoded tube. Rows are the encoded
// coordinates (w, h, cx, cy); columns are (quadratic, linear, constant), so
// row r evaluated at time tau is p(r,0)*tau^2 + p(r,1)*tau + p(r,2).
using MotionParams = Eigen::Matrix<double, 4, 3>;

// Affine time stamps tau_k = tau0 + k*dtau for the frames of one window. Any
// affine basis spans the same quadratic family; external predictions must
// declare the basis they were fitted in.
struct TimeBasis {
    int n_frames = 16;
    double tau0 = 0.0;
    double dtau = 1.0 / 15.0;

    double tau(int k) const { return tau0 + dtau * k; }
    void validate() const;

    // tau spanning [0, 1] across the window (the default basis).
    static TimeBasis normalized(int n_frames);
    // tau equal to the raw frame offset 0..n_frames-1.
    static TimeBasis frame_index(int n_frames);
};

EncodedBox eval_encoded(const MotionParams& p, double tau);

// decode(anchor, eval_encoded(p, tau)).
BBox eval_absolute(const MotionParams& p, const BBox& anchor, double tau);

// Frame-wise eval_absolute over the basis. Visibility is filled with 1;
// callers overwrite it from the visibility head.
BoxSeq decode_tube(const MotionParams& p, const AnchorTube& anchor, const TimeBasis& basis);

struct FitResult {
    MotionParams params = MotionParams::Zero();
    double residual = 0;  // max abs encoded-coordinate error over the used samples
    int n_used = 0;
};

// Ordinary least squares of a polynomial in tau on the unmasked samples.
// n_coeffs picks the polynomial family: 1 constant, 2 affine, 3 quadratic.
// Solved by normal equations, falling back to a rank-revealing QR when the
// normal system's condition estimate exceeds 1e12.
FitResult fit(const MaskedEncodedSeq& encoded, const TimeBasis& basis, int n_coeffs = 3);

}  // namespace tubetrack
