#pragma once

#include <Eigen/Dense>
#include <vector>

#include "convspect/fourier.hpp"
#include "convspect/tensor.hpp"

namespace convspect {

/// A real single-frequency perturbation pattern with l-infinity norm eps.
/// The same pattern is added to every channel on application.
struct Perturbation {
    int n = 0;
    Eigen::MatrixXd pattern; // n x n, max |entry| == epsilon
    Frequency freq;
    double epsilon = 0.0;
    bool is_signed = false;
};

/// Single-frequency attack pattern:
///   raw = (1 + i) * basis(freq) + (1 - i) * basis(conjugate)
/// with i the imaginary unit; the conjugate pairing makes raw exactly real
/// (pointwise 2 * (Re - Im) of the basis element). The pattern is raw scaled
/// so its l-infinity norm is exactly eps. Raw never vanishes on the integer
/// frequency grid (its (0,0) entry is 2/n), but a degenerate all-zero raw is
/// rejected rather than silently normalized.
Perturbation sfa_pattern(int n, const Frequency& freq, double epsilon);

/// Signed variant: eps * sign(raw), sign(0) = 0. Entries are in
/// {-eps, 0, +eps}.
Perturbation ssfa_pattern(int n, const Frequency& freq, double epsilon);

/// Adds the pattern to every channel and clips to [0, 1]. Input must be an
/// image-valued tensor (all values in [0, 1]) of the pattern's size.
RealTensor apply_perturbation(const RealTensor& x, const Perturbation& p);

/// Per-channel log-magnitude spectrum: log(1 + |dft2(channel)|).
/// Corner-DC layout by default; `centered` moves DC to the grid center
/// (fftshift) for rendering parity with heatmap images.
std::vector<Eigen::MatrixXd> perturbation_spectrum(const RealTensor& x, bool centered = false);

} // namespace convspect
