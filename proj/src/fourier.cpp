#include "convspect/fourier.hpp"

#include <cmath>

namespace convspect {

namespace {

// Row transform matrix for the unnormalized forward sum: W(u, m) = exp(sign * 2*pi*i*u*m/n).
Eigen::MatrixXcd twiddle(int n, double sign) {
    Eigen::MatrixXcd w(n, n);
    for (int u = 0; u < n; ++u) {
        for (int m = 0; m < n; ++m) {
            // reduce u*m mod n first so large grids keep full phase accuracy
            const long long um = (static_cast<long long>(u) * m) % n;
            const double ang = sign * 2.0 * M_PI * static_cast<double>(um) / n;
            w(u, m) = Complex(std::cos(ang), std::sin(ang));
        }
    }
    return w;
}

void require_square(const ComplexGrid& x, const char* op) {
    if (x.rows() != x.cols() || x.rows() < 1)
        throw ContractError(std::string(op) + ": input must be a nonempty square grid");
}

} // namespace

Eigen::MatrixXcd dft_matrix(int n) {
    if (n < 1) throw ContractError("dft_matrix: size must be >= 1");
    Eigen::MatrixXcd f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            const long long uv = (static_cast<long long>(u) * v) % n;
            const double ang = 2.0 * M_PI * static_cast<double>(uv) / n;
            f(u, v) = scale * Complex(std::cos(ang), std::sin(ang));
        }
    }
    return f;
}

ComplexGrid dft2(const ComplexGrid& x) {
    require_square(x, "dft2");
    const int n = static_cast<int>(x.rows());
    const Eigen::MatrixXcd w = twiddle(n, -1.0);
    // out(u,v) = sum_m sum_n W(u,m) x(m,n) W(v,n)
    return w * x * w.transpose();
}

ComplexGrid dft2(const Eigen::MatrixXd& x) { return dft2(ComplexGrid(x.cast<Complex>())); }

ComplexGrid idft2(const ComplexGrid& y) {
    require_square(y, "idft2");
    const int n = static_cast<int>(y.rows());
    const Eigen::MatrixXcd w = twiddle(n, +1.0);
    return (w * y * w.transpose()) / (static_cast<double>(n) * n);
}

ComplexGrid fourier_basis(int n, const Frequency& freq) {
    if (n < 1) throw ContractError("fourier_basis: size must be >= 1");
    if (freq.n != n || !freq.valid())
        throw ContractError("fourier_basis: frequency out of range for grid size");
    ComplexGrid b(n, n);
    const double scale = 1.0 / static_cast<double>(n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            const long long ph = (static_cast<long long>(freq.i) * u + static_cast<long long>(freq.j) * v) % n;
            const double ang = 2.0 * M_PI * static_cast<double>(ph) / n;
            b(u, v) = scale * Complex(std::cos(ang), std::sin(ang));
        }
    }
    return b;
}

bool check_conjugate_symmetry(const ComplexGrid& y, double tol) {
    require_square(y, "check_conjugate_symmetry");
    if (tol < 0.0) throw ContractError("check_conjugate_symmetry: tol must be >= 0");
    const int n = static_cast<int>(y.rows());
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            const Complex partner = y((n - u) % n, (n - v) % n);
            if (std::abs(y(u, v) - std::conj(partner)) > tol) return false;
        }
    }
    return true;
}

} // namespace convspect
