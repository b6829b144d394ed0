#pragma once

#include <Eigen/Dense>
#include <complex>

#include "convspect/errors.hpp"

namespace convspect {

using Complex = std::complex<double>;
using ComplexGrid = Eigen::MatrixXcd;

/// A spatial frequency (i, j) on the n x n grid, 0-based.
/// Its conjugate partner is ((n-i) mod n, (n-j) mod n).
struct Frequency {
    int i = 0;
    int j = 0;
    int n = 1;

    bool valid() const { return n >= 1 && i >= 0 && i < n && j >= 0 && j < n; }

    Frequency conjugate() const { return {(n - i) % n, (n - j) % n, n}; }

    bool self_conjugate() const {
        const Frequency c = conjugate();
        return c.i == i && c.j == j;
    }

    /// Lexicographically smaller of {self, conjugate}; the representative
    /// used wherever conjugate pairs are deduplicated.
    Frequency canonical() const {
        const Frequency c = conjugate();
        if (c.i < i || (c.i == i && c.j < j)) return c;
        return *this;
    }

    bool operator==(const Frequency& o) const { return i == o.i && j == o.j && n == o.n; }
    bool operator!=(const Frequency& o) const { return !(*this == o); }
};

/// Unitary DFT matrix: entry (u, v) = exp(2*pi*sqrt(-1)*u*v/n) / sqrt(n).
/// F * F^H = I. Throws ContractError for n = 0.
Eigen::MatrixXcd dft_matrix(int n);

/// Unnormalized forward 2-D transform:
///   out(u, v) = sum_{m,n} x(m, n) * exp(-2*pi*i*(u*m + v*n)/N).
/// Computed as a separable row/column transform; agrees with the direct
/// double sum to machine precision. Square input only.
ComplexGrid dft2(const ComplexGrid& x);
ComplexGrid dft2(const Eigen::MatrixXd& x);

/// Exact inverse of dft2 (carries the full 1/N^2 factor):
///   out(u, v) = (1/N^2) * sum_{m,n} y(m, n) * exp(+2*pi*i*(u*m + v*n)/N).
ComplexGrid idft2(const ComplexGrid& y);

/// Rank-one Fourier basis element for frequency (i, j):
///   entry (u, v) = w^(i*u) * w^(j*v) / n,  w = exp(2*pi*i/n).
/// Unit Frobenius norm (the outer product of two unitary-DFT rows).
ComplexGrid fourier_basis(int n, const Frequency& freq);

/// True iff max |y(u,v) - conj(y(N-u, N-v))| <= tol. The spectral condition
/// equivalent to realness of the inverse transform.
bool check_conjugate_symmetry(const ComplexGrid& y, double tol);

} // namespace convspect
