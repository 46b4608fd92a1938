#pragma once

#include "freeconv/measure.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace freeconv::rmt {

using ComplexMatrix = Eigen::MatrixXcd;

/// One SplitMix64 step (advances the state, returns the next value).
std::uint64_t splitmix64(std::uint64_t& state);

/// Substream seed for (seed, stream): a SplitMix64 scramble of both words.
/// Every Monte Carlo trial draws from its own substream, so estimates are
/// bit-identical for any thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Complex Gaussian with independent standard normal real and imaginary
/// parts (Box-Muller; identical across standard libraries).
Complex standard_complex_gaussian(std::mt19937_64& rng);

/// Exactly Haar-distributed unitary: QR of a complex Ginibre matrix with
/// each column of Q rescaled by the unit phase of the matching diagonal
/// entry of R. Deterministic per seed.
ComplexMatrix haar_unitary(int n, std::uint64_t seed);

/// Frobenius norm of U U* - I.
double unitarity_error(const ComplexMatrix& u);

/// Diagonal n x n realization of m: entries are the quantiles
/// m^{-1}((i - 1/2)/n), ascending; its counting measure converges to m.
std::vector<double> diag_from_measure(const Measure& m, int n);

ComplexMatrix diagonal_matrix(const std::vector<double>& entries);

/// diag(+1, -1, +1, ...), traceless for even n.
ComplexMatrix alternating_sign_diag(int n);
/// diag(+1 on the first half, -1 on the second), traceless for even n.
ComplexMatrix block_sign_diag(int n);

struct SpectrumSample {
    std::vector<double> eigenvalues;  // ascending
    std::uint64_t seed = 0;
};

/// Eigenvalues of a + U* b U with U = haar_unitary(n, seed).
SpectrumSample rotate_sum_spectrum(const ComplexMatrix& a, const ComplexMatrix& b,
                                   std::uint64_t seed);

struct Histogram {
    std::vector<double> edges;   // bin boundaries, ascending
    std::vector<double> masses;  // one per bin, sums to 1
};

/// Normalized counts per bin averaged across samples. Eigenvalues outside
/// the partition are absorbed by the end bins so masses always sum to 1.
Histogram empirical_ncm(const std::vector<SpectrumSample>& samples,
                        const std::vector<double>& edges);

struct VarianceReport {
    std::vector<int> ns;
    std::vector<double> var_g;      // Var of g_n(z) = tr(H - z)^{-1} / n
    std::vector<double> var_delta;  // Var of delta_{2,n}(z) = tr(H_2 (H - z)^{-1}) / n
    double slope_g = 0;             // least-squares slope of log Var vs log n
    double slope_delta = 0;
    Complex z;
    int trials = 0;
};

/// Monte Carlo variances of the resolvent traces over Haar draws, one row
/// per matrix size, with fitted log-log slopes (NaN when a variance is
/// degenerate, e.g. for a point-mass second input).
VarianceReport estimate_resolvent_variance(const Measure& n1, const Measure& n2, Complex z,
                                           const std::vector<int>& ns, int trials,
                                           std::uint64_t seed, int threads = 0);

/// Per-trial values of tr(U^{m_1} T_1 ... U^{m_k} T_k) / n over Haar draws.
/// The exponent sum must vanish unless allow_nonzero_sum is set.
std::vector<Complex> freeness_samples(int n, const std::vector<int>& ms,
                                      const std::vector<ComplexMatrix>& ts, int trials,
                                      std::uint64_t seed, bool allow_nonzero_sum = false,
                                      int threads = 0);

/// Monte Carlo mean of the normalized word trace above.
Complex freeness_moment(int n, const std::vector<int>& ms, const std::vector<ComplexMatrix>& ts,
                        int trials, std::uint64_t seed, bool allow_nonzero_sum = false,
                        int threads = 0);

/// Per-trial values of g_n(z) = tr(U - z)^{-1} / n for Haar unitaries;
/// |z| must stay away from the unit circle (outside [0.9, 1.1]).
std::vector<Complex> unitary_spectrum_samples(int n, Complex z, int trials, std::uint64_t seed,
                                              int threads = 0);

/// Monte Carlo mean of the samples above (0 for |z| < 1, -1/z for |z| > 1).
Complex unitary_spectrum_check(int n, Complex z, int trials, std::uint64_t seed, int threads = 0);

} // namespace freeconv::rmt
