#include "freeconv/rmt_lab.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace freeconv::rmt {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t x = (state += 0x9E3779B97F4A7C15ull);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t state = seed;
    splitmix64(state);
    state ^= 0xD1B54A32D192ED03ull * (stream + 1);
    std::uint64_t out = splitmix64(state);
    return splitmix64(state) ^ out;
}

Complex standard_complex_gaussian(std::mt19937_64& rng)
{
    constexpr double kScale = 0x1.0p-53;
    double u1 = static_cast<double>(rng() >> 11) * kScale;
    double u2 = static_cast<double>(rng() >> 11) * kScale;
    if (u1 <= 0)
        u1 = kScale;
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2 * M_PI * u2), r * std::sin(2 * M_PI * u2)};
}

ComplexMatrix haar_unitary(int n, std::uint64_t seed)
{
    if (n < 1)
        throw std::invalid_argument("haar_unitary: n must be >= 1");
    std::mt19937_64 rng(seed);
    ComplexMatrix g(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            g(i, j) = standard_complex_gaussian(rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
    ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        Complex d = r(j, j);
        double mag = std::abs(d);
        q.col(j) *= (mag > 0) ? d / mag : Complex(1, 0);
    }
    return q;
}

double unitarity_error(const ComplexMatrix& u)
{
    int n = static_cast<int>(u.rows());
    return (u * u.adjoint() - ComplexMatrix::Identity(n, n)).norm();
}

std::vector<double> diag_from_measure(const Measure& m, int n)
{
    if (n < 1)
        throw std::invalid_argument("diag_from_measure: n must be >= 1");
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        double v = m.quantile((i + 0.5) / n);
        if (!std::isfinite(v))
            throw std::domain_error("diag_from_measure: unbounded quantile");
        d[i] = v;
    }
    return d;
}

ComplexMatrix diagonal_matrix(const std::vector<double>& entries)
{
    int n = static_cast<int>(entries.size());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        m(i, i) = entries[i];
    return m;
}

ComplexMatrix alternating_sign_diag(int n)
{
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        m(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
    return m;
}

ComplexMatrix block_sign_diag(int n)
{
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        m(i, i) = (i < n / 2) ? 1.0 : -1.0;
    return m;
}

SpectrumSample rotate_sum_spectrum(const ComplexMatrix& a, const ComplexMatrix& b,
                                   std::uint64_t seed)
{
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw std::invalid_argument("rotate_sum_spectrum: dimension mismatch");
    int n = static_cast<int>(a.rows());
    ComplexMatrix u = haar_unitary(n, seed);
    ComplexMatrix h = a + u.adjoint() * b * u;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("rotate_sum_spectrum: eigensolver failed");
    SpectrumSample s;
    s.seed = seed;
    s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    return s;
}

Histogram empirical_ncm(const std::vector<SpectrumSample>& samples,
                        const std::vector<double>& edges)
{
    if (samples.empty())
        throw std::invalid_argument("empirical_ncm: no samples");
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw std::invalid_argument("empirical_ncm: need >= 2 ascending bin edges");
    Histogram h;
    h.edges = edges;
    h.masses.assign(edges.size() - 1, 0.0);
    for (const SpectrumSample& s : samples) {
        double w = 1.0 / (double(s.eigenvalues.size()) * double(samples.size()));
        for (double x : s.eigenvalues) {
            auto it = std::upper_bound(edges.begin(), edges.end(), x);
            std::ptrdiff_t bin = (it - edges.begin()) - 1;
            bin = std::clamp<std::ptrdiff_t>(bin, 0, std::ptrdiff_t(h.masses.size()) - 1);
            h.masses[static_cast<std::size_t>(bin)] += w;
        }
    }
    return h;
}

namespace {

void set_threads(int threads)
{
    if (threads > 0)
        omp_set_num_threads(threads);
}

double fit_loglog_slope(const std::vector<int>& ns, const std::vector<double>& vars)
{
    for (double v : vars)
        if (!(v > 0))
            return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double k = double(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        double x = std::log(double(ns[i])), y = std::log(vars[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

double complex_variance(const std::vector<Complex>& xs)
{
    // Deviations are taken against the first sample so a constant sequence
    // (the deterministic B = 0 case) yields exactly zero.
    Complex base = xs.front();
    Complex mean_dev = 0;
    for (Complex x : xs)
        mean_dev += x - base;
    mean_dev /= double(xs.size());
    double v = 0;
    for (Complex x : xs)
        v += std::norm(x - base - mean_dev);
    return xs.size() > 1 ? v / double(xs.size() - 1) : 0.0;
}

} // namespace

VarianceReport estimate_resolvent_variance(const Measure& n1, const Measure& n2, Complex z,
                                           const std::vector<int>& ns, int trials,
                                           std::uint64_t seed, int threads)
{
    if (!(std::abs(z.imag()) >= 1))
        throw std::invalid_argument("estimate_resolvent_variance: need |Im z| >= 1");
    if (trials < 2)
        throw std::invalid_argument("estimate_resolvent_variance: need >= 2 trials");
    if (!std::is_sorted(ns.begin(), ns.end()))
        throw std::invalid_argument("estimate_resolvent_variance: ns must be ascending");

    VarianceReport rep;
    rep.ns = ns;
    rep.z = z;
    rep.trials = trials;
    set_threads(threads);

    for (int n : ns) {
        std::vector<double> a = diag_from_measure(n1, n);
        std::vector<double> b = diag_from_measure(n2, n);
        ComplexMatrix bm = diagonal_matrix(b);
        std::vector<Complex> gs(trials), deltas(trials);

#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < trials; ++t) {
            std::uint64_t s = derive_seed(seed, (std::uint64_t(n) << 32) | std::uint64_t(t));
            ComplexMatrix u = haar_unitary(n, s);
            ComplexMatrix h = u.adjoint() * bm * u;
            for (int i = 0; i < n; ++i)
                h(i, i) += a[i];
            ComplexMatrix m = h;
            for (int i = 0; i < n; ++i)
                m(i, i) -= z;
            ComplexMatrix g = m.partialPivLu().inverse();
            Complex trg = g.trace();
            Complex trag = 0;
            for (int i = 0; i < n; ++i)
                trag += a[i] * g(i, i);
            gs[t] = trg / double(n);
            // tr(H2 G) = tr(H G) - tr(A G) and tr(H G) = n + z tr(G).
            deltas[t] = 1.0 + z * gs[t] - trag / double(n);
        }
        rep.var_g.push_back(complex_variance(gs));
        rep.var_delta.push_back(complex_variance(deltas));
    }
    rep.slope_g = fit_loglog_slope(ns, rep.var_g);
    rep.slope_delta = fit_loglog_slope(ns, rep.var_delta);
    return rep;
}

namespace {

ComplexMatrix unitary_power(const ComplexMatrix& u, int m)
{
    int n = static_cast<int>(u.rows());
    ComplexMatrix base = (m >= 0) ? u : ComplexMatrix(u.adjoint());
    ComplexMatrix p = ComplexMatrix::Identity(n, n);
    for (int k = 0; k < std::abs(m); ++k)
        p = p * base;
    return p;
}

} // namespace

std::vector<Complex> freeness_samples(int n, const std::vector<int>& ms,
                                      const std::vector<ComplexMatrix>& ts, int trials,
                                      std::uint64_t seed, bool allow_nonzero_sum, int threads)
{
    if (ms.empty() || ms.size() != ts.size())
        throw std::invalid_argument("freeness_samples: need matching nonempty ms and ts");
    for (int m : ms)
        if (m == 0)
            throw std::invalid_argument("freeness_samples: exponents must be nonzero");
    int sum = std::accumulate(ms.begin(), ms.end(), 0);
    if (sum != 0 && !allow_nonzero_sum)
        throw std::invalid_argument("freeness_samples: exponent sum must be zero");
    for (const ComplexMatrix& t : ts)
        if (t.rows() != n || t.cols() != n)
            throw std::invalid_argument("freeness_samples: matrix dimension mismatch");
    if (trials < 1)
        throw std::invalid_argument("freeness_samples: need >= 1 trial");

    std::vector<Complex> out(trials);
    set_threads(threads);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
        ComplexMatrix u = haar_unitary(n, derive_seed(seed, std::uint64_t(t)));
        ComplexMatrix word = ComplexMatrix::Identity(n, n);
        for (std::size_t r = 0; r < ms.size(); ++r)
            word = word * unitary_power(u, ms[r]) * ts[r];
        out[t] = word.trace() / double(n);
    }
    return out;
}

Complex freeness_moment(int n, const std::vector<int>& ms, const std::vector<ComplexMatrix>& ts,
                        int trials, std::uint64_t seed, bool allow_nonzero_sum, int threads)
{
    std::vector<Complex> xs = freeness_samples(n, ms, ts, trials, seed, allow_nonzero_sum, threads);
    return std::accumulate(xs.begin(), xs.end(), Complex(0, 0)) / double(xs.size());
}

std::vector<Complex> unitary_spectrum_samples(int n, Complex z, int trials, std::uint64_t seed,
                                              int threads)
{
    double r = std::abs(z);
    if (r >= 0.9 && r <= 1.1)
        throw std::invalid_argument("unitary_spectrum_samples: |z| too close to the unit circle");
    if (trials < 1)
        throw std::invalid_argument("unitary_spectrum_samples: need >= 1 trial");

    std::vector<Complex> out(trials);
    set_threads(threads);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
        ComplexMatrix u = haar_unitary(n, derive_seed(seed, std::uint64_t(t)));
        for (int i = 0; i < n; ++i)
            u(i, i) -= z;
        out[t] = u.partialPivLu().inverse().trace() / double(n);
    }
    return out;
}

Complex unitary_spectrum_check(int n, Complex z, int trials, std::uint64_t seed, int threads)
{
    std::vector<Complex> xs = unitary_spectrum_samples(n, z, trials, seed, threads);
    return std::accumulate(xs.begin(), xs.end(), Complex(0, 0)) / double(xs.size());
}

} // namespace freeconv::rmt
