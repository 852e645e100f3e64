#include "normgam/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "normgam/stats.hpp"

namespace normgam {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2
constexpr double kSqrt1_2 = 0.7071067811865476;     // 1/sqrt(2)
}  // namespace

void validate(const NormalParams& p) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.mu) || !std::isfinite(p.sigma))
        throw std::invalid_argument("NormalParams: require finite mu and sigma > 0");
}

void validate(const GammaParams& g) {
    if (!(g.shape > 0.0) || !(g.scale > 0.0) || !std::isfinite(g.shape) ||
        !std::isfinite(g.scale))
        throw std::invalid_argument("GammaParams: require shape > 0 and scale > 0");
}

void validate(const MixtureNoiseSpec& m) {
    if (!(m.p >= 0.0 && m.p <= 1.0))
        throw std::invalid_argument("MixtureNoiseSpec: mixture weight p must lie in [0,1]");
    validate(m.normal);
    if (m.chisq_df < 1)
        throw std::invalid_argument("MixtureNoiseSpec: chisq_df must be >= 1");
    if (!(m.chisq_ncp >= 0.0))
        throw std::invalid_argument("MixtureNoiseSpec: chisq_ncp must be >= 0");
}

double normal_logpdf(double x, const NormalParams& p) {
    const double z = (x - p.mu) / p.sigma;
    return -0.5 * z * z - std::log(p.sigma) - kHalfLog2Pi;
}

double normal_pdf(double x, const NormalParams& p) {
    return std::exp(normal_logpdf(x, p));
}

double normal_cdf(double x, const NormalParams& p) {
    return 0.5 * std::erfc(-(x - p.mu) / p.sigma * kSqrt1_2);
}

double std_normal_logcdf(double z) {
    if (z > 8.0) return std::log1p(-0.5 * std::erfc(z * kSqrt1_2));
    if (z > -37.0) return std::log(0.5 * std::erfc(-z * kSqrt1_2));
    // Asymptotic expansion of Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - ...)
    const double zi2 = 1.0 / (z * z);
    const double series = 1.0 + zi2 * (-1.0 + zi2 * (3.0 + zi2 * (-15.0 + zi2 * 105.0)));
    return -0.5 * z * z - std::log(-z) - kHalfLog2Pi + std::log(series);
}

double inverse_mills(double z) {
    if (z < -30.0) {
        const double zi2 = 1.0 / (z * z);
        const double series =
            1.0 + zi2 * (-1.0 + zi2 * (3.0 + zi2 * (-15.0 + zi2 * 105.0)));
        return -z / series;
    }
    return std::exp(-0.5 * z * z - kHalfLog2Pi - std_normal_logcdf(z));
}

double gamma_logpdf(double x, const GammaParams& g) {
    if (x < 0.0) return -std::numeric_limits<double>::infinity();
    if (x == 0.0) {
        if (g.shape < 1.0) return std::numeric_limits<double>::infinity();
        if (g.shape == 1.0) return -std::log(g.scale);
        return -std::numeric_limits<double>::infinity();
    }
    return (g.shape - 1.0) * std::log(x) - x / g.scale - g.shape * std::log(g.scale) -
           std::lgamma(g.shape);
}

double gamma_pdf(double x, const GammaParams& g) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (g.shape < 1.0) return std::numeric_limits<double>::infinity();
        if (g.shape == 1.0) return 1.0 / g.scale;
        return 0.0;
    }
    return std::exp(gamma_logpdf(x, g));
}

double gamma_cdf(double x, const GammaParams& g) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(g.shape, x / g.scale);
}

double gamma_quantile(double q, const GammaParams& g) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("gamma_quantile: q must lie in (0,1)");
    return g.scale * boost::math::gamma_p_inv(g.shape, q);
}

double gamma_tail_point(const GammaParams& g, double log_density) {
    // log pdf is decreasing beyond the mode; expand then bisect.
    double lo = g.scale * std::max(1.0, g.shape - 1.0);
    if (gamma_logpdf(lo, g) <= log_density) return lo;
    double hi = lo * 2.0;
    int guard = 0;
    while (gamma_logpdf(hi, g) > log_density) {
        hi *= 2.0;
        if (++guard > 300)
            throw std::runtime_error("gamma_tail_point: bracket expansion failed");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-9 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gamma_logpdf(mid, g) > log_density ? lo : hi) = mid;
    }
    return hi;
}

std::vector<double> sample_normal(std::size_t n, const NormalParams& p, Rng& rng) {
    validate(p);
    std::normal_distribution<double> dist(p.mu, p.sigma);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

std::vector<double> sample_gamma(std::size_t n, const GammaParams& g, Rng& rng) {
    validate(g);
    std::gamma_distribution<double> dist(g.shape, g.scale);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

std::vector<double> sample_noncentral_chisq(std::size_t n, int df, double ncp, Rng& rng) {
    if (df < 1) throw std::invalid_argument("sample_noncentral_chisq: df must be >= 1");
    if (!(ncp >= 0.0)) throw std::invalid_argument("sample_noncentral_chisq: ncp must be >= 0");
    std::normal_distribution<double> z(0.0, 1.0);
    std::gamma_distribution<double> central(0.5 * (df - 1), 2.0);
    const double root_ncp = std::sqrt(ncp);
    std::vector<double> out(n);
    for (auto& v : out) {
        const double shifted = z(rng) + root_ncp;
        v = shifted * shifted + (df > 1 ? central(rng) : 0.0);
    }
    return out;
}

std::vector<double> sample_mixture_noise(std::size_t n, const MixtureNoiseSpec& m, Rng& rng) {
    validate(m);
    // p == 0 draws the plain normal without consuming a uniform, so the S2
    // degenerate case reproduces S1 bit for bit under the same seed.
    if (m.p == 0.0) return sample_normal(n, m.normal, rng);
    if (m.p == 1.0) return sample_noncentral_chisq(n, m.chisq_df, m.chisq_ncp, rng);
    std::normal_distribution<double> z(0.0, 1.0);
    std::gamma_distribution<double> central(0.5 * (m.chisq_df - 1), 2.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double root_ncp = std::sqrt(m.chisq_ncp);
    std::vector<double> out(n);
    for (auto& v : out) {
        if (u(rng) < m.p) {
            const double shifted = z(rng) + root_ncp;
            v = shifted * shifted + (m.chisq_df > 1 ? central(rng) : 0.0);
        } else {
            v = m.normal.mu + m.normal.sigma * z(rng);
        }
    }
    return out;
}

NormalParams robust_normal_fit(std::span<const double> values) {
    if (values.size() < 2)
        throw std::invalid_argument("robust_normal_fit: need at least 2 values");
    const double mu = median(values);
    const double mad = median_abs_deviation(values);
    if (!(mad > 0.0))
        throw std::invalid_argument("robust_normal_fit: degenerate sample (zero MAD)");
    return {mu, mad / 0.6745};
}

}  // namespace normgam
