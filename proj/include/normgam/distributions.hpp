#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace normgam {

struct NormalParams {
    double mu = 0.0;
    double sigma = 1.0;
};

struct GammaParams {
    double shape = 1.0;  // k
    double scale = 1.0;  // theta
};

// Background-noise contamination used by simulation scenario S2:
// (1-p) N(mu, sigma^2) + p chi^2(df, ncp).
struct MixtureNoiseSpec {
    double p = 0.0;
    NormalParams normal;
    int chisq_df = 3;
    double chisq_ncp = 55.0;
};

void validate(const NormalParams& p);       // throws std::invalid_argument
void validate(const GammaParams& g);
void validate(const MixtureNoiseSpec& m);

double normal_pdf(double x, const NormalParams& p);
double normal_logpdf(double x, const NormalParams& p);
double normal_cdf(double x, const NormalParams& p);

// Standard normal log CDF, stable over the full double range (asymptotic
// expansion for z below -37 where erfc underflows).
double std_normal_logcdf(double z);
// phi(z)/Phi(z), stable for arbitrarily negative z.
double inverse_mills(double z);

// Gamma density; returns 0 for x < 0 (convolution integrands evaluate it on
// full real grids). At x == 0: +inf for shape < 1, 1/scale for shape == 1,
// 0 for shape > 1. The +inf sentinel is never placed on quadrature or FFT
// grids, which start strictly above 0.
double gamma_pdf(double x, const GammaParams& g);
double gamma_logpdf(double x, const GammaParams& g);
double gamma_cdf(double x, const GammaParams& g);
double gamma_quantile(double q, const GammaParams& g);
// Smallest point in the upper tail where log gamma_pdf drops to
// log_density; used to size FFT periods against aliasing.
double gamma_tail_point(const GammaParams& g, double log_density);

using Rng = std::mt19937_64;

std::vector<double> sample_normal(std::size_t n, const NormalParams& p, Rng& rng);
std::vector<double> sample_gamma(std::size_t n, const GammaParams& g, Rng& rng);
// Noncentral chi-square drawn as chi2(df-1) + (Z + sqrt(ncp))^2.
std::vector<double> sample_noncentral_chisq(std::size_t n, int df, double ncp, Rng& rng);
std::vector<double> sample_mixture_noise(std::size_t n, const MixtureNoiseSpec& m, Rng& rng);

// Robust location/scale fit of negative-probe intensities:
// mu = median, sigma = MAD/0.6745. Throws on a zero-MAD sample.
NormalParams robust_normal_fit(std::span<const double> values);

}  // namespace normgam
