#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "normgam/convolution.hpp"

namespace normgam {

// The six background corrections of the evaluation pipeline. ng_true and
// ng_mle share the normal-gamma payload (true vs estimated parameters);
// subtract carries the negative-probe median.
enum class CorrectionTag { ng_true, ng_mle, nexp_mle, nexp_rma, nexp_np, subtract };

struct CorrectionMethod {
    CorrectionTag tag = CorrectionTag::ng_true;
    std::variant<NormalGammaParams, NormexpParams, double> payload;
};

std::string to_string(CorrectionTag tag);
CorrectionTag correction_tag_from_string(const std::string& name);
void validate(const CorrectionMethod& method);

// Normal-gamma conditional-expectation correction
// S(x) = k theta f_ng(x; k+1, theta) / f_ng(x; k, theta),
// with closed tail regimes outside the grids. Both grids must be built for
// the same (mu, sigma, theta) with shapes k and k+1.
double correct_normgam(double x, const NormalGammaParams& p,
                       const DensityGrid& grid_k, const DensityGrid& grid_k1);
// Batch form: builds the two grids once and corrects the whole array.
std::vector<double> correct_normgam(std::span<const double> x, const NormalGammaParams& p,
                                    GridAccuracy accuracy = GridAccuracy::reference);

// Normexp correction S(x) = sigma (xbar + phi(xbar)/Phi(xbar)); asymptotic
// Mills-ratio expansion below xbar = -30.
double correct_normexp(double x, const NormexpParams& p);

double correct_subtract(double x, double negative_median);
std::vector<double> correct_subtract(std::span<const double> x,
                                     std::span<const double> negatives);

// Applies a fully specified method to an array of intensities.
std::vector<double> apply_correction(const CorrectionMethod& method,
                                     std::span<const double> x,
                                     GridAccuracy accuracy = GridAccuracy::reference);

struct OracleOptions {
    double signal_upper = 0.0;     // support bound used for paneling
    double singular_power = 0.0;   // gamma: f_S ~ s^power near 0 (power = k-1)
    double noise_center = 0.0;     // noise pdf peak offset (x - center locates it)
    double noise_width = 1.0;
    double tol = 1e-10;
};

// Conditional expectation E[S | X = x] by adaptive quadrature of
// int s f_S(s) f_B(x-s) ds / int f_S(s) f_B(x-s) ds. The reference
// implementation all parametric corrections are tested against.
double conditional_expectation_oracle(double x,
                                      const std::function<double(double)>& signal_pdf,
                                      const std::function<double(double)>& noise_pdf,
                                      const OracleOptions& opts);

}  // namespace normgam
