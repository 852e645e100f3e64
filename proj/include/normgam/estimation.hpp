#pragma once

#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "normgam/convolution.hpp"

namespace normgam {

// One array's intensities. Regular probes observe signal + noise, negative
// controls observe pure noise; detection p-values are optional vendor
// metadata (see negctrl).
struct ProbeArray {
    std::vector<double> regular;
    std::vector<double> negative;
    std::optional<std::vector<double>> detection_pvalues;
};

// Throws unless n_reg >= 100, n_neg >= 10 and all intensities are finite.
void validate(const ProbeArray& arr);

struct NormgamFit {
    NormalGammaParams params;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool init_fallback = false;
};

struct NormexpFit {
    NormexpParams params;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Caches density grids keyed by parameters quantized to 1e-10 relative, so
// repeated simplex evaluations at the same vertex reuse the FFT.
class GridCache {
  public:
    explicit GridCache(GridAccuracy accuracy, std::size_t capacity = 8)
        : accuracy_(accuracy), capacity_(capacity) {}
    std::shared_ptr<const DensityGrid> get(const NormalGammaParams& p);

  private:
    GridAccuracy accuracy_;
    std::size_t capacity_;
    std::uint64_t tick_ = 0;
    struct Entry {
        std::shared_ptr<const DensityGrid> grid;
        std::uint64_t last_used = 0;
    };
    std::unordered_map<std::string, Entry> entries_;
};

// Sum of log normal-gamma density over regular probes plus log normal
// density over negatives; densities floored at 1e-300 before the log.
// One density grid per call (served from `cache` when provided).
double loglik_normgam(const NormalGammaParams& p, const ProbeArray& arr,
                      GridCache* cache = nullptr,
                      GridAccuracy accuracy = GridAccuracy::likelihood);
double loglik_normexp(const NormexpParams& p, const ProbeArray& arr);

// Moment-based starting point: mu0 = mean(neg), sigma0 = IQR(neg)/1.349,
// theta0 = (var(reg) - sigma0^2)/(mean(reg) - mu0), k0 = (mean(reg) - mu0)/theta0,
// with fallbacks keeping the start strictly inside the domain.
NormalGammaParams normgam_init(const ProbeArray& arr, bool* used_fallback = nullptr);

struct FitOptions {
    GridAccuracy accuracy = GridAccuracy::likelihood;
    int restarts = 2;               // simplex restarts after the initial run
    int max_evals_per_run = 4000;
    double restart_ftol_rel = 1e-8;  // declared converged when a restart
                                     // improves the log-likelihood less than this
};

// Maximum likelihood in the homogenized coordinates
// (mu, log sigma, log k*theta, log theta*sqrt(k)).
NormgamFit normgam_mle(const ProbeArray& arr, const FitOptions& opts = {});
// Three-parameter normexp MLE in (mu, log sigma, log alpha).
NormexpFit normexp_mle(const ProbeArray& arr, const FitOptions& opts = {});

// Method of moments on negative and regular probes.
NormexpParams normexp_np(const ProbeArray& arr);

// Affymetrix-style RMA parameter rule on regular probes only: mu = kernel
// density mode (refined below the mode), sigma = sqrt(2) * RMS of the
// deviations below the mode, alpha = density mode of the positive excesses.
NormexpParams normexp_rma(std::span<const double> regular);

}  // namespace normgam
