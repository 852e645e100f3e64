#include "normgam/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "normgam/optim.hpp"
#include "normgam/stats.hpp"

namespace normgam {

namespace {

constexpr double kLogFloor = -690.77552789821368;  // log(1e-300)
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string quantized_key(const NormalGammaParams& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.10e|%.10e|%.10e|%.10e", p.mu, p.sigma,
                  p.shape, p.scale);
    return buf;
}

struct SimplexFit {
    std::vector<double> x;
    double fval = kInf;
    int evals = 0;
    bool converged = false;
};

SimplexFit minimize_with_restarts(const std::function<double(std::span<const double>)>& obj,
                                  std::vector<double> x0, std::vector<double> steps,
                                  const FitOptions& opts) {
    SimplexOptions so{steps, 1e-10, opts.max_evals_per_run};
    SimplexResult best = nelder_mead(obj, std::move(x0), so);
    SimplexFit fit{best.x, best.fval, best.evals, false};
    double step_scale = 1.0;
    for (int r = 0; r < opts.restarts; ++r) {
        step_scale *= 0.25;
        for (std::size_t i = 0; i < steps.size(); ++i)
            so.initial_step[i] = steps[i] * step_scale;
        SimplexResult next = nelder_mead(obj, fit.x, so);
        fit.evals += next.evals;
        const double improvement = fit.fval - next.fval;
        if (next.fval < fit.fval) {
            fit.x = next.x;
            fit.fval = next.fval;
        }
        if (next.tol_reached &&
            improvement <= opts.restart_ftol_rel * (std::abs(fit.fval) + 1e-300)) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

}  // namespace

void validate(const ProbeArray& arr) {
    if (arr.regular.size() < 100)
        throw std::invalid_argument("ProbeArray: need at least 100 regular probes");
    if (arr.negative.size() < 10)
        throw std::invalid_argument("ProbeArray: need at least 10 negative probes");
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(arr.regular) || !finite(arr.negative))
        throw std::invalid_argument("ProbeArray: intensities must be finite");
    if (arr.detection_pvalues && arr.detection_pvalues->size() != arr.regular.size())
        throw std::invalid_argument("ProbeArray: detection p-value length mismatch");
}

std::shared_ptr<const DensityGrid> GridCache::get(const NormalGammaParams& p) {
    const std::string key = quantized_key(p);
    ++tick_;
    auto it = entries_.find(key);
    if (it != entries_.end()) {
        it->second.last_used = tick_;
        return it->second.grid;
    }
    auto grid = std::make_shared<const DensityGrid>(p, accuracy_);
    if (entries_.size() >= capacity_) {
        auto oldest = entries_.begin();
        for (auto e = entries_.begin(); e != entries_.end(); ++e)
            if (e->second.last_used < oldest->second.last_used) oldest = e;
        entries_.erase(oldest);
    }
    entries_.emplace(key, Entry{grid, tick_});
    return grid;
}

double loglik_normgam(const NormalGammaParams& p, const ProbeArray& arr,
                      GridCache* cache, GridAccuracy accuracy) {
    double ll = 0.0;
    if (!arr.regular.empty()) {
        std::shared_ptr<const DensityGrid> holder;
        std::optional<DensityGrid> local;
        if (cache) {
            holder = cache->get(p);
        } else {
            local.emplace(p, accuracy);
        }
        const DensityGrid& grid = cache ? *holder : *local;
        for (double x : arr.regular) ll += std::max(normgam_logpdf(x, grid), kLogFloor);
    }
    const NormalParams noise{p.mu, p.sigma};
    for (double x : arr.negative) ll += std::max(normal_logpdf(x, noise), kLogFloor);
    return ll;
}

double loglik_normexp(const NormexpParams& p, const ProbeArray& arr) {
    double ll = 0.0;
    for (double x : arr.regular) ll += std::max(normexp_logpdf(x, p), kLogFloor);
    const NormalParams noise{p.mu, p.sigma};
    for (double x : arr.negative) ll += std::max(normal_logpdf(x, noise), kLogFloor);
    return ll;
}

NormalGammaParams normgam_init(const ProbeArray& arr, bool* used_fallback) {
    if (used_fallback) *used_fallback = false;
    const double mu0 = mean(arr.negative);
    double sigma0 = iqr(arr.negative) / 1.349;
    if (!(sigma0 > 0.0)) sigma0 = sd(arr.negative);
    if (!(sigma0 > 0.0))
        throw std::invalid_argument("normgam_init: degenerate negative probes");
    const double mreg = mean(arr.regular);
    const double vreg = variance(arr.regular);
    const double excess = mreg - mu0;

    double theta0, k0;
    if (!(excess > 0.0)) {
        theta0 = std::max(sd(arr.regular), 1e-6 * sigma0);
        k0 = 1.0;
        if (used_fallback) *used_fallback = true;
    } else if (vreg <= sigma0 * sigma0) {
        theta0 = excess;
        k0 = 1.0;
        if (used_fallback) *used_fallback = true;
    } else {
        theta0 = (vreg - sigma0 * sigma0) / excess;
        k0 = excess / theta0;
    }
    return {mu0, sigma0, k0, theta0};
}

NormgamFit normgam_mle(const ProbeArray& arr, const FitOptions& opts) {
    validate(arr);
    bool fallback = false;
    const NormalGammaParams init = normgam_init(arr, &fallback);
    GridCache cache(opts.accuracy);

    // (mu, log sigma, log k*theta, log theta*sqrt(k)): homogeneous scales,
    // positivity for free.
    auto decode = [](std::span<const double> x) -> NormalGammaParams {
        const double sigma = std::exp(std::min(x[1], 700.0));
        const double p3 = std::exp(std::min(x[2], 700.0));
        const double p4 = std::exp(std::min(x[3], 700.0));
        const double theta = p4 * p4 / p3;
        const double shape = (p3 / p4) * (p3 / p4);
        return {x[0], sigma, shape, theta};
    };
    auto obj = [&](std::span<const double> x) -> double {
        const NormalGammaParams p = decode(x);
        if (!std::isfinite(p.mu) || !(p.sigma > 0.0) || !(p.shape > 0.0) ||
            !(p.scale > 0.0) || !std::isfinite(p.shape) || !std::isfinite(p.scale))
            return kInf;
        try {
            return -loglik_normgam(p, arr, &cache, opts.accuracy);
        } catch (const std::exception&) {
            return kInf;  // grid not buildable at this vertex
        }
    };

    const std::vector<double> x0{init.mu, std::log(init.sigma),
                                 std::log(init.shape * init.scale),
                                 std::log(init.scale * std::sqrt(init.shape))};
    const std::vector<double> steps{0.25 * init.sigma, 0.1, 0.1, 0.1};
    const SimplexFit fit = minimize_with_restarts(obj, x0, steps, opts);
    return {decode(fit.x), -fit.fval, fit.evals, fit.converged, fallback};
}

NormexpFit normexp_mle(const ProbeArray& arr, const FitOptions& opts) {
    validate(arr);
    const double mu0 = mean(arr.negative);
    double sigma0 = iqr(arr.negative) / 1.349;
    if (!(sigma0 > 0.0)) sigma0 = sd(arr.negative);
    if (!(sigma0 > 0.0))
        throw std::invalid_argument("normexp_mle: degenerate negative probes");
    double alpha0 = mean(arr.regular) - mu0;
    if (!(alpha0 > 0.0)) alpha0 = std::max(sd(arr.regular), sigma0);

    auto decode = [](std::span<const double> x) -> NormexpParams {
        return {x[0], std::exp(std::min(x[1], 700.0)), std::exp(std::min(x[2], 700.0))};
    };
    auto obj = [&](std::span<const double> x) -> double {
        const NormexpParams p = decode(x);
        if (!std::isfinite(p.mu) || !(p.sigma > 0.0) || !(p.alpha > 0.0)) return kInf;
        return -loglik_normexp(p, arr);
    };

    const std::vector<double> x0{mu0, std::log(sigma0), std::log(alpha0)};
    const std::vector<double> steps{0.25 * sigma0, 0.1, 0.1};
    const SimplexFit fit = minimize_with_restarts(obj, x0, steps, opts);
    return {decode(fit.x), -fit.fval, fit.evals, fit.converged};
}

NormexpParams normexp_np(const ProbeArray& arr) {
    validate(arr);
    const double mu = mean(arr.negative);
    const double sigma = sd(arr.negative);
    const double alpha = mean(arr.regular) - mu;
    if (!(alpha > 0.0))
        throw std::invalid_argument("normexp_np: signal mean below noise mean");
    if (!(sigma > 0.0))
        throw std::invalid_argument("normexp_np: degenerate negative probes");
    return {mu, sigma, alpha};
}

namespace {

// Linear-binned kernel density estimate with an Epanechnikov kernel whose
// standard deviation equals `bandwidth` (support half-width bw*sqrt(5)),
// evaluated on an equally spaced grid; returns the grid argmax.
double kde_mode(std::span<const double> x, double bandwidth, double grid_lo,
                double grid_hi, std::size_t n_grid = 16384) {
    const double support = bandwidth * std::sqrt(5.0);
    const double lo = grid_lo - support;
    const double hi = grid_hi + support;
    const double dg = (hi - lo) / static_cast<double>(n_grid - 1);
    std::vector<double> counts(n_grid, 0.0);
    for (double v : x) {
        const double pos = (v - lo) / dg;
        if (pos < 0.0 || pos > static_cast<double>(n_grid - 1)) continue;
        const auto i = std::min(static_cast<std::size_t>(pos), n_grid - 2);
        const double w = pos - static_cast<double>(i);
        counts[i] += 1.0 - w;
        counts[i + 1] += w;
    }
    const auto half_width = static_cast<std::ptrdiff_t>(support / dg) + 1;
    std::vector<double> kernel(2 * half_width + 1);
    for (std::ptrdiff_t j = -half_width; j <= half_width; ++j) {
        const double u = static_cast<double>(j) * dg / support;
        kernel[j + half_width] = std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    }
    double best_val = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < n_grid; ++i) {
        double acc = 0.0;
        const auto jlo = std::max<std::ptrdiff_t>(-half_width, -static_cast<std::ptrdiff_t>(i));
        const auto jhi = std::min<std::ptrdiff_t>(half_width,
                                                  static_cast<std::ptrdiff_t>(n_grid - 1 - i));
        for (std::ptrdiff_t j = jlo; j <= jhi; ++j)
            acc += counts[i + j] * kernel[j + half_width];
        if (acc > best_val) {
            best_val = acc;
            best_idx = i;
        }
    }
    return lo + dg * static_cast<double>(best_idx);
}

double nrd0_bandwidth(std::span<const double> x) {
    const double spread = std::min(sd(x), iqr(x) / 1.34);
    const double n = static_cast<double>(x.size());
    return 0.9 * spread * std::pow(n, -0.2);
}

}  // namespace

NormexpParams normexp_rma(std::span<const double> regular) {
    if (regular.size() < 100)
        throw std::invalid_argument("normexp_rma: need at least 100 values");
    const double bw = nrd0_bandwidth(regular);
    if (!(bw > 0.0))
        throw std::invalid_argument("normexp_rma: degenerate density (zero spread)");
    const auto [lo_it, hi_it] = std::minmax_element(regular.begin(), regular.end());
    double mode = kde_mode(regular, bw, *lo_it, *hi_it);

    // Refine the mode on the sub-mode data, then split about it.
    std::vector<double> below;
    for (double v : regular)
        if (v < mode) below.push_back(v);
    if (below.size() >= 2) {
        const double bw2 = nrd0_bandwidth(below);
        if (bw2 > 0.0) mode = kde_mode(below, bw2, *lo_it, mode, 4096);
    }

    double ss = 0.0;
    std::size_t n_below = 0;
    std::vector<double> excess;
    for (double v : regular) {
        if (v < mode) {
            ss += (v - mode) * (v - mode);
            ++n_below;
        } else if (v > mode) {
            excess.push_back(v - mode);
        }
    }
    if (n_below < 2 || excess.size() < 2)
        throw std::invalid_argument("normexp_rma: no points on one side of the mode");
    const double sigma =
        std::sqrt(ss / static_cast<double>(n_below - 1)) * std::sqrt(2.0);

    const double bw_sig = nrd0_bandwidth(excess);
    if (!(bw_sig > 0.0))
        throw std::invalid_argument("normexp_rma: degenerate density above the mode");
    const auto [elo, ehi] = std::minmax_element(excess.begin(), excess.end());
    double alpha = kde_mode(excess, bw_sig, *elo, *ehi);
    if (!(alpha > 0.0)) alpha = *elo > 0.0 ? *elo : bw_sig;
    return {mode, sigma, alpha};
}

}  // namespace normgam
