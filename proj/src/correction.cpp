#include "normgam/correction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normgam/quadrature.hpp"
#include "normgam/stats.hpp"

namespace normgam {

namespace {

constexpr double kTiny = 1e-300;

// Posterior linearization far left of the grid: the gamma posterior under a
// steep normal factor is Gamma(k, theta_eff) with
// 1/theta_eff = 1/theta + (mu - x)/sigma^2, so E[S|X=x] -> k theta_eff.
double left_correction(double x, const NormalGammaParams& p) {
    const double s2 = p.sigma * p.sigma;
    return std::max(p.shape * s2 / (s2 / p.scale + (p.mu - x)), kTiny);
}

// Second-order Laplace expansion beyond the grids; the pure gamma-tail ratio
// collapses to exactly x - mu, this keeps the normal-width correction.
double right_correction(double x, const NormalGammaParams& p) {
    const double s = x - p.mu;
    const double s2 = p.sigma * p.sigma;
    return s - s2 / p.scale + s2 * (p.shape - 1.0) / s;
}

}  // namespace

std::string to_string(CorrectionTag tag) {
    switch (tag) {
        case CorrectionTag::ng_true: return "ng-true";
        case CorrectionTag::ng_mle: return "ng-mle";
        case CorrectionTag::nexp_mle: return "nexp-mle";
        case CorrectionTag::nexp_rma: return "nexp-rma";
        case CorrectionTag::nexp_np: return "nexp-np";
        case CorrectionTag::subtract: return "subtract";
    }
    throw std::logic_error("to_string: bad CorrectionTag");
}

CorrectionTag correction_tag_from_string(const std::string& name) {
    if (name == "ng-true") return CorrectionTag::ng_true;
    if (name == "ng-mle") return CorrectionTag::ng_mle;
    if (name == "nexp-mle") return CorrectionTag::nexp_mle;
    if (name == "nexp-rma") return CorrectionTag::nexp_rma;
    if (name == "nexp-np") return CorrectionTag::nexp_np;
    if (name == "subtract") return CorrectionTag::subtract;
    throw std::invalid_argument("unknown correction method: " + name);
}

void validate(const CorrectionMethod& method) {
    switch (method.tag) {
        case CorrectionTag::ng_true:
        case CorrectionTag::ng_mle:
            if (!std::holds_alternative<NormalGammaParams>(method.payload))
                throw std::invalid_argument("CorrectionMethod: expected normal-gamma payload");
            validate(std::get<NormalGammaParams>(method.payload));
            return;
        case CorrectionTag::nexp_mle:
        case CorrectionTag::nexp_rma:
        case CorrectionTag::nexp_np:
            if (!std::holds_alternative<NormexpParams>(method.payload))
                throw std::invalid_argument("CorrectionMethod: expected normexp payload");
            validate(std::get<NormexpParams>(method.payload));
            return;
        case CorrectionTag::subtract:
            if (!std::holds_alternative<double>(method.payload))
                throw std::invalid_argument("CorrectionMethod: expected median payload");
            return;
    }
    throw std::logic_error("validate: bad CorrectionTag");
}

double correct_normgam(double x, const NormalGammaParams& p,
                       const DensityGrid& grid_k, const DensityGrid& grid_k1) {
    const double hi = std::min(grid_k.spec().tail_switch, grid_k1.spec().tail_switch);
    const double lo = std::max(grid_k.spec().x_lo, grid_k1.spec().x_lo);
    if (x > hi) return right_correction(x, p);
    if (x < lo) return left_correction(x, p);
    const double f0 = grid_k.interpolate(x);
    const double f1 = grid_k1.interpolate(x);
    if (!(f0 > kTiny) || !(f1 > kTiny))
        return x < p.mu ? left_correction(x, p) : right_correction(x, p);
    return p.shape * p.scale * f1 / f0;
}

std::vector<double> correct_normgam(std::span<const double> x, const NormalGammaParams& p,
                                    GridAccuracy accuracy) {
    validate(p);
    const DensityGrid grid_k(p, accuracy);
    const DensityGrid grid_k1({p.mu, p.sigma, p.shape + 1.0, p.scale}, accuracy);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = correct_normgam(x[i], p, grid_k, grid_k1);
    return out;
}

double correct_normexp(double x, const NormexpParams& p) {
    const double z = (x - p.mu - p.sigma * p.sigma / p.alpha) / p.sigma;
    if (z < -30.0) {
        // sigma (z + phi/Phi) = (-sigma/z)(1 - 2/z^2 + 10/z^4 - 74/z^6 + ...)
        const double zi2 = 1.0 / (z * z);
        return -p.sigma / z *
               (1.0 + zi2 * (-2.0 + zi2 * (10.0 - zi2 * 74.0)));
    }
    return p.sigma * (z + inverse_mills(z));
}

double correct_subtract(double x, double negative_median) {
    return std::max(x - negative_median, 0.0);
}

std::vector<double> correct_subtract(std::span<const double> x,
                                     std::span<const double> negatives) {
    if (negatives.empty())
        throw std::invalid_argument("correct_subtract: empty negative probes");
    const double med = median(negatives);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = correct_subtract(x[i], med);
    return out;
}

std::vector<double> apply_correction(const CorrectionMethod& method,
                                     std::span<const double> x, GridAccuracy accuracy) {
    validate(method);
    switch (method.tag) {
        case CorrectionTag::ng_true:
        case CorrectionTag::ng_mle:
            return correct_normgam(x, std::get<NormalGammaParams>(method.payload), accuracy);
        case CorrectionTag::nexp_mle:
        case CorrectionTag::nexp_rma:
        case CorrectionTag::nexp_np: {
            const auto& p = std::get<NormexpParams>(method.payload);
            std::vector<double> out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = correct_normexp(x[i], p);
            return out;
        }
        case CorrectionTag::subtract: {
            const double med = std::get<double>(method.payload);
            std::vector<double> out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = correct_subtract(x[i], med);
            return out;
        }
    }
    throw std::logic_error("apply_correction: bad CorrectionTag");
}

double conditional_expectation_oracle(double x,
                                      const std::function<double(double)>& signal_pdf,
                                      const std::function<double(double)>& noise_pdf,
                                      const OracleOptions& opts) {
    if (!(opts.signal_upper > 0.0))
        throw std::invalid_argument("conditional_expectation_oracle: signal_upper must be > 0");
    const double width = opts.noise_width;
    const double center = x - opts.noise_center;  // noise factor peaks here

    const double t0 = 0.5 * std::min(width, opts.signal_upper);
    const double upper = std::max(opts.signal_upper, center + 52.0 * width);
    std::vector<double> edges{t0};
    for (double w : {-48.0, -32.0, -16.0, -8.0, -4.0, -2.0, -1.0, 0.0,
                     1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0}) {
        const double e = center + w * width;
        if (e > t0 && e < upper) edges.push_back(e);
    }
    edges.push_back(upper);
    std::sort(edges.begin(), edges.end());

    QuadOptions q;
    q.abs_tol = 1e-280;
    q.rel_tol = opts.tol;

    auto head = [&](const std::function<double(double)>& f) {
        if (!(edges.front() > 0.0)) return 0.0;
        if (opts.singular_power > -1.0 && opts.singular_power < 0.0) {
            // substitute s = u^{1/(power+1)} to absorb the s^power endpoint
            const double a = opts.singular_power + 1.0;
            auto sub = [&](double u) {
                if (u <= 0.0) return 0.0;
                const double s = std::pow(u, 1.0 / a);
                return f(s) * std::pow(s, 1.0 - a) / a;
            };
            return integrate(sub, 0.0, std::pow(edges.front(), a), q);
        }
        return integrate(f, 0.0, edges.front(), q);
    };

    auto numer_f = [&](double s) { return s * signal_pdf(s) * noise_pdf(x - s); };
    auto denom_f = [&](double s) { return signal_pdf(s) * noise_pdf(x - s); };
    const double numer = head(numer_f) + integrate(numer_f, edges, q);
    const double denom = head(denom_f) + integrate(denom_f, edges, q);
    if (!(denom > kTiny))
        throw std::runtime_error("conditional_expectation_oracle: vanishing denominator");
    return numer / denom;
}

}  // namespace normgam
