#include "normgam/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "normgam/quadrature.hpp"

namespace normgam {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr double kPi = 3.141592653589793;

struct ProfileConstants {
    double sigma_divisor;    // dx <= sigma / divisor
    double span_divisor;     // dx <= span / divisor
    double alias_log_floor;  // ln of density floor beyond the FFT period
};

ProfileConstants profile_constants(GridAccuracy accuracy) {
    if (accuracy == GridAccuracy::reference)
        return {64.0, 65536.0, std::log(1e-19)};
    return {8.0, 16384.0, std::log(1e-14)};
}

// Thread-local FFTW plan/buffer cache; ESTIMATE plans are deterministic and
// cheap to build, the cache just avoids rebuilding inside the MLE loop.
class FftwWorkspace {
  public:
    void forward(std::vector<std::complex<double>>& data) {
        const std::size_t n = data.size();
        auto it = plans_.find(n);
        if (it == plans_.end()) {
            Slot slot;
            slot.buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
            if (!slot.buf) throw std::bad_alloc();
            {
                static std::mutex planner_mutex;  // FFTW planning is not thread-safe
                std::lock_guard<std::mutex> lock(planner_mutex);
                slot.plan = fftw_plan_dft_1d(static_cast<int>(n), slot.buf, slot.buf,
                                             FFTW_FORWARD, FFTW_ESTIMATE);
            }
            if (!slot.plan) {
                fftw_free(slot.buf);
                throw std::runtime_error("fftw plan creation failed");
            }
            it = plans_.emplace(n, slot).first;
        }
        auto* buf = it->second.buf;
        std::copy_n(reinterpret_cast<const double*>(data.data()), 2 * n,
                    reinterpret_cast<double*>(buf));
        fftw_execute(it->second.plan);
        std::copy_n(reinterpret_cast<const double*>(buf), 2 * n,
                    reinterpret_cast<double*>(data.data()));
    }

    ~FftwWorkspace() {
        for (auto& [n, slot] : plans_) {
            fftw_destroy_plan(slot.plan);
            fftw_free(slot.buf);
        }
    }

  private:
    struct Slot {
        fftw_plan plan = nullptr;
        fftw_complex* buf = nullptr;
    };
    std::map<std::size_t, Slot> plans_;
};

thread_local FftwWorkspace tls_fftw;

std::size_t next_pow2(double x) {
    std::size_t n = 1;
    while (static_cast<double>(n) < x) n <<= 1;
    return n;
}

// Left-tail closed form: f(x) ~ f_norm(x) * E[e^{-(mu-x) S / sigma^2}]
// = f_norm(x) * (1 + theta (mu - x)/sigma^2)^{-k}, exact up to the
// e^{-S^2/2sigma^2} factor which is negligible for x <= mu - 8 sigma.
double left_tail_logpdf(double x, const NormalGammaParams& p) {
    const double tilt = p.scale * (p.mu - x) / (p.sigma * p.sigma);
    return normal_logpdf(x, {p.mu, p.sigma}) - p.shape * std::log1p(tilt);
}

}  // namespace

void validate(const NormalGammaParams& p) {
    validate(NormalParams{p.mu, p.sigma});
    validate(GammaParams{p.shape, p.scale});
}

void validate(const NormexpParams& p) {
    validate(NormalParams{p.mu, p.sigma});
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
        throw std::invalid_argument("NormexpParams: require alpha > 0");
}

NormexpParams to_normexp(const NormalGammaParams& p) {
    if (p.shape != 1.0)
        throw std::invalid_argument("to_normexp: shape must be exactly 1");
    return {p.mu, p.sigma, p.scale};
}

NormalGammaParams to_normalgamma(const NormexpParams& p) {
    return {p.mu, p.sigma, 1.0, p.alpha};
}

std::complex<double> normgam_charfn(double t, const NormalGammaParams& p) {
    // (1 - i t theta)^{-k} = exp(-(k/2) log1p(t^2 theta^2) + i k atan(t theta))
    const double tt = t * p.scale;
    const double log_mag = -0.5 * p.shape * std::log1p(tt * tt) -
                           0.5 * p.sigma * p.sigma * t * t;
    const double phase = p.mu * t + p.shape * std::atan(tt);
    if (log_mag < -745.0) return {0.0, 0.0};
    const double mag = std::exp(log_mag);
    return {mag * std::cos(phase), mag * std::sin(phase)};
}

DensityGrid::DensityGrid(const NormalGammaParams& p, GridAccuracy accuracy)
    : params_(p) {
    validate(p);
    const ProfileConstants pc = profile_constants(accuracy);

    const double q_hi = gamma_quantile(0.99999, {p.shape, p.scale});
    const double t_upper = p.mu + 5.0 * p.sigma + q_hi;
    const double x_lo = std::min(0.0, p.mu - 8.0 * p.sigma);
    const double span = t_upper - x_lo;
    const double dx = std::min(p.sigma / pc.sigma_divisor, span / pc.span_divisor);

    // FFT output is the periodization of the density with period n*dx; size
    // the period so wrapped tail mass sits below the alias floor everywhere
    // on the kept range.
    const double tail_x = p.mu + gamma_tail_point({p.shape, p.scale}, pc.alias_log_floor);
    const double period_min = std::max(span + 16.0 * p.sigma, tail_x + 8.0 * p.sigma - x_lo);
    std::size_t n = next_pow2(period_min / dx);
    n = std::max<std::size_t>(n, 4096);
    if (n > (std::size_t{1} << 23))
        throw std::runtime_error("build_density_grid: grid resolution insufficient");

    const double cutoff = kPi / dx;
    const double dt = 2.0 * cutoff / static_cast<double>(n);

    // Sample phi_{X - x_lo}(t) on [-A, A); Hermitian symmetry fills half.
    std::vector<std::complex<double>> v(n);
    NormalGammaParams shifted = p;
    shifted.mu = p.mu - x_lo;
    for (std::size_t j = 0; j <= n / 2; ++j) {
        v[j] = normgam_charfn(-cutoff + dt * static_cast<double>(j), shifted);
        if (j >= 1 && j < n / 2) v[n - j] = std::conj(v[j]);
    }
    tls_fftw.forward(v);

    const std::size_t n_kept =
        std::min(n, static_cast<std::size_t>(std::ceil((t_upper - x_lo) / dx)) + 1);
    // f(x_lo + m dx) = A/(n pi) * (-1)^m * fft(V)[m]
    const double norm = cutoff / (static_cast<double>(n) * kPi);
    values_.resize(n_kept);
    double max_imag = 0.0;
    for (std::size_t m = 0; m < n_kept; ++m) {
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        const double re = sign * norm * v[m].real();
        max_imag = std::max(max_imag, std::abs(norm * v[m].imag()));
        values_[m] = std::max(0.0, re);
    }
    if (max_imag > 1e-8)
        throw std::runtime_error("build_density_grid: grid resolution insufficient "
                                 "(imaginary residue above 1e-8)");

    double mass = 0.0;
    for (std::size_t m = 0; m + 1 < n_kept; ++m)
        mass += 0.5 * (values_[m] + values_[m + 1]) * dx;
    mass_ = mass;
    if (!(mass > 1.0 - 1e-4 && mass < 1.0 + 1e-4))
        throw std::runtime_error("build_density_grid: grid resolution insufficient "
                                 "(mass deviates from 1)");

    spec_.t_upper = t_upper;
    spec_.x_lo = x_lo;
    spec_.dx = dx;
    spec_.freq_cutoff = cutoff;
    spec_.n_points = n;
    spec_.n_kept = n_kept;
    spec_.tail_switch = x_lo + dx * static_cast<double>(n_kept - 1);
}

std::vector<double> DensityGrid::abscissae() const {
    std::vector<double> xs(spec_.n_kept);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = node(i);
    return xs;
}

double DensityGrid::interpolate(double x) const {
    const double pos = (x - spec_.x_lo) / spec_.dx;
    if (pos < 0.0 || pos > static_cast<double>(spec_.n_kept - 1))
        return std::numeric_limits<double>::quiet_NaN();
    const auto i = std::min(static_cast<std::size_t>(pos), spec_.n_kept - 2);
    const double w = pos - static_cast<double>(i);
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

DensityGrid build_density_grid(const NormalGammaParams& p, GridAccuracy accuracy) {
    return DensityGrid(p, accuracy);
}

double normgam_logpdf(double x, const DensityGrid& grid) {
    const auto& p = grid.params();
    const auto& s = grid.spec();
    if (x > s.tail_switch)
        return gamma_logpdf(x - p.mu, {p.shape, p.scale});
    if (x < s.x_lo)
        return std::max(left_tail_logpdf(x, p), std::log(kDensityFloor));
    const double v = grid.interpolate(x);
    return std::log(std::max(v, kDensityFloor));
}

double normgam_pdf(double x, const DensityGrid& grid) {
    const auto& p = grid.params();
    const auto& s = grid.spec();
    if (x > s.tail_switch)
        return gamma_pdf(x - p.mu, {p.shape, p.scale});
    if (x < s.x_lo)
        return std::max(std::exp(left_tail_logpdf(x, p)), kDensityFloor);
    return grid.interpolate(x);
}

double normgam_pdf_quadrature(double x, const NormalGammaParams& p) {
    validate(p);
    const GammaParams g{p.shape, p.scale};
    const NormalParams b{p.mu, p.sigma};
    const double center = x - p.mu;  // normal factor peaks at t = x - mu

    // Break the range at the shifted normal peak so the adaptive rule sees
    // the sharp factor; t0 bounds the substituted sub-interval at 0.
    const double t0 = 0.5 * std::min(p.scale, p.sigma);
    std::vector<double> edges{t0};
    for (double w : {-48.0, -32.0, -16.0, -8.0, -4.0, -2.0, -1.0, 0.0,
                     1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0}) {
        const double e = center + w * p.sigma;
        if (e > t0) edges.push_back(e);
    }
    std::sort(edges.begin(), edges.end());
    const double upper = std::max(center + 48.0 * p.sigma, 2.0 * t0);
    if (edges.back() < upper) edges.push_back(upper);

    QuadOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-11;

    double head = 0.0;
    if (p.shape < 1.5) {
        // t = u^{1/k} removes the t^{k-1} endpoint factor exactly:
        // int_0^{t0} t^{k-1} g(t) dt = (1/k) int_0^{t0^k} g(u^{1/k}) du
        const double k = p.shape;
        const double log_norm = -k * std::log(p.scale) - std::lgamma(k);
        auto sub = [&](double u) {
            if (u <= 0.0) return 0.0;
            const double t = std::pow(u, 1.0 / k);
            return std::exp(log_norm) / k * std::exp(-t / p.scale) *
                   normal_pdf(x - t, b);
        };
        head = integrate(sub, 0.0, std::pow(t0, k), opts);
    } else {
        auto direct = [&](double t) { return gamma_pdf(t, g) * normal_pdf(x - t, b); };
        head = integrate(direct, 0.0, t0, opts);
    }

    auto integrand = [&](double t) { return gamma_pdf(t, g) * normal_pdf(x - t, b); };
    return head + integrate(integrand, edges, opts);
}

double normexp_logpdf(double x, const NormexpParams& p) {
    const double xbar = (x - p.mu - p.sigma * p.sigma / p.alpha) / p.sigma;
    const double lf = -std::log(p.alpha) +
                      0.5 * p.sigma * p.sigma / (p.alpha * p.alpha) -
                      (x - p.mu) / p.alpha + std_normal_logcdf(xbar);
    return std::isfinite(lf) ? lf : -1e300;
}

double normexp_pdf(double x, const NormexpParams& p) {
    return std::exp(normexp_logpdf(x, p));
}

}  // namespace normgam
