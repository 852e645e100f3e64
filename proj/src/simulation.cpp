#include "normgam/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normgam/evaluation.hpp"
#include "normgam/parallel.hpp"
#include "normgam/stats.hpp"

namespace normgam {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::s1: return "s1";
        case Scenario::s2: return "s2";
        case Scenario::s3: return "s3";
        case Scenario::s4: return "s4";
    }
    throw std::logic_error("to_string: bad Scenario");
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "s1") return Scenario::s1;
    if (name == "s2") return Scenario::s2;
    if (name == "s3") return Scenario::s3;
    if (name == "s4") return Scenario::s4;
    throw std::invalid_argument("unknown scenario: " + name);
}

const std::array<ParameterSet, 9>& parameter_table() {
    static const std::array<ParameterSet, 9> table{{
        {1, {53.0, 4.4, 0.12, 1785.0}, "E1 array, normal-gamma MLE"},
        {2, {138.0, 24.0, 0.11, 4949.0}, "E2 array, normal-gamma MLE"},
        {3, {43.5, 5.8, 1.0, 226.0}, "E1 array, normexp MLE"},
        {4, {170.0, 41.0, 1.0, 505.0}, "E2 array, normexp MLE"},
        {5, {52.8, 5.0, 1.0, 8.33}, "E1 array, normexp RMA"},
        {6, {223.0, 37.0, 1.0, 33.8}, "E2 array, normexp RMA"},
        {7, {93.0, 11.0, 0.08, 3230.0}, "E3 array, normal-gamma MLE"},
        {8, {69.0, 13.0, 1.0, 277.0}, "E3 array, normexp MLE"},
        {9, {92.0, 14.0, 1.0, 10.5}, "E3 array, normexp RMA"},
    }};
    return table;
}

const ParameterSet& parameter_set(int id) {
    if (id < 1 || id > 9)
        throw std::invalid_argument("parameter_set: id must lie in 1..9");
    return parameter_table()[static_cast<std::size_t>(id - 1)];
}

NormalGammaParams SimulationSpec::params() const {
    return params_override ? *params_override : parameter_set(set_id).params;
}

void validate(const SimulationSpec& spec) {
    if (!spec.params_override && (spec.set_id < 1 || spec.set_id > 9))
        throw std::invalid_argument("SimulationSpec: set id must lie in 1..9");
    validate(spec.params());
    if (spec.n_reg < 1 || spec.n_neg < 1)
        throw std::invalid_argument("SimulationSpec: probe counts must be positive");
    if (spec.n_arrays < 1)
        throw std::invalid_argument("SimulationSpec: need at least one array");
    if (spec.scenario == Scenario::s2 && !(spec.mixture_p >= 0.0 && spec.mixture_p <= 1.0))
        throw std::invalid_argument("SimulationSpec: mixture p must lie in [0,1]");
    if (spec.scenario != Scenario::s2 && spec.mixture_p != 0.0)
        throw std::invalid_argument("SimulationSpec: mixture p only applies to scenario s2");
    if (spec.scenario == Scenario::s4 && spec.noise_pool.empty())
        throw std::invalid_argument("SimulationSpec: scenario s4 requires a noise pool");
    if (spec.scenario != Scenario::s4 && !spec.noise_pool.empty())
        throw std::invalid_argument("SimulationSpec: noise pool only applies to scenario s4");
}

Rng replicate_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream & 0xffffffffu),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

namespace {

std::vector<double> sample_pool(std::size_t n, const std::vector<double>& pool, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> out(n);
    for (auto& v : out) v = pool[pick(rng)];
    return out;
}

}  // namespace

SimulatedBatch simulate(const SimulationSpec& spec) {
    validate(spec);
    const NormalGammaParams p = spec.params();
    const GammaParams signal{p.shape, p.scale};
    const NormalParams noise{p.mu, p.sigma};
    const MixtureNoiseSpec mixture{spec.mixture_p, noise, 3, 55.0};
    const bool shared = spec.scenario == Scenario::s3 || spec.scenario == Scenario::s4;
    const auto n_arrays = static_cast<std::size_t>(spec.n_arrays);

    SimulatedBatch batch;
    batch.spec = spec;
    batch.shared_signal = shared;
    batch.arrays.resize(n_arrays);
    batch.signals.resize(shared ? 1 : n_arrays);

    if (shared) {
        Rng rng = replicate_rng(spec.seed, 0);  // stream 0 reserved for the signal
        batch.signals.front() = sample_gamma(spec.n_reg, signal, rng);
    }

    parallel_for(n_arrays, [&](std::size_t i) {
        Rng rng = replicate_rng(spec.seed, i + 1);
        ProbeArray& arr = batch.arrays[i];
        std::vector<double>* sig = shared ? &batch.signals.front() : &batch.signals[i];
        std::vector<double> b;
        switch (spec.scenario) {
            case Scenario::s1:
                *sig = sample_gamma(spec.n_reg, signal, rng);
                b = sample_normal(spec.n_reg, noise, rng);
                arr.negative = sample_normal(spec.n_neg, noise, rng);
                break;
            case Scenario::s2:
                *sig = sample_gamma(spec.n_reg, signal, rng);
                b = sample_mixture_noise(spec.n_reg, mixture, rng);
                arr.negative = sample_mixture_noise(spec.n_neg, mixture, rng);
                break;
            case Scenario::s3:
                b = sample_normal(spec.n_reg, noise, rng);
                arr.negative = sample_normal(spec.n_neg, noise, rng);
                break;
            case Scenario::s4:
                b = sample_pool(spec.n_reg, spec.noise_pool, rng);
                arr.negative = sample_pool(spec.n_neg, spec.noise_pool, rng);
                break;
        }
        arr.regular.resize(spec.n_reg);
        for (std::size_t j = 0; j < spec.n_reg; ++j)
            arr.regular[j] = (*sig)[j] + b[j];
    });
    return batch;
}

std::vector<double> build_empirical_pool(const std::vector<ProbeArray>& arrays) {
    if (arrays.empty())
        throw std::invalid_argument("build_empirical_pool: no arrays");
    std::vector<std::vector<double>> negatives;
    negatives.reserve(arrays.size());
    for (const auto& a : arrays) {
        if (a.negative.empty())
            throw std::invalid_argument("build_empirical_pool: array without negatives");
        negatives.push_back(a.negative);
    }

    // Interpolate unequal-length vectors onto the modal length before
    // quantile normalization (homogeneous-chip assumption).
    std::vector<std::size_t> lengths;
    for (const auto& v : negatives) lengths.push_back(v.size());
    std::sort(lengths.begin(), lengths.end());
    std::size_t modal = lengths[0], best_count = 0;
    for (std::size_t i = 0; i < lengths.size();) {
        std::size_t j = i;
        while (j < lengths.size() && lengths[j] == lengths[i]) ++j;
        if (j - i > best_count) {
            best_count = j - i;
            modal = lengths[i];
        }
        i = j;
    }
    for (auto& v : negatives) {
        if (v.size() == modal) continue;
        std::vector<double> sorted(v);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> resized(modal);
        for (std::size_t i = 0; i < modal; ++i) {
            const double q = modal == 1 ? 0.5
                                        : static_cast<double>(i) /
                                              static_cast<double>(modal - 1);
            resized[i] = quantile_sorted(sorted, q);
        }
        v = std::move(resized);
    }

    const auto normalized = quantile_normalize(negatives);
    std::vector<double> pool;
    pool.reserve(modal * normalized.size());
    for (const auto& v : normalized) pool.insert(pool.end(), v.begin(), v.end());
    return pool;
}

}  // namespace normgam
