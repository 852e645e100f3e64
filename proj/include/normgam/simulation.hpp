#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "normgam/estimation.hpp"

namespace normgam {

enum class Scenario { s1, s2, s3, s4 };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

// The nine simulation parameter sets (mu, sigma, k, theta); k = 1 rows are
// degenerate normexp parameters.
struct ParameterSet {
    int id;
    NormalGammaParams params;
    const char* provenance;
};

const std::array<ParameterSet, 9>& parameter_table();
const ParameterSet& parameter_set(int id);  // throws for id outside 1..9

struct SimulationSpec {
    Scenario scenario = Scenario::s1;
    int set_id = 1;
    std::optional<NormalGammaParams> params_override;
    std::size_t n_reg = 25000;
    std::size_t n_neg = 1000;
    int n_arrays = 100;
    double mixture_p = 0.0;          // S2 only
    std::vector<double> noise_pool;  // S4 only
    std::uint64_t seed = 1;

    NormalGammaParams params() const;
};

void validate(const SimulationSpec& spec);

// S3/S4 share one signal vector across arrays (replicate designs); then
// signals.size() == 1. Otherwise one signal vector per array.
struct SimulatedBatch {
    std::vector<ProbeArray> arrays;
    std::vector<std::vector<double>> signals;
    bool shared_signal = false;
    SimulationSpec spec;

    const std::vector<double>& signal_for(std::size_t array_index) const {
        return shared_signal ? signals.front() : signals.at(array_index);
    }
};

// Deterministic under spec.seed; replicate l draws from an independent
// stream derived from (seed, l), so arrays can be generated in parallel.
SimulatedBatch simulate(const SimulationSpec& spec);

Rng replicate_rng(std::uint64_t seed, std::uint64_t stream);

// Quantile-normalizes each array's negative-probe vector and concatenates
// them into the empirical noise pool used by S4. Arrays with unequal
// negative counts are interpolated to the modal length first.
std::vector<double> build_empirical_pool(const std::vector<ProbeArray>& arrays);

}  // namespace normgam
