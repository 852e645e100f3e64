#include "normgam/negctrl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace normgam {

void validate(const DetectionTable& t) {
    if (t.n_neg < 1) throw std::invalid_argument("DetectionTable: n_neg must be >= 1");
    if (t.regular.size() != t.pvalues.size() || t.regular.empty())
        throw std::invalid_argument("DetectionTable: regular/p-value length mismatch");
    const double n = static_cast<double>(t.n_neg);
    for (double p : t.pvalues) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("DetectionTable: p-value outside [0,1]");
        const double scaled = p * n;
        if (std::abs(scaled - std::round(scaled)) > 1e-9 * std::max(1.0, n))
            throw std::invalid_argument(
                "DetectionTable: p-values must be integer multiples of 1/n_neg");
    }
}

std::vector<double> detection_pvalues(std::span<const double> regular,
                                      std::span<const double> negative) {
    if (regular.empty() || negative.empty())
        throw std::invalid_argument("detection_pvalues: empty input");
    std::vector<double> sorted(negative.begin(), negative.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<double> out(regular.size());
    for (std::size_t j = 0; j < regular.size(); ++j) {
        const auto above = sorted.end() -
                           std::upper_bound(sorted.begin(), sorted.end(), regular[j]);
        out[j] = static_cast<double>(above) / n;
    }
    return out;
}

InferredNegatives infer_negatives(const DetectionTable& t) {
    validate(t);
    const double n = static_cast<double>(t.n_neg);

    // Band k: probes sharing one p-value level; higher p-value means lower
    // intensity. Track each band's intensity extremes.
    struct Band {
        double min_x = 0.0, max_x = 0.0;
    };
    std::map<long long, Band> bands;  // key: negatives-above count = p * n_neg
    for (std::size_t j = 0; j < t.regular.size(); ++j) {
        const auto count = static_cast<long long>(std::llround(t.pvalues[j] * n));
        auto [it, fresh] = bands.try_emplace(count, Band{t.regular[j], t.regular[j]});
        if (!fresh) {
            it->second.min_x = std::min(it->second.min_x, t.regular[j]);
            it->second.max_x = std::max(it->second.max_x, t.regular[j]);
        }
    }

    // Ideal (real-valued) counts per placement slot, then the integer counts;
    // rounding residue, if any, lands on the largest fractional remainders.
    struct Slot {
        double position;
        double ideal;
        long long count;
    };
    std::vector<Slot> slots;
    auto first = bands.begin();
    const double x_max = std::max_element(bands.begin(), bands.end(),
                                          [](const auto& a, const auto& b) {
                                              return a.second.max_x < b.second.max_x;
                                          })
                             ->second.max_x;
    const double x_min = std::min_element(bands.begin(), bands.end(),
                                          [](const auto& a, const auto& b) {
                                              return a.second.min_x < b.second.min_x;
                                          })
                             ->second.min_x;
    const double pad = std::max(1.0, 1e-3 * (x_max - x_min));

    // Negatives above every regular probe.
    slots.push_back({x_max + pad, static_cast<double>(first->first),
                     first->first});
    // Negatives between adjacent bands: the gap separating band k (lower p,
    // higher intensity) from band k+1 holds their count difference.
    for (auto it = bands.begin(); std::next(it) != bands.end(); ++it) {
        const auto next = std::next(it);
        const double mid = 0.5 * (next->second.max_x + it->second.min_x);
        const double ideal = static_cast<double>(next->first - it->first);
        slots.push_back({mid, ideal, next->first - it->first});
    }
    // Negatives below every regular probe; a value equal to min(X) is never
    // strictly greater than any probe, matching the strict > in P_j.
    const auto last_count = bands.rbegin()->first;
    slots.push_back({x_min, n - static_cast<double>(last_count),
                     static_cast<long long>(t.n_neg) - last_count});

    long long total = 0;
    for (const auto& s : slots) total += s.count;
    InferredNegatives result;
    if (total != static_cast<long long>(t.n_neg)) {
        // Valid tables always balance; redistribute +-1 by fractional
        // remainder if the input carried rounding noise.
        result.count_adjusted = true;
        std::vector<std::size_t> order(slots.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double fa = slots[a].ideal - std::floor(slots[a].ideal);
            const double fb = slots[b].ideal - std::floor(slots[b].ideal);
            return fa > fb;
        });
        long long residue = static_cast<long long>(t.n_neg) - total;
        for (std::size_t i = 0; residue != 0 && i < order.size(); ++i) {
            const long long step = residue > 0 ? 1 : -1;
            if (slots[order[i]].count + step >= 0) {
                slots[order[i]].count += step;
                residue -= step;
            }
        }
        if (residue != 0)
            throw std::runtime_error("infer_negatives: cannot reconcile counts with n_neg");
    }

    result.values.reserve(t.n_neg);
    for (auto it = slots.rbegin(); it != slots.rend(); ++it)
        for (long long c = 0; c < it->count; ++c) result.values.push_back(it->position);
    return result;
}

}  // namespace normgam
