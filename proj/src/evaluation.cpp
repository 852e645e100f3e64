#include "normgam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "normgam/quadrature.hpp"
#include "normgam/stats.hpp"

namespace normgam {

double IrregularHistogram::value(double x) const {
    if (breakpoints.empty() || x < breakpoints.front() || x > breakpoints.back())
        return 0.0;
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    const auto idx = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::distance(breakpoints.begin(), it) - 1,
                                 static_cast<std::ptrdiff_t>(heights.size() - 1)));
    return heights[idx];
}

IrregularHistogram irregular_histogram(std::span<const double> x, int max_breaks) {
    if (x.size() < 100)
        throw std::invalid_argument("irregular_histogram: need at least 100 values");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw std::invalid_argument("irregular_histogram: fewer than 2 distinct values");

    // Candidate breakpoints on an empirical quantile grid.
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(max_breaks) + 1);
    for (int i = 0; i <= max_breaks; ++i)
        grid.push_back(quantile_sorted(sorted, static_cast<double>(i) / max_breaks));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t g = grid.size();
    if (g < 2)
        throw std::invalid_argument("irregular_histogram: fewer than 2 distinct values");

    // Counts below each candidate edge; last edge closed on the right.
    const double n = static_cast<double>(sorted.size());
    std::vector<double> below(g);
    for (std::size_t i = 0; i < g; ++i)
        below[i] = static_cast<double>(
            std::lower_bound(sorted.begin(), sorted.end(), grid[i]) - sorted.begin());
    below.back() = n;

    auto cell_score = [&](std::size_t i, std::size_t j) {
        const double count = below[j] - below[i];
        if (count <= 0.0) return 0.0;
        const double width = grid[j] - grid[i];
        return count * std::log(count / (n * width));
    };

    // best[d][j]: maximal log-likelihood over partitions of grid[0..j] into
    // d cells; O(G^2 D) with early pruning through the penalty.
    const std::size_t d_max = g - 1;
    std::vector<std::vector<double>> best(d_max + 1,
                                          std::vector<double>(g, -1e308));
    std::vector<std::vector<std::size_t>> prev(d_max + 1,
                                               std::vector<std::size_t>(g, 0));
    for (std::size_t j = 1; j < g; ++j) best[1][j] = cell_score(0, j);
    for (std::size_t d = 2; d <= d_max; ++d) {
        for (std::size_t j = d; j < g; ++j) {
            for (std::size_t i = d - 1; i < j; ++i) {
                const double s = best[d - 1][i] + cell_score(i, j);
                if (s > best[d][j]) {
                    best[d][j] = s;
                    prev[d][j] = i;
                }
            }
        }
    }

    auto penalty = [](std::size_t d) {
        const double dd = static_cast<double>(d);
        return dd - 1.0 + std::pow(std::log(dd), 2.5);
    };
    std::size_t d_opt = 1;
    double crit_opt = best[1][g - 1] - penalty(1);
    for (std::size_t d = 2; d <= d_max; ++d) {
        const double crit = best[d][g - 1] - penalty(d);
        if (crit > crit_opt) {
            crit_opt = crit;
            d_opt = d;
        }
    }

    std::vector<std::size_t> edges{g - 1};
    for (std::size_t d = d_opt; d >= 2; --d) edges.push_back(prev[d][edges.back()]);
    edges.push_back(0);
    std::reverse(edges.begin(), edges.end());

    IrregularHistogram h;
    for (std::size_t e : edges) h.breakpoints.push_back(grid[e]);
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        const double count = below[edges[c + 1]] - below[edges[c]];
        const double width = grid[edges[c + 1]] - grid[edges[c]];
        h.heights.push_back(count / (n * width));
    }
    return h;
}

double l1_distance(const std::function<double(double)>& f, const IrregularHistogram& h,
                   double support_lo, double support_hi) {
    if (h.breakpoints.size() < 2)
        throw std::invalid_argument("l1_distance: histogram without bins");
    QuadOptions q;
    q.abs_tol = 1e-9;
    q.rel_tol = 1e-7;
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < h.breakpoints.size(); ++c) {
        const double height = h.heights[c];
        total += integrate([&](double t) { return std::abs(f(t) - height); },
                           h.breakpoints[c], h.breakpoints[c + 1], q);
    }
    if (std::isfinite(support_lo) && support_lo < h.breakpoints.front())
        total += integrate([&](double t) { return std::abs(f(t)); }, support_lo,
                           h.breakpoints.front(), q);
    if (std::isfinite(support_hi) && support_hi > h.breakpoints.back())
        total += integrate([&](double t) { return std::abs(f(t)); },
                           h.breakpoints.back(), support_hi, q);
    return total;
}

double mad(std::span<const double> corrected, std::span<const double> truth) {
    if (corrected.size() != truth.size() || corrected.empty())
        throw std::invalid_argument("mad: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < corrected.size(); ++i)
        s += std::abs(corrected[i] - truth[i]);
    return s / static_cast<double>(corrected.size());
}

double mad_log(std::span<const double> corrected, std::span<const double> truth) {
    if (corrected.size() != truth.size() || corrected.empty())
        throw std::invalid_argument("mad_log: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < corrected.size(); ++i) {
        if (!(corrected[i] > 0.0) || !(truth[i] > 0.0))
            throw std::invalid_argument("mad_log: inputs must be positive");
        s += std::abs(std::log(corrected[i]) - std::log(truth[i]));
    }
    return s / static_cast<double>(corrected.size());
}

std::vector<double> excess_risk_ratio(std::span<const double> mads, double reference) {
    if (!(reference > 0.0))
        throw std::invalid_argument("excess_risk_ratio: reference must be positive");
    std::vector<double> out(mads.size());
    for (std::size_t i = 0; i < mads.size(); ++i) out[i] = mads[i] / reference;
    return out;
}

std::vector<AdPoint> ad_profile(const std::vector<std::vector<double>>& corrected,
                                std::span<const double> truth, bool log_scale) {
    if (corrected.empty())
        throw std::invalid_argument("ad_profile: no replicates");
    const std::size_t n = truth.size();
    for (const auto& rep : corrected)
        if (rep.size() != n) throw std::invalid_argument("ad_profile: length mismatch");
    std::vector<AdPoint> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (const auto& rep : corrected) {
            if (log_scale) {
                if (!(rep[j] > 0.0) || !(truth[j] > 0.0))
                    throw std::invalid_argument("ad_profile: log scale needs positive values");
                acc += std::abs(std::log(rep[j]) - std::log(truth[j]));
            } else {
                acc += std::abs(rep[j] - truth[j]);
            }
        }
        out[j] = {std::log(truth[j]), acc / static_cast<double>(corrected.size())};
    }
    std::sort(out.begin(), out.end(),
              [](const AdPoint& a, const AdPoint& b) { return a.log_signal < b.log_signal; });
    return out;
}

namespace {

// Mid-ranks (1-based, ties averaged).
std::vector<double> midranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

std::vector<std::vector<double>> quantile_normalize(
    const std::vector<std::vector<double>>& arrays) {
    if (arrays.empty()) throw std::invalid_argument("quantile_normalize: no arrays");
    const std::size_t n = arrays.front().size();
    for (const auto& a : arrays)
        if (a.size() != n)
            throw std::invalid_argument("quantile_normalize: unequal array lengths");
    if (n == 0) return arrays;

    std::vector<double> reference(n, 0.0);
    std::vector<std::vector<std::size_t>> orders(arrays.size());
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        auto& order = orders[a];
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return arrays[a][i] < arrays[a][j];
        });
        for (std::size_t r = 0; r < n; ++r) reference[r] += arrays[a][order[r]];
    }
    for (auto& r : reference) r /= static_cast<double>(arrays.size());

    std::vector<std::vector<double>> out(arrays.size(), std::vector<double>(n));
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        const auto& order = orders[a];
        const auto& v = arrays[a];
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            double m = 0.0;  // ties share the mean of their positions
            for (std::size_t k = i; k <= j; ++k) m += reference[k];
            m /= static_cast<double>(j - i + 1);
            for (std::size_t k = i; k <= j; ++k) out[a][order[k]] = m;
            i = j + 1;
        }
    }
    return out;
}

namespace {

std::vector<OcRow> summarize_groups(const std::vector<std::vector<double>>& replicates,
                                    std::span<const double> level_values,
                                    const std::vector<std::vector<std::size_t>>& groups) {
    std::vector<OcRow> rows;
    rows.reserve(groups.size());
    for (const auto& members : groups) {
        if (members.empty()) continue;
        double level = 0.0, mean_int = 0.0, mean_sd = 0.0;
        for (std::size_t j : members) {
            level += level_values[j];
            double m = 0.0;
            for (const auto& rep : replicates) m += rep[j];
            m /= static_cast<double>(replicates.size());
            mean_int += m;
            if (replicates.size() > 1) {
                double ss = 0.0;
                for (const auto& rep : replicates) ss += (rep[j] - m) * (rep[j] - m);
                mean_sd += std::sqrt(ss / static_cast<double>(replicates.size() - 1));
            }
        }
        const double cnt = static_cast<double>(members.size());
        rows.push_back({level / cnt, mean_int / cnt, mean_sd / cnt});
    }
    return rows;
}

}  // namespace

std::vector<OcRow> operating_characteristics(
    const std::vector<std::vector<double>>& replicates, std::span<const double> truth,
    int n_levels) {
    if (replicates.empty())
        throw std::invalid_argument("operating_characteristics: no replicates");
    const std::size_t n = truth.size();
    for (const auto& rep : replicates)
        if (rep.size() != n)
            throw std::invalid_argument("operating_characteristics: length mismatch");
    if (n_levels < 1) throw std::invalid_argument("operating_characteristics: bad level count");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return truth[a] < truth[b]; });
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(n_levels));
    for (std::size_t r = 0; r < n; ++r) {
        auto g = static_cast<std::size_t>(
            (r * static_cast<std::size_t>(n_levels)) / n);
        groups[g].push_back(order[r]);
    }
    return summarize_groups(replicates, truth, groups);
}

std::vector<OcRow> operating_characteristics_by_label(
    const std::vector<std::vector<double>>& replicates, std::span<const double> labels) {
    if (replicates.empty())
        throw std::invalid_argument("operating_characteristics: no replicates");
    const std::size_t n = labels.size();
    for (const auto& rep : replicates)
        if (rep.size() != n)
            throw std::invalid_argument("operating_characteristics: length mismatch");
    std::vector<double> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::vector<std::size_t>> groups(distinct.size());
    for (std::size_t j = 0; j < n; ++j) {
        const auto g = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), labels[j]) -
            distinct.begin());
        groups[g].push_back(j);
    }
    return summarize_groups(replicates, labels, groups);
}

double innate_offset(std::span<const double> zero_signal_intensities) {
    return mean(zero_signal_intensities);
}

double slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("slope: need two equal-length samples");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("slope: degenerate x");
    return sxy / sxx;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("auc: length mismatch");
    const auto rank = midranks(scores);
    double rank_sum = 0.0;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0) {
            rank_sum += rank[i];
            ++n1;
        }
    }
    const std::size_t n0 = scores.size() - n1;
    if (n1 == 0 || n0 == 0)
        throw std::invalid_argument("auc: both classes must be present");
    const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("spearman: need at least 3 paired values");
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("spearman: constant input");
    return sxy / std::sqrt(sxx * syy);
}

double welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t: each group needs at least 2 values");
    const double va = variance(a) / static_cast<double>(a.size());
    const double vb = variance(b) / static_cast<double>(b.size());
    return (mean(a) - mean(b)) / std::sqrt(va + vb);
}

std::vector<double> apply_offset_log(std::span<const double> x, double offset) {
    if (!(offset >= 0.0)) throw std::invalid_argument("apply_offset_log: offset must be >= 0");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] + offset > 0.0))
            throw std::invalid_argument("apply_offset_log: x + offset must be positive");
        out[i] = std::log2(x[i] + offset);
    }
    return out;
}

}  // namespace normgam
