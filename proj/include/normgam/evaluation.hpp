#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace normgam {

// Penalized-likelihood irregular histogram: a density whose bin widths adapt
// to the data.
struct IrregularHistogram {
    std::vector<double> breakpoints;  // increasing, size = bins + 1
    std::vector<double> heights;      // density heights, integrate to 1

    double value(double x) const;
};

// Dynamic-programming maximization of  sum n_i log(n_i / (n w_i)) - pen(D)
// over partitions whose breakpoints come from a `max_breaks`-point empirical
// quantile grid, pen(D) = D - 1 + (log D)^2.5.
IrregularHistogram irregular_histogram(std::span<const double> x, int max_breaks = 200);

// L1 distance between a density f and the histogram density, by adaptive
// quadrature over the bins. When finite support bounds are given, the mass
// of f outside the histogram range is added.
double l1_distance(const std::function<double(double)>& f, const IrregularHistogram& h,
                   double support_lo = std::numeric_limits<double>::quiet_NaN(),
                   double support_hi = std::numeric_limits<double>::quiet_NaN());

// Mean absolute deviation between corrected and true signal, raw and
// natural-log scale.
double mad(std::span<const double> corrected, std::span<const double> truth);
double mad_log(std::span<const double> corrected, std::span<const double> truth);

// R(i) = MAD(method i) / MAD(reference).
std::vector<double> excess_risk_ratio(std::span<const double> mads, double reference);

// Per-probe absolute deviation across replicates, as (log signal, AD) pairs
// sorted by signal. `corrected` holds one vector per replicate, all against
// the shared truth.
struct AdPoint {
    double log_signal;
    double ad;
};
std::vector<AdPoint> ad_profile(const std::vector<std::vector<double>>& corrected,
                                std::span<const double> truth, bool log_scale);

// Rank-preserving map of every array onto the cross-array mean order
// statistics; ties share the mean of their positions.
std::vector<std::vector<double>> quantile_normalize(
    const std::vector<std::vector<double>>& arrays);

// Bias/precision summaries per signal level: probes are grouped into
// `n_levels` quantile bins of the truth (or by identical label values), and
// each row reports the mean corrected intensity and the mean across-replicate
// standard deviation in the bin.
struct OcRow {
    double level;           // mean truth value in the bin (or the label)
    double mean_intensity;  // mean over probes and replicates
    double replicate_sd;    // mean over probes of the across-replicate SD
};
std::vector<OcRow> operating_characteristics(
    const std::vector<std::vector<double>>& replicates, std::span<const double> truth,
    int n_levels = 10);
std::vector<OcRow> operating_characteristics_by_label(
    const std::vector<std::vector<double>>& replicates, std::span<const double> labels);

double innate_offset(std::span<const double> zero_signal_intensities);
double slope(std::span<const double> x, std::span<const double> y);  // OLS

// Mann-Whitney AUC with ties counted half.
double auc(std::span<const double> scores, std::span<const int> labels);
// Pearson correlation of mid-ranks.
double spearman(std::span<const double> x, std::span<const double> y);
// Unequal-variance two-sample t statistic (a minus b).
double welch_t(std::span<const double> a, std::span<const double> b);

// log2(x + offset) elementwise; requires x + offset > 0.
std::vector<double> apply_offset_log(std::span<const double> x, double offset);

// One long-format report row: metric \t method \t set \t scale \t value.
struct EvalRow {
    std::string metric;
    std::string method;
    std::string set;
    std::string scale;
    double value;
};

}  // namespace normgam
