#pragma once

#include <span>
#include <vector>

namespace normgam {

// Regular-probe intensities with vendor detection p-values
// P_j = #{negatives > X_j} / n_neg.
struct DetectionTable {
    std::vector<double> regular;
    std::vector<double> pvalues;
    std::size_t n_neg = 0;
};

// Throws unless lengths match, n_neg >= 1, and every p-value is an integer
// multiple of 1/n_neg within 1e-9.
void validate(const DetectionTable& t);

// P_j computed by sorted merge; the O(n^2) count is the test oracle.
std::vector<double> detection_pvalues(std::span<const double> regular,
                                      std::span<const double> negative);

struct InferredNegatives {
    std::vector<double> values;     // exactly n_neg entries
    bool count_adjusted = false;    // rounding residue was redistributed
};

// Reconstructs the negative-probe intensities from detection p-values:
// between consecutive p-value bands, d = round(n_neg * dQ) negatives are
// placed at the midpoint of the band gap; round(n_neg * min(Q)) above the
// largest intensity and n_neg * (1 - max(Q)) at the smallest. Recomputing
// detection p-values from the result reproduces the input exactly on
// strict-order inputs.
InferredNegatives infer_negatives(const DetectionTable& t);

}  // namespace normgam
