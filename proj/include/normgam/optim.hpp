#pragma once

#include <functional>
#include <span>
#include <vector>

namespace normgam {

struct SimplexOptions {
    std::vector<double> initial_step;  // one entry per coordinate
    double ftol_rel = 1e-10;
    int max_evals = 4000;
};

struct SimplexResult {
    std::vector<double> x;
    double fval = 0.0;
    int evals = 0;
    bool tol_reached = false;
};

// Nelder-Mead simplex minimization (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5). Deterministic for a given start.
// Non-finite objective values are treated as +inf vertices.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> x0, const SimplexOptions& opts);

}  // namespace normgam
