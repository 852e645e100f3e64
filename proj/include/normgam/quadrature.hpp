#pragma once

#include <functional>
#include <span>
#include <vector>

namespace normgam {

struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

// Globally adaptive Gauss-Kronrod (G7,K15) quadrature over a union of
// panels given by consecutive edges. Worst-error interval is bisected
// until |error estimate| <= max(abs_tol, rel_tol*|result|).
// Throws std::runtime_error on non-convergence.
double integrate(const std::function<double(double)>& f,
                 std::span<const double> panel_edges,
                 const QuadOptions& opts = {});

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opts = {});

}  // namespace normgam
