#pragma once

#include <vector>

#include "qtraj/linalg.hpp"

namespace qtraj {

// Exact discrete optimal transport: minimize sum_ij f_ij cost(i,j) over
// nonnegative couplings with the given marginals (balanced to the same
// total mass). Transportation-specialized network simplex with a
// north-west-corner start and block pricing. Returns the optimal cost.
double min_cost_transport(const RMatrix& cost, std::vector<double> supply,
                          std::vector<double> demand);

}  // namespace qtraj
