#pragma once

#include <vector>

namespace psdo {

// Multi-indices are small vectors of nonnegative ints. Orders stay tiny at
// desk scale, so the combinatorial helpers work in double precision.
using MultiIndex = std::vector<int>;

int order(const MultiIndex& a);
double log_factorial(int n);
double factorial(const MultiIndex& a);                      // alpha!
bool component_leq(const MultiIndex& b, const MultiIndex& a);
MultiIndex subtract(const MultiIndex& a, const MultiIndex& b);
double binomial_coeff(int n, int k);
double binomial(const MultiIndex& a, const MultiIndex& b);  // product of per-axis binomials

std::vector<MultiIndex> indices_of_order(int dim, int total);
std::vector<MultiIndex> indices_up_to_order(int dim, int max_total);
std::vector<MultiIndex> indices_below(const MultiIndex& a);  // every beta <= alpha, including 0 and alpha
long index_pair_count(int dim, int max_total);               // cost guard for scans over (alpha, beta <= alpha)

}
