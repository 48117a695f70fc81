#include "psdo/multi_index.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace psdo {

int order(const MultiIndex& a) {
  return std::accumulate(a.begin(), a.end(), 0);
}

double log_factorial(int n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double factorial(const MultiIndex& a) {
  double r = 1.0;
  for (int ai : a)
    for (int k = 2; k <= ai; ++k) r *= k;
  return r;
}

bool component_leq(const MultiIndex& b, const MultiIndex& a) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (b[i] > a[i]) return false;
  return true;
}

MultiIndex subtract(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex r(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    r[i] = a[i] - b[i];
    if (r[i] < 0) throw std::invalid_argument("multi-index subtraction went negative");
  }
  return r;
}

double binomial_coeff(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double binomial(const MultiIndex& a, const MultiIndex& b) {
  double r = 1.0;
  for (size_t i = 0; i < a.size(); ++i) r *= binomial_coeff(a[i], b[i]);
  return r;
}

namespace {

void walk_order(int dim, int axis, int remaining, bool exact, MultiIndex& cur,
                std::vector<MultiIndex>& out) {
  if (axis == dim - 1) {
    if (exact) {
      cur[axis] = remaining;
      out.push_back(cur);
    } else {
      for (int v = 0; v <= remaining; ++v) {
        cur[axis] = v;
        out.push_back(cur);
      }
    }
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    cur[axis] = v;
    walk_order(dim, axis + 1, remaining - v, exact, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> indices_of_order(int dim, int total) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dim, 0);
  if (dim == 0) return out;
  walk_order(dim, 0, total, true, cur, out);
  return out;
}

std::vector<MultiIndex> indices_up_to_order(int dim, int max_total) {
  std::vector<MultiIndex> out;
  MultiIndex cur(dim, 0);
  if (dim == 0) return out;
  walk_order(dim, 0, max_total, false, cur, out);
  return out;
}

std::vector<MultiIndex> indices_below(const MultiIndex& a) {
  std::vector<MultiIndex> out;
  MultiIndex cur(a.size(), 0);
  size_t n = 1;
  for (int ai : a) n *= static_cast<size_t>(ai) + 1;
  out.reserve(n);
  while (true) {
    out.push_back(cur);
    size_t i = 0;
    while (i < a.size() && cur[i] == a[i]) cur[i++] = 0;
    if (i == a.size()) break;
    ++cur[i];
  }
  return out;
}

long index_pair_count(int dim, int max_total) {
  long n = 0;
  for (const auto& a : indices_up_to_order(dim, max_total)) {
    long m = 1;
    for (int ai : a) m *= ai + 1;
    n += m;
  }
  return n;
}

}  // namespace psdo
