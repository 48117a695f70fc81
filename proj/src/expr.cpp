#include "psdo/expr.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <unordered_set>

namespace psdo::symbols {

namespace {

constexpr int kMaxDim = 16;

size_t mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

size_t hash_double(double v) {
  if (v == 0.0) v = 0.0;  // collapse -0.0 so hash agrees with ==
  return std::bit_cast<uint64_t>(v);
}

uint64_t all_x_bits(int dim) { return (uint64_t{1} << dim) - 1; }
uint64_t all_xi_bits(int dim) { return all_x_bits(dim) << dim; }

// Fill hash and dep_mask from the already-populated fields.
void finalize(Expr& e) {
  size_t h = mix(0x42, static_cast<size_t>(e.kind));
  h = mix(h, static_cast<size_t>(e.dim));
  switch (e.kind) {
    case Kind::Constant:
      h = mix(h, hash_double(e.constant.real()));
      h = mix(h, hash_double(e.constant.imag()));
      e.dep_mask = 0;
      break;
    case Kind::Var: {
      h = mix(h, static_cast<size_t>(e.axis));
      h = mix(h, static_cast<size_t>(e.index));
      int bit = (e.axis == Axis::X) ? e.index : e.dim + e.index;
      e.dep_mask = uint64_t{1} << bit;
      break;
    }
    case Kind::AngleJoint:
      e.dep_mask = all_x_bits(e.dim) | all_xi_bits(e.dim);
      break;
    case Kind::AngleX:
      e.dep_mask = all_x_bits(e.dim);
      break;
    case Kind::AngleK:
      e.dep_mask = all_xi_bits(e.dim);
      break;
    case Kind::Power:
      h = mix(h, hash_double(e.exponent));
      [[fallthrough]];
    default:
      e.dep_mask = 0;
      for (const auto& k : e.kids) {
        h = mix(h, k->hash);
        e.dep_mask |= k->dep_mask;
      }
      break;
  }
  e.hash = h;
}

ExprPtr make_node(Expr e) {
  finalize(e);
  return std::make_shared<const Expr>(std::move(e));
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("symbol dimension must be in [1, 16]");
}

void check_same_dim(const std::vector<ExprPtr>& kids) {
  for (const auto& k : kids)
    if (k->dim != kids.front()->dim)
      throw std::invalid_argument("dimension mismatch between subexpressions");
}

bool is_const(const ExprPtr& e) { return e->kind == Kind::Constant; }

bool is_const_value(const ExprPtr& e, Complex c) {
  return is_const(e) && e->constant == c;
}

Complex pown(Complex base, long long n) {
  if (n < 0) {
    if (base == Complex{})
      throw std::domain_error("zero raised to a negative power");
    return 1.0 / pown(base, -n);
  }
  Complex acc = 1.0;
  while (n) {
    if (n & 1) acc *= base;
    base *= base;
    n >>= 1;
  }
  return acc;
}

bool integral_exponent(double p, long long& n) {
  double ip;
  if (std::modf(p, &ip) != 0.0 || std::fabs(p) > 4096.0) return false;
  n = static_cast<long long>(ip);
  return true;
}

Complex eval_power(Complex base, double p) {
  long long n;
  if (integral_exponent(p, n)) return pown(base, n);
  if (base == Complex{}) {
    if (p > 0) return {};
    throw std::domain_error("zero raised to a nonpositive power");
  }
  return std::pow(base, Complex(p));
}

}  // namespace

ExprPtr make_constant(int dim, Complex c) {
  check_dim(dim);
  Expr e;
  e.kind = Kind::Constant;
  e.dim = dim;
  // normalize signed zeros so equal constants hash equally
  double re = c.real() == 0.0 ? 0.0 : c.real();
  double im = c.imag() == 0.0 ? 0.0 : c.imag();
  e.constant = {re, im};
  return make_node(std::move(e));
}

ExprPtr make_var(int dim, Axis axis, int index) {
  check_dim(dim);
  if (index < 0 || index >= dim)
    throw std::invalid_argument("variable index out of range");
  Expr e;
  e.kind = Kind::Var;
  e.dim = dim;
  e.axis = axis;
  e.index = index;
  return make_node(std::move(e));
}

ExprPtr make_sum(std::vector<ExprPtr> kids) {
  if (kids.empty()) throw std::invalid_argument("sum needs at least one term");
  check_same_dim(kids);
  int dim = kids.front()->dim;
  Complex c = 0.0;
  std::vector<ExprPtr> flat;
  for (auto& k : kids) {
    if (k->kind == Kind::Sum) {
      for (const auto& g : k->kids) {
        if (is_const(g))
          c += g->constant;
        else
          flat.push_back(g);
      }
    } else if (is_const(k)) {
      c += k->constant;
    } else {
      flat.push_back(std::move(k));
    }
  }
  if (flat.empty()) return make_constant(dim, c);
  if (c != 0.0) flat.insert(flat.begin(), make_constant(dim, c));
  if (flat.size() == 1) return flat.front();
  Expr e;
  e.kind = Kind::Sum;
  e.dim = dim;
  e.kids = std::move(flat);
  return make_node(std::move(e));
}

ExprPtr make_product(std::vector<ExprPtr> kids) {
  if (kids.empty())
    throw std::invalid_argument("product needs at least one factor");
  check_same_dim(kids);
  int dim = kids.front()->dim;
  Complex c = 1.0;
  std::vector<ExprPtr> flat;
  for (auto& k : kids) {
    if (k->kind == Kind::Product) {
      for (const auto& g : k->kids) {
        if (is_const(g))
          c *= g->constant;
        else
          flat.push_back(g);
      }
    } else if (is_const(k)) {
      c *= k->constant;
    } else {
      flat.push_back(std::move(k));
    }
  }
  if (c == 0.0 || flat.empty()) return make_constant(dim, c);
  if (c != 1.0) flat.insert(flat.begin(), make_constant(dim, c));
  if (flat.size() == 1) return flat.front();
  Expr e;
  e.kind = Kind::Product;
  e.dim = dim;
  e.kids = std::move(flat);
  return make_node(std::move(e));
}

ExprPtr make_power(ExprPtr base, double exponent) {
  if (!std::isfinite(exponent))
    throw std::invalid_argument("power exponent must be finite");
  if (exponent == 0.0) return make_constant(base->dim, 1.0);
  if (exponent == 1.0) return base;
  if (is_const(base))
    return make_constant(base->dim, eval_power(base->constant, exponent));
  Expr e;
  e.kind = Kind::Power;
  e.dim = base->dim;
  e.exponent = exponent;
  e.kids = {std::move(base)};
  return make_node(std::move(e));
}

ExprPtr make_recip(ExprPtr u) {
  if (is_const(u)) {
    if (u->constant == Complex{})
      throw std::domain_error("reciprocal of exact zero");
    return make_constant(u->dim, 1.0 / u->constant);
  }
  if (u->kind == Kind::Recip) return u->kids.front();
  Expr e;
  e.kind = Kind::Recip;
  e.dim = u->dim;
  e.kids = {std::move(u)};
  return make_node(std::move(e));
}

ExprPtr make_exp(ExprPtr u) {
  if (is_const(u)) return make_constant(u->dim, std::exp(u->constant));
  Expr e;
  e.kind = Kind::Exp;
  e.dim = u->dim;
  e.kids = {std::move(u)};
  return make_node(std::move(e));
}

ExprPtr make_log(ExprPtr u) {
  if (is_const(u)) {
    if (u->constant == Complex{})
      throw std::domain_error("log of exact zero");
    return make_constant(u->dim, std::log(u->constant));
  }
  Expr e;
  e.kind = Kind::Log;
  e.dim = u->dim;
  e.kids = {std::move(u)};
  return make_node(std::move(e));
}

ExprPtr make_angle_joint(int dim) {
  check_dim(dim);
  Expr e;
  e.kind = Kind::AngleJoint;
  e.dim = dim;
  return make_node(std::move(e));
}

ExprPtr make_angle_x(int dim) {
  check_dim(dim);
  Expr e;
  e.kind = Kind::AngleX;
  e.dim = dim;
  return make_node(std::move(e));
}

ExprPtr make_angle_k(int dim) {
  check_dim(dim);
  Expr e;
  e.kind = Kind::AngleK;
  e.dim = dim;
  return make_node(std::move(e));
}

ExprPtr add(ExprPtr a, ExprPtr b) { return make_sum({std::move(a), std::move(b)}); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return make_product({std::move(a), std::move(b)}); }

ExprPtr scale(Complex c, ExprPtr e) {
  return make_product({make_constant(e->dim, c), std::move(e)});
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash || a->kind != b->kind || a->dim != b->dim) return false;
  switch (a->kind) {
    case Kind::Constant:
      return a->constant == b->constant;
    case Kind::Var:
      return a->axis == b->axis && a->index == b->index;
    case Kind::Power:
      if (a->exponent != b->exponent) return false;
      break;
    default:
      break;
  }
  if (a->kids.size() != b->kids.size()) return false;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!structurally_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return s;
}

Complex eval_node(const Expr* e, std::span<const double> x,
                  std::span<const double> xi,
                  std::unordered_map<const Expr*, Complex>* memo) {
  if (memo) {
    auto it = memo->find(e);
    if (it != memo->end()) return it->second;
  }
  Complex v;
  switch (e->kind) {
    case Kind::Constant:
      v = e->constant;
      break;
    case Kind::Var:
      v = (e->axis == Axis::X) ? x[e->index] : xi[e->index];
      break;
    case Kind::Sum: {
      v = 0.0;
      for (const auto& k : e->kids) v += eval_node(k.get(), x, xi, memo);
      break;
    }
    case Kind::Product: {
      v = 1.0;
      for (const auto& k : e->kids) v *= eval_node(k.get(), x, xi, memo);
      break;
    }
    case Kind::Power:
      v = eval_power(eval_node(e->kids[0].get(), x, xi, memo), e->exponent);
      break;
    case Kind::Recip: {
      Complex u = eval_node(e->kids[0].get(), x, xi, memo);
      if (u == Complex{})
        throw std::domain_error("division by zero in symbol evaluation");
      v = 1.0 / u;
      break;
    }
    case Kind::Exp:
      v = std::exp(eval_node(e->kids[0].get(), x, xi, memo));
      break;
    case Kind::Log: {
      Complex u = eval_node(e->kids[0].get(), x, xi, memo);
      if (u == Complex{})
        throw std::domain_error("log of zero in symbol evaluation");
      v = std::log(u);
      break;
    }
    case Kind::AngleJoint:
      v = std::sqrt(1.0 + sq_norm(x) + sq_norm(xi));
      break;
    case Kind::AngleX:
      v = std::sqrt(1.0 + sq_norm(x));
      break;
    case Kind::AngleK:
      v = std::sqrt(1.0 + sq_norm(xi));
      break;
  }
  if (memo) memo->emplace(e, v);
  return v;
}

}  // namespace

SymbolExpr::SymbolExpr(ExprPtr root) : root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("null symbol expression");
}

int SymbolExpr::dim() const { return root_ ? root_->dim : 0; }

Complex SymbolExpr::eval(std::span<const double> x,
                         std::span<const double> xi) const {
  if (!root_) throw std::logic_error("evaluating an empty symbol");
  if (static_cast<int>(x.size()) != root_->dim ||
      static_cast<int>(xi.size()) != root_->dim)
    throw std::invalid_argument("point dimension does not match symbol");
  return eval_node(root_.get(), x, xi, nullptr);
}

bool SymbolExpr::depends_on_x() const {
  return root_ && (root_->dep_mask & all_x_bits(root_->dim));
}

bool SymbolExpr::depends_on_xi() const {
  return root_ && (root_->dep_mask & all_xi_bits(root_->dim));
}

bool structurally_equal(const SymbolExpr& a, const SymbolExpr& b) {
  if (!a.valid() || !b.valid()) return a.valid() == b.valid();
  return structurally_equal(a.node(), b.node());
}

size_t node_count(const ExprPtr& root) {
  if (!root) return 0;
  std::unordered_set<const Expr*> seen;
  std::vector<const Expr*> stack{root.get()};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (!seen.insert(e).second) continue;
    for (const auto& k : e->kids) stack.push_back(k.get());
  }
  return seen.size();
}

Complex Evaluator::operator()(const SymbolExpr& e, std::span<const double> x,
                              std::span<const double> xi) {
  if (!e.valid()) throw std::logic_error("evaluating an empty symbol");
  if (static_cast<int>(x.size()) != e.dim() ||
      static_cast<int>(xi.size()) != e.dim())
    throw std::invalid_argument("point dimension does not match symbol");
  memo_.clear();
  return eval_node(e.node().get(), x, xi, &memo_);
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Expr* e, std::string& out) {
  switch (e->kind) {
    case Kind::Constant: {
      double re = e->constant.real(), im = e->constant.imag();
      if (im == 0.0) {
        if (re < 0.0)
          out += "(" + fmt_double(re) + ")";
        else
          out += fmt_double(re);
      } else {
        char buf[96];
        std::snprintf(buf, sizeof buf, "(%.17g%+.17g*i)", re, im);
        out += buf;
      }
      break;
    }
    case Kind::Var:
      out += (e->axis == Axis::X) ? 'x' : 'k';
      out += std::to_string(e->index + 1);
      break;
    case Kind::Sum:
    case Kind::Product: {
      const char sep = (e->kind == Kind::Sum) ? '+' : '*';
      out += '(';
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (i) out += sep;
        print_node(e->kids[i].get(), out);
      }
      out += ')';
      break;
    }
    case Kind::Power:
      out += '(';
      print_node(e->kids[0].get(), out);
      out += '^';
      out += fmt_double(e->exponent);
      out += ')';
      break;
    case Kind::Recip:
      out += "recip(";
      print_node(e->kids[0].get(), out);
      out += ')';
      break;
    case Kind::Exp:
      out += "exp(";
      print_node(e->kids[0].get(), out);
      out += ')';
      break;
    case Kind::Log:
      out += "log(";
      print_node(e->kids[0].get(), out);
      out += ')';
      break;
    case Kind::AngleJoint:
      out += "angle()";
      break;
    case Kind::AngleX:
      out += "anglex()";
      break;
    case Kind::AngleK:
      out += "anglek()";
      break;
  }
}

}  // namespace

std::string SymbolExpr::str() const {
  if (!root_) return "";
  std::string out;
  print_node(root_.get(), out);
  return out;
}

// ---------------------------------------------------------------------------
// differentiation

namespace {

struct DiffKey {
  const Expr* node;
  Axis axis;
  int index;
  bool operator==(const DiffKey&) const = default;
};

struct DiffKeyHash {
  size_t operator()(const DiffKey& k) const {
    size_t h = std::hash<const void*>{}(k.node);
    h = mix(h, static_cast<size_t>(k.axis));
    return mix(h, static_cast<size_t>(k.index));
  }
};

// Process-lifetime derivative cache. Entries pin their source node so the
// pointer keys stay valid; the phase-space trees in this codebase are small
// enough that the cache never becomes a memory concern.
struct DiffCache {
  std::mutex mu;
  std::unordered_map<DiffKey, std::pair<ExprPtr, ExprPtr>, DiffKeyHash> map;
};

DiffCache& diff_cache() {
  static DiffCache c;
  return c;
}

ExprPtr d_node(const ExprPtr& e, Axis axis, int index);

ExprPtr d_node_uncached(const ExprPtr& e, Axis axis, int index) {
  const int dim = e->dim;
  switch (e->kind) {
    case Kind::Constant:
      return make_constant(dim, 0.0);
    case Kind::Var:
      return make_constant(dim, 1.0);  // non-matching vars are screened out
    case Kind::Sum: {
      std::vector<ExprPtr> terms;
      for (const auto& k : e->kids) {
        ExprPtr dk = d_node(k, axis, index);
        if (!is_const_value(dk, 0.0)) terms.push_back(std::move(dk));
      }
      if (terms.empty()) return make_constant(dim, 0.0);
      return make_sum(std::move(terms));
    }
    case Kind::Product: {
      // n-ary Leibniz: replace one factor at a time by its derivative
      std::vector<ExprPtr> terms;
      for (size_t i = 0; i < e->kids.size(); ++i) {
        ExprPtr dk = d_node(e->kids[i], axis, index);
        if (is_const_value(dk, 0.0)) continue;
        std::vector<ExprPtr> factors = e->kids;
        factors[i] = std::move(dk);
        terms.push_back(make_product(std::move(factors)));
      }
      if (terms.empty()) return make_constant(dim, 0.0);
      return make_sum(std::move(terms));
    }
    case Kind::Power: {
      const ExprPtr& u = e->kids[0];
      ExprPtr du = d_node(u, axis, index);
      return make_product({make_constant(dim, e->exponent),
                           make_power(u, e->exponent - 1.0), std::move(du)});
    }
    case Kind::Recip: {
      const ExprPtr& u = e->kids[0];
      ExprPtr du = d_node(u, axis, index);
      return make_product(
          {make_constant(dim, -1.0), std::move(du), make_power(u, -2.0)});
    }
    case Kind::Exp: {
      ExprPtr du = d_node(e->kids[0], axis, index);
      return make_product({std::move(du), e});
    }
    case Kind::Log: {
      const ExprPtr& u = e->kids[0];
      ExprPtr du = d_node(u, axis, index);
      return make_product({std::move(du), make_power(u, -1.0)});
    }
    case Kind::AngleJoint:
      return make_product(
          {make_var(dim, axis, index), make_power(e, -1.0)});
    case Kind::AngleX:
    case Kind::AngleK:
      // dep screening guarantees the axis matches the bracket here
      return make_product(
          {make_var(dim, axis, index), make_power(e, -1.0)});
  }
  throw std::logic_error("unhandled node kind in derivative");
}

ExprPtr d_node(const ExprPtr& e, Axis axis, int index) {
  uint64_t bit = uint64_t{1}
                 << ((axis == Axis::X) ? index : e->dim + index);
  if (!(e->dep_mask & bit)) return make_constant(e->dim, 0.0);

  DiffKey key{e.get(), axis, index};
  auto& cache = diff_cache();
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.map.find(key);
    if (it != cache.map.end()) return it->second.second;
  }
  ExprPtr d = d_node_uncached(e, axis, index);
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    cache.map.emplace(key, std::make_pair(e, d));
  }
  return d;
}

}  // namespace

SymbolExpr partial_derivative(const SymbolExpr& a, Axis axis, int index) {
  if (!a.valid()) throw std::logic_error("differentiating an empty symbol");
  if (index < 0 || index >= a.dim())
    throw std::invalid_argument("derivative index out of range");
  return SymbolExpr(d_node(a.node(), axis, index));
}

SymbolExpr differentiate(const SymbolExpr& a, const MultiIndex& alpha_xi,
                         const MultiIndex& beta_x, DiffConvention conv,
                         int order_cap) {
  if (!a.valid()) throw std::logic_error("differentiating an empty symbol");
  const int dim = a.dim();
  if (static_cast<int>(alpha_xi.size()) != dim ||
      static_cast<int>(beta_x.size()) != dim)
    throw std::invalid_argument("multi-index length does not match dimension");
  for (int i = 0; i < dim; ++i)
    if (alpha_xi[i] < 0 || beta_x[i] < 0)
      throw std::invalid_argument("negative entry in derivative multi-index");
  const int total = order(alpha_xi) + order(beta_x);
  if (total > order_cap)
    throw std::invalid_argument("derivative order exceeds cap");

  SymbolExpr cur = a;
  for (int i = 0; i < dim; ++i)
    for (int r = 0; r < alpha_xi[i]; ++r)
      cur = partial_derivative(cur, Axis::Xi, i);
  for (int i = 0; i < dim; ++i)
    for (int r = 0; r < beta_x[i]; ++r)
      cur = partial_derivative(cur, Axis::X, i);

  if (conv == DiffConvention::DOp && total % 4 != 0) {
    static const Complex phases[4] = {
        {1, 0}, {0, -1}, {-1, 0}, {0, 1}};  // (-i)^n for n mod 4
    cur = SymbolExpr(scale(phases[total % 4], cur.node()));
  }
  return cur;
}

}  // namespace psdo::symbols
