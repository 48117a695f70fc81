#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "psdo/expr.hpp"
#include "psdo/parser.hpp"

using namespace psdo;
using namespace psdo::symbols;

namespace {

Complex at1(const SymbolExpr& a, double x, double xi) {
  double xs[1] = {x}, ks[1] = {xi};
  return a.eval(xs, ks);
}

double fd_step(const SymbolExpr& a, Axis axis, int idx, std::vector<double> x,
               std::vector<double> xi, double h) {
  auto& v = (axis == Axis::X) ? x : xi;
  v[idx] += h;
  double hi = a.eval(x, xi).real();
  v[idx] -= 2 * h;
  double lo = a.eval(x, xi).real();
  return (hi - lo) / (2 * h);
}

}  // namespace

TEST_CASE("parse and evaluate fixed points") {
  auto a = parse_symbol("1 + x1^2 + k1^2", 1);
  CHECK(at1(a, 2.0, 3.0) == Complex(14.0, 0.0));
  CHECK(at1(a, 0.0, 0.0) == Complex(1.0, 0.0));

  auto ang = parse_symbol("angle()", 1);
  CHECK(at1(ang, 1.0, 2.0).real() == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));

  auto ax = parse_symbol("anglex()", 2);
  double xs[2] = {3.0, 4.0}, ks[2] = {0.0, 0.0};
  CHECK(ax.eval(xs, ks).real() == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));

  auto e = parse_symbol("exp(x1*k1)", 1);
  CHECK(at1(e, 2.0, 0.5).real() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));

  auto im = parse_symbol("i*x1", 1);
  CHECK(at1(im, 5.0, 0.0) == Complex(0.0, 5.0));

  auto r = parse_symbol("recip(1+x1^2+k1^2)", 1);
  CHECK(at1(r, 1.0, 1.0).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  auto neg_pow = parse_symbol("x1^-2", 1);
  CHECK(at1(neg_pow, 3.0, 0.0).real() == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

  // principal branch: (-1)^(1/2) = i
  auto half = parse_symbol("x1^0.5", 1);
  Complex v = at1(half, -1.0, 0.0);
  CHECK(v.imag() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(v.real()) < 1e-12);
}

TEST_CASE("constant folding happens at parse time") {
  auto c = parse_symbol("2*3 + 1", 1);
  CHECK(c.node()->kind == Kind::Constant);
  CHECK(c.node()->constant == Complex(7.0, 0.0));

  auto c2 = parse_symbol("(1+2*i)*2", 1);
  CHECK(c2.node()->kind == Kind::Constant);
  CHECK(c2.node()->constant == Complex(2.0, 4.0));

  auto c3 = parse_symbol("2^-2", 1);
  CHECK(c3.node()->constant == Complex(0.25, 0.0));

  // x - x does not fold (no term cancellation by design), but 0*x does
  auto z = parse_symbol("0*x1", 1);
  CHECK(z.node()->kind == Kind::Constant);
  CHECK(z.node()->constant == Complex(0.0, 0.0));
}

TEST_CASE("print and reparse is structurally stable") {
  const char* samples[] = {
      "1+x1^2+k1^2",
      "exp(angle()^0.5)",
      "recip(1+x1^2+k1^2)",
      "x1*k1",
      "(1+2*i)*x1",
      "anglex()^-2",
      "exp(log(angle()))",
      "-x1+3*k1^4",
      "x1/(1+k1^2)",
  };
  for (const char* s : samples) {
    CAPTURE(s);
    auto a = parse_symbol(s, 1);
    auto b = parse_symbol(a.str(), 1);
    CHECK(structurally_equal(a, b));
    CHECK(a.str() == b.str());
  }
  auto a2 = parse_symbol("x1*x2*k2^3 + anglek()", 2);
  auto b2 = parse_symbol(a2.str(), 2);
  CHECK(structurally_equal(a2, b2));
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(parse_symbol("x2", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("x1 +", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("foo(x1)", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("x1^k1", 1), ParseError);  // non-constant exponent
  CHECK_THROWS_AS(parse_symbol("angle(x1)", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("x1) ", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("1/0", 1), ParseError);
  CHECK_THROWS_AS(parse_symbol("log(0)", 1), ParseError);

  try {
    parse_symbol("x1 + $", 1);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
  try {
    parse_symbol("k3", 2);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset == 0);
  }
}

TEST_CASE("evaluation guards singular points") {
  auto r = parse_symbol("recip(x1)", 1);
  CHECK_THROWS_AS(at1(r, 0.0, 0.0), std::domain_error);
  auto l = parse_symbol("log(x1)", 1);
  CHECK_THROWS_AS(at1(l, 0.0, 0.0), std::domain_error);
  auto p = parse_symbol("x1^-1", 1);
  CHECK_THROWS_AS(at1(p, 0.0, 0.0), std::domain_error);

  auto a = parse_symbol("x1+k1", 1);
  double xs[2] = {1.0, 2.0}, ks[1] = {0.0};
  CHECK_THROWS_AS(a.eval(xs, ks), std::invalid_argument);
}

TEST_CASE("dependence masks") {
  auto a = parse_symbol("anglek()", 2);
  CHECK_FALSE(a.depends_on_x());
  CHECK(a.depends_on_xi());

  auto b = parse_symbol("x1*k2", 2);
  CHECK(b.depends_on_x());
  CHECK(b.depends_on_xi());

  auto c = parse_symbol("3+0*x1", 1);
  CHECK_FALSE(c.depends_on_x());
  CHECK_FALSE(c.depends_on_xi());

  // derivative along an absent coordinate collapses to the zero constant
  auto d = partial_derivative(a, Axis::X, 0);
  CHECK(d.node()->kind == Kind::Constant);
  CHECK(d.node()->constant == Complex(0.0, 0.0));
}

TEST_CASE("single derivatives match hand formulas") {
  auto sq = parse_symbol("x1^2", 1);
  auto dsq = partial_derivative(sq, Axis::X, 0);
  CHECK(at1(dsq, 3.0, 0.0).real() == doctest::Approx(6.0).epsilon(1e-15));

  // d/dxi of 1/(1+x^2+xi^2) = -2 xi / (1+x^2+xi^2)^2
  auto r = parse_symbol("recip(1+x1^2+k1^2)", 1);
  auto dr = partial_derivative(r, Axis::Xi, 0);
  double x = 0.7, xi = -1.3;
  double denom = 1 + x * x + xi * xi;
  double want = -2 * xi / (denom * denom);
  CHECK(at1(dr, x, xi).real() == doctest::Approx(want).epsilon(1e-14));

  // d/dx angle() = x / angle()
  auto ang = parse_symbol("angle()", 1);
  auto dang = partial_derivative(ang, Axis::X, 0);
  double want2 = x / std::sqrt(1 + x * x + xi * xi);
  CHECK(at1(dang, x, xi).real() == doctest::Approx(want2).epsilon(1e-14));

  // d/dx exp(x*k) = k exp(x*k)
  auto e = parse_symbol("exp(x1*k1)", 1);
  auto de = partial_derivative(e, Axis::X, 0);
  CHECK(at1(de, x, xi).real() ==
        doctest::Approx(xi * std::exp(x * xi)).epsilon(1e-14));

  // d/dx log(anglex()) = x / (1+x^2)
  auto lg = parse_symbol("log(anglex())", 1);
  auto dlg = partial_derivative(lg, Axis::X, 0);
  CHECK(at1(dlg, x, 0.0).real() ==
        doctest::Approx(x / (1 + x * x)).epsilon(1e-13));
}

TEST_CASE("iterated derivatives agree with central differences") {
  auto a = parse_symbol("exp(angle()^0.5)", 1);
  std::mt19937_64 rng(20260818);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-5;

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x{u(rng)}, xi{u(rng)};

    auto dx = differentiate(a, {0}, {1});
    double fd = fd_step(a, Axis::X, 0, x, xi, h);
    CHECK(dx.eval(x, xi).real() == doctest::Approx(fd).epsilon(1e-6));

    auto dk = differentiate(a, {1}, {0});
    double fdk = fd_step(a, Axis::Xi, 0, x, xi, h);
    CHECK(dk.eval(x, xi).real() == doctest::Approx(fdk).epsilon(1e-6));

    // mixed second derivative via nested differences of the first
    auto dxk = differentiate(a, {1}, {1});
    auto dk1 = differentiate(a, {1}, {0});
    double fdm = fd_step(dk1, Axis::X, 0, x, xi, h);
    CHECK(dxk.eval(x, xi).real() == doctest::Approx(fdm).epsilon(1e-6));
  }
}

TEST_CASE("product rule and linearity hold exactly") {
  auto f = parse_symbol("exp(x1*k1)", 1);
  auto g = parse_symbol("angle()", 1);
  auto fg = SymbolExpr(mul(f.node(), g.node()));

  auto d_fg = partial_derivative(fg, Axis::X, 0);
  auto df = partial_derivative(f, Axis::X, 0);
  auto dg = partial_derivative(g, Axis::X, 0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x{u(rng)}, xi{u(rng)};
    Complex lhs = d_fg.eval(x, xi);
    Complex rhs = df.eval(x, xi) * g.eval(x, xi) + f.eval(x, xi) * dg.eval(x, xi);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("mixed derivative of separated brackets vanishes") {
  auto a = parse_symbol("anglex()^2 + anglek()^2", 1);
  auto d = differentiate(a, {1}, {1});
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x{u(rng)}, xi{u(rng)};
    CHECK(std::abs(d.eval(x, xi)) <= 1e-12);
  }
}

TEST_CASE("D convention carries the phase factor") {
  // D_x^2 x^2 = (-i)^2 * 2 = -2
  auto sq = parse_symbol("x1^2", 1);
  auto d2 = differentiate(sq, {0}, {2}, DiffConvention::DOp);
  CHECK(at1(d2, 0.3, 0.0) == Complex(-2.0, 0.0));

  // D_x x^2 = -2ix
  auto d1 = differentiate(sq, {0}, {1}, DiffConvention::DOp);
  CHECK(at1(d1, 3.0, 0.0) == Complex(0.0, -6.0));

  // order 4 wraps the phase back to 1
  auto q = parse_symbol("x1^4", 1);
  auto d4 = differentiate(q, {0}, {4}, DiffConvention::DOp);
  CHECK(at1(d4, 1.0, 0.0) == Complex(24.0, 0.0));
}

TEST_CASE("differentiate validates its inputs") {
  auto a = parse_symbol("x1*k1", 1);
  CHECK_THROWS_AS(differentiate(a, {1, 0}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(differentiate(a, {-1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(differentiate(a, {9}, {9}, DiffConvention::Partial, 16),
                  std::invalid_argument);
}

TEST_CASE("memoizing evaluator matches plain evaluation on a shared tree") {
  // u_{n+1} = u_n^2 + 1 built by sharing, 12 levels deep
  ExprPtr u = make_var(1, Axis::X, 0);
  ExprPtr one = make_constant(1, 1.0);
  for (int lvl = 0; lvl < 12; ++lvl) u = add(mul(u, u), one);
  SymbolExpr a(u);

  Evaluator ev;
  std::vector<double> x{0.123}, xi{0.0};
  Complex direct = a.eval(x, xi);
  Complex memo = ev(a, x, xi);
  CHECK(direct == memo);

  std::vector<double> x2{-0.5};
  CHECK(a.eval(x2, xi) == ev(a, x2, xi));
}

TEST_CASE("structural equality distinguishes near misses") {
  auto a = parse_symbol("x1+k1", 1);
  auto b = parse_symbol("k1+x1", 1);  // no reordering, so these differ
  CHECK_FALSE(structurally_equal(a, b));

  auto c = parse_symbol("x1 + k1", 1);
  CHECK(structurally_equal(a, c));
  CHECK(a.node()->hash == c.node()->hash);

  auto p = parse_symbol("x1^2", 1);
  auto q = parse_symbol("x1^3", 1);
  CHECK_FALSE(structurally_equal(p, q));
}
