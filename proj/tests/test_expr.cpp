#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "fbvp/calculus.hpp"
#include "fbvp/eval.hpp"
#include "fbvp/parser.hpp"
#include "support.hpp"

using namespace fbvp;
using fbvp::testing::Rng;

namespace {

ParseContext beam_context() { return ParseContext().parameter("kappa").function("rho"); }

// cos and its derivatives: cos, -sin, -cos, sin, ...
double cos_derivative(double x, int order) {
  switch (order % 4) {
    case 0:
      return std::cos(x);
    case 1:
      return -std::sin(x);
    case 2:
      return -std::cos(x);
    default:
      return std::sin(x);
  }
}

// Random expressions can be undefined everywhere, e.g. (u - u)^(-2); those are skipped.
bool equal_where_defined(const Expr& a, const Expr& b, double tol, const SamplingOptions& opt) {
  try {
    return exprs_equal_numeric(a, b, 100, tol, opt);
  } catch (const DomainError&) {
    return true;
  }
}

SamplingOptions with_rho() {
  SamplingOptions opt;
  opt.functions["rho"] = cos_derivative;
  return opt;
}

bool contains(const Expr& e, Op op) {
  if (e.op() == op) return true;
  const int n = arity(e.op());
  if (n >= 1 && contains(e.node().a, op)) return true;
  return n == 2 && contains(e.node().b, op);
}

Expr random_expr(Rng& rng, int depth) {
  if (depth == 0 || rng.integer(0, 4) == 0) {
    switch (rng.integer(0, 6)) {
      case 0:
        return constant(std::round(rng.uniform(-5, 5) * 4) / 4);
      case 1:
        return var("x");
      case 2:
        return var("u");
      case 3:
        return var("p");
      case 4:
        return var("q");
      case 5:
        return var("kappa");
      default:
        return func("rho", rng.integer(0, 2), var("x"));
    }
  }
  Expr a = random_expr(rng, depth - 1);
  switch (rng.integer(0, 9)) {
    case 0:
      return a + random_expr(rng, depth - 1);
    case 1:
      return a - random_expr(rng, depth - 1);
    case 2:
      return a * random_expr(rng, depth - 1);
    case 3:
      return a / (2.5 + random_expr(rng, depth - 1));
    case 4:
      return pow(a, rng.integer(-2, 3));
    case 5:
      return sqrt(1.0 + a * a);
    case 6:
      return sin(a);
    case 7:
      return cos(a);
    case 8:
      return -a;
    default:
      return exp(a / 4.0);
  }
}

}  // namespace

TEST(Parse, BeamDensityStructure) {
  Expr e = parse_expression("kappa*q^2/2 - rho(x)*u", beam_context());
  EXPECT_EQ(e.op(), Op::Sub);
  EXPECT_TRUE(contains(e, Op::Mul));
  EXPECT_TRUE(contains(e, Op::Div));
  EXPECT_TRUE(contains(e, Op::Func));
  EXPECT_EQ(named_functions(e), std::set<std::string>{"rho"});
  EXPECT_EQ(to_string(e), "kappa*q^2/2 - rho(x)*u");
}

TEST(Parse, LengthDensity) {
  Expr e = parse_expression("p/sqrt(1+p^2)");
  EXPECT_EQ(e.op(), Op::Div);
  EXPECT_EQ(free_symbols(e), std::set<std::string>{"p"});
  EXPECT_NEAR(evaluate(e, Bindings().set("p", 0.75)), 0.6, 1e-15);
}

TEST(Parse, SyntaxErrorCarriesPosition) {
  try {
    parse_expression("(*x");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& err) {
    EXPECT_EQ(err.position(), 1u);
  }
  EXPECT_THROW(parse_expression("x +"), SyntaxError);
  EXPECT_THROW(parse_expression("x )"), SyntaxError);
  EXPECT_THROW(parse_expression("sqrt(x"), SyntaxError);
}

TEST(Parse, UnknownIdentifier) {
  try {
    parse_expression("kappa*q");
    FAIL() << "expected unknown identifier";
  } catch (const UnknownIdentifier& err) {
    EXPECT_EQ(std::string(err.what()), "unknown identifier kappa");
  }
  EXPECT_THROW(parse_expression("rho(x)"), UnknownIdentifier);
}

TEST(Parse, ExponentMustBeRationalConstant) {
  EXPECT_THROW(parse_expression("q^p"), SyntaxError);
  Expr e = parse_expression("p^(-3/2)");
  EXPECT_EQ(e.op(), Op::Pow);
  EXPECT_EQ(e.node().num, -3);
  EXPECT_EQ(e.node().den, 2);
  EXPECT_EQ(parse_expression("2^3").value(), 8.0);
  EXPECT_EQ(parse_expression("-2^2").value(), -4.0);
}

TEST(Parse, PrimesSetDerivativeOrder) {
  Expr e = parse_expression("rho''(x)", beam_context());
  ASSERT_EQ(e.op(), Op::Func);
  EXPECT_EQ(e.node().order, 2);
  EXPECT_EQ(to_string(e), "rho''(x)");
}

TEST(Parse, NumbersAndPi) {
  EXPECT_DOUBLE_EQ(parse_expression("1.5e2").value(), 150.0);
  EXPECT_DOUBLE_EQ(parse_expression("2*pi").value(), 2 * M_PI);
  EXPECT_DOUBLE_EQ(parse_expression(".5").value(), 0.5);
}

TEST(PartialDerivative, BeamDensity) {
  Expr lag = parse_expression("kappa*q^2/2 - rho(x)*u", beam_context());
  Expr dq = partial_derivative(lag, "q");
  EXPECT_EQ(to_string(dq), "kappa*q");
  Expr du = partial_derivative(lag, "u");
  EXPECT_TRUE(exprs_equal_numeric(du, -func("rho", 0, var("x")), 50, 1e-14, with_rho()));
  Expr dx = partial_derivative(lag, "x");
  EXPECT_TRUE(exprs_equal_numeric(dx, -func("rho", 1, var("x")) * var("u"), 50, 1e-14, with_rho()));
}

TEST(PartialDerivative, LengthIntegrandAgainstFiniteDifferences) {
  Expr e = parse_expression("p/sqrt(1+p^2)");
  Expr d = partial_derivative(e, "p");
  EXPECT_TRUE(exprs_equal_numeric(d, parse_expression("(1+p^2)^(-3/2)"), 100, 1e-13));
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const double p0 = rng.uniform(-3, 3);
    auto f = [&](double p) { return evaluate(e, Bindings().set("p", p)); };
    EXPECT_NEAR(evaluate(d, Bindings().set("p", p0)), fbvp::testing::central_difference(f, p0, 1e-3), 1e-8);
  }
}

TEST(PartialDerivative, NamedFunctionsDependOnlyOnTheirArgument) {
  Expr e = func("rho", 0, var("x"));
  EXPECT_TRUE(partial_derivative(e, "u").is_const(0.0));
  Expr dx = partial_derivative(e, "x");
  ASSERT_EQ(dx.op(), Op::Func);
  EXPECT_EQ(dx.node().order, 1);
  Expr chain = partial_derivative(func("rho", 0, var("x") * var("x")), "x");
  EXPECT_TRUE(exprs_equal_numeric(chain, func("rho", 1, var("x") * var("x")) * 2.0 * var("x"), 50, 1e-14, with_rho()));
}

TEST(TotalDerivative, Examples) {
  EXPECT_EQ(to_string(total_derivative(var("u"), 1)), "p");
  Expr xu = var("x") * var("u");
  EXPECT_TRUE(exprs_equal_numeric(total_derivative(xu, 1), var("u") + var("p") * var("x"), 50, 1e-14));
  EXPECT_THROW(total_derivative(var("p"), 1), OrderError);
  EXPECT_THROW(total_derivative(var("s"), 4), OrderError);
  EXPECT_THROW(total_derivative(var("u"), 5), OrderError);
  Expr d2 = total_derivative(parse_expression("p/sqrt(1+p^2)"), 2);
  EXPECT_TRUE(exprs_equal_numeric(d2, parse_expression("q*(1+p^2)^(-3/2)"), 100, 1e-13));
}

TEST(TotalDerivative, ChainRuleOnSampledCubics) {
  Expr e = parse_expression("p/sqrt(1+p^2)");
  Expr d = total_derivative(e, 2);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    double c[4];
    for (double& ci : c) ci = rng.uniform(-1, 1);
    auto cubic = [&](double x, int order) {
      switch (order) {
        case 0:
          return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        case 1:
          return c[1] + x * (2 * c[2] + 3 * x * c[3]);
        case 2:
          return 2 * c[2] + 6 * x * c[3];
        case 3:
          return 6 * c[3];
        default:
          return 0.0;
      }
    };
    const double x0 = rng.uniform(-1, 1);
    auto along = [&](double x) { return evaluate(e, fbvp::testing::jet_bindings(cubic, x)); };
    EXPECT_NEAR(evaluate(d, fbvp::testing::jet_bindings(cubic, x0)),
                fbvp::testing::central_difference(along, x0, 1e-3), 1e-8);
  }
}

TEST(Evaluate, Examples) {
  Expr lag = parse_expression("kappa*q^2/2 - rho*u", ParseContext().parameter("kappa").parameter("rho"));
  Bindings b;
  b.set("kappa", 2).set("q", 3).set("rho", 1).set("u", 5);
  EXPECT_EQ(evaluate(lag, b), 4.0);
  Expr with_fn = parse_expression("kappa*q^2/2 - rho(x)*u", beam_context());
  b.set("x", 0.3).define("rho", [](double, int order) { return order == 0 ? 1.0 : 0.0; });
  EXPECT_EQ(evaluate(with_fn, b), 4.0);
  EXPECT_EQ(evaluate(parse_expression("p/sqrt(1+p^2)"), Bindings().set("p", 0)), 0.0);
}

TEST(Evaluate, DomainErrorsCarrySubexpression) {
  try {
    evaluate(parse_expression("1 + 1/p"), Bindings().set("p", 0));
    FAIL() << "expected a domain error";
  } catch (const DomainError& err) {
    EXPECT_EQ(err.subexpression(), "1/p");
  }
  EXPECT_THROW(evaluate(parse_expression("sqrt(p)"), Bindings().set("p", -1)), DomainError);
  EXPECT_THROW(evaluate(parse_expression("log(p)"), Bindings().set("p", 0)), DomainError);
  EXPECT_THROW(evaluate(parse_expression("p^(1/2)"), Bindings().set("p", -1)), DomainError);
  EXPECT_NEAR(evaluate(parse_expression("p^(1/3)"), Bindings().set("p", -8)), -2.0, 1e-15);
}

TEST(Evaluate, UnboundSymbolIsAnError) {
  EXPECT_THROW(evaluate(parse_expression("p + q"), Bindings().set("p", 1)), UnboundSymbol);
  EXPECT_THROW(evaluate(func("rho", 0, var("x")), Bindings().set("x", 1)), UnboundSymbol);
}

TEST(Evaluate, DeterministicBitExact) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Expr e = random_expr(rng, 4);
    Bindings b;
    b.set("x", 0.3).set("u", -0.7).set("p", 1.1).set("q", 0.4).set("kappa", 1.3);
    b.define("rho", cos_derivative);
    try {
      const double v1 = evaluate(e, b);
      const double v2 = Program(e).evaluate(b)[0];
      EXPECT_EQ(v1, v2);
    } catch (const DomainError&) {
    }
  }
}

TEST(EqualNumeric, Examples) {
  Expr kq = var("kappa") * var("q");
  EXPECT_TRUE(exprs_equal_numeric(kq, var("q") * var("kappa"), 100, 1e-12));
  EXPECT_FALSE(exprs_equal_numeric(kq, kq + 1e-3, 100, 1e-9));
  EXPECT_THROW(exprs_equal_numeric(kq, kq, 0, 1e-9), Error);
  // Poles are rejected, not reported.
  EXPECT_TRUE(exprs_equal_numeric(1.0 / var("p"), pow(var("p"), -1), 100, 1e-12));
  // An expression defined nowhere on the sampling box exhausts the rejection budget.
  SamplingOptions opt;
  opt.ranges["p"] = {-2.0, -1.0};
  opt.max_reject = 20;
  EXPECT_THROW(exprs_equal_numeric(sqrt(var("p")), sqrt(var("p")), 5, 1e-12, opt), DomainError);
}

TEST(Properties, Linearity) {
  Rng rng(21);
  for (int i = 0; i < 30; ++i) {
    Expr e1 = random_expr(rng, 3);
    Expr e2 = random_expr(rng, 3);
    const double a = rng.uniform(-2, 2);
    const double b = rng.uniform(-2, 2);
    for (const char* v : {"x", "u", "p", "q", "kappa"}) {
      Expr lhs = partial_derivative(a * e1 + b * e2, v);
      Expr rhs = a * partial_derivative(e1, v) + b * partial_derivative(e2, v);
      EXPECT_TRUE(equal_where_defined(lhs, rhs, 1e-12, with_rho())) << to_string(e1) << " | " << to_string(e2);
    }
  }
}

TEST(Properties, Leibniz) {
  Rng rng(22);
  for (int i = 0; i < 30; ++i) {
    Expr e1 = random_expr(rng, 3);
    Expr e2 = random_expr(rng, 3);
    for (int k = 3; k <= 4; ++k) {
      Expr lhs = total_derivative(e1 * e2, k);
      Expr rhs = e1 * total_derivative(e2, k) + e2 * total_derivative(e1, k);
      EXPECT_TRUE(equal_where_defined(lhs, rhs, 1e-12, with_rho())) << to_string(e1) << " | " << to_string(e2);
    }
  }
}

TEST(Properties, ChainConsistency) {
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    Expr e = random_expr(rng, 3);
    auto f = fbvp::testing::SmoothFunction::random(rng, 0.5);
    Expr d = total_derivative(e, 3);
    Bindings base;
    base.set("kappa", 0.8).define("rho", cos_derivative);
    for (double x0 : {-0.5, 0.1, 0.6}) {
      try {
        auto along = [&](double x) { return evaluate(e, fbvp::testing::jet_bindings(f, x, base)); };
        const double fd = fbvp::testing::central_difference(along, x0, 1e-3);
        const double exact = evaluate(d, fbvp::testing::jet_bindings(f, x0, base));
        EXPECT_NEAR(exact, fd, 1e-6 * (1 + std::abs(exact))) << to_string(e);
      } catch (const DomainError&) {
      }
    }
  }
}

TEST(Properties, PrinterRoundTrip) {
  Rng rng(24);
  const ParseContext ctx = beam_context();
  for (int i = 0; i < 200; ++i) {
    Expr e = random_expr(rng, 5);
    const std::string text = to_string(e);
    Expr back = parse_expression(text, ctx);
    EXPECT_TRUE(equal_where_defined(e, back, 1e-12, with_rho())) << text;
  }
}

TEST(FunctionFromExpr, DerivativesUpToRequestedOrder) {
  NamedFunction f = function_from_expr(parse_expression("sin(2*x)"), "x", 5);
  EXPECT_NEAR(f(0.3, 0), std::sin(0.6), 1e-15);
  EXPECT_NEAR(f(0.3, 1), 2 * std::cos(0.6), 1e-15);
  EXPECT_NEAR(f(0.3, 4), 16 * std::sin(0.6), 1e-13);
  EXPECT_THROW(f(0.3, 6), Error);
}
