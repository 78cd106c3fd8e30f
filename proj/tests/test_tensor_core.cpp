#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nrel/grad_check.hpp"
#include "nrel/ops.hpp"
#include "oracles.hpp"

using namespace nrel;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng) { return uniform_tensor<double>(std::move(s), -1.0, 1.0, rng); }

// grad_check over a ParamSet whose entries are the op inputs; the loss is a
// fixed random projection of the op output so every output coordinate matters.
template <typename F>
GradCheckReport check_op(ParamSet<double>& ps, F op, Rng& rng) {
  Tape<double> probe(false);
  ParamBinder<double> pb(probe, ps);
  const Shape out_shape = op(pb).shape();
  auto proj = random_tensor(out_shape, rng);
  LossFn f = [&](Tape<double>& t, ParamBinder<double>& p) {
    return ad::sum_all(ad::mul(op(p), t.constant(proj)));
  };
  GradCheckOptions opt;
  opt.tolerance = 1e-6;
  return grad_check(f, ps, opt);
}

}  // namespace

TEST_CASE("tensor rejects zero extents and mismatched value counts") {
  CHECK_THROWS_AS(Tensor<double>({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor<double> t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
}

TEST_CASE("matmul small cases") {
  Tape<double> t;
  auto eye = t.constant(Tensor<double>::matrix({{1, 0}, {0, 1}}));
  auto m = t.constant(Tensor<double>::matrix({{1, 2}, {3, 4}}));
  CHECK(ad::matmul(eye, m).value() == Tensor<double>::matrix({{1, 2}, {3, 4}}));
  auto a = t.constant(Tensor<double>::matrix({{1, 2}}));
  auto b = t.constant(Tensor<double>::matrix({{3}, {4}}));
  CHECK(ad::matmul(a, b).value() == Tensor<double>::matrix({{11}}));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> t;
  auto a = t.constant(Tensor<double>({2, 3}));
  auto b = t.constant(Tensor<double>({2, 3}));
  try {
    ad::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2,3)") != std::string::npos);
  }
}

TEST_CASE("matmul matches a loop oracle and finite differences") {
  Rng rng(11);
  ParamSet<double> ps;
  ps.add("a", random_tensor({3, 4}, rng));
  ps.add("b", random_tensor({4, 2}, rng));
  Tape<double> t(false);
  ParamBinder<double> p(t, ps);
  const auto got = ad::matmul(p("a"), p("b")).value();
  const auto want = oracle::matmul(oracle::to_mat(ps.get("a")), oracle::to_mat(ps.get("b")));
  CHECK(oracle::max_abs_diff(want, got) < 1e-14);
  auto rep = check_op(ps, [](ParamBinder<double>& q) { return ad::matmul(q("a"), q("b")); }, rng);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("matmul_nt equals matmul with an explicit transpose") {
  Rng rng(12);
  for (std::size_t m : {1, 3, 4, 9}) {
    Tape<double> t;
    auto a = t.constant(random_tensor({m, 5}, rng));
    auto b = random_tensor({6, 5}, rng);
    Tensor<double> bt({5, 6});
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c) bt(c, r) = b(r, c);
    const auto x = ad::matmul_nt(a, t.constant(b)).value();
    const auto y = ad::matmul(a, t.constant(bt)).value();
    CHECK(max_abs_diff(x, y) < 1e-14);
  }
}

TEST_CASE("elementwise kinds") {
  Tape<double> t;
  auto z = t.constant(Tensor<double>::vector({0.0}));
  CHECK(ad::elementwise<double>(ad::Elementwise::sigmoid, {z}).value()[0] == 0.5);
  CHECK(ad::elementwise<double>(ad::Elementwise::tanh, {z}).value()[0] == 0.0);
  auto a = t.constant(Tensor<double>::vector({2, 3}));
  auto b = t.constant(Tensor<double>::vector({4, 5}));
  CHECK(ad::elementwise<double>(ad::Elementwise::mul, {a, b}).value() == Tensor<double>::vector({8, 15}));
  CHECK(ad::elementwise<double>(ad::Elementwise::add, {a, b}).value() == Tensor<double>::vector({6, 8}));
  CHECK_THROWS_AS(ad::add(a, t.constant(Tensor<double>::vector({1, 2, 3}))), ShapeError);
}

TEST_CASE("every primitive passes a finite-difference check") {
  Rng rng(13);
  ParamSet<double> ps;
  ps.add("a", random_tensor({3, 4}, rng));
  ps.add("b", random_tensor({3, 4}, rng));
  ps.add("w", random_tensor({5, 4}, rng));
  ps.add("v", random_tensor({4}, rng));
  using B = ParamBinder<double>;
  const std::vector<std::pair<const char*, std::function<Var<double>(B&)>>> ops{
      {"add", [](B& p) { return ad::add(p("a"), p("b")); }},
      {"mul", [](B& p) { return ad::mul(p("a"), p("b")); }},
      {"sigmoid", [](B& p) { return ad::sigmoid(p("a")); }},
      {"tanh", [](B& p) { return ad::tanh(p("a")); }},
      {"matmul_nt", [](B& p) { return ad::matmul_nt(p("a"), p("w")); }},
      {"add_bias", [](B& p) { return ad::add_bias(p("a"), p("v")); }},
      {"concat0", [](B& p) { return ad::concat<double>({p("a"), p("b")}, 0); }},
      {"concat1", [](B& p) { return ad::concat<double>({p("a"), p("b")}, 1); }},
      {"gather_rows", [](B& p) { return ad::gather_rows(p("a"), {2, 0, 2}); }},
      {"row", [](B& p) { return ad::row(p("a"), 1); }},
      {"slice_cols", [](B& p) { return ad::slice_cols(p("a"), 1, 2); }},
      {"mean_rows", [](B& p) { return ad::mean_rows(p("a"), {0, 2}); }},
      {"scale", [](B& p) { return ad::scale(p("a"), 2.5); }},
      {"reshape", [](B& p) { return ad::reshape(p("a"), Shape{12}); }},
      {"sum_vectors", [](B& p) { return ad::sum_vectors(p.tape(), {p("a"), p("b"), p("a")}, Shape{3, 4}); }},
  };
  for (const auto& [name, op] : ops) {
    CAPTURE(name);
    auto rep = check_op(ps, op, rng);
    CHECK(rep.passed);
  }
}

TEST_CASE("segment_sum forward and gradient") {
  Rng rng(14);
  ParamSet<double> ps;
  ps.add("x", random_tensor({4, 3}, rng));
  auto seg = std::make_shared<kernels::Segments>(kernels::Segments::from_lists({{0, 2}, {}, {1, 2, 3}}, 4));
  Tape<double> t(false);
  ParamBinder<double> p(t, ps);
  const auto y = ad::segment_sum(p("x"), seg).value();
  const auto& x = ps.get("x");
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(y(0, c) == x(0, c) + x(2, c));
    CHECK(y(1, c) == 0.0);
    CHECK(y(2, c) == (x(1, c) + x(2, c)) + x(3, c));
  }
  auto rep = check_op(ps, [seg](ParamBinder<double>& q) { return ad::segment_sum(q("x"), seg); }, rng);
  CHECK(rep.passed);
}

TEST_CASE("concat basics") {
  Tape<double> t;
  auto a = t.leaf(Tensor<double>::vector({1}));
  auto b = t.leaf(Tensor<double>::vector({2, 3}));
  auto ab = ad::concat<double>({a, b}, 0);
  CHECK(ab.value() == Tensor<double>::vector({1, 2, 3}));
  CHECK(ad::concat<double>({b}, 0).value() == b.value());
  t.backward(ad::sum_all(ab));
  CHECK(t.grad_or_zero(a) == Tensor<double>::vector({1}));
  CHECK(t.grad_or_zero(b) == Tensor<double>::vector({1, 1}));
  CHECK_THROWS_AS(ad::concat<double>({t.constant(Tensor<double>({2, 2})), t.constant(Tensor<double>({3, 3}))}, 1),
                  ShapeError);
}

TEST_CASE("sum_vectors conventions") {
  Tape<double> t;
  CHECK(ad::sum_vectors<double>(t, {}, Shape{3}).value() == Tensor<double>({3}));
  auto z = t.constant(Tensor<double>({2}));
  auto v = t.constant(Tensor<double>::vector({1.5, -2}));
  CHECK(ad::sum_vectors<double>(t, {z, v}, Shape{2}).value() == v.value());
  auto a = t.constant(Tensor<double>::vector({1, 1}));
  auto b = t.constant(Tensor<double>::vector({2, 2}));
  CHECK(ad::sum_vectors<double>(t, {a, b}, Shape{2}).value() == Tensor<double>::vector({3, 3}));
  CHECK_THROWS_AS(ad::sum_vectors<double>(t, {a}, Shape{3}), ShapeError);
}

TEST_CASE("sum_vectors follows list order") {
  Rng rng(15);
  Tape<double> t;
  std::vector<Var<double>> vs;
  std::vector<double> raw;
  for (int i = 0; i < 5; ++i) {
    raw.push_back(rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-8, 8)));
    vs.push_back(t.constant(Tensor<double>::vector({raw.back()})));
  }
  double want = 0;
  for (double r : raw) want += r;
  CHECK(ad::sum_vectors<double>(t, vs, Shape{1}).value()[0] == want);

  std::vector<Var<double>> rev(vs.rbegin(), vs.rend());
  const double a = ad::sum_vectors<double>(t, vs, Shape{1}).value()[0];
  const double b = ad::sum_vectors<double>(t, rev, Shape{1}).value()[0];
  CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
}

TEST_CASE("softmax cross-entropy") {
  Tape<double> t;
  auto out = ad::softmax_cross_entropy(t.leaf(Tensor<double>::vector({0, 0})), 0);
  CHECK(out.loss.value()[0] == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(out.probs[0] == 0.5);
  CHECK(out.probs[1] == 0.5);

  auto big = ad::softmax_cross_entropy(t.leaf(Tensor<double>::vector({1000, 0})), 0);
  CHECK(big.loss.value()[0] < 1e-300);
  CHECK(std::isfinite(big.probs[1]));

  Rng rng(16);
  const std::vector<double> z{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                              rng.uniform(-2, 2)};
  auto r = ad::softmax_cross_entropy(t.leaf(Tensor<double>({5}, z)), 3);
  double denom = 0;
  for (double v : z) denom += std::exp(v);
  CHECK(std::abs(r.loss.value()[0] + std::log(std::exp(z[3]) / denom)) < 1e-12);
  double s = 0;
  for (double p : r.probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    s += p;
  }
  CHECK(std::abs(s - 1.0) < 1e-12);

  CHECK_THROWS_AS(ad::softmax_cross_entropy(t.leaf(Tensor<double>::vector({0, 0})), 2), std::out_of_range);
}

TEST_CASE("softmax cross-entropy gradient") {
  Rng rng(17);
  ParamSet<double> ps;
  ps.add("z", random_tensor({1, 5}, rng));
  LossFn f = [](Tape<double>&, ParamBinder<double>& p) { return ad::softmax_cross_entropy(p("z"), 2).loss; };
  CHECK(grad_check(f, ps).passed);
}

TEST_CASE("dropout") {
  Rng rng(18);
  Tape<double> t;
  auto x = t.constant(random_tensor({100}, rng));
  CHECK(ad::dropout(x, 0.0, rng, true).value() == x.value());
  CHECK(ad::dropout(x, 0.3, rng, false).value() == x.value());

  const std::size_t n = 100000;
  auto ones = t.constant(Tensor<double>({n}, 1.0));
  const auto y = ad::dropout(ones, 0.3, rng, true).value();
  std::size_t kept = 0;
  double mean = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      ++kept;
      CHECK(v == doctest::Approx(1.0 / 0.7).epsilon(1e-15));
    }
    mean += v / n;
  }
  CHECK(std::abs(static_cast<double>(kept) / n - 0.7) < 0.01);
  CHECK(std::abs(mean - 1.0) < 0.02);
}

TEST_CASE("grad_check on x squared") {
  ParamSet<double> ps;
  ps.add("x", Tensor<double>::vector({3.0}));
  LossFn f = [](Tape<double>&, ParamBinder<double>& p) { return ad::sum_all(ad::mul(p("x"), p("x"))); };
  auto rep = grad_check(f, ps);
  CHECK(std::abs(rep.worst_analytic - 6.0) < 1e-8);
  CHECK(std::abs(rep.worst_numeric - 6.0) < 1e-8);
  CHECK(rep.passed);
}

TEST_CASE("grad_check reports a wrong gradient") {
  ParamSet<double> ps;
  ps.add("x", Tensor<double>::vector({0.7, -0.2}));
  // Forward is 2x but the backward rule claims 3.
  LossFn f = [](Tape<double>&, ParamBinder<double>& p) {
    auto x = p("x");
    auto& tape = p.tape();
    Tensor<double> out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2 * x.value()[i];
    auto y = tape.record(std::move(out), {x}, [x](Tape<double>& t, std::size_t self) {
      const auto& g = *t.grad(self);
      auto& gx = t.grad_buffer(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 3 * g[i];
    }, "bad_double");
    return ad::sum_all(y);
  };
  auto rep = grad_check(f, ps);
  CHECK_FALSE(rep.passed);
  CHECK(rep.worst_param == "x");
}

TEST_CASE("non-finite values are hard errors") {
  Tape<double> t;
  auto x = t.leaf(Tensor<double>::vector({1e308}));
  CHECK_THROWS_AS(ad::scale(x, 10.0), NumericError);
  ParamSet<double> ps;
  ps.add("x", Tensor<double>::vector({1e308}));
  LossFn f = [](Tape<double>&, ParamBinder<double>& p) { return ad::sum_all(ad::scale(p("x"), 10.0)); };
  CHECK_THROWS_AS(grad_check(f, ps), NumericError);
}

TEST_CASE("backward visits nodes in reverse forward order") {
  Rng rng(19);
  Tape<double> t;
  auto a = t.leaf(random_tensor({2, 3}, rng));
  auto b = t.leaf(random_tensor({3, 2}, rng));
  auto c = ad::tanh(ad::matmul(a, b));
  auto d = ad::sigmoid(ad::add(c, c));
  auto loss = ad::sum_all(ad::mul(d, c));
  std::vector<std::size_t> trace;
  t.set_trace(&trace);
  t.backward(loss);
  CHECK(trace.size() >= 5);
  CHECK(std::is_sorted(trace.rbegin(), trace.rend()));
  CHECK(std::adjacent_find(trace.begin(), trace.end()) == trace.end());
}

TEST_CASE("tensors off the loss path get exactly zero gradient") {
  Tape<double> t;
  auto a = t.leaf(Tensor<double>::vector({1, 2}));
  auto off = t.leaf(Tensor<double>::vector({3, 4}));
  auto unused = ad::mul(off, off);
  (void)unused;
  t.backward(ad::sum_all(ad::mul(a, a)));
  CHECK(t.grad(off.id) == nullptr);
  CHECK(t.grad_or_zero(off) == Tensor<double>({2}));
  CHECK(t.grad_or_zero(a) == Tensor<double>::vector({2, 4}));
}

TEST_CASE("non-recording tape computes values without gradients") {
  Tape<double> t(false);
  auto a = t.leaf(Tensor<double>::vector({1, 2}));
  auto loss = ad::sum_all(ad::mul(a, a));
  CHECK(loss.value()[0] == 5.0);
  CHECK_FALSE(t.requires_grad(loss.id));
  t.backward(loss);
  CHECK(t.grad(a.id) == nullptr);
}

TEST_CASE("forward and backward are bitwise repeatable") {
  auto run = [] {
    Rng rng(20);
    Tape<double> t;
    auto a = t.leaf(random_tensor({4, 5}, rng));
    auto w = t.leaf(random_tensor({3, 5}, rng));
    auto y = ad::dropout(ad::tanh(ad::matmul_nt(a, w)), 0.3, rng, true);
    auto loss = ad::softmax_cross_entropy(ad::reshape(ad::row(y, 1), Shape{3}), 1).loss;
    t.backward(loss);
    return std::make_pair(t.grad_or_zero(a), t.grad_or_zero(w));
  };
  const auto r1 = run();
  const auto r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

TEST_CASE("rng streams") {
  Rng a(42), b(42), c(43);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 100; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  Rng d(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(d.below(7) < 7);
  }
  CHECK(Rng::algorithm == "mt19937_64");
}

TEST_CASE("float tape runs the same ops") {
  Tape<float> t;
  auto a = t.leaf(Tensor<float>::matrix({{1, 2}}));
  auto b = t.leaf(Tensor<float>::matrix({{3}, {4}}));
  auto y = ad::matmul(a, b);
  CHECK(y.value()[0] == 11.0f);
  t.backward(y);
  CHECK(t.grad_or_zero(a) == Tensor<float>::matrix({{3, 4}}));
}
