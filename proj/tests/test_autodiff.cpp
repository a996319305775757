#include <cmath>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "fd_check.hpp"
#include "mpf/adam.hpp"
#include "mpf/params.hpp"
#include "mpf/tape.hpp"

using namespace mpf;
using ad::Tape;
using ad::Tensor;

TEST_CASE("primitive forward values") {
  Tape t;
  SUBCASE("tanh of a zero tensor is zero") {
    Tensor x = Tensor::zeros({3});
    Tensor y = ad::tanh_op(t, x);
    for (double v : y.data) CHECK(v == 0.0);
  }
  SUBCASE("affine identity map") {
    Tensor x = Tensor::row({1.0, 2.0});
    Tensor w = Tensor::matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
    Tensor b = Tensor::zeros({2});
    Tensor y = ad::affine(t, x, w, b);
    CHECK(y.data[0] == 1.0);
    CHECK(y.data[1] == 2.0);
  }
  SUBCASE("elementwise minimum") {
    Tensor y = ad::minimum(t, Tensor::row({3.0, 1.0}), Tensor::row({2.0, 4.0}));
    CHECK(y.data[0] == 2.0);
    CHECK(y.data[1] == 1.0);
  }
  SUBCASE("softplus is stable at large inputs") {
    Tensor y = ad::softplus(t, Tensor::row({-800.0, 0.0, 800.0}));
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == doctest::Approx(std::log(2.0)));
    CHECK(y.data[2] == 800.0);
  }
  SUBCASE("clamp composite") {
    Tensor y = ad::clamp(t, Tensor::row({-25.0, 0.5, 7.0}), -20.0, 2.0);
    CHECK(y.data[0] == -20.0);
    CHECK(y.data[1] == 0.5);
    CHECK(y.data[2] == 2.0);
  }
}

TEST_CASE("backward basics") {
  SUBCASE("sum of squares") {
    Tape t;
    Tensor x = t.leaf(Tensor::row({1.0, 2.0, 3.0}));
    Tensor loss = ad::sum(t, ad::square(t, x));
    ad::GradMap g = t.backward(loss);
    const Tensor& gx = g.at(x.node);
    CHECK(gx.data[0] == doctest::Approx(2.0));
    CHECK(gx.data[1] == doctest::Approx(4.0));
    CHECK(gx.data[2] == doctest::Approx(6.0));
  }
  SUBCASE("tanh gradient at zero") {
    Tape t;
    Tensor x = t.leaf(Tensor::scalar(0.0));
    Tensor y = ad::tanh_op(t, x);
    ad::GradMap g = t.backward(y);
    CHECK(g.at(x.node).data[0] == doctest::Approx(1.0));
  }
  SUBCASE("unused leaves get zero gradients") {
    Tape t;
    Tensor x = t.leaf(Tensor::scalar(1.0));
    Tensor unused = t.leaf(Tensor::row({1.0, 2.0}));
    Tensor loss = ad::square(t, x);
    ad::GradMap g = t.backward(loss);
    CHECK(g.at(unused.node).data[0] == 0.0);
    CHECK(g.at(unused.node).data[1] == 0.0);
  }
  SUBCASE("root must be scalar") {
    Tape t;
    Tensor x = t.leaf(Tensor::row({1.0, 2.0}));
    Tensor y = ad::square(t, x);
    CHECK_THROWS_AS((void)t.backward(y), ShapeError);
  }
}

namespace {

// Builds the scalar loss for one primitive from the current leaf values.
double eval_primitive(std::size_t which, ad::Params& leaves) {
  Tape t;
  std::vector<Tensor> in = leaves.track(t, true);
  Tensor out = Tensor::scalar(0.0);
  switch (which) {
    case 0: out = ad::mean(t, ad::affine(t, in[0], in[1], in[2])); break;
    case 1: out = ad::mean(t, ad::tanh_op(t, in[0])); break;
    case 2: out = ad::mean(t, ad::exp_op(t, ad::scale(t, in[0], 0.3))); break;
    case 3: out = ad::mean(t, ad::log_op(t, ad::add_scalar(t, ad::square(t, in[0]), 1.0))); break;
    case 4: out = ad::mean(t, ad::neg(t, in[0])); break;
    case 5: out = ad::mean(t, ad::add(t, in[0], in[3])); break;
    case 6: out = ad::mean(t, ad::sub(t, in[0], in[3])); break;
    case 7: out = ad::mean(t, ad::mul(t, in[0], in[3])); break;
    case 8: out = ad::mean(t, ad::square(t, in[0])); break;
    case 9: out = ad::sum(t, ad::scale(t, in[0], 0.25)); break;
    case 10: out = ad::mean(t, ad::row_sum(t, ad::square(t, in[0]))); break;
    case 11: out = ad::mean(t, ad::minimum(t, in[0], in[3])); break;
    case 12: out = ad::mean(t, ad::concat(t, in[0], in[3])); break;
    case 13: out = ad::mean(t, ad::softplus(t, in[0])); break;
    case 14: out = ad::mean(t, ad::clamp(t, in[0], -0.4, 0.4)); break;
    default: FAIL("bad case");
  }
  return out.value();
}

}  // namespace

TEST_CASE("finite-difference agreement for every primitive") {
  Rng rng(7);
  ad::Params leaves;
  Tensor x = Tensor::zeros({4, 3});
  Tensor w = Tensor::zeros({3, 5});
  Tensor b = Tensor::zeros({5});
  Tensor y = Tensor::zeros({4, 3});
  for (Tensor* p : {&x, &w, &b, &y}) {
    for (double& v : p->data) v = rng.uniform(-1.0, 1.0);
  }
  leaves.add("x", x);
  leaves.add("w", w);
  leaves.add("b", b);
  leaves.add("y", y);

  for (std::size_t which = 0; which <= 14; ++which) {
    CAPTURE(which);
    Tape t2;
    std::vector<Tensor> tracked = leaves.track(t2, true);
    // Recompute loss on t2 to take gradients.
    ad::Params& lv = leaves;
    Tensor out = [&]() -> Tensor {
      switch (which) {
        case 0: return ad::mean(t2, ad::affine(t2, tracked[0], tracked[1], tracked[2]));
        case 1: return ad::mean(t2, ad::tanh_op(t2, tracked[0]));
        case 2: return ad::mean(t2, ad::exp_op(t2, ad::scale(t2, tracked[0], 0.3)));
        case 3:
          return ad::mean(t2, ad::log_op(t2, ad::add_scalar(t2, ad::square(t2, tracked[0]), 1.0)));
        case 4: return ad::mean(t2, ad::neg(t2, tracked[0]));
        case 5: return ad::mean(t2, ad::add(t2, tracked[0], tracked[3]));
        case 6: return ad::mean(t2, ad::sub(t2, tracked[0], tracked[3]));
        case 7: return ad::mean(t2, ad::mul(t2, tracked[0], tracked[3]));
        case 8: return ad::mean(t2, ad::square(t2, tracked[0]));
        case 9: return ad::sum(t2, ad::scale(t2, tracked[0], 0.25));
        case 10: return ad::mean(t2, ad::row_sum(t2, ad::square(t2, tracked[0])));
        case 11: return ad::mean(t2, ad::minimum(t2, tracked[0], tracked[3]));
        case 12: return ad::mean(t2, ad::concat(t2, tracked[0], tracked[3]));
        case 13: return ad::mean(t2, ad::softplus(t2, tracked[0]));
        default: return ad::mean(t2, ad::clamp(t2, tracked[0], -0.4, 0.4));
      }
    }();
    ad::GradMap grads = t2.backward(out);
    std::vector<Tensor> grad_list = lv.gather_grads(grads, tracked);
    test::FdReport report =
        test::fd_check(lv, [&] { return eval_primitive(which, lv); }, grad_list);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("backward linearity on shared leaves") {
  Rng rng(11);
  Tensor x0 = Tensor::zeros({6});
  for (double& v : x0.data) v = rng.uniform(-1.0, 1.0);
  const double a = 1.7, b = -0.6;

  auto grad_of = [&](double ka, double kb) {
    Tape t;
    Tensor x = t.leaf(x0);
    Tensor f = ad::mean(t, ad::square(t, x));
    Tensor g = ad::sum(t, ad::tanh_op(t, x));
    Tensor combo = ad::add(t, ad::scale(t, f, ka), ad::scale(t, g, kb));
    return t.backward(combo).at(x.node);
  };

  Tensor gf = grad_of(1.0, 0.0);
  Tensor gg = grad_of(0.0, 1.0);
  Tensor gc = grad_of(a, b);
  for (std::size_t i = 0; i < x0.data.size(); ++i) {
    CHECK(gc.data[i] == doctest::Approx(a * gf.data[i] + b * gg.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("deterministic gradients for identical tapes") {
  auto run = [] {
    Rng rng(3);
    Tensor x0 = Tensor::zeros({8});
    for (double& v : x0.data) v = rng.uniform(-1.0, 1.0);
    Tape t;
    Tensor x = t.leaf(x0);
    Tensor loss = ad::mean(t, ad::mul(t, ad::tanh_op(t, x), ad::exp_op(t, ad::scale(t, x, 0.5))));
    return t.backward(loss).at(x.node).data;
  };
  std::vector<double> g1 = run();
  std::vector<double> g2 = run();
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(std::memcmp(&g1[i], &g2[i], sizeof(double)) == 0);
  }
}

TEST_CASE("structured errors") {
  Tape t;
  SUBCASE("shape mismatch names the op and shapes") {
    Tensor a = Tensor::row({1.0, 2.0});
    Tensor b = Tensor::row({1.0, 2.0, 3.0});
    try {
      (void)ad::add(t, a, b);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("add") != std::string::npos);
      CHECK(msg.find("[2]") != std::string::npos);
      CHECK(msg.find("[3]") != std::string::npos);
    }
  }
  SUBCASE("affine dimension mismatch") {
    Tensor x = Tensor::row({1.0, 2.0});
    Tensor w = Tensor::matrix(3, 2, {1, 0, 0, 1, 0, 0});
    CHECK_THROWS_AS((void)ad::affine(t, x, w, Tensor::zeros({2})), ShapeError);
  }
  SUBCASE("non-finite output is a numeric error") {
    CHECK_THROWS_AS((void)ad::log_op(t, Tensor::row({-1.0})), NumericError);
    CHECK_THROWS_AS((void)ad::exp_op(t, Tensor::row({1e4})), NumericError);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged and increments t") {
    ad::Params p;
    p.add("w", Tensor::row({1.0, -2.0}));
    ad::AdamState adam(p, {});
    adam.step(p, {Tensor::zeros({2})});
    CHECK(adam.t() == 1);
    CHECK(p.at("w").data[0] == 1.0);
    CHECK(p.at("w").data[1] == -2.0);
  }
  SUBCASE("constant gradient moves parameters against its sign") {
    ad::Params p;
    p.add("w", Tensor::row({0.0, 0.0}));
    ad::AdamState adam(p, {.lr = 0.01});
    Tensor g = Tensor::row({1.0, -2.5});
    double prev0 = 0.0, prev1 = 0.0;
    for (int i = 0; i < 50; ++i) {
      adam.step(p, {g});
      CHECK(p.at("w").data[0] < prev0);
      CHECK(p.at("w").data[1] > prev1);
      prev0 = p.at("w").data[0];
      prev1 = p.at("w").data[1];
    }
  }
  SUBCASE("first step on f(x) = x^2 from x = 1") {
    ad::Params p;
    p.add("x", Tensor::scalar(1.0));
    const ad::AdamConfig cfg{.lr = 0.001};
    ad::AdamState adam(p, cfg);

    Tape t;
    Tensor x = t.leaf(p.at("x"));
    Tensor loss = ad::square(t, x);
    ad::GradMap grads = t.backward(loss);
    adam.step(p, p.gather_grads(grads, {x}));

    // Bias-corrected first step: lr * g / (|g| + eps), g = 2.
    const double expected = 1.0 - cfg.lr * 2.0 / (2.0 + cfg.eps);
    CHECK(p.at("x").value() == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("non-finite gradient aborts the step before mutating") {
    ad::Params p;
    p.add("w", Tensor::row({1.0}));
    ad::AdamState adam(p, {});
    Tensor bad = Tensor::row({std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(adam.step(p, {bad}), NumericError);
    CHECK(p.at("w").data[0] == 1.0);
    CHECK(adam.t() == 0);
  }
}

TEST_CASE("parameter container round-trips bit-exactly") {
  Rng rng(99);
  ad::Params p;
  Tensor w = Tensor::zeros({7, 3});
  for (double& v : w.data) v = rng.normal() * 1e10;  // exercise exponent range
  w.data[0] = 1e-308;
  w.data[1] = -0.0;
  p.add("layer.weight", w);
  p.add("scalar", Tensor::scalar(std::exp(1.0)));
  p.add("empty_name_ok", Tensor::row({1.5}));

  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "mpf_params_test.bin";
  ad::save_params(path, p);
  ad::Params q = ad::load_params(path);

  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.name(i) == p.name(i));
    REQUIRE(q.value(i).shape == p.value(i).shape);
    for (std::size_t j = 0; j < p.value(i).data.size(); ++j) {
      CHECK(std::memcmp(&q.value(i).data[j], &p.value(i).data[j], sizeof(double)) == 0);
    }
  }
  std::filesystem::remove(path);

  SUBCASE("bad magic is rejected") {
    const std::filesystem::path bad = std::filesystem::temp_directory_path() / "mpf_bad.bin";
    std::FILE* f = std::fopen(bad.string().c_str(), "wb");
    std::fwrite("NOPE!", 1, 5, f);
    std::fclose(f);
    CHECK_THROWS_AS((void)ad::load_params(bad), IoError);
    std::filesystem::remove(bad);
  }
}
