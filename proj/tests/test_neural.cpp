#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"
#include "mpj/neural/adam.hpp"
#include "mpj/neural/arch.hpp"
#include "mpj/neural/checkpoint.hpp"
#include "mpj/neural/network.hpp"
#include "mpj/neural/train.hpp"
#include "test_support.hpp"

using namespace mpj;
using namespace mpj::neural;

namespace {

void jitter(ModelParams& p, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& t : p.tensors) {
    if (!t.trainable) continue;
    for (double& v : t.values) v += u(rng);
  }
}

const Tensor& find(const ModelParams& p, const std::string& name) {
  for (const auto& t : p.tensors) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no tensor " + name);
}

double sigm(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Plain-loop reference evaluation, written against the documented tensor
// layouts only.
std::vector<double> oracle_dense(const std::vector<double>& x, const Tensor& k, const Tensor& b, Activation act) {
  const std::size_t in = k.shape[0], out = k.shape[1];
  std::vector<double> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    double s = b.values[o];
    for (std::size_t i = 0; i < in; ++i) s += x[i] * k.values[i * out + o];
    switch (act) {
      case Activation::Linear: break;
      case Activation::Relu: s = std::max(s, 0.0); break;
      case Activation::Sigmoid: s = sigm(s); break;
      case Activation::Tanh: s = std::tanh(s); break;
    }
    y[o] = s;
  }
  return y;
}

std::vector<double> oracle_lstm(const std::vector<double>& x, std::size_t steps, const Tensor& k, const Tensor& r,
                                const Tensor& b) {
  const std::size_t f = k.shape[0], h = r.shape[0];
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> z(4 * h);
    for (std::size_t g = 0; g < 4 * h; ++g) {
      double s = b.values[g];
      for (std::size_t j = 0; j < f; ++j) s += x[t * f + j] * k.values[j * 4 * h + g];
      for (std::size_t j = 0; j < h; ++j) s += hs[j] * r.values[j * 4 * h + g];
      z[g] = s;
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double ig = sigm(z[u]), fg = sigm(z[h + u]), cg = std::tanh(z[2 * h + u]), og = sigm(z[3 * h + u]);
      cs[u] = fg * cs[u] + ig * cg;
      hs[u] = og * std::tanh(cs[u]);
    }
  }
  return hs;
}

struct Volume {
  std::size_t d, y, x, c;
  std::vector<double> v;
  double& at(std::size_t a, std::size_t b, std::size_t e, std::size_t ch) { return v[((a * y + b) * x + e) * c + ch]; }
};

Volume oracle_conv(Volume in, const Tensor& k, const Tensor& b, Activation act) {
  const std::size_t kd = k.shape[0], kh = k.shape[1], kw = k.shape[2], cin = k.shape[3], cout = k.shape[4];
  Volume out{in.d - kd + 1, in.y - kh + 1, in.x - kw + 1, cout, {}};
  out.v.assign(out.d * out.y * out.x * cout, 0.0);
  for (std::size_t a = 0; a < out.d; ++a)
    for (std::size_t yy = 0; yy < out.y; ++yy)
      for (std::size_t xx = 0; xx < out.x; ++xx)
        for (std::size_t f = 0; f < cout; ++f) {
          double s = b.values[f];
          for (std::size_t p = 0; p < kd; ++p)
            for (std::size_t q = 0; q < kh; ++q)
              for (std::size_t r = 0; r < kw; ++r)
                for (std::size_t c = 0; c < cin; ++c)
                  s += in.at(a + p, yy + q, xx + r, c) * k.values[(((p * kh + q) * kw + r) * cin + c) * cout + f];
          out.at(a, yy, xx, f) = act == Activation::Relu ? std::max(s, 0.0) : s;
        }
  return out;
}

Volume oracle_pool(Volume in, std::size_t pd, std::size_t py, std::size_t px) {
  Volume out{in.d / pd, in.y / py, in.x / px, in.c, {}};
  out.v.assign(out.d * out.y * out.x * out.c, 0.0);
  for (std::size_t a = 0; a < out.d; ++a)
    for (std::size_t yy = 0; yy < out.y; ++yy)
      for (std::size_t xx = 0; xx < out.x; ++xx)
        for (std::size_t c = 0; c < in.c; ++c) {
          double best = -1e300;
          for (std::size_t p = 0; p < pd; ++p)
            for (std::size_t q = 0; q < py; ++q)
              for (std::size_t r = 0; r < px; ++r) best = std::max(best, in.at(a * pd + p, yy * py + q, xx * px + r, c));
          out.at(a, yy, xx, c) = best;
        }
  return out;
}

Volume oracle_bn_inference(Volume in, const Tensor& gamma, const Tensor& beta, const Tensor& mean, const Tensor& var) {
  for (std::size_t i = 0; i < in.v.size(); ++i) {
    const std::size_t c = i % in.c;
    in.v[i] = gamma.values[c] * (in.v[i] - mean.values[c]) / std::sqrt(var.values[c] + 1e-3) + beta.values[c];
  }
  return in;
}

}  // namespace

TEST_CASE("CNN shape trace on 10x100x100x1") {
  const auto trace = shape_trace(cnn_arch(10, {100, 100}));
  const std::vector<std::string> expected = {"10x100x100x1", "9x99x99x5", "9x49x49x5", "9x49x49x5",
                                             "8x48x48x10",   "8x24x24x10", "8x24x24x10", "7x23x23x20",
                                             "7x11x11x20",   "7x11x11x20", "7x11x11x2",  "1694",
                                             "80",           "20000"};
  REQUIRE(trace.size() == expected.size());
  for (std::size_t i = 0; i < trace.size(); ++i) CHECK(format_shape(trace[i]) == expected[i]);
}

TEST_CASE("shape errors") {
  auto a = cnn_arch(2, {100, 100});
  CHECK_THROWS_AS(shape_trace(a), std::invalid_argument);
  auto b = rnn_arch(10, {4, 4});
  b.layers.back().units = 7;
  CHECK_THROWS_AS(shape_trace(b), std::invalid_argument);
  const auto r = rnn_arch(3, {2, 2});
  CHECK_THROWS_AS(forward(r, zero_params(r), Eigen::MatrixXd::Zero(11, 1)), std::invalid_argument);
}

TEST_CASE("parameter counts") {
  ArchSpec fc;
  fc.kind = ModelKind::Rnn;
  fc.q = 1;
  fc.grid = {400, 1};
  fc.horizon = 1;
  fc.layers = {{LayerKind::Flatten}, {LayerKind::Dense, 200}, {LayerKind::Dense, 400}};
  CHECK(param_count(fc) == 400 * 200 + 200 + 200 * 400 + 400);

  ArchSpec conv;
  conv.kind = ModelKind::Cnn;
  conv.q = 2;
  conv.grid = {2, 2};
  conv.horizon = 1;
  conv.layers = {{LayerKind::Conv3D, 5, {2, 2, 2}}, {LayerKind::Flatten}, {LayerKind::Dense, 4}};
  CHECK(param_count(conv) == 45 + 5 * 4 + 4);

  const auto rnn = rnn_arch(10, {100, 100});
  const auto cnn = cnn_arch(10, {100, 100});
  CHECK(param_count(rnn) == 18357880);
  CHECK(param_count(cnn) == 1757787);
  CHECK(static_cast<double>(param_count(rnn)) / static_cast<double>(param_count(cnn)) > 4.0);
  CHECK(zero_params(cnn).parameter_count() == param_count(cnn));
}

TEST_CASE("zero RNN outputs zero") {
  const auto a = rnn_arch(3, {2, 2});
  const auto y = forward(a, zero_params(a), test::random_batch(12, 3, 1));
  CHECK(y.rows() == 8);
  CHECK(y.isZero(0.0));
}

TEST_CASE("forward matches the loop oracle") {
  SUBCASE("RNN, q=3, 4x4 grid") {
    const auto a = rnn_arch(3, {4, 4});
    auto p = init_params(a, 11);
    jitter(p, 12, 0.05);
    const Eigen::MatrixXd x = test::random_batch(48, 2, 13);
    const Eigen::MatrixXd y = forward(a, p, x);
    for (Eigen::Index s = 0; s < 2; ++s) {
      std::vector<double> xs(x.col(s).data(), x.col(s).data() + 48);
      auto h = oracle_lstm(xs, 3, find(p, "LSTM_0.kernel"), find(p, "LSTM_0.recurrent_kernel"), find(p, "LSTM_0.bias"));
      h = oracle_dense(h, find(p, "Dense_1.kernel"), find(p, "Dense_1.bias"), Activation::Relu);
      h = oracle_dense(h, find(p, "Dense_2.kernel"), find(p, "Dense_2.bias"), Activation::Relu);
      h = oracle_dense(h, find(p, "Dense_3.kernel"), find(p, "Dense_3.bias"), Activation::Linear);
      for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(y(static_cast<Eigen::Index>(i), s) - h[i]) <= 1e-12);
    }
  }
  SUBCASE("convolutional chain with pooling and batch norm in inference mode") {
    ArchSpec a;
    a.kind = ModelKind::Cnn;
    a.q = 3;
    a.grid = {5, 5};
    a.scaled_io = true;
    a.layers = {{LayerKind::Conv3D, 3, {2, 2, 2}, Activation::Relu},
                {LayerKind::MaxPool3D, 0, {1, 2, 2}},
                {LayerKind::BatchNorm},
                {LayerKind::Conv3D, 2, {1, 1, 1}, Activation::Relu},
                {LayerKind::Flatten},
                {LayerKind::Dense, 50, {1, 1, 1}, Activation::Sigmoid}};
    auto p = init_params(a, 21);
    jitter(p, 22);
    for (auto& t : p.tensors) {
      if (t.name.ends_with("moving_mean")) t.values = {0.1, -0.2, 0.05};
      if (t.name.ends_with("moving_variance")) t.values = {0.5, 2.0, 1.5};
    }
    const Eigen::MatrixXd x = test::random_batch(75, 3, 23, 0.0, 1.0);
    const Eigen::MatrixXd y = forward(a, p, x);
    for (Eigen::Index s = 0; s < 3; ++s) {
      Volume v{3, 5, 5, 1, std::vector<double>(x.col(s).data(), x.col(s).data() + 75)};
      v = oracle_conv(v, find(p, "Conv3D_0.kernel"), find(p, "Conv3D_0.bias"), Activation::Relu);
      v = oracle_pool(v, 1, 2, 2);
      v = oracle_bn_inference(v, find(p, "BatchNorm_2.gamma"), find(p, "BatchNorm_2.beta"),
                              find(p, "BatchNorm_2.moving_mean"), find(p, "BatchNorm_2.moving_variance"));
      v = oracle_conv(v, find(p, "Conv3D_3.kernel"), find(p, "Conv3D_3.bias"), Activation::Relu);
      const auto out = oracle_dense(v.v, find(p, "Dense_5.kernel"), find(p, "Dense_5.bias"), Activation::Sigmoid);
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(y(static_cast<Eigen::Index>(i), s) - out[i]) <= 1e-12);
    }
  }
}

TEST_CASE("batch norm uses batch statistics in training and moving ones in inference") {
  ArchSpec a = test::single_layer_arch(LayerKind::BatchNorm);
  auto p = init_params(a, 3);
  const Eigen::MatrixXd x = test::random_batch(48, 4, 4);
  Network net(a);
  const Eigen::MatrixXd train = net.forward(p, x, Phase::Training);
  const Eigen::MatrixXd infer = net.forward(p, x, Phase::Inference);
  CHECK((train - infer).norm() > 1e-6);

  // One training batch folded into the moving statistics with momentum 0.99.
  ModelParams q = p;
  Network n2(a);
  n2.forward(q, x, Phase::Training);
  n2.commit_running_stats(q);
  const auto& mean = find(q, "BatchNorm_1.moving_mean");
  const auto& var = find(q, "BatchNorm_1.moving_variance");
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  std::size_t count = 0;
  for (Eigen::Index s = 0; s < 4; ++s) {
    Volume v{3, 4, 4, 1, std::vector<double>(x.col(s).data(), x.col(s).data() + 48)};
    v = oracle_conv(v, find(p, "Conv3D_0.kernel"), find(p, "Conv3D_0.bias"), Activation::Linear);
    for (double& e : v.v) e = std::tanh(e);
    for (std::size_t i = 0; i < v.v.size(); ++i) {
      sum[i % 3] += v.v[i];
      if (i % 3 == 0) ++count;
    }
    for (std::size_t i = 0; i < v.v.size(); ++i) sq[i % 3] += v.v[i] * v.v[i];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double mu = sum[c] / static_cast<double>(count);
    const double var_b = sq[c] / static_cast<double>(count) - mu * mu;
    CHECK(mean.values[c] == doctest::Approx(0.01 * mu).epsilon(1e-10));
    CHECK(var.values[c] == doctest::Approx(0.99 + 0.01 * var_b).epsilon(1e-10));
  }
}

TEST_CASE("gradients agree with central differences") {
  for (auto kind : {LayerKind::Dense, LayerKind::Lstm, LayerKind::Conv3D, LayerKind::MaxPool3D, LayerKind::BatchNorm}) {
    CAPTURE(to_string(kind));
    const ArchSpec a = test::single_layer_arch(kind);
    auto p = init_params(a, 31);
    jitter(p, 32);
    const Eigen::MatrixXd x = test::random_batch(static_cast<Eigen::Index>(a.input_size()), 4, 33);
    const Eigen::MatrixXd t = test::random_batch(static_cast<Eigen::Index>(a.output_size()), 4, 34);
    for (const auto& e : test::gradient_check(a, p, x, t)) {
      CAPTURE(e.name);
      CHECK(e.relative <= 1e-5);
    }
  }
  SUBCASE("full RNN at toy size") {
    const auto a = rnn_arch(3, {2, 2});
    auto p = init_params(a, 41);
    jitter(p, 42, 0.02);
    const Eigen::MatrixXd x = test::random_batch(12, 3, 43);
    const Eigen::MatrixXd t = test::random_batch(8, 3, 44);
    for (const auto& e : test::gradient_check(a, p, x, t, 40)) {
      CAPTURE(e.name);
      CHECK(e.relative <= 1e-5);
    }
  }
  SUBCASE("full CNN at toy size") {
    const auto a = cnn_arch(4, {16, 16});
    auto p = init_params(a, 51);
    jitter(p, 52, 0.05);
    const Eigen::MatrixXd x = test::random_batch(4 * 256, 3, 53, 0.0, 1.0);
    const Eigen::MatrixXd t = test::random_batch(512, 3, 54, 0.0, 1.0);
    for (const auto& e : test::gradient_check(a, p, x, t, 40)) {
      CAPTURE(e.name);
      CHECK(e.relative <= 1e-5);
    }
  }
}

TEST_CASE("output-layer gradients") {
  const auto a = rnn_arch(3, {2, 2});
  auto p = init_params(a, 61);
  const Eigen::MatrixXd x = test::random_batch(12, 2, 62);
  Network net(a);
  const Eigen::MatrixXd y = net.forward(p, x, Phase::Training);
  const std::size_t kernel = p.tensors.size() - 2, bias = p.tensors.size() - 1;

  SUBCASE("zero residual") {
    const auto g = backward(a, p, x, y);
    CHECK(g.loss == 0.0);
    for (double v : g.grads.tensors[kernel]) CHECK(v == 0.0);
    for (double v : g.grads.tensors[bias]) CHECK(v == 0.0);
  }
  SUBCASE("doubling the residual doubles head gradients") {
    const Eigen::MatrixXd t1 = test::random_batch(8, 2, 63);
    const Eigen::MatrixXd t2 = y - 2.0 * (y - t1);
    const auto g1 = backward(a, p, x, t1);
    const auto g2 = backward(a, p, x, t2);
    for (std::size_t ti : {kernel, bias}) {
      for (std::size_t k = 0; k < g1.grads.tensors[ti].size(); ++k) {
        CHECK(std::abs(g2.grads.tensors[ti][k] - 2.0 * g1.grads.tensors[ti][k]) <=
              1e-12 * (1.0 + std::abs(g1.grads.tensors[ti][k])));
      }
    }
  }
}

TEST_CASE("adam") {
  ModelParams p;
  p.tensors.push_back({"theta", {1}, true, {1.0}});
  AdamConfig cfg;
  SUBCASE("scalar trajectory on f = theta^2") {
    // Independent scalar rollout of bias-corrected Adam, lr 1e-3.
    const double expected[10] = {0.999000000005,     0.9980000262138343, 0.9970000960651408, 0.9960002269257634,
                                 0.995000436052392,  0.9940007405541528, 0.9930011573564278, 0.9920017031661642,
                                 0.9910023944389119, 0.9900032473478027};
    AdamState s = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    for (std::size_t t = 1; t <= 10; ++t) {
      g.tensors[0][0] = 2.0 * p.tensors[0].values[0];
      adam_step(p, g, s, t, cfg);
      CHECK(p.tensors[0].values[0] == doctest::Approx(expected[t - 1]).epsilon(1e-15));
    }
  }
  SUBCASE("first step has magnitude close to the learning rate") {
    for (double grad : {1e-3, 0.5, -7.0, 1e4}) {
      ModelParams q = p;
      AdamState s = AdamState::zeros_like(q);
      Gradients g = Gradients::zeros_like(q);
      g.tensors[0][0] = grad;
      adam_step(q, g, s, 1, cfg);
      const double step = 1.0 - q.tensors[0].values[0];
      CHECK(std::abs(std::abs(step) - cfg.learning_rate) <= 1e-7);
      CHECK(std::signbit(step) == std::signbit(grad));
    }
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    AdamState s = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    adam_step(p, g, s, 1, cfg);
    CHECK(p.tensors[0].values[0] == 1.0);
  }
  SUBCASE("frozen tensors are skipped") {
    p.tensors[0].trainable = false;
    AdamState s = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    g.tensors[0][0] = 3.0;
    adam_step(p, g, s, 1, cfg);
    CHECK(p.tensors[0].values[0] == 1.0);
  }
  SUBCASE("errors") {
    AdamState s = AdamState::zeros_like(p);
    Gradients g = Gradients::zeros_like(p);
    CHECK_THROWS_AS(adam_step(p, g, s, 0, cfg), std::invalid_argument);
    g.tensors[0][0] = std::nan("");
    CHECK_THROWS_AS(adam_step(p, g, s, 1, cfg), NumericOverflowError);
  }
}

TEST_CASE("early stopping rule") {
  SUBCASE("strictly increasing validation loss") {
    EarlyStopping es(10);
    std::size_t stopped = 0;
    for (std::size_t e = 1; e <= 50; ++e) {
      if (es.observe(e, static_cast<double>(e))) {
        stopped = e;
        break;
      }
    }
    CHECK(stopped == 11);
    CHECK(es.best_epoch() == 1);
  }
  SUBCASE("improvement resets the wait") {
    EarlyStopping es(2);
    CHECK_FALSE(es.observe(1, 5.0));
    CHECK_FALSE(es.observe(2, 6.0));
    CHECK_FALSE(es.observe(3, 4.0));
    CHECK_FALSE(es.observe(4, 4.0));
    CHECK(es.observe(5, 4.5));
    CHECK(es.best_epoch() == 3);
  }
  CHECK_THROWS_AS(EarlyStopping(0), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
  test::TempDir dir;
  const auto a = cnn_arch(4, {16, 16});
  auto p = init_params(a, 71);
  jitter(p, 72);
  write_checkpoint(dir.path() / "m.mpjn", a, p);
  const auto cp = read_checkpoint(dir.path() / "m.mpjn");
  CHECK(cp.arch == a);
  CHECK(cp.params == p);
  write_checkpoint(dir.path() / "n.mpjn", cp.arch, cp.params);
  CHECK(io::read_file(dir.path() / "m.mpjn") == io::read_file(dir.path() / "n.mpjn"));

  auto bytes = io::read_file(dir.path() / "m.mpjn");
  bytes.pop_back();
  io::write_file_atomic(dir.path() / "short.mpjn", bytes);
  CHECK_THROWS_AS(read_checkpoint(dir.path() / "short.mpjn"), CorruptFileError);
  bytes = io::read_file(dir.path() / "m.mpjn");
  bytes[3] = 'F';
  io::write_file_atomic(dir.path() / "magic.mpjn", bytes);
  CHECK_THROWS_AS(read_checkpoint(dir.path() / "magic.mpjn"), FormatError);

  ModelParams wrong = p;
  wrong.tensors.pop_back();
  CHECK_THROWS_AS(write_checkpoint(dir.path() / "w.mpjn", a, wrong), std::invalid_argument);
}

TEST_CASE("predict_two_ahead") {
  const Grid2D g{4, 4};
  SUBCASE("pass-through") {
    const auto a = rnn_arch(3, g);
    const auto p = init_params(a, 81);
    const Eigen::MatrixXd w = test::random_batch(16, 3, 82);
    const Eigen::MatrixXd out = predict_two_ahead(a, p, w, std::nullopt, std::nullopt);
    const Eigen::MatrixXd raw = forward(a, p, Eigen::Map<const Eigen::VectorXd>(w.data(), 48));
    CHECK(Eigen::Map<const Eigen::VectorXd>(out.data(), 32) == raw.col(0));
    CHECK_THROWS_AS(predict_two_ahead(a, p, w, ScalingParams{0, 1}, std::nullopt), ConfigError);
  }
  SUBCASE("CNN outputs land inside the training range") {
    const auto a = cnn_arch(4, {16, 16});
    const auto p = init_params(a, 83);
    const ScalingParams s{-2.0, 3.0};
    const Eigen::MatrixXd w = test::random_batch(256, 4, 84, -2.0, 3.0);
    const Eigen::MatrixXd out = predict_two_ahead(a, p, w, s, std::nullopt);
    CHECK(out.minCoeff() >= -2.0);
    CHECK(out.maxCoeff() <= 3.0);
    CHECK_THROWS_AS(predict_two_ahead(a, p, w, std::nullopt, std::nullopt), ConfigError);
  }
  SUBCASE("baseline is added back") {
    const auto a = rnn_arch(3, g);
    const auto p = init_params(a, 85);
    const Eigen::MatrixXd single = test::random_batch(16, 5, 86);
    const Eigen::MatrixXd multi = test::random_batch(16, 5, 87);
    const Eigen::MatrixXd diff = multi - single;
    const Eigen::MatrixXd plain = predict_two_ahead(a, p, diff.leftCols(3), std::nullopt, std::nullopt);
    const Eigen::MatrixXd phys = predict_two_ahead(a, p, diff.leftCols(3), std::nullopt, Eigen::MatrixXd(single.rightCols(2)));
    CHECK((phys - plain - single.rightCols(2)).norm() <= 1e-14);
  }
}
