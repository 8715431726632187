// Copyright (c) 2026 the ldgcn authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ldgcn/optim.hpp"
#include "ldgcn/tape.hpp"
#include "oracles.hpp"

using namespace ldgcn;

TEST_CASE("forward ops: spot values") {
  Tape tape;
  SUBCASE("sigmoid(0) = 0.5") {
    Tensor out = tape.sigmoid(tape.leaf(Tensor(2, 3)));
    for (double x : out.v) CHECK(x == 0.5);
  }
  SUBCASE("concat_cols left block equals the first input") {
    Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    Tensor b = Tensor::from_rows({{5}, {6}});
    Tensor out = tape.concat_cols({tape.leaf(a), tape.leaf(b)});
    CHECK(out.rows() == 2);
    CHECK(out.cols() == 3);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(1, 1) == 4);
    CHECK(out.at(0, 2) == 5);
  }
  SUBCASE("softmax of equal values is uniform") {
    Tensor out = tape.softmax_rows(tape.leaf(Tensor(1, 4, 3.25)));
    for (double x : out.v) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("shape mismatches throw ShapeError") {
    CHECK_THROWS_AS(tape.add(tape.leaf(Tensor(2, 2)), tape.leaf(Tensor(2, 3))),
                    ShapeError);
    CHECK_THROWS_AS(
        tape.matmul(tape.leaf(Tensor(2, 3)), tape.leaf(Tensor(2, 3))),
        ShapeError);
    CHECK_THROWS_AS(tape.slice_cols(tape.leaf(Tensor(2, 3)), 2, 2),
                    ShapeError);
  }
}

TEST_CASE("backward: linear map gradient has the outer-product structure") {
  // loss = sum(x * W): dLoss/dW[i][j] = x[i] for every column j.
  Tape tape;
  Tensor x = tape.leaf(Tensor::from_rows({{2.0, -3.0, 0.5}}));
  Tensor w = tape.leaf(Tensor(3, 4, 0.7));
  Tensor loss = tape.sum_all(tape.matmul(x, w));
  tape.backward(loss);
  Tensor gw = tape.grad(w);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(gw.at(i, j) == x.v[i]);
}

TEST_CASE("backward: sigmoid gradient") {
  Tape tape;
  Tensor w = tape.leaf(Tensor::from_rows({{0.3, -1.2, 2.0}}));
  Tensor loss = tape.sum_all(tape.sigmoid(w));
  tape.backward(loss);
  Tensor gw = tape.grad(w);
  for (int j = 0; j < 3; ++j) {
    double s = oracle::sigmoid1(w.v[j]);
    CHECK(gw.v[j] == doctest::Approx(s * (1 - s)).epsilon(1e-15));
  }
}

TEST_CASE("backward: loss must be scalar") {
  Tape tape;
  Tensor x = tape.leaf(Tensor(2, 2, 1.0));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("backward: three-layer composition matches finite differences") {
  Rng rng(3);
  Tensor x(2, 3), w1(3, 4), w2(4, 3), w3(3, 2);
  for (auto* t : {&x, &w1, &w2, &w3})
    for (auto& v : t->v) v = rng.uniform(-2.0, 2.0);
  auto f = [](Tape& t, const std::vector<Tensor>& in) {
    Tensor h1 = t.tanh(t.matmul(in[0], in[1]));
    Tensor h2 = t.sigmoid(t.matmul(h1, in[2]));
    return t.sum_all(t.matmul(h2, in[3]));
  };
  CHECK(grad_check(f, {x, w1, w2, w3}, 1e-5) < 1e-4);
}

TEST_CASE("grad_check: every differentiable op on randomized inputs") {
  Rng rng(71);
  auto rnd = [&](int r, int c) {
    Tensor t(r, c);
    for (auto& x : t.v) x = rng.uniform(-2.0, 2.0);
    return t;
  };
  amr::SparseAdjacency adj =
      amr::adjacency_from_entries(3, {{0, 1}, {1, 2}, {2, 0}},
                                  {true, true, false});
  using F = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
  std::vector<std::pair<const char*, std::pair<F, std::vector<Tensor>>>> ops;
  ops.emplace_back("matmul", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.tanh(t.matmul(in[0], in[1])));
      },
      {rnd(2, 3), rnd(3, 4)}});
  ops.emplace_back("transpose", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.sigmoid(t.transpose(in[0])));
      },
      {rnd(2, 3)}});
  ops.emplace_back("add/sub", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.tanh(t.sub(t.add(in[0], in[1]), in[2])));
      },
      {rnd(2, 3), rnd(2, 3), rnd(2, 3)}});
  ops.emplace_back("add_rowvec", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.sigmoid(t.add_rowvec(in[0], in[1])));
      },
      {rnd(3, 4), rnd(1, 4)}});
  ops.emplace_back("mul_elementwise", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.mul_elementwise(in[0], in[1]));
      },
      {rnd(2, 3), rnd(2, 3)}});
  ops.emplace_back("affine", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.tanh(t.affine(in[0], -1.7, 0.3)));
      },
      {rnd(2, 3)}});
  ops.emplace_back("concat/slice", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        Tensor cat = t.concat_cols({in[0], in[1]});
        return t.sum_all(t.tanh(t.slice_cols(cat, 1, 3)));
      },
      {rnd(2, 2), rnd(2, 3)}});
  ops.emplace_back("softmax_rows", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        Tensor probs = t.softmax_rows(in[0]);
        return t.sum_all(t.mul_elementwise(probs, in[1]));
      },
      {rnd(2, 4), rnd(2, 4)}});
  ops.emplace_back("mean_all", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.mean_all(t.sigmoid(in[0]));
      },
      {rnd(3, 3)}});
  ops.emplace_back("gather_rows", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.tanh(t.gather_rows(in[0], {2, 0, 2})));
      },
      {rnd(4, 3)}});
  ops.emplace_back("sparse_apply", std::pair<F, std::vector<Tensor>>{
      [&adj](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.tanh(t.kth_order_apply(adj, in[0], 2)));
      },
      {rnd(3, 3)}});
  ops.emplace_back("cross_entropy_rows", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.cross_entropy_rows(in[0], {1, 3});
      },
      {rnd(2, 5)}});
  ops.emplace_back("relu", std::pair<F, std::vector<Tensor>>{
      [](Tape& t, const std::vector<Tensor>& in) {
        return t.sum_all(t.relu(in[0]));
      },
      {rnd(3, 3)}});
  for (auto& [name, fi] : ops) {
    INFO(name);
    CHECK(grad_check(fi.first, fi.second, 1e-5) < 1e-4);
  }
}

TEST_CASE("grad_check: linear function with dyadic inputs is exactly zero") {
  // Powers of two keep the central difference free of rounding.
  Tensor x = Tensor::from_rows({{0.25, -0.5, 1.0, 2.0}});
  auto f = [](Tape& t, const std::vector<Tensor>& in) {
    return t.sum_all(in[0]);
  };
  CHECK(grad_check(f, {x}, 0x1.0p-11) == 0.0);
}

TEST_CASE("grad_check: negative control with a wrong backward rule") {
  Tensor x = Tensor::from_rows({{0.4, -0.9, 1.3}});
  auto f = [](Tape& t, const std::vector<Tensor>& in) {
    // Forward is sigmoid, but the registered derivative is sigma(x) instead
    // of sigma(x)(1 - sigma(x)).
    Tensor y = t.elementwise_custom(
        in[0], [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y2) { return y2; });
    return t.sum_all(y);
  };
  CHECK(grad_check(f, {x}, 1e-5) > 1e-2);
}

TEST_CASE("grad_check: eps outside [1e-7, 1e-3] is rejected") {
  auto f = [](Tape& t, const std::vector<Tensor>& in) {
    return t.sum_all(in[0]);
  };
  CHECK_THROWS_AS(grad_check(f, {Tensor(1, 1, 1.0)}, 1e-8), UsageError);
  CHECK_THROWS_AS(grad_check(f, {Tensor(1, 1, 1.0)}, 1e-2), UsageError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged, moments decay") {
  Tensor p(1, 3, 2.0);
  AdamState st;
  AdamConfig cfg;
  adam_step(p, Tensor(1, 3, 1.0), st, cfg);  // build up nonzero moments
  Tensor before = p;
  Tensor m_before = st.m;
  adam_step(p, Tensor(1, 3, 0.0), st, cfg);
  for (int j = 0; j < 3; ++j) {
    CHECK(st.m.v[j] == doctest::Approx(0.9 * m_before.v[j]).epsilon(1e-15));
    // Step direction still follows the decayed first moment, magnitude << lr.
    CHECK(std::abs(p.v[j] - before.v[j]) < cfg.lr * 1.5);
  }
  SUBCASE("from zero state, zero grad, parameters are bit-identical") {
    Tensor q(1, 3, 1.5);
    AdamState st2;
    adam_step(q, Tensor(1, 3, 0.0), st2, cfg);
    for (double x : q.v) CHECK(x == 1.5);
  }
}

TEST_CASE("adam: first step from zero state moves by about -sign(g)*lr") {
  Tensor p(1, 2);
  p.v = {1.0, -1.0};
  AdamState st;
  AdamConfig cfg;
  Tensor g(1, 2);
  g.v = {0.3, -0.02};
  adam_step(p, g, st, cfg);
  CHECK(p.v[0] == doctest::Approx(1.0 - cfg.lr).epsilon(1e-6));
  CHECK(p.v[1] == doctest::Approx(-1.0 + cfg.lr).epsilon(1e-6));
}

TEST_CASE("adam: non-finite gradient throws OptimError") {
  Tensor p(1, 1, 0.0);
  AdamState st;
  Tensor g(1, 1, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(adam_step(p, g, st, AdamConfig{}), OptimError);
}

TEST_CASE("adam: 100 steps on a 1-d quadratic, against the scalar oracle") {
  // f(x) = (x - 0.6)^2 / 2, grad = x - 0.6.
  AdamConfig cfg;
  cfg.lr = 0.02;
  Tensor p(1, 1, 0.5);
  AdamState st;
  oracle::ScalarAdam sim(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  double x_sim = 0.5;
  for (int i = 0; i < 100; ++i) {
    Tensor g(1, 1, p.v[0] - 0.6);
    adam_step(p, g, st, cfg);
    x_sim = sim.step(x_sim, x_sim - 0.6);
    REQUIRE(p.v[0] == x_sim);  // library matches the scalar simulation bitwise
  }
  CHECK(std::abs(p.v[0] - 0.6) < 1e-3);
}

TEST_CASE("determinism: same seed gives bit-identical values and gradients") {
  auto run = [] {
    Rng rng(99);
    Tensor x = glorot_uniform(3, 4, rng);
    Tensor w = glorot_uniform(4, 2, rng);
    Tape tape;
    Tensor bx = tape.leaf(x), bw = tape.leaf(w);
    Tensor loss = tape.sum_all(tape.tanh(tape.matmul(bx, bw)));
    tape.backward(loss);
    auto g = tape.grad(bw);
    std::vector<double> out = {loss.v[0]};
    out.insert(out.end(), g.v.begin(), g.v.end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("tape replay: one tape twice vs two fresh tapes") {
  Rng rng(5);
  Tensor x = glorot_uniform(2, 3, rng);
  Tensor w = glorot_uniform(3, 3, rng);
  auto forward = [&](Tape& t) {
    Tensor bx = t.leaf(x), bw = t.leaf(w);
    Tensor loss = t.sum_all(t.sigmoid(t.matmul(bx, bw)));
    return std::pair<Tensor, Tensor>(loss, bw);
  };
  // Same graph twice on one tape.
  Tape one;
  auto [l1, w1] = forward(one);
  auto [l2, w2] = forward(one);
  one.backward(l2);
  Tensor g_second = one.grad(w2);
  one.backward(l1);
  Tensor g_first = one.grad(w1);
  // Two fresh tapes.
  Tape ta, tb;
  auto [la, wa] = forward(ta);
  ta.backward(la);
  auto [lb, wb] = forward(tb);
  tb.backward(lb);
  CHECK(g_first.v == ta.grad(wa).v);
  CHECK(g_second.v == tb.grad(wb).v);
  CHECK(g_first.v == g_second.v);
}

TEST_CASE("gather_rows rejects out-of-range ids") {
  Tape tape;
  CHECK_THROWS_AS(tape.gather_rows(tape.leaf(Tensor(3, 2)), {0, 3}),
                  VocabError);
}

TEST_CASE("checkpoint: bit-exact round trip") {
  ParamStore store;
  Rng rng(17);
  store.create("alpha.W", glorot_uniform(3, 5, rng));
  store.create("alpha.b", Tensor(1, 5));
  store.create("beta.W", glorot_uniform(7, 2, rng));
  std::string path = std::filesystem::temp_directory_path() /
                     "ldgcn_test_ckpt.bin";
  store.save(path);
  ParamStore loaded = ParamStore::load(path);
  REQUIRE(loaded.count() == store.count());
  for (std::size_t i = 0; i < store.items().size(); ++i) {
    CHECK(loaded.items()[i].first == store.items()[i].first);
    CHECK(loaded.items()[i].second.shape == store.items()[i].second.shape);
    CHECK(loaded.items()[i].second.v == store.items()[i].second.v);
  }
  // Saving the loaded store reproduces the file byte for byte.
  std::string path2 = std::filesystem::temp_directory_path() /
                      "ldgcn_test_ckpt2.bin";
  loaded.save(path2);
  auto slurp = [](const std::string& p) {
    std::FILE* f = std::fopen(p.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string data;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, n);
    std::fclose(f);
    return data;
  };
  CHECK(slurp(path) == slurp(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint: bad magic is rejected") {
  std::string path =
      std::filesystem::temp_directory_path() / "ldgcn_bad_ckpt.bin";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOTACKPT!!", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(ParamStore::load(path), IoError);
  std::filesystem::remove(path);
}
