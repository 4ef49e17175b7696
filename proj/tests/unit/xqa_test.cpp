// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "pgformer/errors.hpp"
#include "pgformer/xqa.hpp"
#include "support.hpp"

namespace pgformer {
namespace {

using test::random_tensor;

struct Fixture {
  ParameterStore store;
  Rng rng;
  XqaParams params;
  FutureTemplateParams future;

  explicit Fixture(std::size_t d, std::size_t m = 2, ProxyMode mode = ProxyMode::bilinear, std::uint64_t seed = 1,
                   std::size_t heads = 1)
      : rng(seed),
        params(XqaParams::create(store, "xqa", d, m, mode, heads, false, rng)),
        future(FutureTemplateParams::create(store, "future", d, rng)) {}
};

void set_identity(Linear& l) {
  l.weight->value = identity(l.in_features());
  l.bias->value.fill(0.0);
}

TEST(CrossQueries, IdentityProjectionPassesNonNegativeInput) {
  Fixture f(4);
  set_identity(f.params.query);
  Rng rng(2);
  Tensor e = random_tensor({3, 4}, rng);
  for (auto& v : e.values()) v = std::abs(v);
  Tape tape(false);
  auto [q_l, q_f] = cross_queries(tape, tape.constant(e), tape.constant(e), f.params);
  EXPECT_EQ(q_l.value(), e);
}

TEST(CrossQueries, SharedWeightsAndReluBound) {
  Fixture f(5);
  Rng rng(3);
  const Tensor e = random_tensor({4, 5}, rng);
  Tape tape(false);
  auto [q_l, q_f] = cross_queries(tape, tape.constant(e), tape.constant(e), f.params);
  EXPECT_EQ(q_l.value(), q_f.value());
  auto [a, b] = cross_queries(tape, tape.constant(e), tape.constant(random_tensor({4, 5}, rng)), f.params);
  for (double v : a.value().values()) EXPECT_GE(v, 0.0);
  for (double v : b.value().values()) EXPECT_GE(v, 0.0);
}

TEST(CrossQueries, WidthMismatchThrows) {
  Fixture f(4);
  Tape tape(false);
  EXPECT_THROW(cross_queries(tape, tape.constant(Tensor({3, 4})), tape.constant(Tensor({3, 5})), f.params),
               DimensionError);
}

TEST(BuildProxy, ZeroTemplateWeightsGiveZeroProxy) {
  Fixture f(4);
  f.params.template_weights.weight->value.fill(0.0);
  f.params.template_weights.bias->value.fill(0.0);
  Rng rng(4);
  Tape tape(false);
  const Tensor p = build_proxy(tape, tape.constant(random_tensor({3, 4}, rng)), tape.constant(random_tensor({3, 4}, rng)),
                               tape.constant(random_tensor({2, 4}, rng)), f.params)
                       .value();
  for (double v : p.values()) EXPECT_EQ(v, 0.0);
}

TEST(BuildProxy, RankOneTraceFive) {
  Fixture f(3, 1);
  // W_t = E_l[:, 0] = [1, 2]^T
  f.params.template_weights.weight->value.fill(0.0);
  f.params.template_weights.weight->value(0, 0) = 1.0;
  f.params.template_weights.bias->value.fill(0.0);
  Tape tape(false);
  const Tensor e_l = Tensor::matrix({{1, 0, 0}, {2, 0, 0}});
  const Tensor t = Tensor::matrix({{1, 0, 0}});
  const Tensor p = build_proxy(tape, tape.constant(e_l), tape.constant(Tensor({2, 3})), tape.constant(t), f.params).value();
  double trace = 0;
  for (std::size_t i = 0; i < 3; ++i) trace += p(i, i);
  EXPECT_DOUBLE_EQ(trace, 5.0);
  // (w^T w) t t^T
  const Tensor expected = Tensor::matrix({{5, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  EXPECT_EQ(p, expected);
}

TEST(BuildProxy, SymmetricAndPositiveSemidefinite) {
  Rng probe(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Fixture f(6, 3, ProxyMode::bilinear, seed);
    Tape tape(false);
    const Tensor p = build_proxy(tape, tape.constant(random_tensor({5, 6}, f.rng)),
                                 tape.constant(random_tensor({5, 6}, f.rng)), tape.constant(random_tensor({3, 6}, f.rng)),
                                 f.params)
                         .value();
    EXPECT_LT(max_abs_diff(p, transpose(p)), 1e-12);
    for (int i = 0; i < 100; ++i) {
      const Tensor x = random_tensor({6, 1}, probe);
      EXPECT_GE(matmul(transpose(x), matmul(p, x)).item(), -1e-9);
    }
  }
}

TEST(SharedAttention, GramMatrixIsSymmetric) {
  Rng rng(6);
  Tape tape(false);
  const Var q = tape.constant(random_tensor({4, 3}, rng));
  const Tensor a = shared_attention(q, q).value();
  EXPECT_LT(max_abs_diff(a, transpose(a)), 1e-12);
}

TEST(SharedAttention, IdentityProxyReducesToPlainMap) {
  Rng rng(7);
  Tape tape(false);
  const Var q_l = tape.constant(random_tensor({4, 3}, rng)), q_f = tape.constant(random_tensor({4, 3}, rng));
  EXPECT_EQ(shared_attention(q_l, q_f, tape.constant(identity(3))).value(), shared_attention(q_l, q_f).value());
}

TEST(SharedAttention, HandCase) {
  Tape tape(false);
  const Tensor a = shared_attention(tape.constant(Tensor::matrix({{1, 0}, {0, 1}})),
                                    tape.constant(Tensor::matrix({{1, 1}, {2, 0}})))
                       .value();
  EXPECT_EQ(a, Tensor::matrix({{1, 2}, {1, 0}}));
}

TEST(XqaForward, SingleFrameReturnsPartner) {
  Fixture f(4);
  Rng rng(8);
  const Tensor e_l = random_tensor({1, 4}, rng), e_f = random_tensor({1, 4}, rng);
  Tape tape(false);
  auto [o_l, o_f] = xqa_forward(tape, tape.constant(e_l), tape.constant(e_f), tape.constant(random_tensor({2, 4}, rng)),
                                f.params);
  EXPECT_EQ(o_l.value(), e_f);
  EXPECT_EQ(o_f.value(), e_l);
}

TEST(XqaForward, UniformMapAveragesPartner) {
  Fixture f(3, 2, ProxyMode::off);
  f.params.query.weight->value.fill(0.0);
  f.params.query.bias->value.fill(0.0);
  Rng rng(9);
  const Tensor e_f = random_tensor({4, 3}, rng);
  Tape tape(false);
  auto [o_l, o_f] = xqa_forward(tape, tape.constant(random_tensor({4, 3}, rng)), tape.constant(e_f), Var{}, f.params);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0;
    for (std::size_t t = 0; t < 4; ++t) m += e_f(t, c) / 4.0;
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(o_l.value()(t, c), m, 1e-12);
  }
}

TEST(XqaForward, SwapSymmetryWithProxyOff) {
  Fixture f(5, 2, ProxyMode::off);
  Rng rng(10);
  const Tensor a = random_tensor({4, 5}, rng), b = random_tensor({4, 5}, rng);
  Tape tape(false);
  auto [o1_l, o1_f] = xqa_forward(tape, tape.constant(a), tape.constant(b), Var{}, f.params);
  auto [o2_l, o2_f] = xqa_forward(tape, tape.constant(b), tape.constant(a), Var{}, f.params);
  EXPECT_EQ(o1_l.value(), o2_f.value());
  EXPECT_EQ(o1_f.value(), o2_l.value());
}

TEST(XqaForward, ConvexCombinationBound) {
  for (ProxyMode mode : {ProxyMode::off, ProxyMode::bilinear, ProxyMode::gate_multiply, ProxyMode::gate_add}) {
    Fixture f(4, 2, mode, 11);
    const Tensor e_l = random_tensor({5, 4}, f.rng), e_f = random_tensor({5, 4}, f.rng);
    Tape tape(false);
    const Var templates = tape.constant(random_tensor({2, 4}, f.rng));
    auto [o_l, o_f] = xqa_forward(tape, tape.constant(e_l), tape.constant(e_f), templates, f.params);
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t t = 0; t < 5; ++t) {
        lo = std::min(lo, e_f(t, c));
        hi = std::max(hi, e_f(t, c));
      }
      for (std::size_t t = 0; t < 5; ++t) {
        EXPECT_GE(o_l.value()(t, c), lo - 1e-12);
        EXPECT_LE(o_l.value()(t, c), hi + 1e-12);
      }
    }
  }
}

TEST(XqaForward, SharedMapRowStochasticBothWays) {
  Fixture f(4, 2, ProxyMode::bilinear, 12);
  Tape tape(false);
  const Var e_l = tape.constant(random_tensor({6, 4}, f.rng)), e_f = tape.constant(random_tensor({6, 4}, f.rng));
  const Var templates = tape.constant(random_tensor({2, 4}, f.rng));
  auto [q_l, q_f] = cross_queries(tape, e_l, e_f, f.params);
  const Var a = shared_attention(q_l, q_f, build_proxy(tape, e_l, e_f, templates, f.params));
  for (const Tensor& s : {softmax_rows(a).value(), softmax_rows(transpose(a)).value()}) {
    for (std::size_t i = 0; i < 6; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < 6; ++j) row += s(i, j);
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST(XqaForward, ShapeMismatchThrows) {
  Fixture f(4);
  Tape tape(false);
  EXPECT_THROW(xqa_forward(tape, tape.constant(Tensor({3, 4})), tape.constant(Tensor({2, 4})),
                           tape.constant(Tensor({2, 4})), f.params),
               DimensionError);
}

TEST(XqaForward, MultiHeadSplitsWidth) {
  Fixture f(6, 2, ProxyMode::bilinear, 13, 2);
  Tape tape(false);
  auto [o_l, o_f] = xqa_forward(tape, tape.constant(random_tensor({3, 6}, f.rng)),
                                tape.constant(random_tensor({3, 6}, f.rng)), tape.constant(random_tensor({2, 6}, f.rng)),
                                f.params);
  EXPECT_EQ(o_l.shape(), (Tensor::Shape{3, 6}));
  ParameterStore store;
  Rng rng(1);
  EXPECT_THROW(XqaParams::create(store, "x", 6, 2, ProxyMode::bilinear, 4, false, rng), ConfigError);
}

TEST(GateVariants, NeutralProxies) {
  Rng rng(14);
  Tape tape(false);
  const Var a = tape.constant(random_tensor({3, 3}, rng));
  EXPECT_EQ(gate_variants(a, tape.constant(Tensor({3, 3}, 1.0)), ProxyMode::gate_multiply).value(), a.value());
  EXPECT_EQ(gate_variants(a, tape.constant(Tensor({3, 3})), ProxyMode::gate_add).value(), a.value());
  EXPECT_THROW(gate_variants(a, a, ProxyMode::bilinear), ConfigError);
}

TEST(GateVariants, TemporalProxySymmetric) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Fixture f(4, 3, ProxyMode::gate_multiply, seed);
    Tape tape(false);
    const Tensor p = build_temporal_proxy(tape, tape.constant(random_tensor({5, 4}, f.rng)),
                                          tape.constant(random_tensor({5, 4}, f.rng)),
                                          tape.constant(random_tensor({3, 4}, f.rng)), f.params)
                         .value();
    EXPECT_EQ(p.shape(), (Tensor::Shape{5, 5}));
    EXPECT_LT(max_abs_diff(p, transpose(p)), 1e-12);
  }
}

Tensor project(const Linear& l, const Tensor& x) {
  Tensor y = matmul(x, l.weight->value);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += l.bias->value[j];
  return y;
}

TEST(FutureTemplates, SingleTemplateIgnoresQuery) {
  Fixture f(4, 1);
  Rng rng(15);
  const Tensor t_en = random_tensor({1, 4}, rng);
  Tape tape(false);
  const Tensor a = future_templates(tape, tape.constant(t_en), tape.constant(random_tensor({1, 4}, rng)), f.future).value();
  const Tensor b = future_templates(tape, tape.constant(t_en), tape.constant(random_tensor({1, 4}, rng)), f.future).value();
  EXPECT_EQ(a, b);
  EXPECT_LT(max_abs_diff(a, project(f.future.value, t_en)), 1e-12);
}

TEST(FutureTemplates, IdenticalTemplateRowsGiveIdenticalOutputRows) {
  Fixture f(4, 3);
  Rng rng(16);
  const Tensor row = random_tensor({1, 4}, rng);
  Tensor t_en({3, 4});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) t_en(i, j) = row[j];
  Tape tape(false);
  const Tensor out = future_templates(tape, tape.constant(t_en), tape.constant(random_tensor({3, 4}, rng)), f.future).value();
  for (std::size_t i = 1; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out(i, j), out(0, j));
}

TEST(FutureTemplates, MatchesDirectAttention) {
  Fixture f(4, 3);
  Rng rng(17);
  const Tensor t_en = random_tensor({3, 4}, rng), t_q = random_tensor({3, 4}, rng);
  Tape tape(false);
  const Tensor out = future_templates(tape, tape.constant(t_en), tape.constant(t_q), f.future).value();
  const Tensor q = project(f.future.query, t_q), k = project(f.future.key, t_en), v = project(f.future.value, t_en);
  for (std::size_t i = 0; i < 3; ++i) {
    double w[3], z = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < 4; ++c) s += q(i, c) * k(j, c);
      w[j] = std::exp(s / 2.0);
      z += w[j];
    }
    for (std::size_t c = 0; c < 4; ++c) {
      double ref = 0;
      for (std::size_t j = 0; j < 3; ++j) ref += w[j] / z * v(j, c);
      EXPECT_NEAR(out(i, c), ref, 1e-12);
    }
  }
}

TEST(XqaMulti, TwoPersonsMatchPairwise) {
  Fixture f(4, 2, ProxyMode::bilinear, 18);
  Tape tape(false);
  const Var a = tape.constant(random_tensor({5, 4}, f.rng)), b = tape.constant(random_tensor({5, 4}, f.rng));
  const Var templates = tape.constant(random_tensor({2, 4}, f.rng));
  const auto multi = xqa_multi(tape, {a, b}, templates, f.params);
  auto [o_l, o_f] = xqa_forward(tape, a, b, templates, f.params);
  EXPECT_LT(max_abs_diff(multi[0].value(), o_l.value()), 1e-12);
}

TEST(XqaMulti, IdenticalPersonsGetIdenticalOutputs) {
  Fixture f(4, 2, ProxyMode::bilinear, 19);
  Tape tape(false);
  const Var a = tape.constant(random_tensor({3, 4}, f.rng)), b = tape.constant(random_tensor({3, 4}, f.rng));
  const auto out = xqa_multi(tape, {a, b, b}, tape.constant(random_tensor({2, 4}, f.rng)), f.params);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1].value(), out[2].value());
}

TEST(XqaMulti, AttentionOverAllPartnerFramesIsStochastic) {
  // Constant columns in the partners make every output row equal the weight sum times that constant.
  Fixture f(3, 2, ProxyMode::bilinear, 20);
  Tape tape(false);
  const Var a = tape.constant(random_tensor({4, 3}, f.rng));
  const Var ones = tape.constant(Tensor({4, 3}, 1.0));
  const auto out = xqa_multi(tape, {a, ones, ones}, tape.constant(random_tensor({2, 3}, f.rng)), f.params);
  for (double v : out[0].value().values()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(XqaMulti, NeedsTwoPersons) {
  Fixture f(3);
  Tape tape(false);
  EXPECT_THROW(xqa_multi(tape, {tape.constant(Tensor({2, 3}))}, tape.constant(Tensor({2, 3})), f.params), ConfigError);
}

TEST(XqaGradients, AllParametersMatchFiniteDifferences) {
  for (ProxyMode mode : {ProxyMode::off, ProxyMode::bilinear, ProxyMode::gate_multiply, ProxyMode::gate_add}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Fixture f(4, 2, mode, seed);
      const Tensor e_l = random_tensor({3, 4}, f.rng), e_f = random_tensor({3, 4}, f.rng);
      // Half-scale templates keep the gated logits out of softmax saturation.
      const Tensor t_en = random_tensor({2, 4}, f.rng, 0.5), t_q = random_tensor({2, 4}, f.rng, 0.5);
      const Tensor w_l = random_tensor({3, 4}, f.rng), w_f = random_tensor({3, 4}, f.rng);
      auto loss = [&](Tape& tape) {
        const Var t = future_templates(tape, tape.constant(t_en), tape.constant(t_q), f.future);
        auto [o_l, o_f] = xqa_forward(tape, tape.constant(e_l), tape.constant(e_f), t, f.params);
        return add(sum(hadamard(o_l, tape.constant(w_l))), sum(hadamard(o_f, tape.constant(w_f))));
      };
      f.store.zero_grad();
      {
        Tape tape;
        tape.backward(loss(tape));
      }
      double diff2 = 0, a2 = 0, n2 = 0;
      for (const auto& e : f.store.entries()) {
        Tensor& v = e.param->value;
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double orig = v[i];
          v[i] = orig + 1e-6;
          Tape up_tape(false);
          const double up = loss(up_tape).value().item();
          v[i] = orig - 1e-6;
          Tape down_tape(false);
          const double down = loss(down_tape).value().item();
          v[i] = orig;
          const double numeric = (up - down) / 2e-6;
          diff2 += std::pow(numeric - e.param->grad[i], 2);
          a2 += e.param->grad[i] * e.param->grad[i];
          n2 += numeric * numeric;
        }
      }
      EXPECT_LT(std::sqrt(diff2) / std::max(std::sqrt(a2), std::sqrt(n2)), 1e-5)
          << to_string(mode) << " seed " << seed;
    }
  }
}

TEST(ProxyModeNames, RoundTrip) {
  for (ProxyMode m : {ProxyMode::off, ProxyMode::bilinear, ProxyMode::gate_multiply, ProxyMode::gate_add})
    EXPECT_EQ(parse_proxy_mode(to_string(m)), m);
  EXPECT_THROW(parse_proxy_mode("cubic"), ConfigError);
}

}  // namespace
}  // namespace pgformer
