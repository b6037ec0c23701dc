#include "salience/gadgets.hpp"

#include <array>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "salience/control.hpp"
#include "salience/oracles.hpp"

namespace salience {
namespace {

std::map<std::string, int> label_counts(const std::vector<std::string>& labels) {
  std::map<std::string, int> out;
  for (const auto& l : labels) ++out[l];
  return out;
}

TcmsInstance random_tcms(std::mt19937& rng, int np, int ellp) {
  std::bernoulli_distribution coin(0.5);
  Matrix v(np, ellp);
  for (int j = 0; j < np; ++j)
    for (int k = 0; k < ellp; ++k) v(j, k) = coin(rng) ? 1.0 : 0.0;
  return {v};
}

// Best TCMS vote count over nonzero binary issue selections.
int tcms_brute(const Matrix& v) {
  const int ellp = static_cast<int>(v.cols());
  int best = 0;
  for (int mask = 1; mask < (1 << ellp); ++mask) {
    int votes = 0;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      int agree = 0;
      for (int k = 0; k < ellp; ++k)
        if (mask >> k & 1) agree += v(j, k) == 1.0 ? 1 : -1;
      votes += agree >= 0 ? 1 : 0;
    }
    best = std::max(best, votes);
  }
  return best;
}

TEST(TcwmsGadget, SetSizes) {
  std::mt19937 rng(40);
  for (int np = 1; np <= 3; ++np) {
    for (int ellp = 1; ellp <= 3; ++ellp) {
      const auto g = build_tcwms_gadget(random_tcms(rng, np, ellp));
      auto counts = label_counts(g.labels);
      EXPECT_EQ(counts["V1"], np);
      EXPECT_EQ(counts["V2"], 8 * np * ellp * (ellp + 1));
      EXPECT_EQ(counts["V3"], 8 * np * ellp * (ellp + 1));
      EXPECT_EQ(counts["V4"], 4 * np * ellp);
      EXPECT_EQ(counts["V5"], 2 * np * ellp);
      EXPECT_EQ(counts["V6"], 2 * np * ellp);
      EXPECT_EQ(g.instance.num_issues(), 2 * ellp + 2);
      EXPECT_EQ(g.instance.num_voters(), static_cast<int>(g.labels.size()));
    }
  }
  const auto tiny = build_tcwms_gadget(random_tcms(rng, 1, 1));
  EXPECT_EQ(tiny.instance.num_voters(), 41);
}

TEST(TcwmsGadget, CandidatesAndComplements) {
  std::mt19937 rng(41);
  const auto g = build_tcwms_gadget(random_tcms(rng, 2, 2));
  EXPECT_EQ(g.instance.candidates().row(0), Vector::Ones(6).transpose());
  EXPECT_EQ(g.instance.candidates().row(1), Vector::Zero(6).transpose());
  std::vector<Vector> v2, v3;
  for (int j = 0; j < g.instance.num_voters(); ++j) {
    if (g.labels[j] == "V2") v2.push_back(g.instance.voters().row(j).transpose());
    if (g.labels[j] == "V3") v3.push_back(g.instance.voters().row(j).transpose());
  }
  ASSERT_EQ(v2.size(), v3.size());
  for (std::size_t i = 0; i < v3.size(); ++i) EXPECT_EQ(v3[i], (Vector::Ones(6) - v2[i]).eval());
  for (const Vector& v : v2) EXPECT_EQ(v.sum(), 3.0);
}

TEST(TcwmsGadget, EmbedsOriginalVoters) {
  Matrix v(1, 2);
  v << 1, 0;
  const auto g = build_tcwms_gadget({v});
  Vector expect(6);
  expect << 1, 0, 1, 1, 0, 0;
  EXPECT_EQ(g.instance.voters().row(0).transpose(), expect);
}

TEST(TcwmsGadget, RejectsNonBinary) {
  Matrix v(1, 1);
  v << 0.5;
  EXPECT_THROW(build_tcwms_gadget({v}), Error);
  EXPECT_THROW(build_tcwms_gadget({Matrix(0, 2)}), Error);
}

// On the small gadgets the best binary pattern pairs coordinate k with
// k + l' + 1 and uses a single nonzero value. The optimum is reached by
// weighting only the special pair, which ties every embedded voter, so the
// count does not depend on the embedded instance.
TEST(TcwmsGadget, StructuredOptimum) {
  std::mt19937 rng(42);
  for (int np = 1; np <= 2; ++np) {
    for (int ellp = 1; ellp <= 2; ++ellp) {
      for (int trial = 0; trial < 3; ++trial) {
        const TcmsInstance t = random_tcms(rng, np, ellp);
        const auto g = build_tcwms_gadget(t);
        const auto oracle = structured_weight_search(g.instance, MaxSupportObjective{});
        const auto solved = max_support(g.instance, IntervalBox::full(2 * ellp + 2));
        EXPECT_EQ(solved.votes_for_c1, static_cast<int>(oracle.value));
        const Vector w = g.instance.weights() + solved.x;
        const double top = w[ellp];
        for (int k = 0; k <= ellp; ++k) {
          EXPECT_NEAR(w[k], w[k + ellp + 1], 1e-6);
          EXPECT_TRUE(std::abs(w[k]) < 1e-6 || std::abs(w[k] - top) < 1e-6);
        }
        EXPECT_EQ(solved.votes_for_c1, 16 * np * ellp * ellp + 22 * np * ellp + np);
        EXPECT_LE(tcms_brute(t.voters), np);
      }
    }
  }
}

TEST(TcwpGadget, BlockSizeAndNeverWon) {
  std::mt19937 rng(43);
  const TcmsInstance t = random_tcms(rng, 1, 1);
  const auto base = build_tcwms_gadget(t);
  const auto g = build_tcwp_gadget(t);
  EXPECT_EQ(tcwp_block_size(1, 1), 20);
  EXPECT_EQ(g.instance.num_voters(), base.instance.num_voters() + 20);
  EXPECT_EQ(label_counts(g.labels)["V7"], 20);

  const PreferenceTensor tensor(g.instance);
  std::gamma_distribution<double> gam(1.0, 1.0);
  for (int s = 0; s < 1000; ++s) {
    Vector w(4);
    for (int k = 0; k < 4; ++k) w[k] = gam(rng);
    w /= w.sum();
    for (int j = base.instance.num_voters(); j < g.instance.num_voters(); ++j) {
      EXPECT_EQ(choose_candidate(tensor, j, w), 1);
    }
  }
}

TEST(ThetaLGadget, PrivateBlocks) {
  std::mt19937 rng(44);
  const auto g = build_theta_l_gadget(random_tcms(rng, 2, 2));
  EXPECT_EQ(g.instance.num_issues(), 16);
  const Matrix& v = g.instance.voters();
  for (int s = 2; s < 16; ++s) EXPECT_LE(v.col(s).sum(), 1.0);
  for (int j = 0; j < 2; ++j) EXPECT_EQ(v.row(j).tail(14).sum(), j + 2);

  const auto big = build_theta_l_gadget(random_tcms(rng, 3, 2));
  for (int s = 2; s < big.instance.num_issues(); ++s) EXPECT_LE(big.instance.voters().col(s).sum(), 1.0);
  EXPECT_THROW(build_theta_l_gadget(random_tcms(rng, 1, 1)), Error);
}

TEST(ThetaLGadget, OrdersByAgreement) {
  Matrix v(3, 2);
  v << 1, 1, 0, 0, 1, 0;
  const auto g = build_theta_l_gadget({v});
  EXPECT_EQ(g.labels, (std::vector<std::string>{"S0", "S1", "S2"}));
  EXPECT_EQ(g.instance.voters().row(0).head(2).sum(), 0.0);
  EXPECT_EQ(g.instance.voters().row(2).head(2).sum(), 2.0);
}

Max2SatFormula formula(int vars, std::initializer_list<std::array<int, 2>> clauses) {
  // Literal +k is b_k, -k is not b_k (1-based).
  Max2SatFormula phi;
  phi.num_variables = vars;
  for (const auto& c : clauses) {
    auto lit = [](int x) { return Literal{std::abs(x) - 1, x < 0}; };
    phi.clauses.push_back({lit(c[0]), lit(c[1])});
  }
  return phi;
}

TEST(Max2SatGadget, ClauseEncodings) {
  const auto g = build_max2sat_gadget(formula(2, {{1, 2}, {-1, 2}, {2, -1}, {-1, -2}}), 1, 1, 4.0);
  const Matrix& v = g.instance.voters();
  const int n = v.rows();
  Vector e1(3), e2(3), e3(3);
  e1 << 0, 0, 1;
  e2 << 0, 1, 0.5;
  e3 << 1, 1, 0;
  EXPECT_EQ(v.row(n - 4).transpose(), e1);
  EXPECT_EQ(v.row(n - 3).transpose(), e2);
  EXPECT_EQ(v.row(n - 2).transpose(), e2);
  EXPECT_EQ(v.row(n - 1).transpose(), e3);
  EXPECT_EQ(g.model.alpha, 4.0);
}

TEST(Max2SatGadget, BlockCounts) {
  Max2SatFormula phi = formula(3, {{1, 2}, {-2, 3}, {1, -3}, {-1, -2}, {2, 3}});
  const long l = 3, n = 5, b1 = 5, b2 = 7;
  const auto g = build_max2sat_gadget(phi, b1, b2, 5.0);
  auto counts = label_counts(g.labels);
  EXPECT_EQ(counts["anchor"], 4 * l * l * n * n * (b1 + b2));
  EXPECT_EQ(counts["beta1:2"], n * n * b1);
  EXPECT_EQ(counts["beta2:0"], n * n * b2);
  EXPECT_EQ(g.instance.num_voters(), 4 * l * l * n * n * (b1 + b2) + l * n * n * (b1 + b2) + n);
  EXPECT_EQ(g.instance.num_issues(), 4);
}

TEST(Max2SatGadget, RejectsMalformed) {
  EXPECT_THROW(build_max2sat_gadget(formula(2, {{1, 3}}), 1, 1, 1.0), Error);
  EXPECT_THROW(build_max2sat_gadget(formula(2, {{1, -1}}), 1, 1, 1.0), Error);
  EXPECT_THROW(build_max2sat_gadget(formula(2, {{1, 2}}), 1, 1, 0.0), Error);
}

TEST(Max2SatGadget, BalancedBeta) {
  const double alpha = 10.0, b1 = 10.0;
  const double b2 = balanced_beta2(b1, alpha);
  auto side = [&](double wk) { return b1 * logistic(alpha * (-wk - 0.75)) + b2 * logistic(alpha * (wk - 0.75)); };
  EXPECT_NEAR(side(0.0), side(1.0), 1e-12);
}

TEST(Max2SatBrute, Examples) {
  EXPECT_EQ(max2sat_brute(formula(2, {{1, 2}})), 1);
  EXPECT_EQ(max2sat_brute(formula(1, {{1, 1}, {-1, -1}})), 1);
  Max2SatFormula wide;
  wide.num_variables = 21;
  EXPECT_THROW(max2sat_brute(wide), Error);
}

TEST(Max2SatBrute, MatchesRecount) {
  std::mt19937 rng(45);
  std::uniform_int_distribution<int> var(1, 3);
  std::bernoulli_distribution neg(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Max2SatFormula phi;
    phi.num_variables = 3;
    std::vector<std::array<int, 2>> raw;
    for (int c = 0; c < 5; ++c) {
      int a = var(rng), b = var(rng);
      raw.push_back({neg(rng) ? -a : a, neg(rng) ? -b : b});
      phi.clauses.push_back({{a - 1, raw.back()[0] < 0}, {b - 1, raw.back()[1] < 0}});
    }
    int best = 0;
    for (int b0 = 0; b0 < 2; ++b0)
      for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2) {
          const bool val[3] = {b0 == 1, b1 == 1, b2 == 1};
          int count = 0;
          for (const auto& c : raw) {
            const bool x = c[0] > 0 ? val[c[0] - 1] : !val[-c[0] - 1];
            const bool y = c[1] > 0 ? val[c[1] - 1] : !val[-c[1] - 1];
            count += (x || y) ? 1 : 0;
          }
          best = std::max(best, count);
        }
    EXPECT_EQ(max2sat_brute(phi), best);
  }
}

}  // namespace
}  // namespace salience
