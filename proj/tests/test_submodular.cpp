#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "random_graphs.hpp"
#include "uqsub/error.hpp"
#include "uqsub/problems.hpp"
#include "uqsub/submodular.hpp"

using namespace uqsub;
using uqsub::testing::random_cut_graph;

namespace {

const CutGraph kFig = CutGraph::figure1(0.0, 4.0);
const SetFunctionSpec kF = SetFunctionSpec::from_graph(kFig);

// Ground indices of the example graph's named nodes.
constexpr std::size_t kN1 = 0;
constexpr std::size_t kN2 = 1;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

Eigen::VectorXd random_point(std::size_t n, RandomState& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.0, 1.0);
  return x;
}

// Lovasz extension of an undirected cut: sum of w |x_i - x_j| with the
// source pinned at 1 and the sink at 0.
double undirected_extension(const CutGraph& g, const Eigen::VectorXd& x,
                            double theta) {
  auto coord = [&](std::size_t v) {
    if (v == g.source()) return 1.0;
    if (v == g.sink()) return 0.0;
    for (std::size_t i = 0; i < g.ground_size(); ++i)
      if (g.ground_node(i) == v) return x[static_cast<Eigen::Index>(i)];
    return 0.0;
  };
  double total = 0.0;
  for (const CutEdge& e : g.edges())
    total += e.weight.at(theta) * std::abs(coord(e.from) - coord(e.to));
  return total;
}

}  // namespace

TEST(CutGraph, FigureOneGroundSetIsTheTwoInnerNodes) {
  ASSERT_EQ(kFig.ground_size(), 2u);
  EXPECT_EQ(kFig.ground_name(kN1), "1");
  EXPECT_EQ(kFig.ground_name(kN2), "2");
}

TEST(CutGraph, RejectsBadStructure) {
  EXPECT_THROW(CutGraph({"s", "t"}, 0, 0, {}, 0.0, 1.0), StructureError);
  EXPECT_THROW(CutGraph({"s", "a", "t"}, 0, 2, {{1, 1, {1.0, 0.0}}}, 0.0, 1.0),
               StructureError);
  // 1 - theta turns negative inside [0, 4].
  EXPECT_THROW(CutGraph({"s", "a", "t"}, 0, 2, {{0, 1, {1.0, -1.0}}}, 0.0, 4.0),
               DomainError);
  EXPECT_NO_THROW(
      CutGraph({"s", "a", "t"}, 0, 2, {{0, 1, {1.0, -1.0}}}, 0.0, 1.0));
}

TEST(CutGraph, ParsesEdgeListWithComments) {
  std::istringstream in(
      "# chain\nsource s\nsink t\n\ns 1 0 1   # theta\n1 2 2 0\n2 t 3 0\n");
  const CutGraph g = CutGraph::parse(in, 0.0, 4.0);
  EXPECT_EQ(g.ground_size(), 2u);
  const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
  for (double theta : {0.5, 2.0, 3.7})
    for (const Subset& s : {Subset{}, Subset{0}, Subset{1}, Subset{0, 1}})
      EXPECT_EQ(cut_value(g, s, theta), cut_value(kFig, s, theta));
}

TEST(CutGraph, ParseErrorsNameTheLine) {
  std::istringstream bad("source s\nsink t\ns a 1\n");
  try {
    CutGraph::parse(bad, 0.0, 1.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "line 3");
  }
  std::istringstream nan("source s\nsink t\ns a x 1\n");
  EXPECT_THROW(CutGraph::parse(nan, 0.0, 1.0), ConfigError);
  std::istringstream nosink("source s\ns a 1 0\n");
  EXPECT_THROW(CutGraph::parse(nosink, 0.0, 1.0), ConfigError);
}

TEST(CutValue, SourceAloneCutsTheThetaEdge) {
  EXPECT_EQ(cut_value(kFig, {}, 3.0), 3.0);
}

TEST(CutValue, FullSetCutsOnlyTheSinkEdge) {
  EXPECT_EQ(cut_value(kFig, {kN1, kN2}, 3.0), 3.0);
}

TEST(CutValue, NodeTwoAloneCutsBothEndEdges) {
  // Source side {s, 2}: s->1 and 2->t both leave it.
  EXPECT_EQ(cut_value(kFig, {kN2}, 1.0), 4.0);
  EXPECT_EQ(cut_value(kFig, {kN1}, 1.0), 2.0);
}

TEST(CutValue, ThetaOutsideSupportIsRejected) {
  EXPECT_THROW(cut_value(kFig, {}, 4.5), DomainError);
}

TEST(SetFunction, EmptyAndFullSetsAreTheTerminalCuts) {
  RandomState rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const CutGraph g = random_cut_graph(5, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    double from_s = 0.0, into_t = 0.0;
    for (const CutEdge& e : g.edges()) {
      if (e.from == g.source()) from_s += e.weight.at(theta);
      if (e.to == g.sink()) into_t += e.weight.at(theta);
    }
    EXPECT_NEAR(f.evaluate(std::vector<bool>(5, false), theta), from_s, 1e-12);
    EXPECT_NEAR(f.evaluate(std::vector<bool>(5, true), theta), into_t, 1e-12);
  }
}

TEST(SetFunction, SubmodularOnAllPairsOfSmallGraphs) {
  RandomState rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const CutGraph g = random_cut_graph(n, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    const std::uint32_t full = 1u << n;
    std::vector<double> val(full);
    for (std::uint32_t m = 0; m < full; ++m) {
      std::vector<bool> in(n);
      for (std::size_t i = 0; i < n; ++i) in[i] = (m >> i) & 1u;
      val[m] = f.evaluate(in, theta);
    }
    for (std::uint32_t a = 0; a < full; ++a)
      for (std::uint32_t b = 0; b < full; ++b)
        ASSERT_GE(val[a] + val[b] - val[a | b] - val[a & b], -1e-12);
  }
}

TEST(Lovasz, FigureOneClosedFormValues) {
  EXPECT_EQ(figure1_closed_form(0.0, 1.0, 3.0), 2.0);
  EXPECT_EQ(figure1_closed_form(1.0, 1.0, 1.0), 1.0);
}

TEST(Lovasz, ClosedFormIsTheSymmetrizedExtensionInSinkSideCoordinates) {
  // The printed formula reads x_i = 1 as "node i on the sink side" and
  // ignores edge direction. With y = 1 - x it matches the undirected
  // extension everywhere and the directed one wherever y1 <= y2.
  RandomState rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double theta = rng.uniform(0.0, 4.0);
    const Eigen::VectorXd y = random_point(2, rng);
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(2) - y;
    const double closed = figure1_closed_form(y[0], y[1], theta);
    EXPECT_NEAR(undirected_extension(kFig, x, theta), closed, 1e-12);
    if (y[0] <= y[1]) {
      EXPECT_NEAR(lovasz_eval(kF, x, theta), closed, 1e-12);
    }
  }
}

TEST(Lovasz, FigureOneValuesInSourceSideCoordinates) {
  // (x1, x2) = (0, 1) in the printed formula is x = (1, 0) here.
  EXPECT_DOUBLE_EQ(lovasz_eval(kF, vec({1.0, 0.0}), 3.0), 2.0);
  EXPECT_DOUBLE_EQ(lovasz_eval(kF, vec({0.0, 0.0}), 1.0), 1.0);
}

TEST(Lovasz, AgreesWithSetFunctionOnVertices) {
  RandomState rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 10;
    const CutGraph g = random_cut_graph(n, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
      std::vector<bool> in(n);
      Eigen::VectorXd x(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        in[i] = (m >> i) & 1u;
        x[static_cast<Eigen::Index>(i)] = in[i] ? 1.0 : 0.0;
      }
      ASSERT_EQ(lovasz_eval(f, x, theta), f.evaluate(in, theta));
    }
  }
}

TEST(Lovasz, RejectsPointsOutsideTheCube) {
  EXPECT_THROW(lovasz_eval(kF, vec({1.2, 0.0}), 1.0), DomainError);
  EXPECT_THROW(lovasz_eval(kF, vec({0.5, -1e-9}), 1.0), DomainError);
  EXPECT_THROW(lovasz_eval(kF, vec({0.5}), 1.0), StructureError);
}

TEST(LovaszSubgradient, InequalityOnRandomTriples) {
  RandomState rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double theta = rng.uniform(0.0, 4.0);
    const Eigen::VectorXd x = random_point(2, rng);
    const Eigen::VectorXd y = random_point(2, rng);
    const Eigen::VectorXd g = lovasz_subgradient(kF, x, theta);
    EXPECT_GE(lovasz_eval(kF, y, theta) - lovasz_eval(kF, x, theta) -
                  g.dot(y - x),
              -1e-9);
  }
}

TEST(LovaszSubgradient, GreedyIdentity) {
  RandomState rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const CutGraph g = random_cut_graph(6, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    const Eigen::VectorXd x = random_point(6, rng);
    const double f_empty = f.evaluate(std::vector<bool>(6, false), theta);
    EXPECT_NEAR(lovasz_subgradient(f, x, theta).dot(x) + f_empty,
                lovasz_eval(f, x, theta), 1e-12);
  }
}

TEST(LovaszSubgradient, TiesChangeTheVertexButNotTheValue) {
  // Edges s->1 (theta) and 2->t (3) only: tied coordinates give different
  // greedy vertices depending on which index comes first.
  const CutGraph g({"s", "1", "2", "t"}, 0, 3,
                   {{0, 1, {0.0, 1.0}}, {1, 2, {2.0, 0.0}}, {2, 3, {3.0, 0.0}}},
                   0.0, 4.0);
  const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
  // Reverse the node roles so the tie resolves the other way round.
  const CutGraph h({"s", "2", "1", "t"}, 0, 3,
                   {{0, 2, {0.0, 1.0}}, {2, 1, {2.0, 0.0}}, {1, 3, {3.0, 0.0}}},
                   0.0, 4.0);
  const SetFunctionSpec fh = SetFunctionSpec::from_graph(h);
  const Eigen::VectorXd x = vec({0.4, 0.4});
  const Eigen::VectorXd gf = lovasz_subgradient(f, x, 1.5);
  const Eigen::VectorXd gh = lovasz_subgradient(fh, x, 1.5);
  EXPECT_DOUBLE_EQ(lovasz_eval(f, x, 1.5), lovasz_eval(fh, x, 1.5));
  EXPECT_FALSE(gf.isApprox(Eigen::Vector2d(gh[1], gh[0])));
}

TEST(ThresholdRound, Basics) {
  EXPECT_EQ(threshold_round(vec({0.99, 0.2}), 0.05), Subset{0});
  EXPECT_EQ(threshold_round(vec({1.0, 1.0}), 0.01), (Subset{0, 1}));
  EXPECT_EQ(threshold_round(vec({1.0, 1.0}), 0.7), (Subset{0, 1}));
}

TEST(ThresholdRound, ConvergedFigureOnePointAboveTwo) {
  // For theta > 2 the optimum keeps node 1 with the source: x* = (1, 0).
  EXPECT_EQ(threshold_round(vec({0.97, 0.04}), 0.1), Subset{kN1});
  EXPECT_EQ(cut_value(kFig, {kN1}, 3.0), brute_force_min(kF, 3.0).value);
}

TEST(PhiRound, FigureOneAtThetaThree) {
  const DiscreteSolution s = phi_round(kF, vec({1.0, 0.0}), 3.0);
  EXPECT_EQ(s.members, Subset{kN1});
  EXPECT_EQ(s.value, 2.0);
}

TEST(PhiRound, IndicatorOfTheMinimumReturnsIt) {
  RandomState rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const CutGraph g = random_cut_graph(5, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    const DiscreteSolution best = brute_force_min(f, theta);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    for (std::size_t i : best.members) x[static_cast<Eigen::Index>(i)] = 1.0;
    const DiscreteSolution r = phi_round(f, x, theta);
    EXPECT_EQ(r.members, best.members);
    EXPECT_EQ(r.value, best.value);
  }
}

TEST(PhiRound, NeverWorseThanHalfThreshold) {
  RandomState rng(8);
  for (int i = 0; i < 100; ++i) {
    const double theta = rng.uniform(0.0, 4.0);
    const Eigen::VectorXd x = random_point(2, rng);
    const double half = cut_value(kFig, threshold_round(x, 0.5), theta);
    EXPECT_LE(phi_round(kF, x, theta).value, half);
  }
}

TEST(PhiRound, EpsOptimalPointRoundsToEpsOptimalSet) {
  RandomState rng(9);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const CutGraph g = random_cut_graph(6, 0.0, 4.0, rng);
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    const DiscreteSolution best = brute_force_min(f, theta);
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
      for (std::size_t i : best.members) x[static_cast<Eigen::Index>(i)] = 1.0;
      for (Eigen::Index i = 0; i < 6; ++i)
        x[i] = std::clamp(x[i] + rng.uniform(-0.3, 0.3), 0.0, 1.0);
      const double eps = lovasz_eval(f, x, theta) - best.value;
      ASSERT_GE(eps, -1e-12);
      EXPECT_LE(phi_round(f, x, theta).value - best.value, eps + 1e-12);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2000);
}

TEST(BruteForce, FigureOneValues) {
  EXPECT_EQ(brute_force_min(kF, 3.0).value, 2.0);
  EXPECT_EQ(brute_force_min(kF, 3.0).members, Subset{kN1});
  EXPECT_EQ(brute_force_min(kF, 1.0).value, 1.0);
  EXPECT_EQ(brute_force_min(kF, 1.0).members, Subset{});
}

TEST(BruteForce, TieAtThetaTwo) {
  const auto all = brute_force_minimizers(kF, 2.0);
  EXPECT_EQ(all.size(), 2u);
  EXPECT_EQ(brute_force_min(kF, 2.0).value, 2.0);
  EXPECT_EQ(brute_force_min(kF, 2.0).members, Subset{});
}

TEST(BruteForce, CapacityLimit) {
  SetFunctionSpec big{21, [](const std::vector<bool>&, double) { return 0.0; }};
  EXPECT_THROW(brute_force_min(big, 0.0), CapacityError);
}

TEST(Subsets, MembershipRoundTripAndFormatting) {
  const Subset s{1, 3};
  EXPECT_EQ(from_membership(to_membership(s, 5)), s);
  EXPECT_EQ(format_subset(s), "{1,3}");
  const std::vector<std::string> names{"a", "b", "c", "d"};
  EXPECT_EQ(format_subset(s, &names), "{b,d}");
  EXPECT_THROW(to_membership({7}, 5), DomainError);
}
