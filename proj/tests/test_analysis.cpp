#include <gtest/gtest.h>

#include <numeric>

#include "pathweave/analysis.hpp"
#include "pathweave/evaluator.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace pathweave;

namespace {

PathMatrix cycle(std::size_t n) {
  std::vector<std::pair<VertexId, VertexId>> p;
  for (VertexId i = 0; i < n; ++i) p.emplace_back(i, static_cast<VertexId>((i + 1) % n));
  return PathMatrix::from_pattern(n, p);
}

double l1(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

// seed . sum_{k<=steps} P^k with P the row-normalized z; zero rows stay zero.
std::vector<double> dense_spread(const oracle::Dense& z, const std::vector<double>& seed,
                                 std::size_t steps) {
  const std::size_t n = z.n;
  oracle::Dense p(n);
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0;
    for (std::size_t j = 0; j < n; ++j) out += z(i, j);
    for (std::size_t j = 0; j < n; ++j) p(i, j) = out > 0 ? z(i, j) / out : 0.0;
  }
  std::vector<double> total(n, 0.0);
  oracle::Dense power = oracle::identity(n);
  for (std::size_t k = 0; k <= steps; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) total[j] += seed[i] * power(i, j);
    power = oracle::mul(power, p);
  }
  return total;
}

PathMatrix strongly_connected(gen::Rng& rng, std::size_t n, double density, bool real) {
  // A Hamiltonian cycle plus random extra entries.
  auto extra = gen::random_matrix(rng, n, density, !real);
  std::vector<MatrixEntry> e;
  extra.for_each_nonzero([&](VertexId i, VertexId j, double v) { e.push_back({i, j, v}); });
  for (VertexId i = 0; i < n; ++i) {
    VertexId j = static_cast<VertexId>((i + 1) % n);
    if (!extra.at(i, j)) e.push_back({i, j, real ? gen::uniform(rng, 1, 4) * 0.5 : 1.0});
  }
  return PathMatrix::from_entries(n, e);
}

}  // namespace

// ---- geodesics ----

TEST(Geodesic, CitesSlice) {
  auto t = gen::fixture1();
  auto r = shortest_paths(slice_matrix(t, "cites"));
  auto id = [&](const char* v) { return t.vertices().id_of(v); };
  EXPECT_EQ(r.distance(id("a1"), id("a3")), 1u);
  EXPECT_FALSE(r.distance(id("a3"), id("a1")));
  EXPECT_EQ(r.distance(id("a3"), id("a3")), 0u);
}

TEST(Geodesic, IdentityHasNoEccentricities) {
  auto r = shortest_paths(PathMatrix::identity(4));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_FALSE(r.eccentricity[i]);
    EXPECT_FALSE(r.closeness[i]);
    EXPECT_EQ(r.reach[i], 0u);
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) EXPECT_FALSE(r.distance(i, j));
  }
  EXPECT_FALSE(r.radius);
  EXPECT_FALSE(r.diameter);
}

TEST(Geodesic, ThreeCycle) {
  auto z = cycle(3);
  auto r = shortest_paths(z);
  auto want = oracle::power_distances(oracle::from_matrix(z));
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(r.distance(k / 3, k % 3), want[k]);
  EXPECT_EQ(r.diameter, 2u);
  EXPECT_EQ(r.radius, 2u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(*r.closeness[i], 1.5);
}

TEST(Geodesic, MatchesMatrixPowers) {
  gen::Rng rng(31);
  for (int k = 0; k < 300; ++k) {
    std::size_t n = gen::uniform(rng, 1, 12);
    auto z = gen::random_matrix(rng, n, std::uniform_real_distribution<double>(0.02, 0.5)(rng),
                                gen::coin(rng, 0.5));
    if (gen::coin(rng, 0.3) && z.is_boolean()) z = gen::as_complement(z);
    auto r = shortest_paths(z);
    auto want = oracle::power_distances(oracle::from_matrix(z));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        auto got = r.distance(i, j);
        auto exp = want[i * n + j];
        ASSERT_EQ(got.has_value(), exp.has_value()) << i << "," << j;
        if (got) ASSERT_EQ(*got, *exp);
      }
    std::optional<std::uint32_t> lo, hi;
    for (const auto& e : r.eccentricity)
      if (e) {
        lo = lo ? std::min(*lo, *e) : *e;
        hi = hi ? std::max(*hi, *e) : *e;
      }
    EXPECT_EQ(r.radius, lo);
    EXPECT_EQ(r.diameter, hi);
  }
}

TEST(Geodesic, ClosenessOverReachableTargets) {
  // 0 -> 1 -> 2, nothing back.
  auto r = shortest_paths(PathMatrix::from_pattern(3, {{0, 1}, {1, 2}}));
  EXPECT_DOUBLE_EQ(*r.closeness[0], 1.5);
  EXPECT_EQ(r.reach[0], 2u);
  EXPECT_DOUBLE_EQ(*r.closeness[1], 1.0);
  EXPECT_FALSE(r.closeness[2]);
  EXPECT_EQ(r.eccentricity[0], 2u);
  EXPECT_FALSE(r.eccentricity[1]);
}

// ---- PageRank ----

TEST(PageRank, MergedMatrixIsRowStochastic) {
  gen::Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    std::size_t n = gen::uniform(rng, 1, 20);
    auto z = gen::random_matrix(rng, n, 0.2, gen::coin(rng, 0.5));
    auto m = merged_transition_matrix(z, 0.85);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += m[i * n + j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(PageRank, ThreeCycleIsUniform) {
  auto r = pagerank(cycle(3), {0.85, 1e-12, 1000});
  for (double v : r.rank) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(PageRank, TwoVerticesMatchDenseOracle) {
  auto z = PathMatrix::from_pattern(2, {{0, 1}});
  auto r = pagerank(z, {0.85, 1e-13, 10000});
  auto want = oracle::dense_pagerank(oracle::from_matrix(z), 0.85, 1e-15);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(r.rank[i], want[i], 1e-9);
}

TEST(PageRank, NoTeleportationOnStronglyConnectedGraph) {
  gen::Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    auto z = strongly_connected(rng, gen::uniform(rng, 3, 15), 0.2, false);
    // An aperiodic chain: add one self-loop.
    auto e = z.entries();
    if (!z.at(0, 0)) e.push_back({0, 0, 1.0});
    z = PathMatrix::from_entries(z.n(), e);
    auto r = pagerank(z, {1.0, 1e-13, 100000});
    auto want = oracle::dense_pagerank(oracle::from_matrix(z), 1.0, 1e-15);
    for (std::size_t i = 0; i < z.n(); ++i) EXPECT_NEAR(r.rank[i], want[i], 1e-9);
  }
}

TEST(PageRank, MatchesDenseOracle) {
  gen::Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    std::size_t n = gen::uniform(rng, 1, 25);
    bool boolean = gen::coin(rng, 0.5);
    auto z = gen::random_matrix(rng, n, 0.15, boolean);
    if (boolean && gen::coin(rng, 0.3)) z = gen::as_complement(z);
    double delta = std::uniform_real_distribution<double>(0.5, 0.95)(rng);
    auto r = pagerank(z, {delta, 1e-13, 100000});
    auto want = oracle::dense_pagerank(oracle::from_matrix(z), delta, 1e-15);
    EXPECT_NEAR(l1(r.rank), 1.0, 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(r.rank[i], want[i], 1e-9);
      EXPECT_GT(r.rank[i], 0.0);
    }
  }
}

TEST(PageRank, NonConvergenceReportsResidual) {
  try {
    pagerank(PathMatrix::from_pattern(4, {{0, 1}, {1, 2}}), {0.85, 1e-15, 2});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
  }
}

TEST(PageRank, ConfigValidation) {
  auto z = cycle(3);
  EXPECT_THROW(pagerank(z, {0.0, 1e-9, 10}), DomainError);
  EXPECT_THROW(pagerank(z, {1.5, 1e-9, 10}), DomainError);
  EXPECT_THROW(pagerank(z, {0.85, 0.0, 10}), DomainError);
  EXPECT_THROW(pagerank(z, {0.85, 1e-9, 0}), DomainError);
}

TEST(PageRank, CoauthorshipRanks) {
  auto t = gen::fixture1();
  auto z = evaluate(parse("A[authored] . A[authored]' & not(I)"), t);
  auto r = pagerank(z, {});
  EXPECT_NEAR(l1(r.rank), 1.0, 1e-12);
  EXPECT_NEAR(r.rank[t.vertices().id_of("h1")], r.rank[t.vertices().id_of("h2")], 1e-12);
}

// ---- spreading activation ----

TEST(Spread, ZeroStepsReturnsSeed) {
  std::vector<double> seed{0.5, 0.0, 2.0};
  EXPECT_EQ(spreading_activation(cycle(3), seed, {0, 0.5, 0.1}), seed);
}

TEST(Spread, MatchesDensePowers) {
  gen::Rng rng(19);
  for (int k = 0; k < 40; ++k) {
    std::size_t n = gen::uniform(rng, 2, 15);
    auto z = strongly_connected(rng, n, 0.25, gen::coin(rng, 0.5));
    std::vector<double> seed(n);
    for (auto& s : seed) s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t steps = gen::uniform(rng, 1, 8);
    auto got = spreading_activation(z, seed, {steps, 1.0, 0.0});
    auto want = dense_spread(oracle::from_matrix(z), seed, steps);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(Spread, ComplementStorageAgrees) {
  gen::Rng rng(20);
  auto z = gen::random_matrix(rng, 12, 0.3, true);
  std::vector<double> seed(12, 0.0);
  seed[3] = 1.0;
  auto a = spreading_activation(z, seed, {4, 0.8, 0.01});
  auto b = spreading_activation(gen::as_complement(z), seed, {4, 0.8, 0.01});
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Spread, HighThresholdKeepsOnlySeed) {
  std::vector<double> seed{1.0, 0.0, 0.0};
  EXPECT_EQ(spreading_activation(cycle(3), seed, {5, 1.0, 10.0}), seed);
}

TEST(Spread, DecayAttenuates) {
  auto got = spreading_activation(cycle(3), {1.0, 0.0, 0.0}, {3, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(got[0], 1.0 + 0.125);
  EXPECT_DOUBLE_EQ(got[1], 0.5);
  EXPECT_DOUBLE_EQ(got[2], 0.25);
}

TEST(Spread, RejectsBadInputs) {
  auto z = cycle(3);
  EXPECT_THROW(spreading_activation(z, {1.0, 0.0}, {}), DomainError);
  EXPECT_THROW(spreading_activation(z, {-1.0, 0.0, 0.0}, {}), DomainError);
  EXPECT_THROW(spreading_activation(z, {1.0, 0.0, 0.0}, {1, 1.5, 0.0}), DomainError);
}

// ---- assortativity ----

TEST(Assortativity, ScalarPerfectlyAssortative) {
  auto z = PathMatrix::from_pattern(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
  EXPECT_NEAR(assortativity_scalar(z, VertexProperty::scalars({1.0, 1.0, 2.0, 2.0})), 1.0, 1e-12);
}

TEST(Assortativity, ScalarPerfectlyDisassortative) {
  auto z = PathMatrix::from_pattern(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 0}, {2, 1}, {3, 0}, {3, 1}});
  EXPECT_NEAR(assortativity_scalar(z, VertexProperty::scalars({-1.0, -1.0, 1.0, 1.0})), -1.0, 1e-12);
}

TEST(Assortativity, ScalarMatchesWeightedPearson) {
  gen::Rng rng(41);
  for (int k = 0; k < 100; ++k) {
    auto z = gen::random_matrix(rng, 6, 0.5, false);
    std::vector<double> prop(6);
    for (auto& p : prop) p = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    std::vector<double> w, x, y;
    z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
      w.push_back(v);
      x.push_back(prop[i]);
      y.push_back(prop[j]);
    });
    double want;
    try {
      want = oracle::weighted_pearson(w, x, y);
      if (!std::isfinite(want)) continue;
      EXPECT_NEAR(assortativity_scalar(z, VertexProperty::scalars(prop)), want, 1e-12);
    } catch (const DomainError&) {
      ADD_FAILURE() << "unexpected degenerate case";
    }
  }
}

TEST(Assortativity, UnitWeightsMatchEdgeFormula) {
  gen::Rng rng(42);
  for (int k = 0; k < 100; ++k) {
    auto z = gen::random_matrix(rng, 10, 0.3, true);
    std::vector<double> prop(10);
    for (auto& p : prop) p = static_cast<double>(gen::uniform(rng, 0, 5));
    std::vector<double> j, h;
    z.for_each_nonzero([&](VertexId a, VertexId b, double) {
      j.push_back(prop[a]);
      h.push_back(prop[b]);
    });
    double want = oracle::edge_pearson(j, h);
    if (!std::isfinite(want) || j.size() < 2) continue;
    EXPECT_NEAR(assortativity_scalar(z, VertexProperty::scalars(prop)), want, 1e-12);
  }
}

TEST(Assortativity, CategoricalFixtures) {
  auto cats = VertexProperty::categories({"x", "x", "y", "y"});
  auto within = PathMatrix::from_pattern(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
  EXPECT_NEAR(assortativity_categorical(within, cats), 1.0, 1e-12);
  auto across = PathMatrix::from_pattern(4, {{0, 2}, {1, 3}, {2, 0}, {3, 1}});
  EXPECT_NEAR(assortativity_categorical(across, cats), -1.0, 1e-12);
}

TEST(Assortativity, CategoricalMatchesFormula) {
  gen::Rng rng(43);
  const char* names[] = {"p", "q", "r"};
  for (int k = 0; k < 100; ++k) {
    auto z = gen::random_matrix(rng, 8, 0.4, gen::coin(rng, 0.5));
    std::vector<std::string> prop(8);
    for (auto& p : prop) p = names[gen::uniform(rng, 0, 2)];
    std::vector<double> w;
    std::vector<std::string> a, b;
    z.for_each_nonzero([&](VertexId i, VertexId j, double v) {
      w.push_back(v);
      a.push_back(prop[i]);
      b.push_back(prop[j]);
    });
    if (w.empty()) continue;
    double want = oracle::categorical_r(w, a, b);
    if (!std::isfinite(want)) continue;
    EXPECT_NEAR(assortativity_categorical(z, VertexProperty::categories(prop)), want, 1e-12);
  }
}

TEST(Assortativity, ScaleInvariance) {
  gen::Rng rng(44);
  for (int k = 0; k < 30; ++k) {
    auto z = gen::random_matrix(rng, 8, 0.5, false);
    std::vector<double> prop(8);
    for (auto& p : prop) p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<std::string> cats(8);
    for (std::size_t i = 0; i < 8; ++i) cats[i] = i % 3 ? "a" : "b";
    double lambda = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    auto s = scale(z, lambda);
    EXPECT_NEAR(assortativity_scalar(z, VertexProperty::scalars(prop)),
                assortativity_scalar(s, VertexProperty::scalars(prop)), 1e-12);
    EXPECT_NEAR(assortativity_categorical(z, VertexProperty::categories(cats)),
                assortativity_categorical(s, VertexProperty::categories(cats)), 1e-12);
  }
}

TEST(Assortativity, Errors) {
  auto z = PathMatrix::from_pattern(3, {{0, 1}, {1, 2}});
  try {
    assortativity_scalar(z, VertexProperty::scalars({2.0, 2.0, 2.0}));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate property"), std::string::npos);
  }
  try {
    assortativity_categorical(z, VertexProperty::categories({"a", "a", "a"}));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate: one category"), std::string::npos);
  }
  EXPECT_THROW(assortativity_scalar(PathMatrix::zeros(3), VertexProperty::scalars({1, 2, 3})),
               DomainError);
  auto partial = VertexProperty::scalars({1.0, 2.0, 3.0});
  partial.scalar[2].reset();
  EXPECT_THROW(assortativity_scalar(z, partial), DomainError);
}
