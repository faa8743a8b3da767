#include <doctest.h>

#include "../support/oracles.hpp"
#include "gslda/error.hpp"
#include "gslda/sample_weights.hpp"
#include "gslda/scatter_lda.hpp"

using namespace gslda;

namespace {

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Instance make_instance(Rng& rng, Index n, Index m) {
  Instance in;
  in.y = oracle::random_labels(rng, n);
  in.x = oracle::label_correlated(rng, in.y, m);
  return in;
}

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("response matrix validation") {
  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  CHECK_THROWS_WITH_AS(ResponseMatrix(x, Eigen::Vector2d(1, 1)), "degenerate class distribution",
                       Error);
  x(0, 0) = 0.5;
  CHECK_THROWS_AS(ResponseMatrix(x, Eigen::Vector2d(1, -1)), Error);
}

TEST_CASE("between-class vector") {
  SUBCASE("identical class means give zero") {
    Eigen::MatrixXd x(4, 1);
    x << 1, -1, 1, -1;
    Eigen::Vector4d y(1, 1, -1, -1);
    CHECK(between_class_vector(ResponseMatrix(x, y)).norm() == doctest::Approx(0.0));
  }
  SUBCASE("perfect feature gives sqrt(N)") {
    const Index n = 10;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) x(i, 0) = y(i) = i < n / 2 ? 1.0 : -1.0;
    CHECK(between_class_vector(ResponseMatrix(x, y))(0) == doctest::Approx(std::sqrt(10.0)));
  }
  SUBCASE("b b^T equals the direct between-class scatter") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
      auto in = make_instance(rng, 40, 6);
      const Eigen::VectorXd b = between_class_vector(ResponseMatrix(in.x, in.y));
      const auto d = oracle::dense_scatter(in.x, in.y, 1.0, 0.0);
      CHECK(max_abs(b * b.transpose() - d.sb) < 1e-10);
    }
  }
  SUBCASE("weighted scatter matches the weighted oracle") {
    Rng rng(12);
    auto in = make_instance(rng, 30, 5);
    Eigen::VectorXd raw(30);
    for (Index i = 0; i < 30; ++i) raw(i) = rng.uniform(0.1, 2.0);
    const SampleWeights w(raw);
    const ResponseMatrix rm(in.x, in.y);
    ScatterConfig cfg;
    cfg.gamma = 1.5;
    const auto d = oracle::dense_scatter(in.x, in.y, 1.5, cfg.ridge, &w.values());
    const Eigen::VectorXd b = between_class_vector(rm, &w);
    CHECK(max_abs(b * b.transpose() - d.sb) < 1e-10);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j)
        CHECK(within_class_entry(rm, cfg, i, j, &w) == doctest::Approx(d.sw(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("within-class entries") {
  SUBCASE("constant column has ridge only") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, -1, 1, 1, 1, -1;
    Eigen::Vector4d y(1, 1, -1, -1);
    ScatterConfig cfg;
    CHECK(within_class_entry(ResponseMatrix(x, y), cfg, 0, 0) == doctest::Approx(cfg.ridge));
  }
  SUBCASE("gamma = 2 hand expansion") {
    // Positives: column 0 = (1, -1), negatives: (1, 1, -1) ; mean_pos = 0, mean_neg = 1/3.
    Eigen::MatrixXd x(5, 1);
    x << 1, -1, 1, 1, -1;
    Eigen::VectorXd y(5);
    y << 1, 1, -1, -1, -1;
    ScatterConfig cfg;
    cfg.gamma = 2.0;
    cfg.ridge = 0.0;
    const double pos = 1.0 + 1.0;
    const double neg = 2 * (2.0 / 3) * (2.0 / 3) + (4.0 / 3) * (4.0 / 3);
    CHECK(within_class_entry(ResponseMatrix(x, y), cfg, 0, 0) == doctest::Approx(pos + 2.0 * neg));
  }
  SUBCASE("symmetric and equal to the pooled scatter") {
    Rng rng(13);
    auto in = make_instance(rng, 50, 7);
    const ResponseMatrix rm(in.x, in.y);
    ScatterConfig cfg;
    const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j) {
        CHECK(within_class_entry(rm, cfg, i, j) == doctest::Approx(within_class_entry(rm, cfg, j, i)).epsilon(1e-13));
        CHECK(std::abs(within_class_entry(rm, cfg, i, j) - d.sw(i, j)) < 1e-12 * std::max(1.0, std::abs(d.sw(i, j))));
      }
  }
}

TEST_CASE("rank-one augmentation") {
  Rng rng(21);
  auto in = make_instance(rng, 60, 12);
  const ResponseMatrix rm(in.x, in.y);
  ScatterConfig cfg;
  const ScatterContext ctx(rm, cfg);
  const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);

  SUBCASE("base case is the scalar inverse") {
    const ScatterState s = rank_one_augment(ScatterState{}, 3, ctx);
    CHECK(s.inv_sw(0, 0) == doctest::Approx(1.0 / d.sw(3, 3)));
  }
  SUBCASE("sequence matches direct inversion") {
    ScatterState s;
    for (Index i : {4, 0, 9, 2, 7}) {
      s = rank_one_augment(s, i, ctx);
      const Eigen::MatrixXd direct = oracle::restrict(d.sw, s.selected).inverse();
      CHECK(max_abs(s.inv_sw - direct) < 1e-8);
      CHECK(s.eigenvalue == doctest::Approx(s.b_restricted.dot(s.inv_sw * s.b_restricted)).epsilon(1e-10));
    }
    CHECK_THROWS_WITH_AS(rank_one_augment(s, 9, ctx), "feature already selected", Error);
  }
  SUBCASE("duplicate column without ridge is singular") {
    Eigen::MatrixXd x2(in.x.rows(), 3);
    x2 << in.x.col(0), in.x.col(1), in.x.col(0);
    const ResponseMatrix rm2(x2, in.y);
    ScatterConfig c0;
    c0.ridge = 0.0;
    const ScatterContext ctx2(rm2, c0);
    ScatterState s = rank_one_augment(ScatterState{}, 0, ctx2);
    CHECK_THROWS_AS(rank_one_augment(s, 2, ctx2), SingularAugmentation);
    CHECK_FALSE(candidate_eigenvalue(s, 2, ctx2).has_value());
  }
}

TEST_CASE("candidate eigenvalues") {
  Rng rng(31);
  SUBCASE("identity scatter gives the squared norm") {
    // Zero within-class variance: every positive identical, every negative identical.
    Eigen::MatrixXd x(6, 3);
    Eigen::VectorXd y(6);
    for (Index i = 0; i < 6; ++i) {
      y(i) = i < 3 ? 1.0 : -1.0;
      x.row(i) = i < 3 ? Eigen::RowVector3d(1, -1, 1) : Eigen::RowVector3d(-1, -1, -1);
    }
    const ResponseMatrix rm(x, y);
    ScatterConfig cfg;
    cfg.ridge = 1.0;
    const ScatterContext ctx(rm, cfg);
    const ScatterState s = rank_one_augment(ScatterState{}, 0, ctx);
    const Eigen::VectorXd b = ctx.between_class();
    CHECK(*candidate_eigenvalue(s, 2, ctx) == doctest::Approx(b(0) * b(0) + b(2) * b(2)));
  }
  SUBCASE("monotone and equal to the dense generalized eigenvalue") {
    for (int t = 0; t < 20; ++t) {
      auto in = make_instance(rng, 40, 6);
      const ResponseMatrix rm(in.x, in.y);
      ScatterConfig cfg;
      const ScatterContext ctx(rm, cfg);
      const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
      ScatterState s = rank_one_augment(ScatterState{}, 1, ctx);
      s = rank_one_augment(s, 4, ctx);
      std::vector<Index> cands{0, 2, 3, 5};
      const auto batch = candidate_eigenvalues(s, cands, ctx);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const auto v = candidate_eigenvalue(s, cands[c], ctx);
        REQUIRE(v.has_value());
        CHECK(*v >= s.eigenvalue - 1e-12);
        CHECK(*v == doctest::Approx(*batch[c]).epsilon(1e-10));
        auto idx = s.selected;
        idx.push_back(cands[c]);
        CHECK(std::abs(*v - oracle::dense_eigenvalue(d, idx)) < 1e-8 * std::max(1.0, *v));
      }
      CHECK(std::abs(s.eigenvalue - oracle::dense_eigenvalue(d, s.selected)) < 1e-8 * std::max(1.0, s.eigenvalue));
    }
  }
}

TEST_CASE("forward selection") {
  Rng rng(41);
  SUBCASE("matches exhaustive step one and from-scratch greedy") {
    for (int t = 0; t < 30; ++t) {
      auto in = make_instance(rng, 50, 10);
      const ResponseMatrix rm(in.x, in.y);
      ScatterConfig cfg;
      cfg.max_features = 3;
      const ScatterState s = forward_select(rm, cfg);
      const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
      CHECK(s.selected == oracle::reference_greedy(d, 3));
      CHECK(s.selected.size() == 3);
    }
  }
  SUBCASE("eigenvalue is non-decreasing along the path") {
    auto in = make_instance(rng, 80, 15);
    const ResponseMatrix rm(in.x, in.y);
    ScatterConfig cfg;
    const ScatterContext ctx(rm, cfg);
    ForwardSelector sel(ctx);
    double last = 0.0;
    for (int k = 0; k < 8; ++k) {
      REQUIRE(sel.step().has_value());
      CHECK(sel.state().eigenvalue >= last - 1e-12);
      last = sel.state().eigenvalue;
    }
  }
  SUBCASE("duplicate best columns pick the lower index") {
    auto in = make_instance(rng, 40, 4);
    Eigen::MatrixXd x(40, 6);
    Index best = 0;
    ScatterConfig cfg;
    cfg.max_features = 1;
    best = forward_select(ResponseMatrix(in.x, in.y), cfg).selected[0];
    x << in.x.col(best), in.x, in.x.col(best);
    CHECK(forward_select(ResponseMatrix(x, in.y), cfg).selected[0] == 0);
  }
  SUBCASE("errors") {
    auto in = make_instance(rng, 20, 3);
    ScatterConfig cfg;
    cfg.max_features = 4;
    CHECK_THROWS_WITH_AS(forward_select(ResponseMatrix(in.x, in.y), cfg),
                         "max_features exceeds feature count", Error);
    Eigen::MatrixXd flat = Eigen::MatrixXd::Ones(20, 2);
    cfg.max_features = 1;
    CHECK_THROWS_WITH_AS(forward_select(ResponseMatrix(flat, in.y), cfg), "no separating feature",
                         Error);
  }
}

TEST_CASE("greedy never beats the exhaustive best subset") {
  Rng rng(42);
  for (int t = 0; t < 10; ++t) {
    auto in = make_instance(rng, 40, 8);
    ScatterConfig cfg;
    cfg.max_features = 3;
    const ScatterState s = forward_select(ResponseMatrix(in.x, in.y), cfg);
    const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
    double best = 0.0;
    for (Index a = 0; a < 8; ++a)
      for (Index b = a + 1; b < 8; ++b)
        for (Index c = b + 1; c < 8; ++c) best = std::max(best, oracle::dense_eigenvalue(d, {a, b, c}));
    CHECK(s.eigenvalue <= best * (1 + 1e-9));
  }
}

TEST_CASE("backward elimination") {
  Rng rng(51);
  SUBCASE("removes a duplicated selected feature") {
    auto in = make_instance(rng, 60, 4);
    Eigen::MatrixXd x(60, 5);
    x << in.x, in.x.col(1);
    const ResponseMatrix rm(x, in.y);
    ScatterConfig cfg;
    cfg.ridge = 1e-3;
    cfg.elimination_fraction = 1e-3;
    const ScatterContext ctx(rm, cfg);
    ScatterState s = make_state({0, 1, 2, 4}, ctx);
    const ScatterState e = backward_eliminate(s, ctx);
    CHECK(e.selected.size() == 3);
    const bool dup_gone = std::count(e.selected.begin(), e.selected.end(), 1) +
                              std::count(e.selected.begin(), e.selected.end(), 4) == 1;
    CHECK(dup_gone);
    CHECK(std::abs(e.eigenvalue - s.eigenvalue) < 1e-4 * s.eigenvalue);
    const auto d = oracle::dense_scatter(x, in.y, 1.0, cfg.ridge);
    CHECK(max_abs(e.inv_sw - oracle::restrict(d.sw, e.selected).inverse()) < 1e-8);
  }
  SUBCASE("essential features stay") {
    // Three independent perfect-ish features on disjoint sample groups.
    Eigen::MatrixXd x(12, 2);
    Eigen::VectorXd y(12);
    for (Index i = 0; i < 12; ++i) {
      y(i) = i % 2 == 0 ? 1.0 : -1.0;
      x(i, 0) = i < 6 ? y(i) : 1.0;
      x(i, 1) = i >= 6 ? y(i) : 1.0;
    }
    const ResponseMatrix rm(x, y);
    ScatterConfig cfg;
    const ScatterContext ctx(rm, cfg);
    const ScatterState s = make_state({0, 1}, ctx);
    CHECK(backward_eliminate(s, ctx).selected == s.selected);
  }
  SUBCASE("downdate agrees with direct inversion") {
    auto in = make_instance(rng, 50, 8);
    const ResponseMatrix rm(in.x, in.y);
    ScatterConfig cfg;
    const ScatterContext ctx(rm, cfg);
    const ScatterState s = make_state({0, 3, 5, 6}, ctx);
    const ScatterState r = detail::remove_position(s, 1);
    const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
    CHECK(max_abs(r.inv_sw - oracle::restrict(d.sw, r.selected).inverse()) < 1e-8);
    const Eigen::VectorXd costs = detail::removal_costs(s);
    CHECK(costs(1) == doctest::Approx(s.eigenvalue - r.eigenvalue).epsilon(1e-8));
  }
}

TEST_CASE("lda weights") {
  Rng rng(61);
  auto in = make_instance(rng, 60, 6);
  const ResponseMatrix rm(in.x, in.y);
  ScatterConfig cfg;
  const ScatterContext ctx(rm, cfg);

  const Eigen::VectorXd one = lda_weights(make_state({2}, ctx));
  CHECK(std::abs(one(0)) == doctest::Approx(1.0));

  const ScatterState s = make_state({0, 2, 3, 5}, ctx);
  const Eigen::VectorXd w = lda_weights(s);
  CHECK(w.norm() == doctest::Approx(1.0));
  const auto d = oracle::dense_scatter(in.x, in.y, 1.0, cfg.ridge);
  const Eigen::MatrixXd sb = oracle::restrict(d.sb, s.selected);
  const Eigen::MatrixXd sw = oracle::restrict(d.sw, s.selected);
  auto rayleigh = [&](const Eigen::VectorXd& v) { return v.dot(sb * v) / v.dot(sw * v); };
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd v(4);
    for (Index k = 0; k < 4; ++k) v(k) = rng.normal();
    CHECK(rayleigh(w) >= rayleigh(v.normalized()) - 1e-12);
  }

  ScatterState scaled = s;
  scaled.b_restricted *= 3.5;
  CHECK(max_abs(lda_weights(scaled) - w) < 1e-12);

  ScatterState zero = s;
  zero.b_restricted.setZero();
  CHECK_THROWS_WITH_AS(lda_weights(zero), "zero between-class direction", Error);
}
