#include "doctest.h"

#include <random>

#include "cnndse/catalog.h"
#include "cnndse/scale.h"

using namespace cnndse;

namespace {

const AccountingReport& nin_report() {
  static const AccountingReport r = analyze(builtin("nin").architecture, 1);
  return r;
}

ClusterSpec tree(std::int64_t p, std::int64_t b = 2) {
  ClusterSpec c;
  c.workers = p;
  c.topology = Topology::kReductionTree;
  c.branching = b;
  return c;
}

ClusterSpec ps(std::int64_t p) {
  ClusterSpec c;
  c.workers = p;
  return c;
}

}  // namespace

TEST_CASE("tree depth") {
  CHECK(tree_depth(1, 2) == 0);
  CHECK(tree_depth(2, 2) == 1);
  CHECK(tree_depth(3, 2) == 2);
  CHECK(tree_depth(128, 2) == 7);
  CHECK(tree_depth(129, 2) == 8);
  CHECK(tree_depth(64, 4) == 3);
  CHECK(tree_depth(65, 4) == 4);
}

TEST_CASE("communication volume laws hold for random p") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> workers(1, 100000);
  const Count grad = 30'000'000;
  for (int i = 0; i < 500; ++i) {
    const auto p = workers(rng);
    const auto q = workers(rng);
    CAPTURE(p);
    CAPTURE(q);
    CHECK(comm_volume(grad, ps(p)) * static_cast<Count>(q) ==
          comm_volume(grad, ps(q)) * static_cast<Count>(p));
    const auto depth = static_cast<Count>(std::ceil(std::log2(static_cast<double>(p)) - 1e-12));
    CHECK(comm_volume(grad, tree(p)) == grad * 2 * depth);
    CHECK(comm_time(grad, tree(p)) == static_cast<double>(grad * 2 * depth) / 1e9);
  }
  for (std::int64_t p = 2; p <= 4096; ++p) {
    CAPTURE(p);
    const bool below = comm_volume(grad, tree(p)) < comm_volume(grad, ps(p));
    CHECK(below == (p >= 7));
  }
}

TEST_CASE("comm is independent of batch and compute is linear in it") {
  const auto a = iteration_time(nin_report(), tree(32), 256);
  const auto b = iteration_time(nin_report(), tree(32), 1024);
  CHECK(a.comm_bytes == b.comm_bytes);
  CHECK(a.comm_s == b.comm_s);
  CHECK(b.train_flops == 4 * a.train_flops);
  CHECK(b.compute_s == doctest::Approx(4 * a.compute_s));
  CHECK(a.comm_bytes == nin_report().totals.param_bytes * 2 * 5);
}

TEST_CASE("compute follows the efficiency-scaled peak") {
  ClusterSpec c = ps(4);
  c.throughput = 2e12;
  c.efficiency = Rational(1, 2);
  const auto e = iteration_time(nin_report(), c, 100);
  const double expected = 3.0 * static_cast<double>(nin_report().totals.forward_flops) * 100 /
                          (4 * 2e12 * 0.5);
  CHECK(e.compute_s == doctest::Approx(expected).epsilon(1e-12));
  CHECK(e.total_s == doctest::Approx(e.comm_s + e.compute_s));
  CHECK(e.comp_comm_ratio == doctest::Approx(e.compute_s / e.comm_s));
  CHECK_FALSE(e.idle_workers);
  CHECK(iteration_time(nin_report(), ps(8), 4).idle_workers);
}

TEST_CASE("single worker on a parameter-free model never communicates") {
  Architecture a;
  a.name = "pool";
  a.input_shape = {1, 1, 4, 4};
  a.layers = {LayerSpec::input("data"), LayerSpec::max_pool("p", "data", 2, 2)};
  const auto e = iteration_time(analyze(a, 1), ps(1), 1);
  CHECK(e.comm_s == 0);
  CHECK(std::isinf(e.comp_comm_ratio));
}

TEST_CASE("scaling curve") {
  const std::vector<std::int64_t> ps_workers = {1, 2, 4, 8, 16, 32, 64, 128};
  ClusterSpec c = tree(1);
  const auto curve = scaling_curve(nin_report(), c, ps_workers, 1024);
  REQUIRE(curve.points.size() == ps_workers.size());
  CHECK(curve.points.front().speedup == doctest::Approx(1));
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].compute_s < curve.points[i - 1].compute_s);
  }
  const auto csv = scaling_csv(curve);
  CHECK(csv.rfind("p,comm_s,compute_s,total_s,speedup,ratio\n", 0) == 0);

  // Parameter server: comm grows linearly, so the curve turns over.
  const auto flat = scaling_curve(nin_report(), ps(1), ps_workers, 1024);
  CHECK(flat.best_workers < 128);
  CHECK(flat.points.back().comm_s == doctest::Approx(128 * flat.points[0].comm_s));
  CHECK_THROWS_AS(scaling_curve(nin_report(), c, {}, 1024), ValidationError);
  CHECK_THROWS_AS(scaling_curve(nin_report(), c, {0}, 1024), ValidationError);
}

TEST_CASE("epoch estimates") {
  const TrainPlan small{1'280'000, 2, 256};
  const TrainPlan large{1'280'000, 2, 512};
  const auto a = training_time(nin_report(), tree(32), small);
  const auto b = training_time(nin_report(), tree(32), large);
  CHECK(a.iterations_per_epoch == 5000);
  CHECK(b.iterations_per_epoch == 2500);
  CHECK(b.comm_per_epoch_s * 2 == a.comm_per_epoch_s);
  CHECK(a.total_iterations == 10000);
  CHECK(training_time(nin_report(), ps(1), {1001, 1, 100}).iterations_per_epoch == 11);
  CHECK_THROWS_AS(training_time(nin_report(), ps(1), {0, 1, 1}), ValidationError);

  const auto ops = total_training_ops(nin_report(), {1'281'167, 47, 1024});
  const boost::multiprecision::cpp_int per_frame =
      static_cast<std::uint64_t>(nin_report().totals.forward_flops);
  CHECK(ops == 3 * per_frame * 1'281'167 * 47);
}

TEST_CASE("cluster validation") {
  ClusterSpec c;
  CHECK(topology_string(set_topology(c, "tree:4")) == "tree:4");
  CHECK(topology_string(set_topology(c, "ps")) == "ps");
  CHECK(topology_string(set_topology(c, "tree")) == "tree:2");
  CHECK_THROWS_AS(set_topology(c, "tree:1"), ValidationError);
  CHECK_THROWS_AS(set_topology(c, "tree:x"), ValidationError);
  CHECK_THROWS_AS(set_topology(c, "ring"), ValidationError);
  c.bandwidth = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = {};
  c.efficiency = Rational(3, 2);
  CHECK_THROWS_AS(validate(c), ValidationError);
}
