#include "cnndse/scale.h"

#include <cmath>
#include <limits>
#include <sstream>

namespace cnndse {

void validate(const ClusterSpec& c) {
  if (c.workers < 1) throw ValidationError("workers must be >= 1", "workers");
  if (!(c.bandwidth > 0) || !std::isfinite(c.bandwidth)) {
    throw ValidationError("bandwidth must be positive", "bandwidth");
  }
  if (!(c.throughput > 0) || !std::isfinite(c.throughput)) {
    throw ValidationError("throughput must be positive", "throughput");
  }
  if (c.efficiency <= 0 || c.efficiency > 1) {
    throw ValidationError("efficiency must lie in (0, 1]", "efficiency");
  }
  if (c.topology == Topology::kReductionTree && c.branching < 2) {
    throw ValidationError("tree branching factor must be >= 2", "topology");
  }
}

ClusterSpec& set_topology(ClusterSpec& c, const std::string& text) {
  if (text == "ps" || text == "parameter-server") {
    c.topology = Topology::kParameterServer;
    return c;
  }
  if (text == "tree" || text == "reduction-tree") {
    c.topology = Topology::kReductionTree;
    c.branching = 2;
    return c;
  }
  for (const std::string prefix : {"tree:", "reduction-tree:"}) {
    if (text.rfind(prefix, 0) == 0) {
      const auto rest = text.substr(prefix.size());
      try {
        std::size_t used = 0;
        const auto b = std::stoll(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(rest);
        if (b < 2) throw ValidationError("tree branching factor must be >= 2", "topology");
        c.topology = Topology::kReductionTree;
        c.branching = b;
        return c;
      } catch (const std::logic_error&) {
        break;
      }
    }
  }
  throw ValidationError("unknown topology '" + text + "' (expected ps, tree or tree:B)",
                        "topology");
}

std::string topology_string(const ClusterSpec& c) {
  if (c.topology == Topology::kParameterServer) return "ps";
  return "tree:" + std::to_string(c.branching);
}

std::int64_t tree_depth(std::int64_t workers, std::int64_t branching) {
  std::int64_t depth = 0;
  Count reach = 1;
  while (reach < static_cast<Count>(workers)) {
    reach *= static_cast<Count>(branching);
    ++depth;
  }
  return depth;
}

Count comm_volume(Count grad_bytes, const ClusterSpec& c) {
  validate(c);
  if (c.topology == Topology::kParameterServer) {
    return grad_bytes * static_cast<Count>(c.workers);
  }
  return grad_bytes * static_cast<Count>(c.branching) *
         static_cast<Count>(tree_depth(c.workers, c.branching));
}

double comm_time(Count grad_bytes, const ClusterSpec& c) {
  return static_cast<double>(comm_volume(grad_bytes, c)) / c.bandwidth;
}

Count forward_flops_per_frame(const AccountingReport& report) {
  return report.totals.forward_flops / static_cast<Count>(report.options.batch);
}

CostEstimate iteration_time(const AccountingReport& report, const ClusterSpec& c,
                            std::int64_t batch) {
  validate(c);
  if (batch < 1) throw ValidationError("batch must be >= 1", "batch");
  CostEstimate e;
  e.workers = c.workers;
  e.batch = batch;
  e.idle_workers = batch < c.workers;
  e.comm_bytes = comm_volume(report.totals.param_bytes, c);
  e.comm_s = static_cast<double>(e.comm_bytes) / c.bandwidth;
  e.train_flops = 3 * forward_flops_per_frame(report) * static_cast<Count>(batch);
  e.compute_s = static_cast<double>(e.train_flops) /
                (static_cast<double>(c.workers) * c.throughput * to_double(c.efficiency));
  e.total_s = e.comm_s + e.compute_s;
  e.comp_comm_ratio = e.comm_s > 0 ? e.compute_s / e.comm_s
                                   : std::numeric_limits<double>::infinity();
  return e;
}

ScalingCurve scaling_curve(const AccountingReport& report, const ClusterSpec& base,
                           const std::vector<std::int64_t>& workers, std::int64_t batch) {
  if (workers.empty()) throw ValidationError("need at least one worker count", "workers");
  ClusterSpec one = base;
  one.workers = 1;
  const double t1 = iteration_time(report, one, batch).total_s;
  ScalingCurve curve;
  double best = -1;
  for (auto p : workers) {
    if (p < 1) throw ValidationError("worker counts must be >= 1", "workers");
    ClusterSpec c = base;
    c.workers = p;
    auto e = iteration_time(report, c, batch);
    e.speedup = t1 / e.total_s;
    if (e.speedup > best || (e.speedup == best && p < curve.best_workers)) {
      best = e.speedup;
      curve.best_workers = p;
    }
    curve.points.push_back(e);
  }
  return curve;
}

std::string scaling_csv(const ScalingCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "p,comm_s,compute_s,total_s,speedup,ratio\n";
  for (const auto& e : curve.points) {
    out << e.workers << ',' << e.comm_s << ',' << e.compute_s << ',' << e.total_s << ','
        << e.speedup << ',' << e.comp_comm_ratio << '\n';
  }
  return out.str();
}

void validate(const TrainPlan& plan) {
  if (plan.dataset_frames < 1) {
    throw ValidationError("dataset_frames must be >= 1", "plan.dataset_frames");
  }
  if (plan.epochs < 1) throw ValidationError("epochs must be >= 1", "plan.epochs");
  if (plan.batch < 1) throw ValidationError("batch must be >= 1", "plan.batch");
}

TrainingEstimate training_time(const AccountingReport& report, const ClusterSpec& c,
                               const TrainPlan& plan) {
  validate(plan);
  const auto it = iteration_time(report, c, plan.batch);
  TrainingEstimate t;
  t.iterations_per_epoch = (plan.dataset_frames + plan.batch - 1) / plan.batch;
  t.total_iterations = t.iterations_per_epoch * plan.epochs;
  t.comm_per_epoch_s = it.comm_s * static_cast<double>(t.iterations_per_epoch);
  t.compute_per_epoch_s = it.compute_s * static_cast<double>(t.iterations_per_epoch);
  t.total_s = it.total_s * static_cast<double>(t.total_iterations);
  return t;
}

boost::multiprecision::cpp_int total_training_ops(const AccountingReport& report,
                                                  const TrainPlan& plan) {
  if (plan.dataset_frames < 0 || plan.epochs < 0) {
    throw ValidationError("frames and epochs must be >= 0", "plan");
  }
  using boost::multiprecision::cpp_int;
  const Count per_frame = forward_flops_per_frame(report);
  cpp_int hi = static_cast<std::uint64_t>(per_frame >> 64);
  cpp_int lo = static_cast<std::uint64_t>(per_frame);
  cpp_int f = (hi << 64) + lo;
  return 3 * f * plan.dataset_frames * plan.epochs;
}

}  // namespace cnndse
