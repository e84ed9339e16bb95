#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cnndse/accounting.h"
#include "cnndse/types.h"

namespace cnndse {

enum class Topology { kParameterServer, kReductionTree };

struct ClusterSpec {
  std::int64_t workers = 1;
  double bandwidth = 1e9;  // bytes/s, each direction
  Topology topology = Topology::kParameterServer;
  std::int64_t branching = 2;  // reduction tree only
  double throughput = 1e12;    // peak FLOP/s per worker
  Rational efficiency{1, 5};   // fraction of peak achieved
};

void validate(const ClusterSpec& cluster);

// "ps", "tree", "tree:4".
ClusterSpec& set_topology(ClusterSpec& cluster, const std::string& text);
std::string topology_string(const ClusterSpec& cluster);

// Smallest d with b^d >= p.
std::int64_t tree_depth(std::int64_t workers, std::int64_t branching);

// Bytes crossing the busiest link per iteration: grad * p for a parameter
// server, grad * b * ceil(log_b p) for a reduction tree (up and back down).
Count comm_volume(Count grad_bytes, const ClusterSpec& cluster);
double comm_time(Count grad_bytes, const ClusterSpec& cluster);

struct CostEstimate {
  std::int64_t workers = 1;
  std::int64_t batch = 1;
  Count comm_bytes = 0;
  Count train_flops = 0;  // 3 x forward at `batch`
  double comm_s = 0;
  double compute_s = 0;
  double total_s = 0;
  double speedup = 1;      // vs. one worker, filled in by scaling_curve
  double comp_comm_ratio = 0;  // compute / comm; infinity when comm is 0
  bool idle_workers = false;   // batch < workers
};

// Gradient bytes = the report's parameter bytes. Forward FLOPs are rescaled
// from the report's batch to `batch` (exact, FLOPs are linear in batch).
CostEstimate iteration_time(const AccountingReport& report, const ClusterSpec& cluster,
                            std::int64_t batch);

struct ScalingCurve {
  std::vector<CostEstimate> points;
  std::int64_t best_workers = 1;  // maximizes speedup; smallest on ties
};

ScalingCurve scaling_curve(const AccountingReport& report, const ClusterSpec& base,
                           const std::vector<std::int64_t>& workers, std::int64_t batch);

// CSV: p,comm_s,compute_s,total_s,speedup,ratio
std::string scaling_csv(const ScalingCurve& curve);

struct TrainPlan {
  std::int64_t dataset_frames = 1;
  std::int64_t epochs = 1;
  std::int64_t batch = 1;
};

void validate(const TrainPlan& plan);

struct TrainingEstimate {
  std::int64_t iterations_per_epoch = 0;
  std::int64_t total_iterations = 0;
  double comm_per_epoch_s = 0;
  double compute_per_epoch_s = 0;
  double total_s = 0;
};

TrainingEstimate training_time(const AccountingReport& report, const ClusterSpec& cluster,
                               const TrainPlan& plan);

Count forward_flops_per_frame(const AccountingReport& report);

// 3 x forward FLOPs per frame x frames x epochs.
boost::multiprecision::cpp_int total_training_ops(const AccountingReport& report,
                                                  const TrainPlan& plan);

}  // namespace cnndse
