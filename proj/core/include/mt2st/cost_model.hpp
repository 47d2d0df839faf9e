#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mt2st/model.hpp"
#include "mt2st/task_suite.hpp"

namespace mt2st {

// Two readings of the per-step auxiliary cost:
//   Expected — marginal cost scales with gamma_k(t) (the theoretical formula),
//   Realized — C_k is charged in full whenever gamma_k(t) > 0 (what a real
//              implementation actually computes).
enum class CostAccounting { Expected, Realized };

enum class CostSource { Analytic, Measured };

struct CostModel {
  double c_stl = 0.0;               // per-step FLOPs of primary-only training
  std::vector<double> c_marginal;   // marginal per-step FLOPs per aux task
  CostSource source = CostSource::Analytic;

  double c_mtl() const;  // c_stl + sum of marginals
};

/**
 * Total training cost sum_t [ c_stl + sum_k gamma_k(t) * C_k ] over a
 * recorded weight trajectory. With all gammas zero this is the STL total,
 * with all gammas one the MTL total.
 */
double mt2st_cost(std::span<const std::vector<double>> gammas_over_time,
                  const CostModel& cm,
                  CostAccounting mode = CostAccounting::Expected);

// Percentage FLOPs reduction relative to an STL baseline; negative when the
// run costs more than STL.
double compression_rate(double cost_run, double cost_stl_baseline);

/**
 * Populates the cost constants from the model shape: c_stl is the full
 * encoder+primary-head step, each marginal C_k is head k's forward+backward
 * plus the encoder backward share (the encoder forward is charged once per
 * step regardless of task count).
 */
CostModel measure_costs(const ModelParams& params, const TaskSuite& suite,
                        std::size_t batch);

}  // namespace mt2st
