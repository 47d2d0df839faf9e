#include "mt2st/cost_model.hpp"

#include <string>

#include "mt2st/errors.hpp"

namespace mt2st {

double CostModel::c_mtl() const {
  double total = c_stl;
  for (double c : c_marginal) total += c;
  return total;
}

double mt2st_cost(std::span<const std::vector<double>> gammas_over_time,
                  const CostModel& cm, CostAccounting mode) {
  double total = 0.0;
  for (const std::vector<double>& gammas : gammas_over_time) {
    if (gammas.size() != cm.c_marginal.size())
      throw ContractError("mt2st_cost: weight vector has " +
                          std::to_string(gammas.size()) + " entries, model " +
                          std::to_string(cm.c_marginal.size()));
    double step = cm.c_stl;
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      if (mode == CostAccounting::Expected)
        step += gammas[k] * cm.c_marginal[k];
      else if (gammas[k] > 0.0)
        step += cm.c_marginal[k];
    }
    total += step;
  }
  return total;
}

double compression_rate(double cost_run, double cost_stl_baseline) {
  if (!(cost_stl_baseline > 0.0))
    throw InputError("compression_rate: STL baseline cost must be > 0");
  return 100.0 * (1.0 - cost_run / cost_stl_baseline);
}

CostModel measure_costs(const ModelParams& params, const TaskSuite& suite,
                        std::size_t batch) {
  validate_model(params);
  if (params.heads.size() != suite.task_count())
    throw ContractError("measure_costs: model has " +
                        std::to_string(params.heads.size()) +
                        " heads, suite has " +
                        std::to_string(suite.task_count()) + " tasks");
  std::uint64_t encoder_macs = 0;
  for (const LayerParams& layer : params.encoder)
    encoder_macs +=
        static_cast<std::uint64_t>(layer.weight.rows) * layer.weight.cols;
  const std::uint64_t b = batch;

  CostModel cm;
  cm.source = CostSource::Measured;
  // Primary-only step: full forward+backward of encoder and head 0.
  cm.c_stl = static_cast<double>(flops_per_task_step(params, batch, 0));
  // Marginal task cost: its head forward+backward plus the encoder backward
  // share. The shared encoder forward is never charged twice.
  for (std::size_t k = 1; k < params.heads.size(); ++k) {
    const std::uint64_t head_macs =
        static_cast<std::uint64_t>(params.heads[k].weight.rows) *
        params.heads[k].weight.cols;
    cm.c_marginal.push_back(
        static_cast<double>(6ULL * b * head_macs + 4ULL * b * encoder_macs));
  }
  return cm;
}

}  // namespace mt2st
