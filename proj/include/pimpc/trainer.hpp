#pragma once

#include <string>
#include <vector>

#include "pimpc/data.hpp"
#include "pimpc/metrics.hpp"
#include "pimpc/model.hpp"

namespace pimpc {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_bacc = 0.0;
  double val_f1 = 0.0;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_bacc = 0.0;
  int stopped_epoch = 0;
  std::vector<int> minority;  // minority classes per the training counts
};

/// Full-graph training with AdamW, gradient clipping, cosine annealing
/// and early stopping on validation balanced accuracy. Parameters are
/// initialized from the config seed; the best-on-validation snapshot is
/// restored before returning. Deterministic per seed.
TrainReport fit(PimpcModel& model, ParamRegistry& registry,
                const Dataset& dataset, const SplitSpec& split);

/// Evaluates the current parameters on an index subset.
EvalReport evaluate_split(const PimpcModel& model, const Dataset& dataset,
                          const std::vector<int>& subset,
                          const std::vector<int>& minority,
                          RejectPolicy policy);

void write_history_csv(const TrainReport& report, const std::string& path);

}  // namespace pimpc
