#include "pimpc/trainer.hpp"

#include <cstdio>
#include <fstream>

#include "pimpc/errors.hpp"
#include "pimpc/loss.hpp"
#include "pimpc/optimizer.hpp"

namespace pimpc {

namespace {

std::vector<int> subset_labels(const std::vector<int>& subset,
                               const std::vector<int>& predictions) {
  std::vector<int> out(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    out[i] = predictions[subset[i]];
  }
  return out;
}

}  // namespace

EvalReport evaluate_split(const PimpcModel& model, const Dataset& dataset,
                          const std::vector<int>& subset,
                          const std::vector<int>& minority,
                          RejectPolicy policy) {
  Tape tape(false);
  Rng unused(0);
  ModelOutput out = model.forward(tape, dataset.features, false, unused);
  std::vector<int> predictions = model.decide(out);
  std::vector<int> pred = subset_labels(subset, predictions);
  std::vector<int> truth(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    truth[i] = dataset.labels[subset[i]];
  }
  return evaluate(truth, pred, minority, policy, dataset.num_classes);
}

TrainReport fit(PimpcModel& model, ParamRegistry& registry,
                const Dataset& dataset, const SplitSpec& split) {
  const ExperimentConfig& config = model.config();
  validate_split(dataset, split);

  Rng init_rng(config.seed);
  model.init_params(init_rng);
  Rng dropout_rng = init_rng.fork(1);

  AdamW optimizer(registry, config.optim);

  TrainReport report;
  report.minority = minority_classes(class_counts(dataset, split.train));

  // Early-stopping bAcc is computed with the reject option off so an
  // untrained threshold head cannot blank out validation.
  std::vector<std::vector<double>> best_snapshot;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < config.optim.epochs; ++epoch) {
    registry.zero_grad();
    Tape tape;
    ModelOutput out =
        model.forward(tape, dataset.features, /*training=*/true, dropout_rng);
    Tensor class_loss =
        class_balanced_focal_ce(tape, out.y_final, dataset.labels, split.train,
                                dataset.num_classes, config.loss);
    Tensor loss = total_loss(tape, class_loss, out.consistencies,
                             out.ensemble_weights, config.loss);
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) {
      throw ConvergenceError("training loss became non-finite at epoch " +
                             std::to_string(epoch));
    }
    tape.backward(loss);
    optimizer.clip_gradients();
    optimizer.step(epoch);

    Tape eval_tape(false);
    Rng eval_rng(0);
    ModelOutput eval_out =
        model.forward(eval_tape, dataset.features, false, eval_rng);
    std::vector<int> predictions =
        decide(eval_out.y_final, eval_out.class_weights, eval_out.thresholds,
               /*reject_enabled=*/false);
    std::vector<int> val_pred = subset_labels(split.val, predictions);
    std::vector<int> val_truth(split.val.size());
    for (std::size_t i = 0; i < split.val.size(); ++i) {
      val_truth[i] = dataset.labels[split.val[i]];
    }
    EvalReport val = evaluate(val_truth, val_pred, report.minority,
                              RejectPolicy::CountAsError, dataset.num_classes);
    const double val_bacc = val.balanced_accuracy.value_or(0.0);
    const double val_f1 = val.macro_f1.value_or(0.0);

    report.history.push_back(
        {epoch, loss_value, val_bacc, val_f1, optimizer.lr_at(epoch)});

    if (report.best_epoch < 0 || val_bacc > report.best_val_bacc) {
      report.best_epoch = epoch;
      report.best_val_bacc = val_bacc;
      best_snapshot = registry.snapshot();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= config.optim.patience) {
        report.stopped_epoch = epoch;
        break;
      }
    }
    report.stopped_epoch = epoch;
  }

  if (config.optim.restore_best && !best_snapshot.empty()) {
    registry.restore(best_snapshot);
  }
  return report;
}

void write_history_csv(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "epoch,train_loss,val_bacc,val_f1,lr\n";
  char buf[128];
  for (const EpochRecord& r : report.history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch,
                  r.train_loss, r.val_bacc, r.val_f1, r.lr);
    out << buf;
  }
}

}  // namespace pimpc
