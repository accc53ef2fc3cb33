#pragma once

#include <string>
#include <vector>

#include "dysflm/checkpoint.hpp"
#include "dysflm/metrics.hpp"
#include "dysflm/synth.hpp"
#include "dysflm/training.hpp"

namespace dysflm {

// End-to-end pipeline entry points shared by the CLI and the test
// harness. All file writes are atomic (write-temp-then-rename).

struct GenDataOptions {
  SynthSpec spec;
  std::string out_manifest;
  bool inline_features = false;
};

void run_gen_data(const GenDataOptions& opts);

struct TrainOptions {
  std::string manifest_path;
  std::string out_checkpoint;
  std::string out_log;  // one structured record per epoch
  LMConfig lm;          // vocab_size filled from the manifest
  int lora_rank = 8;
  float lora_alpha = 16.0f;
  float lora_dropout = 0.10f;
  int proj_hidden = 512;
  float proj_dropout = 0.10f;
  TrainConfig train;
};

struct TrainSummary {
  int best_epoch = 0;
  double best_dev_loss = 0.0;
  std::vector<EpochRecord> log;
};

TrainSummary run_train(const TrainOptions& opts);

struct PredictOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string out_predictions;
  DecoderMode mode = DecoderMode::OneBest;
  Split split = Split::Test;
  FusionOptions fusion;
};

void run_predict(const PredictOptions& opts);

struct RescoreOptions {
  std::string manifest_path;
  std::string out_manifest;
  std::size_t sample_count = 10;  // S, when sampling anchors from a channel
  std::string channel_spec_path;  // optional: sample fresh anchors from truth
  std::uint64_t seed = 0;
  bool inline_features = false;
};

void run_rescore_mbr(const RescoreOptions& opts);

struct EvaluateOptions {
  std::string predictions_path;
  std::string manifest_path;
  std::string out_report;  // empty -> stdout only
};

F1Report run_evaluate(const EvaluateOptions& opts);

// Predictions file line format: id<TAB>serialized_labels<TAB>raw_string.
struct PredictionRecord {
  std::string id;
  LabelSet labels;
  std::string raw;
};

std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               Schema schema);
std::string render_training_log(const std::vector<EpochRecord>& log);

}  // namespace dysflm
