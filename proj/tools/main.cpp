// Command-line front end: corpus generation, training, prediction, MBR
// rescoring and evaluation, wired to the pipeline entry points.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dysflm/errors.hpp"
#include "dysflm/pipeline.hpp"

namespace {

using namespace dysflm;

// key=value overrides for the synthesis spec; unknown keys are rejected.
void apply_synth_override(SynthSpec& spec, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw UsageError("override must be key=value: " + kv);
  std::string key = kv.substr(0, eq);
  std::string val = kv.substr(eq + 1);
  auto as_d = [&] { return std::stod(val); };
  auto as_i = [&] { return std::stoi(val); };
  if (key == "clip_count") spec.clip_count = as_i();
  else if (key == "feature_frames") spec.feature_frames = as_i();
  else if (key == "feature_dim") spec.feature_dim = as_i();
  else if (key == "threshold_pro") spec.threshold_pro = as_d();
  else if (key == "threshold_blk") spec.threshold_blk = as_d();
  else if (key == "threshold_mod") spec.threshold_mod = as_d();
  else if (key == "rate_pro") spec.rate_pro = as_d();
  else if (key == "rate_blk") spec.rate_blk = as_d();
  else if (key == "rate_mod") spec.rate_mod = as_d();
  else if (key == "filler_rate") spec.filler_rate = as_d();
  else if (key == "repetition_rate") spec.repetition_rate = as_d();
  else if (key == "fragment_rate") spec.fragment_rate = as_d();
  else if (key == "min_words") spec.min_words = as_i();
  else if (key == "max_words") spec.max_words = as_i();
  else if (key == "word_sub") spec.word_sub = as_d();
  else if (key == "word_del") spec.word_del = as_d();
  else if (key == "word_ins") spec.word_ins = as_d();
  else if (key == "repeat_collapse") spec.repeat_collapse = as_d();
  else if (key == "phon_sub") spec.phon_sub = as_d();
  else if (key == "phon_del") spec.phon_del = as_d();
  else if (key == "phon_ins") spec.phon_ins = as_d();
  else if (key == "nbest_width") spec.nbest_width = static_cast<std::size_t>(as_i());
  else if (key == "nbest_n") spec.nbest_n = static_cast<std::size_t>(as_i());
  else if (key == "mbr_samples") spec.mbr_samples = static_cast<std::size_t>(as_i());
  else throw UsageError("unknown gen-data override key: " + key);
}

void apply_train_override(TrainOptions& opts, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw UsageError("override must be key=value: " + kv);
  std::string key = kv.substr(0, eq);
  std::string val = kv.substr(eq + 1);
  auto as_d = [&] { return std::stod(val); };
  auto as_i = [&] { return std::stoi(val); };
  if (key == "lr0") opts.train.lr0 = as_d();
  else if (key == "weight_decay") opts.train.weight_decay = as_d();
  else if (key == "eps") opts.train.eps = as_d();
  else if (key == "beta1") opts.train.beta1 = as_d();
  else if (key == "beta2") opts.train.beta2 = as_d();
  else if (key == "effective_batch") opts.train.effective_batch = as_i();
  else if (key == "micro_batch") opts.train.micro_batch = as_i();
  else if (key == "warmup_frac") opts.train.warmup_frac = as_d();
  else if (key == "patience") opts.train.patience = as_i();
  else if (key == "max_epochs") opts.train.max_epochs = as_i();
  else if (key == "d_model") opts.lm.d_model = as_i();
  else if (key == "n_layers") opts.lm.n_layers = as_i();
  else if (key == "n_heads") opts.lm.n_heads = as_i();
  else if (key == "d_ff") opts.lm.d_ff = as_i();
  else if (key == "max_seq_len") opts.lm.max_seq_len = as_i();
  else if (key == "lora_rank") opts.lora_rank = as_i();
  else if (key == "lora_alpha") opts.lora_alpha = static_cast<float>(as_d());
  else if (key == "lora_dropout") opts.lora_dropout = static_cast<float>(as_d());
  else if (key == "proj_hidden") opts.proj_hidden = as_i();
  else if (key == "proj_dropout") opts.proj_dropout = static_cast<float>(as_d());
  else throw UsageError("unknown train override key: " + key);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label dysfluency detection as language modeling"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus manifest");
  std::string gen_out = "manifest.jsonl";
  std::string gen_schema = "sep28k";
  std::uint64_t gen_seed = 0;
  bool gen_inline = false;
  std::vector<std::string> gen_overrides;
  gen->add_option("--out", gen_out, "Output manifest path");
  gen->add_option("--schema", gen_schema, "sep28k | fluencybank | ksof");
  gen->add_option("--seed", gen_seed, "Root seed");
  gen->add_flag("--inline-features", gen_inline, "Embed features in the manifest");
  gen->add_option("--set", gen_overrides, "Spec override key=value (repeatable)");

  // train
  auto* tr = app.add_subcommand("train", "Train adapters and projector on a manifest");
  TrainOptions topts;
  std::string tr_mode = "1-best";
  std::uint64_t tr_seed = 0;
  std::vector<std::string> tr_overrides;
  bool tr_zero_prefix = false, tr_drop_hyp = false;
  tr->add_option("--manifest", topts.manifest_path, "Input manifest")->required();
  tr->add_option("--out", topts.out_checkpoint, "Output checkpoint")->required();
  tr->add_option("--log", topts.out_log, "Training log path");
  tr->add_option("--mode", tr_mode, "Decoder mode: 1-best | N-best | Phon | MBR");
  tr->add_option("--seed", tr_seed, "Root seed");
  tr->add_flag("--zero-prefix", tr_zero_prefix, "Lexical-only ablation");
  tr->add_flag("--drop-hypotheses", tr_drop_hyp, "Acoustic-only ablation");
  tr->add_option("--set", tr_overrides, "Config override key=value (repeatable)");

  // predict
  auto* pr = app.add_subcommand("predict", "Predict labels for a split");
  PredictOptions popts;
  std::string pr_mode = "1-best", pr_split = "test";
  bool pr_zero_prefix = false, pr_drop_hyp = false;
  pr->add_option("--checkpoint", popts.checkpoint_path, "Checkpoint")->required();
  pr->add_option("--manifest", popts.manifest_path, "Manifest")->required();
  pr->add_option("--out", popts.out_predictions, "Predictions file")->required();
  pr->add_option("--mode", pr_mode, "Decoder mode");
  pr->add_option("--split", pr_split, "train | dev | test");
  pr->add_flag("--zero-prefix", pr_zero_prefix, "Lexical-only ablation");
  pr->add_flag("--drop-hypotheses", pr_drop_hyp, "Acoustic-only ablation");

  // rescore-mbr
  auto* rs = app.add_subcommand("rescore-mbr", "Fill hyp_mbr via MBR selection");
  RescoreOptions ropts;
  rs->add_option("--manifest", ropts.manifest_path, "Input manifest")->required();
  rs->add_option("--out", ropts.out_manifest, "Output manifest")->required();
  rs->add_option("--channel", ropts.channel_spec_path,
                 "Channel spec JSON; when given, anchors are sampled from the truth");
  rs->add_option("--samples", ropts.sample_count, "Sample count S");
  rs->add_option("--seed", ropts.seed, "Root seed");
  rs->add_flag("--inline-features", ropts.inline_features,
               "Embed features in the output manifest");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against gold labels");
  EvaluateOptions eopts;
  ev->add_option("--predictions", eopts.predictions_path, "Predictions file")->required();
  ev->add_option("--manifest", eopts.manifest_path, "Manifest")->required();
  ev->add_option("--out", eopts.out_report, "Report file (also printed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      GenDataOptions opts;
      opts.spec.schema = parse_schema(gen_schema);
      opts.spec.seed = gen_seed;
      for (const auto& kv : gen_overrides) apply_synth_override(opts.spec, kv);
      opts.out_manifest = gen_out;
      opts.inline_features = gen_inline;
      run_gen_data(opts);
    } else if (tr->parsed()) {
      topts.train.seed = tr_seed;
      topts.lm.seed = tr_seed;
      topts.train.decoder_mode = parse_decoder_mode(tr_mode);
      topts.train.ablation.zero_prefix = tr_zero_prefix;
      topts.train.ablation.drop_hypotheses = tr_drop_hyp;
      for (const auto& kv : tr_overrides) apply_train_override(topts, kv);
      TrainSummary s = run_train(topts);
      std::printf("best_epoch=%d best_dev_loss=%.6f\n", s.best_epoch,
                  s.best_dev_loss);
    } else if (pr->parsed()) {
      popts.mode = parse_decoder_mode(pr_mode);
      popts.split = parse_split(pr_split);
      popts.fusion.zero_prefix = pr_zero_prefix;
      popts.fusion.drop_hypotheses = pr_drop_hyp;
      run_predict(popts);
    } else if (rs->parsed()) {
      run_rescore_mbr(ropts);
    } else if (ev->parsed()) {
      F1Report report = run_evaluate(eopts);
      std::printf("%s", report.render_table().c_str());
      std::printf("%s", report.render_key_values().c_str());
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
