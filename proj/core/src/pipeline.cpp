#include "dysflm/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dysflm/decoding.hpp"
#include "dysflm/errors.hpp"

namespace fs = std::filesystem;

namespace dysflm {

std::vector<int> mode_hypothesis_tokens(const Vocab& vocab,
                                        const ClipExample& example,
                                        DecoderMode mode) {
  switch (mode) {
    case DecoderMode::OneBest:
      if (!example.hyp_1best) throw DataError("clip " + example.id + ": no 1-best");
      return vocab.encode(*example.hyp_1best);
    case DecoderMode::Phon:
      if (!example.hyp_phon) throw DataError("clip " + example.id + ": no Phon");
      return vocab.encode(*example.hyp_phon);
    case DecoderMode::Mbr:
      if (!example.hyp_mbr) throw DataError("clip " + example.id + ": no MBR");
      return vocab.encode(*example.hyp_mbr);
    case DecoderMode::NBest: {
      if (!example.hyp_nbest || example.hyp_nbest->empty())
        throw DataError("clip " + example.id + ": no N-best");
      auto flat = flatten_candidates_text(*example.hyp_nbest, "[SEP]");
      return vocab.encode(flat);
    }
  }
  throw DataError("unknown decoder mode");
}

void run_gen_data(const GenDataOptions& opts) {
  SynthResult result = generate_synthetic_corpus(opts.spec);
  for (const auto& w : result.warnings)
    std::fprintf(stderr, "gen-data warning: %s\n", w.c_str());
  if (!opts.inline_features) {
    fs::path dir = fs::path(opts.out_manifest).parent_path() / "feats";
    fs::create_directories(dir);
  }
  save_manifest(result.manifest, opts.out_manifest, opts.inline_features);
}

namespace {

std::vector<TrainExample> build_examples(const FusedModel<float>& model,
                                         const Manifest& manifest, Split split,
                                         const TrainConfig& config) {
  std::vector<TrainExample> out;
  for (const ClipExample* clip : manifest.split_clips(split))
    out.push_back(make_train_example(model, *clip, config.decoder_mode,
                                     config.ablation));
  return out;
}

}  // namespace

std::string render_training_log(const std::vector<EpochRecord>& log) {
  std::string out;
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf),
                  "epoch=%d train_loss=%.6f dev_loss=%.6f lr=%.8g patience=%d\n",
                  r.epoch, r.train_loss, r.dev_loss, r.lr, r.patience_counter);
    out += buf;
  }
  return out;
}

TrainSummary run_train(const TrainOptions& opts) {
  Manifest manifest = load_manifest(opts.manifest_path);

  Vocab vocab = Vocab::build(collect_corpus_tokens(manifest));
  LMConfig cfg = opts.lm;
  cfg.vocab_size = vocab.size();
  cfg.validate();

  if (manifest.clips.empty()) throw DataError("train: empty manifest");
  int feat_dim = static_cast<int>(manifest.clips.front().features.cols());

  FusedModel<float> model{
      TransformerLM<float>(cfg),
      init_projector<float>(feat_dim, opts.proj_hidden, cfg.d_model, cfg.seed,
                            opts.proj_dropout),
      vocab, manifest.schema};
  model.lm.attach_lora(opts.lora_rank, opts.lora_alpha, opts.lora_dropout,
                       cfg.seed);

  auto train_set = build_examples(model, manifest, Split::Train, opts.train);
  auto dev_set = build_examples(model, manifest, Split::Dev, opts.train);

  TrainResult<float> result = train(std::move(model), train_set, dev_set,
                                    opts.train);

  save_checkpoint(result.best_model, opts.out_checkpoint);
  // "best" marker alongside the checkpoint
  atomic_write_text(opts.out_checkpoint + ".best",
                    "best_epoch=" + std::to_string(result.best_epoch) + "\n");
  if (!opts.out_log.empty())
    atomic_write_text(opts.out_log, render_training_log(result.log));

  TrainSummary summary;
  summary.best_epoch = result.best_epoch;
  summary.best_dev_loss = result.best_dev_loss;
  summary.log = result.log;
  return summary;
}

void run_predict(const PredictOptions& opts) {
  FusedModel<float> model = load_checkpoint(opts.checkpoint_path);
  Manifest manifest = load_manifest(opts.manifest_path);
  std::ostringstream out;
  for (const ClipExample* clip : manifest.split_clips(opts.split)) {
    Prediction pred = predict(model, *clip, opts.mode, opts.fusion);
    out << clip->id << '\t' << serialize_labels(pred.labels, model.schema)
        << '\t' << pred.raw_generated << '\n';
  }
  atomic_write_text(opts.out_predictions, out.str());
}

void run_rescore_mbr(const RescoreOptions& opts) {
  Manifest manifest = load_manifest(opts.manifest_path);
  bool sample_anchors = !opts.channel_spec_path.empty();
  ChannelSpec channel;
  if (sample_anchors) channel = load_channel_spec(opts.channel_spec_path);

  for (std::size_t i = 0; i < manifest.clips.size(); ++i) {
    ClipExample& clip = manifest.clips[i];
    std::vector<TextHypothesis> candidates, anchors;
    if (sample_anchors) {
      Rng rng = make_rng(opts.seed, "rescore", static_cast<std::uint64_t>(i));
      for (std::size_t s = 0; s < opts.sample_count; ++s)
        anchors.push_back(sample_hypothesis(channel, clip.transcript, rng));
      std::set<std::vector<std::string>> seen;
      for (const auto& h : anchors)
        if (seen.insert(h.tokens).second) candidates.push_back(h);
    } else {
      if (!clip.hyp_nbest || clip.hyp_nbest->empty())
        throw DataError("rescore-mbr: clip " + clip.id +
                        " has no n-best list and no channel spec was given");
      candidates = *clip.hyp_nbest;
      anchors = *clip.hyp_nbest;
    }
    clip.hyp_mbr = mbr_select_text(candidates, anchors).tokens;
  }
  save_manifest(manifest, opts.out_manifest, opts.inline_features);
}

std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               Schema schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    if (t1 == std::string::npos)
      throw DataError("predictions: malformed line: " + line);
    std::size_t t2 = line.find('\t', t1 + 1);
    PredictionRecord rec;
    rec.id = line.substr(0, t1);
    std::string labels = t2 == std::string::npos
                             ? line.substr(t1 + 1)
                             : line.substr(t1 + 1, t2 - t1 - 1);
    rec.labels = parse_labels(labels, schema);
    if (t2 != std::string::npos) rec.raw = line.substr(t2 + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

F1Report run_evaluate(const EvaluateOptions& opts) {
  Manifest manifest = load_manifest(opts.manifest_path);
  auto preds = load_predictions(opts.predictions_path, manifest.schema);

  std::map<std::string, const ClipExample*> by_id;
  for (const auto& c : manifest.clips) by_id[c.id] = &c;

  std::vector<LabelSet> p, g;
  for (const auto& rec : preds) {
    auto it = by_id.find(rec.id);
    if (it == by_id.end())
      throw DataError("evaluate: prediction for unknown clip " + rec.id);
    p.push_back(rec.labels);
    g.push_back(it->second->labels);
  }
  F1Report report = multilabel_prf(p, g, manifest.schema);
  if (!opts.out_report.empty())
    atomic_write_text(opts.out_report,
                      report.render_table() + report.render_key_values());
  return report;
}

}  // namespace dysflm
