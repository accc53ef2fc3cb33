#include <doctest.h>

#include "dysflm/errors.hpp"
#include "dysflm/training.hpp"

using namespace dysflm;
using Mat = TransformerLM<double>::Mat;

namespace {

FusedModel<double> tiny_model(std::uint64_t seed = 4) {
  LMConfig cfg;
  cfg.vocab_size = Vocab::kFirstCorpus + 4;
  cfg.d_model = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 24;
  cfg.max_seq_len = 48;
  cfg.seed = seed;
  FusedModel<double> m{TransformerLM<double>(cfg),
                       init_projector<double>(4, 8, 16, seed, 0.0),
                       Vocab::build({"aa", "bb", "cc", "dd"}), Schema::Sep28k};
  m.lm.attach_lora(4, 16.0, 0.0, seed + 1);
  return m;
}

TrainExample example(int word, std::vector<DysfluencyClass> classes,
                     float feat_level) {
  TrainExample ex;
  ex.features = Eigen::MatrixXf::Constant(6, 4, feat_level);
  ex.hyp_tokens = {Vocab::kFirstCorpus + word};
  for (auto c : classes) ex.label_tokens.push_back(Vocab::label_token(c));
  if (ex.label_tokens.empty()) ex.label_tokens.push_back(Vocab::kNone);
  return ex;
}

}  // namespace

TEST_CASE("learning-rate schedule closed form") {
  TrainConfig cfg;
  cfg.lr0 = 2e-4;
  cfg.warmup_frac = 0.05;
  const long total = 200;  // warmup = ceil(0.05 * 200) = 10
  CHECK(lr_at_step(cfg, 0, total) == 0.0);
  CHECK(lr_at_step(cfg, 5, total) == doctest::Approx(1e-4));
  CHECK(lr_at_step(cfg, 10, total) == doctest::Approx(2e-4));
  CHECK(lr_at_step(cfg, 105, total) == doctest::Approx(2e-4 * 95.0 / 190.0));
  CHECK(lr_at_step(cfg, 200, total) == doctest::Approx(0.0));
  CHECK_THROWS_AS(lr_at_step(cfg, 201, total), ConfigError);
  CHECK_THROWS_AS(lr_at_step(cfg, -1, total), ConfigError);
  // warmup rounds up: total=30 -> ceil(1.5)=2
  CHECK(lr_at_step(cfg, 1, 30) == doctest::Approx(1e-4));
  CHECK(lr_at_step(cfg, 2, 30) == doctest::Approx(2e-4));
}

TEST_CASE("gradient accumulation is exact") {
  FusedModel<double> m = tiny_model();
  Mat prefix = Mat::Zero(1, 16);
  auto a = assemble_input<double>(prefix, {13}, {Vocab::kNone}, true, 48);
  auto b = assemble_input<double>(
      prefix, {14, 15},
      {Vocab::label_token(DysfluencyClass::Blk), Vocab::kNone}, true, 48);

  LMGrads<double> joint, split;
  m.lm.ensure_grad_shapes(joint, 1);
  m.lm.ensure_grad_shapes(split, 1);
  m.lm.masked_ce(a, &joint);
  m.lm.masked_ce(b, &joint);
  m.lm.masked_ce(b, &split);
  m.lm.masked_ce(a, &split);  // order must not matter for the sums

  CHECK(joint.mask_count == split.mask_count);
  CHECK(joint.loss_sum == doctest::Approx(split.loss_sum).epsilon(1e-15));
  for (std::size_t l = 0; l < joint.q_a.size(); ++l) {
    CHECK((joint.q_a[l] - split.q_a[l]).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((joint.v_b[l] - split.v_b[l]).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  CHECK((joint.emb - split.emb).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("padding after EOS does not move the masked loss") {
  FusedModel<double> m = tiny_model();
  Mat prefix = Mat::Zero(1, 16);
  auto in = assemble_input<double>(prefix, {13}, {Vocab::kNone}, true, 48);
  double base = m.lm.masked_ce(in, nullptr);
  std::vector<ModelInput<double>> batch = {in, in};
  batch[1].tokens.insert(batch[1].tokens.end(), 5, Vocab::kPad);
  batch[1].targets.insert(batch[1].targets.end(), 5, Vocab::kPad);
  batch[1].loss_mask.insert(batch[1].loss_mask.end(), 5, 0);
  CHECK(m.lm.masked_ce(batch[1], nullptr) == base);  // bit-identical
}

TEST_CASE("early stopping counts consecutive non-improvements") {
  FusedModel<double> m = tiny_model();
  std::vector<TrainExample> train_set, dev_set;
  for (int i = 0; i < 8; ++i)
    train_set.push_back(example(i % 4, {}, 0.1f * i));
  dev_set.push_back(example(0, {}, 0.0f));

  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.patience = 3;
  cfg.effective_batch = 4;
  cfg.micro_batch = 2;
  cfg.seed = 9;

  // scripted dev losses: improve, improve, then flat forever
  std::vector<double> script = {5.0, 4.0, 4.5, 4.4, 4.3, 4.2, 4.1};
  auto override = [&](int epoch, double) {
    return script[static_cast<std::size_t>(epoch - 1) % script.size()];
  };
  auto result = train(m, train_set, dev_set, cfg, override);
  // epochs 3,4,5 fail to beat 4.0 -> stop at epoch 5
  CHECK(result.log.size() == 5);
  CHECK(result.best_epoch == 2);
  CHECK(result.best_dev_loss == doctest::Approx(4.0));
  CHECK(result.log.back().patience_counter == 3);
}

TEST_CASE("a short run reduces loss on a memorizable set") {
  FusedModel<double> m = tiny_model();
  std::vector<TrainExample> train_set;
  for (int i = 0; i < 8; ++i) {
    // word 0/1 <-> label pattern, fully deterministic
    bool blk = i % 2 == 0;
    train_set.push_back(example(
        i % 2, blk ? std::vector<DysfluencyClass>{DysfluencyClass::Blk}
                   : std::vector<DysfluencyClass>{},
        blk ? 1.0f : 0.0f));
  }
  TrainConfig cfg;
  cfg.max_epochs = 12;
  cfg.patience = 12;
  cfg.effective_batch = 8;
  cfg.micro_batch = 4;
  cfg.lr0 = 5e-3;
  cfg.seed = 1;
  auto result = train(m, train_set, train_set, cfg);
  REQUIRE(!result.log.empty());
  CHECK(result.best_dev_loss < result.log.front().dev_loss);
}

TEST_CASE("training rejects a model without adapters") {
  FusedModel<double> m = tiny_model();
  m.lm.detach_lora();
  std::vector<TrainExample> xs = {example(0, {}, 0.0f)};
  TrainConfig cfg;
  CHECK_THROWS_AS(train(m, xs, xs, cfg), ConfigError);
}

TEST_CASE("batch order covers every index exactly once per epoch") {
  auto epoch1 = make_batch_order(11, 4, 7, 1);
  auto epoch2 = make_batch_order(11, 4, 7, 2);
  std::vector<int> seen(11, 0);
  std::size_t batches_total = 0;
  std::vector<std::size_t> flat1, flat2;
  for (const auto& b : epoch1) {
    CHECK(b.size() <= 4);
    batches_total += b.size();
    for (auto i : b) {
      ++seen[i];
      flat1.push_back(i);
    }
  }
  for (const auto& b : epoch2)
    for (auto i : b) flat2.push_back(i);
  CHECK(batches_total == 11);
  for (int c : seen) CHECK(c == 1);
  CHECK(flat1 != flat2);  // reshuffled across epochs
  CHECK(make_batch_order(11, 4, 7, 1) == epoch1);  // but deterministic
}
