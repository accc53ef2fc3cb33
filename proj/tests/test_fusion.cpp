#include <doctest.h>

#include "dysflm/errors.hpp"
#include "dysflm/fusion.hpp"

using namespace dysflm;
using Mat = TransformerLM<double>::Mat;

namespace {

FusedModel<double> tiny_model() {
  LMConfig cfg;
  cfg.vocab_size = Vocab::kFirstCorpus + 4;
  cfg.d_model = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 24;
  cfg.max_seq_len = 48;
  cfg.seed = 21;
  FusedModel<double> m{TransformerLM<double>(cfg),
                       init_projector<double>(4, 8, 16, 21, 0.0),
                       Vocab::build({"aa", "bb", "cc", "dd"}), Schema::Sep28k};
  return m;
}

}  // namespace

TEST_CASE("assemble_input builds the prompt skeleton and mask") {
  Mat prefix = Mat::Random(1, 16);
  std::vector<int> hyp = {13, 14};
  std::vector<int> labels = {Vocab::label_token(DysfluencyClass::Int)};
  auto in = assemble_input<double>(prefix, hyp, labels, true, 48);
  std::vector<int> want = {Vocab::kBos, 13, 14, Vocab::kLab,
                           Vocab::label_token(DysfluencyClass::Int),
                           Vocab::kEos};
  CHECK(in.tokens == want);
  CHECK(in.targets == want);
  CHECK(in.loss_mask == std::vector<char>{0, 0, 0, 0, 1, 1});
  CHECK(in.prefix_count() == 1);

  auto open = assemble_input<double>(prefix, hyp, {}, false, 48);
  CHECK(open.tokens == std::vector<int>{Vocab::kBos, 13, 14, Vocab::kLab});
  for (char m : open.loss_mask) CHECK(m == 0);
}

TEST_CASE("over-long prompts lose hypothesis tokens, never labels") {
  Mat prefix = Mat::Random(1, 16);
  std::vector<int> hyp(40, 13);
  std::vector<int> labels = {Vocab::kNone};
  // budget: 12 - 1(prefix) - 2(bos+lab) - 2(labels+eos) = 7 hyp tokens
  auto in = assemble_input<double>(prefix, hyp, labels, true, 12);
  CHECK(static_cast<int>(in.tokens.size()) + 1 == 12);
  CHECK(in.tokens[8] == Vocab::kLab);
  CHECK(in.tokens[9] == Vocab::kNone);
  CHECK(in.tokens[10] == Vocab::kEos);
  // labels that cannot fit at all are an error
  std::vector<int> many(20, Vocab::kNone);
  CHECK_THROWS_AS(
      (assemble_input<double>(prefix, hyp, many, true, 12)), DataError);
}

TEST_CASE("generation halts within the step budget and parses totally") {
  FusedModel<double> m = tiny_model();
  Mat prefix = Mat::Zero(1, 16);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> hyp = {13, 14, static_cast<int>(13 + trial % 4)};
    std::string raw = generate_label_string(m, prefix, hyp);
    std::size_t tokens = raw.empty() ? 0 : 1;
    for (char c : raw)
      if (c == ';') ++tokens;
    CHECK(tokens <= kMaxLabelSteps);
    CHECK_NOTHROW(parse_labels(raw, m.schema));
  }
}

TEST_CASE("label loss recombines per-example masked means exactly") {
  FusedModel<double> m = tiny_model();
  Mat prefix = Mat::Zero(1, 16);
  auto a = assemble_input<double>(prefix, {13}, {Vocab::kNone}, true, 48);
  auto b = assemble_input<double>(
      prefix, {14, 15}, {Vocab::label_token(DysfluencyClass::Blk),
                        Vocab::label_token(DysfluencyClass::Wrd)}, true, 48);
  double joint = label_loss<double>(m.lm, {a, b});
  double la = m.lm.masked_ce(a, nullptr);
  double lb = m.lm.masked_ce(b, nullptr);
  CHECK(joint == doctest::Approx((la * 2 + lb * 3) / 5).epsilon(1e-12));
}

TEST_CASE("predict respects ablations and mode availability") {
  FusedModel<double> m = tiny_model();
  ClipExample clip;
  clip.id = "c0";
  clip.features = Eigen::MatrixXf::Random(5, 4);
  clip.labels = make_label_set({});
  CHECK_THROWS_AS(predict(m, clip, DecoderMode::OneBest), DataError);
  clip.hyp_1best = std::vector<std::string>{"aa", "bb"};
  CHECK_NOTHROW(predict(m, clip, DecoderMode::OneBest));
  FusionOptions drop;
  drop.drop_hypotheses = true;
  CHECK_NOTHROW(predict(m, clip, DecoderMode::NBest, drop));
}

TEST_CASE("trainable embedding rows are the label region plus markers") {
  FusedModel<double> m = tiny_model();
  auto rows = m.trainable_embedding_rows();
  CHECK(rows.size() == 9);
  for (auto c : kAllClasses)
    CHECK(std::count(rows.begin(), rows.end(), Vocab::label_token(c)) == 1);
  CHECK(std::count(rows.begin(), rows.end(), Vocab::kNone) == 1);
  CHECK(std::count(rows.begin(), rows.end(), Vocab::kLab) == 1);
  CHECK(std::count(rows.begin(), rows.end(), Vocab::kEos) == 1);
}
