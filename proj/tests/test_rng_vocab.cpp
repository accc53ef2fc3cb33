#include <doctest.h>

#include "dysflm/errors.hpp"
#include "dysflm/rng.hpp"
#include "dysflm/vocab.hpp"

using namespace dysflm;

TEST_CASE("named substreams are deterministic and distinct") {
  Rng a1 = make_rng(42, "shuffle");
  Rng a2 = make_rng(42, "shuffle");
  Rng b = make_rng(42, "dropout");
  Rng c = make_rng(43, "shuffle");
  CHECK(a1() == a2());
  CHECK(make_rng(42, "shuffle")() != b());
  CHECK(make_rng(42, "shuffle")() != c());
  CHECK(make_rng(42, "clip", 0)() != make_rng(42, "clip", 1)());
}

TEST_CASE("vocab reserves fixed low ids") {
  Vocab v;
  CHECK(v.token(Vocab::kPad) == "[PAD]");
  CHECK(v.token(Vocab::kBos) == "[BOS]");
  CHECK(v.token(Vocab::kEos) == "[EOS]");
  CHECK(v.token(Vocab::kSep) == "[SEP]");
  CHECK(v.token(Vocab::kLab) == "[LAB]");
  CHECK(v.token(Vocab::kUnk) == "[UNK]");
  CHECK(Vocab::label_token(DysfluencyClass::Blk) == Vocab::kFirstLabel);
  CHECK(v.token(Vocab::label_token(DysfluencyClass::Wrd)) == "Wrd");
  CHECK(v.token(Vocab::kNone) == "None");
  CHECK(v.size() == Vocab::kFirstCorpus);
}

TEST_CASE("build appends corpus tokens sorted and deduplicated") {
  Vocab v = Vocab::build({"zebra", "apple", "apple", "mango"});
  CHECK(v.size() == Vocab::kFirstCorpus + 3);
  CHECK(v.id("apple") == Vocab::kFirstCorpus);
  CHECK(v.id("mango") == Vocab::kFirstCorpus + 1);
  CHECK(v.id("zebra") == Vocab::kFirstCorpus + 2);
  CHECK(v.id("missing") == Vocab::kUnk);
  CHECK(v.has("mango"));
  CHECK(!v.has("missing"));
  auto ids = v.encode({"apple", "missing"});
  CHECK(ids == std::vector<int>{Vocab::kFirstCorpus, Vocab::kUnk});
  CHECK(v.decode(ids) == std::vector<std::string>{"apple", "[UNK]"});
  CHECK_THROWS_AS(v.token(v.size()), DataError);
}

TEST_CASE("whitespace split and join") {
  CHECK(split_ws("  a  bb c ") == std::vector<std::string>{"a", "bb", "c"});
  CHECK(split_ws("") == std::vector<std::string>{});
  CHECK(join_ws({"a", "bb"}) == "a bb");
}
