#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "mathsum/corpus/pair.hpp"
#include "mathsum/rng.hpp"
#include "mathsum/vocab/vocabulary.hpp"

using namespace mathsum;
using namespace mathsum::vocab;
using corpus::build_pair;
using corpus::TokenizedPair;

namespace {

std::vector<TokenizedPair> small_corpus() {
  return {build_pair({"1", "b a b $$x$$", "a x"}), build_pair({"2", "c b", "b"})};
}

}  // namespace

TEST(Vocabulary, SpecialsComeFirst) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), 4);
  EXPECT_EQ(v.surface(kPad), "<pad>");
  EXPECT_EQ(v.surface(kUnk), "<unk>");
  EXPECT_EQ(v.surface(kBos), "<s>");
  EXPECT_EQ(v.surface(kEos), "</s>");
  EXPECT_EQ(v.id("nope"), kUnk);
  EXPECT_THROW(v.surface(4), IdOutOfRangeError);
  EXPECT_THROW(v.surface(-1), IdOutOfRangeError);
}

TEST(BuildVocab, FrequencyThenLexicographic) {
  // Counts: b 4, a 2, x 2, <m> 1, </m> 1, c 1.
  const auto v = build_vocab(small_corpus());
  std::vector<std::string> got;
  for (int i = kNumSpecials; i < v.size(); ++i) got.push_back(v.surface(i));
  EXPECT_EQ(got, (std::vector<std::string>{"b", "a", "x", "</m>", "<m>", "c"}));
}

TEST(BuildVocab, CapExcludesSpecials) {
  const auto v = build_vocab(small_corpus(), 2);
  EXPECT_EQ(v.size(), kNumSpecials + 2);
  EXPECT_EQ(v.surface(4), "b");
  EXPECT_EQ(build_vocab(small_corpus(), 0).size(), kNumSpecials);
  EXPECT_THROW(build_vocab(std::vector<TokenizedPair>{}), EmptyCorpusError);
}

TEST(Encode, SpecExample) {
  // Vocabulary {specials, "solve"=4, "x"=5}; "Solve" is case-distinct and OOV.
  Vocabulary v;
  v.push("solve");
  v.push("x");
  const auto p = build_pair({"q", "Solve x y", "solve y z"});
  const auto ex = encode(p, v);
  EXPECT_EQ(ex.src_ids, (std::vector<int>{kUnk, 5, kUnk}));
  EXPECT_EQ(ex.src_ext_ids, (std::vector<int>{6, 5, 7}));
  EXPECT_EQ(ex.oov_list, (std::vector<std::string>{"Solve", "y"}));
  EXPECT_EQ(ex.tgt_ids, (std::vector<int>{kBos, 4, kUnk, kUnk, kEos}));
  EXPECT_EQ(ex.tgt_ext_ids, (std::vector<int>{kBos, 4, 7, kUnk, kEos}));
}

TEST(Encode, RepeatedOovSharesId) {
  const Vocabulary v;
  const auto ex = encode(build_pair({"q", "p q p", "q"}), v);
  EXPECT_EQ(ex.src_ext_ids, (std::vector<int>{4, 5, 4}));
  EXPECT_EQ(ex.tgt_ext_ids, (std::vector<int>{kBos, 5, kEos}));
}

TEST(Encode, LiteralSpecialSurfaceIsOov) {
  auto v = build_vocab(small_corpus());
  const auto ex = encode(build_pair({"q", "<unk> b", "b"}), v);
  EXPECT_EQ(ex.src_ids[0], kUnk);
  EXPECT_EQ(ex.src_ext_ids[0], v.size());
  EXPECT_EQ(ex.oov_list, std::vector<std::string>{"<unk>"});
}

TEST(Encode, Invariants) {
  Rng rng(9);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "h"};
  Vocabulary v;
  v.push("a");
  v.push("b");
  v.push("c");
  for (int c = 0; c < 300; ++c) {
    std::string q, h;
    const auto nq = 1 + rng.below(10), nh = 1 + rng.below(6);
    for (std::size_t i = 0; i < nq; ++i) q += words[rng.below(words.size())] + " ";
    for (std::size_t i = 0; i < nh; ++i) h += words[rng.below(words.size())] + " ";
    const auto p = build_pair({"q", q, h});
    const auto ex = encode(p, v);
    ASSERT_EQ(ex.src_ids.size(), p.source.size());
    ASSERT_EQ(ex.tgt_ids.size(), p.target.size() + 2);
    for (std::size_t i = 0; i < ex.src_ids.size(); ++i) {
      if (ex.src_ids[i] == kUnk) {
        EXPECT_GE(ex.src_ext_ids[i], v.size());
        EXPECT_EQ(ex.oov_list[static_cast<std::size_t>(ex.src_ext_ids[i] - v.size())], p.source[i].surface);
      } else {
        EXPECT_EQ(ex.src_ext_ids[i], ex.src_ids[i]);
      }
    }
    for (int id : ex.tgt_ext_ids) EXPECT_LT(id, v.size() + ex.num_oov());
    // Decoding the extended target recovers the headline when every token is copyable.
    bool copyable = true;
    for (int id : ex.tgt_ext_ids) copyable = copyable && id != kUnk;
    if (copyable) EXPECT_EQ(decode_ids(ex.tgt_ext_ids, v, ex.oov_list), corpus::surfaces(p.target));
  }
}

TEST(DecodeIds, StopsAtEosAndChecksRange) {
  Vocabulary v;
  v.push("w");
  const std::vector<std::string> oov = {"zz"};
  const std::vector<int> ids = {kBos, 4, 5, kEos, 4};
  EXPECT_EQ(decode_ids(ids, v, oov), (std::vector<std::string>{"w", "zz"}));
  const std::vector<int> bad = {6};
  EXPECT_THROW(decode_ids(bad, v, oov), IdOutOfRangeError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto v = build_vocab(small_corpus());
  std::stringstream ss;
  v.save(ss);
  EXPECT_EQ(Vocabulary::load(ss), v);
}

TEST(Vocabulary, LoadRejectsMalformed) {
  std::istringstream no_tab("<pad>0\n");
  EXPECT_THROW(Vocabulary::load(no_tab), FormatError);
  std::istringstream gap("<pad>\t0\n<unk>\t1\n<s>\t2\n</s>\t3\nx\t5\n");
  EXPECT_THROW(Vocabulary::load(gap), FormatError);
  std::istringstream dup("<pad>\t0\n<unk>\t1\n<s>\t2\n</s>\t3\nx\t4\nx\t5\n");
  EXPECT_THROW(Vocabulary::load(dup), FormatError);
  std::istringstream swapped("<unk>\t0\n<pad>\t1\n<s>\t2\n</s>\t3\n");
  EXPECT_THROW(Vocabulary::load(swapped), FormatError);
}
