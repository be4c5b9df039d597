#include "toc/dictionary.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace toc {
namespace {

constexpr ColumnValuePair kA{0, 1}, kB{1, 2}, kC{2, 3}, kD{3, 4}, kE{4, 5}, kF{0, 6}, kG{1, 7};

// Start indexes 0..4, then a..g as single-pair entries (codes 5..11).
EncoderDictionary initialized_toy() {
  EncoderDictionary d;
  for (std::uint32_t c = 0; c < 5; ++c) d.add_start_index(c);
  for (const auto& p : {kA, kB, kC, kD, kE, kF, kG}) d.add(d.start_code(p.column), p);
  return d;
}

TEST(DictionaryTest, FirstStartIndexGetsCodeZero) {
  EncoderDictionary d;
  EXPECT_EQ(d.add_start_index(0), 0u);
  EXPECT_EQ(d.entry(0).parent, kNoParent);
  EXPECT_EQ(d.entry(0).start_index, -1);
  EXPECT_EQ(d.add_start_index(1), 1u);
  EXPECT_THROW(d.add_start_index(1), InvalidArgument);
}

TEST(DictionaryTest, InitializedToyCodes) {
  const EncoderDictionary d = initialized_toy();
  ASSERT_EQ(d.size(), 12u);
  EXPECT_EQ(get_index(d, 0, kA), 5u);
  EXPECT_EQ(get_index(d, 4, kE), 9u);
  EXPECT_EQ(get_index(d, 0, kF), 10u);
  EXPECT_EQ(get_index(d, 1, kG), 11u);
  EXPECT_EQ(d.sequence(5), (EncoderDictionary::Sequence{0, {1}}));
}

TEST(DictionaryTest, GetIndexUnseenIsNotFound) {
  const EncoderDictionary d = initialized_toy();
  EXPECT_EQ(get_index(d, 5, ColumnValuePair{1, 99.0}), kNotFound);
  // Same value under another start index is a different entry.
  EXPECT_EQ(get_index(d, 1, ColumnValuePair{1, 1.0}), kNotFound);
}

TEST(DictionaryTest, ExtendingCodeOfCWithDIsCode14) {
  EncoderDictionary d = initialized_toy();
  EXPECT_EQ(d.add(5, kB), 12u);
  EXPECT_EQ(d.add(6, kC), 13u);
  EXPECT_EQ(d.add(7, kD), 14u);
  EXPECT_EQ(d.sequence(14), (EncoderDictionary::Sequence{2, {3, 4}}));
  EXPECT_EQ(get_index(d, 7, kD), 14u);
}

TEST(DictionaryTest, ExtendingNonexistentCodeIsAnInvariantError) {
  EncoderDictionary d = initialized_toy();
  EXPECT_THROW(d.add(40, kB), std::logic_error);
}

TEST(DictionaryTest, KeysIncludeTheColumn) {
  EncoderDictionary d = initialized_toy();
  const Code ab = d.add(5, kB);
  // (1, 2) and (2, 2) are different pairs even with equal values.
  EXPECT_EQ(get_index(d, 5, ColumnValuePair{2, 2}), kNotFound);
  EXPECT_EQ(get_index(d, 5, kB), ab);
}

TEST(LongestMatchTest, FreshDictionaryMatchesOnePair) {
  const EncoderDictionary d = initialized_toy();
  const std::vector<ColumnValuePair> t1{kA, kB, kC, kD, kE};
  EXPECT_EQ(get_longest_match(d, t1, 0), (Match{5, 1}));
}

TEST(LongestMatchTest, SecondTupleAfterFirst) {
  EncoderDictionary d = initialized_toy();
  d.add(5, kB);
  d.add(6, kC);
  d.add(7, kD);
  d.add(8, kE);
  const std::vector<ColumnValuePair> t2{kF, kG, kC, kD, kE};
  EXPECT_EQ(get_longest_match(d, t2, 2), (Match{14, 4}));
}

TEST(LongestMatchTest, StopsAtRowEnd) {
  EncoderDictionary d = initialized_toy();
  const Code de = d.add(8, kE);
  const std::vector<ColumnValuePair> row{kA, kD, kE};
  EXPECT_EQ(get_longest_match(d, row, 2), (Match{9, 3}));
  EXPECT_EQ(get_longest_match(d, row, 1), (Match{de, 3}));
  EXPECT_THROW(get_longest_match(d, row, 3), InvalidArgument);
}

}  // namespace
}  // namespace toc
