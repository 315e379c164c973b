#include "squadgen/squad_data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"

using namespace squadgen;

namespace {

const char* kMinimal = R"({
  "version": "1.1",
  "data": [{
    "title": "t",
    "paragraphs": [{
      "context": "The bison roams the plains.",
      "qas": [{
        "id": "q1",
        "question": "What roams?",
        "answers": [{"text": "bison", "answer_start": 4}]
      }]
    }]
  }]
})";

}  // namespace

TEST(ParseDataset, MinimalWellFormed) {
  auto d = parse_dataset(kMinimal);
  ASSERT_EQ(d.articles.size(), 1u);
  ASSERT_EQ(d.articles[0].paragraphs.size(), 1u);
  ASSERT_EQ(d.articles[0].paragraphs[0].qas.size(), 1u);
  EXPECT_EQ(d.articles[0].paragraphs[0].qas[0].answers[0].text, "bison");
}

TEST(ParseDataset, SpanViolationNamesQaId) {
  std::string bad = kMinimal;
  bad.replace(bad.find("\"answer_start\": 4"), 17, "\"answer_start\": 0");
  try {
    parse_dataset(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q1"), std::string::npos);
    EXPECT_NE(msg.find("bison"), std::string::npos);  // expected text
    EXPECT_NE(msg.find("The b"), std::string::npos);  // computed substring
  }
}

TEST(ParseDataset, DuplicateIdRejected) {
  auto d = parse_dataset(kMinimal);
  d.articles[0].paragraphs[0].qas.push_back(
      d.articles[0].paragraphs[0].qas[0]);
  EXPECT_THROW(parse_dataset(serialize_dataset(d)), ParseError);
}

TEST(ParseDataset, MissingFieldAndMalformedSyntax) {
  EXPECT_THROW(parse_dataset("{not json"), ParseError);
  EXPECT_THROW(parse_dataset(R"({"version": "1.1"})"), ParseError);
}

TEST(ParseDataset, LenientDropsInvalidQasWithWarnings) {
  std::string bad = kMinimal;
  bad.replace(bad.find("\"answer_start\": 4"), 17, "\"answer_start\": 0");
  std::vector<std::string> warnings;
  auto d = parse_dataset(bad, ParseOptions{true}, &warnings);
  EXPECT_TRUE(d.articles[0].paragraphs[0].qas.empty());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("q1"), std::string::npos);
}

TEST(SerializeDataset, RoundTripIdentity) {
  auto d = parse_dataset(kMinimal);
  EXPECT_EQ(parse_dataset(serialize_dataset(d)), d);
  // deterministic for equal inputs
  EXPECT_EQ(serialize_dataset(d), serialize_dataset(d));
}

TEST(SerializeDataset, NonAsciiOffsetsRoundTrip) {
  // Offsets count codepoints: "Gurú" is 4 codepoints but 5 UTF-8 bytes.
  const std::string context = "Baisakhi honra al Gurú Gobind Singh";
  QaDataset d;
  d.articles.push_back(
      {"es", {{context, {{"q1", "¿A quién honra?", {{"Gurú", 18}}}}}}});
  validate_dataset(d);
  auto back = parse_dataset(serialize_dataset(d));
  EXPECT_EQ(back, d);
  // independent check: byte-level search confirms the codepoint offset
  EXPECT_EQ(context.find("Gurú"), 18u);  // all preceding chars are ASCII
  EXPECT_EQ(text::substr_cp(context, 18, 4), "Gurú");
}

TEST(SerializeDataset, EmptyDataset) {
  QaDataset d;
  EXPECT_EQ(parse_dataset(serialize_dataset(d)), d);
}

TEST(RoundTripProperty, RandomDatasets) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> words = {"alpha", "β-ray", "naïve", "42",
                                          "tokyo", "東京"};
  for (int iter = 0; iter < 50; ++iter) {
    QaDataset d;
    Article art;
    art.title = "rand";
    const size_t paras = 1 + rng() % 3;
    int id = 0;
    for (size_t i = 0; i < paras; ++i) {
      Paragraph p;
      std::vector<std::string> ws;
      for (size_t k = 0; k < 3 + rng() % 8; ++k)
        ws.push_back(words[rng() % words.size()]);
      p.context = text::join_words(ws, ws.size());
      const size_t pick = rng() % ws.size();
      const auto off = text::find_cp(p.context, ws[pick]);
      ASSERT_TRUE(off.has_value());
      p.qas.push_back({"r" + std::to_string(id++) + "-" +
                           std::to_string(iter),
                       "which word?",
                       {{ws[pick], *off}}});
      art.paragraphs.push_back(std::move(p));
    }
    d.articles.push_back(std::move(art));
    validate_dataset(d);
    EXPECT_EQ(parse_dataset(serialize_dataset(d)), d);
  }
}

TEST(DatasetStats, CountsAndMeans) {
  auto d = testutil::make_dataset(
      {{"one two three", {{"q?", "one"}, {"q2?", "two three"}}},
       {"four five", {{"q3?", "five"}}}});
  auto s = dataset_stats(d);
  EXPECT_EQ(s.num_articles, 1u);
  EXPECT_EQ(s.num_contexts, 2u);
  EXPECT_EQ(s.num_qas, 3u);
  EXPECT_DOUBLE_EQ(s.mean_context_words, 2.5);
  EXPECT_DOUBLE_EQ(s.mean_answers_per_qa, 1.0);
}

TEST(DatasetStats, EmptyDatasetAllZero) {
  auto s = dataset_stats(QaDataset{});
  EXPECT_EQ(s.num_articles, 0u);
  EXPECT_EQ(s.num_qas, 0u);
  EXPECT_DOUBLE_EQ(s.mean_context_words, 0.0);
}

TEST(SampleSeedQuestions, OnePerContext) {
  auto d = testutil::make_dataset(
      {{"c one two", {{"qa?", "one"}, {"qb?", "two"}}},
       {"c three four", {{"qc?", "three"}, {"qd?", "four"}}},
       {"c five six", {{"qe?", "five"}, {"qf?", "six"}}}});
  auto seeds = sample_seed_questions(d, 123);
  ASSERT_EQ(seeds.size(), 3u);
  for (size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(seeds[i].paragraph_index, i);
    // selected QA belongs to its paragraph
    const auto& para = d.articles[0].paragraphs[i];
    EXPECT_NE(std::find(para.qas.begin(), para.qas.end(), seeds[i].qa),
              para.qas.end());
  }
}

TEST(SampleSeedQuestions, ForcedChoiceAndDeterminism) {
  auto d = testutil::make_dataset({{"only context", {{"q?", "only"}}}});
  for (uint64_t seed : {0u, 7u, 424242u}) {
    auto seeds = sample_seed_questions(d, seed);
    ASSERT_EQ(seeds.size(), 1u);
    EXPECT_EQ(seeds[0].qa.question, "q?");
  }

  auto big = testutil::make_dataset(
      {{"a b c d", {{"q1?", "a"}, {"q2?", "b"}, {"q3?", "c"}}},
       {"e f g", {{"q4?", "e"}, {"q5?", "f"}}}});
  auto first = sample_seed_questions(big, 555);
  auto second = sample_seed_questions(big, 555);
  ASSERT_EQ(first.size(), second.size());
  for (size_t i = 0; i < first.size(); ++i)
    EXPECT_EQ(first[i].qa.id, second[i].qa.id);
}

TEST(SampleSeedQuestions, EmptyParagraphIsError) {
  QaDataset d;
  d.articles.push_back({"t", {{"context with no qas", {}}}});
  EXPECT_THROW(sample_seed_questions(d, 1), ValidationError);
}

TEST(Text, ClipAndWordSplitAgree) {
  // mean_context_words and clip_context share the word rule
  const std::string s = "one  two\tthree\nfour";
  EXPECT_EQ(text::count_words(s), 4u);
  EXPECT_EQ(text::join_words(text::split_words(s), 2), "one two");
}
