#pragma once

// SQuAD v1.1 dataset model: parsing, validation, serialization, summary
// statistics, and seeded per-context question sampling.
//
// Answer offsets are counted in Unicode scalar values, not bytes. The
// JSON files on disk are UTF-8; `answer_start` indexes codepoints of the
// owning context. Getting this wrong is the classic SQuAD tooling bug,
// so every load and every emit re-checks the extractive invariant.

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/rng.hpp"
#include "squadgen/text.hpp"

namespace squadgen {

struct AnswerSpan {
  std::string text;
  size_t answer_start = 0;  // codepoint offset into the owning context

  bool operator==(const AnswerSpan&) const = default;
};

struct QaPair {
  std::string id;
  std::string question;
  std::vector<AnswerSpan> answers;

  bool operator==(const QaPair&) const = default;
};

struct Paragraph {
  std::string context;
  std::vector<QaPair> qas;

  bool operator==(const Paragraph&) const = default;
};

struct Article {
  std::string title;
  std::vector<Paragraph> paragraphs;

  bool operator==(const Article&) const = default;
};

struct QaDataset {
  std::string version = "1.1";
  std::vector<Article> articles;

  bool operator==(const QaDataset&) const = default;
};

struct DatasetStats {
  size_t num_articles = 0;
  size_t num_contexts = 0;
  size_t num_qas = 0;
  double mean_context_words = 0.0;
  double mean_answers_per_qa = 0.0;
};

// True iff context[start .. start+len(text)) equals text, counted in
// codepoints.
inline bool span_matches(const std::string& context, const AnswerSpan& a) {
  return text::substr_cp(context, a.answer_start,
                         text::cp_length(a.text)) == a.text;
}

struct ParseOptions {
  // Lenient mode drops invalid QAs (bad spans, empty questions, duplicate
  // ids) with a warning instead of failing; for noisy third-party files.
  bool lenient = false;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* key,
                                           const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError("missing required field '" + std::string(key) + "' in " +
                     where);
  return *it;
}

}  // namespace detail

inline QaDataset parse_dataset(const std::string& bytes,
                               const ParseOptions& opts = {},
                               std::vector<std::string>* warnings = nullptr) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  QaDataset d;
  d.version = root.value("version", "1.1");
  const auto& data = detail::require_field(root, "data", "top level");
  if (!data.is_array()) throw ParseError("'data' must be an array");

  std::set<std::string> seen_ids;
  for (const auto& ja : data) {
    Article art;
    art.title = ja.value("title", "");
    const auto& paras =
        detail::require_field(ja, "paragraphs", "article '" + art.title + "'");
    for (const auto& jp : paras) {
      Paragraph p;
      p.context =
          detail::require_field(jp, "context", "paragraph").get<std::string>();
      if (p.context.empty()) {
        if (opts.lenient) {
          warn("dropping paragraph with empty context in article '" +
               art.title + "'");
          continue;
        }
        throw ParseError("empty context in article '" + art.title + "'");
      }
      const auto& qas = detail::require_field(jp, "qas", "paragraph");
      for (const auto& jq : qas) {
        QaPair qa;
        qa.id = detail::require_field(jq, "id", "qa").get<std::string>();
        qa.question =
            detail::require_field(jq, "question", "qa " + qa.id)
                .get<std::string>();
        const auto& answers =
            detail::require_field(jq, "answers", "qa " + qa.id);
        for (const auto& jans : answers) {
          AnswerSpan a;
          a.text = detail::require_field(jans, "text", "answer of qa " + qa.id)
                       .get<std::string>();
          a.answer_start =
              detail::require_field(jans, "answer_start",
                                    "answer of qa " + qa.id)
                  .get<size_t>();
          qa.answers.push_back(std::move(a));
        }

        std::string problem;
        if (text::trim(qa.question).empty()) {
          problem = "empty question";
        } else if (qa.answers.empty()) {
          problem = "no answers";
        } else if (!seen_ids.insert(qa.id).second) {
          problem = "duplicate QA id";
        } else {
          for (const auto& a : qa.answers) {
            if (!span_matches(p.context, a)) {
              problem = "span invariant violated: answer text \"" + a.text +
                        "\" but context at offset " +
                        std::to_string(a.answer_start) + " reads \"" +
                        std::string(text::substr_cp(
                            p.context, a.answer_start,
                            text::cp_length(a.text))) +
                        "\"";
              break;
            }
          }
        }
        if (!problem.empty()) {
          if (opts.lenient) {
            warn("dropping qa '" + qa.id + "': " + problem);
            continue;
          }
          throw ParseError("qa '" + qa.id + "': " + problem);
        }
        p.qas.push_back(std::move(qa));
      }
      art.paragraphs.push_back(std::move(p));
    }
    d.articles.push_back(std::move(art));
  }
  return d;
}

// Re-checks every invariant on an in-memory dataset; used as the hard
// gate on everything this toolkit emits.
inline void validate_dataset(const QaDataset& d) {
  std::set<std::string> seen_ids;
  for (const auto& art : d.articles) {
    for (const auto& p : art.paragraphs) {
      if (p.context.empty())
        throw ValidationError("empty context in article '" + art.title + "'");
      for (const auto& qa : p.qas) {
        if (text::trim(qa.question).empty())
          throw ValidationError("qa '" + qa.id + "': empty question");
        if (qa.answers.empty())
          throw ValidationError("qa '" + qa.id + "': no answers");
        if (!seen_ids.insert(qa.id).second)
          throw ValidationError("duplicate QA id '" + qa.id + "'");
        for (const auto& a : qa.answers) {
          if (!span_matches(p.context, a))
            throw ValidationError("qa '" + qa.id +
                                  "': span invariant violated for answer \"" +
                                  a.text + "\"");
        }
      }
    }
  }
}

inline nlohmann::json dataset_to_json(const QaDataset& d) {
  nlohmann::json data = nlohmann::json::array();
  for (const auto& art : d.articles) {
    nlohmann::json paragraphs = nlohmann::json::array();
    for (const auto& p : art.paragraphs) {
      nlohmann::json qas = nlohmann::json::array();
      for (const auto& qa : p.qas) {
        nlohmann::json answers = nlohmann::json::array();
        for (const auto& a : qa.answers)
          answers.push_back(
              {{"text", a.text}, {"answer_start", a.answer_start}});
        qas.push_back({{"id", qa.id},
                       {"question", qa.question},
                       {"answers", answers}});
      }
      paragraphs.push_back({{"context", p.context}, {"qas", qas}});
    }
    data.push_back({{"title", art.title}, {"paragraphs", paragraphs}});
  }
  return {{"version", d.version}, {"data", data}};
}

// Deterministic for equal inputs: nlohmann dumps object keys sorted.
inline std::string serialize_dataset(const QaDataset& d) {
  return dataset_to_json(d).dump(1) + "\n";
}

inline DatasetStats dataset_stats(const QaDataset& d) {
  DatasetStats s;
  s.num_articles = d.articles.size();
  size_t total_words = 0, total_answers = 0;
  for (const auto& art : d.articles) {
    for (const auto& p : art.paragraphs) {
      ++s.num_contexts;
      total_words += text::count_words(p.context);
      for (const auto& qa : p.qas) {
        ++s.num_qas;
        total_answers += qa.answers.size();
      }
    }
  }
  if (s.num_contexts)
    s.mean_context_words =
        static_cast<double>(total_words) / static_cast<double>(s.num_contexts);
  if (s.num_qas)
    s.mean_answers_per_qa =
        static_cast<double>(total_answers) / static_cast<double>(s.num_qas);
  return s;
}

// One sampled question per context, with enough provenance to assemble
// the generated dataset later.
struct SeedQuestion {
  std::string article_title;
  size_t paragraph_index = 0;  // index within the whole dataset, in order
  std::string context;
  QaPair qa;
};

// Picks exactly one QA per paragraph, uniformly with the given seed.
// Output follows paragraph order and is a pure function of (d, seed).
inline std::vector<SeedQuestion> sample_seed_questions(const QaDataset& d,
                                                       uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SeedQuestion> out;
  size_t para_index = 0;
  for (const auto& art : d.articles) {
    for (const auto& p : art.paragraphs) {
      if (p.qas.empty())
        throw ValidationError("paragraph " + std::to_string(para_index) +
                              " in article '" + art.title + "' has no QAs");
      const size_t pick =
          static_cast<size_t>(uniform_below(rng, p.qas.size()));
      out.push_back({art.title, para_index, p.context, p.qas[pick]});
      ++para_index;
    }
  }
  return out;
}

inline QaDataset load_dataset_file(const std::string& path,
                                   const ParseOptions& opts = {},
                                   std::vector<std::string>* warnings =
                                       nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), opts, warnings);
}

}  // namespace squadgen
