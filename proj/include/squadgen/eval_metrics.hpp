#pragma once

// SQuAD v1.1 Exact Match and token-level F1, following the official
// evaluation script semantics: normalize (lowercase, strip punctuation,
// drop English articles, collapse whitespace), then compare strings (EM)
// or multisets of whitespace tokens (F1), taking the max over gold
// answers. Aggregates are macro-averages on a 0-100 scale.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/squad_data.hpp"
#include "squadgen/text.hpp"

namespace squadgen {

// Punctuation stripped by normalize_answer. The official script removes
// ASCII string.punctuation; NDS sources carry curly quotes and dashes,
// so the set extends to the common Unicode punctuation codepoints below.
inline bool is_punct_cp(uint32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
  }
  switch (cp) {
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:  // curly quotes
    case 0x2010: case 0x2011: case 0x2012: case 0x2013:  // hyphens/dashes
    case 0x2014: case 0x2015:
    case 0x2026:                                          // ellipsis
    case 0x00A1: case 0x00BF:                             // inverted ! ?
    case 0x00AB: case 0x00BB:                             // guillemets
      return true;
    default:
      return false;
  }
}

// Lowercase; strip punctuation; drop "a"/"an"/"the" as whole tokens;
// collapse whitespace; trim. Applied before every EM/F1 comparison.
inline std::string normalize_answer(std::string_view s) {
  std::string lowered;
  lowered.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const size_t start = i;
    const uint32_t cp = text::decode_cp(s, i);
    if (is_punct_cp(cp)) continue;
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      lowered += c;
    } else {
      lowered.append(s.substr(start, i - start));
    }
  }
  std::string out;
  for (const auto& tok : text::split_words(lowered)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

inline int exact_match(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

// Multiset token overlap, harmonic mean of precision and recall.
inline double token_f1(std::string_view pred, std::string_view gold) {
  const auto pred_tokens = text::split_words(normalize_answer(pred));
  const auto gold_tokens = text::split_words(normalize_answer(gold));
  if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
  if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

  std::map<std::string, int> counts;
  for (const auto& t : gold_tokens) ++counts[t];
  size_t overlap = 0;
  for (const auto& t : pred_tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision =
      static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
  const double recall =
      static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
  return 2.0 * precision * recall / (precision + recall);
}

struct QuestionScore {
  int em = 0;
  double f1 = 0.0;
};

inline QuestionScore score_prediction(std::string_view pred,
                                      const std::vector<std::string>& golds) {
  if (golds.empty()) throw ValidationError("score_prediction: empty golds");
  QuestionScore best;
  for (const auto& g : golds) {
    best.em = std::max(best.em, exact_match(pred, g));
    best.f1 = std::max(best.f1, token_f1(pred, g));
  }
  return best;
}

using PredictionSet = std::map<std::string, std::string>;

struct EvalReport {
  std::string dataset_name;
  double em = 0.0;  // 0-100
  double f1 = 0.0;  // 0-100
  size_t num_questions = 0;
  std::map<std::string, QuestionScore> per_question;
  std::vector<std::string> missing_predictions;
  std::vector<std::string> unknown_prediction_ids;  // preds absent from gold
};

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json per_q = nlohmann::json::object();
  for (const auto& [id, s] : r.per_question)
    per_q[id] = {{"em", s.em}, {"f1", s.f1}};
  return {{"dataset_name", r.dataset_name},
          {"em", r.em},
          {"f1", r.f1},
          {"num_questions", r.num_questions},
          {"per_question", per_q},
          {"missing_predictions", r.missing_predictions},
          {"unknown_prediction_ids", r.unknown_prediction_ids}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.dataset_name = j.value("dataset_name", "");
  r.em = j.at("em").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.num_questions = j.value("num_questions", size_t{0});
  if (j.contains("per_question"))
    for (const auto& [id, s] : j.at("per_question").items())
      r.per_question[id] = {s.at("em").get<int>(), s.at("f1").get<double>()};
  if (j.contains("missing_predictions"))
    r.missing_predictions =
        j.at("missing_predictions").get<std::vector<std::string>>();
  if (j.contains("unknown_prediction_ids"))
    r.unknown_prediction_ids =
        j.at("unknown_prediction_ids").get<std::vector<std::string>>();
  return r;
}

// Macro-averaged EM/F1 over all gold questions. Missing predictions
// score (0, 0) and are listed; predictions for unknown ids are surfaced
// as warnings, never a failure.
inline EvalReport evaluate_dataset(const QaDataset& gold,
                                   const PredictionSet& preds,
                                   const std::string& dataset_name = "") {
  EvalReport r;
  r.dataset_name = dataset_name;
  double em_sum = 0.0, f1_sum = 0.0;
  std::set<std::string> gold_ids;
  for (const auto& art : gold.articles) {
    for (const auto& p : art.paragraphs) {
      for (const auto& qa : p.qas) {
        gold_ids.insert(qa.id);
        ++r.num_questions;
        auto it = preds.find(qa.id);
        QuestionScore s;
        if (it == preds.end()) {
          r.missing_predictions.push_back(qa.id);
        } else {
          std::vector<std::string> golds;
          golds.reserve(qa.answers.size());
          for (const auto& a : qa.answers) golds.push_back(a.text);
          s = score_prediction(it->second, golds);
        }
        r.per_question[qa.id] = s;
        em_sum += s.em;
        f1_sum += s.f1;
      }
    }
  }
  for (const auto& [id, unused] : preds)
    if (!gold_ids.count(id)) r.unknown_prediction_ids.push_back(id);
  if (r.num_questions) {
    r.em = 100.0 * em_sum / static_cast<double>(r.num_questions);
    r.f1 = 100.0 * f1_sum / static_cast<double>(r.num_questions);
  }
  return r;
}

// One-decimal rendering, rounded half-up, as in published result tables.
inline std::string format_score(double v) {
  const double r = std::floor(v * 10.0 + 0.5) / 10.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", r);
  return buf;
}

inline PredictionSet parse_predictions(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed prediction file: ") + e.what());
  }
  if (!j.is_object())
    throw ParseError("prediction file must be a flat JSON object");
  PredictionSet preds;
  for (const auto& [id, v] : j.items()) preds[id] = v.get<std::string>();
  return preds;
}

}  // namespace squadgen
