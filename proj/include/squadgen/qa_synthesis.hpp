#pragma once

// From generated contexts to a filtered extractive dataset: QG
// invocation happens in the pipeline; this module aligns candidate
// answers to spans, applies the round-trip consistency filter (keep a
// pair only if an independent reader reproduces the answer), and
// assembles the resulting generated dataset.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/backend.hpp"
#include "squadgen/context_generation.hpp"
#include "squadgen/eval_metrics.hpp"
#include "squadgen/squad_data.hpp"
#include "squadgen/text.hpp"

namespace squadgen {

struct CandidatePair {
  std::string context_ref;  // seed_question_id of the owning record
  std::string question;
  std::string answer_text;
  std::optional<AnswerSpan> aligned_span;
  bool case_fallback = false;  // span found only case-insensitively
  size_t occurrence_count = 0;  // alignment ambiguity, for the log
};

enum class DropReason {
  none,
  no_span,
  roundtrip_fail,
  empty_question,
  empty_answer,
  duplicate,
  cap_exceeded,
};

inline const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::no_span: return "no_span";
    case DropReason::roundtrip_fail: return "roundtrip_fail";
    case DropReason::empty_question: return "empty_question";
    case DropReason::empty_answer: return "empty_answer";
    case DropReason::duplicate: return "duplicate";
    case DropReason::cap_exceeded: return "cap_exceeded";
    default: return "";
  }
}

struct FilterCriterion {
  enum class Kind { exact, f1_threshold };
  Kind kind = Kind::exact;
  double tau = 0.8;  // only used by f1_threshold

  std::string name() const {
    if (kind == Kind::exact) return "exact";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "f1_threshold(%.2f)", tau);
    return buf;
  }
};

struct FilterDecision {
  CandidatePair candidate;
  std::string reader_answer;
  double score = 0.0;
  std::string criterion;
  bool keep = false;
  DropReason drop_reason = DropReason::none;
  std::string error_note;  // backend failure detail, when any
};

inline nlohmann::json filter_decision_to_json(const FilterDecision& d) {
  nlohmann::json span = nullptr;
  if (d.candidate.aligned_span)
    span = {{"text", d.candidate.aligned_span->text},
            {"answer_start", d.candidate.aligned_span->answer_start}};
  return {{"context_ref", d.candidate.context_ref},
          {"question", d.candidate.question},
          {"answer_text", d.candidate.answer_text},
          {"aligned_span", span},
          {"case_fallback", d.candidate.case_fallback},
          {"occurrence_count", d.candidate.occurrence_count},
          {"reader_answer", d.reader_answer},
          {"score", d.score},
          {"criterion", d.criterion},
          {"verdict", d.keep ? "keep" : "drop"},
          {"drop_reason", drop_reason_name(d.drop_reason)},
          {"error_note", d.error_note}};
}

struct AlignResult {
  std::optional<AnswerSpan> span;
  bool case_fallback = false;
  size_t occurrence_count = 0;
};

inline size_t count_occurrences(std::string_view haystack,
                                std::string_view needle) {
  if (needle.empty()) return 0;
  size_t n = 0, pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++n;
    ++pos;
  }
  return n;
}

// First case-sensitive occurrence of the trimmed answer, offset in
// codepoints. Falls back to an ASCII case-insensitive search; the
// fallback span carries the context's casing so the extractive
// invariant still holds.
inline AlignResult align_answer_span(const std::string& context,
                                     const std::string& answer_text) {
  AlignResult result;
  const std::string needle = text::trim(answer_text);
  if (needle.empty())
    throw ValidationError("align_answer_span: whitespace-only answer");
  if (context.empty())
    throw ValidationError("align_answer_span: empty context");

  if (auto off = text::find_cp(context, needle)) {
    result.span = AnswerSpan{needle, *off};
    result.occurrence_count = count_occurrences(context, needle);
    return result;
  }

  const std::string lower_context = text::to_lower_ascii(context);
  const std::string lower_needle = text::to_lower_ascii(needle);
  const size_t byte_pos = lower_context.find(lower_needle);
  if (byte_pos != std::string::npos) {
    const size_t cp_off = text::cp_length(
        std::string_view(context).substr(0, byte_pos));
    result.span = AnswerSpan{
        std::string(std::string_view(context)
                        .substr(byte_pos, lower_needle.size())),
        cp_off};
    result.case_fallback = true;
    result.occurrence_count = count_occurrences(lower_context, lower_needle);
  }
  return result;  // span empty: not found (no_span downstream)
}

inline bool criterion_keeps(const FilterCriterion& c, double score) {
  if (c.kind == FilterCriterion::Kind::exact) return score >= 1.0;
  return score >= c.tau;
}

inline double roundtrip_score(const FilterCriterion& c,
                              const std::string& reader_answer,
                              const std::string& answer_text) {
  if (c.kind == FilterCriterion::Kind::exact)
    return exact_match(reader_answer, answer_text) ? 1.0 : 0.0;
  return token_f1(reader_answer, answer_text);
}

struct RoundtripOptions {
  bool hard_fail_on_backend_error = false;
};

// Queries the reader with (generated context, question) for every
// span-aligned candidate; unaligned or empty candidates are decided
// without a reader call. contexts maps context_ref to the generated
// context the candidate belongs to.
inline std::vector<FilterDecision> roundtrip_filter(
    const std::vector<CandidatePair>& candidates,
    const std::map<std::string, std::string>& contexts,
    const BackendClient& reader, const FilterCriterion& criterion,
    JsonlWriter* decision_log = nullptr, const RoundtripOptions& opts = {}) {
  std::vector<FilterDecision> decisions(candidates.size());
  std::vector<size_t> query_index;
  std::vector<nlohmann::json> requests;

  for (size_t i = 0; i < candidates.size(); ++i) {
    auto& d = decisions[i];
    d.candidate = candidates[i];
    d.criterion = criterion.name();
    if (text::trim(candidates[i].question).empty()) {
      d.drop_reason = DropReason::empty_question;
      continue;
    }
    if (text::trim(candidates[i].answer_text).empty()) {
      d.drop_reason = DropReason::empty_answer;
      continue;
    }
    if (!candidates[i].aligned_span) {
      d.drop_reason = DropReason::no_span;
      continue;
    }
    auto ctx = contexts.find(candidates[i].context_ref);
    if (ctx == contexts.end()) {
      d.drop_reason = DropReason::no_span;
      d.error_note = "unknown context_ref " + candidates[i].context_ref;
      continue;
    }
    query_index.push_back(i);
    requests.push_back(
        BackendClient::reader_request(ctx->second, candidates[i].question));
  }

  const auto results = run_batch(reader, requests);
  for (size_t k = 0; k < query_index.size(); ++k) {
    auto& d = decisions[query_index[k]];
    if (!results[k].ok()) {
      if (opts.hard_fail_on_backend_error)
        throw BackendError("round-trip reader failed: " + results[k].error);
      d.drop_reason = DropReason::roundtrip_fail;
      d.error_note = results[k].error;
      continue;
    }
    const auto& payload = results[k].value->payload;
    d.reader_answer = payload.value("answer", "");
    d.score =
        roundtrip_score(criterion, d.reader_answer, d.candidate.answer_text);
    if (criterion_keeps(criterion, d.score)) {
      d.keep = true;
    } else {
      d.drop_reason = DropReason::roundtrip_fail;
    }
  }

  if (decision_log)
    for (const auto& d : decisions)
      decision_log->write(filter_decision_to_json(d));
  return decisions;
}

struct AssembleOptions {
  size_t max_pairs_per_context = 10;
};

// Builds the generated dataset: one paragraph per record with kept
// pairs, deterministic QA ids `gen-{seed_question_id}-{k}`, article
// title `SQUAD-G:{source_title}`. Within a context, repeated
// (question, answer) pairs keep the first occurrence; later ones and
// pairs beyond the per-context cap are demoted to drops. Demotions are
// appended to `extra_drops` when given so the decision log stays
// complete.
inline QaDataset assemble_generated_dataset(
    const std::vector<GenerationRecord>& records,
    const std::vector<FilterDecision>& decisions,
    const AssembleOptions& opts = {},
    std::vector<FilterDecision>* extra_drops = nullptr) {
  std::map<std::string, std::vector<const FilterDecision*>> kept_by_ref;
  for (const auto& d : decisions)
    if (d.keep) kept_by_ref[d.candidate.context_ref].push_back(&d);

  QaDataset out;
  for (const auto& rec : records) {
    auto it = kept_by_ref.find(rec.seed_question_id);
    if (it == kept_by_ref.end() || !rec.ok()) continue;

    Paragraph para;
    para.context = rec.clipped_context;
    std::set<std::pair<std::string, std::string>> seen;
    size_t k = 0;
    for (const FilterDecision* d : it->second) {
      const auto key = std::make_pair(d->candidate.question,
                                      d->candidate.answer_text);
      DropReason demote = DropReason::none;
      if (!seen.insert(key).second) {
        demote = DropReason::duplicate;
      } else if (para.qas.size() >= opts.max_pairs_per_context) {
        demote = DropReason::cap_exceeded;
      }
      if (demote != DropReason::none) {
        if (extra_drops) {
          FilterDecision drop = *d;
          drop.keep = false;
          drop.drop_reason = demote;
          extra_drops->push_back(std::move(drop));
        }
        continue;
      }
      QaPair qa;
      qa.id = "gen-" + rec.seed_question_id + "-" + std::to_string(k++);
      qa.question = d->candidate.question;
      qa.answers.push_back(*d->candidate.aligned_span);
      para.qas.push_back(std::move(qa));
    }
    if (para.qas.empty()) continue;

    Article art;
    art.title = "SQUAD-G:" + rec.source_title;
    art.paragraphs.push_back(std::move(para));
    out.articles.push_back(std::move(art));
  }
  validate_dataset(out);
  return out;
}

}  // namespace squadgen
