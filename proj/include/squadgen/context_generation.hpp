#pragma once

// Turns sampled seed questions into clipped, provenance-tracked
// generated contexts. One generation attempt per seed; failures become
// error records rather than silently vanishing.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/backend.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/jsonl.hpp"
#include "squadgen/squad_data.hpp"
#include "squadgen/text.hpp"

namespace squadgen {

inline constexpr size_t kDefaultMaxContextWords = 250;
inline constexpr const char* kDefaultPromptTemplate =
    "Generate a paragraph which answers the following question: ";

// Template is a prefix the trimmed question is appended to.
inline std::string build_prompt(
    const std::string& question,
    const std::string& prompt_template = kDefaultPromptTemplate) {
  const std::string q = text::trim(question);
  if (q.empty()) throw ValidationError("build_prompt: empty question");
  return prompt_template + q;
}

// Splits on whitespace runs and keeps the first max_words words joined
// by single spaces. Idempotent; never cuts mid-word.
inline std::string clip_context(const std::string& raw,
                                size_t max_words = kDefaultMaxContextWords) {
  return text::join_words(text::split_words(raw), max_words);
}

struct GenerationRecord {
  std::string seed_question_id;
  std::string seed_question;
  std::string source_title;  // article the seed came from
  std::string prompt;
  std::string raw_text;
  std::string clipped_context;
  size_t word_count = 0;
  std::string backend_fingerprint;
  uint64_t sampling_seed = 0;
  std::string created_at;
  std::string error;  // non-empty for failed generations

  bool ok() const { return error.empty(); }
};

inline constexpr int kGenerationRecordVersion = 1;

inline nlohmann::json generation_record_to_json(const GenerationRecord& r) {
  return {{"record_version", kGenerationRecordVersion},
          {"seed_question_id", r.seed_question_id},
          {"seed_question", r.seed_question},
          {"source_title", r.source_title},
          {"prompt", r.prompt},
          {"raw_text", r.raw_text},
          {"clipped_context", r.clipped_context},
          {"word_count", r.word_count},
          {"backend_fingerprint", r.backend_fingerprint},
          {"sampling_seed", r.sampling_seed},
          {"created_at", r.created_at},
          {"error", r.error}};
}

inline GenerationRecord generation_record_from_json(const nlohmann::json& j) {
  GenerationRecord r;
  r.seed_question_id = j.value("seed_question_id", "");
  r.seed_question = j.value("seed_question", "");
  r.source_title = j.value("source_title", "");
  r.prompt = j.value("prompt", "");
  r.raw_text = j.value("raw_text", "");
  r.clipped_context = j.value("clipped_context", "");
  r.word_count = j.value("word_count", size_t{0});
  r.backend_fingerprint = j.value("backend_fingerprint", "");
  r.sampling_seed = j.value("sampling_seed", uint64_t{0});
  r.created_at = j.value("created_at", "");
  r.error = j.value("error", "");
  return r;
}

inline std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct GenerateContextsOptions {
  std::string prompt_template = kDefaultPromptTemplate;
  size_t max_words = kDefaultMaxContextWords;
};

// Fans out over the llm backend; one record per seed, in seed order.
// Every record is written to the provenance stream (when given) before
// return.
inline std::vector<GenerationRecord> generate_contexts(
    const std::vector<SeedQuestion>& seeds, const BackendClient& llm,
    uint64_t run_seed, JsonlWriter* provenance = nullptr,
    const GenerateContextsOptions& opts = {}) {
  std::vector<nlohmann::json> requests;
  requests.reserve(seeds.size());
  std::vector<std::string> prompts;
  prompts.reserve(seeds.size());
  for (const auto& s : seeds) {
    prompts.push_back(build_prompt(s.qa.question, opts.prompt_template));
    requests.push_back(BackendClient::llm_request(prompts.back()));
  }

  const auto results = run_batch(llm, requests);

  std::vector<GenerationRecord> records;
  records.reserve(seeds.size());
  for (size_t i = 0; i < seeds.size(); ++i) {
    GenerationRecord r;
    r.seed_question_id = seeds[i].qa.id;
    r.seed_question = seeds[i].qa.question;
    r.source_title = seeds[i].article_title;
    r.prompt = prompts[i];
    r.sampling_seed = run_seed;
    r.created_at = now_iso8601();
    r.backend_fingerprint =
        request_fingerprint(role_name(Role::llm), requests[i]);
    if (results[i].ok()) {
      const auto& payload = results[i].value->payload;
      if (payload.contains("text") && payload.at("text").is_string()) {
        r.raw_text = payload.at("text").get<std::string>();
        r.clipped_context = clip_context(r.raw_text, opts.max_words);
        r.word_count = text::count_words(r.clipped_context);
      } else {
        r.error = "malformed backend payload: missing 'text'";
      }
    } else {
      r.error = results[i].error;
    }
    if (provenance) provenance->write(generation_record_to_json(r));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace squadgen
