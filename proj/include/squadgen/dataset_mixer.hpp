#pragma once

// Combines a real dataset with a generated pool at a controlled ratio:
// all real QAs plus round(ratio * |real|) generated QAs sampled
// uniformly without replacement under a fixed seed. Sampling is at QA
// granularity so the ratio is exact in sample counts; sampled QAs carry
// their paragraph context, deduplicated when several share one.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "squadgen/eval_metrics.hpp"
#include "squadgen/errors.hpp"
#include "squadgen/rng.hpp"
#include "squadgen/squad_data.hpp"

namespace squadgen {

struct MixSpec {
  double ratio = 1.0;  // generated size as a fraction of real size
  uint64_t seed = 0;
  bool dedup = false;
  bool shuffle_output = true;
  std::string gen_tag = "gen";  // namespace prefix for generated ids
};

inline MixSpec mix_spec_from_json(const nlohmann::json& j) {
  MixSpec s;
  s.ratio = j.value("ratio", 1.0);
  s.seed = j.value("seed", uint64_t{0});
  s.dedup = j.value("dedup", false);
  s.shuffle_output = j.value("shuffle_output", true);
  s.gen_tag = j.value("gen_tag", "gen");
  if (s.ratio <= 0) throw ConfigError("mix ratio must be > 0");
  return s;
}

inline nlohmann::json mix_spec_to_json(const MixSpec& s) {
  return {{"ratio", s.ratio},
          {"seed", s.seed},
          {"dedup", s.dedup},
          {"shuffle_output", s.shuffle_output},
          {"gen_tag", s.gen_tag}};
}

// Sidecar manifest: enough to re-derive the mix bit-exactly.
struct MixManifest {
  nlohmann::json spec;
  std::string real_digest;
  std::string gen_digest;
  size_t real_qas = 0;
  size_t sampled_qas = 0;
  std::vector<std::string> sampled_ids;  // pre-namespacing, in draw order
};

inline nlohmann::json mix_manifest_to_json(const MixManifest& m) {
  return {{"spec", m.spec},
          {"real_digest", m.real_digest},
          {"gen_digest", m.gen_digest},
          {"real_qas", m.real_qas},
          {"sampled_qas", m.sampled_qas},
          {"sampled_ids", m.sampled_ids}};
}

inline size_t round_half_up(double x) {
  return static_cast<size_t>(std::floor(x + 0.5));
}

namespace detail {

struct QaRef {
  const Article* article;
  const Paragraph* paragraph;
  const QaPair* qa;
};

inline std::vector<QaRef> flatten(const QaDataset& d) {
  std::vector<QaRef> refs;
  for (const auto& art : d.articles)
    for (const auto& p : art.paragraphs)
      for (const auto& qa : p.qas) refs.push_back({&art, &p, &qa});
  return refs;
}

}  // namespace detail

// Removes QAs whose (normalized question, normalized first-answer text)
// duplicates an earlier QA; contexts left with no QAs are removed.
inline QaDataset dedup(const QaDataset& d) {
  QaDataset out;
  out.version = d.version;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& art : d.articles) {
    Article a;
    a.title = art.title;
    for (const auto& p : art.paragraphs) {
      Paragraph q;
      q.context = p.context;
      for (const auto& qa : p.qas) {
        const auto key = std::make_pair(
            normalize_answer(qa.question),
            qa.answers.empty() ? std::string()
                               : normalize_answer(qa.answers[0].text));
        if (!seen.insert(key).second) continue;
        q.qas.push_back(qa);
      }
      if (!q.qas.empty()) a.paragraphs.push_back(std::move(q));
    }
    out.articles.push_back(std::move(a));
  }
  return out;
}

struct MixResult {
  QaDataset dataset;
  MixManifest manifest;
};

inline MixResult mix_datasets(const QaDataset& real, const QaDataset& gen_pool,
                              const MixSpec& spec) {
  if (spec.ratio <= 0) throw ConfigError("mix ratio must be > 0");
  const QaDataset pool = spec.dedup ? dedup(gen_pool) : gen_pool;

  const auto real_refs = detail::flatten(real);
  const auto gen_refs = detail::flatten(pool);
  const size_t want =
      round_half_up(spec.ratio * static_cast<double>(real_refs.size()));
  if (gen_refs.size() < want)
    throw ValidationError(
        "insufficient generated pool: need " + std::to_string(want) +
        " QAs, have " + std::to_string(gen_refs.size()) +
        " (sampling with replacement is not supported)");

  std::mt19937_64 rng(spec.seed);
  const auto picks = sample_without_replacement(gen_refs.size(), want, rng);

  MixResult result;
  result.dataset.version = real.version;
  result.manifest.spec = mix_spec_to_json(spec);
  result.manifest.real_qas = real_refs.size();
  result.manifest.sampled_qas = want;

  // Real articles pass through unchanged.
  auto& articles = result.dataset.articles;
  articles = real.articles;

  // Sampled generated QAs, grouped by owning paragraph (contexts
  // deduplicated), ids namespaced with the dataset tag.
  std::map<const Paragraph*, std::vector<const QaPair*>> by_para;
  std::vector<const Paragraph*> para_order;
  for (const size_t pick : picks) {
    const auto& ref = gen_refs[pick];
    result.manifest.sampled_ids.push_back(ref.qa->id);
    auto [it, inserted] = by_para.try_emplace(ref.paragraph);
    if (inserted) para_order.push_back(ref.paragraph);
    it->second.push_back(ref.qa);
  }

  Article gen_article;
  gen_article.title = spec.gen_tag;
  for (const Paragraph* p : para_order) {
    Paragraph out_p;
    out_p.context = p->context;
    for (const QaPair* qa : by_para[p]) {
      QaPair out_qa = *qa;
      out_qa.id = spec.gen_tag + "::" + qa->id;
      out_p.qas.push_back(std::move(out_qa));
    }
    gen_article.paragraphs.push_back(std::move(out_p));
  }
  if (!gen_article.paragraphs.empty())
    articles.push_back(std::move(gen_article));

  // Output shuffle works at paragraph granularity: one article per
  // paragraph, source titles preserved, order seeded.
  if (spec.shuffle_output) {
    std::vector<Article> exploded;
    for (auto& art : articles)
      for (auto& p : art.paragraphs)
        exploded.push_back({art.title, {std::move(p)}});
    seeded_shuffle(exploded, rng);
    articles = std::move(exploded);
  }

  validate_dataset(result.dataset);
  return result;
}

}  // namespace squadgen
