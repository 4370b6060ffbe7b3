#include "cdga/generator/plan.hpp"

#include <algorithm>
#include <set>

#include "cdga/core/error.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/core/rng.hpp"
#include "cdga/generator/prompt.hpp"

namespace cdga {

using json = nlohmann::json;

void GuidanceSpec::validate(const DomainDatasetManifest& manifest) const {
  if (kind == GuidanceKind::kPrompt) {
    if (prompt_text.empty()) throw InvalidArgument("prompt guidance needs prompt text");
    if (guidance_image) throw InvalidArgument("prompt guidance must not reference an image");
  } else {
    if (!guidance_image) throw InvalidArgument("image guidance needs a guidance image");
    if (!manifest.find(*guidance_image)) {
      throw InvalidArgument("guidance image " + *guidance_image + " is not in the manifest");
    }
  }
}

std::int64_t GenerationPlan::total_images() const {
  std::int64_t n = 0;
  for (const auto& t : tasks) n += t.batch_size;
  return n;
}

namespace {

std::vector<int> resolve_domains(const DomainDatasetManifest& manifest,
                                 const std::vector<std::string>& names) {
  std::vector<int> out;
  std::set<int> seen;
  for (const auto& name : names) {
    if (name.starts_with("gen_")) {
      throw InvalidArgument("domain '" + name + "' is a generated pseudo-domain");
    }
    const int idx = manifest.require_domain(name);
    if (!seen.insert(idx).second) throw InvalidArgument("domain '" + name + "' listed twice");
    out.push_back(idx);
  }
  return out;
}

const std::string& require_description(const DomainDescriptions& descriptions,
                                       const std::string& domain) {
  const auto it = descriptions.find(domain);
  if (it == descriptions.end()) {
    throw InvalidArgument("missing domain description for '" + domain + "'");
  }
  return it->second;
}

GenerationTask make_task(const DomainDatasetManifest& manifest, const ManifestEntry& source,
                         std::string guidance_domain, const PlanOptions& options) {
  GenerationTask t;
  t.source_entry = source.id;
  t.source_domain = manifest.domains[source.domain];
  t.class_label = manifest.classes[source.label];
  t.source_path = manifest.absolute_path(source);
  t.guidance.guidance_domain = std::move(guidance_domain);
  const std::string key = t.source_entry + "=>" + t.guidance.guidance_domain;
  const std::uint64_t h = fnv1a64(key);
  t.id = to_hex(h);
  t.seed = derive_seed(options.seed, h);
  t.backend_params = options.backend_params;
  return t;
}

// Entries grouped by (domain, class) for image-guidance lookups.
std::vector<std::vector<std::vector<const ManifestEntry*>>> group_entries(
    const DomainDatasetManifest& manifest) {
  std::vector<std::vector<std::vector<const ManifestEntry*>>> cells(
      manifest.domains.size(), std::vector<std::vector<const ManifestEntry*>>(manifest.classes.size()));
  for (const auto& e : manifest.entries) cells[e.domain][e.label].push_back(&e);
  return cells;
}

}  // namespace

GenerationPlan plan_cdga(const DomainDatasetManifest& manifest,
                         const std::vector<std::string>& train_domains,
                         const DomainDescriptions& descriptions, const BatchSpec& b,
                         const std::optional<std::string>& target_description,
                         AugmentationKind kind, const PlanOptions& options) {
  if (!is_cdga(kind)) throw InvalidArgument("plan_cdga needs a CDGA mode");
  if (train_domains.empty()) throw InvalidArgument("plan_cdga: no training domains");
  const bool star = target_description.has_value();
  if (kind == AugmentationKind::kCdgaStarPg && (!star || target_description->empty())) {
    throw InvalidArgument("CDGA_STAR_PG requires a target-domain description");
  }
  if (star && kind == AugmentationKind::kCdgaIg) {
    throw InvalidArgument("target guidance is prompt based; it cannot be combined with CDGA_IG");
  }
  if (star) kind = AugmentationKind::kCdgaStarPg;
  const bool prompt_guided = kind != AugmentationKind::kCdgaIg;

  AugmentationMode mode{kind, b, target_description};
  mode.validate();

  const auto domain_idx = resolve_domains(manifest, train_domains);
  if (prompt_guided) {
    for (const auto& d : train_domains) require_description(descriptions, d);
  }
  const auto cells = group_entries(manifest);

  GenerationPlan plan;
  plan.kind = kind;
  plan.train_domains = train_domains;
  for (const auto& entry : manifest.entries) {
    if (std::find(domain_idx.begin(), domain_idx.end(), entry.domain) == domain_idx.end()) continue;
    const auto batch = mode.batch_size_for(static_cast<std::size_t>(entry.domain),
                                           static_cast<std::size_t>(entry.label));
    if (!batch) continue;
    const std::string& cls = manifest.classes[entry.label];

    for (int j : domain_idx) {
      const std::string& guide_domain = manifest.domains[j];
      GenerationTask task = make_task(manifest, entry, guide_domain, options);
      task.batch_size = *batch;
      if (prompt_guided) {
        task.capability = Capability::kImg2ImgWithPrompt;
        task.guidance.kind = GuidanceKind::kPrompt;
        task.guidance.prompt_text = build_prompt(cls, require_description(descriptions, guide_domain));
      } else {
        const auto& pool = cells[j][entry.label];
        if (pool.empty()) {
          plan.warnings.push_back("no '" + cls + "' image in domain " + guide_domain +
                                  " to guide " + entry.id + "; task skipped");
          continue;
        }
        Rng pick(task.seed);
        const ManifestEntry* guide = pool[pick.below(pool.size())];
        task.capability = Capability::kImageMix;
        task.guidance.kind = GuidanceKind::kImage;
        task.guidance.guidance_image = guide->id;
        task.guidance_path = manifest.absolute_path(*guide);
      }
      plan.tasks.push_back(std::move(task));
    }

    if (star) {
      GenerationTask task = make_task(manifest, entry, std::string(kTargetGuidance), options);
      task.batch_size = options.target_uses_batch_size ? *batch : 1;
      task.capability = Capability::kImg2ImgWithPrompt;
      task.guidance.kind = GuidanceKind::kPrompt;
      task.guidance.prompt_text = build_prompt(cls, *target_description);
      plan.tasks.push_back(std::move(task));
    }
  }
  return plan;
}

GenerationPlan plan_sdga(const DomainDatasetManifest& manifest, AugmentationKind kind,
                         const DomainDescriptions& descriptions, int b,
                         const std::vector<std::string>& domains, const PlanOptions& options) {
  if (!is_sdga(kind)) throw InvalidArgument("plan_sdga needs an SDGA mode");
  if (b < 1) throw InvalidArgument("generation batch size b must be >= 1");

  const std::vector<std::string> names = domains.empty() ? manifest.domains : domains;
  const auto domain_idx = resolve_domains(manifest, names);
  if (kind == AugmentationKind::kSdgaPgLabelDomain) {
    for (const auto& d : names) require_description(descriptions, d);
  }

  GenerationPlan plan;
  plan.kind = kind;
  plan.train_domains = names;
  for (const auto& entry : manifest.entries) {
    if (std::find(domain_idx.begin(), domain_idx.end(), entry.domain) == domain_idx.end()) continue;
    const std::string& cls = manifest.classes[entry.label];
    const std::string& own = manifest.domains[entry.domain];
    GenerationTask task = make_task(manifest, entry, own, options);
    task.batch_size = b;
    switch (kind) {
      case AugmentationKind::kSdgaPgLabel:
        task.capability = Capability::kImg2ImgWithPrompt;
        task.guidance.kind = GuidanceKind::kPrompt;
        task.guidance.prompt_text = build_prompt(cls, "");
        break;
      case AugmentationKind::kSdgaPgLabelDomain:
        task.capability = Capability::kImg2ImgWithPrompt;
        task.guidance.kind = GuidanceKind::kPrompt;
        task.guidance.prompt_text = build_prompt(cls, require_description(descriptions, own));
        break;
      default:  // SDGA_IG_LABEL: the source image itself plus the label prompt
        task.capability = Capability::kImageMix;
        task.guidance.kind = GuidanceKind::kImage;
        task.guidance.prompt_text = build_prompt(cls, "");
        task.guidance.guidance_image = entry.id;
        task.guidance_path = task.source_path;
        break;
    }
    plan.tasks.push_back(std::move(task));
  }
  return plan;
}

json to_json(const GenerationTask& t) {
  json guidance{{"kind", t.guidance.kind == GuidanceKind::kPrompt ? "prompt" : "image"},
                {"guidance_domain", t.guidance.guidance_domain}};
  if (!t.guidance.prompt_text.empty()) guidance["prompt"] = t.guidance.prompt_text;
  if (t.guidance.guidance_image) guidance["guidance_image"] = *t.guidance.guidance_image;
  return {{"id", t.id},
          {"source_entry", t.source_entry},
          {"source_domain", t.source_domain},
          {"class", t.class_label},
          {"capability", to_string(t.capability)},
          {"batch_size", t.batch_size},
          {"seed", t.seed},
          {"guidance", guidance},
          {"backend_params", t.backend_params}};
}

json to_json(const GenerationPlan& plan) {
  json tasks = json::array();
  for (const auto& t : plan.tasks) tasks.push_back(to_json(t));
  return {{"mode", to_string(plan.kind)},
          {"train_domains", plan.train_domains},
          {"total_images", plan.total_images()},
          {"warnings", plan.warnings},
          {"tasks", std::move(tasks)}};
}

}  // namespace cdga
