#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdga/dataset/counts.hpp"
#include "cdga/dataset/manifest.hpp"
#include "cdga/generator/backend.hpp"

namespace cdga {

// Guidance domain name used for target-description guided tasks (CDGA*).
inline constexpr std::string_view kTargetGuidance = "TARGET";

enum class GuidanceKind { kPrompt, kImage };

struct GuidanceSpec {
  GuidanceKind kind = GuidanceKind::kPrompt;
  std::string prompt_text;                 // image guidance may also carry a label prompt
  std::optional<std::string> guidance_image;  // manifest entry id
  std::string guidance_domain;             // domain name or kTargetGuidance

  void validate(const DomainDatasetManifest& manifest) const;
};

struct GenerationTask {
  std::string id;  // stable hex key, unique within a plan
  std::string source_entry;
  std::string source_domain;
  std::string class_label;
  std::filesystem::path source_path;  // absolute
  std::optional<std::filesystem::path> guidance_path;
  GuidanceSpec guidance;
  Capability capability = Capability::kImg2ImgWithPrompt;
  int batch_size = 1;
  std::uint64_t seed = 0;
  nlohmann::json backend_params = nlohmann::json::object();
};

struct GenerationPlan {
  AugmentationKind kind = AugmentationKind::kCdgaPg;
  std::vector<std::string> train_domains;
  std::vector<GenerationTask> tasks;
  std::vector<std::string> warnings;

  std::int64_t total_images() const;
};

using DomainDescriptions = std::map<std::string, std::string>;
using BatchSpec = std::variant<int, BatchSizeTable>;

struct PlanOptions {
  std::uint64_t seed = 0;
  // Passed untouched to the backend with every task.
  nlohmann::json backend_params = nlohmann::json::object();
  // CDGA*: generate b target-guided images per entry instead of one.
  bool target_uses_batch_size = false;
};

// One task per (entry of train domain i, train domain j) with batch size b;
// with a target description, one extra target-guided task per entry.
// kind must be CDGA_PG, CDGA_IG or CDGA_STAR_PG.
GenerationPlan plan_cdga(const DomainDatasetManifest& manifest,
                         const std::vector<std::string>& train_domains,
                         const DomainDescriptions& descriptions, const BatchSpec& b,
                         const std::optional<std::string>& target_description,
                         AugmentationKind kind = AugmentationKind::kCdgaPg,
                         const PlanOptions& options = {});

// One task per entry of the listed domains, guided by its own domain.
// kind must be one of the SDGA kinds. Empty `domains` means every domain.
GenerationPlan plan_sdga(const DomainDatasetManifest& manifest, AugmentationKind kind,
                         const DomainDescriptions& descriptions, int b,
                         const std::vector<std::string>& domains = {},
                         const PlanOptions& options = {});

nlohmann::json to_json(const GenerationTask& task);
nlohmann::json to_json(const GenerationPlan& plan);

}  // namespace cdga
