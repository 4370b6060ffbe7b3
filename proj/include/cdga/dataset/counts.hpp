#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cdga/dataset/manifest.hpp"

namespace cdga {

// counts[domain][class] = number of manifest entries in that cell.
struct CountTable {
  std::vector<std::vector<std::int64_t>> counts;

  std::size_t num_domains() const { return counts.size(); }
  std::size_t num_classes() const { return counts.empty() ? 0 : counts.front().size(); }
  std::int64_t max_cell() const;
  std::int64_t domain_total(std::size_t domain) const;
  std::int64_t class_total(std::size_t label) const;
};

CountTable count_per_class_domain(const DomainDatasetManifest& manifest);

// Per-(domain, class) generation batch size. Empty optional marks a cell with
// no source images; it is excluded from generation.
struct BatchSizeTable {
  std::vector<std::vector<std::optional<int>>> b;

  std::optional<int> at(std::size_t domain, std::size_t label) const {
    return b.at(domain).at(label);
  }
};

// b[j][c] = ceil(m / counts[j][c]) with m the largest cell.
BatchSizeTable balanced_batch_sizes(const CountTable& counts);

enum class AugmentationKind {
  kCdgaPg,
  kCdgaIg,
  kCdgaStarPg,
  kSdgaPgLabel,
  kSdgaPgLabelDomain,
  kSdgaIgLabel,
};

std::string_view to_string(AugmentationKind kind);
AugmentationKind parse_augmentation_kind(std::string_view text);

bool is_cdga(AugmentationKind kind);
bool is_sdga(AugmentationKind kind);

struct AugmentationMode {
  AugmentationKind kind = AugmentationKind::kCdgaPg;
  std::variant<int, BatchSizeTable> b = 1;
  std::optional<std::string> target_description;  // required for CDGA*

  // Batch size for one source cell; nullopt when the cell is excluded.
  std::optional<int> batch_size_for(std::size_t domain, std::size_t label) const;
  void validate() const;
};

// Number of samples a source domain of `count` images has after augmentation,
// originals included. CDGA: (b*n + 1)*count, CDGA*: (b*n + 2)*count,
// SDGA: (b + 1)*count.
std::int64_t augmented_size(std::int64_t count, int n_train_domains, int b, AugmentationKind kind);

}  // namespace cdga
