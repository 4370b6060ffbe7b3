#include "cdga/dataset/counts.hpp"

#include <algorithm>
#include <array>

#include "cdga/core/error.hpp"

namespace cdga {

std::int64_t CountTable::max_cell() const {
  std::int64_t m = 0;
  for (const auto& row : counts) {
    for (auto v : row) m = std::max(m, v);
  }
  return m;
}

std::int64_t CountTable::domain_total(std::size_t domain) const {
  std::int64_t s = 0;
  for (auto v : counts.at(domain)) s += v;
  return s;
}

std::int64_t CountTable::class_total(std::size_t label) const {
  std::int64_t s = 0;
  for (const auto& row : counts) s += row.at(label);
  return s;
}

CountTable count_per_class_domain(const DomainDatasetManifest& manifest) {
  CountTable t;
  t.counts.assign(manifest.domains.size(),
                  std::vector<std::int64_t>(manifest.classes.size(), 0));
  for (const auto& e : manifest.entries) ++t.counts[e.domain][e.label];
  return t;
}

BatchSizeTable balanced_batch_sizes(const CountTable& counts) {
  const std::int64_t m = counts.max_cell();
  if (m <= 0) throw InvalidArgument("balanced_batch_sizes: all cells are empty");
  BatchSizeTable out;
  out.b.resize(counts.num_domains());
  for (std::size_t j = 0; j < counts.num_domains(); ++j) {
    out.b[j].resize(counts.counts[j].size());
    for (std::size_t c = 0; c < counts.counts[j].size(); ++c) {
      const std::int64_t n = counts.counts[j][c];
      if (n < 0) throw InvalidArgument("balanced_batch_sizes: negative count");
      if (n == 0) continue;
      out.b[j][c] = static_cast<int>((m + n - 1) / n);
    }
  }
  return out;
}

namespace {

struct KindName {
  AugmentationKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 6> kKindNames{{
    {AugmentationKind::kCdgaPg, "CDGA_PG"},
    {AugmentationKind::kCdgaIg, "CDGA_IG"},
    {AugmentationKind::kCdgaStarPg, "CDGA_STAR_PG"},
    {AugmentationKind::kSdgaPgLabel, "SDGA_PG_LABEL"},
    {AugmentationKind::kSdgaPgLabelDomain, "SDGA_PG_LABEL_DOMAIN"},
    {AugmentationKind::kSdgaIgLabel, "SDGA_IG_LABEL"},
}};

}  // namespace

std::string_view to_string(AugmentationKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "UNKNOWN";
}

AugmentationKind parse_augmentation_kind(std::string_view text) {
  for (const auto& kn : kKindNames) {
    if (kn.name == text) return kn.kind;
  }
  throw InvalidArgument("unknown augmentation mode '" + std::string(text) + "'");
}

bool is_cdga(AugmentationKind kind) {
  return kind == AugmentationKind::kCdgaPg || kind == AugmentationKind::kCdgaIg ||
         kind == AugmentationKind::kCdgaStarPg;
}

bool is_sdga(AugmentationKind kind) { return !is_cdga(kind); }

std::optional<int> AugmentationMode::batch_size_for(std::size_t domain, std::size_t label) const {
  if (const int* fixed = std::get_if<int>(&b)) return *fixed;
  const auto& table = std::get<BatchSizeTable>(b);
  if (domain >= table.b.size() || label >= table.b[domain].size()) return std::nullopt;
  return table.b[domain][label];
}

void AugmentationMode::validate() const {
  if (kind == AugmentationKind::kCdgaStarPg &&
      (!target_description || target_description->empty())) {
    throw InvalidArgument("CDGA_STAR_PG requires a target-domain description");
  }
  if (const int* fixed = std::get_if<int>(&b)) {
    if (*fixed < 1) throw InvalidArgument("generation batch size b must be >= 1");
    return;
  }
  for (const auto& row : std::get<BatchSizeTable>(b).b) {
    for (const auto& cell : row) {
      if (cell && *cell < 1) throw InvalidArgument("batch size table has a non-positive entry");
    }
  }
}

std::int64_t augmented_size(std::int64_t count, int n_train_domains, int b, AugmentationKind kind) {
  if (count < 0 || n_train_domains < 1 || b < 1) {
    throw InvalidArgument("augmented_size: need count >= 0, n >= 1, b >= 1");
  }
  switch (kind) {
    case AugmentationKind::kCdgaPg:
    case AugmentationKind::kCdgaIg:
      return (static_cast<std::int64_t>(b) * n_train_domains + 1) * count;
    case AugmentationKind::kCdgaStarPg:
      return (static_cast<std::int64_t>(b) * n_train_domains + 2) * count;
    default:
      return (static_cast<std::int64_t>(b) + 1) * count;
  }
}

}  // namespace cdga
