#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdga/dataset/manifest.hpp"

namespace cdga {

// Every manifest image decoded once, resized to input_size x input_size and
// stored as one column (CHW, values in [0,1]). Column index = entry index.
class ImageStore {
 public:
  ImageStore(DomainDatasetManifest manifest, int input_size);

  const DomainDatasetManifest& manifest() const { return manifest_; }
  const Eigen::MatrixXd& data() const { return data_; }
  int input_size() const { return input_size_; }

  Eigen::MatrixXd gather(std::span<const std::size_t> indices) const;
  std::vector<int> labels(std::span<const std::size_t> indices) const;

 private:
  DomainDatasetManifest manifest_;
  int input_size_;
  Eigen::MatrixXd data_;
};

// Which generated pseudo-domains join the training environments.
//   none       originals only (plain ERM)
//   cdga       gen_<i>__to__<j> with i, j both training domains
//   cdga_star  additionally gen_<i>__to__<target> and gen_<i>__to__TARGET
enum class GeneratedUse { kNone, kCdga, kCdgaStar };

std::string_view to_string(GeneratedUse use);
GeneratedUse parse_generated_use(std::string_view text);

struct DomainSplit {
  std::string domain;
  std::vector<std::size_t> train;  // entry indices, originals and generated
  std::vector<std::size_t> val;
  std::size_t generated_train = 0;
  std::size_t generated_val = 0;
};

struct TrainingSplits {
  std::vector<DomainSplit> environments;  // one per active training domain
  std::vector<std::size_t> target;        // every original target image
  std::vector<std::size_t> held_out;      // every original held-out image
};

// Per-domain holdout of the originals (seeded permutation, `holdout_fraction`
// to validation). A generated image follows its source image's membership.
// Generated images are credited to their source domain's environment.
TrainingSplits make_splits(const DomainDatasetManifest& manifest,
                           const std::vector<std::string>& train_domains,
                           const std::string& target_domain,
                           const std::optional<std::string>& held_out_domain, GeneratedUse use,
                           double holdout_fraction, std::uint64_t split_seed);

// Source entry id of a generated image, or nullopt for an original.
std::optional<std::string> generated_source_id(const DomainDatasetManifest& manifest,
                                               const ManifestEntry& entry);

}  // namespace cdga
