#include "cdga/trainer/search.hpp"

#include <cmath>

#include "cdga/core/error.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

using json = nlohmann::json;

namespace {

using Kind = HparamDistribution::Kind;

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::kFixed:
      return "fixed";
    case Kind::kUniform:
      return "uniform";
    case Kind::kLog10:
      return "log10";
    case Kind::kLog2Int:
      return "log2_int";
    case Kind::kChoice:
      return "choice";
  }
  return "fixed";
}

Kind parse_kind(const std::string& s) {
  for (auto k : {Kind::kFixed, Kind::kUniform, Kind::kLog10, Kind::kLog2Int, Kind::kChoice}) {
    if (kind_name(k) == s) return k;
  }
  throw InvalidArgument("unknown hyperparameter distribution '" + s + "'");
}

double sample(const HparamDistribution& d, Rng& rng) {
  switch (d.kind) {
    case Kind::kFixed:
      return d.default_value;
    case Kind::kUniform:
      return rng.uniform(d.lo, d.hi);
    case Kind::kLog10:
      return std::pow(10.0, rng.uniform(d.lo, d.hi));
    case Kind::kLog2Int:
      return std::round(std::pow(2.0, rng.uniform(d.lo, d.hi)));
    case Kind::kChoice:
      return d.choices.at(rng.below(d.choices.size()));
  }
  return d.default_value;
}

void apply(Hparams& h, const std::string& key, double value) {
  if (key == "lr") {
    h.lr = value;
  } else if (key == "weight_decay") {
    h.weight_decay = value;
  } else if (key == "batch_size") {
    h.batch_size = static_cast<int>(std::lround(value));
  } else if (key == "steps") {
    h.steps = static_cast<int>(std::lround(value));
  } else {
    throw InvalidArgument("unknown hyperparameter '" + key + "'");
  }
}

}  // namespace

SearchSpace search_space_from_json(const json& doc) {
  SearchSpace space;
  if (!doc.is_object()) throw InvalidArgument("search space must be a JSON object");
  for (const auto& [key, spec] : doc.items()) {
    HparamDistribution d;
    d.kind = parse_kind(spec.value("dist", std::string("fixed")));
    if (!spec.contains("default")) throw InvalidArgument("hyperparameter '" + key + "' needs a default");
    d.default_value = spec.at("default").get<double>();
    if (d.kind == Kind::kChoice) {
      d.choices = spec.at("choices").get<std::vector<double>>();
      if (d.choices.empty()) throw InvalidArgument("hyperparameter '" + key + "' has no choices");
    } else if (d.kind != Kind::kFixed) {
      d.lo = spec.at("lo").get<double>();
      d.hi = spec.at("hi").get<double>();
      if (d.hi < d.lo) throw InvalidArgument("hyperparameter '" + key + "' has hi < lo");
    }
    Hparams probe;
    apply(probe, key, d.default_value);
    space[key] = std::move(d);
  }
  return space;
}

json to_json(const SearchSpace& space) {
  json doc = json::object();
  for (const auto& [key, d] : space) {
    json spec{{"dist", kind_name(d.kind)}, {"default", d.default_value}};
    if (d.kind == Kind::kChoice) spec["choices"] = d.choices;
    if (d.kind != Kind::kFixed && d.kind != Kind::kChoice) {
      spec["lo"] = d.lo;
      spec["hi"] = d.hi;
    }
    doc[key] = std::move(spec);
  }
  return doc;
}

SearchSpace default_search_space() {
  SearchSpace s;
  s["lr"] = {Kind::kLog10, -3.5, -2.0, {}, 1e-3};
  s["weight_decay"] = {Kind::kLog10, -6.0, -2.0, {}, 0.0};
  s["batch_size"] = {Kind::kLog2Int, 3.0, 5.5, {}, 32.0};
  return s;
}

std::vector<TrainConfig> random_search(const SearchSpace& space, int n_hparams, int n_trials,
                                       std::uint64_t seed, const TrainConfig& base) {
  if (space.empty()) throw InvalidArgument("random_search: empty search space");
  if (n_hparams < 1 || n_trials < 1) throw InvalidArgument("random_search: counts must be >= 1");
  std::vector<TrainConfig> out;
  out.reserve(static_cast<std::size_t>(n_hparams) * n_trials);
  for (int h = 0; h < n_hparams; ++h) {
    Hparams hp = base.hparams;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(h)));
    for (const auto& [key, dist] : space) {
      apply(hp, key, h == 0 ? dist.default_value : sample(dist, rng));
    }
    for (int t = 0; t < n_trials; ++t) {
      TrainConfig c = base;
      c.hparams = hp;
      c.hparam_index = h;
      c.trial = t;
      c.seed = derive_seed(seed, 0x10000ULL + static_cast<std::uint64_t>(h) * 1000 + t);
      c.split_seed = derive_seed(seed, 0x20000ULL);
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace cdga
