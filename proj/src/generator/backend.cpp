#include "cdga/generator/backend.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "cdga/core/error.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/core/image.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

using json = nlohmann::json;

std::string_view to_string(Capability cap) {
  switch (cap) {
    case Capability::kImg2ImgWithPrompt:
      return "img2img_with_prompt";
    case Capability::kImageMix:
      return "image_mix";
    case Capability::kTxt2Img:
      return "txt2img";
  }
  return "unknown";
}

Capability parse_capability(std::string_view text) {
  for (auto cap : {Capability::kImg2ImgWithPrompt, Capability::kImageMix, Capability::kTxt2Img}) {
    if (to_string(cap) == text) return cap;
  }
  throw InvalidArgument("unknown backend capability '" + std::string(text) + "'");
}

json to_json(const BackendRequest& r) {
  json doc{{"mode", to_string(r.mode)},
           {"prompt", r.prompt},
           {"params", r.params},
           {"seed", r.seed},
           {"count", r.count}};
  doc["source_image"] = base64_encode(r.source_image);
  doc["guidance_image"] = base64_encode(r.guidance_image);
  return doc;
}

BackendRequest request_from_json(const json& doc) {
  BackendRequest r;
  try {
    r.mode = parse_capability(doc.at("mode").get<std::string>());
    r.prompt = doc.value("prompt", "");
    r.params = doc.value("params", json::object());
    r.seed = doc.value("seed", std::uint64_t{0});
    r.count = doc.value("count", 1);
    r.source_image = base64_decode(doc.value("source_image", ""));
    r.guidance_image = base64_decode(doc.value("guidance_image", ""));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed backend request: ") + e.what());
  }
  return r;
}

json to_json(const BackendResponse& r) {
  json images = json::array();
  for (const auto& img : r.images) images.push_back(base64_encode(img));
  return {{"images", std::move(images)}, {"metadata", r.metadata}};
}

BackendResponse response_from_json(const json& doc) {
  BackendResponse r;
  try {
    for (const auto& img : doc.at("images")) r.images.push_back(base64_decode(img.get<std::string>()));
    r.metadata = doc.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed backend response: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Stub backend

namespace {

struct NamedColor {
  std::string_view word;
  std::array<float, 3> rgb;
};

constexpr std::array<NamedColor, 10> kColors{{
    {"red", {0.9f, 0.15f, 0.15f}},
    {"green", {0.15f, 0.8f, 0.2f}},
    {"blue", {0.15f, 0.25f, 0.9f}},
    {"yellow", {0.9f, 0.85f, 0.1f}},
    {"cyan", {0.1f, 0.85f, 0.85f}},
    {"magenta", {0.85f, 0.1f, 0.8f}},
    {"orange", {0.95f, 0.55f, 0.1f}},
    {"purple", {0.5f, 0.15f, 0.7f}},
    {"white", {0.95f, 0.95f, 0.95f}},
    {"black", {0.08f, 0.08f, 0.08f}},
}};

// Averages every colour word in the prompt; falls back to a hash-derived tint.
std::array<float, 3> tint_for_prompt(std::string_view prompt) {
  std::string lower(prompt);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::array<float, 3> acc{0, 0, 0};
  int hits = 0;
  for (const auto& nc : kColors) {
    if (lower.find(nc.word) != std::string::npos) {
      for (int c = 0; c < 3; ++c) acc[c] += nc.rgb[c];
      ++hits;
    }
  }
  if (hits > 0) {
    for (auto& v : acc) v /= static_cast<float>(hits);
    return acc;
  }
  const std::uint64_t h = fnv1a64(prompt);
  return {static_cast<float>((h >> 8) & 0xff) / 255.0f,
          static_cast<float>((h >> 24) & 0xff) / 255.0f,
          static_cast<float>((h >> 40) & 0xff) / 255.0f};
}

double strength_of(const json& params, double fallback) {
  if (params.contains("strength") && params["strength"].is_number()) {
    return std::clamp(params["strength"].get<double>(), 0.0, 1.0);
  }
  return fallback;
}

Image require_image(const std::vector<std::uint8_t>& bytes, const char* what) {
  auto img = decode_image(bytes);
  if (!img) throw BackendError(std::string("stub backend: undecodable ") + what);
  return std::move(*img);
}

void add_noise(Image& img, double amplitude, std::uint64_t seed) {
  if (amplitude <= 0.0) return;
  Rng rng(seed);
  for (auto& v : img.pixels) {
    v = std::clamp(v + static_cast<float>(rng.uniform(-amplitude, amplitude)), 0.0f, 1.0f);
  }
}

}  // namespace

std::set<Capability> StubBackend::capabilities() const {
  return {Capability::kImg2ImgWithPrompt, Capability::kImageMix, Capability::kTxt2Img};
}

BackendResponse StubBackend::generate(const BackendRequest& request) {
  if (request.count < 1) throw BackendError("stub backend: count must be >= 1");
  const double s = strength_of(request.params, options_.default_strength);

  Image base;
  switch (request.mode) {
    case Capability::kImg2ImgWithPrompt: {
      base = require_image(request.source_image, "source image");
      const auto tint = tint_for_prompt(request.prompt);
      const int hw = base.height * base.width;
      for (int p = 0; p < hw; ++p) {
        const float lum = (base.pixels[p] + base.pixels[hw + p] + base.pixels[2 * hw + p]) / 3.0f;
        for (int c = 0; c < 3; ++c) {
          float& v = base.pixels[static_cast<std::size_t>(c) * hw + p];
          const float styled = std::clamp(lum * (0.5f + tint[c]), 0.0f, 1.0f);
          v = static_cast<float>((1.0 - s) * v + s * styled);
        }
      }
      break;
    }
    case Capability::kImageMix: {
      base = require_image(request.source_image, "source image");
      const Image guide =
          resize(require_image(request.guidance_image, "guidance image"), base.height, base.width);
      for (std::size_t k = 0; k < base.pixels.size(); ++k) {
        base.pixels[k] = static_cast<float>((1.0 - s) * base.pixels[k] + s * guide.pixels[k]);
      }
      break;
    }
    case Capability::kTxt2Img: {
      const auto tint = tint_for_prompt(request.prompt);
      base = Image(options_.txt2img_size, options_.txt2img_size);
      const int hw = base.height * base.width;
      for (int c = 0; c < 3; ++c) {
        std::fill_n(base.pixels.begin() + static_cast<std::ptrdiff_t>(c) * hw, hw, tint[c]);
      }
      break;
    }
  }

  BackendResponse response;
  for (int slot = 0; slot < request.count; ++slot) {
    Image out = base;
    add_noise(out, options_.noise, derive_seed(request.seed, static_cast<std::uint64_t>(slot)));
    response.images.push_back(encode_png(out));
  }
  response.metadata = {{"backend", name()}, {"strength", s}};
  return response;
}

// ---------------------------------------------------------------------------
// HTTP adapter

namespace {

std::unique_ptr<httplib::Client> make_client(const std::string& url, int timeout_seconds) {
  auto client = std::make_unique<httplib::Client>(url);
  client->set_connection_timeout(10, 0);
  client->set_read_timeout(timeout_seconds, 0);
  client->set_write_timeout(timeout_seconds, 0);
  return client;
}

}  // namespace

HttpBackend::HttpBackend(std::string url, int timeout_seconds)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds) {
  auto client = make_client(url_, timeout_seconds_);
  auto res = client->Get("/capabilities");
  if (!res) {
    throw BackendError("backend at " + url_ + " is unreachable (" +
                       httplib::to_string(res.error()) +
                       "); start the inference service or use the stub backend");
  }
  if (res->status != 200) {
    throw BackendError("backend at " + url_ + " answered /capabilities with HTTP " +
                       std::to_string(res->status));
  }
  try {
    const json doc = json::parse(res->body);
    for (const auto& c : doc.at("capabilities")) capabilities_.insert(parse_capability(c.get<std::string>()));
    deterministic_ = doc.value("deterministic", false);
    max_concurrency_ = doc.value("max_concurrency", 1);
  } catch (const std::exception& e) {
    throw BackendError("backend at " + url_ + " sent malformed capabilities: " + e.what());
  }
}

HttpBackend::~HttpBackend() = default;

BackendResponse HttpBackend::generate(const BackendRequest& request) {
  auto client = make_client(url_, timeout_seconds_);
  auto res = client->Post("/generate", to_json(request).dump(), "application/json");
  if (!res) throw BackendError("request to " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("backend sent invalid JSON: ") + e.what());
  }
  auto response = response_from_json(doc);
  if (static_cast<int>(response.images.size()) != request.count) {
    throw BackendError("backend returned " + std::to_string(response.images.size()) +
                       " images, expected " + std::to_string(request.count));
  }
  return response;
}

// ---------------------------------------------------------------------------
// Server

struct BackendServer::Impl {
  std::shared_ptr<LdmBackend> backend;
  httplib::Server server;
  std::thread thread;
};

BackendServer::BackendServer(std::shared_ptr<LdmBackend> backend, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)) {
  impl_->backend = std::move(backend);
  auto* be = impl_->backend.get();
  impl_->server.Get("/capabilities", [be](const httplib::Request&, httplib::Response& res) {
    json caps = json::array();
    for (auto c : be->capabilities()) caps.push_back(to_string(c));
    const json doc{{"capabilities", caps},
                   {"deterministic", be->deterministic()},
                   {"max_concurrency", be->max_concurrency()},
                   {"name", be->name()}};
    res.set_content(doc.dump(), "application/json");
  });
  impl_->server.Post("/generate", [be](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto request = request_from_json(json::parse(req.body));
      res.set_content(to_json(be->generate(request)).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
    }
  });
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host_);
  } else if (impl_->server.bind_to_port(host_, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ < 0) throw IoError("backend server: cannot bind " + host_);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

BackendServer::~BackendServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string BackendServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace cdga
