#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdga {

enum class Capability { kImg2ImgWithPrompt, kImageMix, kTxt2Img };

std::string_view to_string(Capability cap);
Capability parse_capability(std::string_view text);

// One call to the latent-diffusion backend. `params` carries the generation
// knobs (strength, steps, scale, ...) exactly as configured; adapters pass
// them through untouched.
struct BackendRequest {
  Capability mode = Capability::kImg2ImgWithPrompt;
  std::vector<std::uint8_t> source_image;    // encoded image bytes; empty for txt2img
  std::string prompt;
  std::vector<std::uint8_t> guidance_image;  // image_mix only
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  int count = 1;
};

struct BackendResponse {
  std::vector<std::vector<std::uint8_t>> images;  // encoded PNG, `count` of them
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const BackendRequest& request);
BackendRequest request_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const BackendResponse& response);
BackendResponse response_from_json(const nlohmann::json& doc);

class LdmBackend {
 public:
  virtual ~LdmBackend() = default;

  virtual std::set<Capability> capabilities() const = 0;
  // Deterministic backends return identical bytes for identical requests.
  virtual bool deterministic() const = 0;
  // 0 means any number of concurrent callers is fine.
  virtual int max_concurrency() const { return 0; }
  virtual std::string name() const = 0;

  // Throws BackendError on failure.
  virtual BackendResponse generate(const BackendRequest& request) = 0;
};

// Deterministic stand-in used for tests and desk-scale runs. Every mode is a
// pixel-space operation on the source image:
//   img2img_with_prompt  recolors the luminance with a tint derived from the
//                        prompt (colour words, otherwise a hash of the text)
//   image_mix            blends source and guidance images
//   txt2img              flat tint image
// `strength` (default 0.5) sets the blend weight, and every slot gets seeded
// low-amplitude noise so slots differ.
class StubBackend : public LdmBackend {
 public:
  struct Options {
    double default_strength = 0.5;
    double noise = 0.02;
    int txt2img_size = 32;
  };

  StubBackend() = default;
  explicit StubBackend(Options options) : options_(options) {}

  std::set<Capability> capabilities() const override;
  bool deterministic() const override { return true; }
  std::string name() const override { return "stub"; }
  BackendResponse generate(const BackendRequest& request) override;

 private:
  Options options_;
};

// Adapter for a remote inference service speaking the JSON protocol:
//   GET  /capabilities -> {capabilities[], deterministic, max_concurrency}
//   POST /generate     -> request JSON in, response JSON out (images base64)
class HttpBackend : public LdmBackend {
 public:
  // `url` like "http://host:port". Queries /capabilities on construction and
  // throws BackendError if the service is unreachable.
  explicit HttpBackend(std::string url, int timeout_seconds = 600);
  ~HttpBackend() override;

  std::set<Capability> capabilities() const override { return capabilities_; }
  bool deterministic() const override { return deterministic_; }
  int max_concurrency() const override { return max_concurrency_; }
  std::string name() const override { return "http:" + url_; }
  BackendResponse generate(const BackendRequest& request) override;

 private:
  std::string url_;
  int timeout_seconds_;
  std::set<Capability> capabilities_;
  bool deterministic_ = false;
  int max_concurrency_ = 1;
};

// Serves any backend over the HTTP protocol above; runs on a background
// thread until destroyed. Port 0 picks a free port.
class BackendServer {
 public:
  BackendServer(std::shared_ptr<LdmBackend> backend, std::string host = "127.0.0.1", int port = 0);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  int port() const { return port_; }
  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

}  // namespace cdga
