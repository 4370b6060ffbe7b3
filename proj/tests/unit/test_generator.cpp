#include <doctest.h>

#include <map>
#include <set>
#include <stop_token>

#include "cdga/core/fs.hpp"
#include "cdga/core/error.hpp"
#include "cdga/core/image.hpp"
#include "cdga/dataset/counts.hpp"
#include "cdga/generator/execute.hpp"
#include "cdga/generator/plan.hpp"
#include "cdga/generator/prompt.hpp"
#include "support.hpp"

using namespace cdga;

namespace {

DomainDescriptions descriptions() {
  return {{"art", "art painting"}, {"photo", "photorealistic, extremely detailed"},
          {"sketch", "sketch drawing, black and white, less details"}, {"cartoon", "cartoon, cartoonish"}};
}

std::shared_ptr<LdmBackend> stub() { return std::make_shared<StubBackend>(); }

}  // namespace

TEST_CASE("build_prompt") {
  CHECK(build_prompt("dog", "sketch drawing, black and white, less details") ==
        "a dog, sketch drawing, black and white, less details");
  CHECK(build_prompt("guitar", "art painting") == "a guitar, art painting");
  CHECK(build_prompt("dog", "") == "a dog");
  CHECK_THROWS_AS(build_prompt("", "x"), InvalidArgument);
}

TEST_CASE("plan_cdga task counts") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog", "cat"}, {{5, 5}, {5, 5}});
  const auto m = scan_dataset(dir.path());
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::nullopt);
  CHECK(plan.tasks.size() == 40);
  CHECK(plan.total_images() == 40);

  const auto star = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::string("pencil sketch"),
                              AugmentationKind::kCdgaStarPg);
  CHECK(star.tasks.size() == 60);
  std::size_t target_tasks = 0;
  for (const auto& t : star.tasks) {
    if (t.guidance.guidance_domain == kTargetGuidance) {
      ++target_tasks;
      CHECK(t.batch_size == 1);
    }
  }
  CHECK(target_tasks == 20);

  const auto b3 = plan_cdga(m, {"art", "photo"}, descriptions(), 3, std::string("pencil"),
                            AugmentationKind::kCdgaStarPg);
  CHECK(b3.total_images() == 20 * (3 * 2 + 1));
}

TEST_CASE("plan_cdga prompts follow the schema and keep the class") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog"}, {{2}, {2}});
  const auto m = scan_dataset(dir.path());
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::nullopt);
  for (const auto& t : plan.tasks) {
    CHECK(t.class_label == "dog");
    CHECK(t.guidance.prompt_text == build_prompt("dog", descriptions().at(t.guidance.guidance_domain)));
  }
}

TEST_CASE("plan_cdga errors") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog"}, {{2}, {2}});
  const auto m = scan_dataset(dir.path());
  CHECK_THROWS_AS(plan_cdga(m, {"art", "painting"}, descriptions(), 1, std::nullopt), InvalidArgument);
  CHECK_THROWS_AS(plan_cdga(m, {"art", "photo"}, {{"art", "x"}}, 1, std::nullopt), InvalidArgument);
  CHECK_THROWS_AS(plan_cdga(m, {"art", "photo"}, descriptions(), 0, std::nullopt), InvalidArgument);
}

TEST_CASE("plan_cdga image guidance never crosses classes") {
  test::TempDir dir;
  // "fish" exists only in art: its IG tasks toward photo have no partner.
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog", "cat", "fish"}, {{3, 2, 2}, {1, 4, 0}});
  const auto m = scan_dataset(dir.path());
  const auto plan = plan_cdga(m, {"art", "photo"}, {}, 1, std::nullopt, AugmentationKind::kCdgaIg, {.seed = 9});
  CHECK_FALSE(plan.warnings.empty());
  for (const auto& t : plan.tasks) {
    REQUIRE(t.guidance.guidance_image.has_value());
    const auto* g = m.find(*t.guidance.guidance_image);
    REQUIRE(g != nullptr);
    CHECK(m.classes[static_cast<std::size_t>(g->label)] == t.class_label);
    CHECK(m.domains[static_cast<std::size_t>(g->domain)] == t.guidance.guidance_domain);
    CHECK(t.capability == Capability::kImageMix);
  }
  // 2 fish images in art lose their photo-guided task.
  CHECK(plan.tasks.size() == (7 + 5) * 2 - 2);
}

TEST_CASE("plan_cdga balanced table") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog"}, {{8}, {2}});
  const auto m = scan_dataset(dir.path());
  const auto b = balanced_batch_sizes(count_per_class_domain(m));
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), b, std::nullopt);
  for (const auto& t : plan.tasks) CHECK(t.batch_size == (t.source_domain == "art" ? 1 : 4));
}

TEST_CASE("plan_sdga modes") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art"}, {"dog", "cat"}, {{5, 5}});
  const auto m = scan_dataset(dir.path());
  const auto label = plan_sdga(m, AugmentationKind::kSdgaPgLabel, {}, 1);
  CHECK(label.tasks.size() == 10);
  for (const auto& t : label.tasks) {
    CHECK(t.guidance.prompt_text == "a " + t.class_label);
    CHECK(t.guidance.guidance_domain == t.source_domain);
  }
  const auto dom = plan_sdga(m, AugmentationKind::kSdgaPgLabelDomain, descriptions(), 2);
  CHECK(dom.tasks.size() == 10);
  CHECK(dom.total_images() == 20);
  CHECK(dom.tasks.front().guidance.prompt_text == build_prompt(dom.tasks.front().class_label, "art painting"));
  const auto ig = plan_sdga(m, AugmentationKind::kSdgaIgLabel, {}, 1);
  for (const auto& t : ig.tasks) {
    CHECK(t.capability == Capability::kImageMix);
    CHECK(t.guidance.guidance_image == t.source_entry);
  }
  CHECK_THROWS_AS(plan_sdga(m, AugmentationKind::kSdgaPgLabelDomain, {}, 1), InvalidArgument);
}

TEST_CASE("plan_sdga on an empty manifest") {
  test::TempDir dir;
  const auto m = scan_dataset(dir.path());
  CHECK(plan_sdga(m, AugmentationKind::kSdgaPgLabel, {}, 1).tasks.empty());
}

TEST_CASE("plans are deterministic") {
  test::TempDir dir;
  test::write_grid_dataset(dir.path(), {"art", "photo"}, {"dog", "cat"}, {{3, 2}, {2, 3}});
  const auto m = scan_dataset(dir.path());
  const auto a = plan_cdga(m, {"art", "photo"}, {}, 1, std::nullopt, AugmentationKind::kCdgaIg, {.seed = 4});
  const auto b = plan_cdga(m, {"art", "photo"}, {}, 1, std::nullopt, AugmentationKind::kCdgaIg, {.seed = 4});
  CHECK(to_json(a) == to_json(b));
  std::set<std::string> ids;
  for (const auto& t : a.tasks) ids.insert(t.id);
  CHECK(ids.size() == a.tasks.size());
}

TEST_CASE("stub backend is deterministic and returns count images") {
  test::TempDir dir;
  test::write_png(dir / "a.png", 0.3f, 0.6f, 0.2f, 16);
  StubBackend backend;
  BackendRequest req;
  req.source_image = read_bytes(dir / "a.png");
  req.prompt = "a dog, art painting";
  req.seed = 5;
  req.count = 3;
  const auto r1 = backend.generate(req);
  const auto r2 = backend.generate(req);
  REQUIRE(r1.images.size() == 3);
  CHECK(r1.images == r2.images);
  CHECK(r1.images[0] != r1.images[1]);
  for (const auto& img : r1.images) CHECK(decode_image(img).has_value());
}

TEST_CASE("backend request/response JSON round trip") {
  BackendRequest req;
  req.mode = Capability::kImageMix;
  req.source_image = {1, 2, 3};
  req.guidance_image = {4, 5};
  req.prompt = "a cat";
  req.params = {{"strength", 0.7}};
  req.seed = 99;
  req.count = 2;
  const auto back = request_from_json(to_json(req));
  CHECK(back.mode == req.mode);
  CHECK(back.source_image == req.source_image);
  CHECK(back.guidance_image == req.guidance_image);
  CHECK(back.params == req.params);
  CHECK(back.seed == 99);
  CHECK(back.count == 2);
}

TEST_CASE("http backend round trip through the server") {
  test::TempDir dir;
  test::write_png(dir / "a.png", 0.3f, 0.6f, 0.2f, 16);
  BackendServer server(stub());
  HttpBackend client(server.url(), 30);
  CHECK(client.capabilities() == StubBackend().capabilities());
  CHECK(client.deterministic());
  BackendRequest req;
  req.source_image = read_bytes(dir / "a.png");
  req.prompt = "a dog, sketch";
  req.seed = 3;
  req.count = 2;
  CHECK(client.generate(req).images == StubBackend().generate(req).images);
}

TEST_CASE("http backend unreachable is an actionable error") {
  CHECK_THROWS_AS(HttpBackend("http://127.0.0.1:1", 2), BackendError);
}

TEST_CASE("execute_plan: records, invariants and provenance") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art", "photo"}, {"dog", "cat"}, {{5, 5}, {5, 5}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::nullopt);
  test::CountingBackend backend(stub());
  const auto res = execute_plan(plan, backend, {.work_dir = dir / "work"});
  CHECK(res.records.size() == 40);
  CHECK(backend.calls() == 40);
  CHECK(res.report.status() == "complete");
  std::set<std::tuple<std::string, std::string, int>> keys;
  for (const auto& r : res.records) {
    CHECK(keys.insert({r.source_entry, r.guidance_domain, r.slot}).second);
    const auto* src = m.find(r.source_entry);
    REQUIRE(src != nullptr);
    CHECK(m.classes[static_cast<std::size_t>(src->label)] == r.class_label);
    CHECK(std::filesystem::exists(r.image_path));
    CHECK(r.backend_params.contains("seed"));
  }
}

TEST_CASE("execute_plan: permanent failure on one task gives a partial run") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art"}, {"dog"}, {{3}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_sdga(m, AugmentationKind::kSdgaPgLabel, {}, 1);
  REQUIRE(plan.tasks.size() == 3);
  const auto bad_seed = plan.tasks[1].seed;
  test::CountingBackend backend(stub(), [&](const BackendRequest& r) { return r.seed == bad_seed; });
  const auto res = execute_plan(plan, backend, {.work_dir = dir / "work", .max_retries = 2});
  CHECK(res.records.size() == 2);
  REQUIRE(res.report.failures.size() == 1);
  CHECK(res.report.failures[0].task == plan.tasks[1].id);
  CHECK(res.report.status() == "partial");
  CHECK(backend.calls() == 2 + 3);
}

TEST_CASE("execute_plan: resume after interruption re-sends only unfinished tasks") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art", "photo"}, {"dog", "cat"}, {{5, 5}, {5, 5}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::nullopt);
  REQUIRE(plan.tasks.size() == 40);
  std::stop_source stop;
  test::CountingBackend first(stub(), [&](const BackendRequest&) { return false; });
  {
    // Stop once the 25th call has been issued.
    struct Stopper : LdmBackend {
      test::CountingBackend& inner;
      std::stop_source& stop;
      Stopper(test::CountingBackend& i, std::stop_source& s) : inner(i), stop(s) {}
      std::set<Capability> capabilities() const override { return inner.capabilities(); }
      bool deterministic() const override { return true; }
      int max_concurrency() const override { return 1; }
      std::string name() const override { return "stopper"; }
      BackendResponse generate(const BackendRequest& r) override {
        auto out = inner.generate(r);
        if (inner.calls() == 25) stop.request_stop();
        return out;
      }
    } stopper(first, stop);
    const auto res = execute_plan(plan, stopper, {.work_dir = dir / "work", .stop = stop.get_token()});
    CHECK(res.report.interrupted);
    CHECK(res.report.status() == "interrupted");
    CHECK(res.records.size() == 25);
  }
  test::CountingBackend second(stub());
  const auto res = execute_plan(plan, second, {.work_dir = dir / "work"});
  CHECK(second.calls() == 15);
  CHECK(res.report.tasks_resumed == 25);
  CHECK(res.records.size() == 40);
}

TEST_CASE("execute_plan: capability mismatch fails before generating") {
  struct TextOnly : LdmBackend {
    int calls = 0;
    std::set<Capability> capabilities() const override { return {Capability::kTxt2Img}; }
    bool deterministic() const override { return true; }
    std::string name() const override { return "text-only"; }
    BackendResponse generate(const BackendRequest&) override {
      ++calls;
      return {};
    }
  } backend;
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art"}, {"dog"}, {{2}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_sdga(m, AugmentationKind::kSdgaPgLabel, {}, 1);
  CHECK_THROWS_AS(execute_plan(plan, backend, {.work_dir = dir / "work"}), BackendError);
  CHECK(backend.calls == 0);
}

TEST_CASE("execute_plan: multiple workers give the same records") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art", "photo"}, {"dog"}, {{4}, {3}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 2, std::nullopt);
  StubBackend backend;
  const auto a = execute_plan(plan, backend, {.work_dir = dir / "w1", .workers = 1});
  const auto b = execute_plan(plan, backend, {.work_dir = dir / "w4", .workers = 4});
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].task_id == b.records[i].task_id);
    CHECK(test::same_file(a.records[i].image_path, b.records[i].image_path));
  }
}

TEST_CASE("materialize: pseudo-domains, naming, round trip and collisions") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art", "photo"}, {"dog", "cat"}, {{5, 5}, {5, 5}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 1, std::string("pencil"),
                              AugmentationKind::kCdgaStarPg);
  StubBackend backend;
  const auto res = execute_plan(plan, backend, {.work_dir = dir / "work"});
  const auto aug = materialize_augmented_dataset(res.records, m, dir / "out");
  std::set<std::string> gen;
  for (const auto& d : aug.domains) {
    if (parse_generated_domain(d)) gen.insert(d);
  }
  CHECK(gen == std::set<std::string>{"gen_art__to__art", "gen_art__to__photo", "gen_art__to__TARGET",
                                     "gen_photo__to__art", "gen_photo__to__photo", "gen_photo__to__TARGET"});
  CHECK(aug.entries.size() == m.entries.size() + res.records.size());
  CHECK(scan_dataset(dir / "out").entries.size() == m.entries.size() + res.records.size());
  CHECK(std::filesystem::exists(dir / "out/gen_art__to__photo/dog/img0__s0.png"));
  CHECK_THROWS(materialize_augmented_dataset(res.records, m, dir / "out"));
  CHECK_NOTHROW(materialize_augmented_dataset(res.records, m, dir / "out", true));
}

TEST_CASE("generated domain names parse") {
  const auto g = parse_generated_domain(generated_domain_name("art", "photo"));
  REQUIRE(g);
  CHECK(g->source == "art");
  CHECK(g->guidance == "photo");
  CHECK_FALSE(parse_generated_domain("photo"));
}

TEST_CASE("two executions produce byte-identical trees") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"art", "photo"}, {"dog"}, {{3}, {3}});
  const auto m = scan_dataset(dir / "data");
  const auto plan = plan_cdga(m, {"art", "photo"}, descriptions(), 2, std::nullopt);
  StubBackend backend;
  const auto a = execute_plan(plan, backend, {.work_dir = dir / "wa"});
  const auto b = execute_plan(plan, backend, {.work_dir = dir / "wb"});
  materialize_augmented_dataset(a.records, m, dir / "ta");
  materialize_augmented_dataset(b.records, m, dir / "tb");
  const auto fa = test::list_files(dir / "ta");
  REQUIRE(fa == test::list_files(dir / "tb"));
  for (const auto& f : fa) CHECK(test::same_file(dir / "ta" / f.string(), dir / "tb" / f.string()));
}
