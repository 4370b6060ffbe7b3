#include "cdga/generator/execute.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <thread>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"

namespace cdga {

json to_json(const SyntheticRecord& r) {
  return {{"image_path", r.image_path.generic_string()},
          {"task", r.task_id},
          {"source_entry", r.source_entry},
          {"source_domain", r.source_domain},
          {"guidance_domain", r.guidance_domain},
          {"class", r.class_label},
          {"slot", r.slot},
          {"backend_params", r.backend_params}};
}

SyntheticRecord record_from_json(const json& doc) {
  try {
    SyntheticRecord r;
    r.image_path = doc.at("image_path").get<std::string>();
    r.task_id = doc.at("task").get<std::string>();
    r.source_entry = doc.at("source_entry").get<std::string>();
    r.source_domain = doc.at("source_domain").get<std::string>();
    r.guidance_domain = doc.at("guidance_domain").get<std::string>();
    r.class_label = doc.at("class").get<std::string>();
    r.slot = doc.at("slot").get<int>();
    r.backend_params = doc.value("backend_params", json::object());
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed synthetic record: ") + e.what());
  }
}

void save_records(const std::vector<SyntheticRecord>& records, const fs::path& path) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  write_json(path, arr);
}

std::vector<SyntheticRecord> load_records(const fs::path& path) {
  std::vector<SyntheticRecord> out;
  for (const auto& doc : read_json(path)) out.push_back(record_from_json(doc));
  return out;
}

std::string RunReport::status() const {
  if (interrupted) return "interrupted";
  return failures.empty() ? "complete" : "partial";
}

json to_json(const RunReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"task", f.task}, {"reason", f.reason}});
  return {{"tasks_total", r.tasks_total},
          {"tasks_done", r.tasks_done},
          {"tasks_resumed", r.tasks_resumed},
          {"backend_calls", r.backend_calls},
          {"failures", std::move(failures)},
          {"status", r.status()},
          {"wall_time", r.wall_time}};
}

namespace {

fs::path checkpoint_path(const fs::path& work_dir, const GenerationTask& task) {
  return work_dir / "tasks" / (task.id + ".json");
}

fs::path image_path(const fs::path& work_dir, const GenerationTask& task, int slot) {
  return work_dir / "images" / (task.id + "__s" + std::to_string(slot) + ".png");
}

std::vector<SyntheticRecord> make_records(const GenerationTask& task, const fs::path& work_dir) {
  std::vector<SyntheticRecord> out;
  json params = task.backend_params;
  params["seed"] = task.seed;
  for (int slot = 0; slot < task.batch_size; ++slot) {
    out.push_back(SyntheticRecord{image_path(work_dir, task, slot), task.id, task.source_entry,
                                  task.source_domain, task.guidance.guidance_domain,
                                  task.class_label, slot, params});
  }
  return out;
}

// A checkpoint counts only when it matches the task and every image exists.
std::optional<std::vector<SyntheticRecord>> load_checkpoint(const fs::path& work_dir,
                                                            const GenerationTask& task) {
  const fs::path cp = checkpoint_path(work_dir, task);
  if (!fs::exists(cp)) return std::nullopt;
  try {
    auto records = load_records(cp);
    if (static_cast<int>(records.size()) != task.batch_size) return std::nullopt;
    if (records != make_records(task, work_dir)) return std::nullopt;
    for (const auto& r : records) {
      if (!fs::exists(r.image_path)) return std::nullopt;
    }
    return records;
  } catch (const Error&) {
    return std::nullopt;
  }
}

BackendRequest make_request(const GenerationTask& task) {
  BackendRequest req;
  req.mode = task.capability;
  req.prompt = task.guidance.prompt_text;
  req.params = task.backend_params;
  req.seed = task.seed;
  req.count = task.batch_size;
  if (task.capability != Capability::kTxt2Img) req.source_image = read_bytes(task.source_path);
  if (task.guidance_path) req.guidance_image = read_bytes(*task.guidance_path);
  return req;
}

}  // namespace

ExecutionResult execute_plan(const GenerationPlan& plan, LdmBackend& backend,
                             const ExecuteOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (options.work_dir.empty()) throw InvalidArgument("execute_plan: work_dir is required");

  const auto caps = backend.capabilities();
  for (const auto& t : plan.tasks) {
    if (!caps.contains(t.capability)) {
      throw BackendError("backend '" + backend.name() + "' lacks capability " +
                         std::string(to_string(t.capability)) + " needed by task " + t.id);
    }
    if (t.batch_size < 1) throw InvalidArgument("task " + t.id + " has batch size < 1");
  }
  fs::create_directories(options.work_dir / "tasks");
  fs::create_directories(options.work_dir / "images");

  const std::size_t n = plan.tasks.size();
  std::vector<std::optional<std::vector<SyntheticRecord>>> results(n);
  std::vector<std::optional<TaskFailure>> failures(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> resumed{0};
  std::atomic<bool> interrupted{false};

  auto run_task = [&](std::size_t i) {
    const GenerationTask& task = plan.tasks[i];
    if (auto done = load_checkpoint(options.work_dir, task)) {
      results[i] = std::move(done);
      ++resumed;
      return;
    }
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      try {
        const BackendRequest req = make_request(task);
        ++calls;
        BackendResponse res = backend.generate(req);
        if (static_cast<int>(res.images.size()) != task.batch_size) {
          throw BackendError("backend returned " + std::to_string(res.images.size()) +
                             " images for batch size " + std::to_string(task.batch_size));
        }
        auto records = make_records(task, options.work_dir);
        for (int slot = 0; slot < task.batch_size; ++slot) {
          atomic_write(records[slot].image_path, res.images[slot]);
        }
        save_records(records, checkpoint_path(options.work_dir, task));
        results[i] = std::move(records);
        return;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    failures[i] = TaskFailure{task.id, last_error};
  };

  int workers = std::max(1, options.workers);
  if (backend.max_concurrency() > 0) workers = std::min(workers, backend.max_concurrency());
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));

  auto worker = [&] {
    while (true) {
      if (options.stop.stop_requested()) {
        interrupted = true;
        return;
      }
      const std::size_t i = next++;
      if (i >= n) return;
      run_task(i);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ExecutionResult out;
  out.report.tasks_total = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      ++out.report.tasks_done;
      for (auto& r : *results[i]) out.records.push_back(std::move(r));
    } else if (failures[i]) {
      out.report.failures.push_back(*failures[i]);
    }
  }
  out.report.backend_calls = calls;
  out.report.tasks_resumed = resumed;
  out.report.interrupted = interrupted && out.report.tasks_done + out.report.failures.size() < n;
  out.report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------

std::string generated_domain_name(const std::string& source, const std::string& guidance) {
  return "gen_" + source + "__to__" + guidance;
}

std::optional<GeneratedDomain> parse_generated_domain(const std::string& name) {
  if (!name.starts_with("gen_")) return std::nullopt;
  const auto sep = name.find("__to__", 4);
  if (sep == std::string::npos) return std::nullopt;
  GeneratedDomain g{name.substr(4, sep - 4), name.substr(sep + 6)};
  if (g.source.empty() || g.guidance.empty()) return std::nullopt;
  return g;
}

namespace {

void place_file(const fs::path& from, const fs::path& to, bool resume) {
  if (fs::exists(to)) {
    if (resume) return;
    throw IoError("refusing to overwrite existing file " + to.string() + " (use resume mode)");
  }
  fs::create_directories(to.parent_path());
  atomic_write(to, read_bytes(from));
}

}  // namespace

DomainDatasetManifest materialize_augmented_dataset(const std::vector<SyntheticRecord>& records,
                                                    const DomainDatasetManifest& original,
                                                    const fs::path& out_root, bool resume) {
  fs::create_directories(out_root);
  for (const auto& e : original.entries) {
    place_file(original.absolute_path(e), out_root / e.path, resume);
  }
  for (const auto& r : records) {
    const ManifestEntry* src = original.find(r.source_entry);
    if (!src) throw InvalidArgument("record references unknown source entry " + r.source_entry);
    if (original.classes[src->label] != r.class_label) {
      throw InvalidArgument("record for " + r.source_entry + " changes the class label");
    }
    const std::string stem = src->path.stem().string();
    const fs::path dest = out_root / generated_domain_name(r.source_domain, r.guidance_domain) /
                          r.class_label / (stem + "__s" + std::to_string(r.slot) + ".png");
    place_file(r.image_path, dest, resume);
  }
  return scan_dataset(out_root);
}

}  // namespace cdga
