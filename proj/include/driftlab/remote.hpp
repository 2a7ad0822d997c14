#pragma once

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "httplib.h"

#include "driftlab/errors.hpp"
#include "driftlab/predictor.hpp"

namespace driftlab {

struct RemoteConfig {
  std::string endpoint;  // http://host:port/path
  double timeout_s = 30.0;
  int retries = 2;          // additional attempts after the first failure
  int concurrency_cap = 4;  // max remote calls in flight across all agents
  std::optional<std::filesystem::path> cache_file;
};

// HTTP client for an external text-model annotation service. The request
// body is the system preamble plus the built prompt as UTF-8 text; the
// response body is free text handed to parse_response. Responses are cached
// by (video_id, prompt topic): at most one remote call per key per run, with
// concurrent requests for the same key folded into a single flight.
class RemoteAnnotator : public Annotator {
 public:
  explicit RemoteAnnotator(RemoteConfig config) : config_(std::move(config)) {
    parse_endpoint();
    if (config_.cache_file) load_cache(*config_.cache_file);
    slots_free_ = std::max(1, config_.concurrency_cap);
  }

  Annotation annotate(const VideoRecord& v, const UserProfile& profile) override {
    const std::string key = cache_key(v.video_id, profile.topic);

    std::shared_ptr<Entry> entry;
    bool owner = false;
    {
      std::unique_lock lock(mu_);
      auto hit = cache_.find(key);
      if (hit != cache_.end()) return hit->second;
      auto [it, inserted] = in_flight_.try_emplace(key);
      if (inserted) {
        it->second = std::make_shared<Entry>();
        owner = true;
      }
      entry = it->second;
      if (!owner) {
        entry->cv.wait(lock, [&] { return entry->done; });
        if (entry->failed) throw Error(Errc::remote_unavailable, entry->error);
        return entry->result;
      }
    }

    Annotation result;
    std::string error;
    bool failed = false;
    try {
      result = call_remote(v, profile);
    } catch (const Error& e) {
      failed = true;
      error = e.what();
    }

    {
      std::unique_lock lock(mu_);
      entry->done = true;
      entry->failed = failed;
      entry->result = result;
      entry->error = error;
      if (!failed) {
        cache_.emplace(key, result);
        if (config_.cache_file) append_cache_line(key, result);
      }
      in_flight_.erase(key);
    }
    entry->cv.notify_all();
    if (failed) throw Error(Errc::remote_unavailable, error);
    return result;
  }

  std::size_t cache_size() const {
    std::unique_lock lock(mu_);
    return cache_.size();
  }

  static std::string cache_key(const std::string& video_id, TopicId topic) {
    return video_id + "\x1f" + std::string(to_string(topic));
  }

 private:
  struct Entry {
    std::condition_variable_any cv;
    bool done = false;
    bool failed = false;
    Annotation result;
    std::string error;
  };

  void parse_endpoint() {
    const std::string& url = config_.endpoint;
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0)
      throw Error(Errc::validation, "endpoint must start with http://: " + url);
    const std::string rest = url.substr(scheme.size());
    const std::size_t slash = rest.find('/');
    host_part_ = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    if (host_part_.empty()) throw Error(Errc::validation, "endpoint missing host: " + url);
  }

  Annotation call_remote(const VideoRecord& v, const UserProfile& profile) {
    const std::string body =
        std::string(kAnnotationSystemPrompt) + "\n\n" + build_prompt(v, profile);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      acquire_slot();
      httplib::Client client(host_part_);
      client.set_connection_timeout(static_cast<int>(config_.timeout_s), 0);
      client.set_read_timeout(static_cast<int>(config_.timeout_s), 0);
      auto res = client.Post(path_, body, "text/plain; charset=utf-8");
      release_slot();

      if (!res) {
        last_error = "transport failure contacting " + config_.endpoint;
        continue;
      }
      if (res->status != 200) {
        last_error = "endpoint returned status " + std::to_string(res->status);
        continue;
      }
      try {
        return parse_response(res->body, profile.topic);
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    throw Error(Errc::remote_unavailable,
                "giving up after " + std::to_string(config_.retries + 1) + " attempts: " +
                    last_error);
  }

  void acquire_slot() {
    std::unique_lock lock(slot_mu_);
    slot_cv_.wait(lock, [&] { return slots_free_ > 0; });
    --slots_free_;
  }

  void release_slot() {
    {
      std::unique_lock lock(slot_mu_);
      ++slots_free_;
    }
    slot_cv_.notify_one();
  }

  void load_cache(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return;  // first run: nothing persisted yet
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true) {
        std::size_t tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (fields.size() != 4)
        throw Error(Errc::parse, "bad cache line in " + file.string());
      Annotation a{parse_topic_class(fields[2]), parse_stance(fields[3])};
      cache_.emplace(cache_key(fields[0], parse_topic(fields[1])), a);
    }
  }

  void append_cache_line(const std::string& key, const Annotation& a) {
    // key = video_id \x1f topic
    const std::size_t sep = key.find('\x1f');
    std::ofstream out(*config_.cache_file, std::ios::app);
    if (!out) throw Error(Errc::io, "cannot append to " + config_.cache_file->string());
    out << key.substr(0, sep) << "\t" << key.substr(sep + 1) << "\t"
        << to_string(a.topic_class) << "\t" << to_string(a.stance) << "\n";
  }

  RemoteConfig config_;
  std::string host_part_;
  std::string path_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, Annotation> cache_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> in_flight_;

  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int slots_free_ = 1;
};

}  // namespace driftlab
