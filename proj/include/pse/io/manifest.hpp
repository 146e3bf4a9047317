#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <map>
#include <string>

#include <json.hpp>

#include "pse/io/tsv.hpp"

namespace pse {

constexpr const char* kArtifactVersion = "pse 0.1.0";

inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Provenance record written beside every run's outputs. Timestamps vary
// between runs by nature; all other outputs of a --workers 1 run are
// byte-reproducible.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::uint64_t seed)
      : subcommand_(std::move(subcommand)), seed_(seed),
        started_(iso8601_utc_now()) {}

  void set_config(nlohmann::json config) { config_ = std::move(config); }

  void add_input(const std::string& path) {
    digests_[path] = fnv1a64_hex(read_file(path));
  }

  void add_note(const std::string& note) { notes_.push_back(note); }

  void write(const std::string& path) const {
    nlohmann::json j;
    j["subcommand"] = subcommand_;
    j["config"] = config_;
    j["seed"] = seed_;
    j["input_digests"] = digests_;
    j["artifact_version"] = kArtifactVersion;
    j["started_at"] = started_;
    j["finished_at"] = iso8601_utc_now();
    if (!notes_.empty()) j["notes"] = notes_;
    auto out = open_output(path);
    out << j.dump(2) << '\n';
  }

 private:
  std::string subcommand_;
  std::uint64_t seed_;
  std::string started_;
  nlohmann::json config_;
  std::map<std::string, std::string> digests_;
  std::vector<std::string> notes_;
};

}  // namespace pse
