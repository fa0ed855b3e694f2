#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "visitscope/config.hpp"

namespace visitscope::pipeline {

inline constexpr const char* kVersion = "0.1.0";

enum class Stage { Ingest, Quality, Visits, Fit, Classify, Patterns, Report };
inline constexpr Stage kStages[] = {Stage::Ingest,   Stage::Quality,  Stage::Visits, Stage::Fit,
                                    Stage::Classify, Stage::Patterns, Stage::Report};

const char* to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& message)
      : std::runtime_error(std::string(to_string(stage)) + ": " + message), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct StageOutcome {
  Stage stage = Stage::Ingest;
  bool cached = false;
  double seconds = 0.0;
  std::string key;
};

struct RunOptions {
  bool progress_json = false;
  std::function<void(const std::string&)> log;       // human-readable lines
  std::function<void(const std::string&)> progress;  // JSON lines
};

/// Runs every stage up to and including `target`. Stages whose cache key
/// and recorded outputs are unchanged are skipped. Throws StageError.
std::vector<StageOutcome> run(const PipelineConfig& config, Stage target, const RunOptions& options = {});

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace visitscope::pipeline
