#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "json.hpp"
#include "orl/agents/train_log.hpp"

namespace orl {

/// One line of a metrics file:
///   {"step": 1000, "scalars": {"critic_loss": ..}, "eval": {"mean_return": ..,
///    "std_return": .., "normalized_score": ..}}
/// "eval" is omitted when the record carries no evaluation.
nlohmann::json metrics_record_json(const TrainRecord& record);
TrainRecord metrics_record_from_json(const nlohmann::json& j);

/// Appends records to a line-delimited JSON file, one flushed line per
/// record. Steps must increase strictly, including across reopenings of an
/// existing file.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);

  /// Throws InvalidInput if record.step is not above the last written step.
  void write(const TrainRecord& record);
  std::optional<std::int64_t> last_step() const { return last_step_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::optional<std::int64_t> last_step_;
};

/// Parses a metrics file. Throws FormatError on malformed lines or steps
/// that do not increase strictly.
std::vector<TrainRecord> read_metrics(const std::filesystem::path& path);

}  // namespace orl
