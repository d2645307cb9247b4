#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orl/envs/envs.hpp"

namespace orl {

struct TrainRecord {
  std::int64_t step = 0;
  /// Interval means of the logged losses and diagnostics.
  std::map<std::string, double> scalars;
  std::optional<EvalResult> eval;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::int64_t critic_updates = 0;
  std::int64_t actor_updates = 0;
};

bool operator==(const EvalResult& a, const EvalResult& b);
bool operator==(const TrainRecord& a, const TrainRecord& b);
bool operator==(const TrainLog& a, const TrainLog& b);

/// Evaluates a deterministic actor on raw environment states.
using EvalHook = std::function<EvalResult(const Actor&)>;
/// Observes each record as soon as it is produced.
using RecordHook = std::function<void(const TrainRecord&)>;

}  // namespace orl
