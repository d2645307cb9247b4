#include "orl/cli/metrics.hpp"

#include <limits>
#include <string>

#include "orl/agents/serialization.hpp"
#include "orl/errors.hpp"

namespace orl {

using nlohmann::json;

json metrics_record_json(const TrainRecord& record) {
  json j = {{"step", record.step}, {"scalars", record.scalars}};
  if (record.eval) j["eval"] = *record.eval;
  return j;
}

TrainRecord metrics_record_from_json(const json& j) {
  TrainRecord r;
  r.step = j.at("step").get<std::int64_t>();
  for (const auto& [name, value] : j.at("scalars").items()) {
    // Non-finite values are serialized as null.
    r.scalars[name] = value.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                      : value.get<double>();
  }
  if (auto it = j.find("eval"); it != j.end()) {
    EvalResult e;
    e.mean_return = it->at("mean_return").get<double>();
    e.std_return = it->at("std_return").get<double>();
    e.normalized_score = it->at("normalized_score").get<double>();
    r.eval = e;
  }
  return r;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
  if (std::filesystem::exists(path)) {
    const auto existing = read_metrics(path);
    if (!existing.empty()) last_step_ = existing.back().step;
  }
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open metrics file " + path.string());
}

void MetricsWriter::write(const TrainRecord& record) {
  if (last_step_ && record.step <= *last_step_) {
    throw InvalidInput("metrics step " + std::to_string(record.step) +
                       " does not follow step " + std::to_string(*last_step_));
  }
  out_ << metrics_record_json(record).dump() << '\n';
  out_.flush();
  if (!out_) throw Error("write to " + path_.string() + " failed");
  last_step_ = record.step;
}

std::vector<TrainRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file " + path.string());
  std::vector<TrainRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      records.push_back(metrics_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(where + ": malformed record: " + e.what());
    }
    if (records.size() > 1 && records.back().step <= records[records.size() - 2].step) {
      throw FormatError(where + ": step " + std::to_string(records.back().step) +
                        " is not after the previous record");
    }
  }
  return records;
}

}  // namespace orl
