#include "orl/data/dataset_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "orl/errors.hpp"
#include "orl/numkit/binary_io.hpp"

namespace orl {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic{'O', 'R', 'L', 'D'};
constexpr std::uint32_t kMaxDim = 1u << 16;

json manifest_to_json(const Manifest& m) {
  json sources = json::array();
  for (const auto& s : m.sources) {
    sources.push_back({{"label", s.label}, {"count", s.count}, {"seed", s.seed}});
  }
  return {{"env", m.env}, {"seed", m.seed}, {"sources", sources}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.env = j.at("env").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("sources")) {
    m.sources.push_back({s.at("label").get<std::string>(), s.at("count").get<std::uint64_t>(),
                         s.at("seed").get<std::uint64_t>()});
  }
  return m;
}

double parse_double(std::string_view text, std::size_t line) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("csv line " + std::to_string(line) + ": cannot parse '" + std::string(text) +
                      "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  return std::filesystem::path(dataset_path.string() + ".manifest.json");
}

void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  io::write<std::uint16_t>(out, kDatasetFormatVersion);
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.obs_dim()));
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.act_dim()));
  io::write<std::uint64_t>(out, dataset.size());
  const auto obs = dataset.obs_dim();
  const auto act = dataset.act_dim();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    for (int k = 0; k < obs; ++k) io::write<double>(out, dataset.states()(k, c));
    for (int k = 0; k < act; ++k) io::write<double>(out, dataset.actions()(k, c));
    io::write<double>(out, dataset.rewards()[c]);
    for (int k = 0; k < obs; ++k) io::write<double>(out, dataset.next_states()(k, c));
    io::write<std::uint8_t>(out, dataset.terminals()[i]);
  }
  if (!out) throw Error("failed writing " + path.string());

  std::ofstream side(manifest_path(path), std::ios::trunc);
  if (!side) throw Error("cannot open " + manifest_path(path).string() + " for writing");
  side << manifest_to_json(dataset.manifest()).dump(2) << '\n';
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) {
    throw CorruptHeaderError(path.string() + ": not an ORLD dataset (bad magic)");
  }
  const auto version = io::read<std::uint16_t, CorruptHeaderError>(in, "version");
  if (version != kDatasetFormatVersion) {
    throw VersionMismatchError(path.string() + ": ORLD version " + std::to_string(version) +
                               " unsupported (expected " +
                               std::to_string(kDatasetFormatVersion) + ")");
  }
  const auto obs = io::read<std::uint32_t, CorruptHeaderError>(in, "obs_dim");
  const auto act = io::read<std::uint32_t, CorruptHeaderError>(in, "act_dim");
  const auto count = io::read<std::uint64_t, CorruptHeaderError>(in, "count");
  if (obs == 0 || act == 0 || obs > kMaxDim || act > kMaxDim) {
    throw CorruptHeaderError(path.string() + ": header dims out of range");
  }
  // Reject counts the file cannot possibly hold before allocating.
  const std::uint64_t row_bytes = 8ull * (2ull * obs + act + 1) + 1;
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto file_end = in.tellg();
  in.seekg(header_end);
  const auto payload = static_cast<std::uint64_t>(file_end - header_end);
  if (count > payload / row_bytes) {
    throw TruncatedPayloadError(path.string() + ": header announces " + std::to_string(count) +
                                " transitions but payload holds " +
                                std::to_string(payload / row_bytes));
  }

  const auto n = static_cast<Eigen::Index>(count);
  Mat states(obs, n), actions(act, n), next_states(obs, n);
  Vec rewards(n);
  std::vector<std::uint8_t> terminals(static_cast<std::size_t>(count));
  for (Eigen::Index c = 0; c < n; ++c) {
    for (std::uint32_t k = 0; k < obs; ++k) states(k, c) = io::read<double>(in, "state");
    for (std::uint32_t k = 0; k < act; ++k) actions(k, c) = io::read<double>(in, "action");
    rewards[c] = io::read<double>(in, "reward");
    for (std::uint32_t k = 0; k < obs; ++k) next_states(k, c) = io::read<double>(in, "next state");
    terminals[static_cast<std::size_t>(c)] = io::read<std::uint8_t>(in, "terminal flag");
  }

  std::ifstream side(manifest_path(path));
  if (!side) throw FormatError(path.string() + ": missing manifest sidecar");
  Manifest manifest;
  try {
    manifest = manifest_from_json(json::parse(side));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad manifest: " + e.what());
  }
  return OfflineDataset(std::move(states), std::move(actions), std::move(rewards),
                        std::move(next_states), std::move(terminals), std::move(manifest));
}

OfflineDataset import_csv(const std::filesystem::path& path, const std::string& env,
                          const std::string& source_label, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FormatError(path.string() + ": empty csv");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const auto names = split_commas(header);
  int obs = 0, act = 0, next = 0;
  std::size_t col = 0;
  const auto expect = [&](const std::string& name) {
    if (col >= names.size() || names[col] != name) {
      throw FormatError(path.string() + ": expected csv column '" + name + "' at position " +
                        std::to_string(col));
    }
    ++col;
  };
  while (col < names.size() && names[col] == "s" + std::to_string(obs)) ++obs, ++col;
  while (col < names.size() && names[col] == "a" + std::to_string(act)) ++act, ++col;
  expect("r");
  while (col < names.size() && names[col] == "ns" + std::to_string(next)) ++next, ++col;
  expect("done");
  if (obs == 0 || act == 0 || next != obs || col != names.size()) {
    throw FormatError(path.string() + ": malformed csv header");
  }

  DatasetBuilder builder(obs, act);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    if (cells.size() != names.size()) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(names.size()));
    }
    Transition t{Vec(obs), Vec(act), 0.0, Vec(obs), false};
    std::size_t c = 0;
    for (int k = 0; k < obs; ++k) t.state[k] = parse_double(cells[c++], line_no);
    for (int k = 0; k < act; ++k) t.action[k] = parse_double(cells[c++], line_no);
    t.reward = parse_double(cells[c++], line_no);
    for (int k = 0; k < obs; ++k) t.next_state[k] = parse_double(cells[c++], line_no);
    t.terminal = parse_double(cells[c++], line_no) != 0.0;
    builder.add(t);
  }
  Manifest manifest{env, {{source_label, builder.size(), seed}}, seed};
  return std::move(builder).build(std::move(manifest));
}

void export_csv(const OfflineDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const int obs = dataset.obs_dim();
  const int act = dataset.act_dim();
  std::ostringstream header;
  for (int k = 0; k < obs; ++k) header << 's' << k << ',';
  for (int k = 0; k < act; ++k) header << 'a' << k << ',';
  header << "r,";
  for (int k = 0; k < obs; ++k) header << "ns" << k << ',';
  header << "done";
  out << header.str() << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    for (int k = 0; k < obs; ++k) out << format_double(dataset.states()(k, c)) << ',';
    for (int k = 0; k < act; ++k) out << format_double(dataset.actions()(k, c)) << ',';
    out << format_double(dataset.rewards()[c]) << ',';
    for (int k = 0; k < obs; ++k) out << format_double(dataset.next_states()(k, c)) << ',';
    out << (dataset.terminals()[i] ? 1 : 0) << '\n';
  }
}

}  // namespace orl
