#pragma once

#include <filesystem>
#include <string>

#include "orl/data/dataset.hpp"

namespace orl {

/// Binary "ORLD" dataset file:
///
///   magic "ORLD" | u16 version | u32 obs_dim | u32 act_dim | u64 count
///   | per transition: f64 state[obs] f64 action[act] f64 reward
///                     f64 next_state[obs] u8 terminal
///
/// little-endian, plus a JSON sidecar `<path>.manifest.json`.
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path);
/// Throws CorruptHeaderError, VersionMismatchError or TruncatedPayloadError.
OfflineDataset load_dataset(const std::filesystem::path& path);

/// CSV with header `s0..s{o-1},a0..a{k-1},r,ns0..ns{o-1},done`.
OfflineDataset import_csv(const std::filesystem::path& path, const std::string& env,
                          const std::string& source_label, std::uint64_t seed);
/// Writes the same layout with round-trip exact (17 significant digit) values.
void export_csv(const OfflineDataset& dataset, const std::filesystem::path& path);

}  // namespace orl
