#pragma once

#include <filesystem>
#include <iosfwd>

#include "orl/numkit/mlp.hpp"

namespace orl {

/// "ORLW" network checkpoint.
///
///   magic "ORLW" | u16 version | u8 head | u8 reserved | f64 output bound
///   | u32 layer count L | u32 dims[L + 1] | f64 params (MlpNet::params order)
///
/// All integers and floats little-endian.
inline constexpr std::uint16_t kWeightsFormatVersion = 1;

void save_mlp(const MlpNet& net, std::ostream& out);
void save_mlp(const MlpNet& net, const std::filesystem::path& path);
MlpNet load_mlp(std::istream& in);
MlpNet load_mlp(const std::filesystem::path& path);

}  // namespace orl
