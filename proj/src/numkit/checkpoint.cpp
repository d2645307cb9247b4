#include "orl/numkit/checkpoint.hpp"

#include <array>
#include <fstream>
#include <string>

#include "orl/errors.hpp"
#include "orl/numkit/binary_io.hpp"

namespace orl {
namespace {

constexpr std::array<char, 4> kMagic{'O', 'R', 'L', 'W'};
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxWidth = 1u << 20;

}  // namespace

void save_mlp(const MlpNet& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  io::write<std::uint16_t>(out, kWeightsFormatVersion);
  io::write<std::uint8_t>(out, static_cast<std::uint8_t>(net.head()));
  io::write<std::uint8_t>(out, 0);
  io::write<double>(out, net.output_bound());
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(net.num_layers()));
  for (int d : net.dims()) io::write<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (Eigen::Index i = 0; i < net.params().size(); ++i) io::write<double>(out, net.params()[i]);
  if (!out) throw Error("failed writing network checkpoint");
}

void save_mlp(const MlpNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_mlp(net, out);
}

MlpNet load_mlp(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw CorruptHeaderError("not an ORLW checkpoint");
  const auto version = io::read<std::uint16_t, CorruptHeaderError>(in, "version");
  if (version != kWeightsFormatVersion) {
    throw VersionMismatchError("ORLW version " + std::to_string(version) + " unsupported (expected " +
                               std::to_string(kWeightsFormatVersion) + ")");
  }
  const auto head = io::read<std::uint8_t, CorruptHeaderError>(in, "head");
  io::read<std::uint8_t, CorruptHeaderError>(in, "reserved");
  const auto bound = io::read<double, CorruptHeaderError>(in, "output bound");
  const auto layers = io::read<std::uint32_t, CorruptHeaderError>(in, "layer count");
  if (head > 1 || layers == 0 || layers > kMaxLayers) {
    throw CorruptHeaderError("ORLW header fields out of range");
  }
  std::vector<int> dims;
  for (std::uint32_t k = 0; k <= layers; ++k) {
    const auto d = io::read<std::uint32_t, CorruptHeaderError>(in, "layer dims");
    if (d == 0 || d > kMaxWidth) throw CorruptHeaderError("ORLW layer width out of range");
    dims.push_back(static_cast<int>(d));
  }
  MlpNet net;
  try {
    net = MlpNet(dims, static_cast<OutputActivation>(head), bound);
  } catch (const InvalidInput& e) {
    throw CorruptHeaderError(std::string("ORLW header invalid: ") + e.what());
  }
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    net.params()[i] = io::read<double>(in, "parameters");
  }
  return net;
}

MlpNet load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_mlp(in);
}

}  // namespace orl
