#pragma once

// Checkpoint container.
//
//   stegcnn-checkpoint 1
//   input_size <N>
//   layer <kernels> <size> <stride> <padding> <activation> <pool_mode> <pool_region> <pool_stride>
//   ...                                    (one line per conv layer)
//   epoch <e>                              (1-based; 0 = untrained)
//   norm_mean <%.17g>
//   norm_std <%.17g>
//   meta <key> <value>                     (any number; value runs to end of line)
//   params <count>
//   end
//   <count little-endian IEEE-754 doubles, layout of ParameterStore>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stegcnn/dataset.hpp"
#include "stegcnn/network.hpp"

namespace stegcnn {

struct Checkpoint {
    ParameterStore params;
    int epoch = 0;
    NormalizationStats stats{};
    /// Provenance (seeds, config digest, stego config...), kept in order.
    std::vector<std::pair<std::string, std::string>> metadata;

    const NetworkSpec& spec() const noexcept { return params.spec(); }
    std::optional<std::string> meta(const std::string& key) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws std::runtime_error naming the file on I/O or format errors.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stegcnn
