#pragma once

// Binary PGM (P5) reader/writer, 8-bit only (maxval 255).

#include <filesystem>
#include <stdexcept>
#include <string>

#include "stegcnn/tensor.hpp"

namespace stegcnn {

class PgmError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, ascii_variant, bad_header, unsupported_maxval, truncated, bad_pixel };

    PgmError(Kind kind, const std::string& message) : std::runtime_error(message), kind_{kind} {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Parses an in-memory P5 file. Comment lines ('#' to end of line) are allowed
/// anywhere between header tokens.
ImageGrid parse_pgm(const std::string& bytes, const std::string& origin = "<memory>");

/// Encodes a grid whose values are integers in [0, 255].
std::string encode_pgm(const ImageGrid& grid);

ImageGrid load_pgm(const std::filesystem::path& path);
void save_pgm(const ImageGrid& grid, const std::filesystem::path& path);

}  // namespace stegcnn
