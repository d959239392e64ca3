#include "stegcnn/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace stegcnn {

namespace {

class HeaderReader {
public:
    HeaderReader(const std::string& bytes, const std::string& origin) : bytes_{bytes}, origin_{origin} {}

    int next_int(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (start == pos_) {
            if (pos_ >= bytes_.size())
                throw PgmError(PgmError::Kind::truncated, origin_ + ": header ends before " + what);
            throw PgmError(PgmError::Kind::bad_header, origin_ + ": expected " + std::string(what) + " in header");
        }
        const std::string digits = bytes_.substr(start, pos_ - start);
        if (digits.size() > 9) throw PgmError(PgmError::Kind::bad_header, origin_ + ": " + what + " out of range");
        return std::stoi(digits);
    }

    /// Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size()) throw PgmError(PgmError::Kind::truncated, origin_ + ": missing pixel data");
        if (!std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw PgmError(PgmError::Kind::bad_header, origin_ + ": maxval not followed by whitespace");
        return pos_ + 1;
    }

    void skip(std::size_t n) { pos_ += n; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    const std::string& origin_;
    std::size_t pos_ = 0;
};

}  // namespace

ImageGrid parse_pgm(const std::string& bytes, const std::string& origin) {
    if (bytes.size() < 2) throw PgmError(PgmError::Kind::truncated, origin + ": file too short for a PGM header");
    if (bytes[0] == 'P' && bytes[1] == '2')
        throw PgmError(PgmError::Kind::ascii_variant, origin + ": ASCII PGM (P2) is not supported, expected binary P5");
    if (bytes[0] != 'P' || bytes[1] != '5')
        throw PgmError(PgmError::Kind::bad_magic, origin + ": not a binary PGM file (magic must be P5)");

    HeaderReader reader(bytes, origin);
    reader.skip(2);
    const int width = reader.next_int("width");
    const int height = reader.next_int("height");
    const int maxval = reader.next_int("maxval");
    if (width <= 0 || height <= 0) throw PgmError(PgmError::Kind::bad_header, origin + ": image dimensions must be positive");
    if (maxval != 255)
        throw PgmError(PgmError::Kind::unsupported_maxval,
                       origin + ": maxval " + std::to_string(maxval) + " unsupported (only 8-bit, maxval 255)");
    const std::size_t start = reader.raster_start();
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - start < count) {
        std::ostringstream msg;
        msg << origin << ": truncated pixel data (" << bytes.size() - start << " of " << count << " bytes)";
        throw PgmError(PgmError::Kind::truncated, msg.str());
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = static_cast<unsigned char>(bytes[start + i]);
    return ImageGrid(height, width, std::move(values));
}

std::string encode_pgm(const ImageGrid& grid) {
    std::string out = "P5\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n255\n";
    out.reserve(out.size() + grid.size());
    for (double v : grid.values()) {
        if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
            throw PgmError(PgmError::Kind::bad_pixel, "PGM pixels must be integers in [0, 255]");
        out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
    return out;
}

ImageGrid load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PgmError(PgmError::Kind::io, "cannot open " + path.string() + " for reading");
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_pgm(bytes, path.string());
}

void save_pgm(const ImageGrid& grid, const std::filesystem::path& path) {
    const std::string bytes = encode_pgm(grid);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PgmError(PgmError::Kind::io, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw PgmError(PgmError::Kind::io, "write failed for " + path.string());
}

}  // namespace stegcnn
