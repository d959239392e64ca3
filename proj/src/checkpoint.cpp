#include "stegcnn/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stegcnn {

namespace {

constexpr const char* magic = "stegcnn-checkpoint 1";

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

std::string exact(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void put_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
    }
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

[[noreturn]] void bad(const std::string& what) { throw std::runtime_error("malformed checkpoint: " + what); }

}  // namespace

std::optional<std::string> Checkpoint::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return std::nullopt;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const NetworkSpec& spec = ckpt.spec();
    std::ostringstream head;
    head << magic << '\n' << "input_size " << spec.input_size << '\n';
    for (const auto& l : spec.conv_layers)
        head << "layer " << l.kernel_count << ' ' << l.kernel_size << ' ' << l.geom.stride << ' ' << l.geom.padding << ' '
             << to_string(l.act) << ' ' << to_string(l.pool.mode) << ' ' << l.pool.region << ' ' << l.pool.stride << '\n';
    head << "epoch " << ckpt.epoch << '\n'
         << "norm_mean " << exact(ckpt.stats.mean) << '\n'
         << "norm_std " << exact(ckpt.stats.std) << '\n';
    for (const auto& [k, v] : ckpt.metadata) {
        if (k.empty() || k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
            throw std::invalid_argument("checkpoint metadata must be single-line with a space-free key");
        head << "meta " << k << ' ' << v << '\n';
    }
    head << "params " << ckpt.params.size() << '\n' << "end\n";
    std::string out = head.str();
    out.reserve(out.size() + 8 * ckpt.params.size());
    for (double v : ckpt.params.values()) put_le(out, v);
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string::npos) bad("header not terminated by 'end'");
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    if (next_line() != magic) bad("wrong magic line");

    NetworkSpec spec;
    Checkpoint ckpt;
    std::optional<std::size_t> count;
    for (std::string line = next_line(); line != "end"; line = next_line()) {
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "input_size") {
            in >> spec.input_size;
        } else if (key == "layer") {
            ConvLayerSpec l;
            std::string act, mode;
            in >> l.kernel_count >> l.kernel_size >> l.geom.stride >> l.geom.padding >> act >> mode >> l.pool.region >>
                l.pool.stride;
            if (in) {
                l.act = parse_activation(act);
                l.pool.mode = parse_pool_mode(mode);
            }
            spec.conv_layers.push_back(l);
        } else if (key == "epoch") {
            in >> ckpt.epoch;
        } else if (key == "norm_mean") {
            in >> ckpt.stats.mean;
        } else if (key == "norm_std") {
            in >> ckpt.stats.std;
        } else if (key == "meta") {
            std::string k;
            in >> k;
            std::string v;
            if (in.peek() == ' ') in.get();
            std::getline(in, v);
            ckpt.metadata.emplace_back(k, v);
            continue;
        } else if (key == "params") {
            std::size_t n = 0;
            in >> n;
            count = n;
        } else {
            bad("unknown header key '" + key + "'");
        }
        if (in.fail()) bad("cannot parse line '" + line + "'");
    }
    if (!count) bad("missing params line");

    ckpt.params = ParameterStore(spec);
    if (ckpt.params.size() != *count)
        bad("parameter count " + std::to_string(*count) + " does not match the network (" +
            std::to_string(ckpt.params.size()) + ")");
    if (bytes.size() - pos != 8 * *count) bad("payload holds " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                                              std::to_string(8 * *count));
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (double& v : ckpt.params.values()) {
        v = get_le(p);
        p += 8;
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = encode_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return decode_checkpoint(bytes);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace stegcnn
