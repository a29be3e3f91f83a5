#include "drivegaze/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>

#include "drivegaze/error.hpp"
#include "drivegaze/io_util.hpp"

namespace drivegaze::image_io {
namespace {

/// Reads the whitespace-separated tokens of a netpbm-style header; `pos` ends one
/// byte past the single whitespace that terminates the last token.
class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view token()
    {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
                ++pos_;
            } else {
                break;
            }
        }
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            throw Error(Errc::TruncatedFile, "image header ended early");
        }
        return bytes_.substr(start, pos_ - start);
    }

    int dimension()
    {
        const auto v = io::to_int(token());
        if (!v || *v <= 0 || *v > (1 << 16)) {
            throw Error(Errc::InvalidValue, "bad image dimension");
        }
        return static_cast<int>(*v);
    }

    std::size_t payload_start()
    {
        if (pos_ >= bytes_.size()) {
            throw Error(Errc::TruncatedFile, "image header ended early");
        }
        return pos_ + 1;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void require_payload(std::string_view bytes, std::size_t start, std::size_t size)
{
    if (bytes.size() < start + size) {
        throw Error(Errc::TruncatedFile, "expected " + std::to_string(size) + " payload bytes");
    }
}

}  // namespace

std::string encode_pfm(const SaliencyMap& map)
{
    std::string out = "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
    const std::size_t header = out.size();
    out.resize(header + 4 * map.size());
    char* dst = out.data() + header;
    for (int y = map.height() - 1; y >= 0; --y) {
        for (double v : map.row(y)) {
            auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            if constexpr (std::endian::native == std::endian::big) {
                raw = __builtin_bswap32(raw);
            }
            std::memcpy(dst, &raw, 4);
            dst += 4;
        }
    }
    return out;
}

SaliencyMap decode_pfm(std::string_view bytes)
{
    HeaderReader header(bytes);
    if (header.token() != "Pf") {
        throw Error(Errc::BadMagic, "not a grayscale PFM");
    }
    const int w = header.dimension();
    const int h = header.dimension();
    const auto scale = io::to_double(header.token());
    if (!scale || *scale == 0.0) {
        throw Error(Errc::InvalidValue, "bad PFM scale");
    }
    const bool little = *scale < 0.0;
    const std::size_t start = header.payload_start();
    require_payload(bytes, start, 4 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    SaliencyMap map(w, h);
    const char* src = bytes.data() + start;
    for (int y = h - 1; y >= 0; --y) {
        for (double& v : map.row(y)) {
            std::uint32_t raw = 0;
            std::memcpy(&raw, src, 4);
            src += 4;
            if ((std::endian::native == std::endian::little) != little) {
                raw = __builtin_bswap32(raw);
            }
            v = static_cast<double>(std::bit_cast<float>(raw));
        }
    }
    return map;
}

void write_pfm(const std::filesystem::path& path, const SaliencyMap& map) { io::write_file(path, encode_pfm(map)); }

SaliencyMap read_pfm(const std::filesystem::path& path) { return decode_pfm(io::read_file(path)); }

std::string encode_pgm(const GrayFrame& frame)
{
    std::string out = "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(frame.values().data()), frame.size());
    return out;
}

GrayFrame decode_pgm(std::string_view bytes)
{
    HeaderReader header(bytes);
    if (header.token() != "P5") {
        throw Error(Errc::BadMagic, "not a binary PGM");
    }
    const int w = header.dimension();
    const int h = header.dimension();
    if (header.token() != "255") {
        throw Error(Errc::InvalidValue, "only 8-bit PGM is supported");
    }
    const std::size_t start = header.payload_start();
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    require_payload(bytes, start, n);
    std::vector<std::uint8_t> values(n);
    std::memcpy(values.data(), bytes.data() + start, n);
    return GrayFrame(w, h, std::move(values));
}

GrayFrame to_gray(const SaliencyMap& map)
{
    GrayFrame out(map.width(), map.height());
    const auto src = map.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i] * 255.0), 0L, 255L));
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) { io::write_file(path, encode_pgm(frame)); }

GrayFrame read_pgm(const std::filesystem::path& path) { return decode_pgm(io::read_file(path)); }

std::string encode_pbm(const FixationMap& map)
{
    std::string out = "P4\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n";
    const std::size_t stride = (static_cast<std::size_t>(map.width()) + 7) / 8;
    for (int y = 0; y < map.height(); ++y) {
        std::string row(stride, '\0');
        for (int x = 0; x < map.width(); ++x) {
            if (map.at(x, y) != 0) {
                row[static_cast<std::size_t>(x) / 8] |= static_cast<char>(0x80u >> (x % 8));
            }
        }
        out += row;
    }
    return out;
}

FixationMap decode_pbm(std::string_view bytes)
{
    HeaderReader header(bytes);
    if (header.token() != "P4") {
        throw Error(Errc::BadMagic, "not a packed PBM");
    }
    const int w = header.dimension();
    const int h = header.dimension();
    const std::size_t start = header.payload_start();
    const std::size_t stride = (static_cast<std::size_t>(w) + 7) / 8;
    require_payload(bytes, start, stride * static_cast<std::size_t>(h));
    FixationMap map(w, h);
    for (int y = 0; y < h; ++y) {
        const auto* row = reinterpret_cast<const unsigned char*>(bytes.data() + start + stride * static_cast<std::size_t>(y));
        for (int x = 0; x < w; ++x) {
            map.at(x, y) = (row[x / 8] >> (7 - x % 8)) & 1u;
        }
    }
    return map;
}

void write_pbm(const std::filesystem::path& path, const FixationMap& map) { io::write_file(path, encode_pbm(map)); }

FixationMap read_pbm(const std::filesystem::path& path) { return decode_pbm(io::read_file(path)); }

}  // namespace drivegaze::image_io
