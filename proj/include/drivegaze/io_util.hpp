#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drivegaze::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Splits one CSV line on commas. No quoting: none of the canonical formats need it.
std::vector<std::string_view> split_fields(std::string_view line);

/// Iterates lines of a text buffer, stripping a trailing '\r'.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line);
    std::int64_t line_number() const noexcept { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::int64_t line_no_ = 0;
};

std::optional<std::int64_t> to_int(std::string_view s) noexcept;
std::optional<double> to_double(std::string_view s) noexcept;

}  // namespace drivegaze::io
