#ifndef RIDESPLIT_IO_UTIL_HPP
#define RIDESPLIT_IO_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ridesplit {

/// Split one delimited line. No quoting: the input tables carry opaque ids
/// and numbers only.
std::vector<std::string_view> split_fields(std::string_view line, char delim);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Doubles serialize with 9 significant digits everywhere so repeated runs
/// are byte-comparable.
std::string format_g9(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// FNV-1a over file bytes, hex-encoded; recorded in run manifests.
std::string file_digest(const std::filesystem::path& path);

class CsvWriter {
public:
    explicit CsvWriter(char delim = ',') : delim_(delim) {}

    void header(const std::vector<std::string>& names);
    CsvWriter& field(std::string_view s);
    CsvWriter& field(double v);
    CsvWriter& field(std::int64_t v);
    CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
    void end_row();

    const std::string& str() const { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::string buf_;
    char delim_;
    bool row_open_ = false;
};

}  // namespace ridesplit

#endif
