#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fes::io {

/// Shortest round-trip decimal form; locale independent. NaN -> "nan", inf -> "inf"/"-inf".
[[nodiscard]] std::string format_double(double v);

/// Minimal CSV emitter: comma separated, '\n' line endings, no quoting needed
/// for the numeric and identifier fields we write.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& names);
    CsvWriter& field(double v);
    CsvWriter& field(long v);
    CsvWriter& field(int v) { return field(static_cast<long>(v)); }
    CsvWriter& field(std::string_view s);
    CsvWriter& empty();
    void end_row();

private:
    void sep();

    std::ostream& out_;
    bool first_ = true;
};

/// Writes the file in one go (temporary + rename) so failures leave no partial output.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fes::io
