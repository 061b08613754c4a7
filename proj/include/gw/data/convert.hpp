#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gw::data {

enum class Format { Xml, Json };

std::optional<Format> parse_format(const std::string& s);
const char* extension(Format f);

/// Extension first (.xml / .json), then the first non-blank character.
Format detect_format(const std::string& path, const std::string& content);

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Converts `path` to `<basename>.<target>` next to it and returns the
/// output path. Throws UsageError when the target equals the source format,
/// ConversionError for bad documents and std::runtime_error for I/O.
std::string convert_file(const std::string& path, Format target);

/// `convert <file> <xml|json>`: 0 on success (output path printed), 1 on
/// conversion or I/O errors, 2 on usage errors.
int run_convert(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gw::data
