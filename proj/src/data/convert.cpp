#include "gw/data/convert.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gw/data/doc_tree.hpp"

namespace gw::data {

namespace fs = std::filesystem;

std::optional<Format> parse_format(const std::string& s) {
    if (s == "xml") return Format::Xml;
    if (s == "json") return Format::Json;
    return std::nullopt;
}

const char* extension(Format f) { return f == Format::Xml ? "xml" : "json"; }

Format detect_format(const std::string& path, const std::string& content) {
    auto ext = fs::path(path).extension().string();
    if (ext == ".xml") return Format::Xml;
    if (ext == ".json") return Format::Json;
    auto b = content.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (b != std::string::npos && content[b] == '<') return Format::Xml;
    if (b != std::string::npos && content[b] == '{') return Format::Json;
    throw ConversionError("cannot tell whether " + path + " is XML or JSON");
}

std::string convert_file(const std::string& path, Format target) {
    std::ifstream in(path, std::ios::binary);
    if (!in || fs::is_directory(path)) throw std::runtime_error("file not found: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();

    Format source = detect_format(path, content);
    if (source == target) {
        throw UsageError(path + " is already " + extension(target));
    }
    std::string converted = target == Format::Json ? xml_to_json(content) : json_to_xml(content);

    fs::path out_path = fs::path(path).replace_extension(extension(target));
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    out << converted << '\n';
    return out_path.string();
}

int run_convert(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.size() != 2) {
        err << "usage: convert <file> <xml|json>\n";
        return 2;
    }
    auto target = parse_format(args[1]);
    if (!target) {
        err << "usage: convert <file> <xml|json>: unknown target '" << args[1] << "'\n";
        return 2;
    }
    try {
        out << convert_file(args[0], *target) << '\n';
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace gw::data
