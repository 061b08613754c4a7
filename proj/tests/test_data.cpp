#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "gw/data/convert.hpp"
#include "gw/data/doc_tree.hpp"
#include "xml_corpus.hpp"

using namespace gw::data;
namespace fs = std::filesystem;

namespace {

const std::string kDecl = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

struct Row {
    const char* xml;
    const char* json;
};

// The mapping dictionary, one row per case.
const Row kRows[] = {
    {"<e/>", R"({"e": null})"},
    {"<e>text</e>", R"({"e": "text"})"},
    {"<e name=\"value\"/>", R"({"e": {"@name": "value"}})"},
    {"<e name=\"value\">text</e>", R"({"e": {"@name": "value", "#text": "text"}})"},
    {"<e><a>text</a><b>text</b></e>", R"({"e": {"a": "text", "b": "text"}})"},
    {"<e><a>text</a><a>text</a></e>", R"({"e": {"a": ["text", "text"]}})"},
    {"<e>text<a>text</a></e>", R"({"e": {"#text": "text", "a": "text"}})"},
};

std::string nested_xml(std::size_t depth) {
    std::string s;
    for (std::size_t i = 0; i < depth; ++i) s += "<n>";
    for (std::size_t i = 0; i < depth; ++i) s += "</n>";
    return s;
}

std::string nested_json(std::size_t depth) {
    std::string s;
    for (std::size_t i = 0; i < depth; ++i) s += "{\"n\": ";
    s += "null";
    for (std::size_t i = 0; i < depth; ++i) s += "}";
    return s;
}

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / ("gw_convert_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("mapping rows convert exactly in both directions") {
    for (const auto& row : kRows) {
        CAPTURE(row.xml);
        CHECK(xml_to_json(row.xml) == row.json);
        CHECK(json_to_xml(row.json) == kDecl + row.xml);
        CHECK(json_to_xml(row.json, {.declaration = false}) == row.xml);
    }
}

TEST_CASE("alternate prefixes on input") {
    CHECK(json_to_xml(R"({"e": {"-name": "value", "-#text": "text"}})") ==
          json_to_xml(R"({"e": {"@name": "value", "#text": "text"}})"));
    CHECK(json_to_xml(R"({"e": {"-name": "value"}})", {false}) == "<e name=\"value\"/>");
    CHECK_THROWS_AS(json_to_xml(R"({"e": {"-name": "a", "@name": "b"}})"), ParseError);
}

TEST_CASE("xml parsing details") {
    CHECK(xml_to_json("<?xml version=\"1.0\"?>\n<!-- c -->\n<e>\n  <a> x </a>\n</e>\n") ==
          R"({"e": {"a": "x"}})");
    CHECK(xml_to_json("<e a='1' b=\"2\"></e>") == R"({"e": {"@a": "1", "@b": "2"}})");
    CHECK(xml_to_json("<e>a<!-- split -->b</e>") == R"({"e": {"#text": ["a", "b"]}})");
    CHECK(xml_to_json("<e><![CDATA[x<y]]></e>") == R"({"e": "x<y"})");
    CHECK(xml_to_json("<e>say \"hi\"</e>") == R"({"e": "say \"hi\""})");
    CHECK(xml_to_json("<e n=\"1\"><a/><a>t</a></e>") == R"({"e": {"@n": "1", "a": [null, "t"]}})");

    CHECK_THROWS_AS(xml_to_json("<e>&amp;</e>"), EntityUnsupported);
    CHECK_THROWS_AS(xml_to_json("<e a=\"&lt;\"/>"), EntityUnsupported);
    CHECK_THROWS_AS(xml_to_json("<e></f>"), ParseError);
    CHECK_THROWS_AS(xml_to_json("<e>"), ParseError);
    CHECK_THROWS_AS(xml_to_json("<e/><f/>"), ParseError);
    CHECK_THROWS_AS(xml_to_json("<e/>junk"), ParseError);
    CHECK_THROWS_AS(xml_to_json(""), ParseError);
    CHECK_THROWS_AS(xml_to_json("<e a=\"1\" a=\"2\"/>"), ParseError);
    CHECK_THROWS_AS(xml_to_json("<!DOCTYPE e><e/>"), ParseError);
    try {
        xml_to_json("<e>\n  <a></b>\n</e>");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("json input errors") {
    CHECK_THROWS_AS(json_to_xml(R"({"a": 1, "b": 2})"), MultipleRoots);
    CHECK_THROWS_AS(json_to_xml(R"({})"), MultipleRoots);
    CHECK_THROWS_AS(json_to_xml(R"({"e": [1, 2]})"), MultipleRoots);
    CHECK_THROWS_AS(json_to_xml(R"([1])"), ParseError);
    CHECK_THROWS_AS(json_to_xml(R"({"e": )"), ParseError);
    CHECK_THROWS_AS(json_to_xml(R"({"bad name": 1})"), ParseError);
    CHECK_THROWS_AS(json_to_xml(R"({"e": {"a": [[1]]}})"), ParseError);
    CHECK(json_to_xml(R"({"e": {"n": 3, "b": true, "@k": 1.5}})", {false}) ==
          "<e k=\"1.5\"><n>3</n><b>true</b></e>");
    CHECK(json_to_xml(R"({"e": "a<b&c"})", {false}) == "<e>a&lt;b&amp;c</e>");
}

TEST_CASE("depth guard is exact") {
    CHECK(parse_xml(nested_xml(kMaxDepth)).depth() == kMaxDepth);
    CHECK_THROWS_AS(parse_xml(nested_xml(kMaxDepth + 1)), DepthExceeded);
    auto j = xml_to_json(nested_xml(kMaxDepth));
    CHECK(j == nested_json(kMaxDepth));
    CHECK(parse_json(j).depth() == kMaxDepth);
    CHECK_THROWS_AS(parse_json(nested_json(kMaxDepth + 1)), DepthExceeded);
    CHECK_THROWS_AS(xml_to_json("<r>" + nested_xml(kMaxDepth) + "</r>"), DepthExceeded);
    CHECK(json_to_xml(nested_json(kMaxDepth), {false}).size() == 3 * kMaxDepth + 4 * (kMaxDepth - 1) + 1);
    CHECK(same_structure(parse_json(nested_json(kMaxDepth)), parse_xml(nested_xml(kMaxDepth))));
}

TEST_CASE("round trip over a seeded 50-document corpus") {
    std::mt19937_64 rng(1000);
    for (int i = 0; i < 50; ++i) {
        std::string xml = fixtures::random_xml(rng);
        CAPTURE(xml);
        DocTree original = parse_xml(xml);
        std::string json = print_json(original);
        DocTree back = parse_json(json);
        CHECK(same_structure(original, back));
        // JSON -> XML -> JSON is a fixed point.
        CHECK(xml_to_json(json_to_xml(json)) == json);
        // Determinism.
        CHECK(xml_to_json(xml) == json);
    }
}

TEST_CASE("structural equality") {
    CHECK(same_structure(parse_xml("<e a=\"1\"><b/>t</e>"), parse_xml("<e a=\"1\"> <b></b> t </e>")));
    CHECK_FALSE(same_structure(parse_xml("<e a=\"1\" b=\"2\"/>"), parse_xml("<e b=\"2\" a=\"1\"/>")));
    CHECK_FALSE(same_structure(parse_xml("<e><b/>t</e>"), parse_xml("<e>t<b/></e>")));
}

TEST_CASE("convert command") {
    auto dir = temp_dir();
    auto xml = dir / "doc.xml";
    std::ofstream(xml) << "<e name=\"value\">text</e>\n";

    std::ostringstream out, err;
    CHECK(run_convert({xml.string(), "json"}, out, err) == 0);
    auto json_path = dir / "doc.json";
    CHECK(out.str() == json_path.string() + "\n");
    CHECK(read_file(json_path) == "{\"e\": {\"@name\": \"value\", \"#text\": \"text\"}}\n");

    std::ostringstream out2, err2;
    fs::remove(xml);
    CHECK(run_convert({json_path.string(), "xml"}, out2, err2) == 0);
    CHECK(read_file(xml) == kDecl + "<e name=\"value\">text</e>\n");

    std::ostringstream o, e;
    CHECK(run_convert({json_path.string(), "json"}, o, e) == 2);
    CHECK(run_convert({(dir / "missing.xml").string(), "json"}, o, e) == 1);
    CHECK(e.str().find("file not found") != std::string::npos);
    CHECK(run_convert({xml.string()}, o, e) == 2);
    CHECK(run_convert({xml.string(), "yaml"}, o, e) == 2);

    auto bad = dir / "bad.xml";
    std::ofstream(bad) << "<e>&amp;</e>";
    CHECK(run_convert({bad.string(), "json"}, o, e) == 1);

    auto sniff = dir / "noext";
    std::ofstream(sniff) << "  {\"e\": null}";
    CHECK(run_convert({sniff.string(), "xml"}, o, e) == 0);
    CHECK(read_file(dir / "noext.xml") == kDecl + "<e/>\n");
    fs::remove_all(dir);
}
